//! Case records, file formats, sampling, splitting and the synthetic field
//! oracle.

mod container;
mod fields;
mod lhs;
mod manifest;
mod native;
mod oracle;
mod split;
mod vtk;

pub(crate) use container::Container;
pub use fields::{CaseRecord, FieldQuad};
pub use lhs::lhs_sample;
pub use manifest::{
    format_manifest, parse_manifest, read_manifest, write_manifest, Manifest, ManifestEntry,
};
pub use native::{decode_case, encode_case, read_native, write_native, CASE_EXTENSION, CASE_VERSION};
pub use oracle::{synthetic_field_oracle, synthetic_field_oracle_with, OracleConstants};
pub use split::{split_by_geometry, DatasetSplit, SplitEntry};
pub use vtk::{
    format_vtk_surface, parse_vtk_surface, read_vtk_surface, write_vtk_surface, VtkArrayNames,
    VtkOptions,
};
