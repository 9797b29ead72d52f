//! Parametric blended-wing-body surfaces.
//!
//! A planform is four spanwise stations (centerline, two kinks, tip) set by
//! nine design ratios and sweeps. A constant CST section is lofted linearly
//! between stations and sampled into a [`SurfaceCloud`].

mod config;
mod cst;
mod planform;
mod surface;

pub use config::{parse_geometry_config, write_geometry_config};
pub use cst::{cst_thickness, CstSection, CST_COEFFS};
pub use planform::{build_planform, Planform, PlanformParams, Station, PARAM_BOUNDS, PARAM_NAMES};
pub use surface::{sample_surface, SurfaceCloud, Vec3};
pub(crate) use surface::norm;
