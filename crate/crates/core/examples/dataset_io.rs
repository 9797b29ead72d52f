//! Write a case in the native container and as legacy VTK, then read both back.

use bwb_surrogate::dataset::{read_native, read_vtk_surface, write_native, write_vtk_surface, VtkArrayNames, VtkOptions};
use bwb_surrogate::pipeline::{Corpus, CorpusConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::synthetic(&CorpusConfig {
        n_geometries: 2,
        n_holdout: 0,
        conditions_per_geometry: 2,
        ..Default::default()
    })?;
    let dir = std::env::temp_dir().join("bwb_dataset_io");
    std::fs::create_dir_all(&dir)?;

    let record = corpus.record(&corpus.cases[0]);
    let native = dir.join(format!("{}.bwbc", record.case_id));
    write_native(&record, &native)?;
    let back = read_native(&native)?;
    println!("{} -> {} bytes, identical: {}", record.case_id, std::fs::metadata(&native)?.len(), back == record);

    let vtk = dir.join(format!("{}.vtk", record.case_id));
    let fields = record.require_fields()?;
    write_vtk_surface(&vtk, &record.cloud, fields, &VtkArrayNames::default(), &[])?;
    let (cloud, vf) = read_vtk_surface(&vtk, &VtkOptions::default())?;
    println!("vtk: {} points, fields identical: {}", cloud.len(), &vf == fields);

    corpus.write_dir(dir.join("corpus"), "example")?;
    let (again, hash) = Corpus::read_dir(dir.join("corpus"))?;
    println!("corpus dir: {} cases, hash {hash:?}", again.cases.len());

    let mut bytes = std::fs::read(&native)?;
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&native, &bytes)?;
    println!("corrupted file: {}", read_native(&native).unwrap_err());
    Ok(())
}
