//! Latin hypercube designs over the planform bounds and geometry-disjoint splits.

use bwb_surrogate::dataset::{lhs_sample, split_by_geometry, SplitEntry};
use bwb_surrogate::geometry::PARAM_BOUNDS;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let design = lhs_sample(10, &PARAM_BOUNDS, 42)?;
    for row in &design {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:8.4}")).collect();
        println!("{}", cells.join(" "));
    }

    let entries: Vec<SplitEntry> = (0..12)
        .flat_map(|g| {
            (0..3).map(move |c| SplitEntry {
                case_id: format!("g{g:04}_c{c}"),
                geometry_id: format!("g{g:04}"),
                holdout: g >= 10,
            })
        })
        .collect();
    let split = split_by_geometry(&entries, 0.9, 0)?;
    println!("train {} val {} test {}", split.train.len(), split.val.len(), split.test.len());
    println!("val: {:?}", split.val);
    Ok(())
}
