//! Geometry-disjoint train/validation/test splits.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Case identity as seen by the splitter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitEntry {
    pub case_id: String,
    pub geometry_id: String,
    pub holdout: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Assigns whole geometries to train or validation. Geometries tagged
/// `holdout` go to test. About `ratio` of the remaining geometries land in
/// train, with at least one geometry on each side.
pub fn split_by_geometry(entries: &[SplitEntry], ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::domain(format!("split ratio {ratio} outside (0, 1)")));
    }
    let pool: BTreeSet<&str> = entries
        .iter()
        .filter(|e| !e.holdout)
        .map(|e| e.geometry_id.as_str())
        .collect();
    if pool.len() < 2 {
        return Err(Error::domain(format!(
            "need at least 2 non-held-out geometries, found {}",
            pool.len()
        )));
    }
    let mut order: Vec<&str> = pool.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((order.len() as f64 * (1.0 - ratio)).round() as usize).clamp(1, order.len() - 1);
    let val: BTreeSet<&str> = order[..n_val].iter().copied().collect();

    let mut split = DatasetSplit::default();
    for e in entries {
        let bucket = if e.holdout {
            &mut split.test
        } else if val.contains(e.geometry_id.as_str()) {
            &mut split.val
        } else {
            &mut split.train
        };
        bucket.push(e.case_id.clone());
    }
    Ok(split)
}
