//! Latin hypercube sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Draws `n` points in the box `bounds`, one per equal-width bin in every
/// dimension. Rows are samples, columns follow `bounds`.
pub fn lhs_sample(n: usize, bounds: &[(f64, f64)], seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::domain("lhs_sample needs n >= 1"));
    }
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain(format!("dimension {d}: invalid bounds ({lo}, {hi})")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; bounds.len()]; n];
    let mut bins: Vec<usize> = (0..n).collect();
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        bins.shuffle(&mut rng);
        let width = (hi - lo) / n as f64;
        for (row, &bin) in out.iter_mut().zip(&bins) {
            let u: f64 = rng.random();
            // Keep clear of bin edges so rounding cannot move a sample across.
            let u = 1e-9 + u * (1.0 - 2e-9);
            let v = lo + (bin as f64 + u) * width;
            row[d] = v.clamp(lo, hi);
        }
    }
    Ok(out)
}
