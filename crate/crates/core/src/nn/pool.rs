//! Column-wise max pooling over rows.

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Column maxima and, per column, the lowest row index attaining it.
pub fn max_pool_over_rows(x: &Matrix) -> Result<(Vec<f64>, Vec<usize>)> {
    if x.rows() == 0 {
        return Err(Error::domain("max pool over an empty matrix"));
    }
    let mut best = x.row(0).to_vec();
    let mut arg = vec![0usize; x.cols()];
    for r in 1..x.rows() {
        for (c, &v) in x.row(r).iter().enumerate() {
            if v > best[c] {
                best[c] = v;
                arg[c] = r;
            }
        }
    }
    Ok((best, arg))
}

/// Routes a pooled gradient back to the argmax rows.
pub fn max_pool_backward(dz: &[f64], argmax: &[usize], rows: usize) -> Matrix {
    let mut dx = Matrix::zeros(rows, dz.len());
    for (c, (&g, &r)) in dz.iter().zip(argmax).enumerate() {
        dx.set(r, c, dx.get(r, c) + g);
    }
    dx
}
