//! Class-shape transformation of a fixed airfoil section.

use crate::error::{Error, Result};

/// Number of Bernstein coefficients per surface (degree 4).
pub const CST_COEFFS: usize = 5;

const BINOMIAL_4: [f64; CST_COEFFS] = [1.0, 4.0, 6.0, 4.0, 1.0];

/// Airfoil section described by upper and lower CST shape coefficients.
///
/// Thickness is measured as a fraction of the local chord. Both surfaces
/// close to zero thickness at the leading and trailing edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CstSection {
    pub upper_coeffs: [f64; CST_COEFFS],
    pub lower_coeffs: [f64; CST_COEFFS],
    pub class_n1: f64,
    pub class_n2: f64,
}

impl Default for CstSection {
    fn default() -> Self {
        Self {
            upper_coeffs: [0.15; CST_COEFFS],
            lower_coeffs: [0.10; CST_COEFFS],
            class_n1: 0.5,
            class_n2: 1.0,
        }
    }
}

impl CstSection {
    /// Upper surface height above the chord line at chord fraction `psi`.
    pub fn upper(&self, psi: f64) -> Result<f64> {
        cst_thickness(psi, &self.upper_coeffs, self.class_n1, self.class_n2)
    }

    /// Lower surface depth below the chord line at chord fraction `psi`
    /// (returned as a non-negative magnitude for non-negative coefficients).
    pub fn lower(&self, psi: f64) -> Result<f64> {
        cst_thickness(psi, &self.lower_coeffs, self.class_n1, self.class_n2)
    }
}

/// Class function times degree-4 Bernstein shape function.
///
/// `C(psi) = psi^n1 (1 - psi)^n2`, `S(psi) = sum_i A_i binom(4, i) psi^i (1 - psi)^(4 - i)`.
pub fn cst_thickness(psi: f64, coeffs: &[f64; CST_COEFFS], n1: f64, n2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::domain(format!(
            "chord fraction {psi} outside [0, 1]"
        )));
    }
    let q = 1.0 - psi;
    let class = psi.powf(n1) * q.powf(n2);
    let shape: f64 = coeffs
        .iter()
        .zip(BINOMIAL_4.iter())
        .enumerate()
        .map(|(i, (a, b))| a * b * psi.powi(i as i32) * q.powi((4 - i) as i32))
        .sum();
    Ok(class * shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_at_both_ends() {
        let c = [0.3, -0.1, 0.7, 0.2, 0.9];
        assert_eq!(cst_thickness(0.0, &c, 0.5, 1.0).unwrap(), 0.0);
        assert_eq!(cst_thickness(1.0, &c, 0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn unit_coefficients_reduce_to_class_function() {
        let t = cst_thickness(0.5, &[1.0; 5], 0.5, 1.0).unwrap();
        assert!((t - 0.5f64.sqrt() * 0.5).abs() < 1e-15);
        assert!((t - 0.3535534).abs() < 1e-7);
    }

    #[test]
    fn rejects_out_of_range_psi() {
        assert!(matches!(
            cst_thickness(1.0001, &[1.0; 5], 0.5, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(cst_thickness(-1e-9, &[1.0; 5], 0.5, 1.0).is_err());
        assert!(cst_thickness(f64::NAN, &[1.0; 5], 0.5, 1.0).is_err());
    }

    #[test]
    fn nonnegative_for_nonnegative_coefficients() {
        let s = CstSection::default();
        for i in 0..=200 {
            let psi = i as f64 / 200.0;
            assert!(s.upper(psi).unwrap() >= 0.0);
            assert!(s.lower(psi).unwrap() >= 0.0);
        }
    }
}
