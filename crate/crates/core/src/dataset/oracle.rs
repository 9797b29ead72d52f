//! Analytic pseudo-physics used in place of CFD solutions.
//!
//! With `xi` the local chord fraction, `c` the local chord and `alpha` in
//! radians:
//!
//! ```text
//! theta = twist_deg * c / c1
//! Cp    = -a0 * 4 xi (1 - xi) * sin(alpha + theta) * sgn(n_z) * (1 + a1 M^2) + a2 n_z
//! Cfx   = b0 * Re^(-1/5) * (xi + b1)^(-1/5)
//! Cfy   = b2 * Cfx * n_y
//! Cfz   = b2 * Cfx * n_z
//! ```
//!
//! `sgn(0) = 0`. `xi` is clamped to `[0, 1]`, which also clips `Cfx` at the
//! leading edge. The leading minus on `Cp` gives suction on the upper surface
//! at positive incidence, so lift grows with `alpha`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fields::FieldQuad;
use crate::aero::{reynolds_number, FlightCondition};
use crate::error::Result;
use crate::geometry::{build_planform, PlanformParams, SurfaceCloud};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConstants {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    /// Incidence offset at the centerline chord, degrees.
    pub twist_deg: f64,
    /// Amplitude of seeded uniform noise added to `Cp`.
    pub noise: f64,
}

impl Default for OracleConstants {
    fn default() -> Self {
        Self {
            a0: 1.2,
            a1: 0.5,
            a2: 0.05,
            b0: 0.06,
            b1: 0.05,
            b2: 0.3,
            twist_deg: 2.0,
            noise: 0.0,
        }
    }
}

fn sgn0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn synthetic_field_oracle(
    cloud: &SurfaceCloud,
    flight: &FlightCondition,
    params: &PlanformParams,
    seed: u64,
) -> Result<FieldQuad> {
    synthetic_field_oracle_with(cloud, flight, params, seed, &OracleConstants::default())
}

pub fn synthetic_field_oracle_with(
    cloud: &SurfaceCloud,
    flight: &FlightCondition,
    params: &PlanformParams,
    seed: u64,
    k: &OracleConstants,
) -> Result<FieldQuad> {
    let planform = build_planform(params, false)?;
    let re = reynolds_number(flight)?.max(1.0);
    let re_term = k.b0 * re.powf(-0.2);
    let mach_term = 1.0 + k.a1 * flight.mach * flight.mach;
    let alpha = flight.alpha.to_radians();
    let mut rng = (k.noise != 0.0).then(|| ChaCha8Rng::seed_from_u64(seed));

    let n = cloud.len();
    let mut f = FieldQuad::zeros(n);
    for i in 0..n {
        let [x, y, _] = cloud.points[i];
        let [_, ny, nz] = cloud.normals[i];
        let (le_x, chord) = planform.section_at(y.abs());
        let xi = ((x - le_x) / chord).clamp(0.0, 1.0);
        let theta = (k.twist_deg * chord / params.c1).to_radians();
        let mut cp = -k.a0 * 4.0 * xi * (1.0 - xi) * (alpha + theta).sin() * sgn0(nz) * mach_term
            + k.a2 * nz;
        if let Some(rng) = rng.as_mut() {
            cp += k.noise * (2.0 * rng.random::<f64>() - 1.0);
        }
        let cfx = re_term * (xi + k.b1).powf(-0.2);
        f.cp[i] = cp;
        f.cfx[i] = cfx;
        f.cfy[i] = k.b2 * cfx * ny;
        f.cfz[i] = k.b2 * cfx * nz;
    }
    Ok(f)
}
