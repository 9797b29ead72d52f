use rayon::prelude::*;

use super::frames::{body_frame_coefficients, wind_frame};
use crate::dataset::FieldQuad;
use crate::error::{Error, Result};
use crate::geometry::{SurfaceCloud, Vec3};

/// Point count above which partial sums switch to compensated summation.
pub const COMPENSATED_THRESHOLD: usize = 100_000;
const CHUNK: usize = 8192;

/// Integrated lift, drag and pitching moment with their reference values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedCoefficients {
    pub cl: f64,
    pub cd: f64,
    pub cmy: f64,
    pub a_ref: f64,
    pub c_ref: f64,
}

/// Reference area, chord and moment point. Defaults: unit area and chord,
/// moments about the nose at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub a_ref: f64,
    pub c_ref: f64,
    pub point: Vec3,
}

impl Default for Reference {
    fn default() -> Self {
        Self {
            a_ref: 1.0,
            c_ref: 1.0,
            point: [0.0; 3],
        }
    }
}

/// Running sum that is plain or Neumaier-compensated.
#[derive(Clone, Copy, Default)]
struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    #[inline]
    fn add(&mut self, x: f64, compensated: bool) {
        if compensated {
            let t = self.sum + x;
            if self.sum.abs() >= x.abs() {
                self.comp += (self.sum - t) + x;
            } else {
                self.comp += (x - t) + self.sum;
            }
            self.sum = t;
        } else {
            self.sum += x;
        }
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `K` per-point terms in fixed-size chunks (in parallel) and combines
/// chunk partials in index order, so the result does not depend on the
/// number of worker threads.
fn reduce<const K: usize, F>(n: usize, term: F) -> Result<[f64; K]>
where
    F: Fn(usize) -> Result<[f64; K]> + Sync,
{
    let compensated = n > COMPENSATED_THRESHOLD;
    let chunks: Vec<usize> = (0..n.div_ceil(CHUNK)).collect();
    let partials: Vec<[f64; K]> = chunks
        .par_iter()
        .map(|&c| {
            let mut acc = [Acc::default(); K];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let t = term(i)?;
                for k in 0..K {
                    acc[k].add(t[k], compensated);
                }
            }
            Ok(acc.map(|a| a.value()))
        })
        .collect::<Result<_>>()?;
    let mut total = [Acc::default(); K];
    for p in partials {
        for k in 0..K {
            total[k].add(p[k], compensated);
        }
    }
    Ok(total.map(|a| a.value()))
}

fn check_aligned(cloud: &SurfaceCloud, fields: &FieldQuad) -> Result<()> {
    let n = cloud.len();
    if cloud.normals.len() != n || cloud.areas.len() != n || fields.len() != n {
        return Err(Error::shape(format!(
            "cloud has {n} points ({} normals, {} areas) but fields have {} values",
            cloud.normals.len(),
            cloud.areas.len(),
            fields.len()
        )));
    }
    fields.check_lengths()
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

fn point_body(cloud: &SurfaceCloud, fields: &FieldQuad, i: usize) -> Result<Vec3> {
    body_frame_coefficients(
        fields.cp[i],
        [fields.cfx[i], fields.cfy[i], fields.cfz[i]],
        cloud.normals[i],
    )
}

/// Lift and drag coefficients, `(cl, cd)`, summed over panels:
/// `C_L = sum(cl_i A_i) / A_ref`, `C_D = sum(cd_i A_i) / A_ref`.
pub fn integrate_forces(
    cloud: &SurfaceCloud,
    fields: &FieldQuad,
    alpha_deg: f64,
    a_ref: f64,
) -> Result<(f64, f64)> {
    check_aligned(cloud, fields)?;
    positive("a_ref", a_ref)?;
    if !alpha_deg.is_finite() {
        return Err(Error::domain("angle of attack is not finite"));
    }
    let [lift, drag] = reduce(cloud.len(), |i| {
        let c = point_body(cloud, fields, i)?;
        let (cd, cl) = wind_frame(c[0], c[2], alpha_deg);
        let a = cloud.areas[i];
        Ok([cl * a, cd * a])
    })?;
    Ok((lift / a_ref, drag / a_ref))
}

/// Pitching moment about `ref_point`:
/// `C_My = sum(Cx_i A_i dz_i - Cz_i A_i dx_i) / (A_ref c_ref)`.
pub fn integrate_moment(
    cloud: &SurfaceCloud,
    fields: &FieldQuad,
    ref_point: Vec3,
    a_ref: f64,
    c_ref: f64,
) -> Result<f64> {
    check_aligned(cloud, fields)?;
    positive("a_ref", a_ref)?;
    positive("c_ref", c_ref)?;
    let [m] = reduce(cloud.len(), |i| {
        let c = point_body(cloud, fields, i)?;
        let p = cloud.points[i];
        let a = cloud.areas[i];
        let dx = p[0] - ref_point[0];
        let dz = p[2] - ref_point[2];
        Ok([c[0] * a * dz - c[2] * a * dx])
    })?;
    Ok(m / (a_ref * c_ref))
}

pub fn integrate(
    cloud: &SurfaceCloud,
    fields: &FieldQuad,
    alpha_deg: f64,
    reference: &Reference,
) -> Result<IntegratedCoefficients> {
    let (cl, cd) = integrate_forces(cloud, fields, alpha_deg, reference.a_ref)?;
    let cmy = integrate_moment(cloud, fields, reference.point, reference.a_ref, reference.c_ref)?;
    Ok(IntegratedCoefficients {
        cl,
        cd,
        cmy,
        a_ref: reference.a_ref,
        c_ref: reference.c_ref,
    })
}
