use std::f64::consts::PI;

use super::cst::CstSection;
use super::planform::{build_planform, PlanformParams};
use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Sampled surface: points with outward unit normals and lumped panel areas.
///
/// `faces` keeps the polygon connectivity the areas were lumped from; it may
/// be empty for clouds that arrive without connectivity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfaceCloud {
    pub geometry_id: String,
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub areas: Vec<f64>,
    pub faces: Vec<Vec<u32>>,
}

impl SurfaceCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.geometry_id = id.into();
        self
    }

    /// Builds a cloud from polygon connectivity.
    ///
    /// Each polygon's vector area comes from Newell's formula. A vertex
    /// receives `1/k` of the scalar area of every adjacent k-gon, and its
    /// normal is the normalized sum of adjacent vector areas. Vertices that
    /// no polygon references get zero area and a +z normal.
    pub fn from_faces(points: Vec<Vec3>, faces: Vec<Vec<u32>>) -> Result<Self> {
        let n = points.len();
        let mut normal_acc = vec![[0.0; 3]; n];
        let mut areas = vec![0.0; n];
        for (fi, face) in faces.iter().enumerate() {
            if face.len() < 3 {
                return Err(Error::format(format!("polygon {fi} has fewer than 3 vertices")));
            }
            if let Some(&bad) = face.iter().find(|&&i| i as usize >= n) {
                return Err(Error::format(format!(
                    "polygon {fi} references point {bad} but only {n} points exist"
                )));
            }
            let va = polygon_vector_area(&points, face);
            let a = norm(va);
            let share = a / face.len() as f64;
            for &i in face {
                let i = i as usize;
                areas[i] += share;
                for c in 0..3 {
                    normal_acc[i][c] += va[c];
                }
            }
        }
        let normals = normal_acc
            .into_iter()
            .map(|v| {
                let m = norm(v);
                if m > 0.0 {
                    [v[0] / m, v[1] / m, v[2] / m]
                } else {
                    [0.0, 0.0, 1.0]
                }
            })
            .collect();
        Ok(Self {
            geometry_id: String::new(),
            points,
            normals,
            areas,
            faces,
        })
    }

    /// Checks unit normals, non-negative areas and positive total area.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.points.len();
        if self.normals.len() != n || self.areas.len() != n {
            return Err(Error::shape(format!(
                "cloud has {n} points, {} normals, {} areas",
                self.normals.len(),
                self.areas.len()
            )));
        }
        for (i, nrm) in self.normals.iter().enumerate() {
            if (norm(*nrm) - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!("normal {i} is not unit length")));
            }
        }
        if self.areas.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::domain("negative or non-finite panel area"));
        }
        if !(self.total_area() > 0.0) {
            return Err(Error::domain("total area is not positive"));
        }
        Ok(())
    }

    /// Reorders points (with their normals and areas) so that new index `i`
    /// holds old point `perm[i]`. Connectivity is remapped.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut inverse = vec![0u32; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new as u32;
        }
        Self {
            geometry_id: self.geometry_id.clone(),
            points: perm.iter().map(|&i| self.points[i]).collect(),
            normals: perm.iter().map(|&i| self.normals[i]).collect(),
            areas: perm.iter().map(|&i| self.areas[i]).collect(),
            faces: self
                .faces
                .iter()
                .map(|f| f.iter().map(|&i| inverse[i as usize]).collect())
                .collect(),
        }
    }
}

pub(crate) fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn polygon_vector_area(points: &[Vec3], face: &[u32]) -> Vec3 {
    let mut acc = [0.0; 3];
    for k in 0..face.len() {
        let a = points[face[k] as usize];
        let b = points[face[(k + 1) % face.len()] as usize];
        let c = cross(a, b);
        for d in 0..3 {
            acc[d] += c[d];
        }
    }
    [0.5 * acc[0], 0.5 * acc[1], 0.5 * acc[2]]
}

/// Cosine-spaced chord fractions from 0 (leading edge) to 1 (trailing edge).
fn cosine_spacing(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if j == 0 {
                0.0
            } else if j == n - 1 {
                1.0
            } else {
                0.5 * (1.0 - (PI * j as f64 / (n - 1) as f64).cos())
            }
        })
        .collect()
}

/// Samples the lofted surface of a planform.
///
/// Each spanwise row is a closed section loop running from the trailing
/// edge along the lower surface to the leading edge and back along the
/// upper surface; the trailing- and leading-edge points are shared, so a
/// row has `2 (n_chord - 1)` points. Every planform segment gets `n_span`
/// rows including its end stations. The tip is closed with a flat cap.
/// With `mirror`, the left half is the exact y-reflection of the right half
/// and the centerline row appears once, which makes the surface watertight.
pub fn sample_surface(
    params: &PlanformParams,
    section: &CstSection,
    n_chord: usize,
    n_span: usize,
    mirror: bool,
) -> Result<SurfaceCloud> {
    if n_chord < 4 || n_span < 4 {
        return Err(Error::domain(format!(
            "need n_chord >= 4 and n_span >= 4, got {n_chord} and {n_span}"
        )));
    }
    let planform = build_planform(params, false)?;
    if let Some(s) = planform.stations.iter().find(|s| !(s.chord > 0.0)) {
        return Err(Error::domain(format!("degenerate station at y={} (chord {})", s.y, s.chord)));
    }

    let psi = cosine_spacing(n_chord);
    // Section loop in chord-normalized (psi, z/c) coordinates.
    let mut loop_xz: Vec<(f64, f64)> = Vec::with_capacity(2 * (n_chord - 1));
    for j in (0..n_chord).rev() {
        loop_xz.push((psi[j], -section.lower(psi[j])?));
    }
    for &p in &psi[1..n_chord - 1] {
        loop_xz.push((p, section.upper(p)?));
    }
    let loop_len = loop_xz.len();

    // Spanwise rows on the right half: n_span per segment, shared ends.
    let mut half_rows: Vec<f64> = vec![0.0];
    for w in planform.stations.windows(2) {
        for i in 1..n_span {
            let t = i as f64 / (n_span - 1) as f64;
            half_rows.push(if i == n_span - 1 { w[1].y } else { w[0].y + t * (w[1].y - w[0].y) });
        }
    }
    let rows: Vec<f64> = if mirror {
        half_rows[1..]
            .iter()
            .rev()
            .map(|y| -y)
            .chain(half_rows.iter().copied())
            .collect()
    } else {
        half_rows
    };

    let mut points = Vec::with_capacity(rows.len() * loop_len);
    for &y in &rows {
        let (le_x, chord) = planform.section_at(y.abs());
        for &(p, zc) in &loop_xz {
            points.push([le_x + p * chord, y, zc * chord]);
        }
    }

    let idx = |r: usize, k: usize| (r * loop_len + k % loop_len) as u32;
    let mut faces = Vec::with_capacity((rows.len() - 1) * loop_len + 2 * n_chord);
    for r in 0..rows.len() - 1 {
        for k in 0..loop_len {
            // Loop direction x span direction points outward.
            faces.push(vec![idx(r, k), idx(r, k + 1), idx(r + 1, k + 1), idx(r + 1, k)]);
        }
    }
    let last = rows.len() - 1;
    let le = n_chord - 1;
    let lower = |j: usize| le - j;
    let upper = |j: usize| le + j;
    let mut cap = |r: usize, outward_positive: bool| {
        for j in 0..n_chord - 1 {
            let mut f = vec![idx(r, lower(j)), idx(r, lower(j + 1)), idx(r, upper(j + 1)), idx(r, upper(j))];
            f.dedup();
            if f.first() == f.last() {
                f.pop();
            }
            if !outward_positive {
                f.reverse();
            }
            faces.push(f);
        }
    };
    cap(last, true);
    if mirror {
        cap(0, false);
    }

    SurfaceCloud::from_faces(points, faces)
}
