//! FiLM-conditioned field network. A trunk maps a surface point and its
//! normal to `(Cp, Cfx, Cfz)`; a hypernetwork maps the conditioning vector
//! to a scale and shift for each modulated trunk layer:
//!
//! ```text
//! z_l = W_l h_l + b_l,   h_{l+1} = relu(γ_l ⊙ z_l + β_l),   [δγ, β] = hyper(p ‖ μ),   γ = 1 + δγ
//! ```
//!
//! The final hypernet layer starts at zero, so an untrained model ignores
//! its conditioning.

use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aero::{integrate, FlightCondition, IntegratedCoefficients, Reference, FLIGHT_BOUNDS};
use crate::dataset::FieldQuad;
use crate::error::{Error, Result};
use crate::geometry::{PlanformParams, SurfaceCloud, Vec3, PARAM_BOUNDS};
use crate::nn::{
    adam_step, Activation, Dense, EpochRecord, Matrix, Mlp, MlpGrad, MlpTrace, ModelState, OptimizerState,
    TrainingLog,
};
use crate::pointnet::{predict_params_ensembled, PointNetModel};

pub const TRUNK_INPUT: usize = 6;
pub const COND_WIDTH: usize = 13;
pub const CHANNELS: [&str; 3] = ["cp", "cfx", "cfz"];

/// `γ ⊙ h + β`.
pub fn film_modulate(h: &[f64], gamma: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    if gamma.len() != h.len() || beta.len() != h.len() {
        return Err(Error::shape(format!(
            "modulation widths γ {} / β {} for activation width {}",
            gamma.len(),
            beta.len(),
            h.len()
        )));
    }
    Ok(h.iter().zip(gamma).zip(beta).map(|((x, g), b)| g * x + b).collect())
}

/// Planform parameters and flight condition mapped to `[-1, 1]` by their
/// sampling bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningVector {
    pub p: [f64; 9],
    pub mu: [f64; 4],
}

impl ConditioningVector {
    pub fn to_vec(&self) -> Vec<f64> {
        self.p.iter().chain(&self.mu).copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(&self.mu).all(|v| v.is_finite())
    }
}

/// Scale and shift for one trunk layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilmModel {
    /// `f_θ`, hidden relu layers and a linear output.
    pub trunk: Mlp,
    /// `h_ψ`, emitting `[δγ_l, β_l]` for every modulated layer in order.
    pub hypernet: Mlp,
    /// Also modulate the output layer.
    pub modulate_output: bool,
    /// Per-channel standardization of the targets.
    pub target_mean: [f64; 3],
    pub target_std: [f64; 3],
    /// Ranges mapped to `[-1, 1]`: nine planform parameters, then four
    /// flight values.
    pub cond_bounds: Vec<(f64, f64)>,
    /// Fixed per-axis standardization of the coordinates, `(x - center) * scale`.
    pub input_center: [f64; 3],
    pub input_scale: [f64; 3],
    /// Fold points with `y < 0` onto the other half (`y`, `n_y` negated)
    /// before standardization.
    pub mirror_y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilmGrad {
    pub trunk: MlpGrad,
    pub hypernet: MlpGrad,
}

impl FilmGrad {
    pub fn zeros_like(model: &FilmModel) -> Self {
        Self {
            trunk: MlpGrad::zeros_like(&model.trunk),
            hypernet: MlpGrad::zeros_like(&model.hypernet),
        }
    }

    /// Same order as [`FilmModel::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.trunk.slices();
        v.extend(self.hypernet.slices());
        v
    }

    fn add(&mut self, other: &FilmGrad) {
        self.trunk.add(&other.trunk);
        self.hypernet.add(&other.hypernet);
    }
}

struct FilmTrace {
    hyper: MlpTrace,
    mods: Vec<Modulation>,
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    modulated: Vec<Matrix>,
    output: Matrix,
}

impl FilmModel {
    /// Trunk 6→128→128→128→3, hypernet 13→128→768.
    pub fn new(seed: u64) -> Self {
        Self::with_widths(&[TRUNK_INPUT, 128, 128, 128, 3], &[128], false, seed)
    }

    pub fn with_widths(trunk: &[usize], hyper_hidden: &[usize], modulate_output: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trunk = Mlp::new(trunk, Activation::Relu, Activation::Identity, &mut rng);
        let n_mod = if modulate_output { trunk.layers.len() } else { trunk.layers.len() - 1 };
        let mod_width: usize = trunk.layers[..n_mod].iter().map(Dense::out_width).sum();
        let mut widths = vec![COND_WIDTH];
        widths.extend_from_slice(hyper_hidden);
        widths.push(2 * mod_width);
        let mut hypernet = Mlp::new(&widths, Activation::Relu, Activation::Identity, &mut rng);
        let last = hypernet.layers.last_mut().expect("at least one layer");
        *last = Dense::zeroed(last.in_width(), last.out_width(), Activation::Identity);
        Self {
            trunk,
            hypernet,
            modulate_output,
            target_mean: [0.0; 3],
            target_std: [1.0; 3],
            cond_bounds: PARAM_BOUNDS.iter().chain(&FLIGHT_BOUNDS).copied().collect(),
            input_center: [0.0; 3],
            input_scale: [1.0; 3],
            mirror_y: false,
        }
    }

    pub fn modulated_layers(&self) -> usize {
        self.trunk.layers.len() - usize::from(!self.modulate_output)
    }

    pub fn param_count(&self) -> usize {
        self.trunk.param_count() + self.hypernet.param_count()
    }

    pub fn is_finite(&self) -> bool {
        self.trunk.is_finite() && self.hypernet.is_finite()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.trunk.params_mut();
        v.extend(self.hypernet.params_mut());
        v
    }

    pub fn condition(&self, params: &PlanformParams, flight: &FlightCondition) -> ConditioningVector {
        let scale = |v: f64, (lo, hi): (f64, f64)| 2.0 * (v - lo) / (hi - lo) - 1.0;
        let p = params.to_array();
        let m = flight.to_array();
        ConditioningVector {
            p: std::array::from_fn(|i| scale(p[i], self.cond_bounds[i])),
            mu: std::array::from_fn(|i| scale(m[i], self.cond_bounds[9 + i])),
        }
    }

    fn split_modulation(&self, raw: &[f64]) -> Vec<Modulation> {
        let mut off = 0;
        self.trunk.layers[..self.modulated_layers()]
            .iter()
            .map(|l| {
                let w = l.out_width();
                let gamma = raw[off..off + w].iter().map(|d| 1.0 + d).collect();
                let beta = raw[off + w..off + 2 * w].to_vec();
                off += 2 * w;
                Modulation { gamma, beta }
            })
            .collect()
    }

    pub fn hypernet_forward(&self, cond: &ConditioningVector) -> Result<Vec<Modulation>> {
        let c = Matrix::from_vec(1, COND_WIDTH, cond.to_vec())?;
        Ok(self.split_modulation(self.hypernet.forward(&c)?.as_slice()))
    }

    fn trace(&self, inputs: &Matrix, cond: &[f64]) -> Result<FilmTrace> {
        if cond.len() != COND_WIDTH {
            return Err(Error::shape(format!("conditioning width {} (expected {COND_WIDTH})", cond.len())));
        }
        let hyper = self.hypernet.forward_trace(&Matrix::from_vec(1, COND_WIDTH, cond.to_vec())?)?;
        let mods = self.split_modulation(hyper.output().expect("non-empty hypernet").as_slice());
        let mut t = FilmTrace {
            hyper,
            mods,
            inputs: Vec::new(),
            pre: Vec::new(),
            modulated: Vec::new(),
            output: Matrix::zeros(0, 0),
        };
        if inputs.cols() != TRUNK_INPUT {
            return Err(Error::shape(format!("expected N×{TRUNK_INPUT} inputs, got N×{}", inputs.cols())));
        }
        let mut h = inputs.clone();
        for r in 0..h.rows() {
            let row = h.row_mut(r);
            if self.mirror_y && row[1] < 0.0 {
                row[1] = -row[1];
                row[4] = -row[4];
            }
            for (d, v) in row[..3].iter_mut().enumerate() {
                *v = (*v - self.input_center[d]) * self.input_scale[d];
            }
        }
        for (i, l) in self.trunk.layers.iter().enumerate() {
            let z = l.affine(&h)?;
            let mut m = z.clone();
            if let Some(md) = t.mods.get(i) {
                for r in 0..m.rows() {
                    for ((v, g), b) in m.row_mut(r).iter_mut().zip(&md.gamma).zip(&md.beta) {
                        *v = g * *v + b;
                    }
                }
            }
            let y = l.activation.apply(&m);
            t.inputs.push(h);
            t.pre.push(z);
            t.modulated.push(m);
            h = y;
        }
        t.output = h;
        Ok(t)
    }

    fn backward(&self, t: &FilmTrace, dout: &Matrix, grad: &mut FilmGrad) -> Result<()> {
        let n = self.trunk.layers.len();
        let mut dmod = vec![0.0; self.hypernet.out_width()];
        let mut offsets = Vec::with_capacity(n);
        let mut off = 0;
        for m in &t.mods {
            offsets.push(off);
            off += 2 * m.gamma.len();
        }
        let mut d = dout.clone();
        for i in (0..n).rev() {
            let l = &self.trunk.layers[i];
            let y = if i + 1 < n { &t.inputs[i + 1] } else { &t.output };
            let mut dz = l.activation.backward(&t.modulated[i], y, &d);
            if let Some(md) = t.mods.get(i) {
                let w = md.gamma.len();
                let o = offsets[i];
                for r in 0..dz.rows() {
                    let z = t.pre[i].row(r);
                    for (j, dv) in dz.row_mut(r).iter_mut().enumerate() {
                        dmod[o + j] += *dv * z[j];
                        dmod[o + w + j] += *dv;
                        *dv *= md.gamma[j];
                    }
                }
            }
            d = l.backward_affine(&t.inputs[i], &dz, &mut grad.trunk.layers[i])?;
        }
        let dm = Matrix::from_vec(1, dmod.len(), dmod)?;
        self.hypernet.backward_into(&t.hyper, &dm, &mut grad.hypernet)?;
        Ok(())
    }

    /// Standardized outputs for N×6 trunk inputs sharing one condition.
    pub fn forward_standardized(&self, inputs: &Matrix, cond: &ConditioningVector) -> Result<Matrix> {
        Ok(self.trace(inputs, &cond.to_vec())?.output)
    }

    /// `(cp, cfx, cfz)` for each point; normals must be unit length.
    pub fn predict_batch(&self, points: &[Vec3], normals: &[Vec3], cond: &ConditioningVector) -> Result<Vec<[f64; 3]>> {
        let x = trunk_inputs(points, normals)?;
        let out = self.forward_standardized(&x, cond)?;
        Ok((0..out.rows())
            .map(|r| std::array::from_fn(|c| out.get(r, c) * self.target_std[c] + self.target_mean[c]))
            .collect())
    }

    pub fn predict_point(&self, x: Vec3, n: Vec3, cond: &ConditioningVector) -> Result<[f64; 3]> {
        Ok(self.predict_batch(&[x], &[n], cond)?[0])
    }

    /// Fields over a whole cloud; `cfy` is not predicted and stays zero.
    pub fn predict_fields(&self, cloud: &SurfaceCloud, cond: &ConditioningVector) -> Result<FieldQuad> {
        let chunks: Vec<Vec<[f64; 3]>> = (0..cloud.len())
            .collect::<Vec<_>>()
            .par_chunks(1024)
            .map(|idx| {
                let pts: Vec<Vec3> = idx.iter().map(|&i| cloud.points[i]).collect();
                let nrm: Vec<Vec3> = idx.iter().map(|&i| cloud.normals[i]).collect();
                self.predict_batch(&pts, &nrm, cond)
            })
            .collect::<Result<_>>()?;
        let mut f = FieldQuad::zeros(cloud.len());
        for (i, v) in chunks.into_iter().flatten().enumerate() {
            f.cp[i] = v[0];
            f.cfx[i] = v[1];
            f.cfz[i] = v[2];
        }
        Ok(f)
    }

    /// Mean squared error over every element of every case, in
    /// standardized units, and its gradient.
    pub fn loss_and_grad(&self, batch: &[FilmBatchItem<'_>]) -> Result<(f64, FilmGrad)> {
        let total: usize = batch.iter().map(|b| b.targets.as_slice().len()).sum();
        if total == 0 {
            return Err(Error::domain("empty FiLM minibatch"));
        }
        let parts: Vec<(f64, FilmGrad)> = batch
            .par_iter()
            .map(|b| {
                let t = self.trace(b.inputs, b.cond)?;
                if t.output.shape() != b.targets.shape() {
                    return Err(Error::shape("FiLM targets do not match the outputs"));
                }
                let mut sq = 0.0;
                let mut dout = t.output.clone();
                for (d, y) in dout.as_mut_slice().iter_mut().zip(b.targets.as_slice()) {
                    let e = *d - y;
                    sq += e * e;
                    *d = 2.0 * e / total as f64;
                }
                let mut g = FilmGrad::zeros_like(self);
                self.backward(&t, &dout, &mut g)?;
                Ok((sq, g))
            })
            .collect::<Result<_>>()?;
        let mut grad = FilmGrad::zeros_like(self);
        let mut sq = 0.0;
        for (s, g) in &parts {
            sq += s;
            grad.add(g);
        }
        Ok((sq / total as f64, grad))
    }

    pub fn to_state(&self) -> ModelState {
        let mut s = ModelState::new("film");
        s.set_meta("modulate_output", self.modulate_output);
        s.set_meta("target_mean", join(&self.target_mean));
        s.set_meta("target_std", join(&self.target_std));
        s.set_meta("cond_lower", join(&self.cond_bounds.iter().map(|b| b.0).collect::<Vec<_>>()));
        s.set_meta("cond_upper", join(&self.cond_bounds.iter().map(|b| b.1).collect::<Vec<_>>()));
        s.set_meta("input_center", join(&self.input_center));
        s.set_meta("input_scale", join(&self.input_scale));
        s.set_meta("mirror_y", self.mirror_y);
        s.networks.push(("trunk".into(), self.trunk.clone()));
        s.networks.push(("hypernet".into(), self.hypernet.clone()));
        s
    }

    pub fn from_state(s: &ModelState) -> Result<Self> {
        if s.model != "film" {
            return Err(Error::format(format!("expected a film checkpoint, found `{}`", s.model)));
        }
        let flag = |key: &str, value: Option<&str>| match value {
            Some("true") => Ok(true),
            Some("false") | None => Ok(false),
            Some(v) => Err(Error::format(format!("`{key}` is `{v}`"))),
        };
        let modulate_output = flag("modulate_output", Some(s.require_meta("modulate_output")?))?;
        let mirror_y = flag("mirror_y", s.meta("mirror_y"))?;
        let lo = s.meta_f64s("cond_lower")?;
        let hi = s.meta_f64s("cond_upper")?;
        let m = Self {
            trunk: s.network("trunk")?.clone(),
            hypernet: s.network("hypernet")?.clone(),
            modulate_output,
            target_mean: three(&s.meta_f64s("target_mean")?)?,
            target_std: three(&s.meta_f64s("target_std")?)?,
            cond_bounds: lo.into_iter().zip(hi).collect(),
            input_center: three(&s.meta_f64s("input_center")?)?,
            input_scale: three(&s.meta_f64s("input_scale")?)?,
            mirror_y,
        };
        let mod_width: usize = m.trunk.layers[..m.modulated_layers()].iter().map(Dense::out_width).sum();
        if m.trunk.in_width() != TRUNK_INPUT
            || m.trunk.out_width() != 3
            || m.hypernet.in_width() != COND_WIDTH
            || m.hypernet.out_width() != 2 * mod_width
            || m.cond_bounds.len() != COND_WIDTH
        {
            return Err(Error::format("film checkpoint has inconsistent layer widths"));
        }
        Ok(m)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn three(v: &[f64]) -> Result<[f64; 3]> {
    v.try_into()
        .map_err(|_| Error::format(format!("expected 3 values, found {}", v.len())))
}

/// `x ‖ n` rows. Normals must have unit length within 1e-6.
pub fn trunk_inputs(points: &[Vec3], normals: &[Vec3]) -> Result<Matrix> {
    if points.len() != normals.len() {
        return Err(Error::shape(format!("{} points but {} normals", points.len(), normals.len())));
    }
    let mut m = Matrix::zeros(points.len(), TRUNK_INPUT);
    for (i, (p, n)) in points.iter().zip(normals).enumerate() {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !((len - 1.0).abs() <= 1e-6) {
            return Err(Error::domain(format!("normal {i} has length {len}")));
        }
        m.row_mut(i)[..3].copy_from_slice(p);
        m.row_mut(i)[3..].copy_from_slice(n);
    }
    Ok(m)
}

/// One case in a minibatch: trunk inputs, standardized targets (same rows)
/// and the conditioning vector.
#[derive(Debug, Clone, Copy)]
pub struct FilmBatchItem<'a> {
    pub inputs: &'a Matrix,
    pub targets: &'a Matrix,
    pub cond: &'a [f64],
}

/// A training or evaluation case. Trunk inputs are shared between the
/// cases of one geometry.
#[derive(Debug, Clone)]
pub struct FilmSample {
    pub case_id: String,
    pub inputs: Arc<Matrix>,
    /// N×3 `(cp, cfx, cfz)` in physical units.
    pub targets: Matrix,
    pub params: PlanformParams,
    pub flight: FlightCondition,
}

impl FilmSample {
    pub fn new(case_id: &str, inputs: Arc<Matrix>, fields: &FieldQuad, params: PlanformParams, flight: FlightCondition) -> Result<Self> {
        if fields.len() != inputs.rows() {
            return Err(Error::shape(format!("{} field values for {} points", fields.len(), inputs.rows())));
        }
        let mut targets = Matrix::zeros(fields.len(), 3);
        for i in 0..fields.len() {
            targets.row_mut(i).copy_from_slice(&[fields.cp[i], fields.cfx[i], fields.cfz[i]]);
        }
        Ok(Self {
            case_id: case_id.to_string(),
            inputs,
            targets,
            params,
            flight,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondMode {
    GroundTruth,
    Predicted,
}

impl CondMode {
    pub fn name(self) -> &'static str {
        match self {
            CondMode::GroundTruth => "ground_truth",
            CondMode::Predicted => "predicted",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ground_truth" | "ground_truth_params" => Ok(CondMode::GroundTruth),
            "predicted" | "predicted_params" => Ok(CondMode::Predicted),
            _ => Err(Error::Validation(format!("unknown conditioning mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilmConfig {
    pub trunk_widths: Vec<usize>,
    pub hyper_hidden: Vec<usize>,
    pub modulate_output: bool,
    /// See [`FilmModel::mirror_y`].
    pub mirror_y: bool,
    pub epochs: usize,
    pub cases_per_batch: usize,
    pub points_per_case: usize,
    /// Points per case scored for validation.
    pub val_points: usize,
    pub lr0: f64,
    pub decay: f64,
    /// Decoupled weight decay applied to every parameter.
    pub weight_decay: f64,
    pub seed: u64,
    pub checkpoint: Option<PathBuf>,
}

impl Default for FilmConfig {
    fn default() -> Self {
        Self {
            trunk_widths: vec![TRUNK_INPUT, 128, 128, 128, 3],
            hyper_hidden: vec![128],
            modulate_output: false,
            mirror_y: true,
            epochs: 120,
            cases_per_batch: 8,
            points_per_case: 256,
            val_points: 512,
            lr0: 1e-3,
            decay: 0.975,
            weight_decay: 0.3,
            seed: 0,
            checkpoint: None,
        }
    }
}

fn strided_rows(n: usize, k: usize) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    (0..k).map(|i| i * n / k).collect()
}

fn standardized_rows(model: &FilmModel, targets: &Matrix, rows: &[usize]) -> Matrix {
    let mut t = targets.select_rows(rows);
    for r in 0..t.rows() {
        for (c, v) in t.row_mut(r).iter_mut().enumerate() {
            *v = (*v - model.target_mean[c]) / model.target_std[c];
        }
    }
    t
}

/// Standardized validation MSE on a fixed strided subset of each case.
pub fn film_loss(model: &FilmModel, set: &[FilmSample], conds: &[PlanformParams], points: usize) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::domain("empty validation set"));
    }
    let parts: Vec<(f64, usize)> = set
        .par_iter()
        .zip(conds)
        .map(|(s, p)| {
            let rows = strided_rows(s.inputs.rows(), points);
            let x = s.inputs.select_rows(&rows);
            let y = standardized_rows(model, &s.targets, &rows);
            let out = model.forward_standardized(&x, &model.condition(p, &s.flight))?;
            let sq: f64 = out.as_slice().iter().zip(y.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok((sq, y.as_slice().len()))
        })
        .collect::<Result<_>>()?;
    let (sq, n) = parts.iter().fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(sq / n as f64)
}

/// Mean and standard deviation of the first three columns over all rows,
/// with column 1 taken in absolute value when `fold` is set.
fn column_statistics<'a>(mats: impl Iterator<Item = &'a Matrix> + Clone, fold: bool) -> ([f64; 3], [f64; 3]) {
    let get = |m: &Matrix, r: usize, c: usize| {
        let v = m.get(r, c);
        if fold && c == 1 {
            v.abs()
        } else {
            v
        }
    };
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for m in mats.clone() {
        for r in 0..m.rows() {
            for c in 0..3 {
                sum[c] += get(m, r, c);
            }
        }
        n += m.rows();
    }
    let mean = sum.map(|v| v / n.max(1) as f64);
    let mut var = [0.0; 3];
    for m in mats {
        for r in 0..m.rows() {
            for c in 0..3 {
                var[c] += (get(m, r, c) - mean[c]).powi(2);
            }
        }
    }
    let std = std::array::from_fn(|c| {
        let v = (var[c] / n.max(1) as f64).sqrt();
        if v > 0.0 {
            v
        } else {
            1.0
        }
    });
    (mean, std)
}

/// Adam over `(θ, ψ)` with per-epoch learning-rate decay. Each step draws
/// `points_per_case` points from each of `cases_per_batch` cases. Returns
/// the model with the lowest validation loss.
pub fn train_film(
    train: &[FilmSample],
    train_conds: &[PlanformParams],
    val: &[FilmSample],
    val_conds: &[PlanformParams],
    cfg: &FilmConfig,
) -> Result<(FilmModel, TrainingLog)> {
    if train.is_empty() {
        return Err(Error::domain("no training cases"));
    }
    if train_conds.len() != train.len() || val_conds.len() != val.len() {
        return Err(Error::shape("one conditioning vector per case is required"));
    }
    let mut model = FilmModel::with_widths(&cfg.trunk_widths, &cfg.hyper_hidden, cfg.modulate_output, cfg.seed);
    model.mirror_y = cfg.mirror_y;
    (model.target_mean, model.target_std) = column_statistics(train.iter().map(|s| &s.targets), false);
    let (center, spread) = column_statistics(train.iter().map(|s| s.inputs.as_ref()), cfg.mirror_y);
    model.input_center = center;
    model.input_scale = spread.map(|v| 1.0 / v);
    let conds: Vec<Vec<f64>> = train
        .iter()
        .zip(train_conds)
        .map(|(s, p)| model.condition(p, &s.flight).to_vec())
        .collect();

    let mut opt = OptimizerState::new(cfg.lr0, cfg.decay);
    opt.weight_decay = cfg.weight_decay;
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, FilmModel)> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let per_case = cfg.points_per_case.max(1);
    for epoch in 0..cfg.epochs {
        opt.epoch = epoch as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut steps = 0usize;
        for chunk in order.chunks(cfg.cases_per_batch.max(1)) {
            let picked: Vec<(Matrix, Matrix)> = chunk
                .iter()
                .map(|&i| {
                    let s = &train[i];
                    let n = s.inputs.rows();
                    let rows = index::sample(&mut rng, n, per_case.min(n)).into_vec();
                    (s.inputs.select_rows(&rows), standardized_rows(&model, &s.targets, &rows))
                })
                .collect();
            let batch: Vec<FilmBatchItem> = chunk
                .iter()
                .zip(&picked)
                .map(|(&i, (x, y))| FilmBatchItem {
                    inputs: x,
                    targets: y,
                    cond: &conds[i],
                })
                .collect();
            let (loss, grad) = model.loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(diverged(epoch, &best, cfg));
            }
            adam_step(&mut model.params_mut(), &grad.slices(), &mut opt)?;
            total += loss;
            steps += 1;
        }
        let train_mse = total / steps.max(1) as f64;
        let val_mse = if val.is_empty() {
            train_mse
        } else {
            film_loss(&model, val, val_conds, cfg.val_points)?
        };
        if !val_mse.is_finite() || !model.is_finite() {
            return Err(diverged(epoch, &best, cfg));
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
            lr: opt.learning_rate(),
        });
        if best.as_ref().is_none_or(|(b, _)| val_mse < *b) {
            log.best_epoch = epoch;
            best = Some((val_mse, model.clone()));
            if let Some(path) = &cfg.checkpoint {
                let mut st = model.to_state();
                st.set_meta("epoch", epoch);
                st.optimizer = Some(opt.clone());
                st.save(path)?;
            }
        }
    }
    Ok((best.map_or(model, |b| b.1), log))
}

fn diverged(epoch: usize, best: &Option<(f64, FilmModel)>, cfg: &FilmConfig) -> Error {
    let last = match (&cfg.checkpoint, best) {
        (Some(p), Some(_)) => format!("; last good checkpoint {}", p.display()),
        _ => String::new(),
    };
    Error::Training(format!("FiLM loss diverged in epoch {epoch}{last}"))
}

/// Full inference from a point cloud: ensembled PointNet parameters, FiLM
/// fields at every point, then integrated coefficients.
pub fn predict_case(
    pointnet: &PointNetModel,
    film: &FilmModel,
    cloud: &SurfaceCloud,
    flight: &FlightCondition,
    reference: &Reference,
    seed: u64,
) -> Result<(FieldQuad, IntegratedCoefficients)> {
    let p = predict_params_ensembled(pointnet, cloud, seed)?.mean;
    let fields = film.predict_fields(cloud, &film.condition(&p, flight))?;
    let ic = integrate(cloud, &fields, flight.alpha, reference)?;
    Ok((fields, ic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_nonzero_hypernet(m: &mut FilmModel, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = m.hypernet.layers.last_mut().unwrap();
        for v in last.weights.as_mut_slice() {
            *v = rng.random_range(-0.2..0.2);
        }
        for v in &mut last.biases {
            *v = rng.random_range(-0.2..0.2);
        }
    }

    fn flight() -> FlightCondition {
        FlightCondition::from_array([20.0, 0.3, 5.0, 4.0])
    }

    fn unit_points(n: usize, seed: u64) -> (Vec<Vec3>, Vec<Vec3>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let p = [rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.1..0.1)];
                let v: Vec3 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                (p, v.map(|c| c / l))
            })
            .unzip()
    }

    #[test]
    fn modulate_fixtures() {
        assert_eq!(film_modulate(&[0.5, -1.0], &[1.0, 1.0], &[0.0, 0.0]).unwrap(), vec![0.5, -1.0]);
        assert_eq!(film_modulate(&[0.5, -1.0], &[0.0, 0.0], &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(film_modulate(&[0.5, -1.0], &[2.0, 2.0], &[1.0, 1.0]).unwrap(), vec![2.0, -1.0]);
        assert!(matches!(film_modulate(&[1.0], &[1.0, 1.0], &[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn architecture_and_identity_start() {
        let m = FilmModel::new(0);
        assert_eq!(m.trunk.widths(), vec![6, 128, 128, 128, 3]);
        assert_eq!(m.hypernet.widths(), vec![13, 128, 768]);
        let mods = m.hypernet_forward(&m.condition(&PlanformParams::midpoint(), &flight())).unwrap();
        assert_eq!(mods.len(), 3);
        for md in &mods {
            assert!(md.gamma.iter().all(|&g| g == 1.0));
            assert!(md.beta.iter().all(|&b| b == 0.0));
        }
        let m = FilmModel::with_widths(&[6, 16, 16, 3], &[8], true, 0);
        assert_eq!(m.hypernet.out_width(), 2 * (16 + 16 + 3));
        assert_eq!(m.modulated_layers(), 3);
    }

    #[test]
    fn untrained_output_ignores_condition() {
        let m = FilmModel::new(3);
        let (p, n) = unit_points(50, 1);
        let a = m.predict_batch(&p, &n, &m.condition(&PlanformParams::midpoint(), &flight())).unwrap();
        let other = FlightCondition::from_array([1.0, 0.1, 0.2, -8.0]);
        let b = m.predict_batch(&p, &n, &m.condition(&PlanformParams::midpoint().clamped(), &other)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batched_matches_single_point() {
        let mut m = FilmModel::new(1);
        random_nonzero_hypernet(&mut m, 2);
        let cond = m.condition(&PlanformParams::midpoint(), &flight());
        let (p, n) = unit_points(40, 3);
        let batch = m.predict_batch(&p, &n, &cond).unwrap();
        for i in 0..p.len() {
            let one = m.predict_point(p[i], n[i], &cond).unwrap();
            for c in 0..3 {
                assert!((one[c] - batch[i][c]).abs() <= 1e-12 * (1.0 + one[c].abs()));
            }
        }
        let fewer = m.predict_batch(&p[1..], &n[1..], &cond).unwrap();
        assert_eq!(&fewer[..], &batch[1..]);
    }

    #[test]
    fn non_unit_normal_is_rejected() {
        let m = FilmModel::new(0);
        let cond = m.condition(&PlanformParams::midpoint(), &flight());
        assert!(matches!(m.predict_point([0.0; 3], [0.0, 0.0, 1.01], &cond), Err(Error::Domain(_))));
        assert!(m.predict_point([0.0; 3], [0.0, 0.0, 1.0 + 5e-7], &cond).is_ok());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut m = FilmModel::with_widths(&[6, 12, 10, 3], &[8], false, 5);
        random_nonzero_hypernet(&mut m, 6);
        let (p, n) = unit_points(7, 4);
        let x = trunk_inputs(&p, &n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = Matrix::from_vec(7, 3, (0..21).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let c1 = m.condition(&PlanformParams::midpoint(), &flight()).to_vec();
        let c2 = m.condition(&PlanformParams::midpoint(), &FlightCondition::from_array([5.0, 0.4, 1.0, -3.0])).to_vec();
        let items = [
            FilmBatchItem { inputs: &x, targets: &y, cond: &c1 },
            FilmBatchItem { inputs: &x, targets: &y, cond: &c2 },
        ];
        let (_, g) = m.loss_and_grad(&items).unwrap();
        let analytic: Vec<f64> = g.slices().concat();
        let h = 1e-5;
        let np = analytic.len();
        for k in (0..np).step_by(np / 60) {
            let eval = |delta: f64| {
                let mut mm = m.clone();
                let mut off = 0;
                for s in mm.params_mut() {
                    if k < off + s.len() {
                        s[k - off] += delta;
                        break;
                    }
                    off += s.len();
                }
                mm.loss_and_grad(&items).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let scale = fd.abs().max(analytic[k].abs()).max(1e-5);
            assert!((fd - analytic[k]).abs() <= 1e-5 * scale, "param {k}: fd {fd} vs {}", analytic[k]);
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let mut m = FilmModel::new(8);
        random_nonzero_hypernet(&mut m, 1);
        m.target_mean = [0.1, 0.002, -0.003];
        m.target_std = [0.3, 0.001, 0.0007];
        m.mirror_y = true;
        let back = FilmModel::from_state(&ModelState::from_bytes(&m.to_state().to_bytes()).unwrap()).unwrap();
        assert_eq!(back, m);
        let cond = m.condition(&PlanformParams::midpoint(), &flight());
        let (p, n) = unit_points(10, 2);
        assert_eq!(m.predict_batch(&p, &n, &cond).unwrap(), back.predict_batch(&p, &n, &cond).unwrap());
    }

    #[test]
    fn mirrored_model_is_symmetric_in_y() {
        let mut m = FilmModel::new(3);
        random_nonzero_hypernet(&mut m, 4);
        m.input_center = [0.5, 0.2, 0.0];
        m.mirror_y = true;
        let cond = m.condition(&PlanformParams::midpoint(), &flight());
        let (p, n) = unit_points(50, 6);
        let flip = |v: &Vec3| [v[0], -v[1], v[2]];
        let pf: Vec<Vec3> = p.iter().map(flip).collect();
        let nf: Vec<Vec3> = n.iter().map(flip).collect();
        assert_eq!(m.predict_batch(&p, &n, &cond).unwrap(), m.predict_batch(&pf, &nf, &cond).unwrap());
        m.mirror_y = false;
        assert_ne!(m.predict_batch(&p, &n, &cond).unwrap(), m.predict_batch(&pf, &nf, &cond).unwrap());
    }

    #[test]
    fn cond_mode_names() {
        assert_eq!(CondMode::parse("ground_truth").unwrap(), CondMode::GroundTruth);
        assert_eq!(CondMode::parse(CondMode::Predicted.name()).unwrap(), CondMode::Predicted);
        assert!(CondMode::parse("both").is_err());
    }
}
