//! Permutation-invariant regressor from a surface point sample to the nine
//! planform parameters: `p̂ = head(maxpool(φ(X)))`.
//!
//! Targets are the parameters scaled to `[0, 1]` by their sampling bounds.
//! Raw head outputs are denormalized without clamping.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PlanformParams, SurfaceCloud, PARAM_BOUNDS};
use crate::nn::{
    adam_step, max_pool_backward, max_pool_over_rows, mse, Activation, Matrix, Mlp, MlpGrad,
    MlpTrace, ModelState, OptimizerState,
};
pub use crate::nn::{EpochRecord, TrainingLog};

pub const POINTS_PER_BATCH: usize = 2048;
pub const BATCHES_PER_CLOUD: usize = 15;
pub const N_PARAMS: usize = 9;

/// `k` rows drawn from one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBatch {
    pub points: Matrix,
    pub geometry_id: String,
    pub index: usize,
    /// Set when the cloud had fewer than `k` points.
    pub with_replacement: bool,
}

/// Draws `batches` independent uniform samples of `k` points. Batch `b` uses
/// stream `b` of a generator seeded with `seed`. Indices are drawn over the
/// points in coordinate order, so the sampled set does not depend on the
/// order of the cloud's rows.
pub fn subsample(cloud: &SurfaceCloud, k: usize, batches: usize, seed: u64) -> Result<Vec<SampledBatch>> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::domain("cannot subsample an empty cloud"));
    }
    if k == 0 {
        return Err(Error::domain("batch size must be positive"));
    }
    let mut canonical: Vec<usize> = (0..n).collect();
    canonical.sort_by(|&a, &b| {
        let (p, q) = (&cloud.points[a], &cloud.points[b]);
        p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])).then(p[2].total_cmp(&q[2]))
    });
    let replace = n < k;
    Ok((0..batches)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let idx: Vec<usize> = if replace {
                use rand::Rng;
                (0..k).map(|_| rng.random_range(0..n)).collect()
            } else {
                rand::seq::index::sample(&mut rng, n, k).into_vec()
            };
            let mut m = Matrix::zeros(k, 3);
            for (r, &i) in idx.iter().enumerate() {
                m.row_mut(r).copy_from_slice(&cloud.points[canonical[i]]);
            }
            SampledBatch {
                points: m,
                geometry_id: cloud.geometry_id.clone(),
                index: b,
                with_replacement: replace,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointNetModel {
    /// Shared per-point network φ.
    pub phi: Mlp,
    /// Regression head on the pooled feature.
    pub head: Mlp,
    /// Fixed per-axis input standardization, `(x - center) * scale`.
    pub input_center: [f64; 3],
    pub input_scale: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointNetGrad {
    pub phi: MlpGrad,
    pub head: MlpGrad,
}

impl PointNetGrad {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.phi.slices();
        s.extend(self.head.slices());
        s
    }
}

/// Forward pass of one point set, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct PointNetTrace {
    pub phi: MlpTrace,
    pub pooled: Vec<f64>,
    pub argmax: Vec<usize>,
}

impl PointNetModel {
    /// φ = 3→64→128 and head = 128→64→9.
    pub fn new(seed: u64) -> Self {
        Self::with_widths(&[3, 64, 128], &[128, 64, N_PARAMS], seed)
    }

    pub fn with_widths(phi: &[usize], head: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            phi: Mlp::new(phi, Activation::Relu, Activation::Relu, &mut rng),
            head: Mlp::new(head, Activation::Relu, Activation::Identity, &mut rng),
            input_center: [0.0; 3],
            input_scale: [1.0; 3],
        }
    }

    fn standardize_input(&self, points: &Matrix) -> Result<Matrix> {
        if points.cols() != 3 {
            return Err(Error::shape(format!("expected N×3 points, got N×{}", points.cols())));
        }
        let mut x = points.clone();
        for r in 0..x.rows() {
            for (d, v) in x.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.input_center[d]) * self.input_scale[d];
            }
        }
        Ok(x)
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.phi.params_mut();
        p.extend(self.head.params_mut());
        p
    }

    /// Global feature `maxpool(φ(X))`.
    pub fn pool(&self, points: &Matrix) -> Result<Vec<f64>> {
        Ok(max_pool_over_rows(&self.phi.forward(&self.standardize_input(points)?)?)?.0)
    }

    /// Raw head output in normalized parameter units.
    pub fn predict_normalized(&self, points: &Matrix) -> Result<[f64; N_PARAMS]> {
        let z = self.pool(points)?;
        let out = self.head.forward(&Matrix::from_vec(1, z.len(), z)?)?;
        to_array(out.row(0))
    }

    fn trace(&self, points: &Matrix) -> Result<PointNetTrace> {
        let phi = self.phi.forward_trace(&self.standardize_input(points)?)?;
        let (pooled, argmax) = max_pool_over_rows(phi.output().expect("non-empty network"))?;
        Ok(PointNetTrace { phi, pooled, argmax })
    }

    /// Mean squared error over the sets and all nine outputs, and its
    /// gradient. Only rows that win the max pool receive gradient, so φ's
    /// backward pass runs on those rows alone.
    pub fn loss_and_grad(&self, sets: &[&Matrix], targets: &[[f64; N_PARAMS]]) -> Result<(f64, PointNetGrad)> {
        if sets.len() != targets.len() || sets.is_empty() {
            return Err(Error::shape("need one target per point set"));
        }
        let traces: Vec<PointNetTrace> = sets.par_iter().map(|x| self.trace(x)).collect::<Result<_>>()?;
        let width = traces[0].pooled.len();
        let mut pooled = Matrix::zeros(sets.len(), width);
        for (i, t) in traces.iter().enumerate() {
            pooled.row_mut(i).copy_from_slice(&t.pooled);
        }
        let head_trace = self.head.forward_trace(&pooled)?;
        let target = Matrix::from_rows(targets)?;
        let (loss, dl) = mse(head_trace.output().expect("non-empty network"), &target)?;
        let mut head = MlpGrad::zeros_like(&self.head);
        let dpooled = self.head.backward_into(&head_trace, &dl, &mut head)?;

        let phis: Vec<MlpGrad> = traces
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let mut rows: Vec<usize> = t.argmax.clone();
                rows.sort_unstable();
                rows.dedup();
                let mut local = vec![0usize; t.argmax.len()];
                for (c, r) in t.argmax.iter().enumerate() {
                    local[c] = rows.binary_search(r).expect("present");
                }
                let sub = t.phi.select_rows(&rows);
                let dy = max_pool_backward(dpooled.row(i), &local, rows.len());
                let mut g = MlpGrad::zeros_like(&self.phi);
                self.phi.backward_into(&sub, &dy, &mut g)?;
                Ok(g)
            })
            .collect::<Result<_>>()?;
        let mut phi = MlpGrad::zeros_like(&self.phi);
        for g in &phis {
            phi.add(g);
        }
        Ok((loss, PointNetGrad { phi, head }))
    }

    pub fn to_state(&self) -> ModelState {
        let mut s = ModelState::new("pointnet");
        let lo: Vec<String> = PARAM_BOUNDS.iter().map(|b| b.0.to_string()).collect();
        let hi: Vec<String> = PARAM_BOUNDS.iter().map(|b| b.1.to_string()).collect();
        s.set_meta("target_lower", lo.join(" "));
        s.set_meta("target_upper", hi.join(" "));
        s.set_meta("input_center", join(&self.input_center));
        s.set_meta("input_scale", join(&self.input_scale));
        s.networks = vec![("phi".into(), self.phi.clone()), ("head".into(), self.head.clone())];
        s
    }

    pub fn from_state(s: &ModelState) -> Result<Self> {
        if s.model != "pointnet" {
            return Err(Error::format(format!("expected a pointnet checkpoint, found `{}`", s.model)));
        }
        let m = Self {
            phi: s.network("phi")?.clone(),
            head: s.network("head")?.clone(),
            input_center: to3(&s.meta_f64s("input_center")?)?,
            input_scale: to3(&s.meta_f64s("input_scale")?)?,
        };
        if m.phi.in_width() != 3
            || m.head.in_width() != m.phi.out_width()
            || m.head.out_width() != N_PARAMS
        {
            return Err(Error::format("pointnet checkpoint has inconsistent widths"));
        }
        Ok(m)
    }
}

fn to3(v: &[f64]) -> Result<[f64; 3]> {
    v.try_into()
        .map_err(|_| Error::format(format!("expected 3 values, found {}", v.len())))
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn to_array(v: &[f64]) -> Result<[f64; N_PARAMS]> {
    v.try_into()
        .map_err(|_| Error::shape(format!("head produced {} outputs, expected {N_PARAMS}", v.len())))
}

/// Raw (unclamped) parameters predicted from one batch.
pub fn predict_params(model: &PointNetModel, batch: &SampledBatch) -> Result<PlanformParams> {
    Ok(PlanformParams::denormalize(&model.predict_normalized(&batch.points)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePrediction {
    pub mean: PlanformParams,
    /// Across-batch variance of each parameter, in parameter units.
    pub variance: [f64; N_PARAMS],
    pub batches: usize,
}

/// Mean of the predictions over `batches` samples of `k` points.
pub fn predict_ensembled_with(
    model: &PointNetModel,
    cloud: &SurfaceCloud,
    k: usize,
    batches: usize,
    seed: u64,
) -> Result<EnsemblePrediction> {
    let sets = subsample(cloud, k, batches, seed)?;
    let preds: Vec<[f64; N_PARAMS]> = sets
        .par_iter()
        .map(|b| predict_params(model, b).map(|p| p.to_array()))
        .collect::<Result<_>>()?;
    let n = preds.len() as f64;
    let mut mean = [0.0; N_PARAMS];
    for p in &preds {
        for j in 0..N_PARAMS {
            mean[j] += p[j] / n;
        }
    }
    let mut variance = [0.0; N_PARAMS];
    for p in &preds {
        for j in 0..N_PARAMS {
            variance[j] += (p[j] - mean[j]).powi(2) / n;
        }
    }
    let mut mean = PlanformParams::from_array(mean);
    mean.c1 = 1.0;
    Ok(EnsemblePrediction {
        mean,
        variance,
        batches: preds.len(),
    })
}

pub fn predict_params_ensembled(model: &PointNetModel, cloud: &SurfaceCloud, seed: u64) -> Result<EnsemblePrediction> {
    predict_ensembled_with(model, cloud, POINTS_PER_BATCH, BATCHES_PER_CLOUD, seed)
}

/// One geometry prepared for training: its point batches and target.
#[derive(Debug, Clone)]
pub struct GeometrySample {
    pub geometry_id: String,
    pub batches: Vec<Matrix>,
    pub target: [f64; N_PARAMS],
}

impl GeometrySample {
    pub fn new(cloud: &SurfaceCloud, params: &PlanformParams, k: usize, batches: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            geometry_id: cloud.geometry_id.clone(),
            batches: subsample(cloud, k, batches, seed)?.into_iter().map(|b| b.points).collect(),
            target: params.normalized(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointNetConfig {
    /// Widths of φ, starting at 3.
    pub phi_widths: Vec<usize>,
    /// Widths of the head, ending at 9.
    pub head_widths: Vec<usize>,
    pub epochs: usize,
    /// Geometries per optimizer step.
    pub batch_geometries: usize,
    pub lr0: f64,
    pub decay: f64,
    /// Decoupled weight decay applied to every parameter.
    pub weight_decay: f64,
    pub seed: u64,
    /// Written with the best-validation model whenever it improves.
    pub checkpoint: Option<PathBuf>,
}

impl Default for PointNetConfig {
    fn default() -> Self {
        Self {
            phi_widths: vec![3, 64, 128],
            head_widths: vec![128, 64, N_PARAMS],
            epochs: 1000,
            batch_geometries: 4,
            lr0: 3e-3,
            decay: 0.997,
            weight_decay: 0.0,
            seed: 0,
            checkpoint: None,
        }
    }
}

/// Per-axis mean and standard deviation over batch 0 of every geometry.
fn training_moments(train: &[GeometrySample]) -> ([f64; 3], [f64; 3]) {
    let rows = || train.iter().flat_map(|g| (0..g.batches[0].rows()).map(move |r| g.batches[0].row(r)));
    let n = rows().count().max(1) as f64;
    let mut mean = [0.0; 3];
    for p in rows() {
        for d in 0..3 {
            mean[d] += p[d] / n;
        }
    }
    let mut var = [0.0; 3];
    for p in rows() {
        for d in 0..3 {
            var[d] += (p[d] - mean[d]).powi(2) / n;
        }
    }
    (mean, var.map(f64::sqrt))
}

/// Validation loss: batch 0 of each geometry.
pub fn pointnet_loss(model: &PointNetModel, set: &[GeometrySample]) -> Result<f64> {
    if set.is_empty() {
        return Ok(f64::NAN);
    }
    let losses: Vec<f64> = set
        .par_iter()
        .map(|g| {
            let p = model.predict_normalized(&g.batches[0])?;
            Ok(p.iter().zip(&g.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / N_PARAMS as f64)
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Trains on `train`, selecting the epoch with the lowest validation loss.
/// With an empty validation set the final epoch is kept.
pub fn train_pointnet(
    train: &[GeometrySample],
    val: &[GeometrySample],
    cfg: &PointNetConfig,
) -> Result<(PointNetModel, TrainingLog)> {
    if train.is_empty() {
        return Err(Error::Training("no training geometries".into()));
    }
    if train.iter().chain(val).any(|g| g.batches.is_empty()) {
        return Err(Error::Training("every geometry needs at least one point batch".into()));
    }
    let mut model = PointNetModel::with_widths(&cfg.phi_widths, &cfg.head_widths, cfg.seed);
    let (mean, std) = training_moments(train);
    model.input_center = mean;
    model.input_scale = std.map(|s| if s > 0.0 { 1.0 / s } else { 1.0 });
    let mut opt = OptimizerState::new(cfg.lr0, cfg.decay);
    opt.weight_decay = cfg.weight_decay;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0001);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, PointNetModel)> = None;

    for epoch in 0..cfg.epochs {
        opt.epoch = epoch as u64;
        let lr = opt.learning_rate();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_geometries.max(1)) {
            let sets: Vec<&Matrix> = chunk
                .iter()
                .map(|&i| {
                    let g = &train[i];
                    &g.batches[(epoch + i) % g.batches.len()]
                })
                .collect();
            let targets: Vec<[f64; N_PARAMS]> = chunk.iter().map(|&i| train[i].target).collect();
            let (loss, grad) = model.loss_and_grad(&sets, &targets)?;
            adam_step(&mut model.params_mut(), &grad.slices(), &mut opt)?;
            total += loss * chunk.len() as f64;
        }
        let train_mse = total / train.len() as f64;
        let val_mse = if val.is_empty() { train_mse } else { pointnet_loss(&model, val)? };
        if !val_mse.is_finite() || !model.phi.is_finite() || !model.head.is_finite() {
            return Err(Error::Training(format!(
                "validation loss became {val_mse} at epoch {epoch}; best checkpoint kept"
            )));
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
            lr,
        });
        if best.as_ref().is_none_or(|(b, _)| val_mse <= *b || val.is_empty()) {
            log.best_epoch = epoch;
            best = Some((val_mse, model.clone()));
            if let Some(path) = &cfg.checkpoint {
                let mut s = model.to_state();
                s.set_meta("epoch", epoch);
                s.set_meta("seed", cfg.seed);
                s.optimizer = Some(opt.clone());
                s.save(path)?;
            }
        }
    }
    let model = best.map(|(_, m)| m).unwrap_or(model);
    Ok((model, log))
}
