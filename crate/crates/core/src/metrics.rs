//! Error metrics, R² and report emission.
//!
//! Relative errors are `100·‖e‖₁/‖u‖₁` and `100·‖e‖₂/‖u‖₂`. Per case they are
//! averaged across cases (the headline figure); pooled values over all
//! points are reported alongside. MSE and MAE are pooled over points.

use std::fmt::Write as _;

use crate::aero::IntegratedCoefficients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    pub mse: f64,
    pub mae: f64,
    /// `None` when the truth is identically zero.
    pub rel_l1_pct: Option<f64>,
    pub rel_l2_pct: Option<f64>,
}

/// Streaming accumulator over cases, in push order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelAccumulator {
    n: usize,
    sq_err: f64,
    abs_err: f64,
    abs_truth: f64,
    sq_truth: f64,
    case_rel_l1: Vec<f64>,
    case_rel_l2: Vec<f64>,
    undefined_cases: usize,
}

/// Aggregate over cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetrics {
    pub pooled: ChannelMetrics,
    /// Mean over cases of the per-case relative errors.
    pub case_rel_l1_pct: Option<f64>,
    pub case_rel_l2_pct: Option<f64>,
    pub cases: usize,
    /// Cases whose truth was identically zero and were left out of the
    /// per-case means.
    pub undefined_cases: usize,
}

fn rel(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| 100.0 * num / den)
}

impl ChannelAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_case(&mut self, pred: &[f64], truth: &[f64]) -> Result<()> {
        if pred.len() != truth.len() {
            return Err(Error::shape(format!(
                "prediction has {} values, truth {}",
                pred.len(),
                truth.len()
            )));
        }
        let (mut sq, mut ab, mut at, mut st) = (0.0, 0.0, 0.0, 0.0);
        for (p, t) in pred.iter().zip(truth) {
            let e = p - t;
            sq += e * e;
            ab += e.abs();
            at += t.abs();
            st += t * t;
            // Running totals are updated per value so that pooling cases
            // reproduces a single pass over the concatenation exactly.
            self.sq_err += e * e;
            self.abs_err += e.abs();
            self.abs_truth += t.abs();
            self.sq_truth += t * t;
        }
        self.n += pred.len();
        match (rel(ab, at), rel(sq.sqrt(), st.sqrt())) {
            (Some(a), Some(b)) => {
                self.case_rel_l1.push(a);
                self.case_rel_l2.push(b);
            }
            _ => self.undefined_cases += 1,
        }
        Ok(())
    }

    pub fn cases(&self) -> usize {
        self.case_rel_l1.len() + self.undefined_cases
    }

    pub fn pooled(&self) -> Result<ChannelMetrics> {
        if self.n == 0 {
            return Err(Error::domain("metrics need at least one value"));
        }
        let n = self.n as f64;
        Ok(ChannelMetrics {
            mse: self.sq_err / n,
            mae: self.abs_err / n,
            rel_l1_pct: rel(self.abs_err, self.abs_truth),
            rel_l2_pct: rel(self.sq_err.sqrt(), self.sq_truth.sqrt()),
        })
    }

    pub fn finish(&self) -> Result<AggregateMetrics> {
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        Ok(AggregateMetrics {
            pooled: self.pooled()?,
            case_rel_l1_pct: mean(&self.case_rel_l1),
            case_rel_l2_pct: mean(&self.case_rel_l2),
            cases: self.cases(),
            undefined_cases: self.undefined_cases,
        })
    }
}

pub fn channel_metrics(pred: &[f64], truth: &[f64]) -> Result<ChannelMetrics> {
    let mut acc = ChannelAccumulator::new();
    acc.push_case(pred, truth)?;
    acc.pooled()
}

/// Coefficient of determination `1 − SS_res/SS_tot`; `None` when the truth
/// has zero variance.
pub fn r2(pred: &[f64], truth: &[f64]) -> Result<Option<f64>> {
    if pred.len() != truth.len() {
        return Err(Error::shape("r2 inputs differ in length"));
    }
    if truth.is_empty() {
        return Err(Error::domain("r2 needs at least one value"));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub case_id: String,
    pub truth: IntegratedCoefficients,
    pub pred: IntegratedCoefficients,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedCorrelation {
    pub r2_cl: Option<f64>,
    pub r2_cd: Option<f64>,
    pub r2_cmy: Option<f64>,
    pub scatter: Vec<ScatterRow>,
}

/// R² of predicted against true integrated coefficients over cases.
pub fn integrated_correlation(rows: Vec<ScatterRow>) -> Result<IntegratedCorrelation> {
    if rows.len() < 3 {
        return Err(Error::domain(format!("integrated correlation needs >= 3 cases, got {}", rows.len())));
    }
    let col = |f: fn(&IntegratedCoefficients) -> f64| -> (Vec<f64>, Vec<f64>) {
        rows.iter().map(|r| (f(&r.pred), f(&r.truth))).unzip()
    };
    let (pl, tl) = col(|c| c.cl);
    let (pd, td) = col(|c| c.cd);
    let (pm, tm) = col(|c| c.cmy);
    Ok(IntegratedCorrelation {
        r2_cl: r2(&pl, &tl)?,
        r2_cd: r2(&pd, &td)?,
        r2_cmy: r2(&pm, &tm)?,
        scatter: rows,
    })
}

impl IntegratedCorrelation {
    /// `case_id,cl_true,cl_pred,cd_true,cd_pred,cmy_true,cmy_pred` rows.
    pub fn scatter_csv(&self, config_hash: &str) -> String {
        let mut s = format!("# config_hash={config_hash}\ncase_id,cl_true,cl_pred,cd_true,cd_pred,cmy_true,cmy_pred\n");
        for r in &self.scatter {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.case_id, r.truth.cl, r.pred.cl, r.truth.cd, r.pred.cd, r.truth.cmy, r.pred.cmy
            );
        }
        s
    }
}

/// Everything an evaluation run reports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub config_hash: String,
    pub label: String,
    pub cases: usize,
    pub channels: Vec<(String, AggregateMetrics)>,
    pub param_r2: Vec<(String, Option<f64>)>,
    pub integrated: Option<IntegratedCorrelation>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

impl MetricReport {
    pub fn channel(&self, name: &str) -> Option<&AggregateMetrics> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config_hash: {}", self.config_hash);
        if !self.label.is_empty() {
            let _ = writeln!(s, "label: {}", self.label);
        }
        let _ = writeln!(s, "cases: {}", self.cases);
        for (name, m) in &self.channels {
            let _ = writeln!(s, "{name}.mse: {}", m.pooled.mse);
            let _ = writeln!(s, "{name}.mae: {}", m.pooled.mae);
            let _ = writeln!(s, "{name}.rel_l1_pct: {}", opt(m.case_rel_l1_pct));
            let _ = writeln!(s, "{name}.rel_l2_pct: {}", opt(m.case_rel_l2_pct));
            let _ = writeln!(s, "{name}.pooled_rel_l1_pct: {}", opt(m.pooled.rel_l1_pct));
            let _ = writeln!(s, "{name}.pooled_rel_l2_pct: {}", opt(m.pooled.rel_l2_pct));
            if m.undefined_cases > 0 {
                let _ = writeln!(s, "{name}.undefined_cases: {}", m.undefined_cases);
            }
        }
        for (name, v) in &self.param_r2 {
            let _ = writeln!(s, "r2.{name}: {}", opt(*v));
        }
        if let Some(i) = &self.integrated {
            let _ = writeln!(s, "integrated.r2_cl: {}", opt(i.r2_cl));
            let _ = writeln!(s, "integrated.r2_cd: {}", opt(i.r2_cd));
            let _ = writeln!(s, "integrated.r2_cmy: {}", opt(i.r2_cmy));
        }
        s
    }
}
