//! Adam with bias correction, optional decoupled weight decay and per-epoch
//! exponential learning-rate decay.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub epoch: u64,
    pub lr0: f64,
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled (AdamW) coefficient; each step scales parameters by
    /// `1 - lr * weight_decay`.
    pub weight_decay: f64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(lr0: f64, decay: f64) -> Self {
        Self {
            step: 0,
            epoch: 0,
            lr0,
            decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr0 * self.decay.powi(self.epoch as i32)
    }

    fn ensure_shapes(&mut self, sizes: &[usize]) -> Result<()> {
        if self.first_moment.is_empty() && self.step == 0 {
            self.first_moment = sizes.iter().map(|&n| vec![0.0; n]).collect();
            self.second_moment = self.first_moment.clone();
        }
        let ok = self.first_moment.len() == sizes.len()
            && self.second_moment.len() == sizes.len()
            && sizes
                .iter()
                .zip(self.first_moment.iter().zip(&self.second_moment))
                .all(|(&n, (m, v))| m.len() == n && v.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::shape("optimizer moments do not match the parameters"))
        }
    }
}

impl Default for OptimizerState {
    fn default() -> Self {
        Self::new(1e-3, 0.97)
    }
}

/// One Adam update. A non-finite gradient leaves parameters and state
/// untouched and returns a training error.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut OptimizerState) -> Result<()> {
    if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
        return Err(Error::shape("parameters and gradients differ in shape"));
    }
    if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::Training(format!(
            "non-finite gradient at step {}; update skipped",
            state.step
        )));
    }
    let sizes: Vec<usize> = params.iter().map(|p| p.len()).collect();
    state.ensure_shapes(&sizes)?;
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let lr = state.learning_rate();
    let shrink = 1.0 - lr * state.weight_decay;
    for ((p, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p[i] = shrink * p[i] - lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut s = OptimizerState::default();
        adam_step(&mut [&mut p], &[&[0.0, 0.0]], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![0.0];
        let mut s = OptimizerState::new(0.1, 1.0);
        adam_step(&mut [&mut p], &[&[1.0]], &mut s).unwrap();
        // m_hat = 1, v_hat = 1.
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_shrinks_toward_zero() {
        let mut p = vec![2.0];
        let mut s = OptimizerState::new(0.1, 1.0);
        s.weight_decay = 0.5;
        adam_step(&mut [&mut p], &[&[0.0]], &mut s).unwrap();
        assert_eq!(p[0], 2.0 * 0.95);
    }

    #[test]
    fn quadratic_bowl() {
        let mut theta = vec![1.0];
        let mut s = OptimizerState::new(0.1, 1.0);
        for _ in 0..200 {
            let g = [2.0 * theta[0]];
            adam_step(&mut [&mut theta], &[&g], &mut s).unwrap();
        }
        assert!(theta[0].abs() < 1e-2, "{}", theta[0]);
    }

    #[test]
    fn non_finite_gradient_skips() {
        let mut p = vec![1.0];
        let mut s = OptimizerState::default();
        let err = adam_step(&mut [&mut p], &[&[f64::NAN]], &mut s).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
        assert_eq!((p[0], s.step), (1.0, 0));
    }

    #[test]
    fn decay_schedule() {
        let mut s = OptimizerState::new(1e-3, 0.97);
        s.epoch = 2;
        assert!((s.learning_rate() - 1e-3 * 0.97 * 0.97).abs() < 1e-18);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![1.0];
        let mut s = OptimizerState::default();
        assert!(adam_step(&mut [&mut p], &[&[1.0, 2.0]], &mut s).is_err());
        adam_step(&mut [&mut p], &[&[1.0]], &mut s).unwrap();
        let mut q = vec![1.0, 2.0];
        assert!(adam_step(&mut [&mut q], &[&[1.0, 2.0]], &mut s).is_err());
    }
}
