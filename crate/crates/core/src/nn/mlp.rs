//! Layer stacks with cached forward passes and reverse-mode gradients.

use rand::Rng;

use super::layer::{Activation, Dense, DenseGrad};
use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Values cached by [`Mlp::forward_trace`] for the backward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MlpTrace {
    /// Input to each layer.
    pub inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pub pre: Vec<Matrix>,
    /// Output of each layer.
    pub outputs: Vec<Matrix>,
}

impl MlpTrace {
    pub fn output(&self) -> Option<&Matrix> {
        self.outputs.last()
    }

    /// Keeps only the given rows of every cached matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let sel = |v: &Vec<Matrix>| v.iter().map(|m| m.select_rows(idx)).collect();
        Self {
            inputs: sel(&self.inputs),
            pre: sel(&self.pre),
            outputs: sel(&self.outputs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub layers: Vec<DenseGrad>,
}

impl MlpGrad {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp.layers.iter().map(DenseGrad::zeros_like).collect(),
        }
    }

    /// Gradient slices in the same order as [`Mlp::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|g| [g.weights.as_slice(), g.biases.as_slice()])
            .collect()
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.layers {
            g.weights.as_mut_slice().iter_mut().for_each(|v| *v *= s);
            g.biases.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn add(&mut self, other: &MlpGrad) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.as_mut_slice().iter_mut().zip(b.weights.as_slice()) {
                *x += y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += y;
            }
        }
    }
}

impl Mlp {
    /// Builds `widths[0] → … → widths[last]` with `hidden` activations on
    /// every layer but the last, which uses `output`.
    pub fn new(widths: &[usize], hidden: Activation, output: Activation, rng: &mut impl Rng) -> Self {
        let n = widths.len().saturating_sub(1);
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::init(widths[i], widths[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn in_width(&self) -> usize {
        self.layers.first().map_or(0, Dense::in_width)
    }

    pub fn out_width(&self) -> usize {
        self.layers.last().map_or(0, Dense::out_width)
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.in_width()];
        w.extend(self.layers.iter().map(Dense::out_width));
        w
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    /// Parameter slices: weights then biases, layer by layer.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
            .collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
            .collect()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for l in &self.layers {
            h = l.forward(&h)?;
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: &Matrix) -> Result<MlpTrace> {
        let mut t = MlpTrace::default();
        let mut h = x.clone();
        for l in &self.layers {
            let z = l.affine(&h)?;
            let y = l.activation.apply(&z);
            t.inputs.push(h);
            t.pre.push(z);
            t.outputs.push(y.clone());
            h = y;
        }
        Ok(t)
    }

    /// Accumulates parameter gradients into `grad` and returns the gradient
    /// with respect to the input.
    pub fn backward_into(&self, trace: &MlpTrace, dy: &Matrix, grad: &mut MlpGrad) -> Result<Matrix> {
        let n = self.layers.len();
        if trace.inputs.len() != n || trace.pre.len() != n || trace.outputs.len() != n || n == 0 {
            return Err(Error::State(format!(
                "backward needs a forward trace for {n} layers, found {}",
                trace.inputs.len()
            )));
        }
        if grad.layers.len() != n {
            return Err(Error::shape("gradient buffer does not match the network"));
        }
        let out = &trace.outputs[n - 1];
        if dy.shape() != out.shape() {
            return Err(Error::shape(format!(
                "loss gradient is {:?}, output is {:?}",
                dy.shape(),
                out.shape()
            )));
        }
        let mut d = dy.clone();
        for i in (0..n).rev() {
            let l = &self.layers[i];
            let dz = l.activation.backward(&trace.pre[i], &trace.outputs[i], &d);
            d = l.backward_affine(&trace.inputs[i], &dz, &mut grad.layers[i])?;
        }
        Ok(d)
    }

    pub fn backward(&self, trace: &MlpTrace, dy: &Matrix) -> Result<(MlpGrad, Matrix)> {
        let mut g = MlpGrad::zeros_like(self);
        let dx = self.backward_into(trace, dy, &mut g)?;
        Ok((g, dx))
    }
}
