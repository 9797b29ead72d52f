//! Dense layers and activations.

use rand::Rng;

use super::matrix::{gemm, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::format(format!("unknown activation `{s}`"))),
        }
    }

    pub fn apply_scalar(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    pub fn apply(self, z: &Matrix) -> Matrix {
        match self {
            Activation::Identity => z.clone(),
            _ => z.map(|v| self.apply_scalar(v)),
        }
    }

    /// Gradient with respect to the pre-activation `z`, given the output `y`
    /// and the upstream gradient `dy`.
    pub fn backward(self, z: &Matrix, y: &Matrix, dy: &Matrix) -> Matrix {
        let mut dz = dy.clone();
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for (d, &zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
                    if zv <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            Activation::Tanh => {
                for (d, &yv) in dz.as_mut_slice().iter_mut().zip(y.as_slice()) {
                    *d *= 1.0 - yv * yv;
                }
            }
        }
        dz
    }
}

/// Affine map `y = act(x · Wᵀ + b)` with `W` stored out×in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl DenseGrad {
    pub fn zeros_like(layer: &Dense) -> Self {
        Self {
            weights: Matrix::zeros(layer.out_width(), layer.in_width()),
            biases: vec![0.0; layer.out_width()],
        }
    }
}

impl Dense {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::shape(format!(
                "{} biases for {} outputs",
                biases.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    /// Kaiming-uniform for relu layers, Xavier-uniform otherwise; zero biases.
    pub fn init(input: usize, output: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let bound = match activation {
            Activation::Relu => (6.0 / input as f64).sqrt(),
            _ => (6.0 / (input + output) as f64).sqrt(),
        };
        let data = (0..input * output)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Self {
            weights: Matrix::from_vec(output, input, data).expect("sized above"),
            biases: vec![0.0; output],
            activation,
        }
    }

    pub fn zeroed(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(output, input),
            biases: vec![0.0; output],
            activation,
        }
    }

    pub fn in_width(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_width(&self) -> usize {
        self.weights.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.as_slice().len() + self.biases.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.biases.iter().all(|v| v.is_finite())
    }

    /// Pre-activation `x · Wᵀ + b`.
    pub fn affine(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_width() {
            return Err(Error::shape(format!(
                "layer expects width {}, got {}",
                self.in_width(),
                x.cols()
            )));
        }
        let mut z = Matrix::zeros(x.rows(), self.out_width());
        gemm(1.0, x, false, &self.weights, true, 0.0, &mut z)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.biases) {
                *v += b;
            }
        }
        Ok(z)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.activation.apply(&self.affine(x)?))
    }

    /// Accumulates parameter gradients for the affine part given `dz`, the
    /// gradient at the pre-activation, and returns the input gradient.
    pub fn backward_affine(&self, x: &Matrix, dz: &Matrix, grad: &mut DenseGrad) -> Result<Matrix> {
        if dz.cols() != self.out_width() || dz.rows() != x.rows() {
            return Err(Error::shape("gradient shape does not match layer output"));
        }
        gemm(1.0, dz, true, x, false, 1.0, &mut grad.weights)?;
        for r in 0..dz.rows() {
            for (g, d) in grad.biases.iter_mut().zip(dz.row(r)) {
                *g += d;
            }
        }
        let mut dx = Matrix::zeros(x.rows(), self.in_width());
        gemm(1.0, dz, false, &self.weights, false, 0.0, &mut dx)?;
        Ok(dx)
    }
}
