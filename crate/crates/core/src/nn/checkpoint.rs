//! Checkpoints: named layer stacks, optimizer state and free-form metadata
//! stored in the block container.

use std::path::Path;

use super::adam::OptimizerState;
use super::layer::{Activation, Dense};
use super::matrix::Matrix;
use super::mlp::Mlp;
use crate::dataset::Container;
use crate::error::{Error, Result};

pub const CHECKPOINT_KIND: &str = "checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Parameters plus optimizer state for one model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelState {
    /// Model family, e.g. `pointnet` or `film`.
    pub model: String,
    /// Hyperparameters, seed, epoch, normalization ranges and the like.
    pub meta: Vec<(String, String)>,
    pub networks: Vec<(String, Mlp)>,
    pub optimizer: Option<OptimizerState>,
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl ModelState {
    pub fn new(model: &str) -> Self {
        Self {
            model: model.to_string(),
            ..Default::default()
        }
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.meta.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.meta.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require_meta(&self, key: &str) -> Result<&str> {
        self.meta(key)
            .ok_or_else(|| Error::format(format!("{} checkpoint is missing `{key}`", self.model)))
    }

    pub fn meta_f64s(&self, key: &str) -> Result<Vec<f64>> {
        self.require_meta(key)?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::format(format!("`{key}` holds `{t}`"))))
            .collect()
    }

    pub fn network(&self, name: &str) -> Result<&Mlp> {
        self.networks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::format(format!("{} checkpoint has no network `{name}`", self.model)))
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::new(CHECKPOINT_KIND, CHECKPOINT_VERSION);
        c.set("model", &self.model);
        for (k, v) in &self.meta {
            c.set(&format!("meta.{k}"), v);
        }
        c.set("networks", join(self.networks.iter().map(|(n, _)| n)));
        for (name, mlp) in &self.networks {
            c.set(&format!("net.{name}.widths"), join(mlp.widths()));
            c.set(
                &format!("net.{name}.activations"),
                join(mlp.layers.iter().map(|l| l.activation.name())),
            );
            for (i, l) in mlp.layers.iter().enumerate() {
                c.push_block(&format!("{name}.{i}.w"), l.weights.as_slice().to_vec());
                c.push_block(&format!("{name}.{i}.b"), l.biases.clone());
            }
        }
        if let Some(o) = &self.optimizer {
            c.set("opt.step", o.step);
            c.set("opt.epoch", o.epoch);
            c.set("opt.lr0", o.lr0);
            c.set("opt.decay", o.decay);
            c.set("opt.beta1", o.beta1);
            c.set("opt.beta2", o.beta2);
            c.set("opt.eps", o.eps);
            c.set("opt.weight_decay", o.weight_decay);
            c.set("opt.slices", o.first_moment.len());
            for (j, (m, v)) in o.first_moment.iter().zip(&o.second_moment).enumerate() {
                c.push_block(&format!("opt.m.{j}"), m.clone());
                c.push_block(&format!("opt.v.{j}"), v.clone());
            }
        }
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let mut s = ModelState::new(c.require("model")?);
        for (k, v) in &c.meta {
            if let Some(k) = k.strip_prefix("meta.") {
                s.meta.push((k.to_string(), v.clone()));
            }
        }
        for name in c.require("networks")?.split_whitespace() {
            let widths: Vec<usize> = c
                .require(&format!("net.{name}.widths"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::format(format!("bad width `{t}`"))))
                .collect::<Result<_>>()?;
            let acts: Vec<Activation> = c
                .require(&format!("net.{name}.activations"))?
                .split_whitespace()
                .map(Activation::parse)
                .collect::<Result<_>>()?;
            if widths.len() != acts.len() + 1 {
                return Err(Error::format(format!("network `{name}`: widths and activations disagree")));
            }
            let mut layers = Vec::with_capacity(acts.len());
            for (i, act) in acts.into_iter().enumerate() {
                let w = c.require_block(&format!("{name}.{i}.w"))?.to_vec();
                let b = c.require_block(&format!("{name}.{i}.b"))?.to_vec();
                let w = Matrix::from_vec(widths[i + 1], widths[i], w)
                    .map_err(|_| Error::Length(format!("{name}.{i}.w has the wrong size")))?;
                let layer = Dense::new(w, b, act)
                    .map_err(|_| Error::Length(format!("{name}.{i}.b has the wrong size")))?;
                layers.push(layer);
            }
            s.networks.push((name.to_string(), Mlp { layers }));
        }
        if c.get("opt.step").is_some() {
            let int = |k: &str| -> Result<u64> {
                c.require(k)?
                    .parse()
                    .map_err(|_| Error::format(format!("`{k}` is not an integer")))
            };
            let mut o = OptimizerState::new(c.require_f64("opt.lr0")?, c.require_f64("opt.decay")?);
            o.step = int("opt.step")?;
            o.epoch = int("opt.epoch")?;
            o.beta1 = c.require_f64("opt.beta1")?;
            o.beta2 = c.require_f64("opt.beta2")?;
            o.eps = c.require_f64("opt.eps")?;
            if c.get("opt.weight_decay").is_some() {
                o.weight_decay = c.require_f64("opt.weight_decay")?;
            }
            for j in 0..c.require_usize("opt.slices")? {
                o.first_moment.push(c.require_block(&format!("opt.m.{j}"))?.to_vec());
                o.second_moment.push(c.require_block(&format!("opt.v.{j}"))?.to_vec());
            }
            s.optimizer = Some(o);
        }
        Ok(s)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_container().to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_container(&Container::from_bytes(bytes, CHECKPOINT_KIND, CHECKPOINT_VERSION)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::adam::adam_step;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = Mlp::new(&[3, 8, 2], Activation::Relu, Activation::Identity, &mut rng);
        let b = Mlp::new(&[2, 4], Activation::Tanh, Activation::Tanh, &mut rng);
        let mut opt = OptimizerState::default();
        let g: Vec<Vec<f64>> = a.params().iter().map(|p| p.iter().map(|v| v * 0.1).collect()).collect();
        let gs: Vec<&[f64]> = g.iter().map(Vec::as_slice).collect();
        adam_step(&mut a.params_mut(), &gs, &mut opt).unwrap();

        let mut s = ModelState::new("test");
        s.set_meta("seed", 3);
        s.set_meta("bounds", "0 1 0.5");
        s.networks = vec![("a".into(), a.clone()), ("b".into(), b)];
        s.optimizer = Some(opt);
        let bytes = s.to_bytes();
        let back = ModelState::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_bytes(), bytes);
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3]]).unwrap();
        assert_eq!(back.network("a").unwrap().forward(&x).unwrap(), a.forward(&x).unwrap());
        assert_eq!(back.meta_f64s("bounds").unwrap(), vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn missing_network() {
        let s = ModelState::new("x");
        assert!(s.network("trunk").is_err());
        let c = s.to_container();
        let back = ModelState::from_container(&c).unwrap();
        assert!(back.networks.is_empty() && back.optimizer.is_none());
    }
}
