//! Blended-wing-body surrogate pipeline: parametric planforms and sampled
//! surfaces, force integration, dataset formats, a point-cloud parameter
//! regressor and a FiLM-conditioned field network.
//!
//! | module | contents |
//! |---|---|
//! | [`geometry`] | planform parameters, CST sections, surface sampling |
//! | [`aero`] | ISA atmosphere, body and wind frames, force and moment integration |
//! | [`dataset`] | case records, native container, VTK, manifest, LHS, splits, synthetic oracle |
//! | [`nn`] | matrices, dense layers, MLPs, max pooling, MSE, Adam, checkpoints |
//! | [`pointnet`] | permutation-invariant parameter regressor |
//! | [`film`] | FiLM field network and its hypernetwork |
//! | [`metrics`] | field errors, R², integrated-coefficient correlation |
//! | [`pipeline`] | corpora, training and evaluation glue |
//! | [`cli`] | the `bwb` command |
//!
//! Runnable walkthroughs live in `examples/`: `geometry`, `integrate_forces`,
//! `dataset_io`, `sampling_and_splits`, `pointnet_regressor`,
//! `film_surrogate`, `metrics` and `cli_pipeline`.

pub mod aero;
pub mod cli;
pub mod dataset;
mod error;
pub mod film;
pub mod geometry;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod pointnet;

pub use error::{Error, Result};
