//! Minimal dense-network substrate: layers, max pooling, MSE, reverse-mode
//! gradients, Adam and checkpoints. All arithmetic is `f64`.

mod adam;
mod checkpoint;
mod layer;
mod log;
mod loss;
mod matrix;
mod mlp;
mod pool;

pub use adam::{adam_step, OptimizerState};
pub use checkpoint::{ModelState, CHECKPOINT_KIND, CHECKPOINT_VERSION};
pub use layer::{Activation, Dense, DenseGrad};
pub use log::{EpochRecord, TrainingLog};
pub use loss::mse;
pub use matrix::{gemm, Matrix};
pub use mlp::{Mlp, MlpGrad, MlpTrace};
pub use pool::{max_pool_backward, max_pool_over_rows};
