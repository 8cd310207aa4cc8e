//! Gradient training of relaxed trees: the scalar tape, the composite loss,
//! Adam, and the per-tree training loop.

mod adam;
mod loss;
mod tape;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{
    loss_01, nrmse, population_std, total_loss, LossConfig, LossParts, NONFINITE_SENTINEL,
};
pub(crate) use loss::{check_target, sanitize};
pub use tape::{Tape, Var};
pub use train::{
    backward, record_loss, train_dst, write_trajectory_csv, Gradients, LossTape, TrainConfig,
    TrainOutcome,
};
