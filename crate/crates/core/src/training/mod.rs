//! Learning the modules from text.
//!
//! Three objectives are available and can be mixed in one run:
//!
//! - a corruption ranking loss: bracket a genuine window, replace one word at
//!   random, and require every covering node of the genuine tree to outscore
//!   the corresponding corrupted node by a margin;
//! - a reconstruction loss that trains dissociation to invert association on
//!   every internal node;
//! - a structured hinge against gold bracketings.
//!
//! Training starts with short windows over a small vocabulary and grows both
//! through the stages of a curriculum.

mod config;
mod eval;
mod steps;
mod train;

pub use config::{Stage, TrainConfig, TOY_CONFIG};
pub use eval::{covering_scores, mean_reconstruction_error, ranking_accuracy, reconstruction_error};
pub use steps::{
    corrupt, random_bracketing, ranking_loss, recon_loss, recon_step, sgd_apply, structured_hinge,
    sup_step, unsup_step, CorruptedPair, StepOutput, UnsupStep,
};
pub use train::{train, EpochReport, GoldSentence, TrainData, TrainReport};
