//! Learned vector representations for words and phrases built from three
//! trainable modules: an association module that merges two vectors into one,
//! a dissociation module that splits one vector back into two, and a saliency
//! scorer that rates how meaningful a merged vector is.
//!
//! The crate covers the whole loop:
//!
//! - [`corpus`]: tokenization, vocabularies and training windows;
//! - [`model`]: parameters, forward passes, reverse-mode gradients, model files;
//! - [`parser`]: greedy, shift-reduce beam and exhaustive bracketing;
//! - [`training`]: corruption ranking, reconstruction and supervised losses
//!   with SGD and a curriculum;
//! - [`analysis`]: neighbor tables and bracketing F1;
//! - [`toygrammar`]: a small weighted grammar that generates corpora with gold
//!   trees.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod analysis;
pub mod corpus;
mod error;
pub mod model;
pub mod parser;
pub mod toygrammar;
pub mod training;

pub use error::{Error, Result};
