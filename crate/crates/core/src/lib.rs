//! Allocation-only core of the mimax POS inducer.
//!
//! Everything here is pure computation over in-memory data: information
//! theoretic primitives, corpus windows and minibatching, the context/word
//! classifiers with hand-written backpropagation, the two mutual information
//! objectives, the exact stochastic-gradient bias audit, Brown clustering and
//! the unsupervised tagging metrics. File formats, the training driver and the
//! CLI live in the `mimax` crate.
#![no_std]

extern crate alloc;

pub mod bias_audit;
pub mod brown;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod infotheory;
pub mod model;
pub mod objectives;
pub mod optim;
pub mod synth;

mod math;

pub use error::{Error, Result};
