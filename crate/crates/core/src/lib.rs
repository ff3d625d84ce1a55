//! Task-driven dictionary learning.
//!
//! Sparse codes `alpha*(x, D)` from an elastic-net problem serve as features
//! for a supervised task. The dictionary `D` (and optionally a linear input
//! transform `Z`) is trained jointly with the task parameters `W` by projected
//! stochastic gradient descent, using closed-form gradients that flow through
//! the sparse coding step.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! threaded helpers live in the `taskdict` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod dictionary;
pub mod elastic_net;
pub mod error;
pub mod grad;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod tasks;
pub mod trainer;

pub use dictionary::Dictionary;
pub use elastic_net::{ElasticNetParams, SparseCode};
pub use error::{Error, Result};
pub use losses::{Label, TaskLoss};
pub use model::Model;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
