//! Numerical core for probing temporal dependence in video summarization
//! benchmarks.
//!
//! Everything here is pure computation over in-memory data: ground-truth
//! construction, shot remapping and cross-validation splits, the five
//! temporal perturbation strategies, a small dense neural stack with
//! analytic gradients, the three frame scorers, rank-correlation evaluation,
//! the training/evaluation protocol and the dataset introspection matrices.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the parallel
//! runner and the command line live in the `temporal-probe` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dataset;
mod error;
pub mod eval;
pub mod harness;
pub mod models;
pub mod nn;
pub mod perturb;
pub mod rng;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;

pub mod prelude {
    pub use crate::dataset::{Dataset, DatasetStyle, SplitPlan, VideoRecord};
    pub use crate::eval::{Correlation, VideoEvalResult};
    pub use crate::harness::{ExperimentConfig, Paradigm, RunReport};
    pub use crate::models::{ScorerConfig, ScorerKind, ScorerModel};
    pub use crate::perturb::{Permutation, ShuffleSpec, Strategy};
    pub use crate::{Error, Result, Tensor};
}
