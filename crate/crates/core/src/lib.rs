//! Approximate posterior matching for pool-based active logistic regression.
//!
//! - [`numkit`]: linear algebra, Gauss–Hermite quadrature, seeded random streams.
//! - [`data`]: CSV loading, synthetic generators, splitting and normalization.
//! - [`logreg`]: MAP fitting and accuracy.
//! - [`posterior`]: variational Gaussian posterior.
//! - [`selection`]: APM-LR and baseline policies.
//! - [`infotheory`]: capacity, mutual information and `W₂` of the logistic channel.
//! - [`harness`]: synchronized trials, metrics and result files.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod harness;
pub mod infotheory;
pub mod labeled;
pub mod logreg;
pub mod numkit;
pub mod posterior;
pub mod selection;

pub use data::{Dataset, Label, SeedSet, SplitDataset, SyntheticKind};
pub use error::{ApmError, Result};
pub use harness::{run_experiment, run_trial, ExperimentConfig, ExperimentResult, TrialRecord};
pub use labeled::LabeledSet;
pub use logreg::{fit_map, MapModel};
pub use posterior::{variational_em, GaussianPosterior};
pub use selection::{PolicyKind, PolicySpec};
