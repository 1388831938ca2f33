//! Feature-importance based feature selection and adjustment for few-shot
//! linear probing.
//!
//! The crate is organised around a small pipeline:
//!
//! * [`data`] holds labelled feature sets, episodic task sampling and seeding.
//! * [`stats`] computes class statistics, the standard normal CDF and the
//!   per-dimension importance `|mu_1 - mu_2| / (sigma_1 + sigma_2)`.
//! * [`select`] ranks dimensions, hard-masks them and builds soft-mask scales.
//! * [`classify`] fits nearest-centroid, logistic and exact 0-1 classifiers.
//! * [`gaussian`] is the two-class diagonal Gaussian bench with closed-form
//!   errors and the redundancy theorem checks.
//! * [`harness`] runs the episodic Monte Carlo experiments.
//! * [`storage`] reads and writes FFSB feature files, spec files and results.

pub mod classify;
pub mod data;
pub mod error;
pub mod gaussian;
pub mod harness;
pub mod runner;
pub mod select;
pub mod stats;
pub mod storage;

pub use classify::{ClassifierKind, FitConfig, LinearClassifier};
pub use data::{derive_task_seed, sample_episode, Episode, LabeledFeatureSet, SeedSpec};
pub use error::{Error, Result};
pub use gaussian::GaussianTaskSpec;
pub use stats::{ClassStats, ImportanceVector, Provenance, VariancePolicy};
