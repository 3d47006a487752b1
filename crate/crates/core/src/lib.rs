//! Survival modelling toolkit for pedestrian wait-time studies.
//!
//! Everything in this crate is pure computation over in-memory data and builds
//! without `std` (only `alloc` is required). File formats, the command line and
//! anything touching the filesystem live in the `pedwait` companion crate.
//!
//! Module map:
//!
//! - [`dataset`]: covariate schema, encoding, standardization, VIF screening, splits
//! - [`survival`]: Cox partial likelihood and Newton fit, Wald summary, Breslow,
//!   Kaplan-Meier, concordance index, discrete-time logistic baseline
//! - [`relief`]: RReliefF feature weights
//! - [`deep`]: feed-forward hazard network, Cox loss, backprop, training, random search
//! - [`explain`]: exact and sampled Shapley attributions, summary and interaction tables
//! - [`doe`]: Fisher information for censored exponential models and D-optimal annealing
//! - [`braking`]: staged braking kinematics
//! - [`cohort`]: synthetic crossing cohorts driven by a declared hazard
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod braking;
pub mod cohort;
pub mod dataset;
pub mod deep;
pub mod doe;
pub mod error;
pub mod explain;
pub mod linalg;
pub mod relief;
pub mod rng;
pub mod survival;

pub use dataset::{Column, ColumnRole, CovariateEntry, CovariateKind, CovariateSchema, Dataset, Instance};
pub use error::{Error, Result};
