//! Hierarchical generalized transformation (HGT) models for mixed Gaussian,
//! binomial and count responses.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`samplers`]: seedable random streams, random-variate primitives and a
//!   univariate slice sampler.
//! * [`transform`]: conjugate transformation densities, exact draws of the
//!   transformed data and the hyperparameter updates.
//! * [`basis`]: covariate matrices, Moran's I eigenvector bases and
//!   thin-plate spline bases.
//! * [`sme`]: the spatio-temporal mixed effects model used as the built-in
//!   preferred model.
//! * [`engine`]: the composite sampler, the validation-link fit and
//!   forecasting.
//! * [`diagnostics`]: summaries, residual intervals, RMSE, R-hat, coverage.
//! * [`pipeline`]: the day-split fit used by the `fit` command.
//! * [`sim`]: the Friedman simulation design and benchmark harness.
//! * [`cli`]: configuration, ingestion and the `hgt` command-line pipeline.

pub mod basis;
pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod pipeline;
pub mod samplers;
pub mod sim;
pub mod sme;
pub mod transform;

pub use data::{MultiResponseDataset, Observation, ResponseKind};
pub use error::{HgtError, Result};
