//! Variance-ratio tests for the integration order of functional time series.
//!
//! The crate is organized bottom-up:
//!
//! * [`funcspace`]: grids, grid functions, panels, operators, eigenpairs;
//! * [`fracdiff`]: Type-II fractional differencing and cumulation;
//! * [`lrcov`]: partial-sum and Bartlett long-run covariance operators;
//! * [`vtests`]: V statistics, limit distributions, the sequential rule;
//! * [`dgp`]: the simulation design used in the Monte Carlo studies;
//! * [`ingest`] and [`transform`]: CSV panels and pre-test transforms.
//!
//! Interchangeable algorithms (eigen-solvers, bandwidth rules, transforms)
//! are registered by name in a [`registry::Registry`] so front ends can
//! select them at runtime.

pub mod dgp;
pub mod error;
pub mod fracdiff;
pub mod funcspace;
pub mod ingest;
pub mod lrcov;
pub mod registry;
pub mod rng;
pub mod transform;
pub mod vtests;

pub use error::{Error, Result};
pub use funcspace::{FunctionalPanel, Grid, GridFunction, GridOperator};
