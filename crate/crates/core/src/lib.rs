//! Nonparametric regression on a graph skeleton of the covariates.

pub mod builder;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod model;
pub mod par;
pub mod penalty;
pub mod regress;
pub mod types;

pub use error::{Result, SkelError};
pub use par::Execution;
