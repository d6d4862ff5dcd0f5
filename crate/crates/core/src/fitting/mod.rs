//! Damped least squares for the four analysis models and κ extraction.
//!
//! The solver works on an internal coordinate per parameter (identity or
//! squared, the latter keeping physical parameters non-negative), while
//! covariances are always reported for the physical parameters.

mod dataset;
mod fits;
mod kappa;
mod models;
mod solver;

pub use dataset::{DataPoint, Dataset};
pub use fits::{
    fit_bose_einstein, fit_linear_temperature, fit_power_decomposition, fit_sinc_spectrum, BoseEinsteinSetup, Fixed,
};
pub use kappa::{extract_kappa, ChannelResponse, KappaEstimate, UncertaintyTerm};
pub use models::{BoseEinsteinModel, LinearModel, PowerModel, SincModel};
pub use solver::{
    analytic_jacobian, finite_difference_jacobian, jacobian_discrepancy, least_squares, residual_orthogonality,
    FitModel, FitOptions, FitResult, Transform,
};

use crate::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid data: {0}")]
    Data(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model produced a non-finite value")]
    NonFinite,
    #[error("normal matrix is singular; parameters are not identifiable from these data")]
    Singular,
    #[error("no convergence after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("power fit did not converge; cannot extract kappa")]
    UnconvergedInput,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::quadrature::QuadratureError> for FitError {
    fn from(e: crate::quadrature::QuadratureError) -> Self {
        FitError::Model(e.into())
    }
}
