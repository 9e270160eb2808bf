//! Special-function kernels: log-domain Bessel I, regularized incomplete
//! gamma, generalized Marcum Q and the Gauss hypergeometric function.
//!
//! Everything here is a pure function of its arguments.

mod bessel;
mod gamma;
mod hyper;
mod marcum;

pub use bessel::log_bessel_i;
pub use gamma::{
    ln_gamma, ln_poisson_weight, lower_inc_gamma_reg, regularized_gamma, upper_inc_gamma_reg,
    GammaPair,
};
pub use hyper::{gauss_2f1, ln_gauss_2f1, SignedLog};
pub use marcum::{marcum_q, marcum_q_series, marcum_symmetric_residual, marcum_symmetric_term, MarcumSeries};

use crate::Real;
use thiserror::Error;

/// Truncation policy for the infinite sums used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl<T> {
    pub max_terms: usize,
    pub rel_tol: T,
}

impl<T: Real> SeriesControl<T> {
    pub fn new(max_terms: usize, rel_tol: T) -> Result<Self, SpecFunError> {
        if max_terms == 0 {
            return Err(SpecFunError::Domain("max_terms must be at least 1".into()));
        }
        if !(rel_tol > T::zero() && rel_tol < T::one()) {
            return Err(SpecFunError::Domain(format!(
                "rel_tol must lie in (0, 1), got {rel_tol}"
            )));
        }
        Ok(Self { max_terms, rel_tol })
    }

    /// A budget large enough that truncation never binds for the parameter
    /// ranges the crate works with.
    pub fn converged() -> Self {
        Self {
            max_terms: 200_000,
            rel_tol: T::epsilon() * T::lit(16.0),
        }
    }
}

impl<T: Real> Default for SeriesControl<T> {
    fn default() -> Self {
        Self {
            max_terms: 20,
            rel_tol: T::lit(1e-12),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecFunError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what} did not converge within {terms} terms (partial value {partial:e})")]
    NotConverged {
        what: &'static str,
        terms: usize,
        partial: f64,
    },
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T, SpecFunError> {
    Err(SpecFunError::Domain(msg.into()))
}
