//! Energy-detection spatial modulation over Rayleigh MIMO channels.
//!
//! The crate covers the biased-PAM constellation and SM bit mapping, a
//! seeded channel model, four detectors, Monte Carlo error-rate sweeps,
//! series/quadrature evaluation of the analytic error expressions, and an
//! offline emulation of an SDR frame pipeline.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod analytic;
pub mod channel;
pub mod constellation;
pub mod detectors;
pub mod framesim;
pub mod montecarlo;
mod error;
pub mod quad;
pub mod rng;
mod scalar;
pub mod specfun;

pub use error::ConfigError;
pub use scalar::Real;

pub type ConstellationSpec64 = constellation::ConstellationSpec<f64>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type NoiseSpec64 = channel::NoiseSpec<f64>;
pub type SeriesControl64 = specfun::SeriesControl<f64>;
pub type SweepConfig64 = montecarlo::SweepConfig<f64>;
pub type ErrorRateRecord64 = montecarlo::ErrorRateRecord<f64>;
pub type AnalyticParams64 = analytic::AnalyticParams<f64>;
