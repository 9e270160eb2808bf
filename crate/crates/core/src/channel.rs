//! Flat Rayleigh MIMO channel, AWGN and the energy-detector front end.
//!
//! Complex variances are totals: 𝒞𝒩(0, σ²) has σ²/2 per real dimension.
//! Sweeps define SNR as E_av·σ_h²/σ_w².

use ndarray::Array2;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::constellation::{ConstellationSpec, SmSymbol};
use crate::error::{config_err, ConfigError};
use crate::Real;

/// Channel gains h_{i,n} (receive i, transmit n) and their squared magnitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization<T> {
    gains: Array2<Complex<T>>,
    sq_magnitudes: Array2<T>,
    sigma_h_sq: T,
}

impl<T: Real> ChannelRealization<T> {
    pub fn from_gains(gains: Array2<Complex<T>>, sigma_h_sq: T) -> Self {
        let sq_magnitudes = gains.mapv(|h| h.norm_sqr());
        Self { gains, sq_magnitudes, sigma_h_sq }
    }

    pub fn zeros(n_r: usize, n_t: usize, sigma_h_sq: T) -> Self {
        Self::from_gains(Array2::from_elem((n_r, n_t), Complex::new(T::zero(), T::zero())), sigma_h_sq)
    }

    /// Redraw every entry in place from 𝒞𝒩(0, σ_h²).
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let sd = (self.sigma_h_sq * T::lit(0.5)).sqrt();
        for (h, b) in self.gains.iter_mut().zip(self.sq_magnitudes.iter_mut()) {
            *h = complex_normal(rng, sd);
            *b = h.norm_sqr();
        }
    }

    pub fn gains(&self) -> &Array2<Complex<T>> {
        &self.gains
    }

    pub fn sq_magnitudes(&self) -> &Array2<T> {
        &self.sq_magnitudes
    }

    pub fn sigma_h_sq(&self) -> T {
        self.sigma_h_sq
    }

    pub fn n_r(&self) -> usize {
        self.gains.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.gains.ncols()
    }
}

/// Additive noise level σ_w² (total complex variance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec<T> {
    sigma_w_sq: T,
}

impl<T: Real> NoiseSpec<T> {
    pub fn new(sigma_w_sq: T) -> Result<Self, ConfigError> {
        if !(sigma_w_sq > T::zero()) || !sigma_w_sq.is_finite() {
            return config_err(format!("noise variance must be positive and finite, got {sigma_w_sq}"));
        }
        Ok(Self { sigma_w_sq })
    }

    /// Zero-noise link, for loopback checks.
    pub fn noiseless() -> Self {
        Self { sigma_w_sq: T::zero() }
    }

    /// σ_w² giving the requested SNR = E_av·σ_h²/σ_w².
    pub fn for_snr_db(spec: &ConstellationSpec<T>, sigma_h_sq: T, snr_db: T) -> Result<Self, ConfigError> {
        Self::new(noise_variance_for_snr(spec.average_energy(), sigma_h_sq, snr_db))
    }

    pub fn sigma_w_sq(&self) -> T {
        self.sigma_w_sq
    }
}

pub fn noise_variance_for_snr<T: Real>(e_av: T, sigma_h_sq: T, snr_db: T) -> T {
    e_av * sigma_h_sq / T::lit(10.0).powf(snr_db / T::lit(10.0))
}

/// One draw with independent 𝒩(0, sd²) real and imaginary parts.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, sd: T) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re) * sd, T::lit(im) * sd)
}

pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    n_r: usize,
    n_t: usize,
    sigma_h_sq: T,
    rng: &mut R,
) -> Result<ChannelRealization<T>, ConfigError> {
    if n_r == 0 || n_t == 0 {
        return config_err("channel dimensions must be at least 1");
    }
    if !(sigma_h_sq > T::zero()) {
        return config_err(format!("sigma_h_sq must be positive, got {sigma_h_sq}"));
    }
    let mut ch = ChannelRealization::zeros(n_r, n_t, sigma_h_sq);
    ch.resample(rng);
    Ok(ch)
}

/// rᵢ = h_{i,n}·s_m + wᵢ written into `out` (length N_r).
pub fn transmit_into<T: Real, R: Rng + ?Sized>(
    sym: SmSymbol,
    spec: &ConstellationSpec<T>,
    ch: &ChannelRealization<T>,
    noise: &NoiseSpec<T>,
    rng: &mut R,
    out: &mut [Complex<T>],
) {
    debug_assert_eq!(out.len(), ch.n_r());
    let s = spec.amplitudes()[sym.symbol];
    let sd = (noise.sigma_w_sq * T::lit(0.5)).sqrt();
    let column = ch.gains.column(sym.antenna);
    for (r, h) in out.iter_mut().zip(column.iter()) {
        let w = if sd > T::zero() { complex_normal(rng, sd) } else { Complex::new(T::zero(), T::zero()) };
        *r = h.scale(s) + w;
    }
}

pub fn transmit<T: Real, R: Rng + ?Sized>(
    sym: SmSymbol,
    spec: &ConstellationSpec<T>,
    ch: &ChannelRealization<T>,
    noise: &NoiseSpec<T>,
    rng: &mut R,
) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); ch.n_r()];
    transmit_into(sym, spec, ch, noise, rng, &mut out);
    out
}

/// yᵢ = |rᵢ|².
pub fn energy_observations<T: Real>(r: &[Complex<T>]) -> Vec<T> {
    r.iter().map(|v| v.norm_sqr()).collect()
}
