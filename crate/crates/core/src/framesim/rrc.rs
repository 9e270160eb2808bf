//! Root-raised-cosine pulse shaping.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{config_err, ConfigError};

/// Unit-energy RRC taps spanning `span` symbols at `oversample` samples per
/// symbol (`span·oversample + 1` taps, centred).
pub fn rrc_taps(rolloff: f64, span: usize, oversample: usize) -> Result<Vec<f64>, ConfigError> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return config_err(format!("roll-off must lie in (0, 1], got {rolloff}"));
    }
    if span * oversample < 1 {
        return config_err("filter needs span·oversample ≥ 1");
    }
    let half = (span * oversample) as f64 / 2.0;
    let b = rolloff;
    let mut taps: Vec<f64> = (0..=span * oversample)
        .map(|i| {
            let t = (i as f64 - half) / oversample as f64;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / PI
            } else if ((4.0 * b * t).abs() - 1.0).abs() < 1e-12 {
                let q = PI / (4.0 * b);
                b * FRAC_1_SQRT_2 * ((1.0 + 2.0 / PI) * q.sin() + (1.0 - 2.0 / PI) * q.cos())
            } else {
                let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
                num / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|h| *h /= norm);
    Ok(taps)
}

/// Full linear convolution (output length `samples.len() + taps.len() − 1`).
pub fn convolve(samples: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if samples.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); samples.len() + taps.len() - 1];
    for (k, &x) in samples.iter().enumerate() {
        if x.re == 0.0 && x.im == 0.0 {
            continue;
        }
        for (o, &h) in out[k..].iter_mut().zip(taps) {
            *o += x * h;
        }
    }
    out
}

/// Filters `samples` with RRC taps built from the given parameters.
pub fn rrc_filter(
    samples: &[Complex64],
    rolloff: f64,
    span: usize,
    oversample: usize,
) -> Result<Vec<Complex64>, ConfigError> {
    Ok(convolve(samples, &rrc_taps(rolloff, span, oversample)?))
}
