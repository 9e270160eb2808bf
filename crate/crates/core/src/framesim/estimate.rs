//! Least-squares channel estimation from sequential per-antenna training.

use ndarray::Array2;
use num_complex::Complex64;

use super::FrameError;

/// Training-based estimates for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEstimate {
    /// ĥ_{i,n}, N_r × N_t.
    pub gains: Array2<Complex64>,
    /// β̂_{i,n} = |ĥ_{i,n}|².
    pub magnitudes: Array2<f64>,
    /// Residual variance of r − ĥ·x over the training slots, when at least
    /// two slots per antenna leave degrees of freedom.
    pub noise_variance: Option<f64>,
}

/// ĥ_{i,n} = Σₜ x̄ₜ rᵢₜ / Σₜ|xₜ|² over the slots where antenna n trains.
///
/// `rx_training` is N_r rows of symbol-spaced receive samples and
/// `known_training` N_t rows of the transmitted training grid (zero where an
/// antenna is idle), all of the same length.
pub fn ls_channel_estimate(
    rx_training: &[Vec<Complex64>],
    known_training: &[Vec<Complex64>],
) -> Result<ChannelEstimate, FrameError> {
    let n_r = rx_training.len();
    let n_t = known_training.len();
    let len = known_training.first().map_or(0, Vec::len);
    if n_r == 0 || n_t == 0 {
        return Err(FrameError::Degenerate("training needs at least one stream on each side".into()));
    }
    if rx_training.iter().chain(known_training).any(|row| row.len() != len) {
        return Err(FrameError::Degenerate("training rows differ in length".into()));
    }
    let mut gains = Array2::from_elem((n_r, n_t), Complex64::new(0.0, 0.0));
    let mut slots = 0usize;
    for (n, x) in known_training.iter().enumerate() {
        let energy: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        if energy <= 0.0 {
            return Err(FrameError::ZeroTraining { antenna: n });
        }
        slots += x.iter().filter(|v| v.norm_sqr() > 0.0).count();
        for (i, r) in rx_training.iter().enumerate() {
            let corr: Complex64 = x.iter().zip(r).map(|(xt, rt)| xt.conj() * rt).sum();
            gains[[i, n]] = corr / energy;
        }
    }
    // Slots where nobody trains carry noise only and are left out.
    let dof = slots.saturating_sub(n_t) * n_r;
    let noise_variance = (dof > 0).then(|| {
        let mut ss = 0.0;
        for (i, r) in rx_training.iter().enumerate() {
            for t in 0..len {
                let mut fit = Complex64::new(0.0, 0.0);
                let mut active = false;
                for (n, x) in known_training.iter().enumerate() {
                    if x[t].norm_sqr() > 0.0 {
                        fit += gains[[i, n]] * x[t];
                        active = true;
                    }
                }
                if active {
                    ss += (r[t] - fit).norm_sqr();
                }
            }
        }
        ss / dof as f64
    });
    let magnitudes = gains.mapv(|h| h.norm_sqr());
    Ok(ChannelEstimate { gains, magnitudes, noise_variance })
}

/// β̂ only; see [`ls_channel_estimate`].
pub fn ls_channel_magnitudes(
    rx_training: &[Vec<Complex64>],
    known_training: &[Vec<Complex64>],
) -> Result<Array2<f64>, FrameError> {
    Ok(ls_channel_estimate(rx_training, known_training)?.magnitudes)
}
