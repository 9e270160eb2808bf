//! Schmidl–Cox timing: find where a window of the received signal is most
//! correlated with the window that follows it.

use num_complex::Complex64;

use super::FrameError;

/// Timing metric over every start index d,
/// |P(d)|² / R(d)² with P(d) = Σᵢ Σₖ r̄ᵢ[d+k]·rᵢ[d+k+L] and
/// R(d) = ½ Σᵢ Σₖ (|rᵢ[d+k]|² + |rᵢ[d+k+L]|²), summed over receive streams.
/// By Cauchy–Schwarz the metric lies in [0, 1].
pub fn timing_metric(rx: &[Vec<Complex64>], half_len: usize) -> Result<Vec<f64>, FrameError> {
    let len = rx.iter().map(Vec::len).min().unwrap_or(0);
    if rx.is_empty() || half_len == 0 || len <= 2 * half_len {
        return Err(FrameError::Degenerate(format!(
            "need more than {} samples per stream for half length {half_len}, got {len}",
            2 * half_len
        )));
    }
    if rx.iter().all(|s| s[..len].iter().all(|z| z.norm_sqr() == 0.0)) {
        return Err(FrameError::Degenerate("received signal is identically zero".into()));
    }
    let l = half_len;
    let positions = len - 2 * l + 1;
    let mut p = Complex64::new(0.0, 0.0);
    let mut r = 0.0;
    for s in rx {
        for k in 0..l {
            p += s[k].conj() * s[k + l];
            r += 0.5 * (s[k].norm_sqr() + s[k + l].norm_sqr());
        }
    }
    let mut out = Vec::with_capacity(positions);
    for d in 0..positions {
        out.push(if r > 0.0 { (p.norm_sqr() / (r * r)).min(1.0) } else { 0.0 });
        if d + 1 == positions {
            break;
        }
        // slide by one; recompute now and then so rounding never accumulates
        if (d + 1) % 4096 == 0 {
            p = Complex64::new(0.0, 0.0);
            r = 0.0;
            for s in rx {
                for k in d + 1..d + 1 + l {
                    p += s[k].conj() * s[k + l];
                    r += 0.5 * (s[k].norm_sqr() + s[k + l].norm_sqr());
                }
            }
        } else {
            for s in rx {
                p += s[d + l].conj() * s[d + 2 * l] - s[d].conj() * s[d + l];
                r += 0.5 * (s[d + 2 * l].norm_sqr() - s[d].norm_sqr());
            }
            r = r.max(0.0);
        }
    }
    Ok(out)
}

/// Start index of the best-correlated window pair and its metric.
pub fn schmidl_cox_sync(rx: &[Vec<Complex64>], half_len: usize) -> Result<(usize, f64), FrameError> {
    let metric = timing_metric(rx, half_len)?;
    let (d, m) = metric
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (d, &m)| if m > best.1 { (d, m) } else { best });
    Ok((d, m))
}
