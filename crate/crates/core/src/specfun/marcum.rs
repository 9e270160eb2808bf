//! Generalized Marcum Q via its Poisson-mixture series
//! Q_m(a,b) = 1 − Σₙ e^{−λ} λⁿ/n! · P(m+n, x),  λ = a²/2, x = b²/2.
//!
//! The sum is walked outward from the peak of its summand, with the Poisson
//! weights in the log domain and the incomplete-gamma factors advanced by
//! their two-term recurrences. Whichever of P and Q is the small tail is
//! summed directly so neither side loses relative precision.

use super::gamma::{ln_gamma, ln_poisson_weight, regularized_gamma};
use super::{domain, log_bessel_i, SeriesControl, SpecFunError};
use crate::Real;

/// Outcome of a Marcum evaluation: `q = Q_m(a,b)`, `p = 1 − q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarcumSeries<T> {
    pub q: T,
    pub p: T,
    pub terms: usize,
    pub converged: bool,
}

pub fn marcum_q<T: Real>(m: usize, a: T, b: T, ctl: &SeriesControl<T>) -> Result<T, SpecFunError> {
    marcum_q_series(m, a, b, ctl).map(|s| s.q)
}

pub fn marcum_q_series<T: Real>(
    m: usize,
    a: T,
    b: T,
    ctl: &SeriesControl<T>,
) -> Result<MarcumSeries<T>, SpecFunError> {
    if m == 0 {
        return domain("Marcum Q order must be positive");
    }
    if !(a >= T::zero() && a.is_finite() && b >= T::zero() && b.is_finite()) {
        return domain(format!("Marcum Q needs finite a, b >= 0, got a={a}, b={b}"));
    }
    let mf = T::from_count(m);
    let lam = a * a * T::lit(0.5);
    let x = b * b * T::lit(0.5);
    if x == T::zero() {
        return Ok(MarcumSeries { q: T::one(), p: T::zero(), terms: 0, converged: true });
    }
    if lam == T::zero() {
        let g = regularized_gamma(mf, x)?;
        return Ok(MarcumSeries { q: g.q, p: g.p, terms: 1, converged: true });
    }

    // Q-form sums Σ w_n Q(m+n, x) (the upper tail), P-form sums Σ w_n P(m+n, x).
    let tail = x > lam + mf;
    let disc = (mf * mf + T::lit(4.0) * lam * x).sqrt();
    let start = ((disc - mf) * T::lit(0.5)).floor().max(T::zero());
    let n0 = start.to_usize().unwrap_or(0);

    let s0 = mf + start;
    let g0 = regularized_gamma(s0, x)?;
    let f0 = if tail { g0.q } else { g0.p };
    let ln_x = x.ln();
    let ln_lam = lam.ln();
    let ln_g0 = s0 * ln_x - x - ln_gamma(s0 + T::one());
    let ln_w0 = ln_poisson_weight(n0, lam);

    let first = ln_w0.exp() * f0;
    let mut sum = first;
    let mut terms = 1usize;
    let mut budget_hit = false;

    // upward: n = n0+1, n0+2, ...
    {
        let mut f = f0;
        let mut ln_g = ln_g0; // ln g(s) at s = m + n
        let mut ln_w = ln_w0;
        let mut prev = first;
        let mut anchor = f0;
        let mut n = n0;
        loop {
            if terms >= ctl.max_terms {
                budget_hit = true;
                break;
            }
            let s = mf + T::from_count(n);
            let g = ln_g.exp();
            n += 1;
            f = if tail {
                f + g
            } else {
                reanchor((f - g).max(T::zero()), &mut anchor, mf + T::from_count(n), x, tail)?
            };
            ln_g = ln_g + ln_x - (s + T::one()).ln();
            ln_w = ln_w + ln_lam - T::from_count(n).ln();
            let term = ln_w.exp() * f;
            sum = sum + term;
            terms += 1;
            if term <= prev && term <= ctl.rel_tol * sum {
                break;
            }
            prev = term;
        }
    }

    // downward: n = n0-1, ..., 0
    if !budget_hit && n0 > 0 {
        let mut f = f0;
        let mut ln_g = ln_g0;
        let mut ln_w = ln_w0;
        let mut prev = first;
        let mut anchor = f0;
        let mut n = n0;
        loop {
            if terms >= ctl.max_terms {
                budget_hit = true;
                break;
            }
            let s = mf + T::from_count(n);
            // g(s-1) = g(s) * s / x
            ln_g = ln_g + s.ln() - ln_x;
            let g = ln_g.exp();
            ln_w = ln_w + T::from_count(n).ln() - ln_lam;
            n -= 1;
            f = if tail {
                reanchor((f - g).max(T::zero()), &mut anchor, mf + T::from_count(n), x, tail)?
            } else {
                (f + g).min(T::one())
            };
            let term = ln_w.exp() * f;
            sum = sum + term;
            terms += 1;
            if n == 0 || (term <= prev && term <= ctl.rel_tol * sum) {
                break;
            }
            prev = term;
        }
    }

    let sum = sum.max(T::zero()).min(T::one());
    let (q, p) = if tail { (sum, T::one() - sum) } else { (T::one() - sum, sum) };
    Ok(MarcumSeries { q, p, terms, converged: !budget_hit })
}

/// The shrinking direction of each recurrence (Q downward, P upward) only
/// keeps absolute accuracy, so the value is recomputed directly once it has
/// fallen well below the last directly computed one.
fn reanchor<T: Real>(f: T, anchor: &mut T, s: T, x: T, tail: bool) -> Result<T, SpecFunError> {
    if f > *anchor * T::lit(1e-2) {
        return Ok(f);
    }
    let g = regularized_gamma(s, x)?;
    let fresh = if tail { g.q } else { g.p };
    *anchor = fresh;
    Ok(fresh)
}

/// e^{−(a²+b²)/2} Σ_{k=1−m}^{m−1} (a/b)^k I_k(ab), the correction term in
/// Q_m(a,b) + Q_m(b,a) = 1 + (this). Needs b > 0; a = 0 is the limit.
pub fn marcum_symmetric_term<T: Real>(m: usize, a: T, b: T) -> Result<T, SpecFunError> {
    if !(a >= T::zero() && b > T::zero()) || m == 0 {
        return domain(format!("symmetric term needs m ≥ 1, a ≥ 0, b > 0, got m={m}, a={a}, b={b}"));
    }
    let base = -(a * a + b * b) * T::lit(0.5);
    if a == T::zero() {
        // only k ≤ 0 survive: (b/a)^{|k|} I_{|k|}(ab) → (b²/2)^{|k|}/|k|!
        let half_b2 = b * b * T::lit(0.5);
        let mut sum = T::zero();
        for j in 0..m {
            let jf = T::from_count(j);
            sum = sum + (base + jf * half_b2.ln() - ln_gamma(jf + T::one())).exp();
        }
        return Ok(sum);
    }
    let ln_ratio = (a / b).ln();
    let mi = m as i64;
    let mut sum = T::zero();
    for k in (1 - mi)..mi {
        let kf = T::lit(k as f64);
        sum = sum + (base + kf * ln_ratio + log_bessel_i(k.abs(), a * b)?).exp();
    }
    Ok(sum)
}

/// Residual of the Marcum symmetry identity
/// Q_m(a,b) + Q_m(b,a) − 1 − e^{−(a²+b²)/2} Σ_{k=1−m}^{m−1} (a/b)^k I_k(ab).
pub fn marcum_symmetric_residual<T: Real>(m: usize, a: T, b: T) -> Result<T, SpecFunError> {
    if !(a > T::zero() && b > T::zero()) {
        return domain(format!("symmetric relation needs a, b > 0, got a={a}, b={b}"));
    }
    let ctl = SeriesControl::converged();
    let qab = marcum_q_series(m, a, b, &ctl)?;
    let qba = marcum_q_series(m, b, a, &ctl)?;
    Ok(qab.q + qba.q - T::one() - marcum_symmetric_term(m, a, b)?)
}
