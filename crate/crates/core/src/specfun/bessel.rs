//! ln Iₖ(x) for integer order, stable for very large arguments.

use super::{domain, SpecFunError};
use crate::Real;

/// Natural log of the modified Bessel function of the first kind.
pub fn log_bessel_i<T: Real>(k: i64, x: T) -> Result<T, SpecFunError> {
    if k < 0 {
        return domain(format!("Bessel order must be >= 0, got {k}"));
    }
    if !(x >= T::zero()) || !x.is_finite() {
        return domain(format!("Bessel argument must be finite and >= 0, got {x}"));
    }
    if x == T::zero() {
        return Ok(if k == 0 { T::zero() } else { T::neg_infinity() });
    }
    let kf = T::from_count(k as usize);
    let switch = T::lit(50.0).max(T::lit(4.0) * kf * kf);
    if x > switch {
        Ok(asymptotic(kf, x))
    } else {
        Ok(power_series(kf, x))
    }
}

/// Hankel expansion: Iₖ(x) ~ eˣ/√(2πx) Σ (−1)^j a_j(k)/x^j.
fn asymptotic<T: Real>(k: T, x: T) -> T {
    let mu = T::lit(4.0) * k * k;
    let eight_x = T::lit(8.0) * x;
    let mut term = T::one();
    let mut sum = T::one();
    for j in 1..60usize {
        let odd = T::from_count(2 * j - 1);
        let next = -term * (mu - odd * odd) / (T::from_count(j) * eight_x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum = sum + term;
        if term.abs() < T::epsilon() * sum.abs() {
            break;
        }
    }
    x - T::lit(0.5) * (T::lit(2.0) * T::PI() * x).ln() + sum.ln()
}

/// (x/2)^k Σ_j (x²/4)^j / (j! (j+k)!), summed with running rescaling.
fn power_series<T: Real>(k: T, x: T) -> T {
    let half = x * T::lit(0.5);
    let q = half * half;
    let big = T::max_value().sqrt();
    let mut log_scale = k * half.ln() - super::ln_gamma(k + T::one());
    let mut term = T::one();
    let mut sum = T::one();
    let mut j = T::zero();
    loop {
        j = j + T::one();
        term = term * q / (j * (j + k));
        sum = sum + term;
        if term < T::epsilon() * sum && j > half {
            break;
        }
        if sum > big {
            sum = sum / big;
            term = term / big;
            log_scale = log_scale + big.ln();
        }
    }
    log_scale + sum.ln()
}
