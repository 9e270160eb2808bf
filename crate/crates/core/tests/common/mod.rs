//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use smed_core::constellation::build_biased_pam;
use smed_core::specfun::{ln_gamma, marcum_q_series, SeriesControl};

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 64.0 * f64::EPSILON, 50)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    noise_rel: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // stop once the correction is at the noise level of the panel itself
    let noise = noise_rel * (left.abs() + right.abs());
    if depth == 0 || delta.abs() <= (15.0 * tol).max(noise) {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, noise_rel, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, noise_rel, depth - 1)
}

/// Adaptive Simpson with a tolerance relative to a coarse first estimate.
/// Integrands only accurate to a few digits past `rel_tol` stop refining there.
pub fn simpson_rel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let scale = (b - a) * fa.abs().max(fm.abs()).max(fb.abs()).max(1e-300);
    let coarse = recurse(f, a, b, fa, fm, fb, whole, 1e-4 * scale, 1e-9, 50);
    let tol = rel_tol * coarse.abs().max(1e-300);
    let noise_rel = (1e-3 * rel_tol).max(64.0 * f64::EPSILON);
    recurse(f, a, b, fa, fm, fb, whole, tol, noise_rel, 50)
}

/// Simpson over consecutive breakpoints.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: &F, points: &[f64], tol: f64) -> f64 {
    points.windows(2).map(|w| simpson(f, w[0], w[1], tol)).sum()
}

/// e^{-x} Iₙ(x) from (1/π)∫₀^π e^{x(cosθ−1)} cos(nθ) dθ.
pub fn scaled_bessel_i(n: u32, x: f64) -> f64 {
    let f = |t: f64| (x * (t.cos() - 1.0)).exp() * (n as f64 * t).cos();
    simpson(&f, 0.0, std::f64::consts::PI, 1e-13) / std::f64::consts::PI
}

pub fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Γ(N, 1) density.
pub fn gamma_pdf(n: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return if n == 1 { 1.0 } else { 0.0 };
    }
    ((n as f64 - 1.0) * x.ln() - x - ln_factorial(n - 1)).exp()
}

/// Marcum Q by integrating the noncentral-χ amplitude density from b upward.
pub fn marcum_q_quadrature(m: u32, a: f64, b: f64) -> f64 {
    let pdf = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        // x (x/a)^{m-1} e^{-(x-a)^2/2} [e^{-ax} I_{m-1}(ax)]
        x * (x / a).powi(m as i32 - 1) * (-(x - a) * (x - a) / 2.0).exp() * scaled_bessel_i(m - 1, a * x)
    };
    let hi = a.max(b) + 40.0;
    let mut pts = vec![b];
    let mut p = b;
    while p < hi {
        p += 1.0;
        pts.push(p);
    }
    simpson_pieces(&pdf, &pts, 1e-11)
}

/// Euler integral Γ(c)/(Γ(b)Γ(c−b)) ∫₀¹ t^{b−1}(1−t)^{c−b−1}(1−zt)^{−a} dt, c > b > 0.
/// Each half is mapped so the endpoint power singularity disappears.
pub fn euler_2f1(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let norm = (ln_gamma(c) - ln_gamma(b) - ln_gamma(c - b)).exp();
    let d = c - b;
    // t = u^{1/b} on [0, 1/2]
    let left = |u: f64| {
        let t = u.powf(1.0 / b);
        (1.0 - t).powf(d - 1.0) * (1.0 - z * t).powf(-a) / b
    };
    // 1 − t = v^{1/d} on [1/2, 1]
    let right = |v: f64| {
        let t = 1.0 - v.powf(1.0 / d);
        t.powf(b - 1.0) * (1.0 - z * t).powf(-a) / d
    };
    // geometric breakpoints toward 0 resolve the (1 − zt)^{−a} peak
    let graded = |f: &dyn Fn(f64) -> f64, hi: f64| -> f64 {
        let mut pts: Vec<f64> = (0..=80).rev().map(|k| hi * 0.5f64.powi(k)).collect();
        pts.insert(0, 0.0);
        pts.windows(2).map(|w| simpson_rel(&f, w[0], w[1], 1e-13)).sum()
    };
    norm * (graded(&left, 0.5f64.powf(b)) + graded(&right, 0.5f64.powf(d)))
}

pub fn q_and_p(m: usize, a: f64, b: f64) -> (f64, f64) {
    let s = marcum_q_series(m, a, b, &SeriesControl::converged()).unwrap();
    (s.q, s.p)
}

/// Breakpoints for β-integrals: geometric near 0 where the error mass sits.
fn beta_pieces() -> Vec<f64> {
    let mut pts = vec![0.0];
    pts.extend((0..=80).map(|i| 1e-8 * (80.0f64 / 1e-8).powf(i as f64 / 80.0)));
    pts
}

pub fn integrate_beta(f: impl Fn(f64) -> f64) -> f64 {
    beta_pieces().windows(2).map(|w| simpson_rel(&f, w[0], w[1], 1e-8)).sum()
}

/// Average over β ~ Gamma(N, 1) of the per-realization symbol error
/// (1/M)·Σ_m [Q_N(a_m, b_m) + 1 − Q_N(a_{m+1}, b_m)].
pub fn ser_by_quadrature(n_r: usize, order: usize, snr_db: f64) -> f64 {
    let spec = build_biased_pam(order, 1.0f64).unwrap();
    let sigma = spec.average_energy() / 10f64.powf(snr_db / 10.0);
    let f = |beta: f64| {
        let mut tot = 0.0;
        for m in 0..order - 1 {
            let b = (2.0 * spec.thresholds()[m] * beta / sigma).sqrt();
            let (q_lo, _) = q_and_p(n_r, (2.0 * spec.energies()[m] * beta / sigma).sqrt(), b);
            let (_, p_hi) = q_and_p(n_r, (2.0 * spec.energies()[m + 1] * beta / sigma).sqrt(), b);
            tot += q_lo + p_hi;
        }
        tot * gamma_pdf(n_r as u32, beta)
    };
    integrate_beta(f) / order as f64
}
