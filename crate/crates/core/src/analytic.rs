//! Series and quadrature evaluation of the energy detector's error rates:
//! symbol error, pairwise and union-bound antenna-index error, their
//! combination, and the truncated high-SNR forms used for slope checks.
//!
//! β = Σᵢ|hᵢ|² is Gamma(N_r, σ_h²). Amplitude-domain Marcum arguments use
//! the per-branch model a² = 2E β/σ_w², threshold b² = 2ρ β/σ_w².

use std::cell::RefCell;

use log::warn;
use thiserror::Error;

use crate::constellation::{build_biased_pam, ConstellationSpec};
use crate::error::ConfigError;
use crate::quad::{integrate_vec, QuadOptions};
use crate::specfun::{
    ln_gamma, ln_gauss_2f1, marcum_q_series, marcum_symmetric_term, upper_inc_gamma_reg, SeriesControl,
    SpecFunError,
};
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Special(#[from] SpecFunError),
    #[error("{what} did not converge within {terms} terms (partial value {partial:e})")]
    NotConverged { what: &'static str, terms: usize, partial: f64 },
    #[error("quadrature for {what} missed its tolerance (value {value:e}, error estimate {abs_err:e})")]
    Quadrature { what: &'static str, value: f64, abs_err: f64 },
}

type Result<T> = std::result::Result<T, AnalyticError>;

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticParams<T> {
    pub n_r: usize,
    pub order: usize,
    pub e_min: T,
    pub sigma_w_sq: T,
    pub sigma_h_sq: T,
    pub series: SeriesControl<T>,
    pub quad_tol: T,
}

impl<T: Real> AnalyticParams<T> {
    /// Enough terms for the n-series to reach 1e-12 up to ~50 dB.
    pub const DEFAULT_MAX_TERMS: usize = 100_000;

    pub fn new(n_r: usize, order: usize, e_min: T, sigma_w_sq: T) -> Self {
        Self {
            n_r,
            order,
            e_min,
            sigma_w_sq,
            sigma_h_sq: T::one(),
            series: SeriesControl { max_terms: Self::DEFAULT_MAX_TERMS, rel_tol: T::lit(1e-12) },
            quad_tol: T::lit(1e-7),
        }
    }

    /// σ_w² chosen so that E_av·σ_h²/σ_w² equals the given SNR (σ_h² = 1).
    pub fn from_snr_db(n_r: usize, order: usize, e_min: T, snr_db: T) -> Result<Self> {
        let spec = build_biased_pam(order, e_min)?;
        let snr = T::lit(10.0).powf(snr_db / T::lit(10.0));
        Ok(Self::new(n_r, order, e_min, spec.average_energy() / snr))
    }

    pub fn snr_db(&self) -> T {
        let e_av = T::from_count((self.order - 1) * (2 * self.order - 1)) / T::lit(6.0) * self.e_min;
        T::lit(10.0) * (e_av * self.sigma_h_sq / self.sigma_w_sq).log10()
    }

    pub fn validate(&self) -> Result<ConstellationSpec<T>> {
        let bad = |msg: String| Err(AnalyticError::Config(ConfigError::new(msg)));
        if self.n_r == 0 {
            return bad("n_r must be at least 1".into());
        }
        if !(self.sigma_w_sq > T::zero() && self.sigma_w_sq.is_finite()) {
            return bad(format!("sigma_w_sq must be positive, got {}", self.sigma_w_sq));
        }
        if !(self.sigma_h_sq > T::zero() && self.sigma_h_sq.is_finite()) {
            return bad(format!("sigma_h_sq must be positive, got {}", self.sigma_h_sq));
        }
        if !(self.quad_tol > T::zero() && self.quad_tol < T::one()) {
            return bad(format!("quad_tol must lie in (0, 1), got {}", self.quad_tol));
        }
        SeriesControl::new(self.series.max_terms, self.series.rel_tol)?;
        Ok(build_biased_pam(self.order, self.e_min)?)
    }
}

/// How far the infinite n-sums are taken.
#[derive(Clone, Copy, Debug)]
enum Truncation<T> {
    Tolerance(SeriesControl<T>),
    Terms(usize),
}

struct SeriesSum<T> {
    value: T,
    terms: usize,
    converged: bool,
}

fn lnf<T: Real>(n: usize) -> T {
    ln_gamma(T::from_count(n) + T::one())
}

/// Closed-form symmetric part: E over β of e^{−(a²+b²)/2} Σ_k (a/b)^k I_k(ab)
/// with a² = 2eβ/σ², b² = 2ρβ/σ², β ~ Gamma(N, 1); `e`, `rho` already carry σ_h².
fn symmetric_part<T: Real>(e: T, rho: T, noise: T, n_r: usize) -> Result<T> {
    let delta = e + rho + noise;
    let z = T::lit(4.0) * e * rho / (delta * delta);
    let nf = T::from_count(n_r);
    let half = T::lit(0.5);
    let lead = nf * (noise / delta).ln();
    let mut sum = T::zero();
    let n = n_r as i64;
    for k in (1 - n)..n {
        let kk = k.unsigned_abs() as usize;
        let kf = T::from_count(kk);
        let base = if k >= 0 { e / delta } else { rho / delta };
        if kk > 0 && base == T::zero() {
            continue;
        }
        let ln_binom = ln_gamma(nf + kf) - lnf::<T>(kk) - ln_gamma(nf);
        let hyp = ln_gauss_2f1((nf + kf) * half, (nf + kf + T::one()) * half, kf + T::one(), z)?;
        let ln_pow = if kk == 0 { T::zero() } else { kf * base.ln() };
        sum = sum + hyp.sign * (lead + ln_binom + ln_pow + hyp.ln_abs).exp();
    }
    Ok(sum)
}

/// n-th term of E[e^{−cβ}(cβ)ⁿ/n!·P(n+N, dβ)] for β ~ Gamma(N, 1), d < 1 + c.
///
/// The natural form is Γ(s)(1+c)^{−s} minus a ₂F₁ term, two Euler integrals of
/// one integrand over (0, ∞) and (0, 1); their difference is the (1, ∞) piece,
/// evaluated here directly (after t -> 1/t) so no cancellation occurs.
fn poisson_gamma_term<T: Real>(n: usize, c: T, d: T, n_r: usize) -> Result<T> {
    let nf = T::from_count(n_r);
    let s = T::from_count(n) + nf;
    let ln_d_ratio = d.ln() - (T::one() + c).ln();
    let ln_pow = if n == 0 {
        nf * ln_d_ratio
    } else {
        T::from_count(n) * (ln_d_ratio - c.recip().ln_1p()) + nf * ln_d_ratio
    } - nf * (T::one() + c).ln();
    let hyp = ln_gauss_2f1(s + s, s, s + T::one(), -d / (T::one() + c))?;
    Ok(hyp.sign
        * (ln_pow + ln_gamma(s + s) - ln_gamma(s + T::one()) - lnf::<T>(n) - ln_gamma(nf) + hyp.ln_abs).exp())
}

fn poisson_gamma_series<T: Real>(c: T, d: T, n_r: usize, trunc: Truncation<T>) -> Result<SeriesSum<T>> {
    let (cap, tol) = match trunc {
        Truncation::Tolerance(ctl) => (ctl.max_terms, Some(ctl.rel_tol)),
        Truncation::Terms(t) => (t, None),
    };
    let mut sum = T::zero();
    let mut prev = T::infinity();
    let mut small_run = 0;
    for n in 0..cap {
        let t = poisson_gamma_term(n, c, d, n_r)?;
        sum = sum + t;
        if let Some(tol) = tol {
            if t <= tol * sum && t <= prev {
                small_run += 1;
                if small_run >= 2 {
                    return Ok(SeriesSum { value: sum, terms: n + 1, converged: true });
                }
            } else {
                small_run = 0;
            }
        }
        prev = t;
    }
    Ok(SeriesSum { value: sum, terms: cap, converged: tol.is_none() })
}

/// The three pieces of one decision-boundary contribution: for symbol m,
/// `symmetric + lower` is E[Q_N(a_m, b_m)] (overshooting the upper threshold)
/// and `upper` is E[1 − Q_N(a_{m+1}, b_m)] (symbol m+1 falling below it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryTerms<T> {
    pub symmetric: T,
    pub lower: T,
    pub upper: T,
    pub terms: usize,
    pub converged: bool,
}

impl<T: Real> BoundaryTerms<T> {
    pub fn sum(&self) -> T {
        self.symmetric + self.lower + self.upper
    }
}

fn boundary_terms<T: Real>(
    spec: &ConstellationSpec<T>,
    p: &AnalyticParams<T>,
    m: usize,
    trunc: Truncation<T>,
) -> Result<BoundaryTerms<T>> {
    let scale = p.sigma_h_sq / p.sigma_w_sq;
    let e_lo = spec.energies()[m];
    let e_hi = spec.energies()[m + 1];
    let rho = spec.thresholds()[m];
    let symmetric = symmetric_part(e_lo * p.sigma_h_sq, rho * p.sigma_h_sq, p.sigma_w_sq, p.n_r)?;
    let lower = if e_lo > T::zero() {
        Some(poisson_gamma_series(rho * scale, e_lo * scale, p.n_r, trunc)?)
    } else {
        None
    };
    let upper = poisson_gamma_series(e_hi * scale, rho * scale, p.n_r, trunc)?;
    let (lower_value, lower_terms, lower_ok) = lower.map_or((T::zero(), 0, true), |s| (s.value, s.terms, s.converged));
    Ok(BoundaryTerms {
        symmetric,
        lower: lower_value,
        upper: upper.value,
        terms: lower_terms.max(upper.terms),
        converged: lower_ok && upper.converged,
    })
}

/// Per-boundary pieces m = 0..M−2, each series taken to `p.series.rel_tol`.
pub fn ser_components<T: Real>(p: &AnalyticParams<T>) -> Result<Vec<BoundaryTerms<T>>> {
    let spec = p.validate()?;
    (0..spec.order() - 1)
        .map(|m| boundary_terms(&spec, p, m, Truncation::Tolerance(p.series)))
        .collect()
}

fn clamp_probability<T: Real>(v: T, what: &str) -> T {
    if v < T::zero() || v > T::one() {
        warn!("{what} evaluated to {v}; clamped to [0, 1]");
    }
    v.max(T::zero()).min(T::one())
}

/// Average symbol error probability with every n-series converged.
pub fn ser_analytic<T: Real>(p: &AnalyticParams<T>) -> Result<T> {
    let parts = ser_components(p)?;
    let total: T = parts.iter().map(BoundaryTerms::sum).sum::<T>() / T::from_count(p.order);
    if let Some(bad) = parts.iter().find(|b| !b.converged) {
        return Err(AnalyticError::NotConverged {
            what: "symbol error series",
            terms: bad.terms,
            partial: clamp_probability(total, "partial SER").as_f64(),
        });
    }
    Ok(clamp_probability(total, "SER"))
}

/// Symbol error probability with each n-series cut after exactly `terms`
/// terms (n = 0 .. terms−1).
pub fn ser_truncated<T: Real>(p: &AnalyticParams<T>, terms: usize) -> Result<T> {
    let spec = p.validate()?;
    let mut total = T::zero();
    for m in 0..spec.order() - 1 {
        total = total + boundary_terms(&spec, p, m, Truncation::Terms(terms))?.sum();
    }
    Ok(clamp_probability(total / T::from_count(p.order), "truncated SER"))
}

/// Symbol error probability against average SNR γ = E_av/σ_w² (σ_h² = 1),
/// written in per-symbol SNRs γ_m = E_m/σ_w² and ρ̄_m = ρ_m/σ_w².
pub fn ser_normalized<T: Real>(
    gamma_grid: &[T],
    n_r: usize,
    order: usize,
    series: SeriesControl<T>,
) -> Result<Vec<T>> {
    let spec = build_biased_pam(order, T::one())?;
    SeriesControl::new(series.max_terms, series.rel_tol)?;
    if n_r == 0 {
        return Err(ConfigError::new("n_r must be at least 1").into());
    }
    gamma_grid
        .iter()
        .map(|&gamma| {
            if !(gamma > T::zero()) {
                return Err(ConfigError::new(format!("SNR values must be positive, got {gamma}")).into());
            }
            let per_energy = gamma / spec.average_energy();
            let mut total = T::zero();
            for m in 0..order - 1 {
                let g_lo = spec.energies()[m] * per_energy;
                let g_hi = spec.energies()[m + 1] * per_energy;
                let r = spec.thresholds()[m] * per_energy;
                total = total + symmetric_part(g_lo, r, T::one(), n_r)?;
                if g_lo > T::zero() {
                    let s = poisson_gamma_series(r, g_lo, n_r, Truncation::Tolerance(series))?;
                    if !s.converged {
                        return Err(AnalyticError::NotConverged { what: "normalized SER series", terms: s.terms, partial: s.value.as_f64() });
                    }
                    total = total + s.value;
                }
                let s = poisson_gamma_series(g_hi, r, n_r, Truncation::Tolerance(series))?;
                if !s.converged {
                    return Err(AnalyticError::NotConverged { what: "normalized SER series", terms: s.terms, partial: s.value.as_f64() });
                }
                total = total + s.value;
            }
            Ok(clamp_probability(total / T::from_count(order), "normalized SER"))
        })
        .collect()
}

/// Pairwise antenna-index error pieces. `d*` integrate over β_v ≤ β_u and
/// `f*` over β_u < β_v; by exchangeability f1 = d1 and f2 = d2′ + d2″.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTerms<T> {
    /// E[1 − Q_N(a_u, b); β_v ≤ β_u]
    pub d1: T,
    /// symmetric-relation part of E[Q_N(a_v, b); β_v ≤ β_u]
    pub d2_prime: T,
    /// E[1 − Q_N(b, a_v); β_v ≤ β_u]
    pub d2_double_prime: T,
    /// E[1 − Q_N(a_v, b); β_u < β_v]
    pub f1: T,
    /// E[Q_N(a_u, b); β_u < β_v]
    pub f2: T,
}

impl<T: Real> PairTerms<T> {
    pub fn total(&self) -> T {
        T::lit(0.5) * (self.d1 + self.d2_prime + self.d2_double_prime + self.f1 + self.f2)
    }
}

/// Smallest x with Gamma(shape, 1) upper tail below 1e-12.
fn density_cutoff<T: Real>(shape: usize) -> Result<T> {
    let s = T::from_count(shape);
    let mut x = s + T::lit(10.0);
    while upper_inc_gamma_reg(s, x)? > T::lit(1e-12) {
        x = x + T::lit(5.0);
    }
    Ok(x)
}

struct ErrorSlot(RefCell<Option<AnalyticError>>);

impl ErrorSlot {
    fn new() -> Self {
        Self(RefCell::new(None))
    }

    fn record(&self, e: AnalyticError) {
        self.0.borrow_mut().get_or_insert(e);
    }

    fn check(self) -> Result<()> {
        self.0.into_inner().map_or(Ok(()), Err)
    }
}

/// The absolute floor stops pieces that are pure roundoff (a tail computed as
/// 1 − sum near 1) from spending the whole interval budget.
fn quad_opts<T: Real>(tol: T) -> QuadOptions<T> {
    QuadOptions { abs_tol: tol * T::lit(1e-6), rel_tol: tol, max_intervals: 2_000 }
}

fn quad_check<T: Real, const K: usize>(
    what: &'static str,
    r: &crate::quad::QuadResultVec<T, K>,
) -> Result<()> {
    if r.converged {
        return Ok(());
    }
    let worst = (0..K).max_by(|&i, &j| r.abs_err[i].partial_cmp(&r.abs_err[j]).unwrap()).unwrap_or(0);
    Err(AnalyticError::Quadrature { what, value: r.value[worst].as_f64(), abs_err: r.abs_err[worst].as_f64() })
}

fn marcum_tail<T: Real>(n_r: usize, a: T, b: T, ctl: &SeriesControl<T>) -> Result<(T, T)> {
    let s = marcum_q_series(n_r, a, b, ctl)?;
    if !s.converged {
        return Err(AnalyticError::NotConverged { what: "Marcum Q series", terms: s.terms, partial: s.q.as_f64() });
    }
    Ok((s.q, s.p))
}

/// Pairwise antenna-index error for symbol energy `energy`, broken into its
/// region integrals. β_v ≤ β_u is mapped by β_u = −σ_h² ln u, β_v = β_u t;
/// β_u < β_v by β_u = s·w, β_v = s·(1 − w) with s = −σ_h² ln u, w ≤ ½.
pub fn antenna_error_pair_terms<T: Real>(energy: T, p: &AnalyticParams<T>) -> Result<PairTerms<T>> {
    p.validate()?;
    if !(energy > T::zero() && energy.is_finite()) {
        return Err(ConfigError::new(format!("symbol energy must be positive, got {energy}")).into());
    }
    let n = p.n_r;
    let nf = T::from_count(n);
    let g = energy * p.sigma_h_sq / p.sigma_w_sq;
    let half = T::lit(0.5);
    let ln_gn = ln_gamma(nf);
    let opts = quad_opts(p.quad_tol);
    let ctl = p.series;
    let slot = ErrorSlot::new();

    // (L_u, L_v) are β/σ_h².
    let ordered = |lu: T, lv: T| -> Result<[T; 3]> {
        let a_u = (g * lu).sqrt();
        let a_v = (g * lv).sqrt();
        let b = (g * (lu + lv) * half).sqrt();
        let (_, d1) = marcum_tail(n, a_u, b, &ctl)?;
        let d2p = marcum_symmetric_term(n, a_v, b)?;
        let (_, d2pp) = marcum_tail(n, b, a_v, &ctl)?;
        Ok([d1, d2p, d2pp])
    };
    let swapped = |lu: T, lv: T| -> Result<[T; 2]> {
        let a_u = (g * lu).sqrt();
        let a_v = (g * lv).sqrt();
        let b = (g * (lu + lv) * half).sqrt();
        let (_, f1) = marcum_tail(n, a_v, b, &ctl)?;
        let (f2, _) = marcum_tail(n, a_u, b, &ctl)?;
        Ok([f1, f2])
    };

    let l_max: T = density_cutoff(n)?;
    let d = integrate_vec(
        |u: T| {
            let lu = -u.ln();
            let outer_w = ((nf - T::one()) * lu.ln() - ln_gn).exp();
            let inner = integrate_vec(
                |t: T| {
                    let lv = lu * t;
                    let w = ((nf - T::one()) * lv.ln() - lv - ln_gn).exp() * lu;
                    match ordered(lu, lv) {
                        Ok(v) => v.map(|x| x * w),
                        Err(e) => {
                            slot.record(e);
                            [T::zero(); 3]
                        }
                    }
                },
                T::zero(),
                T::one(),
                &opts,
            );
            if let Err(e) = quad_check("ordered-region inner integral", &inner) {
                slot.record(e);
            }
            inner.value.map(|x| x * outer_w)
        },
        (-l_max).exp(),
        T::one(),
        &opts,
    );
    quad_check("ordered-region outer integral", &d)?;

    let s_max: T = density_cutoff(2 * n)?;
    let f = integrate_vec(
        |u: T| {
            let s = -u.ln();
            let outer_w = ((nf + nf - T::one()) * s.ln() - ln_gn - ln_gn).exp();
            let inner = integrate_vec(
                |w: T| {
                    let (lu, lv) = (s * w, s * (T::one() - w));
                    let wt = ((nf - T::one()) * (w * (T::one() - w)).ln()).exp();
                    match swapped(lu, lv) {
                        Ok(v) => v.map(|x| x * wt),
                        Err(e) => {
                            slot.record(e);
                            [T::zero(); 2]
                        }
                    }
                },
                T::zero(),
                half,
                &opts,
            );
            if let Err(e) = quad_check("swapped-region inner integral", &inner) {
                slot.record(e);
            }
            inner.value.map(|x| x * outer_w)
        },
        (-s_max).exp(),
        T::one(),
        &opts,
    );
    quad_check("swapped-region outer integral", &f)?;
    slot.check()?;

    Ok(PairTerms {
        d1: d.value[0],
        d2_prime: d.value[1],
        d2_double_prime: d.value[2],
        f1: f.value[0],
        f2: f.value[1],
    })
}

pub fn antenna_error_pair<T: Real>(energy: T, p: &AnalyticParams<T>) -> Result<T> {
    Ok(clamp_probability(antenna_error_pair_terms(energy, p)?.total(), "pairwise antenna error"))
}

/// Union bound over all antenna pairs, with prefactor 1/(2(N_t − 1)) and
/// i.i.d. branches so every pair contributes the same value.
pub fn antenna_error_union<T: Real>(energy: T, n_t: usize, p: &AnalyticParams<T>) -> Result<T> {
    if n_t < 2 {
        return Err(ConfigError::new(format!("union bound needs n_t ≥ 2, got {n_t}")).into());
    }
    let pair = antenna_error_pair(energy, p)?;
    let pairs = T::from_count(n_t * (n_t - 1) / 2);
    let prefactor = T::one() / T::from_count(2 * (n_t - 1));
    Ok(clamp_probability(prefactor * pairs * pair, "antenna error bound"))
}

/// P_e = P_a + P_s − P_a·P_s.
pub fn overall_error<T: Real>(p_s: T, p_a: T) -> T {
    p_a + p_s - p_a * p_s
}

/// The high-SNR forms of the ordered-region terms, as functions of the
/// symbol SNR γ = ℰ/σ_w².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighSnrTerms<T> {
    pub d1: T,
    /// lower bound obtained from I_k(z) > (z/2)^k / k!
    pub d2_prime_bound: T,
    pub d2_double_prime: T,
}

impl<T: Real> HighSnrTerms<T> {
    pub fn total(&self) -> T {
        self.d1 + self.d2_prime_bound + self.d2_double_prime
    }
}

fn ln_binom_real<T: Real>(x: T, j: usize) -> T {
    let jf = T::from_count(j);
    ln_gamma(x + T::one()) - ln_gamma(jf + T::one()) - ln_gamma(x - jf + T::one())
}

/// Evaluates the three high-SNR expressions. The n-sums of `d1` and
/// `d2_double_prime` are partial sums over n < `series.max_terms`: with
/// the incomplete gammas replaced by complete ones their full sums tend
/// to P(β_v ≤ β_u) = ½, so only the truncated forms decay with γ.
pub fn antenna_error_high_snr_terms<T: Real>(
    gamma: T,
    n_r: usize,
    series: SeriesControl<T>,
) -> Result<HighSnrTerms<T>> {
    SeriesControl::new(series.max_terms, series.rel_tol)?;
    if n_r == 0 {
        return Err(ConfigError::new("n_r must be at least 1").into());
    }
    if !(gamma > T::zero() && gamma.is_finite()) {
        return Err(ConfigError::new(format!("gamma must be positive, got {gamma}")).into());
    }
    let nf = T::from_count(n_r);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let ln_gn = ln_gamma(nf);
    let terms = series.max_terms;

    // Each D1 summand is a difference of two nearly equal terms. Both are
    // Euler integrals of the same integrand, over (0, ∞) and (0, 1), so the
    // difference is the (1, ∞) piece, evaluated directly after t -> 1/t.
    let c = T::one() + gamma / two;
    let ln_first_ratio = -(two / gamma).ln_1p();
    let ln_second_ratio = -(four / gamma).ln_1p();
    let mut d1 = T::zero();
    for n in 0..terms {
        let k = T::from_count(n);
        let hyp = ln_gauss_2f1(k + nf + nf, nf, nf + T::one(), -c.recip())?;
        d1 = d1
            + hyp.sign
                * (k * ln_first_ratio - (nf + nf) * c.ln() + ln_gamma(k + nf + nf) - ln_gn - ln_gn - nf.ln()
                    - lnf::<T>(n)
                    + hyp.ln_abs)
                    .exp();
    }

    let mut d2p = T::zero();
    let ni = n_r as i64;
    let three_q = T::one() + T::lit(0.75) * gamma;
    for k in (1 - ni)..ni {
        let kk = T::from_count(k.unsigned_abs() as usize);
        let half_k = kk / two;
        let j_max = (k.unsigned_abs() / 2) as usize;
        for j in 0..=j_max {
            let jf = T::from_count(j);
            let order = two * jf + kk + nf;
            let hyp = ln_gauss_2f1(nf / two, order, T::one() + nf / two, -(four + gamma) / (four + T::lit(3.0) * gamma))?;
            let ln_lead = (T::one() - kk) * two.ln() + nf.ln() - order * three_q.ln() + kk * gamma.ln()
                - nf / two * (four + gamma).ln()
                + ln_binom_real(half_k, j)
                - ln_gamma(T::one() + kk)
                - two * ln_gamma(T::one() + nf);
            let ln_inner = -nf / two * (four + T::lit(3.0) * gamma).ln()
                + ln_gamma(T::one() + nf / two)
                + ln_gamma(order)
                + (T::one() - (four + gamma).powf(-nf / two)).ln()
                + hyp.ln_abs;
            d2p = d2p + hyp.sign * (ln_lead + ln_inner).exp();
        }
    }

    let mut d2pp = T::zero();
    for n in 0..terms {
        let k = T::from_count(n);
        let ln_outer = k * ln_second_ratio - nf * (four + gamma).ln() - ln_gn - ln_gn - lnf::<T>(n);
        for j in 0..=n {
            let jf = T::from_count(j);
            let hyp = ln_gauss_2f1(nf + jf, k + nf, T::one() + jf + nf, -T::one())?;
            let ln_a = ln_gamma(k - jf + nf);
            let ln_b = ln_gamma(k + nf) - ln_gamma(T::one() + jf + nf) + hyp.ln_abs;
            let rest = T::one() - hyp.sign * (ln_b - ln_a).exp();
            let ln_c = (nf + nf - jf) * two.ln() + ln_gamma(jf + nf) + lnf::<T>(n) - lnf::<T>(j) - lnf::<T>(n - j);
            d2pp = d2pp + (ln_outer + ln_c + ln_a).exp() * rest;
        }
    }

    Ok(HighSnrTerms { d1, d2_prime_bound: d2p, d2_double_prime: d2pp })
}

pub fn antenna_error_high_snr<T: Real>(gamma: T, n_r: usize, series: SeriesControl<T>) -> Result<T> {
    Ok(antenna_error_high_snr_terms(gamma, n_r, series)?.total())
}
