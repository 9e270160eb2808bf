//! Receiver decision rules. Every detector is a pure function and breaks
//! ties towards the lowest (antenna, symbol) pair.

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use num_complex::Complex;

use crate::channel::ChannelRealization;
use crate::constellation::{ConstellationSpec, SmSymbol};
use crate::error::ConfigError;
use crate::specfun::log_bessel_i;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    /// Energy-detection ML with the Bessel likelihood.
    EdMlExact,
    /// Energy-detection ML with ln I₀(x) ≈ x.
    EdMl,
    /// Coherent ML with full channel state.
    CoherentMl,
    /// Two-stage maximal-ratio combining.
    Mrc,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [Self::EdMlExact, Self::EdMl, Self::CoherentMl, Self::Mrc];

    pub fn name(self) -> &'static str {
        match self {
            Self::EdMlExact => "ed-ml-exact",
            Self::EdMl => "ed-ml",
            Self::CoherentMl => "c-ml",
            Self::Mrc => "mrc",
        }
    }

    /// Whether the rule needs complex gains rather than magnitudes.
    pub fn is_coherent(self) -> bool {
        matches!(self, Self::CoherentMl | Self::Mrc)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ed-ml-exact" | "edml-exact" => Ok(Self::EdMlExact),
            "ed-ml" | "edml" => Ok(Self::EdMl),
            "c-ml" | "cml" | "coherent-ml" => Ok(Self::CoherentMl),
            "mrc" => Ok(Self::Mrc),
            other => Err(ConfigError::new(format!(
                "unknown detector '{other}' (expected ed-ml-exact, ed-ml, c-ml or mrc)"
            ))),
        }
    }
}

/// Running argmax that only moves on a strict improvement, which gives the
/// lexicographic tie-break when candidates are visited in (n, m) order.
struct Best<T> {
    sym: SmSymbol,
    score: T,
}

impl<T: Real> Best<T> {
    fn new() -> Self {
        Self { sym: SmSymbol::new(0, 0), score: T::neg_infinity() }
    }

    fn offer(&mut self, n: usize, m: usize, score: T) {
        if score > self.score {
            self.score = score;
            self.sym = SmSymbol::new(n, m);
        }
    }
}

/// argmax over (n, m) of Σᵢ [√E_m·√(yᵢβ_{i,n}) − (E_m/2)·β_{i,n}].
pub fn detect_ed_ml<T: Real>(y: &[T], beta: ArrayView2<T>, spec: &ConstellationSpec<T>) -> SmSymbol {
    debug_assert_eq!(y.len(), beta.nrows());
    let half = T::lit(0.5);
    let mut best = Best::new();
    for (n, col) in beta.columns().into_iter().enumerate() {
        let mut corr = T::zero();
        let mut gain = T::zero();
        for (&yi, &b) in y.iter().zip(col.iter()) {
            corr = corr + (yi * b).sqrt();
            gain = gain + b;
        }
        for (m, (&a, &e)) in spec.amplitudes().iter().zip(spec.energies()).enumerate() {
            best.offer(n, m, a * corr - e * half * gain);
        }
    }
    best.sym
}

/// argmax over (n, m) of Σᵢ [ln I₀(2√(yᵢβ_{i,n}E_m)/σ_w²) − E_m·β_{i,n}/σ_w²].
pub fn detect_ed_ml_exact<T: Real>(
    y: &[T],
    beta: ArrayView2<T>,
    spec: &ConstellationSpec<T>,
    sigma_w_sq: T,
) -> SmSymbol {
    assert!(sigma_w_sq > T::zero(), "exact ED-ML needs a positive noise variance");
    let two = T::lit(2.0);
    let mut best = Best::new();
    for (n, col) in beta.columns().into_iter().enumerate() {
        for (m, (&a, &e)) in spec.amplitudes().iter().zip(spec.energies()).enumerate() {
            let mut score = T::zero();
            for (&yi, &b) in y.iter().zip(col.iter()) {
                let arg = two * a * (yi * b).sqrt() / sigma_w_sq;
                let ln_i0 = log_bessel_i(0, arg).expect("Bessel argument is finite and non-negative");
                score = score + ln_i0 - e * b / sigma_w_sq;
            }
            best.offer(n, m, score);
        }
    }
    best.sym
}

/// argmin over (n, m) of Σᵢ |rᵢ − h_{i,n}·s_m|².
pub fn detect_coherent_ml<T: Real>(
    r: &[Complex<T>],
    ch: &ChannelRealization<T>,
    spec: &ConstellationSpec<T>,
) -> SmSymbol {
    debug_assert_eq!(r.len(), ch.n_r());
    let mut best = Best::new();
    for (n, col) in ch.gains().columns().into_iter().enumerate() {
        for (m, &s) in spec.amplitudes().iter().enumerate() {
            let dist: T = r
                .iter()
                .zip(col.iter())
                .map(|(&ri, &h)| (ri - h.scale(s)).norm_sqr())
                .sum();
            best.offer(n, m, -dist);
        }
    }
    best.sym
}

/// Two-stage MRC: pick the antenna whose normalized matched filter output
/// |h_nᴴr|/‖h_n‖ is largest, then quantize Re(h_n̂ᴴr/‖h_n̂‖²) to the nearest
/// amplitude (ties to the lower level).
pub fn detect_mrc<T: Real>(r: &[Complex<T>], ch: &ChannelRealization<T>, spec: &ConstellationSpec<T>) -> SmSymbol {
    debug_assert_eq!(r.len(), ch.n_r());
    let mut best_n = 0;
    let mut best_score = T::neg_infinity();
    let mut best_g = Complex::new(T::zero(), T::zero());
    for (n, col) in ch.gains().columns().into_iter().enumerate() {
        let mut mf = Complex::new(T::zero(), T::zero());
        let mut norm_sq = T::zero();
        for (&ri, &h) in r.iter().zip(col.iter()) {
            mf = mf + h.conj() * ri;
            norm_sq = norm_sq + h.norm_sqr();
        }
        let (score, g) = if norm_sq > T::zero() {
            (mf.norm() / norm_sq.sqrt(), mf.unscale(norm_sq))
        } else {
            (T::zero(), Complex::new(T::zero(), T::zero()))
        };
        if score > best_score {
            best_score = score;
            best_n = n;
            best_g = g;
        }
    }
    let step = spec.e_min().sqrt();
    let top = T::from_count(spec.order() - 1);
    let level = (best_g.re / step - T::lit(0.5)).ceil().max(T::zero()).min(top);
    SmSymbol::new(best_n, level.to_usize().unwrap_or(0))
}

/// Everything a detector may look at for one received symbol.
pub struct Observation<'a, T> {
    pub r: &'a [Complex<T>],
    pub y: &'a [T],
    pub channel: &'a ChannelRealization<T>,
    pub sigma_w_sq: T,
}

pub fn detect<T: Real>(kind: DetectorKind, obs: &Observation<'_, T>, spec: &ConstellationSpec<T>) -> SmSymbol {
    let beta = obs.channel.sq_magnitudes().view();
    match kind {
        DetectorKind::EdMl => detect_ed_ml(obs.y, beta, spec),
        DetectorKind::EdMlExact => detect_ed_ml_exact(obs.y, beta, spec, obs.sigma_w_sq),
        DetectorKind::CoherentMl => detect_coherent_ml(obs.r, obs.channel, spec),
        DetectorKind::Mrc => detect_mrc(obs.r, obs.channel, spec),
    }
}
