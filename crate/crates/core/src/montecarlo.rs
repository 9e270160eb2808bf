//! Seeded, chunk-parallel Monte Carlo estimation of symbol, antenna-index
//! and overall error rates, plus diversity-order slope fitting.
//!
//! Every trial draws a fresh channel, a uniform SM symbol and noise once,
//! and all requested detectors judge that same observation. Work is split
//! into fixed-size chunks whose random streams depend only on the master
//! seed and the chunk coordinates, so totals do not depend on the thread
//! count.

use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{complex_normal, noise_variance_for_snr, ChannelRealization};
use crate::constellation::{build_biased_pam, ConstellationSpec, SmSymbol};
use crate::detectors::{detect, DetectorKind, Observation};
use crate::error::{config_err, ConfigError};
use crate::rng::{stream_rng, DOMAIN_SWEEP, DOMAIN_TIE_BREAK};
use crate::Real;

/// How to score the antenna decision when the zero-energy symbol is
/// involved (its metric is identical across antennas).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ZeroSymbolPolicy {
    /// Skip the antenna comparison when both sent and decided symbols are 0.
    #[default]
    Exclude,
    /// Always compare; the receiver keeps its tie-break antenna.
    CountTieBreak,
    /// When the decided symbol is 0 the receiver guesses an antenna uniformly.
    RandomAntenna,
}

impl FromStr for ZeroSymbolPolicy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "exclude" => Ok(Self::Exclude),
            "count-tie-break" | "count-tiebreak" | "count" => Ok(Self::CountTieBreak),
            "random-antenna" | "random" => Ok(Self::RandomAntenna),
            other => config_err(format!(
                "unknown zero-symbol policy '{other}' (expected exclude, count-tie-break or random-antenna)"
            )),
        }
    }
}

impl ZeroSymbolPolicy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exclude => "exclude",
            Self::CountTieBreak => "count-tie-break",
            Self::RandomAntenna => "random-antenna",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig<T> {
    pub n_t: usize,
    pub n_r: usize,
    pub order: usize,
    pub e_min: T,
    pub sigma_h_sq: T,
    pub snr_grid_db: Vec<T>,
    pub detectors: Vec<DetectorKind>,
    pub trials_per_point: u64,
    pub master_seed: u64,
    pub zero_symbol_policy: ZeroSymbolPolicy,
    /// Trials per random stream; part of the experiment definition.
    pub chunk_trials: u64,
    /// Thread count; 0 lets the pool decide. Never affects results.
    pub workers: usize,
}

impl<T: Real> SweepConfig<T> {
    pub const DEFAULT_TRIALS: u64 = 10_000;
    pub const DEFAULT_CHUNK: u64 = 8_192;

    pub fn new(n_t: usize, n_r: usize, order: usize, snr_grid_db: Vec<T>, detectors: Vec<DetectorKind>) -> Self {
        Self {
            n_t,
            n_r,
            order,
            e_min: T::one(),
            sigma_h_sq: T::one(),
            snr_grid_db,
            detectors,
            trials_per_point: Self::DEFAULT_TRIALS,
            master_seed: 0,
            zero_symbol_policy: ZeroSymbolPolicy::Exclude,
            chunk_trials: Self::DEFAULT_CHUNK,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<ConstellationSpec<T>, ConfigError> {
        if self.n_t == 0 || !self.n_t.is_power_of_two() {
            return config_err(format!("n_t must be a power of two, got {}", self.n_t));
        }
        if self.n_r == 0 {
            return config_err("n_r must be at least 1");
        }
        if self.snr_grid_db.is_empty() {
            return config_err("SNR grid is empty");
        }
        if let Some(bad) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return config_err(format!("SNR grid entry {bad} is not finite"));
        }
        if self.detectors.is_empty() {
            return config_err("no detectors selected");
        }
        if self.trials_per_point == 0 {
            return config_err("trials_per_point must be at least 1");
        }
        if self.chunk_trials == 0 {
            return config_err("chunk_trials must be at least 1");
        }
        if !(self.sigma_h_sq > T::zero()) {
            return config_err("sigma_h_sq must be positive");
        }
        build_biased_pam(self.order, self.e_min)
    }
}

/// Counts and rates for one (SNR, detector) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRateRecord<T> {
    pub snr_db: T,
    pub detector: DetectorKind,
    pub n_t: usize,
    pub n_r: usize,
    pub order: usize,
    pub trials: u64,
    pub symbol_errors: u64,
    pub antenna_errors: u64,
    pub overall_errors: u64,
    pub ser: T,
    pub aer: T,
    pub oer: T,
    /// 95% half-width on `oer`.
    pub ci95_halfwidth: T,
}

impl<T: Real> ErrorRateRecord<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        snr_db: T,
        detector: DetectorKind,
        dims: (usize, usize, usize),
        trials: u64,
        symbol_errors: u64,
        antenna_errors: u64,
        overall_errors: u64,
    ) -> Self {
        let rate = |k: u64| T::lit(k as f64 / trials as f64);
        Self {
            snr_db,
            detector,
            n_t: dims.0,
            n_r: dims.1,
            order: dims.2,
            trials,
            symbol_errors,
            antenna_errors,
            overall_errors,
            ser: rate(symbol_errors),
            aer: rate(antenna_errors),
            oer: rate(overall_errors),
            ci95_halfwidth: T::lit(ci95_halfwidth(overall_errors, trials)),
        }
    }
}

const Z95: f64 = 1.959_963_984_540_054;

/// Half-width of a 95% binomial interval: normal approximation, or the
/// Wilson interval's half-width when fewer than 30 errors were seen.
pub fn ci95_halfwidth(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    if errors >= 30 {
        Z95 * (p * (1.0 - p) / n).sqrt()
    } else {
        let z2 = Z95 * Z95;
        Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
    }
}

#[derive(Clone, Copy, Default, Debug, PartialEq, Eq)]
struct Tally {
    symbol: u64,
    antenna: u64,
    overall: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.symbol += o.symbol;
        self.antenna += o.antenna;
        self.overall += o.overall;
    }
}

/// Classify one decision. Returns (symbol error, antenna error, overall error).
pub fn score_decision<R: Rng + ?Sized>(
    sent: SmSymbol,
    decided: SmSymbol,
    n_t: usize,
    policy: ZeroSymbolPolicy,
    rng: &mut R,
) -> (bool, bool, bool) {
    let symbol_err = decided.symbol != sent.symbol;
    let antenna_err = match policy {
        ZeroSymbolPolicy::Exclude => {
            !(sent.symbol == 0 && decided.symbol == 0) && decided.antenna != sent.antenna
        }
        ZeroSymbolPolicy::CountTieBreak => decided.antenna != sent.antenna,
        ZeroSymbolPolicy::RandomAntenna => {
            let antenna = if decided.symbol == 0 { rng.random_range(0..n_t) } else { decided.antenna };
            antenna != sent.antenna
        }
    };
    (symbol_err, antenna_err, symbol_err || antenna_err)
}

struct ChunkJob {
    snr_index: usize,
    chunk_index: u64,
    trials: u64,
}

fn run_chunk<T: Real>(
    cfg: &SweepConfig<T>,
    spec: &ConstellationSpec<T>,
    sigma_w_sq: T,
    job: &ChunkJob,
) -> Vec<Tally> {
    let mut rng = stream_rng(cfg.master_seed, DOMAIN_SWEEP, job.snr_index as u64, job.chunk_index);
    let mut guess_rng = stream_rng(cfg.master_seed, DOMAIN_TIE_BREAK, job.snr_index as u64, job.chunk_index);
    let mut ch = ChannelRealization::zeros(cfg.n_r, cfg.n_t, cfg.sigma_h_sq);
    let mut r = vec![Complex::new(T::zero(), T::zero()); cfg.n_r];
    let mut y = vec![T::zero(); cfg.n_r];
    let noise_sd = (sigma_w_sq * T::lit(0.5)).sqrt();
    let mut tallies = vec![Tally::default(); cfg.detectors.len()];
    for _ in 0..job.trials {
        ch.resample(&mut rng);
        let sent = SmSymbol::new(rng.random_range(0..cfg.n_t), rng.random_range(0..cfg.order));
        let s = spec.amplitudes()[sent.symbol];
        for (i, (ri, yi)) in r.iter_mut().zip(y.iter_mut()).enumerate() {
            *ri = ch.gains()[[i, sent.antenna]].scale(s) + complex_normal(&mut rng, noise_sd);
            *yi = ri.norm_sqr();
        }
        let obs = Observation { r: &r, y: &y, channel: &ch, sigma_w_sq };
        for (kind, tally) in cfg.detectors.iter().zip(tallies.iter_mut()) {
            let decided = detect(*kind, &obs, spec);
            let (se, ae, oe) = score_decision(sent, decided, cfg.n_t, cfg.zero_symbol_policy, &mut guess_rng);
            tally.symbol += u64::from(se);
            tally.antenna += u64::from(ae);
            tally.overall += u64::from(oe);
        }
    }
    tallies
}

/// Runs the whole grid. Output order: SNR grid order, then detector order.
pub fn run_sweep<T: Real>(cfg: &SweepConfig<T>) -> Result<Vec<ErrorRateRecord<T>>, ConfigError> {
    let spec = cfg.validate()?;
    let noise: Vec<T> = cfg
        .snr_grid_db
        .iter()
        .map(|&snr| noise_variance_for_snr(spec.average_energy(), cfg.sigma_h_sq, snr))
        .collect();
    let chunks_per_point = cfg.trials_per_point.div_ceil(cfg.chunk_trials);
    let jobs: Vec<ChunkJob> = (0..cfg.snr_grid_db.len())
        .flat_map(|snr_index| {
            (0..chunks_per_point).map(move |chunk_index| ChunkJob {
                snr_index,
                chunk_index,
                trials: cfg
                    .chunk_trials
                    .min(cfg.trials_per_point - chunk_index * cfg.chunk_trials),
            })
        })
        .collect();

    let work = || -> Vec<(usize, Vec<Tally>)> {
        jobs.par_iter()
            .map(|job| (job.snr_index, run_chunk(cfg, &spec, noise[job.snr_index], job)))
            .collect()
    };
    let partials = if cfg.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| ConfigError::new(format!("cannot start {} workers: {e}", cfg.workers)))?
            .install(work)
    };

    let mut totals = vec![vec![Tally::default(); cfg.detectors.len()]; cfg.snr_grid_db.len()];
    for (snr_index, tallies) in &partials {
        for (acc, t) in totals[*snr_index].iter_mut().zip(tallies) {
            acc.add(t);
        }
    }
    let dims = (cfg.n_t, cfg.n_r, cfg.order);
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len() * cfg.detectors.len());
    for (snr_index, per_detector) in totals.iter().enumerate() {
        for (kind, t) in cfg.detectors.iter().zip(per_detector) {
            out.push(ErrorRateRecord::from_counts(
                cfg.snr_grid_db[snr_index],
                *kind,
                dims,
                cfg.trials_per_point,
                t.symbol,
                t.antenna,
                t.overall,
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiversityError {
    #[error("only {found} records fall inside the {lo}–{hi} dB window; need at least 3")]
    TooFewPoints { found: usize, lo: f64, hi: f64 },
    #[error("record at {snr_db} dB has zero errors in {trials} trials; raise trials_per_point so every point in the window sees errors")]
    ZeroErrors { snr_db: f64, trials: u64 },
}

/// Negated least-squares slope of log₁₀(oer) against SNR/10 inside the
/// inclusive window. Callers pass records of a single detector/scenario.
pub fn estimate_diversity_order<T: Real>(
    records: &[ErrorRateRecord<T>],
    window_db: (T, T),
) -> Result<T, DiversityError> {
    let (lo, hi) = window_db;
    let inside: Vec<&ErrorRateRecord<T>> = records
        .iter()
        .filter(|r| r.snr_db >= lo && r.snr_db <= hi)
        .collect();
    if let Some(r) = inside.iter().find(|r| r.overall_errors == 0 || !(r.oer > T::zero())) {
        return Err(DiversityError::ZeroErrors { snr_db: r.snr_db.as_f64(), trials: r.trials });
    }
    if inside.len() < 3 {
        return Err(DiversityError::TooFewPoints { found: inside.len(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    let pts: Vec<(f64, f64)> = inside
        .iter()
        .map(|r| (r.snr_db.as_f64() / 10.0, r.oer.as_f64().log10()))
        .collect();
    Ok(T::lit(-least_squares_slope(&pts)))
}

/// Ordinary least-squares slope of y on x.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
