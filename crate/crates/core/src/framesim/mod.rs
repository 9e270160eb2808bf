//! Offline emulation of an SDR link: framing, per-antenna training, RRC
//! pulse shaping, a flat Rayleigh channel, Schmidl–Cox timing, least-squares
//! magnitude estimation and energy-detection demodulation.
//!
//! A frame is a repeated BPSK preamble on antenna 0, then training symbols
//! sent by one antenna at a time, then the SM payload. Everything here is
//! `f64`; the capture format on disk is f32.

mod estimate;
mod iq;
mod rrc;
mod sync;

pub use estimate::{ls_channel_estimate, ls_channel_magnitudes, ChannelEstimate};
pub use iq::{read_iq_stream, write_iq_capture, IqHeader};
pub use rrc::{convolve, rrc_filter, rrc_taps};
pub use sync::{schmidl_cox_sync, timing_metric};

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{complex_normal, noise_variance_for_snr, sample_channel, ChannelRealization};
use crate::constellation::{build_biased_pam, sm_bits_per_symbol, sm_demap, sm_map, ConstellationSpec, SmSymbol};
use crate::detectors::detect_ed_ml;
use crate::error::{config_err, ConfigError};
use crate::montecarlo::{score_decision, ZeroSymbolPolicy};
use crate::rng::{stream_rng, DOMAIN_FRAME, DOMAIN_TIE_BREAK};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("payload has {got} bits, frame expects {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("training energy on antenna {antenna} is zero")]
    ZeroTraining { antenna: usize },
    #[error("{0}")]
    Degenerate(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameConfig {
    pub payload_bits: usize,
    /// Training symbols in total, split evenly and sent antenna by antenna.
    pub training_len: usize,
    pub oversample: usize,
    pub rolloff: f64,
    pub filter_span_symbols: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub order: usize,
    pub e_min: f64,
    pub sigma_h_sq: f64,
    /// Symbols in each of the two identical preamble halves.
    pub preamble_half: usize,
    /// Frames start after a uniform 0..=max_lead_in noise-only samples.
    pub max_lead_in: usize,
    /// Peak timing metric below which the frame is declared erased.
    pub sync_threshold: f64,
    pub sample_rate: f64,
}

impl FrameConfig {
    pub fn new(n_t: usize, n_r: usize, order: usize) -> Self {
        Self {
            payload_bits: 4000,
            training_len: 40,
            oversample: 12,
            rolloff: 0.5,
            filter_span_symbols: 8,
            n_t,
            n_r,
            order,
            e_min: 1.0,
            sigma_h_sq: 1.0,
            preamble_half: 64,
            max_lead_in: 1000,
            sync_threshold: 0.5,
            sample_rate: 12e6,
        }
    }

    pub fn validate(&self) -> Result<ConstellationSpec<f64>, ConfigError> {
        let spec = build_biased_pam(self.order, self.e_min)?;
        sm_bits_per_symbol(self.n_t, self.order)?;
        if self.n_r == 0 {
            return config_err("n_r must be at least 1");
        }
        if self.payload_bits == 0 {
            return config_err("payload must carry at least one bit");
        }
        if self.training_len == 0 || self.training_len % self.n_t != 0 {
            return config_err(format!(
                "training length {} must be a positive multiple of n_t = {}",
                self.training_len, self.n_t
            ));
        }
        if self.oversample < 2 {
            return config_err(format!("oversample must be at least 2, got {}", self.oversample));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return config_err(format!("roll-off must lie in (0, 1], got {}", self.rolloff));
        }
        if self.filter_span_symbols == 0 || (self.filter_span_symbols * self.oversample) % 2 != 0 {
            return config_err(format!(
                "filter span {} × oversample {} must be a positive even number of samples",
                self.filter_span_symbols, self.oversample
            ));
        }
        if self.preamble_half == 0 {
            return config_err("preamble half length must be at least 1");
        }
        if !(self.sigma_h_sq > 0.0) {
            return config_err(format!("sigma_h_sq must be positive, got {}", self.sigma_h_sq));
        }
        if !(0.0..=1.0).contains(&self.sync_threshold) {
            return config_err(format!("sync threshold must lie in [0, 1], got {}", self.sync_threshold));
        }
        if !(self.sample_rate > 0.0) {
            return config_err(format!("sample rate must be positive, got {}", self.sample_rate));
        }
        Ok(spec)
    }

    pub fn layout(&self) -> Result<FrameLayout, ConfigError> {
        self.validate()?;
        let bps = sm_bits_per_symbol(self.n_t, self.order)?;
        Ok(FrameLayout {
            preamble_symbols: 2 * self.preamble_half,
            training_symbols: self.training_len,
            payload_symbols: self.payload_bits.div_ceil(bps),
            oversample: self.oversample,
            tx_delay: self.filter_span_symbols * self.oversample / 2,
        })
    }
}

/// Symbol-grid regions of a frame and the transmit filter delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameLayout {
    pub preamble_symbols: usize,
    pub training_symbols: usize,
    pub payload_symbols: usize,
    pub oversample: usize,
    /// Samples from a symbol's impulse to the peak of its shaped pulse.
    pub tx_delay: usize,
}

impl FrameLayout {
    pub fn preamble_start(&self) -> usize {
        0
    }

    pub fn training_start(&self) -> usize {
        self.preamble_symbols
    }

    pub fn payload_start(&self) -> usize {
        self.preamble_symbols + self.training_symbols
    }

    pub fn total_symbols(&self) -> usize {
        self.payload_start() + self.payload_symbols
    }

    /// Samples per transmit stream: the zero-stuffed grid plus filter tails.
    pub fn stream_len(&self) -> usize {
        self.total_symbols() * self.oversample + 2 * self.tx_delay
    }
}

/// One transmitted frame.
#[derive(Clone, Debug)]
pub struct TxFrame {
    /// N_t rows of the symbol grid before shaping.
    pub grid: Vec<Vec<Complex64>>,
    /// N_t rows of shaped samples.
    pub streams: Vec<Vec<Complex64>>,
    pub payload_symbols: Vec<SmSymbol>,
    pub layout: FrameLayout,
}

impl TxFrame {
    /// The training columns of the symbol grid.
    pub fn training_grid(&self) -> Vec<Vec<Complex64>> {
        let (a, b) = (self.layout.training_start(), self.layout.payload_start());
        self.grid.iter().map(|row| row[a..b].to_vec()).collect()
    }
}

/// Builds the per-antenna grids and shaped streams for `payload`. The
/// preamble signs are drawn from `rng`; the payload is zero-padded to a
/// whole number of SM symbols.
pub fn build_frame<R: Rng + ?Sized>(cfg: &FrameConfig, payload: &[bool], rng: &mut R) -> Result<TxFrame, FrameError> {
    let spec = cfg.validate()?;
    let layout = cfg.layout()?;
    if payload.len() != cfg.payload_bits {
        return Err(FrameError::PayloadLength { expected: cfg.payload_bits, got: payload.len() });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut grid = vec![vec![zero; layout.total_symbols()]; cfg.n_t];

    let pre_amp = spec.average_energy().sqrt();
    for j in 0..cfg.preamble_half {
        let s = if rng.random::<bool>() { pre_amp } else { -pre_amp };
        grid[0][j] = Complex64::new(s, 0.0);
        grid[0][j + cfg.preamble_half] = Complex64::new(s, 0.0);
    }

    let train_amp = *spec.amplitudes().last().expect("order ≥ 2");
    let per = cfg.training_len / cfg.n_t;
    for (n, row) in grid.iter_mut().enumerate() {
        let start = layout.training_start() + n * per;
        row[start..start + per].fill(Complex64::new(train_amp, 0.0));
    }

    let bps = sm_bits_per_symbol(cfg.n_t, cfg.order)?;
    let mut padded = payload.to_vec();
    padded.resize(layout.payload_symbols * bps, false);
    let mut payload_symbols = Vec::with_capacity(layout.payload_symbols);
    for (j, bits) in padded.chunks(bps).enumerate() {
        let sym = sm_map(bits, cfg.n_t, cfg.order)?;
        grid[sym.antenna][layout.payload_start() + j] = Complex64::new(spec.amplitudes()[sym.symbol], 0.0);
        payload_symbols.push(sym);
    }

    let taps = rrc_taps(cfg.rolloff, cfg.filter_span_symbols, cfg.oversample)?;
    let streams = grid
        .iter()
        .map(|row| {
            let mut stuffed = vec![zero; row.len() * cfg.oversample];
            for (j, &s) in row.iter().enumerate() {
                stuffed[j * cfg.oversample] = s;
            }
            convolve(&stuffed, &taps)
        })
        .collect();
    Ok(TxFrame { grid, streams, payload_symbols, layout })
}

/// Receive samples: `lead` noise-only samples, then Σₙ h_{i,n}·xₙ plus
/// white noise of variance σ_w² per sample, then one filter span of noise.
/// The channel is flat, so scaling samples by h equals scaling symbols.
pub fn pass_channel<R: Rng + ?Sized>(
    tx: &TxFrame,
    ch: &ChannelRealization<f64>,
    sigma_w_sq: f64,
    lead: usize,
    rng: &mut R,
) -> Vec<Vec<Complex64>> {
    let len = tx.layout.stream_len();
    let total = lead + len + 2 * tx.layout.tx_delay;
    let sd = (0.5 * sigma_w_sq).sqrt();
    (0..ch.n_r())
        .map(|i| {
            let mut out = vec![Complex64::new(0.0, 0.0); total];
            for (n, s) in tx.streams.iter().enumerate() {
                let h = ch.gains()[[i, n]];
                for (o, &x) in out[lead..lead + len].iter_mut().zip(s) {
                    *o += h * x;
                }
            }
            if sd > 0.0 {
                out.iter_mut().for_each(|o| *o += complex_normal(rng, sd));
            }
            out
        })
        .collect()
}

/// Outcome of receiving one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    /// Estimated noise-only samples before the frame.
    pub sync_offset: i64,
    /// The lead-in actually used.
    pub true_offset: i64,
    pub sync_metric_peak: f64,
    /// The timing metric never reached the threshold; nothing was demodulated.
    pub erased: bool,
    pub beta_estimates: Array2<f64>,
    pub beta_truth: Array2<f64>,
    pub bits: usize,
    pub bit_errors: usize,
    pub symbols: usize,
    /// Amplitude-level errors.
    pub symbol_errors: usize,
    /// Antenna-index errors, zero-level symbols excluded.
    pub antenna_errors: usize,
    /// SM symbols with either part wrong.
    pub overall_errors: usize,
    pub snr_estimate_db: f64,
}

/// Matched filter, timing, estimation and detection for one received
/// frame. `tx` supplies the known training and the reference payload;
/// `true_offset` and `beta_truth` are left for the caller to fill in.
pub fn receive_frame(
    cfg: &FrameConfig,
    tx: &TxFrame,
    payload: &[bool],
    rx: &[Vec<Complex64>],
) -> Result<FrameReport, FrameError> {
    let spec = &cfg.validate()?;
    if rx.len() != cfg.n_r {
        return Err(ConfigError::new(format!("got {} receive streams, frame expects {}", rx.len(), cfg.n_r)).into());
    }
    let layout = tx.layout;
    let os = cfg.oversample;
    let taps = rrc_taps(cfg.rolloff, cfg.filter_span_symbols, os)?;
    let mf: Vec<Vec<Complex64>> = rx.iter().map(|r| convolve(r, &taps)).collect();
    let total_delay = 2 * layout.tx_delay;

    let half = cfg.preamble_half * os;
    let (d, peak) = schmidl_cox_sync(&mf, half)?;
    // The best window pair starts about half a symbol ahead of the first
    // preamble peak. Refine by correlating with the known preamble over a
    // few symbols either side; a one-symbol slip decorrelates it.
    let preamble = &tx.grid[0][..layout.preamble_symbols];
    let corr_at = |t: usize| -> f64 {
        mf.iter()
            .map(|z| {
                preamble
                    .iter()
                    .enumerate()
                    .map(|(j, p)| z.get(t + j * os).map_or(Complex64::new(0.0, 0.0), |v| p.conj() * v))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum()
    };
    let tau = (d.saturating_sub(8 * os)..=d + 8 * os)
        .fold((d, f64::NEG_INFINITY), |best, t| {
            let c = corr_at(t);
            if c > best.1 { (t, c) } else { best }
        })
        .0;
    let sync_offset = tau as i64 - total_delay as i64;

    let n_r = cfg.n_r;
    let n_t = cfg.n_t;
    let empty = FrameReport {
        sync_offset,
        true_offset: 0,
        sync_metric_peak: peak,
        erased: true,
        beta_estimates: Array2::zeros((n_r, n_t)),
        beta_truth: Array2::zeros((n_r, n_t)),
        bits: cfg.payload_bits,
        bit_errors: 0,
        symbols: layout.payload_symbols,
        symbol_errors: 0,
        antenna_errors: 0,
        overall_errors: 0,
        snr_estimate_db: f64::NAN,
    };
    let last = tau + (layout.total_symbols() - 1) * os;
    if peak < cfg.sync_threshold || mf.iter().any(|z| last >= z.len()) {
        return Ok(empty);
    }

    let sample = |j: usize| -> Vec<Complex64> { mf.iter().map(|z| z[tau + j * os]).collect() };
    let rx_training: Vec<Vec<Complex64>> = (0..n_r)
        .map(|i| (layout.training_start()..layout.payload_start()).map(|j| mf[i][tau + j * os]).collect())
        .collect();
    let est = ls_channel_estimate(&rx_training, &tx.training_grid())?;
    let snr_estimate_db = match est.noise_variance {
        Some(v) => {
            let gain = est.magnitudes.mean().unwrap_or(0.0);
            10.0 * (spec.average_energy() * gain / v).log10()
        }
        None => f64::NAN,
    };

    let bps = sm_bits_per_symbol(n_t, cfg.order)?;
    let mut report = FrameReport { erased: false, beta_estimates: est.magnitudes.clone(), snr_estimate_db, ..empty };
    // the Exclude policy never draws from this
    let mut unused = stream_rng(0, DOMAIN_TIE_BREAK, 0, 0);
    for (k, &sent) in tx.payload_symbols.iter().enumerate() {
        let r = sample(layout.payload_start() + k);
        let y: Vec<f64> = r.iter().map(|v| v.norm_sqr()).collect();
        let decided = detect_ed_ml(&y, est.magnitudes.view(), spec);
        let (se, ae, oe) = score_decision(sent, decided, n_t, ZeroSymbolPolicy::Exclude, &mut unused);
        report.symbol_errors += usize::from(se);
        report.antenna_errors += usize::from(ae);
        report.overall_errors += usize::from(oe);
        let bits = sm_demap(decided, n_t, cfg.order)?;
        let base = k * bps;
        for (b, &got) in bits.iter().enumerate() {
            if base + b < payload.len() && got != payload[base + b] {
                report.bit_errors += 1;
            }
        }
    }
    Ok(report)
}

/// Runs one frame over a given channel and noise level. The payload bits,
/// preamble, lead-in and noise all come from `rng`.
pub fn run_frame_with_channel<R: Rng + ?Sized>(
    cfg: &FrameConfig,
    ch: &ChannelRealization<f64>,
    sigma_w_sq: f64,
    rng: &mut R,
) -> Result<FrameReport, FrameError> {
    capture_frame_with_channel(cfg, ch, sigma_w_sq, rng).map(|c| c.report)
}

/// A received frame together with the samples it was decoded from.
#[derive(Clone, Debug)]
pub struct FrameCapture {
    pub report: FrameReport,
    /// One sample stream per receive antenna, before matched filtering.
    pub rx: Vec<Vec<Complex64>>,
    pub layout: FrameLayout,
}

/// [`run_frame_with_channel`], keeping the receive samples.
pub fn capture_frame_with_channel<R: Rng + ?Sized>(
    cfg: &FrameConfig,
    ch: &ChannelRealization<f64>,
    sigma_w_sq: f64,
    rng: &mut R,
) -> Result<FrameCapture, FrameError> {
    cfg.validate()?;
    if ch.n_r() != cfg.n_r || ch.n_t() != cfg.n_t {
        return Err(ConfigError::new(format!(
            "channel is {}×{}, frame expects {}×{}",
            ch.n_r(),
            ch.n_t(),
            cfg.n_r,
            cfg.n_t
        ))
        .into());
    }
    if !(sigma_w_sq >= 0.0 && sigma_w_sq.is_finite()) {
        return Err(ConfigError::new(format!("noise variance must be finite and non-negative, got {sigma_w_sq}")).into());
    }
    let payload: Vec<bool> = (0..cfg.payload_bits).map(|_| rng.random()).collect();
    let tx = build_frame(cfg, &payload, rng)?;
    let lead = rng.random_range(0..=cfg.max_lead_in);
    let rx = pass_channel(&tx, ch, sigma_w_sq, lead, rng);
    let mut report = receive_frame(cfg, &tx, &payload, &rx)?;
    report.true_offset = lead as i64;
    report.beta_truth = ch.sq_magnitudes().clone();
    Ok(FrameCapture { report, rx, layout: tx.layout })
}

/// One frame over a fresh Rayleigh channel at SNR = E_av·σ_h²/σ_w².
/// An SNR of +∞ dB sends the frame without noise.
pub fn run_frame_loopback<R: Rng + ?Sized>(cfg: &FrameConfig, snr_db: f64, rng: &mut R) -> Result<FrameReport, FrameError> {
    capture_frame_loopback(cfg, snr_db, rng).map(|c| c.report)
}

/// [`run_frame_loopback`], keeping the receive samples.
pub fn capture_frame_loopback<R: Rng + ?Sized>(
    cfg: &FrameConfig,
    snr_db: f64,
    rng: &mut R,
) -> Result<FrameCapture, FrameError> {
    let spec = cfg.validate()?;
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(ConfigError::new(format!("SNR must be finite or +inf, got {snr_db}")).into());
    }
    let ch = sample_channel(cfg.n_r, cfg.n_t, cfg.sigma_h_sq, rng)?;
    let sigma_w_sq = noise_variance_for_snr(spec.average_energy(), cfg.sigma_h_sq, snr_db);
    capture_frame_with_channel(cfg, &ch, sigma_w_sq, rng)
}

/// The random stream [`run_frames`] gives frame `k`; replaying it through
/// [`capture_frame_loopback`] reproduces that frame sample for sample.
pub fn frame_rng(master_seed: u64, stream: u64, k: u64) -> crate::rng::SimRng {
    stream_rng(master_seed, DOMAIN_FRAME, stream, k)
}

/// `frames` independent loopback frames; frame k draws from its own stream
/// keyed by (`master_seed`, `stream`, k), so results do not depend on
/// `workers` (0 uses the global pool).
pub fn run_frames(
    cfg: &FrameConfig,
    snr_db: f64,
    frames: usize,
    master_seed: u64,
    stream: u64,
    workers: usize,
) -> Result<Vec<FrameReport>, FrameError> {
    cfg.validate()?;
    let work = || -> Result<Vec<FrameReport>, FrameError> {
        (0..frames)
            .into_par_iter()
            .map(|k| run_frame_loopback(cfg, snr_db, &mut frame_rng(master_seed, stream, k as u64)))
            .collect()
    };
    if workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| ConfigError::new(format!("cannot start {workers} workers: {e}")))?
            .install(work)
    }
}

/// Totals over a batch of frames. Erased frames contribute only to `erasures`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameTotals {
    pub frames: usize,
    pub erasures: usize,
    pub bits: usize,
    pub bit_errors: usize,
    pub symbols: usize,
    pub symbol_errors: usize,
    pub antenna_errors: usize,
    pub overall_errors: usize,
}

impl FrameTotals {
    pub fn from_reports(reports: &[FrameReport]) -> Self {
        let mut t = Self { frames: reports.len(), ..Self::default() };
        for r in reports {
            if r.erased {
                t.erasures += 1;
                continue;
            }
            t.bits += r.bits;
            t.bit_errors += r.bit_errors;
            t.symbols += r.symbols;
            t.symbol_errors += r.symbol_errors;
            t.antenna_errors += r.antenna_errors;
            t.overall_errors += r.overall_errors;
        }
        t
    }

    fn rate(errors: usize, n: usize) -> f64 {
        if n == 0 {
            f64::NAN
        } else {
            errors as f64 / n as f64
        }
    }

    pub fn ber(&self) -> f64 {
        Self::rate(self.bit_errors, self.bits)
    }

    pub fn ser(&self) -> f64 {
        Self::rate(self.symbol_errors, self.symbols)
    }

    pub fn aer(&self) -> f64 {
        Self::rate(self.antenna_errors, self.symbols)
    }

    pub fn oer(&self) -> f64 {
        Self::rate(self.overall_errors, self.symbols)
    }
}
