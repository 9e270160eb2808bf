//! Experiment files: flat `key = value` lines under `[section]` headers,
//! `#` to end of line is a comment.
//!
//! Sections: `[run]` (seed, SNR grid), `[system]` (antennas, constellation),
//! `[sweep]`, `[analytic]` and `[frame]`. A run manifest uses the same
//! syntax; its `[manifest]` and `[checksums]` sections are skipped here, so
//! a manifest can be fed straight back in.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use smed_core::detectors::DetectorKind;
use smed_core::framesim::FrameConfig;
use smed_core::montecarlo::{SweepConfig, ZeroSymbolPolicy};
use smed_core::AnalyticParams64;

const SECTIONS: [&str; 5] = ["run", "system", "sweep", "analytic", "frame"];
const SKIPPED: [&str; 2] = ["manifest", "checksums"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    /// `inf` is accepted; only frame runs can use it.
    pub snr_db: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSection {
    pub n_t: usize,
    pub n_r: usize,
    pub order: usize,
    pub e_min: f64,
    pub sigma_h_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSection {
    pub detectors: Vec<DetectorKind>,
    pub trials: u64,
    pub chunk_trials: u64,
    pub zero_symbol_policy: ZeroSymbolPolicy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticSection {
    /// Series lengths for the truncation table; empty skips it.
    pub truncations: Vec<usize>,
    /// ED-ML trials per SNR for the paired Monte Carlo reference; 0 compares
    /// against the converged series instead.
    pub mc_trials: u64,
    /// Receive-antenna counts for the slope report; empty skips it.
    pub diversity_n_r: Vec<usize>,
    pub diversity_window_db: (f64, f64),
    pub diversity_step_db: f64,
    pub max_terms: usize,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameSection {
    pub frames: usize,
    pub payload_bits: usize,
    pub training_len: usize,
    pub oversample: usize,
    pub rolloff: f64,
    pub filter_span_symbols: usize,
    pub preamble_half: usize,
    pub max_lead_in: usize,
    pub sync_threshold: f64,
    pub sample_rate: f64,
    /// Largest |estimated − true| start, in samples, that counts as synced.
    pub sync_tolerance: usize,
    /// Write the receive samples of frame 0 at every SNR point.
    pub iq_dump: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub run: RunSection,
    pub system: SystemSection,
    pub sweep: SweepSection,
    pub analytic: AnalyticSection,
    pub frame: FrameSection,
}

impl Config {
    pub fn sweep_config(&self, workers: usize) -> SweepConfig<f64> {
        let s = &self.system;
        let mut cfg = SweepConfig::new(s.n_t, s.n_r, s.order, self.run.snr_db.clone(), self.sweep.detectors.clone());
        cfg.e_min = s.e_min;
        cfg.sigma_h_sq = s.sigma_h_sq;
        cfg.trials_per_point = self.sweep.trials;
        cfg.chunk_trials = self.sweep.chunk_trials;
        cfg.zero_symbol_policy = self.sweep.zero_symbol_policy;
        cfg.master_seed = self.run.seed;
        cfg.workers = workers;
        cfg
    }

    pub fn frame_config(&self) -> FrameConfig {
        let s = &self.system;
        let f = &self.frame;
        let mut cfg = FrameConfig::new(s.n_t, s.n_r, s.order);
        cfg.e_min = s.e_min;
        cfg.sigma_h_sq = s.sigma_h_sq;
        cfg.payload_bits = f.payload_bits;
        cfg.training_len = f.training_len;
        cfg.oversample = f.oversample;
        cfg.rolloff = f.rolloff;
        cfg.filter_span_symbols = f.filter_span_symbols;
        cfg.preamble_half = f.preamble_half;
        cfg.max_lead_in = f.max_lead_in;
        cfg.sync_threshold = f.sync_threshold;
        cfg.sample_rate = f.sample_rate;
        cfg
    }

    /// Analytic parameters at one SNR, for `n_r` receive antennas.
    pub fn analytic_params(&self, n_r: usize, snr_db: f64) -> AnalyticParams64 {
        let s = &self.system;
        let e_av = ((s.order - 1) * (2 * s.order - 1)) as f64 / 6.0 * s.e_min;
        let sigma_w_sq = e_av * s.sigma_h_sq / 10f64.powf(snr_db / 10.0);
        let mut p = AnalyticParams64::new(n_r, s.order, s.e_min, sigma_w_sq);
        p.sigma_h_sq = s.sigma_h_sq;
        p.series.max_terms = self.analytic.max_terms;
        p.series.rel_tol = self.analytic.rel_tol;
        p
    }

    /// Every parameter, defaults included, in the input syntax.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let list = |v: &[String]| v.join(", ");
        let nums = |v: &[f64]| list(&v.iter().map(f64::to_string).collect::<Vec<_>>());
        let counts = |v: &[usize]| list(&v.iter().map(usize::to_string).collect::<Vec<_>>());
        let r = &self.run;
        let _ = writeln!(out, "[run]\nseed = {}\nsnr_db = {}\n", r.seed, nums(&r.snr_db));
        let s = &self.system;
        let _ = writeln!(
            out,
            "[system]\nn_t = {}\nn_r = {}\norder = {}\ne_min = {}\nsigma_h_sq = {}\n",
            s.n_t, s.n_r, s.order, s.e_min, s.sigma_h_sq
        );
        let w = &self.sweep;
        let detectors: Vec<String> = w.detectors.iter().map(|d| d.name().to_string()).collect();
        let _ = writeln!(
            out,
            "[sweep]\ndetectors = {}\ntrials = {}\nchunk_trials = {}\nzero_symbol_policy = {}\n",
            list(&detectors),
            w.trials,
            w.chunk_trials,
            w.zero_symbol_policy.name()
        );
        let a = &self.analytic;
        let _ = writeln!(
            out,
            "[analytic]\ntruncations = {}\nmc_trials = {}\ndiversity_n_r = {}\ndiversity_window_db = {}, {}\n\
             diversity_step_db = {}\nmax_terms = {}\nrel_tol = {}\n",
            counts(&a.truncations),
            a.mc_trials,
            counts(&a.diversity_n_r),
            a.diversity_window_db.0,
            a.diversity_window_db.1,
            a.diversity_step_db,
            a.max_terms,
            a.rel_tol
        );
        let f = &self.frame;
        let _ = writeln!(
            out,
            "[frame]\nframes = {}\npayload_bits = {}\ntraining_len = {}\noversample = {}\nrolloff = {}\n\
             filter_span_symbols = {}\npreamble_half = {}\nmax_lead_in = {}\nsync_threshold = {}\n\
             sample_rate = {}\nsync_tolerance = {}\niq_dump = {}",
            f.frames,
            f.payload_bits,
            f.training_len,
            f.oversample,
            f.rolloff,
            f.filter_span_symbols,
            f.preamble_half,
            f.max_lead_in,
            f.sync_threshold,
            f.sample_rate,
            f.sync_tolerance,
            f.iq_dump
        );
        out
    }
}

type Entries = BTreeMap<String, (usize, String)>;

/// Parses and range-checks a whole file, reporting every problem found.
pub fn parse(text: &str) -> Result<Config, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let sections = split_sections(text, &mut diags);
    let take = |name: &str| Section {
        name: name.to_string(),
        entries: sections.get(name).cloned().unwrap_or_default(),
    };
    let mut run = take("run");
    let mut system = take("system");
    let mut sweep = take("sweep");
    let mut analytic = take("analytic");
    let mut frame = take("frame");
    let d = &mut diags;

    let run_cfg = RunSection {
        seed: run.get(d, "seed", parse_seed).unwrap_or(0),
        snr_db: run.required(d, "snr_db", parse_snr_list).unwrap_or_default(),
    };
    let system_cfg = SystemSection {
        n_t: system.required(d, "n_t", |v| power_of_two(v, 1)).unwrap_or(1),
        n_r: system.required(d, "n_r", |v| at_least(v, 1)).unwrap_or(1),
        order: system.required(d, "order", |v| power_of_two(v, 2)).unwrap_or(2),
        e_min: system.get(d, "e_min", positive).unwrap_or(1.0),
        sigma_h_sq: system.get(d, "sigma_h_sq", positive).unwrap_or(1.0),
    };
    let sweep_cfg = SweepSection {
        detectors: sweep.get(d, "detectors", parse_detectors).unwrap_or_else(|| vec![DetectorKind::EdMl]),
        trials: sweep.get(d, "trials", |v| at_least(v, 1)).unwrap_or(SweepConfig::<f64>::DEFAULT_TRIALS),
        chunk_trials: sweep.get(d, "chunk_trials", |v| at_least(v, 1)).unwrap_or(SweepConfig::<f64>::DEFAULT_CHUNK),
        zero_symbol_policy: sweep
            .get(d, "zero_symbol_policy", |v| ZeroSymbolPolicy::from_str(v).map_err(|e| e.to_string()))
            .unwrap_or_default(),
    };
    let analytic_cfg = AnalyticSection {
        truncations: analytic.get(d, "truncations", |v| parse_list(v, |x| at_least(x, 1))).unwrap_or_default(),
        mc_trials: analytic.get(d, "mc_trials", |v| at_least(v, 0)).unwrap_or(0),
        diversity_n_r: analytic.get(d, "diversity_n_r", |v| parse_list(v, |x| at_least(x, 1))).unwrap_or_default(),
        diversity_window_db: analytic.get(d, "diversity_window_db", parse_window).unwrap_or((20.0, 30.0)),
        diversity_step_db: analytic.get(d, "diversity_step_db", positive).unwrap_or(1.0),
        max_terms: analytic.get(d, "max_terms", |v| at_least(v, 1)).unwrap_or(AnalyticParams64::DEFAULT_MAX_TERMS),
        rel_tol: analytic.get(d, "rel_tol", positive).unwrap_or(1e-12),
    };
    let defaults = FrameConfig::new(1, 1, 2);
    let frame_cfg = FrameSection {
        frames: frame.get(d, "frames", |v| at_least(v, 1)).unwrap_or(100),
        payload_bits: frame.get(d, "payload_bits", |v| at_least(v, 1)).unwrap_or(defaults.payload_bits),
        training_len: frame.get(d, "training_len", |v| at_least(v, 1)).unwrap_or(defaults.training_len),
        oversample: frame.get(d, "oversample", |v| at_least(v, 2)).unwrap_or(defaults.oversample),
        rolloff: frame.get(d, "rolloff", |v| in_range(v, 0.0, 1.0, false)).unwrap_or(defaults.rolloff),
        filter_span_symbols: frame
            .get(d, "filter_span_symbols", |v| at_least(v, 1))
            .unwrap_or(defaults.filter_span_symbols),
        preamble_half: frame.get(d, "preamble_half", |v| at_least(v, 1)).unwrap_or(defaults.preamble_half),
        max_lead_in: frame.get(d, "max_lead_in", |v| at_least(v, 0)).unwrap_or(defaults.max_lead_in),
        sync_threshold: frame
            .get(d, "sync_threshold", |v| in_range(v, 0.0, 1.0, true))
            .unwrap_or(defaults.sync_threshold),
        sample_rate: frame.get(d, "sample_rate", positive).unwrap_or(defaults.sample_rate),
        sync_tolerance: frame.get(d, "sync_tolerance", |v| at_least(v, 0)).unwrap_or(6),
        iq_dump: frame.get(d, "iq_dump", parse_bool).unwrap_or(false),
    };
    for s in [&run, &system, &sweep, &analytic, &frame] {
        s.report_unknown(d);
    }
    if !diags.is_empty() {
        diags.sort_by_key(|g| g.line.unwrap_or(usize::MAX));
        return Err(diags);
    }
    let cfg = Config { run: run_cfg, system: system_cfg, sweep: sweep_cfg, analytic: analytic_cfg, frame: frame_cfg };
    // Cross-field rules live in the library; they have no single line.
    if let Err(e) = cfg.frame_config().validate() {
        return Err(vec![Diagnostic { line: None, message: format!("[frame]: {e}") }]);
    }
    Ok(cfg)
}

fn split_sections(text: &str, diags: &mut Vec<Diagnostic>) -> BTreeMap<String, Entries> {
    let mut sections: BTreeMap<String, Entries> = BTreeMap::new();
    let mut current: Option<String> = None;
    let mut skipping = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut err = |message: String| diags.push(Diagnostic { line: Some(line), message });
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                err(format!("unterminated section header `{content}`"));
                current = None;
                skipping = true;
                continue;
            };
            let name = name.trim().to_ascii_lowercase();
            skipping = SKIPPED.contains(&name.as_str());
            if skipping {
                current = None;
            } else if SECTIONS.contains(&name.as_str()) {
                current = Some(name);
            } else {
                err(format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")));
                current = None;
                skipping = true;
            }
            continue;
        }
        if skipping {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            err(format!("expected `key = value`, found `{content}`"));
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if key.is_empty() {
            err("missing key before `=`".into());
            continue;
        }
        let Some(section) = &current else {
            err(format!("`{key}` appears before any [section] header"));
            continue;
        };
        let entries = sections.entry(section.clone()).or_default();
        if let Some((first, _)) = entries.get(&key) {
            err(format!("duplicate key `{key}` in [{section}] (first set on line {first})"));
            continue;
        }
        entries.insert(key, (line, value));
    }
    sections
}

struct Section {
    name: String,
    entries: Entries,
}

impl Section {
    fn get<T>(&mut self, diags: &mut Vec<Diagnostic>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, value) = self.entries.remove(key)?;
        match parse(&value) {
            Ok(v) => Some(v),
            Err(msg) => {
                diags.push(Diagnostic { line: Some(line), message: format!("[{}] {key}: {msg}", self.name) });
                None
            }
        }
    }

    fn required<T>(
        &mut self,
        diags: &mut Vec<Diagnostic>,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Option<T> {
        if !self.entries.contains_key(key) {
            diags.push(Diagnostic { line: None, message: format!("[{}] {key} is required", self.name) });
            return None;
        }
        self.get(diags, key, parse)
    }

    fn report_unknown(&self, diags: &mut Vec<Diagnostic>) {
        for (key, (line, _)) in &self.entries {
            diags.push(Diagnostic { line: Some(*line), message: format!("unknown key `{key}` in [{}]", self.name) });
        }
    }
}

fn number<T: FromStr>(v: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("`{}` is not a valid number", v.trim()))
}

fn at_least<T: FromStr + PartialOrd + fmt::Display>(v: &str, min: T) -> Result<T, String> {
    let x: T = number(v)?;
    if x < min {
        return Err(format!("must be at least {min}, got {x}"));
    }
    Ok(x)
}

fn power_of_two(v: &str, min: usize) -> Result<usize, String> {
    let x = at_least(v, min)?;
    if !x.is_power_of_two() {
        return Err(format!("must be a power of two, got {x}"));
    }
    Ok(x)
}

fn finite(v: &str) -> Result<f64, String> {
    let x: f64 = number(v)?;
    if !x.is_finite() {
        return Err(format!("must be finite, got {x}"));
    }
    Ok(x)
}

fn positive(v: &str) -> Result<f64, String> {
    let x = finite(v)?;
    if x <= 0.0 {
        return Err(format!("must be positive, got {x}"));
    }
    Ok(x)
}

fn in_range(v: &str, lo: f64, hi: f64, closed_below: bool) -> Result<f64, String> {
    let x = finite(v)?;
    let ok = if closed_below { x >= lo } else { x > lo } && x <= hi;
    if !ok {
        let open = if closed_below { '[' } else { '(' };
        return Err(format!("must lie in {open}{lo}, {hi}], got {x}"));
    }
    Ok(x)
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("`{other}` is not true or false")),
    }
}

fn parse_seed(v: &str) -> Result<u64, String> {
    let v = v.trim();
    match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => v.replace('_', "").parse(),
    }
    .map_err(|_| format!("`{v}` is not a 64-bit unsigned integer"))
}

fn parse_list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| item(x.trim())).collect()
}

/// Comma-separated values and `start:step:stop` ranges (stop inclusive).
fn parse_snr_list(v: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim) {
        let pieces: Vec<&str> = part.split(':').collect();
        match pieces.as_slice() {
            [one] => {
                let x: f64 = number(one)?;
                if x.is_nan() || x == f64::NEG_INFINITY {
                    return Err(format!("SNR `{one}` is not usable"));
                }
                out.push(x);
            }
            [a, step, b] => {
                let (a, step, b) = (finite(a)?, finite(step)?, finite(b)?);
                if step <= 0.0 || b < a {
                    return Err(format!("range `{part}` needs a positive step and start ≤ stop"));
                }
                let n = ((b - a) / step + 1e-9).floor() as usize;
                if n > 10_000 {
                    return Err(format!("range `{part}` has more than 10000 points"));
                }
                out.extend((0..=n).map(|k| a + k as f64 * step));
            }
            _ => return Err(format!("`{part}` is neither a number nor start:step:stop")),
        }
    }
    if out.is_empty() {
        return Err("SNR grid is empty".into());
    }
    Ok(out)
}

fn parse_window(v: &str) -> Result<(f64, f64), String> {
    let w = parse_list(v, finite)?;
    match w.as_slice() {
        [lo, hi] if lo < hi => Ok((*lo, *hi)),
        _ => Err(format!("expected `low, high` with low < high, got `{v}`")),
    }
}

fn parse_detectors(v: &str) -> Result<Vec<DetectorKind>, String> {
    let mut out: Vec<DetectorKind> =
        parse_list(v, |x| DetectorKind::from_str(x).map_err(|e| e.to_string()))?;
    if out.is_empty() {
        return Err("no detectors listed".into());
    }
    let len = out.len();
    out.sort();
    out.dedup();
    if out.len() != len {
        return Err("a detector is listed twice".into());
    }
    Ok(out)
}
