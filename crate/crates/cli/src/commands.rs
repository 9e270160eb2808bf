//! The `sweep`, `analytic` and `frame` subcommands.

use std::fs;
use std::path::Path;

use log::info;
use smed_core::analytic::{antenna_error_union, overall_error, ser_analytic, ser_truncated, AnalyticError};
use smed_core::detectors::DetectorKind;
use smed_core::framesim::{
    capture_frame_loopback, frame_rng, run_frames, write_iq_capture, FrameError, FrameReport, FrameTotals, IqHeader,
};
use smed_core::montecarlo::{least_squares_slope, run_sweep, ErrorRateRecord};

use crate::config::Config;
use crate::output::{num, record_row, sha256_hex, Table, Written, RECORD_HEADER};
use crate::CliError;

fn analytic_err(e: AnalyticError) -> CliError {
    match e {
        AnalyticError::Config(c) => CliError::Config(c.to_string()),
        other => CliError::Numeric(other.to_string()),
    }
}

fn frame_err(e: FrameError) -> CliError {
    match e {
        FrameError::Config(c) => CliError::Config(c.to_string()),
        other => CliError::Numeric(other.to_string()),
    }
}

pub fn sweep(cfg: &Config, workers: usize, out: &Path) -> Result<Vec<Written>, CliError> {
    let sweep = cfg.sweep_config(workers);
    let records = run_sweep(&sweep).map_err(|e| CliError::Config(e.to_string()))?;
    let mut table = Table::new("records.csv", &RECORD_HEADER)?;
    for r in &records {
        info!("{} at {} dB: oer {}", r.detector, r.snr_db, r.oer);
        table.row(record_row("mc", r))?;
    }
    Ok(vec![table.save(out)?])
}

pub fn analytic(cfg: &Config, workers: usize, out: &Path) -> Result<Vec<Written>, CliError> {
    let s = &cfg.system;
    let a = &cfg.analytic;
    if let Some(bad) = cfg.run.snr_db.iter().find(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("analytic evaluation needs finite SNRs, got {bad}")));
    }
    let e_av = ((s.order - 1) * (2 * s.order - 1)) as f64 / 6.0 * s.e_min;
    let mut records = Table::new("records.csv", &RECORD_HEADER)?;
    let mut ser = Vec::with_capacity(cfg.run.snr_db.len());
    for &snr in &cfg.run.snr_db {
        let p = cfg.analytic_params(s.n_r, snr);
        let p_s = ser_analytic(&p).map_err(analytic_err)?;
        // A single antenna carries no index, so there is nothing to confuse.
        let p_a = if s.n_t >= 2 { antenna_error_union(e_av, s.n_t, &p).map_err(analytic_err)? } else { 0.0 };
        let p_e = overall_error(p_s, p_a);
        info!("analytic at {snr} dB: P_s {p_s:e}, P_a {p_a:e}");
        records.row([
            "analytic".to_string(),
            DetectorKind::EdMl.name().to_string(),
            num(snr),
            s.n_t.to_string(),
            s.n_r.to_string(),
            s.order.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            num(p_s),
            num(p_a),
            num(p_e),
            String::new(),
        ])?;
        ser.push(p_s);
    }

    let mut mc: Vec<ErrorRateRecord<f64>> = Vec::new();
    if a.mc_trials > 0 {
        let mut sweep = cfg.sweep_config(workers);
        sweep.detectors = vec![DetectorKind::EdMl];
        sweep.trials_per_point = a.mc_trials;
        mc = run_sweep(&sweep).map_err(|e| CliError::Config(e.to_string()))?;
        for r in &mc {
            records.row(record_row("mc", r))?;
        }
    }
    let mut written = vec![records.save(out)?];

    if !a.truncations.is_empty() {
        let mut table = Table::new(
            "truncation.csv",
            &["snr_db", "terms", "ser_truncated", "reference", "ser_reference", "relative_error"],
        )?;
        for (k, &snr) in cfg.run.snr_db.iter().enumerate() {
            let (reference, value) = match mc.get(k) {
                Some(r) => ("mc", r.ser),
                None => ("series", ser[k]),
            };
            let p = cfg.analytic_params(s.n_r, snr);
            for &terms in &a.truncations {
                let t = ser_truncated(&p, terms).map_err(analytic_err)?;
                let rel = (t - value).abs() / value;
                table.row([num(snr), terms.to_string(), num(t), reference.to_string(), num(value), num(rel)])?;
            }
        }
        written.push(table.save(out)?);
    }

    if !a.diversity_n_r.is_empty() {
        let (lo, hi) = a.diversity_window_db;
        let steps = ((hi - lo) / a.diversity_step_db + 1e-9).floor() as usize;
        let grid: Vec<f64> = (0..=steps).map(|k| lo + k as f64 * a.diversity_step_db).collect();
        if grid.len() < 3 {
            return Err(CliError::Config(format!(
                "diversity window {lo}–{hi} dB with step {} dB gives fewer than 3 points",
                a.diversity_step_db
            )));
        }
        let mut table = Table::new("diversity.csv", &["n_r", "window_lo_db", "window_hi_db", "points", "ser_slope"])?;
        for &n_r in &a.diversity_n_r {
            let pts = grid
                .iter()
                .map(|&snr| {
                    let p_s = ser_analytic(&cfg.analytic_params(n_r, snr)).map_err(analytic_err)?;
                    Ok((snr / 10.0, p_s.log10()))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let d = -least_squares_slope(&pts);
            info!("analytic SER slope with {n_r} receive antennas: {d}");
            table.row([n_r.to_string(), num(lo), num(hi), grid.len().to_string(), num(d)])?;
        }
        written.push(table.save(out)?);
    }
    Ok(written)
}

pub fn frame(cfg: &Config, workers: usize, out: &Path) -> Result<Vec<Written>, CliError> {
    let fcfg = cfg.frame_config();
    let f = &cfg.frame;
    let s = &cfg.system;
    let mut records = Table::new("records.csv", &RECORD_HEADER)?;
    let mut summary = Table::new(
        "frame_summary.csv",
        &[
            "snr_db",
            "frames",
            "erasures",
            "synced",
            "sync_rate",
            "bits",
            "bit_errors",
            "ber",
            "symbols",
            "symbol_errors",
            "antenna_errors",
            "overall_errors",
            "ser",
            "aer",
            "oer",
            "mean_snr_estimate_db",
        ],
    )?;
    let mut detail = Table::new(
        "frames.csv",
        &[
            "snr_db",
            "frame",
            "true_offset",
            "sync_offset",
            "sync_metric_peak",
            "erased",
            "bits",
            "bit_errors",
            "symbols",
            "symbol_errors",
            "antenna_errors",
            "overall_errors",
            "snr_estimate_db",
            "beta_rel_error",
        ],
    )?;
    let mut iq_files = Vec::new();
    for (k, &snr) in cfg.run.snr_db.iter().enumerate() {
        let reports = run_frames(&fcfg, snr, f.frames, cfg.run.seed, k as u64, workers).map_err(frame_err)?;
        let totals = FrameTotals::from_reports(&reports);
        let synced = reports.iter().filter(|r| is_synced(r, f.sync_tolerance)).count();
        let estimates: Vec<f64> =
            reports.iter().filter(|r| !r.erased).map(|r| r.snr_estimate_db).filter(|x| x.is_finite()).collect();
        let mean_estimate = estimates.iter().sum::<f64>() / estimates.len() as f64;
        info!("frames at {snr} dB: {} erased, {synced} synced, ser {}", totals.erasures, totals.ser());
        let rec = ErrorRateRecord::from_counts(
            snr,
            DetectorKind::EdMl,
            (s.n_t, s.n_r, s.order),
            totals.symbols as u64,
            totals.symbol_errors as u64,
            totals.antenna_errors as u64,
            totals.overall_errors as u64,
        );
        records.row(record_row("frame", &rec))?;
        summary.row([
            num(snr),
            totals.frames.to_string(),
            totals.erasures.to_string(),
            synced.to_string(),
            num(synced as f64 / totals.frames as f64),
            totals.bits.to_string(),
            totals.bit_errors.to_string(),
            num(totals.ber()),
            totals.symbols.to_string(),
            totals.symbol_errors.to_string(),
            totals.antenna_errors.to_string(),
            totals.overall_errors.to_string(),
            num(totals.ser()),
            num(totals.aer()),
            num(totals.oer()),
            num(mean_estimate),
        ])?;
        for (j, r) in reports.iter().enumerate() {
            detail.row([
                num(snr),
                j.to_string(),
                r.true_offset.to_string(),
                r.sync_offset.to_string(),
                num(r.sync_metric_peak),
                r.erased.to_string(),
                r.bits.to_string(),
                r.bit_errors.to_string(),
                r.symbols.to_string(),
                r.symbol_errors.to_string(),
                r.antenna_errors.to_string(),
                r.overall_errors.to_string(),
                num(r.snr_estimate_db),
                num(beta_rel_error(r)),
            ])?;
        }
        if f.iq_dump {
            let capture =
                capture_frame_loopback(&fcfg, snr, &mut frame_rng(cfg.run.seed, k as u64, 0)).map_err(frame_err)?;
            debug_assert_eq!(Some(&capture.report), reports.first());
            let header = IqHeader {
                sample_rate: f.sample_rate,
                oversample: f.oversample,
                rolloff: f.rolloff,
                filter_span_symbols: f.filter_span_symbols,
                layout: capture.layout,
            };
            let dir = out.join("iq");
            let paths = write_iq_capture(&dir, &format!("point{k}"), &capture.rx, &header)
                .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for p in paths {
                let bytes = fs::read(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                let name = p.strip_prefix(out).unwrap_or(&p).display().to_string();
                iq_files.push(Written { name, file_sha256: sha256_hex(&bytes), row_sha256: Vec::new() });
            }
        }
    }
    let mut written = vec![records.save(out)?, summary.save(out)?, detail.save(out)?];
    written.extend(iq_files);
    Ok(written)
}

fn is_synced(r: &FrameReport, tolerance: usize) -> bool {
    !r.erased && r.sync_offset.abs_diff(r.true_offset) <= tolerance as u64
}

/// ‖β̂ − β‖ / ‖β‖ over all antenna pairs; NaN for erased frames.
fn beta_rel_error(r: &FrameReport) -> f64 {
    if r.erased {
        return f64::NAN;
    }
    let diff: f64 = r.beta_estimates.iter().zip(&r.beta_truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let norm: f64 = r.beta_truth.iter().map(|b| b * b).sum();
    (diff / norm).sqrt()
}
