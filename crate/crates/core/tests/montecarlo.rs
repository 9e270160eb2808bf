use smed_core::detectors::DetectorKind;
use smed_core::montecarlo::{ci95_halfwidth, estimate_diversity_order, run_sweep, SweepConfig, ZeroSymbolPolicy};

fn small(workers: usize) -> SweepConfig<f64> {
    let mut cfg = SweepConfig::new(2, 2, 4, vec![0.0, 10.0, 20.0], DetectorKind::ALL.to_vec());
    cfg.trials_per_point = 30_000;
    cfg.chunk_trials = 4_000;
    cfg.master_seed = 12345;
    cfg.workers = workers;
    cfg
}

#[test]
fn worker_count_does_not_change_counts() {
    let a = run_sweep(&small(1)).unwrap();
    let b = run_sweep(&small(8)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 3 * DetectorKind::ALL.len());
    assert_eq!(a[0].snr_db, 0.0);
    assert_eq!(a[0].detector, DetectorKind::ALL[0]);
}

#[test]
fn seed_changes_counts() {
    let mut cfg = small(1);
    let a = run_sweep(&cfg).unwrap();
    cfg.master_seed += 1;
    let b = run_sweep(&cfg).unwrap();
    assert_ne!(a, b);
}

#[test]
fn rates_are_consistent() {
    for rec in run_sweep(&small(0)).unwrap() {
        assert!(rec.overall_errors >= rec.symbol_errors.max(rec.antenna_errors));
        assert!(rec.overall_errors <= rec.symbol_errors + rec.antenna_errors);
        assert_eq!(rec.oer, rec.overall_errors as f64 / rec.trials as f64);
        assert!(rec.ci95_halfwidth > 0.0);
    }
}

#[test]
fn more_snr_fewer_errors() {
    let recs = run_sweep(&small(0)).unwrap();
    for kind in DetectorKind::ALL {
        let oer: Vec<f64> = recs.iter().filter(|r| r.detector == kind).map(|r| r.oer).collect();
        assert!(oer.windows(2).all(|w| w[1] < w[0]), "{kind}: {oer:?}");
    }
}

#[test]
fn coherent_on_off_keying_matches_rayleigh_closed_form() {
    // one antenna, one branch, levels {0, √E}: P = ½(1 − √(g/(1+g))), g = E/(4σ²)
    let mut cfg = SweepConfig::new(1, 1, 2, vec![10.0], vec![DetectorKind::CoherentMl]);
    cfg.trials_per_point = 400_000;
    cfg.master_seed = 3;
    let rec = &run_sweep(&cfg).unwrap()[0];
    let sigma: f64 = 0.5 / 10.0;
    let g = 1.0 / (4.0 * sigma);
    let p = 0.5 * (1.0 - (g / (1.0 + g)).sqrt());
    assert!((rec.ser - p).abs() < 4.0 * (p * (1.0 - p) / 400_000.0).sqrt(), "{} vs {p}", rec.ser);
    assert_eq!(rec.antenna_errors, 0);
}

#[test]
fn zero_symbol_policies_order_antenna_errors() {
    let mut cfg = small(0);
    cfg.detectors = vec![DetectorKind::EdMl];
    let count = |policy| {
        let mut c = cfg.clone();
        c.zero_symbol_policy = policy;
        run_sweep(&c).unwrap().iter().map(|r| r.antenna_errors).sum::<u64>()
    };
    let exclude = count(ZeroSymbolPolicy::Exclude);
    let tie = count(ZeroSymbolPolicy::CountTieBreak);
    assert!(exclude < tie);
    // symbol errors do not depend on the policy
    let sym = |policy| {
        let mut c = cfg.clone();
        c.zero_symbol_policy = policy;
        run_sweep(&c).unwrap().iter().map(|r| r.symbol_errors).sum::<u64>()
    };
    assert_eq!(sym(ZeroSymbolPolicy::Exclude), sym(ZeroSymbolPolicy::RandomAntenna));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(0);
    cfg.n_t = 3;
    assert!(run_sweep(&cfg).is_err());
    let mut cfg = small(0);
    cfg.detectors.clear();
    assert!(run_sweep(&cfg).is_err());
    let mut cfg = small(0);
    cfg.trials_per_point = 0;
    assert!(run_sweep(&cfg).is_err());
    assert!("sometimes".parse::<ZeroSymbolPolicy>().is_err());
}

#[test]
fn diversity_of_single_branch_is_one() {
    let mut cfg = SweepConfig::new(2, 1, 2, vec![20.0, 25.0, 30.0], vec![DetectorKind::CoherentMl]);
    cfg.trials_per_point = 200_000;
    let recs = run_sweep(&cfg).unwrap();
    let d: f64 = estimate_diversity_order(&recs, (20.0, 30.0)).unwrap();
    assert!((d - 1.0).abs() < 0.15, "{d}");
}

#[test]
fn interval_shrinks_with_trials() {
    assert!(ci95_halfwidth(500, 100_000) < ci95_halfwidth(50, 10_000));
    assert!(ci95_halfwidth(5, 10_000) > 0.0);
}
