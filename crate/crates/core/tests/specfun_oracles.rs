mod common;

use common::{euler_2f1, marcum_q_quadrature, scaled_bessel_i, simpson};
use proptest::prelude::*;
use smed_core::specfun::{
    gauss_2f1, log_bessel_i, lower_inc_gamma_reg, marcum_q, marcum_symmetric_residual,
    SeriesControl,
};

fn ctl() -> SeriesControl<f64> {
    SeriesControl::converged()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn bessel_matches_integral_representation() {
    let oracle = scaled_bessel_i(0, 50.0).ln() + 50.0;
    let v = log_bessel_i(0, 50.0).unwrap();
    assert!(rel(v, oracle) < 1e-10, "{v} vs {oracle}");
    // frozen high-precision value
    assert!(rel(v, 47.127_575_501_871_804_58) < 1e-14);
}

#[test]
fn bessel_higher_orders_match_integral() {
    for n in 1..6u32 {
        for &x in &[0.3, 2.0, 17.0, 80.0, 300.0] {
            let oracle = scaled_bessel_i(n, x).ln() + x;
            let v = log_bessel_i(n as i64, x).unwrap();
            assert!(rel(v, oracle) < 1e-9, "n={n} x={x}: {v} vs {oracle}");
        }
    }
}

#[test]
fn marcum_matches_noncentral_chi_density() {
    let v = marcum_q(2, 1.0, 2.0, &ctl()).unwrap();
    let oracle = marcum_q_quadrature(2, 1.0, 2.0);
    assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    assert!((v - 0.530_146_908_083_965_724_8).abs() < 1e-14);
}

#[test]
fn marcum_frozen_values() {
    let cases = [
        (3, 4.0, 6.0, 0.068_016_145_574_504_908_5),
        (1, 30.0, 38.0, 7.013_390_434_471_542_8e-16),
    ];
    for (m, a, b, expect) in cases {
        let v = marcum_q(m, a, b, &ctl()).unwrap();
        assert!(rel(v, expect) < 1e-11, "Q_{m}({a},{b}) = {v}, want {expect}");
    }
}

#[test]
fn incomplete_gamma_matches_quadrature() {
    let gamma_2_5 = 1.5 * 0.5 * std::f64::consts::PI.sqrt();
    let f = |t: f64| t.powf(1.5) * (-t).exp();
    let oracle = simpson(&f, 0.0, 4.0, 1e-15) / gamma_2_5;
    let v = lower_inc_gamma_reg(2.5, 4.0).unwrap();
    assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
    assert!((v - 0.843_764_372_422_277_672_5).abs() < 1e-14);
}

#[test]
fn hypergeometric_matches_euler_integral() {
    // 2F1 is symmetric in (a, b); the Euler form needs c > b > 0
    let v = gauss_2f1(2.0, 5.0, 3.0, -8.0).unwrap();
    let oracle = euler_2f1(5.0, 2.0, 3.0, -8.0);
    assert!(rel(v, oracle) < 1e-9, "{v} vs {oracle}");
    assert!(rel(v, 0.002_591_068_434_689_833_867) < 1e-12);
}

#[test]
fn hypergeometric_frozen_values() {
    let cases = [
        (40.0, 80.0, 41.0, -2.5, 2.248_947_202_612_019_462_7e-39),
        (1.5, 2.0, 1.0, 0.8, 78.262_379_212_492_684_06),
        (3.0, 6.0, 4.0, -50_000.0, 7.999_999_999_999_360_06e-16),
    ];
    for (a, b, c, z, expect) in cases {
        let v = gauss_2f1(a, b, c, z).unwrap();
        assert!(rel(v, expect) < 1e-11, "2F1({a},{b};{c};{z}) = {v}, want {expect}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn symmetric_relation_holds(m in 1usize..=8, a in 0.01f64..10.0, b in 0.01f64..10.0) {
        let r = marcum_symmetric_residual(m, a, b).unwrap();
        prop_assert!(r.abs() < 1e-9, "residual {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn marcum_zero_threshold(m in 1usize..=10, a in 0.0f64..50.0) {
        prop_assert_eq!(marcum_q(m, a, 0.0, &ctl()).unwrap(), 1.0);
    }

    #[test]
    fn marcum_central_is_gamma_tail(m in 1usize..=10, b in 0.0f64..15.0) {
        let q = marcum_q(m, 0.0, b, &ctl()).unwrap();
        let p = lower_inc_gamma_reg(m as f64, b * b / 2.0).unwrap();
        prop_assert!((q - (1.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn marcum_monotone(m in 1usize..=6, a in 0.0f64..12.0, b in 0.0f64..12.0, da in 0.0f64..2.0, db in 0.0f64..2.0) {
        let base = marcum_q(m, a, b, &ctl()).unwrap();
        let more_b = marcum_q(m, a, b + db, &ctl()).unwrap();
        let more_a = marcum_q(m, a + da, b, &ctl()).unwrap();
        prop_assert!(more_b <= base + 1e-14);
        prop_assert!(more_a >= base - 1e-14);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn incomplete_gamma_monotone(s in 0.1f64..40.0, z in 0.0f64..60.0, dz in 0.0f64..5.0) {
        let lo = lower_inc_gamma_reg(s, z).unwrap();
        let hi = lower_inc_gamma_reg(s, z + dz).unwrap();
        prop_assert!(hi >= lo - 1e-15);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn bessel_monotone_in_argument(k in 0i64..8, x in 0.0f64..2000.0, dx in 0.0f64..10.0) {
        let lo = log_bessel_i(k, x).unwrap();
        let hi = log_bessel_i(k, x + dx).unwrap();
        prop_assert!(hi >= lo - 1e-12 * lo.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn marcum_matches_density_quadrature(m in 1u32..=5, a in 0.2f64..6.0, b in 0.0f64..9.0) {
        let v = marcum_q(m as usize, a, b, &ctl()).unwrap();
        let oracle = marcum_q_quadrature(m, a, b);
        prop_assert!((v - oracle).abs() < 1e-8, "Q_{}({},{}) = {} vs {}", m, a, b, v, oracle);
    }

    #[test]
    fn pfaff_matches_euler(a in 0.2f64..12.0, b in 0.2f64..6.0, gap in 0.2f64..6.0, z in -40.0f64..0.9) {
        let c = b + gap;
        let v = gauss_2f1(a, b, c, z).unwrap();
        let oracle = euler_2f1(a, b, c, z);
        prop_assert!(rel(v, oracle) < 1e-9, "2F1({},{};{};{}) = {} vs {}", a, b, c, z, v, oracle);
    }
}
