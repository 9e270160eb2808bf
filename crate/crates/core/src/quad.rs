//! Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use crate::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: T,
    pub intervals: usize,
    pub converged: bool,
}

/// Several integrals of one integrand family sharing a single mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResultVec<T, const K: usize> {
    pub value: [T; K],
    pub abs_err: [T; K],
    pub intervals: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> QuadOptions<T> {
    pub fn relative(rel_tol: T) -> Self {
        Self {
            abs_tol: T::zero(),
            rel_tol,
            max_intervals: 500,
        }
    }
}

struct Segment<T, const K: usize> {
    a: T,
    b: T,
    value: [T; K],
    err: [T; K],
}

fn kronrod<T: Real, const K: usize, F: FnMut(T) -> [T; K]>(f: &mut F, a: T, b: T) -> Segment<T, K> {
    let half = T::lit(0.5);
    let center = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(center);
    let mut k = fc.map(|v| v * T::lit(WGK[7]));
    let mut g = fc.map(|v| v * T::lit(WG[3]));
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let lo = f(center - dx);
        let hi = f(center + dx);
        for c in 0..K {
            let s = lo[c] + hi[c];
            k[c] = k[c] + s * T::lit(WGK[j]);
            if j % 2 == 1 {
                g[c] = g[c] + s * T::lit(WG[j / 2]);
            }
        }
    }
    let mut value = k;
    let mut err = k;
    for c in 0..K {
        value[c] = k[c] * h;
        err[c] = ((k[c] - g[c]) * h).abs();
    }
    Segment { a, b, value, err }
}

/// ∫ₐᵇ f, refining the worst segment until the error estimate meets
/// max(abs_tol, rel_tol·|I|) or the interval budget is spent.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, opts: &QuadOptions<T>) -> QuadResult<T> {
    let r = integrate_vec(|x| [f(x)], a, b, opts);
    QuadResult {
        value: r.value[0],
        abs_err: r.abs_err[0],
        intervals: r.intervals,
        converged: r.converged,
    }
}

/// Component-wise version of [`integrate`]: every component must meet its
/// own tolerance, and the segment worst relative to its targets is split.
pub fn integrate_vec<T: Real, const K: usize, F: FnMut(T) -> [T; K]>(
    mut f: F,
    a: T,
    b: T,
    opts: &QuadOptions<T>,
) -> QuadResultVec<T, K> {
    let mut segs = vec![kronrod(&mut f, a, b)];
    loop {
        let mut total = [T::zero(); K];
        let mut err = [T::zero(); K];
        for s in &segs {
            for c in 0..K {
                total[c] = total[c] + s.value[c];
                err[c] = err[c] + s.err[c];
            }
        }
        let target = total.map(|t| opts.abs_tol.max(opts.rel_tol * t.abs()));
        let finite = err.iter().all(|e| e.is_finite());
        let done = !finite || (0..K).all(|c| err[c] <= target[c]);
        if done || segs.len() >= opts.max_intervals {
            return QuadResultVec {
                value: total,
                abs_err: err,
                intervals: segs.len(),
                converged: done && finite,
            };
        }
        let badness = |s: &Segment<T, K>| {
            (0..K).fold(T::zero(), |acc, c| {
                let scale = target[c].max(T::min_positive_value());
                acc.max(s.err[c] / scale)
            })
        };
        let (worst, _) = segs.iter().enumerate().fold((0, T::neg_infinity()), |acc, (i, s)| {
            let v = badness(s);
            if v > acc.1 {
                (i, v)
            } else {
                acc
            }
        });
        let seg = segs.swap_remove(worst);
        let mid = (seg.a + seg.b) * T::lit(0.5);
        if !(mid > seg.a && mid < seg.b) {
            // cannot split further; keep the estimate and give up on this one
            segs.push(Segment { err: [T::zero(); K], ..seg });
            continue;
        }
        segs.push(kronrod(&mut f, seg.a, mid));
        segs.push(kronrod(&mut f, mid, seg.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x.powi(5) - 3.0 * x, 0.0, 2.0, &QuadOptions::relative(1e-14));
        assert!((r.value - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn peaked_integrand() {
        let r = integrate(
            |x: f64| 1.0 / (1e-4 + (x - 0.3).powi(2)),
            0.0,
            1.0,
            &QuadOptions::relative(1e-10),
        );
        let exact = (0.7f64 / 1e-2).atan() / 1e-2 + (0.3f64 / 1e-2).atan() / 1e-2;
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn components_share_a_mesh() {
        let r = integrate_vec(|x: f64| [x.exp(), (3.0 * x).sin()], 0.0, 2.0, &QuadOptions::relative(1e-12));
        assert!(r.converged);
        assert!((r.value[0] - (2f64.exp() - 1.0)).abs() < 1e-11);
        assert!((r.value[1] - (1.0 - 6f64.cos()) / 3.0).abs() < 1e-11);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, &QuadOptions::relative(1e-8));
        assert!((r.value - 2.0).abs() < 1e-6);
    }
}
