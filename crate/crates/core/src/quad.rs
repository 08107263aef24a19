//! Shared quadrature kernels: fixed-order Gauss-Legendre rules, an adaptive
//! Gauss-Kronrod driver, and exact moment integration against `log|t|`.

use crate::{Error, Result};

/// 8-point Gauss-Legendre abscissae on [-1, 1] (positive half).
const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 16-point Gauss-Legendre abscissae on [-1, 1] (positive half).
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_44,
    0.281_603_550_779_258_9,
    0.458_016_777_657_227_4,
    0.617_876_244_402_643_8,
    0.755_404_408_355_003_0,
    0.865_631_202_387_831_8,
    0.944_575_023_073_232_6,
    0.989_400_934_991_649_9,
];
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_5,
    0.182_603_415_044_923_6,
    0.169_156_519_395_002_5,
    0.149_595_988_816_576_7,
    0.124_628_971_255_533_9,
    0.095_158_511_682_492_78,
    0.062_253_523_938_647_89,
    0.027_152_459_411_754_095,
];

/// Kronrod-15 nodes (positive half, descending) and weights; the embedded
/// 7-point Gauss rule uses the odd-indexed nodes.
const K15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_27,
    0.0,
];
const K15_W: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const G7_W: [f64; 4] = [
    0.129_484_966_168_869_93,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// 8-point Gauss-Legendre rule on [a, b].
pub fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in 0..4 {
        sum += GL8_W[i] * (f(c - h * GL8_X[i]) + f(c + h * GL8_X[i]));
    }
    sum * h
}

/// 16-point Gauss-Legendre rule on [a, b].
pub fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in 0..8 {
        sum += GL16_W[i] * (f(c - h * GL16_X[i]) + f(c + h * GL16_X[i]));
    }
    sum * h
}

/// One Gauss-Kronrod 7/15 panel; returns (K15 value, error estimate).
fn gk15_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fk = 0.0;
    let mut fg = 0.0;
    for i in 0..8 {
        let (xl, xr) = (c - h * K15_X[i], c + h * K15_X[i]);
        let pair = if K15_X[i] == 0.0 { f(c) } else { f(xl) + f(xr) };
        fk += K15_W[i] * pair;
        if i % 2 == 1 {
            fg += G7_W[i / 2] * pair;
        }
    }
    let vk = fk * h;
    let vg = fg * h;
    // magnitude-aware error model, as in standard QUADPACK practice
    let diff = (vk - vg).abs();
    (vk, (200.0 * diff).powf(1.5).min(diff.max(1e-300)))
}

/// Result of the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveResult {
    pub value: f64,
    pub abs_err: f64,
    pub panels: usize,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over [a, b].
///
/// Splits the panel with the largest error estimate until the total
/// estimated error drops below `abs_tol + rel_tol * |value|`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<AdaptiveResult> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    const MAX_PANELS: usize = 50_000;

    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
        // a non-finite panel value usually means a quadrature node landed
        // on an integrable singularity; split such panels first so the
        // point becomes a panel endpoint (Gauss-Kronrod nodes are interior)
        bad: bool,
    }
    impl PartialEq for Panel {
        fn eq(&self, other: &Self) -> bool {
            self.bad == other.bad && self.err == other.err
        }
    }
    impl Eq for Panel {}
    impl PartialOrd for Panel {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Panel {
        fn cmp(&self, other: &Self) -> Ordering {
            self.bad.cmp(&other.bad).then(self.err.total_cmp(&other.err))
        }
    }

    let eval = |f: &F, a: f64, b: f64| -> Panel {
        let (v, e) = gk15_panel(f, a, b);
        if v.is_finite() {
            Panel { a, b, value: v, err: e, bad: false }
        } else {
            Panel { a, b, value: 0.0, err: 0.0, bad: true }
        }
    };

    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("adaptive: non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(AdaptiveResult { value: 0.0, abs_err: 0.0, panels: 0 });
    }

    let mut heap = BinaryHeap::new();
    let mut bad_count = 0usize;
    let p0 = eval(f, a, b);
    let (mut value, mut err) = (p0.value, p0.err);
    bad_count += p0.bad as usize;
    heap.push(p0);
    loop {
        if bad_count == 0 && err <= abs_tol + rel_tol * value.abs() {
            return Ok(AdaptiveResult { value, abs_err: err, panels: heap.len() });
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureFailure(format!(
                "adaptive: error {err:.3e} above tolerance after {} panels on [{a}, {b}]",
                heap.len()
            )));
        }
        let worst = heap.pop().unwrap();
        value -= worst.value;
        err -= worst.err;
        bad_count -= worst.bad as usize;
        let pm = 0.5 * (worst.a + worst.b);
        if pm <= worst.a || pm >= worst.b {
            if worst.bad {
                return Err(Error::QuadratureFailure(format!(
                    "adaptive: non-integrable singularity near [{:.17e}, {:.17e}]",
                    worst.a, worst.b
                )));
            }
            // no longer splittable in f64; freeze its value
            let frozen = Panel { err: 0.0, ..worst };
            value += frozen.value;
            heap.push(frozen);
            continue;
        }
        for child in [eval(f, worst.a, pm), eval(f, pm, worst.b)] {
            value += child.value;
            err += child.err;
            bad_count += child.bad as usize;
            heap.push(child);
        }
    }
}

/// Antiderivative of `t^k log|t|`, continuous through 0 with value 0.
pub fn log_moment_primitive(k: u32, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let kp1 = (k + 1) as f64;
    t.powi(k as i32 + 1) / kp1 * (t.abs().ln() - 1.0 / kp1)
}

/// Exact `∫_a^b t^k log|t| dt` (valid across 0).
pub fn log_moment(k: u32, a: f64, b: f64) -> f64 {
    log_moment_primitive(k, b) - log_moment_primitive(k, a)
}

// Inverse Vandermonde for nodes {0, 1/3, 2/3, 1}: c = COEF * g gives the
// monomial coefficients of the cubic through (sigma_j, g_j).
const CUBIC_NODES: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
const CUBIC_COEF: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [-5.5, 9.0, -4.5, 1.0],
    [9.0, -22.5, 18.0, -4.5],
    [-4.5, 13.5, -13.5, 4.5],
];

/// `∫_0^h g(t) log t dt` for `g` a (near-)cubic polynomial on [0, h],
/// integrating the cubic interpolant exactly against the log weight.
pub fn integrate_cubic_log_at_zero<F: Fn(f64) -> f64>(g: &F, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    let gv = [
        g(CUBIC_NODES[0] * h),
        g(CUBIC_NODES[1] * h),
        g(CUBIC_NODES[2] * h),
        g(CUBIC_NODES[3] * h),
    ];
    let ln_h = h.ln();
    let mut total = 0.0;
    for k in 0..4usize {
        let mut c = 0.0;
        for j in 0..4 {
            c += CUBIC_COEF[k][j] * gv[j];
        }
        let kp1 = (k + 1) as f64;
        // ∫_0^h (t/h)^k log t dt = h (log h / (k+1) - 1/(k+1)^2)
        total += c * h * (ln_h / kp1 - 1.0 / (kp1 * kp1));
    }
    total
}

/// `∫_a^b g(t) log t dt` for smooth `g` and 0 < a < b: dyadic subdivision
/// toward `a` with 16-point Gauss on each piece keeps the log resolved.
pub fn integrate_smooth_log<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> f64 {
    debug_assert!(0.0 < a && a < b);
    let h = |t: f64| g(t) * t.ln();
    let mut total = 0.0;
    let mut lo = a;
    loop {
        let hi = (2.0 * lo).min(b);
        total += gauss16(&h, lo, hi);
        if hi >= b {
            return total;
        }
        lo = hi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        // degree-15 monomial is exact for GL8
        let f = |x: f64| x.powi(15) + 3.0 * x.powi(4) - x;
        let exact = |a: f64, b: f64| {
            (b.powi(16) - a.powi(16)) / 16.0 + 3.0 * (b.powi(5) - a.powi(5)) / 5.0
                - (b * b - a * a) / 2.0
        };
        assert_relative_eq!(gauss8(&f, -0.3, 1.7), exact(-0.3, 1.7), max_relative = 1e-13);
        assert_relative_eq!(gauss16(&f, 0.1, 2.1), exact(0.1, 2.1), max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_oscillation_and_peaks() {
        let r = adaptive(&|x: f64| (10.0 * x).cos(), 0.0, 3.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(r.value, (30.0f64).sin() / 10.0, epsilon = 1e-10);

        let r = adaptive(&|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-12).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert_relative_eq!(r.value, exact, max_relative = 1e-9);
    }

    #[test]
    fn log_moments_match_quadrature() {
        for k in 0..4u32 {
            let r = adaptive(&|t: f64| t.powi(k as i32) * t.abs().ln(), 1e-12, 2.0, 1e-12, 1e-12)
                .unwrap();
            assert_relative_eq!(log_moment(k, 0.0, 2.0), r.value, epsilon = 1e-9);
        }
        // across zero
        let r = adaptive(&|t: f64| t * t * t.abs().ln(), -0.5, 1.5, 1e-13, 1e-13).unwrap();
        assert_relative_eq!(log_moment(2, -0.5, 1.5), r.value, epsilon = 1e-10);
    }

    #[test]
    fn cubic_log_weight_is_exact() {
        // g(t) = 2 - t + 0.5 t^3 on [0, 0.7]
        let g = |t: f64| 2.0 - t + 0.5 * t * t * t;
        let got = integrate_cubic_log_at_zero(&g, 0.7);
        let exact = 2.0 * log_moment(0, 0.0, 0.7) - log_moment(1, 0.0, 0.7)
            + 0.5 * log_moment(3, 0.0, 0.7);
        assert_relative_eq!(got, exact, epsilon = 1e-14);
    }

    #[test]
    fn smooth_log_matches_moments() {
        let g = |t: f64| 1.0 + t * t;
        let got = integrate_smooth_log(&g, 0.01, 3.0);
        let exact = log_moment(0, 0.01, 3.0) + log_moment(2, 0.01, 3.0);
        assert_relative_eq!(got, exact, epsilon = 1e-12);
    }
}
