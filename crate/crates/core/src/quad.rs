//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Tolerance::default()
        }
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let err = ((rk - rg) * h).abs();
    (rk * h, err)
}

struct Segment {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

/// Integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_with_error(&f, a, b, tol).map(|(v, _)| v)
}

/// As [`integrate`], but also returns the error estimate.
pub fn integrate_with_error<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<(f64, f64)> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Argument(format!("integration bounds must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = kronrod(f, a, b);
    if !v.is_finite() {
        return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}]")));
    }
    let mut segs = vec![Segment { a, b, val: v, err: e }];
    let mut total = v;
    let mut total_err = e;
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if segs.len() >= tol.max_intervals {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{a}, {b}]: estimate {total:e}, error {total_err:e}"
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("non-empty");
        let s = segs.swap_remove(idx);
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            // Interval cannot be split further; accept what we have.
            segs.push(s);
            break;
        }
        let (v1, e1) = kronrod(f, s.a, m);
        let (v2, e2) = kronrod(f, m, s.b);
        if !(v1 + v2).is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand on [{}, {}]", s.a, s.b)));
        }
        segs.push(Segment { a: s.a, b: m, val: v1, err: e1 });
        segs.push(Segment { a: m, b: s.b, val: v2, err: e2 });
        total = segs.iter().map(|s| s.val).sum();
        total_err = segs.iter().map(|s| s.err).sum();
    }
    Ok((total, total_err))
}

/// Integral over `[a, ∞)` via the substitution `x = a + t/(1-t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: Tolerance) -> Result<f64> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        let v = f(a + t / u);
        if v == 0.0 {
            0.0
        } else {
            v / (u * u)
        }
    };
    integrate(g, 0.0, 1.0, tol)
}
