//! Real branches of the Lambert W function, `w e^w = x`.
//!
//! Halley iteration from branch-specific starting points: the branch-point
//! series in `p = sqrt(2 (e x + 1))` near `-1/e`, `ln(1 + x)` for moderate
//! principal arguments, and the `L1 - L2` asymptote (`L1 = ln|x|`,
//! `L2 = ln|L1|`) elsewhere.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const INV_E: f64 = 0.367_879_441_171_442_33;
const MAX_ITER: usize = 64;

/// Which real branch of W to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `W_0`, defined on `[-1/e, ∞)`, values in `[-1, ∞)`.
    Principal,
    /// `W_{-1}`, defined on `[-1/e, 0)`, values in `(-∞, -1]`.
    Lower,
}

pub fn lambert_w(branch: Branch, x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::domain("lambert_w", format!("x = {x} is below -1/e")));
    }
    if branch == Branch::Lower && x >= 0.0 {
        return Err(Error::domain("lambert_w", format!("lower branch needs x < 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let x = x.max(-INV_E);
    let t = std::f64::consts::E * x + 1.0;
    if t <= 0.0 {
        return Ok(-1.0);
    }
    let p = (2.0 * t).sqrt();

    let w0 = match branch {
        Branch::Principal => {
            if x < -0.25 {
                -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
            } else if x < 3.0 {
                x.ln_1p()
            } else {
                let l1 = x.ln();
                let l2 = l1.ln();
                l1 - l2 + l2 / l1
            }
        }
        Branch::Lower => {
            if x < -0.25 {
                -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
            } else {
                let l1 = (-x).ln();
                let l2 = (-l1).ln();
                l1 - l2 + l2 / l1
            }
        }
    };

    if x > 1e100 {
        return Ok(newton_log_form(x, w0));
    }
    Ok(halley(x, w0))
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1e-300) {
            break;
        }
    }
    w
}

/// Solves `w + ln w = ln x` for huge `x`, where `w e^w` itself would overflow.
fn newton_log_form(x: f64, mut w: f64) -> f64 {
    let lx = x.ln();
    for _ in 0..MAX_ITER {
        let f = w + w.ln() - lx;
        let step = f / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual(w: f64, x: f64) -> f64 {
        (w * w.exp() - x).abs()
    }

    #[test]
    fn exact_points() {
        assert_eq!(lambert_w(Branch::Principal, 0.0).unwrap(), 0.0);
        assert!((lambert_w(Branch::Principal, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w(Branch::Lower, -INV_E).unwrap() + 1.0).abs() < 1e-7);
        assert!((lambert_w(Branch::Principal, -INV_E).unwrap() + 1.0).abs() < 1e-7);
        // W_{-1}(-2 e^{-2}) = -2, W_0(-2 e^{-2}) ≈ -0.4064
        let x = -2.0 * (-2.0f64).exp();
        assert!((lambert_w(Branch::Lower, x).unwrap() + 2.0).abs() < 1e-13);
    }

    #[test]
    fn domain() {
        assert!(lambert_w(Branch::Principal, -0.5).is_err());
        assert!(lambert_w(Branch::Lower, 0.0).is_err());
        assert!(lambert_w(Branch::Lower, 1.0).is_err());
        assert!(lambert_w(Branch::Lower, -0.4).is_err());
    }

    #[test]
    fn huge_arguments() {
        for &x in &[1e20, 1e100, 1e200, 1e300] {
            let w = lambert_w(Branch::Principal, x).unwrap();
            assert!(((w + w.ln()) - x.ln()).abs() < 1e-12 * x.ln());
        }
    }

    #[test]
    fn random_residuals() {
        // 10^4 random points per branch over the whole domain
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = -INV_E + rng.random::<f64>() * (INV_E + 50.0);
            let w = lambert_w(Branch::Principal, x).unwrap();
            assert!(residual(w, x) <= 1e-12 * x.abs().max(1.0), "W0({x}) = {w}");
            let xl = -INV_E * rng.random::<f64>().max(1e-300);
            let wl = lambert_w(Branch::Lower, xl).unwrap();
            assert!(wl <= -1.0);
            assert!(residual(wl, xl) <= 1e-12 * xl.abs().max(1.0), "W-1({xl}) = {wl}");
            let xg = 10f64.powf(rng.random::<f64>() * 90.0);
            let wg = lambert_w(Branch::Principal, xg).unwrap();
            assert!(residual(wg, xg) <= 1e-12 * xg.max(1.0), "W0({xg}) = {wg}");
        }
    }

    proptest! {
        #[test]
        fn branches_bracket_minus_one(x in -0.367_879_44f64..-1e-12) {
            let w0 = lambert_w(Branch::Principal, x).unwrap();
            let wm = lambert_w(Branch::Lower, x).unwrap();
            prop_assert!(w0 >= -1.0 - 1e-6);
            prop_assert!(wm <= -1.0 + 1e-6);
            prop_assert!(wm <= w0);
        }
    }
}
