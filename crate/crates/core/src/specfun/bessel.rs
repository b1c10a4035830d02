//! Modified Bessel functions of the second kind, integer order.
//!
//! `K0` and `K1` come from their ascending series for `x <= 2` and from
//! Steed's continued fraction (the `bessik` scheme) above that. Higher orders
//! use the upward recurrence `K_{n+1} = K_{n-1} + (2n/x) K_n`, which is stable
//! in the increasing direction.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX_X: f64 = 2.0;

/// `K_n(x)` for `x > 0`. Overflows to `+inf` for very small `x` at large order.
pub fn bessel_k_int(order: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_k_int", format!("x = {x} must be positive and finite")));
    }
    let (k0, k1) = k0_k1(x);
    if order == 0 {
        return Ok(k0);
    }
    let (mut km, mut k) = (k0, k1);
    for n in 1..order {
        let next = km + 2.0 * n as f64 / x * k;
        km = k;
        k = next;
    }
    Ok(k)
}

/// `(2 / Γ(M)) (x/2)^M K_M(x)` for `M ≥ 1`.
///
/// This is the closed-form average detection probability written in terms of
/// `x = sqrt(2 λ / γ̄)`. The scaled recurrence
/// `R_{n+1} = R_n + (x²/4) R_{n-1} / (n (n-1))` has only positive terms, so
/// it neither overflows nor cancels where `K_M` alone would.
pub fn bessel_k_moment(order: u32, x: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::domain("bessel_k_moment", "order must be at least 1"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_k_moment", format!("x = {x} must be positive and finite")));
    }
    let (k0, k1) = k0_k1(x);
    let r1 = x * k1;
    if order == 1 {
        return Ok(r1);
    }
    let q = 0.25 * x * x;
    let mut prev = r1;
    let mut cur = 2.0 * q * k0 + r1;
    for n in 2..order {
        let nf = n as f64;
        let next = cur + q * prev / (nf * (nf - 1.0));
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn k0_k1(x: f64) -> (f64, f64) {
    if x <= SERIES_MAX_X {
        k0_k1_series(x)
    } else {
        k0_k1_steed(x)
    }
}

fn k0_k1_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    // k = 0 terms
    let mut t0 = 1.0; // q^k / (k!)^2
    let mut t1 = 1.0; // q^k / (k! (k+1)!)
    let mut i0 = 1.0;
    let mut i1s = 1.0;
    let mut h = 0.0; // H_k
    let mut k0_sum = 0.0;
    // ψ(k+1) + ψ(k+2) = 2 H_k + 1/(k+1) - 2γ
    let mut k1_sum = 1.0 - 2.0 * EULER_GAMMA;
    for k in 1..60 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        h += 1.0 / kf;
        i0 += t0;
        i1s += t1;
        k0_sum += t0 * h;
        k1_sum += t1 * (2.0 * h + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA);
        if t0 < 1e-18 * i0 && t1 < 1e-18 * i1s {
            break;
        }
    }
    let i1 = 0.5 * x * i1s;
    let k0 = -(log_half + EULER_GAMMA) * i0 + k0_sum;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * k1_sum;
    (k0, k1)
}

fn k0_k1_steed(x: f64) -> (f64, f64) {
    let a1 = 0.25; // 1/4 - μ² with μ = 0
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// K_n(x) = ∫_0^∞ e^{-x cosh t} cosh(n t) dt by a fine trapezoid rule.
    fn k_integral(n: u32, x: f64) -> f64 {
        let h: f64 = 1e-4;
        let mut acc = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let v = (-x * t.cosh()).exp() * (n as f64 * t).cosh();
            acc += v;
            if v < 1e-30 {
                break;
            }
            t += h;
        }
        acc * h
    }

    #[test]
    fn reference_values() {
        // Tabulated: K0(1), K1(1), K0(2.5), K1(5)
        let cases = [
            (0, 1.0, 0.421_024_438_240_708_3),
            (1, 1.0, 0.601_907_230_197_234_6),
            (0, 2.5, 0.062_347_553_200_366_17),
            (1, 5.0, 0.004_044_613_445_452_164),
        ];
        for (n, x, want) in cases {
            let got = bessel_k_int(n, x).unwrap();
            assert!(((got - want) / want).abs() < 1e-12, "K{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn small_argument_limit() {
        for &x in &[1e-3, 1e-5, 1e-8] {
            let v = x * bessel_k_int(1, x).unwrap();
            assert!((v - 1.0).abs() < 10.0 * x, "x K1(x) = {v}");
        }
    }

    #[test]
    fn recurrence_identity() {
        for m in 1..=20u32 {
            for &x in &[0.1, 0.5, 1.0, 1.9, 2.1, 5.0, 17.0, 50.0] {
                let km = bessel_k_int(m - 1, x).unwrap();
                let k = bessel_k_int(m, x).unwrap();
                let kp = bessel_k_int(m + 1, x).unwrap();
                let rhs = km + 2.0 * m as f64 / x * k;
                assert!(((kp - rhs) / kp).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn matches_integral_representation() {
        let got = bessel_k_int(3, 2.5).unwrap();
        let want = k_integral(3, 2.5);
        assert!(((got - want) / want).abs() < 1e-8, "{got} vs {want}");
        for &(n, x) in &[(0, 0.3), (1, 1.7), (2, 2.0), (5, 4.0), (0, 30.0)] {
            let got = bessel_k_int(n, x).unwrap();
            let want = k_integral(n, x);
            assert!(((got - want) / want).abs() < 1e-9, "K{n}({x}) {got} vs {want}");
        }
    }

    #[test]
    fn scaled_moment_matches_direct_product() {
        for m in 1..=12u32 {
            for &x in &[0.05f64, 0.7, 2.0, 6.0] {
                let direct = 2.0 / crate::specfun::gamma::ln_gamma_unchecked(m as f64).exp()
                    * (0.5 * x).powi(m as i32)
                    * bessel_k_int(m, x).unwrap();
                let scaled = bessel_k_moment(m, x).unwrap();
                assert!(((direct - scaled) / direct).abs() < 1e-12, "m={m} x={x}");
            }
        }
        // Limit x -> 0 is 1 for every order.
        assert!((bessel_k_moment(100, 1e-6).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k_int(2, 0.0).is_err());
        assert!(bessel_k_int(2, -1.0).is_err());
        assert!(bessel_k_moment(0, 1.0).is_err());
    }
}
