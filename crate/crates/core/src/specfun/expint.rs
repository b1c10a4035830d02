//! Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt`.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn exp_int_e1(x: f64) -> Result<f64> {
    check(x)?;
    if x <= 1.0 {
        Ok(series(x))
    } else {
        Ok((-x).exp() * cf_scaled(x))
    }
}

/// `e^x E1(x)`, finite for every `x > 0` (behaves like `1/x` for large `x`).
pub fn exp_int_e1_scaled(x: f64) -> Result<f64> {
    check(x)?;
    if x <= 1.0 {
        Ok(x.exp() * series(x))
    } else {
        Ok(cf_scaled(x))
    }
}

fn check(x: f64) -> Result<()> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::domain("exp_int_e1", format!("x = {x} must be positive")));
    }
    Ok(())
}

fn series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ (-x)^k / (k k!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let add = term / kf;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Modified Lentz evaluation of `1/(x+1- 1/(x+3- 4/(x+5- ...)))`.
fn cf_scaled(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
