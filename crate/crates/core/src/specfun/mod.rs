//! Special functions used by the detection formulas.

pub mod bessel;
pub mod expint;
pub mod gamma;
pub mod lambert;

pub use bessel::{bessel_k_int, bessel_k_moment};
pub use expint::{exp_int_e1, exp_int_e1_scaled};
pub use gamma::{inv_reg_gamma_upper, ln_gamma, reg_gamma_lower, reg_gamma_upper};
pub use lambert::{lambert_w, Branch};

use crate::error::{Error, Result};

/// `H_q = 1 + 1/2 + ... + 1/q`.
pub fn harmonic(q: u32) -> Result<f64> {
    if q == 0 {
        return Err(Error::domain("harmonic", "Q must be at least 1"));
    }
    Ok((1..=q).map(|k| 1.0 / k as f64).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_values() {
        assert!(harmonic(0).is_err());
        assert_eq!(harmonic(1).unwrap(), 1.0);
        assert_eq!(harmonic(2).unwrap(), 1.5);
        assert!((6.0 / harmonic(2).unwrap() - 4.0).abs() < 1e-15);
        assert!((harmonic(4).unwrap() - 25.0 / 12.0).abs() < 1e-15);
        let h10 = harmonic(10).unwrap();
        assert!((h10 - 2.928_968_253_968_254).abs() < 1e-14);
        assert!((10.0 * h10.log10() - 4.667).abs() < 5e-4);
    }

    #[test]
    fn harmonic_grows_like_log() {
        let g = harmonic(10_000).unwrap() - (10_000f64).ln();
        assert!((g - 0.5772).abs() < 1e-4);
    }
}
