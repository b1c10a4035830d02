//! Single-user energy detection.
//!
//! Noise samples are complex with unit variance per quadrature, so the
//! energy `Y = Σ|r_i|²` is χ² with `2M` degrees of freedom under `H0` and
//! `P_F = Q(M, λ/2)`. Under `H1` every sample energy is scaled by `1 + γ`.

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::specfun::{bessel_k_moment, reg_gamma_lower, reg_gamma_upper};
use serde::{Deserialize, Serialize};

/// Single-user sensing configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingModel {
    pub m: u32,
    pub mean_snr: f64,
    pub prior_h1: f64,
}

impl SensingModel {
    pub fn new(m: u32, mean_snr: f64, prior_h1: f64) -> Result<Self> {
        let model = SensingModel { m, mean_snr, prior_h1 };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Argument("sensing model needs M >= 1".into()));
        }
        if !(self.mean_snr > 0.0) || !self.mean_snr.is_finite() {
            return Err(Error::Argument(format!("mean SNR must be positive, got {}", self.mean_snr)));
        }
        if !(self.prior_h1 > 0.0 && self.prior_h1 < 1.0) {
            return Err(Error::Argument(format!("P(H1) must lie in (0,1), got {}", self.prior_h1)));
        }
        Ok(())
    }

    pub fn prior_h0(&self) -> f64 {
        1.0 - self.prior_h1
    }

    /// Exact average metrics of plain energy detection at threshold `lambda`.
    pub fn metrics(&self, lambda: f64) -> Result<DetectionMetrics> {
        let p_fa = false_alarm_prob(self.m, lambda)?;
        let p_md = avg_md_prob_exact(self.m, lambda, self.mean_snr)?;
        DetectionMetrics::new(p_fa, p_md, self.prior_h1)
    }
}

/// Channel gains and the number of samples that observe each of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainProfile {
    pub gains: Vec<f64>,
    pub alloc: Vec<u32>,
}

impl GainProfile {
    pub fn new(gains: Vec<f64>, alloc: Vec<u32>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::Argument("gain profile is empty".into()));
        }
        if gains.len() != alloc.len() {
            return Err(Error::Argument(format!(
                "{} gains but {} allocations",
                gains.len(),
                alloc.len()
            )));
        }
        if let Some(g) = gains.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return Err(Error::Argument(format!("gain {g} must be finite and nonnegative")));
        }
        if alloc.iter().all(|&l| l == 0) {
            return Err(Error::Argument("allocation has no samples".into()));
        }
        Ok(GainProfile { gains, alloc })
    }

    /// Total number of samples `M = Σ l_j`.
    pub fn samples(&self) -> u32 {
        self.alloc.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub p_fa: f64,
    pub p_md: f64,
    pub p_err: f64,
}

impl DetectionMetrics {
    pub fn new(p_fa: f64, p_md: f64, prior_h1: f64) -> Result<Self> {
        let p_err = bayes_error_prob(p_fa, p_md, prior_h1)?;
        Ok(DetectionMetrics { p_fa, p_md, p_err })
    }
}

/// High-SNR form `P ≍ value` with diversity order and coding gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    pub value: f64,
    pub diversity: f64,
    pub coding_gain: f64,
}

fn check_m_lambda(func: &'static str, m: u32, lambda: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::domain(func, "M must be at least 1"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(func, format!("threshold {lambda} must be positive")));
    }
    Ok(())
}

fn check_prob(func: &'static str, name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(func, format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

pub fn false_alarm_prob(m: u32, lambda: f64) -> Result<f64> {
    check_m_lambda("false_alarm_prob", m, lambda)?;
    reg_gamma_upper(m as f64, 0.5 * lambda)
}

/// Detection probability for a known instantaneous SNR.
pub fn detection_prob_inst(m: u32, lambda: f64, snr: f64) -> Result<f64> {
    check_m_lambda("detection_prob_inst", m, lambda)?;
    if !(snr >= 0.0) {
        return Err(Error::domain("detection_prob_inst", format!("snr = {snr} must be nonnegative")));
    }
    if snr.is_infinite() {
        return Ok(1.0);
    }
    reg_gamma_upper(m as f64, 0.5 * lambda / (1.0 + snr))
}

/// Missed detection probability for a known instantaneous SNR, `1 - P_D`
/// without cancellation.
pub fn md_prob_inst(m: u32, lambda: f64, snr: f64) -> Result<f64> {
    check_m_lambda("md_prob_inst", m, lambda)?;
    if !(snr >= 0.0) {
        return Err(Error::domain("md_prob_inst", format!("snr = {snr} must be nonnegative")));
    }
    if snr.is_infinite() {
        return Ok(0.0);
    }
    reg_gamma_lower(m as f64, 0.5 * lambda / (1.0 + snr))
}

fn check_mean_snr(func: &'static str, mean_snr: f64) -> Result<()> {
    if !(mean_snr > 0.0) || !mean_snr.is_finite() {
        return Err(Error::domain(func, format!("mean SNR {mean_snr} must be positive and finite")));
    }
    Ok(())
}

/// Rayleigh-averaged detection probability in Bessel closed form,
/// `e^{1/γ̄} (2/Γ(M)) (λ/2γ̄)^{M/2} K_M(sqrt(2λ/γ̄))`.
///
/// This averages over the full exponential density shifted to start at
/// `γ = -1`, so it overestimates the exact average by `O(1/γ̄)`; the value is
/// clipped to `[0, 1]`. See [`avg_detection_prob_exact`] for the exact mean.
pub fn avg_detection_prob(m: u32, lambda: f64, mean_snr: f64) -> Result<f64> {
    check_m_lambda("avg_detection_prob", m, lambda)?;
    check_mean_snr("avg_detection_prob", mean_snr)?;
    let x = (2.0 * lambda / mean_snr).sqrt();
    let v = (1.0 / mean_snr).exp() * bessel_k_moment(m, x)?;
    Ok(v.clamp(0.0, 1.0))
}

/// Exact Rayleigh average of the missed detection probability,
/// `∫ P(M, λ/(2(1+γ))) e^{-γ/γ̄}/γ̄ dγ`, by adaptive quadrature.
pub fn avg_md_prob_exact(m: u32, lambda: f64, mean_snr: f64) -> Result<f64> {
    check_m_lambda("avg_md_prob_exact", m, lambda)?;
    check_mean_snr("avg_md_prob_exact", mean_snr)?;
    let a = 0.5 * lambda;
    let mf = m as f64;
    let integrand = |g: f64| {
        let p = crate::specfun::gamma::gamma_pair(mf, a / (1.0 + g)).0;
        p * (-g / mean_snr).exp() / mean_snr
    };
    average_over_snr(integrand, a, mf, mean_snr, 1)
}

/// Exact Rayleigh average of the detection probability.
pub fn avg_detection_prob_exact(m: u32, lambda: f64, mean_snr: f64) -> Result<f64> {
    Ok(1.0 - avg_md_prob_exact(m, lambda, mean_snr)?)
}

/// Integrates `g(γ)` over `γ ∈ [0, ∞)` in the variable `u = ln(1 + γ)`.
///
/// `g` is assumed to be a regularised gamma CDF in `a/(1+γ)` with shape `m`
/// times a density on the scale `mean_snr` (at most `q` exponential factors),
/// which sets the breakpoints.
pub(crate) fn average_over_snr<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    m: f64,
    mean_snr: f64,
    q: u32,
) -> Result<f64> {
    let u_max = (mean_snr * ((q as f64).ln() + 90.0)).ln_1p();
    let mut knots = vec![0.0, u_max];
    // Transition of the CDF: its argument a e^{-u} sweeps through m ± a few sqrt(m).
    let width = 6.0 / m.sqrt();
    let u_mid = (a / m).ln();
    for k in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        knots.push(u_mid + k * width);
    }
    // Decay of the density around the mean SNR.
    let u_s = mean_snr.ln_1p();
    for k in [-3.0, -1.0, 0.0, 1.0, 2.0] {
        knots.push(u_s + k);
    }
    knots.retain(|u| *u >= 0.0 && *u <= u_max && u.is_finite());
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    let h = |u: f64| {
        let e = u.exp();
        let v = g(e - 1.0);
        if v == 0.0 {
            0.0
        } else {
            v * e
        }
    };
    let tol = Tolerance { abs: 1e-300, rel: 1e-11, max_intervals: 4000 };
    let mut total = 0.0;
    for w in knots.windows(2) {
        total += quad::integrate(h, w[0], w[1], tol)?;
    }
    Ok(total)
}

/// High-SNR non-cooperative missed detection `λ / (2 γ̄ (M-1))`.
pub fn md_asymptote_noncoop(m: u32, lambda: f64, mean_snr: f64) -> Result<Asymptote> {
    check_m_lambda("md_asymptote_noncoop", m, lambda)?;
    check_mean_snr("md_asymptote_noncoop", mean_snr)?;
    if m < 2 {
        return Err(Error::Unsupported("the non-cooperative asymptote needs M >= 2".into()));
    }
    let mm1 = (m - 1) as f64;
    Ok(Asymptote {
        value: lambda / (2.0 * mean_snr * mm1),
        diversity: 1.0,
        coding_gain: mm1 / lambda,
    })
}

/// Prior-weighted error probability `P(H1) P_md + P(H0) P_F`.
pub fn bayes_error_prob(p_fa: f64, p_md: f64, prior_h1: f64) -> Result<f64> {
    check_prob("bayes_error_prob", "p_fa", p_fa)?;
    check_prob("bayes_error_prob", "p_md", p_md)?;
    check_prob("bayes_error_prob", "prior_h1", prior_h1)?;
    Ok(prior_h1 * p_md + (1.0 - prior_h1) * p_fa)
}

/// Likelihood-ratio statistic `Σ γ_j/(1+γ_j) Z_j` for known per-state gains.
pub fn weighted_lrt_statistic(energies: &[f64], gains: &[f64]) -> Result<f64> {
    if energies.len() != gains.len() {
        return Err(Error::Argument(format!(
            "{} energies but {} gains",
            energies.len(),
            gains.len()
        )));
    }
    let mut acc = 0.0;
    for (&z, &g) in energies.iter().zip(gains) {
        if !(z >= 0.0) || !(g >= 0.0) {
            return Err(Error::domain("weighted_lrt_statistic", "energies and gains must be nonnegative"));
        }
        acc += g / (1.0 + g) * z;
    }
    Ok(acc)
}

/// Approximate CDF of `Σ (1+γ_j) x_j` at `λ` (missed detection given the
/// gains), as `min{H(w), G(w)}` with `w = λ / (M + Σ l_j γ_j)`.
///
/// `H` uses the geometric mean gain `Π (1+γ_j)^{l_j/M}` in the exact
/// single-channel CDF, so a single state reproduces that CDF. `G` sums one
/// term per real degree of freedom, `2 l_j` terms for state `j`.
pub fn md_prob_weighted_sum(lambda: f64, profile: &GainProfile) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain("md_prob_weighted_sum", format!("threshold {lambda} must be positive")));
    }
    if profile.gains.is_empty() || profile.gains.len() != profile.alloc.len() {
        return Err(Error::Argument("malformed or empty gain profile".into()));
    }
    let m = profile.samples();
    if m == 0 {
        return Err(Error::Argument("gain profile has no samples".into()));
    }
    let mf = m as f64;
    let energy: f64 = profile
        .gains
        .iter()
        .zip(&profile.alloc)
        .map(|(&g, &l)| l as f64 * g)
        .sum();
    let w = lambda / (mf + energy);

    let log_geo: f64 = profile
        .gains
        .iter()
        .zip(&profile.alloc)
        .map(|(&g, &l)| l as f64 * g.ln_1p())
        .sum::<f64>()
        / mf;
    let h = reg_gamma_lower(mf, 0.5 * lambda * (-log_geo).exp())?;

    let mut g_sum = 0.0;
    for (&g, &l) in profile.gains.iter().zip(&profile.alloc) {
        if l == 0 {
            continue;
        }
        let s = 1.0 + g;
        let shape = lambda / (2.0 * w * s);
        let term = w * s / lambda * reg_gamma_lower(shape, 0.5 * lambda / s)?;
        g_sum += 2.0 * l as f64 * term;
    }
    Ok(h.min(g_sum).clamp(0.0, 1.0))
}
