//! Threshold design for the Neyman-Pearson and Bayes criteria.

use crate::detection::{avg_md_prob_exact, bayes_error_prob, false_alarm_prob};
use crate::error::{Error, Result};
use crate::fusion::{global_false_alarm, FusionConfig};
use crate::reconfig::{equal_split_plan, switching_avg_md, SwitchingCdf};
use crate::specfun::gamma::ln_gamma_unchecked;
use crate::specfun::{inv_reg_gamma_upper, lambert_w, Branch};
use serde::{Deserialize, Serialize};

const INV_E: f64 = 0.367_879_441_171_442_33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDesign {
    pub lambda: f64,
    pub global_n: Option<u32>,
    pub drift_theta: f64,
    pub diversity_fa: f64,
    pub diversity_md: f64,
    pub diversity_err: f64,
    /// True when the closed form was out of regime and `lambda` comes from a
    /// direct search over the exact error probability.
    pub fallback: bool,
}

impl ThresholdDesign {
    fn new(lambda: f64, theta: f64, d_fa: f64, d_md: f64, fallback: bool) -> Self {
        ThresholdDesign {
            lambda,
            global_n: None,
            drift_theta: theta,
            diversity_fa: d_fa,
            diversity_md: d_md,
            diversity_err: d_fa.min(d_md),
            fallback,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftScheme {
    NonCoop,
    Reconfig,
}

fn check_alpha(func: &'static str, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(func, format!("α = {alpha} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Argument(format!("drift factor θ = {theta} must be positive")));
    }
    Ok(())
}

/// Local threshold with `P_F = α`.
pub fn np_threshold_local(m: u32, alpha: f64) -> Result<f64> {
    check_alpha("np_threshold_local", alpha)?;
    if m == 0 {
        return Err(Error::domain("np_threshold_local", "M must be at least 1"));
    }
    Ok(2.0 * inv_reg_gamma_upper(m as f64, alpha)?)
}

/// Local threshold with global false-alarm probability `α` under a k-out-of-N rule.
pub fn np_threshold_cooperative(cfg: &FusionConfig, m: u32, alpha: f64) -> Result<f64> {
    check_alpha("np_threshold_cooperative", alpha)?;
    cfg.validate()?;
    let p = if cfg.vote_threshold == 1 {
        -((-alpha).ln_1p() / cfg.n_users as f64).exp_m1()
    } else {
        // Global P_F is increasing in the local one; bisect in log p.
        let f = |lp: f64| global_false_alarm(cfg, lp.exp()).map(|g| g - alpha);
        let (mut lo, mut hi) = (-745.0f64, 0.0f64);
        if f(lo)? > 0.0 {
            return Err(Error::NoSolution("global false alarm target below numeric range".into()));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    np_threshold_local(m, p)
}

fn check_prior(prior_h1: f64) -> Result<()> {
    if !(prior_h1 > 0.0 && prior_h1 < 1.0) {
        return Err(Error::domain("bayes threshold", format!("prior {prior_h1} must lie in (0, 1)")));
    }
    Ok(())
}

/// `μ = (π1/π0) 2^{M-2} Γ(M-1) / γ̄`, in logs.
fn ln_mu(m: u32, mean_snr: f64, prior_h1: f64) -> f64 {
    let mf = m as f64;
    (prior_h1 / (1.0 - prior_h1)).ln() + (mf - 2.0) * std::f64::consts::LN_2 + ln_gamma_unchecked(mf - 1.0)
        - mean_snr.ln()
}

/// High-SNR Bayes threshold of the single detector,
/// `λ = ν exp(-W₋₁(-ν / (2(M-1))))` with `ν = μ^{1/(M-1)}`.
pub fn bayes_threshold_noncoop(m: u32, mean_snr: f64, prior_h1: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Unsupported("the closed-form Bayes threshold needs M >= 2".into()));
    }
    if !(mean_snr > 0.0) {
        return Err(Error::domain("bayes_threshold_noncoop", "mean SNR must be positive"));
    }
    check_prior(prior_h1)?;
    let k = (m - 1) as f64;
    let nu = (ln_mu(m, mean_snr, prior_h1) / k).exp();
    let x = -nu / (2.0 * k);
    if x < -INV_E {
        return Err(Error::Regime(format!(
            "Lambert-W argument {x:.4} below -1/e; mean SNR too low for the closed form"
        )));
    }
    Ok(-2.0 * k * lambert_w(Branch::Lower, x)?)
}

/// Large-SNR form `2(M-1) ln((M-1) γ̄^{1/(M-1)} / Γ(M-1)^{1/(M-1)})`, equal priors.
pub fn bayes_threshold_noncoop_approx(m: u32, mean_snr: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Unsupported("the closed-form Bayes threshold needs M >= 2".into()));
    }
    if !(mean_snr > 0.0) {
        return Err(Error::domain("bayes_threshold_noncoop_approx", "mean SNR must be positive"));
    }
    let k = (m - 1) as f64;
    let v = 2.0 * k * (k.ln() + (mean_snr.ln() - ln_gamma_unchecked(k)) / k);
    if !(v > 0.0) {
        return Err(Error::Regime("approximate threshold is not positive at this mean SNR".into()));
    }
    Ok(v)
}

/// Relative residual of the stationarity condition
/// `-π0 e^{-λ/2} λ^{M-1} / (2^{M-1} Γ(M)) + π1 / (2 γ̄ (M-1)) = 0`.
pub fn noncoop_stationarity_residual(m: u32, lambda: f64, mean_snr: f64, prior_h1: f64) -> Result<f64> {
    if m < 2 || !(lambda > 0.0) || !(mean_snr > 0.0) {
        return Err(Error::domain("noncoop_stationarity_residual", "needs M >= 2, λ > 0, γ̄ > 0"));
    }
    check_prior(prior_h1)?;
    let mf = m as f64;
    let ln_a = (1.0 - prior_h1).ln() - 0.5 * lambda + (mf - 1.0) * lambda.ln()
        - (mf - 1.0) * std::f64::consts::LN_2
        - ln_gamma_unchecked(mf);
    let ln_b = prior_h1.ln() - (2.0 * mean_snr * (mf - 1.0)).ln();
    Ok((ln_b - ln_a).exp_m1().abs())
}

/// Diversity of the error probability with threshold `θ λ_opt`.
pub fn drift_diversity(scheme: DriftScheme, theta: f64, m: u32, q: Option<u32>) -> Result<f64> {
    check_theta(theta)?;
    match scheme {
        DriftScheme::NonCoop => Ok(theta.min(1.0)),
        DriftScheme::Reconfig => {
            let q = q.ok_or_else(|| Error::Argument("reconfigurable drift law needs Q".into()))?;
            let d = m.min(q) as f64;
            Ok((theta * d).min(d))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoopBayesDesign {
    pub vote_threshold: u32,
    pub theta: u32,
    pub diversity: u32,
}

/// Fusion rule and drift for cooperative Bayes sensing, with or without
/// knowledge of the network size at the detectors.
pub fn coop_bayes_design(n_users: u32, known_n: bool) -> Result<CoopBayesDesign> {
    if n_users == 0 {
        return Err(Error::Argument("network needs at least one user".into()));
    }
    Ok(if known_n {
        CoopBayesDesign { vote_threshold: 1, theta: n_users, diversity: n_users }
    } else {
        let n = (n_users + 1) / 2;
        CoopBayesDesign { vote_threshold: n, theta: 1, diversity: n }
    })
}

/// Exact switching threshold `2 W₀(1/(2ζ))`, `ζ = γ̄^{-min(M,Q)} 2^{M-1} Γ(M)`.
pub fn bayes_threshold_reconfig(m: u32, q: u32, mean_snr: f64) -> Result<f64> {
    if m == 0 || q == 0 || !(mean_snr > 0.0) {
        return Err(Error::domain("bayes_threshold_reconfig", "needs M, Q >= 1 and γ̄ > 0"));
    }
    let ln_inv_2zeta = ln_inv_zeta(m, q, mean_snr) - std::f64::consts::LN_2;
    let x = ln_inv_2zeta.exp();
    if x.is_infinite() {
        // W₀(e^L) = L - ln W₀, solved on the log form.
        let mut w = ln_inv_2zeta;
        for _ in 0..50 {
            w = ln_inv_2zeta - w.ln();
        }
        return Ok(2.0 * w);
    }
    Ok(2.0 * lambert_w(Branch::Principal, x)?)
}

fn ln_inv_zeta(m: u32, q: u32, mean_snr: f64) -> f64 {
    let mf = m as f64;
    m.min(q) as f64 * mean_snr.ln() - (mf - 1.0) * std::f64::consts::LN_2 - ln_gamma_unchecked(mf)
}

/// Large-SNR switching threshold `2 ln(r / ln r)`, `r = γ̄^{min(M,Q)} / (2^M Γ(M))`.
pub fn bayes_threshold_reconfig_approx(m: u32, q: u32, mean_snr: f64) -> Result<f64> {
    if m == 0 || q == 0 || !(mean_snr > 0.0) {
        return Err(Error::domain("bayes_threshold_reconfig_approx", "needs M, Q >= 1 and γ̄ > 0"));
    }
    let ln_r = ln_inv_zeta(m, q, mean_snr) - std::f64::consts::LN_2;
    if ln_r <= 0.0 {
        return Err(Error::Regime("log argument at most 1; mean SNR too low for the closed form".into()));
    }
    let v = 2.0 * (ln_r - ln_r.ln());
    if !(v > 0.0) {
        return Err(Error::Regime("approximate threshold is not positive at this mean SNR".into()));
    }
    Ok(v)
}

/// Bisection for `d_fa(λ) = d_md(λ)` on `[lo, hi]`.
pub fn solve_diversity_balance<F, G>(d_fa: F, d_md: G, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Argument(format!("empty bracket [{lo}, {hi}]")));
    }
    let gap = |x: f64| d_fa(x) - d_md(x);
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (gap(a), gap(b));
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() || ga.is_nan() || gb.is_nan() {
        return Err(Error::NoSolution(format!("no sign change of d_F - d_md on [{lo}, {hi}]")));
    }
    for _ in 0..300 {
        let mid = 0.5 * (a + b);
        let g = gap(mid);
        if g == 0.0 {
            return Ok(mid);
        }
        if g.signum() == ga.signum() {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) <= 1e-10 * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section minimisation of a unimodal function over `ln λ ∈ [ln lo, ln hi]`.
pub fn minimize_log_golden<F>(f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Argument(format!("bad bracket [{lo}, {hi}]")));
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    while b - a > 1e-9 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d.exp())?;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Exact Bayes error of the single detector.
pub fn noncoop_error_prob(m: u32, lambda: f64, mean_snr: f64, prior_h1: f64) -> Result<f64> {
    bayes_error_prob(false_alarm_prob(m, lambda)?, avg_md_prob_exact(m, lambda, mean_snr)?, prior_h1)
}

/// Exact Bayes error of equal-split state switching without delay.
pub fn switching_error_prob(m: u32, q: u32, lambda: f64, mean_snr: f64, prior_h1: f64) -> Result<f64> {
    let plan = equal_split_plan(m, q, 0)?;
    bayes_error_prob(false_alarm_prob(m, lambda)?, switching_avg_md(lambda, &plan, mean_snr)?, prior_h1)
}

fn search_bracket(m: u32) -> (f64, f64) {
    (1e-3, 2.0 * (m as f64) + 400.0)
}

/// Bayes design of the single detector with drift `θ`; falls back to a
/// direct search over the exact error probability below the closed-form regime.
pub fn bayes_design_noncoop(m: u32, mean_snr: f64, prior_h1: f64, theta: f64) -> Result<ThresholdDesign> {
    check_theta(theta)?;
    match bayes_threshold_noncoop(m, mean_snr, prior_h1) {
        Ok(l) => Ok(ThresholdDesign::new(theta * l, theta, theta, 1.0, false)),
        Err(Error::Regime(_)) | Err(Error::Unsupported(_)) => {
            let (lo, hi) = search_bracket(m);
            let l = minimize_log_golden(|l| noncoop_error_prob(m, l, mean_snr, prior_h1), lo, hi)?;
            Ok(ThresholdDesign::new(theta * l, theta, theta, 1.0, true))
        }
        Err(e) => Err(e),
    }
}

/// Bayes design of delay-free state switching with drift `θ`.
pub fn bayes_design_reconfig(m: u32, q: u32, mean_snr: f64, prior_h1: f64, theta: f64) -> Result<ThresholdDesign> {
    check_theta(theta)?;
    check_prior(prior_h1)?;
    let d = m.min(q) as f64;
    match bayes_threshold_reconfig_approx(m, q, mean_snr) {
        Ok(_) => {
            let l = bayes_threshold_reconfig(m, q, mean_snr)?;
            Ok(ThresholdDesign::new(theta * l, theta, theta * d, d, false))
        }
        Err(Error::Regime(_)) => {
            let (lo, hi) = search_bracket(m);
            let plan = equal_split_plan(m, q, 0)?;
            let l = if plan.states() == 1 {
                minimize_log_golden(|l| noncoop_error_prob(m, l, mean_snr, prior_h1), lo, hi)?
            } else {
                let cdf = SwitchingCdf::new(&plan, mean_snr, hi)?;
                minimize_log_golden(|l| bayes_error_prob(false_alarm_prob(m, l)?, cdf.at(l), prior_h1), lo, hi)?
            };
            Ok(ThresholdDesign::new(theta * l, theta, theta * d, d, true))
        }
        Err(e) => Err(e),
    }
}
