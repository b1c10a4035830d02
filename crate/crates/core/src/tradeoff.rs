//! Sensing-throughput trade-off and ergodic link capacity with antenna
//! state selection. Capacities are in nats.

use crate::detection::{avg_md_prob_exact, false_alarm_prob};
use crate::error::{Error, Result};
use crate::fusion::ln_binomial;
use crate::reconfig::{max_rayleigh_pdf, selection_avg_md_delayed};
use crate::specfun::{exp_int_e1_scaled, harmonic};
use serde::{Deserialize, Serialize};

/// Largest `q_t q_r` accepted by the alternating capacity sum.
pub const MAX_CAPACITY_STATES: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    /// Frame length in samples.
    pub k: u32,
    /// Sensing samples.
    pub m: u32,
    /// Switching delay in samples.
    #[serde(default)]
    pub d: u32,
    pub q_t: u32,
    #[serde(default = "one")]
    pub q_r: u32,
    pub sensing_mean_snr: f64,
    pub link_mean_snr: f64,
    #[serde(default = "half")]
    pub prior_h0: f64,
    pub target_pd: f64,
}

fn one() -> u32 {
    1
}

fn half() -> f64 {
    0.5
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Argument("frame length K must be at least 2".into()));
        }
        if self.m >= self.k {
            return Err(Error::Argument(format!("M = {} must be below K = {}", self.m, self.k)));
        }
        if self.d > self.k - self.m {
            return Err(Error::Argument(format!("D = {} exceeds K - M = {}", self.d, self.k - self.m)));
        }
        if self.q_t == 0 || self.q_r == 0 {
            return Err(Error::Argument("antenna state counts must be positive".into()));
        }
        if !(self.sensing_mean_snr > 0.0) || !(self.link_mean_snr > 0.0) {
            return Err(Error::Argument("mean SNRs must be positive".into()));
        }
        if !(self.prior_h0 > 0.0 && self.prior_h0 < 1.0) {
            return Err(Error::Argument(format!("prior_h0 = {} must lie in (0, 1)", self.prior_h0)));
        }
        if !(self.target_pd > 0.0 && self.target_pd < 1.0) {
            return Err(Error::Argument(format!("target_pd = {} must lie in (0, 1)", self.target_pd)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensingScheme {
    Conventional,
    Selection,
}

/// `(1 - M/K)(1 - P_F)`.
pub fn throughput_from_pf(k: u32, m: u32, p_fa: f64) -> Result<f64> {
    if m >= k {
        return Err(Error::Argument(format!("M = {m} must be below K = {k}")));
    }
    if !(0.0..=1.0).contains(&p_fa) {
        return Err(Error::domain("throughput_from_pf", format!("P_F = {p_fa} outside [0, 1]")));
    }
    Ok((1.0 - m as f64 / k as f64) * (1.0 - p_fa))
}

/// Normalized throughput with `m` sensing samples and threshold `lambda`.
pub fn normalized_throughput(cfg: &FrameConfig, m: u32, lambda: f64) -> Result<f64> {
    if m >= cfg.k {
        return Err(Error::Argument(format!("M = {m} must be below K = {}", cfg.k)));
    }
    throughput_from_pf(cfg.k, m, false_alarm_prob(m, lambda)?)
}

/// Average detection probability of the scheme with `m` samples. Selection
/// spends its first `d` samples in the previous state.
fn avg_detection(scheme: SensingScheme, cfg: &FrameConfig, m: u32, lambda: f64) -> Result<f64> {
    let s = cfg.sensing_mean_snr;
    let md = match scheme {
        SensingScheme::Conventional => avg_md_prob_exact(m, lambda, s)?,
        SensingScheme::Selection => selection_avg_md_delayed(m, lambda, s, cfg.q_t, cfg.d.min(m))?,
    };
    Ok(1.0 - md)
}

/// Threshold with average detection probability equal to `target_pd`.
pub fn threshold_for_detection(scheme: SensingScheme, cfg: &FrameConfig, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::Argument("sensing needs at least one sample".into()));
    }
    let target = cfg.target_pd;
    let f = |l: f64| avg_detection(scheme, cfg, m, l).map(|p| p - target);
    // P_D falls from 1 at λ -> 0 to 0 at λ -> ∞; bracket in ln λ.
    let (mut lo, mut hi) = ((1e-8f64).ln(), (1.0f64).ln());
    while f(hi.exp())? > 0.0 {
        hi += 1.0;
        if hi > 30.0 {
            return Err(Error::Infeasible(format!("target P_D {target} not reached with M = {m}")));
        }
    }
    if f(lo.exp())? < 0.0 {
        return Err(Error::Infeasible(format!("target P_D {target} unreachable with M = {m}")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp())? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingOptimum {
    pub m_star: u32,
    pub r_star: f64,
    pub lambda: f64,
    pub p_fa: f64,
    /// `(M, R̃(M))` for `M = 1..K-1`.
    pub curve: Vec<(u32, f64)>,
    /// Whether the discrete difference of the scan changes sign exactly once.
    pub unimodal: bool,
}

/// Exhaustive scan of `M = 1..K-1` with the detection constraint met with equality.
pub fn optimal_sensing_samples(cfg: &FrameConfig, scheme: SensingScheme) -> Result<SensingOptimum> {
    cfg.validate()?;
    let mut curve = Vec::with_capacity(cfg.k as usize - 1);
    let mut best: Option<(u32, f64, f64, f64)> = None;
    for m in 1..cfg.k {
        let lambda = match threshold_for_detection(scheme, cfg, m) {
            Ok(l) => l,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        let pf = false_alarm_prob(m, lambda)?;
        let r = throughput_from_pf(cfg.k, m, pf)?;
        curve.push((m, r));
        if best.is_none_or(|b| r > b.1) {
            best = Some((m, r, lambda, pf));
        }
    }
    let (m_star, r_star, lambda, p_fa) =
        best.ok_or_else(|| Error::Infeasible(format!("target P_D {} unreachable for every M", cfg.target_pd)))?;
    Ok(SensingOptimum { m_star, r_star, lambda, p_fa, unimodal: is_unimodal(&curve), curve })
}

fn is_unimodal(curve: &[(u32, f64)]) -> bool {
    let signs: Vec<bool> =
        curve.windows(2).map(|w| w[1].1 - w[0].1).filter(|d| *d != 0.0).map(|d| d > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count() <= 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputGain {
    pub gain: f64,
    /// Conventional optimum and its false alarm.
    pub m_conventional: u32,
    pub p_fa_conventional: f64,
    /// `round(M_opt / H_{q_t})` and the selection false alarm there.
    pub m_selection: u32,
    pub p_fa_selection: f64,
}

/// `((1 - M_opt/(K H)) / (1 - M_opt/K)) ((1 - P_F,s)/(1 - P_F,c))` with `H = H_{q_t}`.
pub fn throughput_gain(cfg: &FrameConfig) -> Result<ThroughputGain> {
    let conv = optimal_sensing_samples(cfg, SensingScheme::Conventional)?;
    let h = harmonic(cfg.q_t)?;
    let (k, mo) = (cfg.k as f64, conv.m_star as f64);
    let m_sel = ((mo / h).round() as u32).max(1);
    let l_sel = threshold_for_detection(SensingScheme::Selection, cfg, m_sel)?;
    let pf_sel = false_alarm_prob(m_sel, l_sel)?;
    let gain = (1.0 - mo / (k * h)) / (1.0 - mo / k) * ((1.0 - pf_sel) / (1.0 - conv.p_fa));
    Ok(ThroughputGain {
        gain,
        m_conventional: conv.m_star,
        p_fa_conventional: conv.p_fa,
        m_selection: m_sel,
        p_fa_selection: pf_sel,
    })
}

/// Ergodic capacity of the best of `q_t q_r` Rayleigh links,
/// `n Σ_i C(n-1, i) (-1)^i/(i+1) e^{(i+1)/γ̄} E1((i+1)/γ̄)` with `n = q_t q_r`.
pub fn ergodic_capacity_selection(q_t: u32, q_r: u32, link_mean_snr: f64) -> Result<f64> {
    if q_t == 0 || q_r == 0 {
        return Err(Error::domain("ergodic_capacity_selection", "state counts must be positive"));
    }
    if !(link_mean_snr > 0.0) || !link_mean_snr.is_finite() {
        return Err(Error::domain("ergodic_capacity_selection", "mean SNR must be positive"));
    }
    let n = q_t.checked_mul(q_r).unwrap_or(u32::MAX);
    if n > MAX_CAPACITY_STATES {
        return Err(Error::Unsupported(format!(
            "{n} combined states exceed {MAX_CAPACITY_STATES}; the alternating sum loses all precision"
        )));
    }
    // Neumaier-compensated alternating sum.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in 0..n {
        let x = (i + 1) as f64 / link_mean_snr;
        let mag = (ln_binomial(n - 1, i) - ((i + 1) as f64).ln()).exp() * exp_int_e1_scaled(x)?;
        let term = if i % 2 == 0 { mag } else { -mag };
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    Ok(n as f64 * (sum + comp))
}

/// Single-antenna ergodic capacity `e^{1/γ̄} E1(1/γ̄)`.
pub fn ergodic_capacity_conventional(link_mean_snr: f64) -> Result<f64> {
    ergodic_capacity_selection(1, 1, link_mean_snr)
}

/// Capacity when the first `D` of the `K - M` transmission samples still use
/// an unselected state.
pub fn ergodic_capacity_delayed(q_t: u32, q_r: u32, link_mean_snr: f64, k: u32, m: u32, d: u32) -> Result<f64> {
    if m >= k {
        return Err(Error::Argument(format!("M = {m} must be below K = {k}")));
    }
    let t = k - m;
    if d > t {
        return Err(Error::Argument(format!("D = {d} exceeds K - M = {t}")));
    }
    let frac = d as f64 / t as f64;
    let sel = ergodic_capacity_selection(q_t, q_r, link_mean_snr)?;
    if d == 0 {
        return Ok(sel);
    }
    Ok(frac * ergodic_capacity_conventional(link_mean_snr)? + (1.0 - frac) * sel)
}

/// SNR gain in dB: how much the single-link mean SNR must grow to match the
/// capacity of the best of `n_states` links at `link_mean_snr`.
pub fn equivalent_snr_gain_db(n_states: u32, link_mean_snr: f64) -> Result<f64> {
    let target = ergodic_capacity_selection(n_states, 1, link_mean_snr)?;
    let f = |db: f64| ergodic_capacity_conventional(10f64.powf(db / 10.0)).map(|c| c - target);
    let base = 10.0 * link_mean_snr.log10();
    let (mut lo, mut hi) = (base, base + 10.0);
    while f(hi)? < 0.0 {
        hi += 10.0;
        if hi > base + 200.0 {
            return Err(Error::NoSolution("no equivalent single-link SNR found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi) - base)
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// `∫ ln(1+γ) f_max(γ) dγ` by adaptive quadrature, as an independent check
/// of the closed-form sum.
pub fn ergodic_capacity_quadrature(n_states: u32, link_mean_snr: f64) -> Result<f64> {
    let tol = crate::quad::Tolerance::new(1e-13, 1e-12);
    let f = |g: f64| g.ln_1p() * max_rayleigh_pdf(g, link_mean_snr, n_states).unwrap_or(0.0);
    let s = link_mean_snr;
    let mut total = 0.0;
    let knots = [0.0, 0.1 * s, s, 4.0 * s, 16.0 * s];
    for w in knots.windows(2) {
        total += crate::quad::integrate(f, w[0], w[1], tol)?;
    }
    Ok(total + crate::quad::integrate_to_inf(f, knots[4], tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_cfg(d: u32) -> FrameConfig {
        FrameConfig {
            k: 10,
            m: 1,
            d,
            q_t: 2,
            q_r: 1,
            sensing_mean_snr: 1.0,
            link_mean_snr: 10.0,
            prior_h0: 0.5,
            target_pd: 0.9,
        }
    }

    #[test]
    fn throughput_arithmetic() {
        assert_eq!(throughput_from_pf(10, 4, 0.0).unwrap(), 0.6);
        assert_eq!(throughput_from_pf(10, 0, 0.3).unwrap(), 0.7);
        assert!((throughput_from_pf(10, 6, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert!(throughput_from_pf(10, 10, 0.5).is_err());
        let cfg = fig_cfg(0);
        assert!(normalized_throughput(&cfg, 10, 3.0).is_err());
        let r = normalized_throughput(&cfg, 3, 4.0).unwrap();
        assert!((r - 0.7 * (1.0 - false_alarm_prob(3, 4.0).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn detection_constraint_met_with_equality() {
        let cfg = fig_cfg(0);
        for m in [1u32, 4, 9] {
            for scheme in [SensingScheme::Conventional, SensingScheme::Selection] {
                let l = threshold_for_detection(scheme, &cfg, m).unwrap();
                let pd = avg_detection(scheme, &cfg, m, l).unwrap();
                assert!((pd - 0.9).abs() < 1e-9, "{scheme:?} M={m}");
            }
        }
    }

    #[test]
    fn selection_raises_threshold_and_lowers_false_alarm() {
        let cfg = fig_cfg(0);
        let c = optimal_sensing_samples(&cfg, SensingScheme::Conventional).unwrap();
        let s = optimal_sensing_samples(&cfg, SensingScheme::Selection).unwrap();
        assert!(c.unimodal && s.unimodal);
        assert!(s.r_star > c.r_star);
        let ls = threshold_for_detection(SensingScheme::Selection, &cfg, c.m_star).unwrap();
        assert!(ls > c.lambda);
        assert!(false_alarm_prob(c.m_star, ls).unwrap() < c.p_fa);
    }

    #[test]
    fn unimodality_for_several_frames() {
        for k in [8u32, 12, 20] {
            for snr in [0.5, 1.0, 3.0] {
                let mut cfg = fig_cfg(0);
                cfg.k = k;
                cfg.sensing_mean_snr = snr;
                for scheme in [SensingScheme::Conventional, SensingScheme::Selection] {
                    assert!(optimal_sensing_samples(&cfg, scheme).unwrap().unimodal, "K={k} γ̄={snr}");
                }
            }
        }
        assert!(!is_unimodal(&[(1, 0.1), (2, 0.3), (3, 0.2), (4, 0.25), (5, 0.1)]));
    }

    #[test]
    fn gain_is_one_without_extra_states() {
        let mut cfg = fig_cfg(0);
        cfg.q_t = 1;
        let g = throughput_gain(&cfg).unwrap();
        assert!((g.gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_reduces_to_single_link() {
        for s in [0.1, 1.0, 10.0, 1000.0] {
            let c = ergodic_capacity_selection(1, 1, s).unwrap();
            let want = (1.0 / s).exp() * crate::specfun::exp_int_e1(1.0 / s).unwrap();
            assert!(((c - want) / want).abs() < 1e-13);
        }
    }

    #[test]
    fn capacity_matches_quadrature() {
        for n in 1..=16u32 {
            for s in [0.5, 10.0, 100.0] {
                let c = ergodic_capacity_selection(n, 1, s).unwrap();
                let q = ergodic_capacity_quadrature(n, s).unwrap();
                assert!((c - q).abs() < 1e-6, "n={n} γ̄={s}: {c} vs {q}");
            }
        }
    }

    #[test]
    fn capacity_increases_with_states() {
        let c: Vec<f64> = [1u32, 2, 4, 8, 16].iter().map(|&q| ergodic_capacity_selection(q, 1, 10.0).unwrap()).collect();
        assert!(c.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(ergodic_capacity_selection(4, 4, 10.0).unwrap(), ergodic_capacity_selection(16, 1, 10.0).unwrap());
        assert!(matches!(ergodic_capacity_selection(9, 8, 10.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ratio_is_base_independent() {
        let (a, b) = (ergodic_capacity_selection(4, 1, 10.0).unwrap(), ergodic_capacity_conventional(10.0).unwrap());
        assert!((a / b - nats_to_bits(a) / nats_to_bits(b)).abs() < 1e-12);
    }

    #[test]
    fn equivalent_gain_inverts_capacity() {
        let g = equivalent_snr_gain_db(4, 10.0).unwrap();
        let c = ergodic_capacity_conventional(10f64.powf((10.0 + g) / 10.0)).unwrap();
        assert!((c - ergodic_capacity_selection(4, 1, 10.0).unwrap()).abs() < 1e-10);
        assert!(equivalent_snr_gain_db(1, 10.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn delayed_capacity() {
        let sel = ergodic_capacity_selection(2, 2, 10.0).unwrap();
        assert_eq!(ergodic_capacity_delayed(2, 2, 10.0, 20, 4, 0).unwrap(), sel);
        let conv = ergodic_capacity_conventional(10.0).unwrap();
        let v = ergodic_capacity_delayed(2, 2, 10.0, 20, 4, 4).unwrap();
        assert!((v - (0.25 * conv + 0.75 * sel)).abs() < 1e-14);
        assert_eq!(ergodic_capacity_delayed(2, 2, 10.0, 20, 4, 16).unwrap(), conv);
        assert!(ergodic_capacity_delayed(2, 2, 10.0, 20, 4, 17).is_err());
    }

    #[test]
    fn frame_validation() {
        let mut c = fig_cfg(0);
        assert!(c.validate().is_ok());
        c.m = 10;
        assert!(c.validate().is_err());
        let mut c = fig_cfg(0);
        c.target_pd = 1.0;
        assert!(c.validate().is_err());
        let mut c = fig_cfg(0);
        c.d = 10;
        assert!(c.validate().is_err());
    }
}
