//! Hard-decision n-out-of-N fusion of local energy detectors.

use crate::detection::{avg_md_prob_exact, md_asymptote_noncoop, Asymptote};
use crate::error::{Error, Result};
use crate::specfun::gamma::ln_gamma_unchecked;
use serde::{Deserialize, Serialize};

/// Cooperative network of `n_users` detectors; the fusion centre declares
/// the signal present when at least `vote_threshold` of them do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    pub n_users: u32,
    pub vote_threshold: u32,
}

impl FusionConfig {
    pub fn new(n_users: u32, vote_threshold: u32) -> Result<Self> {
        let cfg = FusionConfig { n_users, vote_threshold };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.vote_threshold == 0 || self.vote_threshold > self.n_users {
            return Err(Error::Argument(format!(
                "fusion needs 1 <= n <= N, got n = {}, N = {}",
                self.vote_threshold, self.n_users
            )));
        }
        if self.n_users > 1000 {
            return Err(Error::Argument(format!("N = {} is too large", self.n_users)));
        }
        Ok(())
    }

    /// OR rule.
    pub fn or_rule(n_users: u32) -> Result<Self> {
        Self::new(n_users, 1)
    }

    /// Diversity order `N - n + 1` of the global missed detection.
    pub fn diversity(&self) -> u32 {
        self.n_users - self.vote_threshold + 1
    }
}

pub(crate) fn ln_binomial(n: u32, k: u32) -> f64 {
    ln_gamma_unchecked(n as f64 + 1.0)
        - ln_gamma_unchecked(k as f64 + 1.0)
        - ln_gamma_unchecked((n - k) as f64 + 1.0)
}

/// `Σ_{l=lo}^{hi} C(N,l) p^l (1-p)^{N-l}` in log space.
fn binomial_range(n: u32, lo: u32, hi: u32, p: f64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    if p <= 0.0 {
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if hi == n { 1.0 } else { 0.0 };
    }
    let lp = p.ln();
    let lq = (-p).ln_1p();
    let logs: Vec<f64> = (lo..=hi)
        .map(|l| ln_binomial(n, l) + l as f64 * lp + (n - l) as f64 * lq)
        .collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let s: f64 = logs.iter().map(|v| (v - peak).exp()).sum();
    (peak + s.ln()).exp().min(1.0)
}

fn check_prob(func: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(func, format!("{p} is not a probability")));
    }
    Ok(())
}

/// Probability that at least `n` of `N` independent votes fire when each
/// fires with probability `p_f_local`.
pub fn global_false_alarm(cfg: &FusionConfig, p_f_local: f64) -> Result<f64> {
    cfg.validate()?;
    check_prob("global_false_alarm", p_f_local)?;
    Ok(binomial_range(cfg.n_users, cfg.vote_threshold, cfg.n_users, p_f_local))
}

pub fn global_detection(cfg: &FusionConfig, p_d_local: f64) -> Result<f64> {
    cfg.validate()?;
    check_prob("global_detection", p_d_local)?;
    Ok(binomial_range(cfg.n_users, cfg.vote_threshold, cfg.n_users, p_d_local))
}

/// Global missed detection `Σ_{l=0}^{n-1} C(N,l) P_md^{N-l} (1-P_md)^l`,
/// evaluated from the local missed detection probability so tiny values
/// keep their relative accuracy.
pub fn global_missed_detection(cfg: &FusionConfig, p_md_local: f64) -> Result<f64> {
    cfg.validate()?;
    check_prob("global_missed_detection", p_md_local)?;
    // Count of "absent" votes is Binomial(N, p_md); miss when it is >= N-n+1.
    Ok(binomial_range(cfg.n_users, cfg.n_users - cfg.vote_threshold + 1, cfg.n_users, p_md_local))
}

/// Exact global missed detection for Rayleigh-faded users at threshold `lambda`.
pub fn global_md_exact(cfg: &FusionConfig, m: u32, lambda: f64, mean_snr: f64) -> Result<f64> {
    let local = avg_md_prob_exact(m, lambda, mean_snr)?;
    global_missed_detection(cfg, local)
}

/// `C(N, n-1) (λ/(2γ̄(M-1)))^{N-n+1}` with diversity `N-n+1` and coding gain
/// `C(N, n-1)^{-1/(N-n+1)} (M-1)/λ`.
pub fn global_md_asymptote(cfg: &FusionConfig, m: u32, lambda: f64, mean_snr: f64) -> Result<Asymptote> {
    cfg.validate()?;
    let local = md_asymptote_noncoop(m, lambda, mean_snr)?;
    let d = cfg.diversity() as f64;
    let ln_c = ln_binomial(cfg.n_users, cfg.vote_threshold - 1);
    Ok(Asymptote {
        value: (ln_c + d * local.value.ln()).exp(),
        diversity: d,
        coding_gain: (-ln_c / d).exp() * local.coding_gain,
    })
}

/// Large-threshold approximation `C(N,n) ((λ/2)^{M-1}/Γ(M))^n e^{-λn/2}`,
/// keeping only the last term of the local false alarm series.
pub fn global_fa_approx(cfg: &FusionConfig, m: u32, lambda: f64) -> Result<f64> {
    cfg.validate()?;
    if m == 0 || !(lambda > 0.0) {
        return Err(Error::domain("global_fa_approx", "needs M >= 1 and λ > 0"));
    }
    let n = cfg.vote_threshold as f64;
    let ln_local = (m as f64 - 1.0) * (0.5 * lambda).ln() - ln_gamma_unchecked(m as f64) - 0.5 * lambda;
    Ok((ln_binomial(cfg.n_users, cfg.vote_threshold) + n * ln_local).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::false_alarm_prob;
    use proptest::prelude::*;

    fn enumerate(n: u32, k: u32, p: f64) -> f64 {
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() >= k)
            .map(|mask| {
                let ones = mask.count_ones() as i32;
                p.powi(ones) * (1.0 - p).powi(n as i32 - ones)
            })
            .sum()
    }

    fn slope(f: impl Fn(f64) -> f64, lo_db: f64, hi_db: f64) -> f64 {
        let pts: Vec<(f64, f64)> = (0..=10)
            .map(|i| {
                let db = lo_db + (hi_db - lo_db) * i as f64 / 10.0;
                (db / 10.0, -f(10f64.powf(db / 10.0)).log10())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn arithmetic_cases() {
        let or2 = FusionConfig::new(2, 1).unwrap();
        assert!((global_false_alarm(&or2, 0.1).unwrap() - 0.19).abs() < 1e-15);
        let and5 = FusionConfig::new(5, 5).unwrap();
        assert!((global_false_alarm(&and5, 0.3).unwrap() - 0.3f64.powi(5)).abs() < 1e-15);
        let c32 = FusionConfig::new(3, 2).unwrap();
        assert_eq!(global_detection(&c32, 1.0).unwrap(), 1.0);
        assert!((global_detection(&c32, 0.9).unwrap() - 0.972).abs() < 1e-14);
        assert!(FusionConfig::new(3, 4).is_err());
        assert!(FusionConfig::new(3, 0).is_err());
    }

    #[test]
    fn matches_enumeration() {
        let cfg = FusionConfig::new(10, 4).unwrap();
        let want = enumerate(10, 4, 0.3);
        assert!((global_false_alarm(&cfg, 0.3).unwrap() - want).abs() < 1e-14);
        for n in 1..=10 {
            let cfg = FusionConfig::new(10, n).unwrap();
            for &p in &[0.0, 1e-3, 0.2, 0.77, 1.0] {
                assert!((global_detection(&cfg, p).unwrap() - enumerate(10, n, p)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn missed_detection_is_complement() {
        for n in 1..=7 {
            let cfg = FusionConfig::new(7, n).unwrap();
            for &pmd in &[1e-4, 0.05, 0.5, 0.93] {
                let direct = global_missed_detection(&cfg, pmd).unwrap();
                let comp = 1.0 - global_detection(&cfg, 1.0 - pmd).unwrap();
                assert!((direct - comp).abs() < 1e-13);
                let literal: f64 = (0..n)
                    .map(|l| {
                        ln_binomial(7, l).exp() * pmd.powi((7 - l) as i32) * (1.0 - pmd).powi(l as i32)
                    })
                    .sum();
                assert!(((direct - literal) / literal).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asymptote_reductions() {
        let single = FusionConfig::new(1, 1).unwrap();
        let a = global_md_asymptote(&single, 6, 14.0, 300.0).unwrap();
        let b = md_asymptote_noncoop(6, 14.0, 300.0).unwrap();
        assert!(((a.value - b.value) / b.value).abs() < 1e-14);
        assert_eq!(a.diversity, 1.0);
        let or10 = FusionConfig::or_rule(10).unwrap();
        assert_eq!(global_md_asymptote(&or10, 10, 20.0, 1e3).unwrap().diversity, 10.0);
        assert!(global_md_asymptote(&or10, 1, 20.0, 1e3).is_err());
    }

    #[test]
    fn or_rule_slope_is_ten() {
        let cfg = FusionConfig::or_rule(10).unwrap();
        let s = slope(|g| global_md_exact(&cfg, 10, 20.0, g).unwrap(), 30.0, 50.0);
        assert!((s - 10.0).abs() < 0.3, "slope {s}");
    }

    #[test]
    fn exact_slopes_match_diversity() {
        for big_n in 1..=10u32 {
            for n in 1..=big_n {
                let cfg = FusionConfig::new(big_n, n).unwrap();
                let s = slope(|g| global_md_exact(&cfg, 10, 25.0, g).unwrap(), 30.0, 50.0);
                let want = cfg.diversity() as f64;
                assert!((s - want).abs() < 0.3, "N={big_n} n={n} slope {s}");
            }
        }
    }

    #[test]
    fn fa_approximation() {
        // Dominant-term reduction for a single user.
        let single = FusionConfig::new(1, 1).unwrap();
        let lam: f64 = 60.0;
        let last = (0.5 * lam).powi(2) / 2.0 * (-0.5 * lam).exp();
        assert!(((global_fa_approx(&single, 3, lam).unwrap() - last) / last).abs() < 1e-12);

        // N=5, n=2, M=5, λ=100: exact/approx = (Σ_{k<5} 50^k/k! / (50^4/4!))^2 ≈ 1.1768.
        let cfg = FusionConfig::new(5, 2).unwrap();
        let exact = global_false_alarm(&cfg, false_alarm_prob(5, 100.0).unwrap()).unwrap();
        let approx = global_fa_approx(&cfg, 5, 100.0).unwrap();
        let series: f64 = 1.0 + 4.0 / 50.0 + 12.0 / 2500.0 + 24.0 / 125_000.0 + 24.0 / 6_250_000.0;
        assert!((exact / approx - series * series).abs() < 1e-3, "{}", exact / approx);

        // n -> 2n squares the per-user factor.
        let c1 = FusionConfig::new(8, 1).unwrap();
        let c2 = FusionConfig::new(8, 2).unwrap();
        let f1 = global_fa_approx(&c1, 4, 40.0).unwrap() / 8.0;
        let f2 = global_fa_approx(&c2, 4, 40.0).unwrap() / 28.0;
        assert!(((f2 - f1 * f1) / f2).abs() < 1e-12);
    }

    #[test]
    fn large_networks_do_not_overflow() {
        let cfg = FusionConfig::new(64, 32).unwrap();
        let v = global_false_alarm(&cfg, 0.5).unwrap();
        assert!(v > 0.5 && v < 0.6);
        let tiny = global_missed_detection(&FusionConfig::or_rule(64).unwrap(), 1e-4).unwrap();
        assert!(((tiny.ln() - 64.0 * 1e-4f64.ln()) / tiny.ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn monotone_in_probability_and_threshold(big_n in 1u32..30, p in 0.0f64..1.0, dp in 0.0f64..0.2) {
            let p2 = (p + dp).min(1.0);
            let mut prev_fa = 2.0;
            for n in 1..=big_n {
                let cfg = FusionConfig::new(big_n, n).unwrap();
                let a = global_false_alarm(&cfg, p).unwrap();
                let b = global_false_alarm(&cfg, p2).unwrap();
                prop_assert!(b >= a - 1e-15);
                prop_assert!(a <= prev_fa + 1e-15);
                prev_fa = a;
                let d = global_detection(&cfg, p).unwrap();
                prop_assert!((d - a).abs() < 1e-15);
            }
        }
    }
}
