//! Reconfigurable-antenna sensing: state switching and state selection.
//!
//! State switching cycles through `L` antenna states within the sensing
//! window, so the energy under `H1` is `Σ_j (1+γ_j) x_j` with independent
//! Rayleigh gains per block. State selection locks onto the strongest of `Q`
//! states. A switching delay of `D` samples is modelled as follows:
//!
//! * switching issues each change `D` samples early, so every block still
//!   sees a single gain and each block needs `l_j >= D` samples;
//! * selection senses its first `D` samples in the state the antenna was
//!   left in, one of the same `Q` realisations chosen uniformly, and the
//!   remaining `M - D` samples in the strongest state.

use crate::detection::{average_over_snr, avg_md_prob_exact};
use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::specfun::gamma::{gamma_density, gamma_pair, ln_gamma_unchecked};
use crate::specfun::harmonic;
use serde::{Deserialize, Serialize};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Number of grid cells on `[0, λ/2]` used by the block-convolution engine.
const GRID_CELLS: usize = 2400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaConfig {
    pub q: u32,
    #[serde(default)]
    pub delay: u32,
}

impl AntennaConfig {
    pub fn new(q: u32, delay: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::Argument("antenna needs at least one state".into()));
        }
        Ok(AntennaConfig { q, delay })
    }
}

/// Samples allotted to each antenna state visited during sensing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchPlan {
    pub alloc: Vec<u32>,
}

impl SwitchPlan {
    pub fn new(alloc: Vec<u32>) -> Result<Self> {
        if alloc.is_empty() || alloc.contains(&0) {
            return Err(Error::Argument("a switching plan needs positive block lengths".into()));
        }
        Ok(SwitchPlan { alloc })
    }

    /// Number of states used, `L`.
    pub fn states(&self) -> usize {
        self.alloc.len()
    }

    pub fn samples(&self) -> u32 {
        self.alloc.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Switching,
    Selection,
}

/// Equal split over `L = min(Q, ⌊M / max(1, D)⌋, M)` states, remainder one
/// sample each to the first states.
pub fn equal_split_plan(m: u32, q: u32, d: u32) -> Result<SwitchPlan> {
    if m == 0 || q == 0 {
        return Err(Error::Argument("equal split needs M >= 1 and Q >= 1".into()));
    }
    if d > m {
        return Err(Error::Argument(format!("delay D = {d} exceeds M = {m}")));
    }
    let l = q.min(m / d.max(1)).min(m);
    let base = m / l;
    let extra = m % l;
    let alloc = (0..l).map(|j| base + u32::from(j < extra)).collect();
    SwitchPlan::new(alloc)
}

/// High-SNR switching form `λ^M / (Γ(M+1) γ̄^L Π (l_j - 1))`.
pub fn switching_md_asymptote(lambda: f64, m: u32, plan: &SwitchPlan, mean_snr: f64) -> Result<f64> {
    if plan.samples() != m {
        return Err(Error::Argument(format!("plan covers {} samples, M = {m}", plan.samples())));
    }
    if plan.alloc.iter().any(|&l| l < 2) {
        return Err(Error::Unsupported("every block needs at least 2 samples".into()));
    }
    if !(lambda > 0.0) || !(mean_snr > 0.0) {
        return Err(Error::domain("switching_md_asymptote", "λ and γ̄ must be positive"));
    }
    let mf = m as f64;
    let ln_prod: f64 = plan.alloc.iter().map(|&l| ((l - 1) as f64).ln()).sum();
    let ln_v = mf * lambda.ln() - ln_gamma_unchecked(mf + 1.0) - plan.states() as f64 * mean_snr.ln() - ln_prod;
    Ok(ln_v.exp())
}

/// Density of the maximum of `Q` i.i.d. exponential SNRs with mean `γ̄`.
pub fn max_rayleigh_pdf(gamma: f64, mean_snr: f64, q: u32) -> Result<f64> {
    if !(gamma >= 0.0) || !(mean_snr > 0.0) || q == 0 {
        return Err(Error::domain("max_rayleigh_pdf", "needs γ >= 0, γ̄ > 0, Q >= 1"));
    }
    Ok(max_pdf(gamma, mean_snr, q))
}

fn max_pdf(gamma: f64, mean_snr: f64, q: u32) -> f64 {
    let x = gamma / mean_snr;
    if q == 1 {
        return (-x).exp() / mean_snr;
    }
    if x == 0.0 {
        return 0.0;
    }
    let ln_cdf1 = (-(-x).exp_m1()).ln();
    (q as f64).ln().exp() / mean_snr * (-x + (q - 1) as f64 * ln_cdf1).exp()
}

/// CDF of the maximum of `k` i.i.d. exponential SNRs.
fn max_cdf(gamma: f64, mean_snr: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    (k as f64 * (-(-gamma / mean_snr).exp_m1()).ln()).exp()
}

/// Diversity order of a reconfigurable scheme with switching delay `D`.
pub fn scheme_diversity(scheme: Scheme, m: u32, q: u32, d: u32) -> Result<f64> {
    if m == 0 || q == 0 {
        return Err(Error::Argument("needs M >= 1 and Q >= 1".into()));
    }
    if d > m {
        return Err(Error::Argument(format!("delay D = {d} exceeds M = {m}")));
    }
    let (mf, qf) = (m as f64, q as f64);
    Ok(match scheme {
        Scheme::Switching => qf.min(mf / d.max(1) as f64).min(mf),
        Scheme::Selection => 1f64.max(((m - d) as f64).min(qf)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionGain {
    pub linear: f64,
    pub db: f64,
    /// `ln Q + γ_Euler`, the large-Q form of `H_Q`.
    pub large_q: f64,
}

/// Mean-SNR gain `D/M + (1 - D/M) H_Q` of selection over a fixed state.
pub fn selection_gain(q: u32, m: u32, d: u32) -> Result<SelectionGain> {
    if m == 0 {
        return Err(Error::Argument("selection gain needs M >= 1".into()));
    }
    if d > m {
        return Err(Error::Argument(format!("delay D = {d} exceeds M = {m}")));
    }
    let h = harmonic(q)?;
    let frac = d as f64 / m as f64;
    let linear = frac + (1.0 - frac) * h;
    Ok(SelectionGain {
        linear,
        db: 10.0 * linear.log10(),
        large_q: (q as f64).ln() + EULER_GAMMA,
    })
}

fn check_common(func: &'static str, m: u32, lambda: f64, mean_snr: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::domain(func, "M must be at least 1"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(func, format!("threshold {lambda} must be positive")));
    }
    if !(mean_snr > 0.0) || !mean_snr.is_finite() {
        return Err(Error::domain(func, format!("mean SNR {mean_snr} must be positive")));
    }
    Ok(())
}

/// Exact average missed detection of state selection without delay,
/// `∫ P(M, λ/(2(1+γ))) f_max(γ) dγ`.
pub fn selection_avg_md(m: u32, lambda: f64, mean_snr: f64, q: u32) -> Result<f64> {
    check_common("selection_avg_md", m, lambda, mean_snr)?;
    if q == 0 {
        return Err(Error::domain("selection_avg_md", "Q must be at least 1"));
    }
    let (a, mf) = (0.5 * lambda, m as f64);
    let g = |x: f64| gamma_pair(mf, a / (1.0 + x)).0 * max_pdf(x, mean_snr, q);
    average_over_snr(g, a, mf, mean_snr, q)
}

/// Selection average using only the dominant small-γ term of the maximum
/// density, `(Q/γ̄^Q) γ^{Q-1} e^{-γ/γ̄}`. Kept as a diagnostic.
pub fn selection_avg_md_dominant(m: u32, lambda: f64, mean_snr: f64, q: u32) -> Result<f64> {
    check_common("selection_avg_md_dominant", m, lambda, mean_snr)?;
    if q == 0 {
        return Err(Error::domain("selection_avg_md_dominant", "Q must be at least 1"));
    }
    let (a, mf, qf) = (0.5 * lambda, m as f64, q as f64);
    let g = |x: f64| {
        if x == 0.0 && q > 1 {
            return 0.0;
        }
        let ln_w = qf.ln() - qf * mean_snr.ln() + (qf - 1.0) * x.ln() - x / mean_snr;
        gamma_pair(mf, a / (1.0 + x)).0 * ln_w.exp()
    };
    average_over_snr(g, a, mf, mean_snr, q)
}

/// Exact average missed detection of state selection with `D` delay samples.
///
/// With `h` the gain of the state left over from the previous frame and
/// `M'` the best of the other `Q - 1`, the energy is
/// `(1+h) X_D + (1+max(h, M')) X_{M-D}`.
pub fn selection_avg_md_delayed(m: u32, lambda: f64, mean_snr: f64, q: u32, d: u32) -> Result<f64> {
    check_common("selection_avg_md_delayed", m, lambda, mean_snr)?;
    if q == 0 {
        return Err(Error::domain("selection_avg_md_delayed", "Q must be at least 1"));
    }
    if d > m {
        return Err(Error::Argument(format!("delay D = {d} exceeds M = {m}")));
    }
    if d == 0 {
        return selection_avg_md(m, lambda, mean_snr, q);
    }
    if d == m || q == 1 {
        return avg_md_prob_exact(m, lambda, mean_snr);
    }
    let (a, mf, s) = (0.5 * lambda, m as f64, mean_snr);
    let (df, rest) = (d as f64, (m - d) as f64);
    let others = q - 1;
    let exp_pdf = |h: f64| (-h / s).exp() / s;

    // Old state happens to be the best one: all M samples see (1 + h).
    let t1 = average_over_snr(
        |h| gamma_pair(mf, a / (1.0 + h)).0 * exp_pdf(h) * max_cdf(h, s, others),
        a,
        mf,
        s,
        q,
    )?;

    let inner_tol = Tolerance { abs: 1e-300, rel: 1e-8, max_intervals: 400 };
    // P((1+h) X_D + (1+g) X_{M-D} <= 2a) for g >= h.
    let two_block = |h: f64, g: f64| -> Result<f64> {
        let top = a / (1.0 + h);
        let f = |x: f64| {
            let r = (a - (1.0 + h) * x).max(0.0) / (1.0 + g);
            gamma_density(df, x) * gamma_pair(rest, r).0
        };
        let mut knots = vec![0.0, top];
        let c = (df - 1.0).max(0.0);
        let w = 4.0 * df.sqrt().max(1.0);
        for k in [c - 2.0 * w, c - w, c, c + w, c + 2.0 * w] {
            if k > 0.0 && k < top {
                knots.push(k);
            }
        }
        knots.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        for iv in knots.windows(2) {
            acc += quad::integrate(f, iv[0], iv[1], inner_tol)?;
        }
        Ok(acc)
    };

    // Another state is the best: integrate over h and over its gain g > h.
    let err = std::cell::RefCell::new(None);
    let outer = |h: f64| -> f64 {
        let mid = |v: f64| {
            let g = h + v;
            let dens = if others == 1 {
                exp_pdf(g)
            } else {
                others as f64 * exp_pdf(g) * max_cdf(g, s, others - 1)
            };
            if dens == 0.0 {
                return 0.0;
            }
            match two_block(h, g) {
                Ok(c) => c * dens,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        match average_over_snr(mid, a, rest.max(1.0), s, q) {
            Ok(v) => v * exp_pdf(h),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let t2 = average_over_snr(outer, a, mf, s, q)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(t1 + t2)
}

/// Exact average missed detection of state switching with plan `plan`:
/// `P(Σ_j (1+γ_j) x_j <= λ)` with i.i.d. Rayleigh block gains.
pub fn switching_avg_md(lambda: f64, plan: &SwitchPlan, mean_snr: f64) -> Result<f64> {
    let m = plan.samples();
    check_common("switching_avg_md", m, lambda, mean_snr)?;
    if plan.states() == 1 {
        return avg_md_prob_exact(m, lambda, mean_snr);
    }
    let curve = SwitchingCdf::new(plan, mean_snr, lambda)?;
    Ok(curve.at_max())
}

/// CDF of the block sum `Σ_j (1+γ_j) x_j` (in units of `2`, i.e. of the
/// statistic divided by 2) on a uniform grid over `[0, λ_max/2]`.
///
/// Block densities are obtained by quadrature over the Rayleigh gain and
/// convolved with the trapezoid rule on two nested grids; Richardson
/// extrapolation of the pair removes the leading `h²` error. All terms are
/// positive, so tiny probabilities keep their relative accuracy.
#[derive(Debug, Clone)]
pub struct SwitchingCdf {
    step: f64,
    cdf: Vec<f64>,
}

impl SwitchingCdf {
    pub fn new(plan: &SwitchPlan, mean_snr: f64, lambda_max: f64) -> Result<Self> {
        Self::with_cells(plan, mean_snr, lambda_max, GRID_CELLS)
    }

    pub fn with_cells(plan: &SwitchPlan, mean_snr: f64, lambda_max: f64, cells: usize) -> Result<Self> {
        check_common("SwitchingCdf", plan.samples(), lambda_max, mean_snr)?;
        let n = cells.max(8) & !1;
        let a = 0.5 * lambda_max;
        let h = a / n as f64;

        let mut lengths: Vec<u32> = plan.alloc.clone();
        lengths.sort_unstable();
        lengths.dedup();
        let mut dens = std::collections::HashMap::new();
        for &l in &lengths {
            let v: Result<Vec<f64>> = (0..=n).map(|i| block_density(l, i as f64 * h, mean_snr)).collect();
            dens.insert(l, v?);
        }

        let fine = convolve_all(&plan.alloc, &dens, 1, n, h);
        let coarse = convolve_all(&plan.alloc, &dens, 2, n / 2, 2.0 * h);
        let cf = cumulative(&fine, h);
        let cc = cumulative(&coarse, 2.0 * h);
        let cdf: Vec<f64> = (0..=n / 2)
            .map(|i| {
                let (f, c) = (cf[2 * i], cc[i]);
                let r = (4.0 * f - c) / 3.0;
                // Keep the extrapolated value only when it is a small correction.
                if r > 0.0 && (r - f).abs() <= 0.5 * f {
                    r.min(1.0)
                } else {
                    f.min(1.0)
                }
            })
            .collect();
        Ok(SwitchingCdf { step: 2.0 * h, cdf })
    }

    /// `P_md` at the largest threshold of the grid.
    pub fn at_max(&self) -> f64 {
        *self.cdf.last().expect("non-empty grid")
    }

    /// `P_md` at threshold `lambda <= λ_max`, interpolated in `ln P` between nodes.
    pub fn at(&self, lambda: f64) -> f64 {
        let x = 0.5 * lambda / self.step;
        if x <= 0.0 {
            return 0.0;
        }
        let last = self.cdf.len() - 1;
        if x >= last as f64 {
            return self.cdf[last];
        }
        let i = x.floor() as usize;
        let t = x - i as f64;
        let (p0, p1) = (self.cdf[i], self.cdf[i + 1]);
        if p0 > 0.0 && p1 > 0.0 {
            (p0.ln() * (1.0 - t) + p1.ln() * t).exp()
        } else {
            p0 * (1.0 - t) + p1 * t
        }
    }
}

fn convolve_all(
    alloc: &[u32],
    dens: &std::collections::HashMap<u32, Vec<f64>>,
    stride: usize,
    n: usize,
    h: f64,
) -> Vec<f64> {
    let pick = |l: u32| -> Vec<f64> { dens[&l].iter().step_by(stride).take(n + 1).cloned().collect() };
    let mut acc = pick(alloc[0]);
    for &l in &alloc[1..] {
        let g = pick(l);
        let mut out = vec![0.0; n + 1];
        for (i, o) in out.iter_mut().enumerate().skip(1) {
            let mut s = 0.5 * (acc[0] * g[i] + acc[i] * g[0]);
            for j in 1..i {
                s += acc[j] * g[i - j];
            }
            *o = s * h;
        }
        acc = out;
    }
    acc
}

fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut s = 0.0;
    out.push(0.0);
    for w in f.windows(2) {
        s += 0.5 * h * (w[0] + w[1]);
        out.push(s);
    }
    out
}

/// Density of `(1+γ) G` at `w`, with `G ~ Gamma(l, 1)` and `γ` exponential
/// with mean `γ̄`: `∫ g_l(w e^{-t}) exp(-(e^t - 1)/γ̄)/γ̄ dt` over `t = ln(1+γ)`.
fn block_density(l: u32, w: f64, mean_snr: f64) -> Result<f64> {
    let lf = l as f64;
    if w == 0.0 && l > 1 {
        return Ok(0.0);
    }
    let f = |t: f64| gamma_density(lf, w * (-t).exp()) * (-(t.exp_m1()) / mean_snr).exp() / mean_snr;
    let t_max = (mean_snr * 80.0).ln_1p();
    let mut knots = vec![0.0, t_max];
    let c = (w.max(1e-300) / lf).ln();
    let width = 5.0 / lf.sqrt();
    for k in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        knots.push(c + k * width);
    }
    let ls = mean_snr.ln_1p();
    for k in [-2.0, 0.0, 1.5] {
        knots.push(ls + k);
    }
    knots.retain(|t| *t > 0.0 && *t < t_max);
    knots.push(0.0);
    knots.push(t_max);
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let tol = Tolerance { abs: 1e-300, rel: 1e-11, max_intervals: 1000 };
    let mut acc = 0.0;
    for iv in knots.windows(2) {
        acc += quad::integrate(f, iv[0], iv[1], tol)?;
    }
    Ok(acc)
}
