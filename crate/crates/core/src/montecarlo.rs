//! Seeded, parallel Monte Carlo simulation of the four detectors, plus curve
//! post-processing.
//!
//! Trials at each grid point are cut into fixed blocks of [`BLOCK`] frames.
//! Block `b` of grid point `g` draws from its own ChaCha8 stream, keyed by
//! the seed and `g` with stream id `b`, so the tallies do not depend on how
//! blocks are scheduled across threads.

use crate::detection::{avg_md_prob_exact, false_alarm_prob};
use crate::error::{Error, Result};
use crate::fusion::{global_false_alarm, global_md_exact, FusionConfig};
use crate::reconfig::{equal_split_plan, selection_avg_md_delayed, switching_avg_md, AntennaConfig, SwitchPlan};
use crate::thresholds::{bayes_design_noncoop, bayes_design_reconfig, np_threshold_cooperative, np_threshold_local};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Frames per substream.
pub const BLOCK: u64 = 1 << 14;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "COGSENSE_THREADS";

/// Missed-detection estimates with fewer hits than this are withheld.
pub const MIN_HITS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    NonCoop,
    Cooperative,
    Switching,
    Selection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Criterion {
    /// Neyman-Pearson with false-alarm level `alpha`.
    Np { alpha: f64 },
    /// Bayes with drift factor `theta` on the closed-form threshold.
    Bayes {
        #[serde(default = "unit")]
        theta: f64,
    },
}

fn unit() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// Per-detector sample count and prior; the mean SNR comes from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub m: u32,
    #[serde(default = "half")]
    pub prior_h1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scheme: SchemeKind,
    pub criterion: Criterion,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antenna: Option<AntennaConfig>,
    /// Mean SNR grid in dB.
    #[serde(rename = "grid")]
    pub snr_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Draw block energies as scaled gamma variates instead of summing
    /// squared normals sample by sample.
    #[serde(default)]
    pub fast: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Argument("trials must be at least 1".into()));
        }
        if self.model.m == 0 {
            return Err(Error::Argument("model.m must be at least 1".into()));
        }
        if !(self.model.prior_h1 > 0.0 && self.model.prior_h1 < 1.0) {
            return Err(Error::Argument(format!("prior_h1 = {} must lie in (0, 1)", self.model.prior_h1)));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Argument("SNR grid is empty".into()));
        }
        if self.snr_grid_db.iter().any(|x| !x.is_finite()) || self.snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("SNR grid must be finite and strictly increasing".into()));
        }
        match self.criterion {
            Criterion::Np { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                return Err(Error::Argument(format!("alpha = {alpha} must lie in (0, 1)")));
            }
            Criterion::Bayes { theta } if !(theta > 0.0 && theta.is_finite()) => {
                return Err(Error::Argument(format!("theta = {theta} must be positive")));
            }
            _ => {}
        }
        let (needs_fusion, needs_antenna) = match self.scheme {
            SchemeKind::NonCoop => (false, false),
            SchemeKind::Cooperative => (true, false),
            SchemeKind::Switching | SchemeKind::Selection => (false, true),
        };
        if needs_fusion != self.fusion.is_some() {
            return Err(Error::Argument(format!(
                "scheme {:?} {} a fusion section",
                self.scheme,
                if needs_fusion { "requires" } else { "does not take" }
            )));
        }
        if needs_antenna != self.antenna.is_some() {
            return Err(Error::Argument(format!(
                "scheme {:?} {} an antenna section",
                self.scheme,
                if needs_antenna { "requires" } else { "does not take" }
            )));
        }
        if let Some(f) = &self.fusion {
            f.validate()?;
        }
        if let Some(a) = &self.antenna {
            AntennaConfig::new(a.q, a.delay)?;
            if a.delay > self.model.m {
                return Err(Error::Argument(format!("delay {} exceeds M = {}", a.delay, self.model.m)));
            }
        }
        Ok(())
    }

    /// Detection threshold used at mean SNR `mean_snr` (linear).
    pub fn threshold(&self, mean_snr: f64) -> Result<f64> {
        let m = self.model.m;
        let prior = self.model.prior_h1;
        match (self.criterion, self.scheme) {
            (Criterion::Np { alpha }, SchemeKind::Cooperative) => {
                np_threshold_cooperative(self.fusion.as_ref().expect("validated"), m, alpha)
            }
            (Criterion::Np { alpha }, _) => np_threshold_local(m, alpha),
            (Criterion::Bayes { theta }, SchemeKind::NonCoop | SchemeKind::Cooperative) => {
                Ok(bayes_design_noncoop(m, mean_snr, prior, theta)?.lambda)
            }
            (Criterion::Bayes { theta }, SchemeKind::Switching | SchemeKind::Selection) => {
                let q = self.antenna.expect("validated").q;
                Ok(bayes_design_reconfig(m, q, mean_snr, prior, theta)?.lambda)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub lambda: f64,
    pub p_fa_hat: f64,
    /// `None` when fewer than [`MIN_HITS`] missed detections were seen.
    pub p_md_hat: Option<f64>,
    pub p_err_hat: f64,
    /// 95% normal-approximation half-width of the primary metric:
    /// `p_md` under Neyman-Pearson, `p_err` under Bayes.
    pub ci_halfwidth: f64,
    pub trials_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub points: Vec<CurvePoint>,
}

impl CurveResult {
    pub fn snr_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.snr_db).collect()
    }

    pub fn values(&self, metric: Metric) -> Vec<Option<f64>> {
        self.points.iter().map(|p| metric.of(p)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    FalseAlarm,
    MissedDetection,
    Error,
}

impl Metric {
    pub fn of(self, p: &CurvePoint) -> Option<f64> {
        match self {
            Metric::FalseAlarm => Some(p.p_fa_hat),
            Metric::MissedDetection => p.p_md_hat,
            Metric::Error => Some(p.p_err_hat),
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn simulate_curve(spec: &ExperimentSpec) -> Result<CurveResult> {
    simulate_curve_with_threads(spec, thread_cap())
}

pub fn simulate_curve_with_threads(spec: &ExperimentSpec, threads: Option<usize>) -> Result<CurveResult> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    let frame = FrameModel::new(spec)?;
    let lambdas: Vec<f64> =
        spec.snr_grid_db.iter().map(|&db| spec.threshold(db_to_linear(db))).collect::<Result<_>>()?;
    let blocks = spec.trials.div_ceil(BLOCK);
    let jobs: Vec<(usize, u64)> = (0..spec.snr_grid_db.len()).flat_map(|g| (0..blocks).map(move |b| (g, b))).collect();
    let tallies: Vec<(u64, u64)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, b)| {
                let n = BLOCK.min(spec.trials - b * BLOCK);
                let mut rng = substream(spec.seed, g as u64, b);
                frame.run_block(&mut rng, n, db_to_linear(spec.snr_grid_db[g]), lambdas[g])
            })
            .collect()
    });

    let bayes = matches!(spec.criterion, Criterion::Bayes { .. });
    let (p1, n) = (spec.model.prior_h1, spec.trials as f64);
    let points = spec
        .snr_grid_db
        .iter()
        .enumerate()
        .map(|(g, &snr_db)| {
            let (fa, md) = tallies[g * blocks as usize..(g + 1) * blocks as usize]
                .iter()
                .fold((0, 0), |acc, t| (acc.0 + t.0, acc.1 + t.1));
            let p_fa = fa as f64 / n;
            let p_md = md as f64 / n;
            let p_err = (1.0 - p1) * p_fa + p1 * p_md;
            let ci = if bayes {
                // Independent H0 and H1 tallies.
                1.96 * ((1.0 - p1).powi(2) * p_fa * (1.0 - p_fa) / n + p1 * p1 * p_md * (1.0 - p_md) / n).sqrt()
            } else {
                1.96 * (p_md * (1.0 - p_md) / n).sqrt()
            };
            CurvePoint {
                snr_db,
                lambda: lambdas[g],
                p_fa_hat: p_fa,
                p_md_hat: (md >= MIN_HITS).then_some(p_md),
                p_err_hat: p_err,
                ci_halfwidth: ci,
                trials_used: spec.trials,
            }
        })
        .collect();
    Ok(CurveResult { points })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn substream(seed: u64, grid: u64, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = splitmix64(seed);
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        s = splitmix64(s ^ grid.wrapping_mul(0xd1b5_4a32_d192_ed03).wrapping_add(i as u64));
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}

/// Per-sample antenna state for a switching plan when every command is
/// issued `d` samples ahead of its block boundary and the previous state
/// persists for `d` samples after each command.
pub fn switching_sample_states(plan: &SwitchPlan, d: u32) -> Vec<usize> {
    let mut starts = Vec::with_capacity(plan.states());
    let mut acc = 0i64;
    for &l in &plan.alloc {
        starts.push(acc);
        acc += l as i64;
    }
    let issue: Vec<i64> = starts.iter().map(|s| s - d as i64).collect();
    (0..acc)
        .map(|i| {
            // Latest command whose persistence window has elapsed by sample i.
            issue.iter().rposition(|&t| t + d as i64 <= i).unwrap_or(0)
        })
        .collect()
}

fn sample_states_to_counts(states: &[usize], n_states: usize) -> Vec<u32> {
    let mut c = vec![0u32; n_states];
    for &s in states {
        c[s] += 1;
    }
    c
}

/// Everything a block of frames needs that does not change with the SNR.
struct FrameModel {
    scheme: SchemeKind,
    m: u32,
    fast: bool,
    fusion: Option<FusionConfig>,
    q: u32,
    delay: u32,
    /// Switching: state of each sample.
    sample_state: Vec<usize>,
    /// Switching: samples per state, fast path.
    state_counts: Vec<u32>,
    gamma_m: Gamma<f64>,
    gamma_by_len: Vec<Option<Gamma<f64>>>,
}

impl FrameModel {
    fn new(spec: &ExperimentSpec) -> Result<Self> {
        let m = spec.model.m;
        let (q, delay) = spec.antenna.map_or((1, 0), |a| (a.q, a.delay));
        let (sample_state, state_counts) = if spec.scheme == SchemeKind::Switching {
            let plan = equal_split_plan(m, q, delay)?;
            let st = switching_sample_states(&plan, delay);
            let counts = sample_states_to_counts(&st, plan.states());
            (st, counts)
        } else {
            (Vec::new(), Vec::new())
        };
        let gamma = |k: u32| Gamma::new(k as f64, 1.0).map_err(|e| Error::Numeric(format!("gamma sampler: {e}")));
        let mut gamma_by_len = vec![None; m as usize + 1];
        for k in 1..=m {
            if spec.fast && (state_counts.contains(&k) || k == delay || k == m - delay) {
                gamma_by_len[k as usize] = Some(gamma(k)?);
            }
        }
        Ok(FrameModel {
            scheme: spec.scheme,
            m,
            fast: spec.fast,
            fusion: spec.fusion,
            q,
            delay,
            sample_state,
            state_counts,
            gamma_m: gamma(m)?,
            gamma_by_len,
        })
    }

    /// Energy of `len` samples, noise only (`snr = 0`) or with a signal at
    /// SNR `snr` per sample, under unit noise variance per quadrature.
    fn energy<R: Rng>(&self, rng: &mut R, len: u32, snr: f64) -> f64 {
        if len == 0 {
            return 0.0;
        }
        if self.fast {
            let g = if len == self.m {
                self.gamma_m.sample(rng)
            } else {
                self.gamma_by_len[len as usize].as_ref().expect("prepared").sample(rng)
            };
            return 2.0 * (1.0 + snr) * g;
        }
        let amp = snr.sqrt();
        let mut e = 0.0;
        for _ in 0..len {
            let (sr, si, nr, ni): (f64, f64, f64, f64) = (
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            );
            let (yr, yi) = (amp * sr + nr, amp * si + ni);
            e += yr * yr + yi * yi;
        }
        e
    }

    fn rayleigh<R: Rng>(rng: &mut R, mean_snr: f64) -> f64 {
        let e: f64 = Exp1.sample(rng);
        mean_snr * e
    }

    /// Returns (false alarms, missed detections) over `n` frame pairs.
    fn run_block<R: Rng>(&self, rng: &mut R, n: u64, mean_snr: f64, lambda: f64) -> (u64, u64) {
        let (mut fa, mut md) = (0u64, 0u64);
        let mut gains = vec![0.0; self.q.max(self.state_counts.len() as u32) as usize];
        for _ in 0..n {
            match self.scheme {
                SchemeKind::Cooperative => {
                    let cfg = self.fusion.expect("validated");
                    let mut votes_h0 = 0;
                    let mut votes_h1 = 0;
                    for _ in 0..cfg.n_users {
                        if self.energy(rng, self.m, 0.0) > lambda {
                            votes_h0 += 1;
                        }
                        let g = Self::rayleigh(rng, mean_snr);
                        if self.energy(rng, self.m, g) > lambda {
                            votes_h1 += 1;
                        }
                    }
                    fa += u64::from(votes_h0 >= cfg.vote_threshold);
                    md += u64::from(votes_h1 < cfg.vote_threshold);
                }
                _ => {
                    fa += u64::from(self.energy(rng, self.m, 0.0) > lambda);
                    md += u64::from(self.h1_energy(rng, mean_snr, &mut gains) <= lambda);
                }
            }
        }
        (fa, md)
    }

    fn h1_energy<R: Rng>(&self, rng: &mut R, mean_snr: f64, gains: &mut [f64]) -> f64 {
        match self.scheme {
            SchemeKind::NonCoop => {
                let g = Self::rayleigh(rng, mean_snr);
                self.energy(rng, self.m, g)
            }
            SchemeKind::Switching => {
                let used = self.state_counts.len();
                for g in gains[..used].iter_mut() {
                    *g = Self::rayleigh(rng, mean_snr);
                }
                if self.fast {
                    self.state_counts
                        .iter()
                        .zip(gains.iter())
                        .map(|(&c, &g)| self.energy(rng, c, g))
                        .sum()
                } else {
                    self.sample_state.iter().map(|&s| self.energy(rng, 1, gains[s])).sum()
                }
            }
            SchemeKind::Selection => {
                let q = self.q as usize;
                for g in gains[..q].iter_mut() {
                    *g = Self::rayleigh(rng, mean_snr);
                }
                let best = gains[..q].iter().cloned().fold(0.0, f64::max);
                if self.delay == 0 {
                    return self.energy(rng, self.m, best);
                }
                // The antenna starts in the state it was left in, one of the Q.
                let old = gains[rng.random_range(0..q)];
                self.energy(rng, self.delay, old) + self.energy(rng, self.m - self.delay, best)
            }
            SchemeKind::Cooperative => unreachable!("handled per user"),
        }
    }
}

/// Exact counterpart of [`simulate_curve`], from the closed forms and
/// quadratures of the analytic modules. Confidence widths are zero.
pub fn analytic_curve(spec: &ExperimentSpec) -> Result<CurveResult> {
    spec.validate()?;
    let m = spec.model.m;
    let p1 = spec.model.prior_h1;
    let points = spec
        .snr_grid_db
        .iter()
        .map(|&snr_db| {
            let s = db_to_linear(snr_db);
            let lambda = spec.threshold(s)?;
            let pf_local = false_alarm_prob(m, lambda)?;
            let (p_fa, p_md) = match spec.scheme {
                SchemeKind::NonCoop => (pf_local, avg_md_prob_exact(m, lambda, s)?),
                SchemeKind::Cooperative => {
                    let cfg = spec.fusion.as_ref().expect("validated");
                    (global_false_alarm(cfg, pf_local)?, global_md_exact(cfg, m, lambda, s)?)
                }
                SchemeKind::Switching => {
                    let a = spec.antenna.expect("validated");
                    (pf_local, switching_avg_md(lambda, &equal_split_plan(m, a.q, a.delay)?, s)?)
                }
                SchemeKind::Selection => {
                    let a = spec.antenna.expect("validated");
                    (pf_local, selection_avg_md_delayed(m, lambda, s, a.q, a.delay)?)
                }
            };
            Ok(CurvePoint {
                snr_db,
                lambda,
                p_fa_hat: p_fa,
                p_md_hat: Some(p_md),
                p_err_hat: (1.0 - p1) * p_fa + p1 * p_md,
                ci_halfwidth: 0.0,
                trials_used: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveResult { points })
}

/// Least-squares slope of `-log10 P` against `log10 γ̄` over `window_db`.
pub fn diversity_slope(curve: &CurveResult, metric: Metric, window_db: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.snr_db >= window_db.0 - 1e-9 && p.snr_db <= window_db.1 + 1e-9)
        .filter_map(|p| metric.of(p).filter(|&v| v > 0.0).map(|v| (p.snr_db / 10.0, -v.log10())))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Estimation(format!(
            "only {} usable points in [{}, {}] dB; raise trials or widen the window",
            pts.len(),
            window_db.0,
            window_db.1
        )));
    }
    Ok(ls_slope(&pts))
}

pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// SNR (dB) where `ln P_a - ln P_b` first changes sign strictly, linearly
/// interpolated; `None` when it never does.
pub fn crossover_snr(a: &CurveResult, b: &CurveResult, metric: Metric) -> Result<Option<f64>> {
    if a.snr_grid() != b.snr_grid() {
        return Err(Error::Argument("crossover needs curves on a common grid".into()));
    }
    let diff: Vec<Option<(f64, f64)>> = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(pa, pb)| match (metric.of(pa), metric.of(pb)) {
            (Some(x), Some(y)) if x > 0.0 && y > 0.0 => Some((pa.snr_db, x.ln() - y.ln())),
            _ => None,
        })
        .collect();
    for w in diff.windows(2) {
        if let (Some((x0, d0)), Some((x1, d1))) = (w[0], w[1]) {
            if d0 * d1 < 0.0 {
                return Ok(Some(x0 + d0 / (d0 - d1) * (x1 - x0)));
            }
        }
    }
    Ok(None)
}

/// First SNR (dB) at which the metric falls to `level`, interpolating
/// `ln P` linearly between grid points.
pub fn snr_at_level(curve: &CurveResult, metric: Metric, level: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter_map(|p| metric.of(p).filter(|&v| v > 0.0).map(|v| (p.snr_db, v.ln())))
        .collect();
    let l = level.ln();
    pts.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if y0 >= l && y1 <= l && y0 != y1 {
            Some(x0 + (y0 - l) / (y0 - y1) * (x1 - x0))
        } else if y0 == l {
            Some(x0)
        } else {
            None
        }
    })
}
