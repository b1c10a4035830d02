//! Figure jobs: parameter defaults, overrides, and curve generation.

use crate::error::{CliError, CliResult};
use crate::table::{curve_rows, CurveRow, SeriesRow, Table};
use clap::ValueEnum;
use cogsense::fusion::FusionConfig;
use cogsense::montecarlo::{
    analytic_curve, crossover_snr, simulate_curve, snr_at_level, Criterion, CurveResult, ExperimentSpec, Metric,
    ModelConfig, SchemeKind,
};
use cogsense::reconfig::{scheme_diversity, selection_gain, AntennaConfig, Scheme};
use cogsense::thresholds::{coop_bayes_design, drift_diversity, DriftScheme};
use cogsense::tradeoff::{
    equivalent_snr_gain_db, ergodic_capacity_conventional, ergodic_capacity_delayed, ergodic_capacity_selection,
    nats_to_bits, optimal_sensing_samples, FrameConfig, SensingScheme,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig9,
    Fig10,
    Fig11,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig7 => "fig7",
            FigureId::Fig9 => "fig9",
            FigureId::Fig10 => "fig10",
            FigureId::Fig11 => "fig11",
        }
    }
}

const MC: [(&str, &str); 3] = [("trials", "100000"), ("fast", "false"), ("exact", "false")];

/// Documented override keys and their defaults.
pub fn defaults(id: FigureId) -> Vec<(&'static str, &'static str)> {
    let mut v = vec![("seed", "1")];
    let grid = |lo: &'static str, hi: &'static str, step: &'static str| {
        vec![("snr_min", lo), ("snr_max", hi), ("snr_step", step)]
    };
    match id {
        FigureId::Fig2 => v.extend([("theta_max", "3")]),
        FigureId::Fig3 => {
            v.extend(MC);
            v.extend(grid("-20", "10", "1"));
            v.extend([("nm", "25,100"), ("alpha", "0.01"), ("vote_threshold", "1")]);
        }
        FigureId::Fig4 => {
            v.extend(MC);
            v.extend(grid("-10", "20", "2"));
            v.extend([("theta", "1")]);
        }
        FigureId::Fig5 => {
            v.extend(MC);
            v.extend(grid("-20", "20", "2"));
            v.extend([("alpha", "0.05")]);
        }
        FigureId::Fig6 | FigureId::Fig7 => {
            v.extend(MC);
            v.extend(grid("-10", "20", "2"));
            v.push(if id == FigureId::Fig6 { ("alpha", "0.05") } else { ("theta", "1") });
            v.extend([("switching_delays", "0,30,50,95,100"), ("selection_delays", "0,30,50,95")]);
        }
        FigureId::Fig9 => v.extend([("k", "10"), ("snr_db", "0"), ("target_pd", "0.9"), ("q_t", "2"), ("delays", "0,2,4")]),
        FigureId::Fig10 => {
            v.extend(grid("-10", "30", "1"));
            v.extend([("states", "1,2,4"), ("quantity", "ratio"), ("bits", "false")]);
        }
        FigureId::Fig11 => {
            v.extend(grid("-10", "30", "1"));
            v.extend([("q_t", "4"), ("q_r", "4"), ("fractions", "0,0.2,0.5"), ("transmit", "100")]);
        }
    }
    v
}

/// Resolved figure parameters, as strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params(pub BTreeMap<String, String>);

pub fn parse_set(s: &str) -> CliResult<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_owned(), v.trim().to_owned())),
        _ => Err(CliError::Validation(format!("override `{s}` is not of the form key=value"))),
    }
}

impl Params {
    pub fn resolve(id: FigureId, overrides: &[(String, String)]) -> CliResult<Params> {
        let defs = defaults(id);
        let mut map: BTreeMap<String, String> = defs.iter().map(|&(k, v)| (k.to_owned(), v.to_owned())).collect();
        for (k, v) in overrides {
            match map.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => {
                    let keys: Vec<&str> = defs.iter().map(|d| d.0).collect();
                    return Err(CliError::Validation(format!(
                        "unknown key `{k}` for {}; documented keys: {}",
                        id.name(),
                        keys.join(", ")
                    )));
                }
            }
        }
        Ok(Params(map))
    }

    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).expect("documented key")
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<T> {
        let s = self.raw(key);
        s.parse().map_err(|_| CliError::Validation(format!("{key} = `{s}` has the wrong type")))
    }

    fn list<T: FromStr>(&self, key: &str) -> CliResult<Vec<T>> {
        let s = self.raw(key);
        let v: Vec<T> = s
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| CliError::Validation(format!("{key}: bad entry `{x}`"))))
            .collect::<CliResult<_>>()?;
        if v.is_empty() {
            return Err(CliError::Validation(format!("{key} is empty")));
        }
        Ok(v)
    }

    fn grid(&self) -> CliResult<Vec<f64>> {
        let (lo, hi, step): (f64, f64, f64) = (self.get("snr_min")?, self.get("snr_max")?, self.get("snr_step")?);
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(CliError::Validation(format!("bad SNR grid {lo}..{hi} step {step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        if n > 10_000 {
            return Err(CliError::Validation("SNR grid has more than 10000 points".into()));
        }
        Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSpec {
    pub curve: String,
    pub spec: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub figure: FigureId,
    pub version: String,
    pub seed: u64,
    pub params: Params,
    #[serde(default)]
    pub specs: Vec<LabeledSpec>,
    #[serde(default)]
    pub annotations: Value,
}

pub struct PlotSpec {
    pub title: &'static str,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub log_y: bool,
    pub metric: Option<Metric>,
}

pub struct FigureRun {
    pub table: Table,
    pub meta: Meta,
    pub plot: PlotSpec,
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Monte Carlo curve collector shared by the probability figures.
struct Mc {
    grid: Vec<f64>,
    trials: u64,
    seed: u64,
    fast: bool,
    exact: bool,
    rows: Vec<CurveRow>,
    specs: Vec<LabeledSpec>,
}

impl Mc {
    fn new(p: &Params) -> CliResult<Mc> {
        Ok(Mc {
            grid: p.grid()?,
            trials: p.get("trials")?,
            seed: p.get("seed")?,
            fast: p.get("fast")?,
            exact: p.get("exact")?,
            rows: Vec::new(),
            specs: Vec::new(),
        })
    }

    fn spec(
        &self,
        scheme: SchemeKind,
        criterion: Criterion,
        m: u32,
        fusion: Option<FusionConfig>,
        antenna: Option<AntennaConfig>,
    ) -> ExperimentSpec {
        ExperimentSpec {
            scheme,
            criterion,
            model: ModelConfig { m, prior_h1: 0.5 },
            fusion,
            antenna,
            snr_grid_db: self.grid.clone(),
            trials: self.trials,
            seed: self.seed,
            fast: self.fast,
        }
    }

    fn add(&mut self, label: String, spec: ExperimentSpec) -> CliResult<CurveResult> {
        let sim = simulate_curve(&spec)?;
        self.rows.extend(curve_rows(Some(&label), &sim));
        if self.exact {
            let ex = analytic_curve(&spec)?;
            self.rows.extend(curve_rows(Some(&format!("{label}-exact")), &ex));
        }
        self.specs.push(LabeledSpec { curve: label, spec });
        Ok(sim)
    }
}

fn fusion(n_users: u32, vote_threshold: u32) -> CliResult<FusionConfig> {
    Ok(FusionConfig::new(n_users, vote_threshold)?)
}

fn antenna(q: u32, delay: u32) -> CliResult<AntennaConfig> {
    Ok(AntennaConfig::new(q, delay)?)
}

pub fn run_figure(id: FigureId, params: Params) -> CliResult<FigureRun> {
    let seed: u64 = params.get("seed")?;
    let (table, specs, annotations, plot) = match id {
        FigureId::Fig2 => fig2(&params)?,
        FigureId::Fig3 => fig3(&params)?,
        FigureId::Fig4 => fig4(&params)?,
        FigureId::Fig5 => fig5(&params)?,
        FigureId::Fig6 | FigureId::Fig7 => fig6_7(id, &params)?,
        FigureId::Fig9 => fig9(&params)?,
        FigureId::Fig10 => fig10(&params)?,
        FigureId::Fig11 => fig11(&params)?,
    };
    let meta = Meta {
        figure: id,
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seed,
        params,
        specs,
        annotations,
    };
    Ok(FigureRun { table, meta, plot })
}

type Built = (Table, Vec<LabeledSpec>, Value, PlotSpec);

fn prob_plot(title: &'static str, metric: Metric) -> PlotSpec {
    PlotSpec {
        title,
        x_label: "mean SNR (dB)",
        y_label: match metric {
            Metric::FalseAlarm => "false-alarm probability",
            Metric::MissedDetection => "missed-detection probability",
            Metric::Error => "error probability",
        },
        log_y: true,
        metric: Some(metric),
    }
}

fn fig2(p: &Params) -> CliResult<Built> {
    let tmax: f64 = p.get("theta_max")?;
    if !(tmax > 0.0 && tmax <= 100.0) {
        return Err(CliError::Validation(format!("theta_max = {tmax} must lie in (0, 100]")));
    }
    let n = (tmax * 20.0).floor() as u32;
    let mut rows = Vec::new();
    for i in 1..=n {
        let theta = f64::from(i) / 20.0;
        let d_e = drift_diversity(DriftScheme::NonCoop, theta, 1, None)?;
        for (curve, y) in [("d_F", theta), ("d_md", 1.0), ("d_e", d_e)] {
            rows.push(SeriesRow { curve: curve.into(), x: theta, y });
        }
    }
    let plot = PlotSpec {
        title: "diversity orders vs threshold drift",
        x_label: "drift factor",
        y_label: "diversity order",
        log_y: false,
        metric: None,
    };
    Ok((Table::Series(rows), vec![], json!({ "kink_theta": 1.0 }), plot))
}

fn fig3(p: &Params) -> CliResult<Built> {
    let mut mc = Mc::new(p)?;
    let alpha: f64 = p.get("alpha")?;
    let n: u32 = p.get("vote_threshold")?;
    let crit = Criterion::Np { alpha };
    let mut notes = serde_json::Map::new();
    for nm in p.list::<u32>("nm")? {
        let s = (f64::from(nm)).sqrt().round() as u32;
        if s * s != nm || s < 2 {
            return Err(CliError::Validation(format!("nm = {nm} must be a perfect square of at least 4")));
        }
        let nc = mc.spec(SchemeKind::NonCoop, crit, nm, None, None);
        let co = mc.spec(SchemeKind::Cooperative, crit, s, Some(fusion(s, n)?), None);
        let a = mc.add(format!("noncoop-nm{nm}"), nc.clone())?;
        let b = mc.add(format!("coop-nm{nm}"), co.clone())?;
        let sim = crossover_snr(&a, &b, Metric::MissedDetection)?;
        let exact = crossover_snr(&analytic_curve(&nc)?, &analytic_curve(&co)?, Metric::MissedDetection)?;
        notes.insert(format!("nm{nm}"), json!({ "crossover_db_simulated": sim, "crossover_db_exact": exact }));
    }
    let plot = prob_plot("cooperative vs single-user sensing, same total samples", Metric::MissedDetection);
    Ok((Table::Curves(mc.rows), mc.specs, Value::Object(notes), plot))
}

fn fig4(p: &Params) -> CliResult<Built> {
    let mut mc = Mc::new(p)?;
    let theta: f64 = p.get("theta")?;
    let bayes = |t: f64| Criterion::Bayes { theta: t };
    let unknown = coop_bayes_design(15, false)?;
    let known = coop_bayes_design(15, true)?;
    let sw = mc.spec(SchemeKind::Switching, bayes(theta), 30, None, Some(antenna(15, 0)?));
    let se = mc.spec(SchemeKind::Selection, bayes(theta), 30, None, Some(antenna(15, 0)?));
    let jobs = [
        ("noncoop", mc.spec(SchemeKind::NonCoop, bayes(theta), 30, None, None)),
        (
            "coop-unknown-n",
            mc.spec(
                SchemeKind::Cooperative,
                bayes(theta * f64::from(unknown.theta)),
                2,
                Some(fusion(15, unknown.vote_threshold)?),
                None,
            ),
        ),
        (
            "coop-known-n",
            mc.spec(
                SchemeKind::Cooperative,
                bayes(theta * f64::from(known.theta)),
                2,
                Some(fusion(15, known.vote_threshold)?),
                None,
            ),
        ),
        ("switching", sw.clone()),
        ("selection", se.clone()),
    ];
    for (label, spec) in jobs {
        mc.add(label.into(), spec)?;
    }
    let (a, b) = (analytic_curve(&sw)?, analytic_curve(&se)?);
    let shift = match (snr_at_level(&a, Metric::Error, 1e-3), snr_at_level(&b, Metric::Error, 1e-3)) {
        (Some(x), Some(y)) => Some(x - y),
        _ => None,
    };
    let notes = json!({
        "selection_shift_db_at_pe_1e-3_exact": shift,
        "coop_unknown_n": { "vote_threshold": unknown.vote_threshold, "diversity": unknown.diversity },
        "coop_known_n": { "vote_threshold": known.vote_threshold, "diversity": known.diversity },
    });
    let plot = prob_plot("Bayes sensing with 30 samples", Metric::Error);
    Ok((Table::Curves(mc.rows), mc.specs, notes, plot))
}

fn fig5(p: &Params) -> CliResult<Built> {
    let mut mc = Mc::new(p)?;
    let crit = Criterion::Np { alpha: p.get("alpha")? };
    let jobs = [
        ("noncoop", mc.spec(SchemeKind::NonCoop, crit, 100, None, None)),
        ("coop", mc.spec(SchemeKind::Cooperative, crit, 10, Some(fusion(10, 1)?), None)),
        ("switching", mc.spec(SchemeKind::Switching, crit, 100, None, Some(antenna(10, 0)?))),
        ("selection", mc.spec(SchemeKind::Selection, crit, 100, None, Some(antenna(10, 0)?))),
    ];
    for (label, spec) in jobs {
        mc.add(label.into(), spec)?;
    }
    let g = selection_gain(10, 100, 0)?;
    let plot = prob_plot("Neyman-Pearson sensing with 100 samples", Metric::MissedDetection);
    Ok((Table::Curves(mc.rows), mc.specs, json!({ "selection_gain_db": g.db }), plot))
}

fn fig6_7(id: FigureId, p: &Params) -> CliResult<Built> {
    let mut mc = Mc::new(p)?;
    let (crit, metric, title) = if id == FigureId::Fig6 {
        (Criterion::Np { alpha: p.get("alpha")? }, Metric::MissedDetection, "switching delay, Neyman-Pearson")
    } else {
        (Criterion::Bayes { theta: p.get("theta")? }, Metric::Error, "switching delay, Bayes")
    };
    let mut notes = serde_json::Map::new();
    for d in p.list::<u32>("switching_delays")? {
        let spec = mc.spec(SchemeKind::Switching, crit, 100, None, Some(antenna(10, d)?));
        mc.add(format!("switching-d{d}"), spec)?;
        notes.insert(format!("switching-d{d}"), json!({ "diversity": scheme_diversity(Scheme::Switching, 100, 10, d)? }));
    }
    for d in p.list::<u32>("selection_delays")? {
        let spec = mc.spec(SchemeKind::Selection, crit, 100, None, Some(antenna(10, d)?));
        mc.add(format!("selection-d{d}"), spec)?;
        notes.insert(
            format!("selection-d{d}"),
            json!({
                "diversity": scheme_diversity(Scheme::Selection, 100, 10, d)?,
                "selection_gain_db": selection_gain(10, 100, d)?.db,
            }),
        );
    }
    Ok((Table::Curves(mc.rows), mc.specs, Value::Object(notes), prob_plot(title, metric)))
}

fn fig9(p: &Params) -> CliResult<Built> {
    let cfg = FrameConfig {
        k: p.get("k")?,
        m: 1,
        d: 0,
        q_t: p.get("q_t")?,
        q_r: 1,
        sensing_mean_snr: db(p.get("snr_db")?),
        link_mean_snr: 1.0,
        prior_h0: 0.5,
        target_pd: p.get("target_pd")?,
    };
    let mut rows = Vec::new();
    let mut notes = serde_json::Map::new();
    let mut push = |label: String, opt: cogsense::tradeoff::SensingOptimum| {
        for &(m, r) in &opt.curve {
            rows.push(SeriesRow { curve: label.clone(), x: f64::from(m), y: r });
        }
        notes.insert(label, json!({ "m_star": opt.m_star, "r_star": opt.r_star, "unimodal": opt.unimodal }));
    };
    push("conventional".into(), optimal_sensing_samples(&cfg, SensingScheme::Conventional)?);
    for d in p.list::<u32>("delays")? {
        let c = FrameConfig { d, ..cfg };
        push(format!("selection-d{d}"), optimal_sensing_samples(&c, SensingScheme::Selection)?);
    }
    let plot = PlotSpec {
        title: "sensing-throughput trade-off",
        x_label: "sensing samples M",
        y_label: "normalized throughput",
        log_y: false,
        metric: None,
    };
    Ok((Table::Series(rows), vec![], Value::Object(notes), plot))
}

fn fig10(p: &Params) -> CliResult<Built> {
    let grid = p.grid()?;
    let quantity = p.raw("quantity");
    let bits: bool = p.get("bits")?;
    let ratio = match quantity {
        "ratio" => true,
        "capacity" => false,
        other => return Err(CliError::Validation(format!("quantity = `{other}` must be ratio or capacity"))),
    };
    let mut rows = Vec::new();
    let mut notes = serde_json::Map::new();
    for n in p.list::<u32>("states")? {
        for &x in &grid {
            let s = db(x);
            let c = ergodic_capacity_selection(n, 1, s)?;
            let y = if ratio {
                c / ergodic_capacity_conventional(s)?
            } else if bits {
                nats_to_bits(c)
            } else {
                c
            };
            rows.push(SeriesRow { curve: format!("states-{n}"), x, y });
        }
        let ten = db(10.0);
        notes.insert(
            format!("states-{n}"),
            json!({
                "ratio_at_10db": ergodic_capacity_selection(n, 1, ten)? / ergodic_capacity_conventional(ten)?,
                "equivalent_snr_gain_db_at_10db": equivalent_snr_gain_db(n, ten)?,
            }),
        );
    }
    let plot = PlotSpec {
        title: "ergodic capacity with state selection",
        x_label: "link mean SNR (dB)",
        y_label: if ratio {
            "capacity ratio"
        } else if bits {
            "capacity (bits/use)"
        } else {
            "capacity (nats/use)"
        },
        log_y: false,
        metric: None,
    };
    Ok((Table::Series(rows), vec![], Value::Object(notes), plot))
}

fn fig11(p: &Params) -> CliResult<Built> {
    let grid = p.grid()?;
    let (q_t, q_r, transmit): (u32, u32, u32) = (p.get("q_t")?, p.get("q_r")?, p.get("transmit")?);
    if transmit == 0 {
        return Err(CliError::Validation("transmit must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut notes = serde_json::Map::new();
    for f in p.list::<f64>("fractions")? {
        if !(0.0..=1.0).contains(&f) {
            return Err(CliError::Validation(format!("delay fraction {f} outside [0, 1]")));
        }
        let d = (f * f64::from(transmit)).round() as u32;
        let (k, m) = (transmit + 1, 1);
        let ratio = |s: f64| -> CliResult<f64> {
            Ok(ergodic_capacity_delayed(q_t, q_r, s, k, m, d)? / ergodic_capacity_conventional(s)?)
        };
        for &x in &grid {
            rows.push(SeriesRow { curve: format!("fraction-{f}"), x, y: ratio(db(x))? });
        }
        notes.insert(format!("fraction-{f}"), json!({ "delay_samples": d, "ratio_at_10db": ratio(db(10.0))? }));
    }
    let plot = PlotSpec {
        title: "capacity ratio with selection delay",
        x_label: "link mean SNR (dB)",
        y_label: "capacity ratio",
        log_y: false,
        metric: None,
    };
    Ok((Table::Series(rows), vec![], Value::Object(notes), plot))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_override_is_rejected() {
        let e = Params::resolve(FigureId::Fig3, &[("colour".into(), "red".into())]).unwrap_err();
        assert!(e.to_string().contains("colour"));
        assert!(parse_set("novalue").is_err());
        assert_eq!(parse_set("nm=25,100").unwrap(), ("nm".into(), "25,100".into()));
    }

    #[test]
    fn every_figure_has_a_seed_key() {
        for id in FigureId::value_variants() {
            assert!(defaults(*id).iter().any(|d| d.0 == "seed"));
        }
    }

    #[test]
    fn grid_from_overrides() {
        let p = Params::resolve(
            FigureId::Fig5,
            &[("snr_min".into(), "-1".into()), ("snr_max".into(), "0.5".into()), ("snr_step".into(), "0.5".into())],
        )
        .unwrap();
        assert_eq!(p.grid().unwrap(), vec![-1.0, -0.5, 0.0, 0.5]);
    }

    #[test]
    fn fig2_has_kink_at_one() {
        let run = run_figure(FigureId::Fig2, Params::resolve(FigureId::Fig2, &[]).unwrap()).unwrap();
        let Table::Series(rows) = run.table else { panic!("series expected") };
        let de = |t: f64| rows.iter().find(|r| r.curve == "d_e" && (r.x - t).abs() < 1e-12).unwrap().y;
        assert_eq!(de(0.5), 0.5);
        assert_eq!(de(1.0), 1.0);
        assert_eq!(de(2.0), 1.0);
    }

    #[test]
    fn fig10_four_states_at_ten_db() {
        let run = run_figure(FigureId::Fig10, Params::resolve(FigureId::Fig10, &[]).unwrap()).unwrap();
        let r = run.meta.annotations["states-4"]["ratio_at_10db"].as_f64().unwrap();
        let oracle = ergodic_capacity_selection(4, 1, 10.0).unwrap() / ergodic_capacity_conventional(10.0).unwrap();
        assert!((r - oracle).abs() < 1e-12);
        let one = run.meta.annotations["states-1"]["ratio_at_10db"].as_f64().unwrap();
        assert!((one - 1.0).abs() < 1e-12);
    }
}
