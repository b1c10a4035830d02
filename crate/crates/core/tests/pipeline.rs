use cogsense::fusion::FusionConfig;
use cogsense::montecarlo::{
    analytic_curve, simulate_curve, Criterion, ExperimentSpec, Metric, ModelConfig, SchemeKind,
};
use cogsense::reconfig::AntennaConfig;
use cogsense::tradeoff::{optimal_sensing_samples, threshold_for_detection, FrameConfig, SensingScheme};
use proptest::prelude::*;

fn spec(scheme: SchemeKind, m: u32, trials: u64, fast: bool) -> ExperimentSpec {
    ExperimentSpec {
        scheme,
        criterion: Criterion::Np { alpha: 0.05 },
        model: ModelConfig { m, prior_h1: 0.5 },
        fusion: None,
        antenna: None,
        snr_grid_db: vec![-5.0, 0.0, 5.0],
        trials,
        seed: 3,
        fast,
    }
}

fn assert_close(sim: f64, exact: f64, n: u64, what: &str) {
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((sim - exact).abs() <= 4.0 * sigma + 1e-12, "{what}: {sim} vs {exact} (σ {sigma})");
}

#[test]
fn literal_simulation_matches_analytic_noncoop() {
    let s = spec(SchemeKind::NonCoop, 8, 200_000, false);
    let (sim, ex) = (simulate_curve(&s).unwrap(), analytic_curve(&s).unwrap());
    for (a, b) in sim.points.iter().zip(&ex.points) {
        assert_close(a.p_fa_hat, b.p_fa_hat, s.trials, "p_fa");
        assert_close(a.p_md_hat.unwrap(), b.p_md_hat.unwrap(), s.trials, "p_md");
    }
}

#[test]
fn cooperative_threshold_meets_global_false_alarm() {
    let s = ExperimentSpec {
        fusion: Some(FusionConfig::new(6, 3).unwrap()),
        ..spec(SchemeKind::Cooperative, 4, 300_000, true)
    };
    for p in simulate_curve(&s).unwrap().points {
        assert_close(p.p_fa_hat, 0.05, s.trials, "global p_fa");
    }
}

#[test]
fn selection_beats_switching_pointwise() {
    let base = ExperimentSpec {
        antenna: Some(AntennaConfig::new(4, 0).unwrap()),
        snr_grid_db: vec![-5.0, 0.0, 5.0, 10.0],
        ..spec(SchemeKind::Switching, 20, 1_000_000, true)
    };
    let sw = simulate_curve(&base).unwrap();
    let se = simulate_curve(&ExperimentSpec { scheme: SchemeKind::Selection, ..base.clone() }).unwrap();
    for (a, b) in sw.points.iter().zip(&se.points) {
        let (x, y) = (a.p_md_hat.unwrap(), b.p_md_hat.unwrap());
        let slack = 3.0 * ((x * (1.0 - x) + y * (1.0 - y)) / 1e6).sqrt();
        assert!(y <= x + slack, "{} dB: selection {y} vs switching {x}", a.snr_db);
    }
}

#[test]
fn config_json_round_trips_and_rejects_unknown_keys() {
    let s = ExperimentSpec { antenna: Some(AntennaConfig::new(10, 30).unwrap()), ..spec(SchemeKind::Selection, 100, 10, true) };
    let text = serde_json::to_string(&s).unwrap();
    assert!(text.contains("\"grid\""));
    assert_eq!(serde_json::from_str::<ExperimentSpec>(&text).unwrap(), s);
    let bad = text.replacen('{', "{\"extra\":1,", 1);
    assert!(serde_json::from_str::<ExperimentSpec>(&bad).is_err());
    let bayes: Criterion = serde_json::from_str(r#"{"bayes":{}}"#).unwrap();
    assert_eq!(bayes, Criterion::Bayes { theta: 1.0 });
}

#[test]
fn selection_raises_threshold_and_lowers_false_alarm() {
    let cfg = FrameConfig {
        k: 10,
        m: 1,
        d: 0,
        q_t: 2,
        q_r: 1,
        sensing_mean_snr: 1.0,
        link_mean_snr: 1.0,
        prior_h0: 0.5,
        target_pd: 0.9,
    };
    let c = optimal_sensing_samples(&cfg, SensingScheme::Conventional).unwrap();
    let s = optimal_sensing_samples(&cfg, SensingScheme::Selection).unwrap();
    assert!(s.p_fa < c.p_fa);
    for m in 1..10 {
        let lc = threshold_for_detection(SensingScheme::Conventional, &cfg, m).unwrap();
        let ls = threshold_for_detection(SensingScheme::Selection, &cfg, m).unwrap();
        assert!(ls > lc, "M={m}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_md_falls_with_snr(m in 1u32..60, alpha in 0.01f64..0.3, lo in -15.0f64..20.0) {
        let s = ExperimentSpec {
            criterion: Criterion::Np { alpha },
            snr_grid_db: vec![lo, lo + 3.0, lo + 6.0],
            ..spec(SchemeKind::NonCoop, m, 1, true)
        };
        let md: Vec<f64> = analytic_curve(&s).unwrap().values(Metric::MissedDetection).into_iter().map(Option::unwrap).collect();
        prop_assert!(md[0] >= md[1] && md[1] >= md[2]);
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>(), m in 1u32..20) {
        let s = ExperimentSpec { seed, ..spec(SchemeKind::NonCoop, m, 2_000, false) };
        prop_assert_eq!(simulate_curve(&s).unwrap(), simulate_curve(&s).unwrap());
    }
}
