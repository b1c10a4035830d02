use cogsense::montecarlo::{simulate_curve, ExperimentSpec};
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cogsense");

const CONFIG: &str = r#"{
  "scheme": "non_coop",
  "criterion": { "np": { "alpha": 0.05 } },
  "model": { "m": 10 },
  "grid": [0, 5, 10, 15],
  "trials": 20000,
  "seed": 7
}"#;

fn cogsense(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_header_and_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.json", CONFIG);
    let out = dir.path().join("a.csv");
    let o = cogsense(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,p_fa,p_md,p_err,ci");
    assert_eq!(lines.len(), 5);
}

#[test]
fn run_twice_is_byte_identical_across_thread_caps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.json", CONFIG);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(cogsense(&["run", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let o = Command::new(BIN)
        .args(["run", &cfg, "--out", b.to_str().unwrap()])
        .env("COGSENSE_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn csv_matches_library_to_six_digits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.json", CONFIG);
    let out = dir.path().join("a.csv");
    assert!(cogsense(&["run", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let spec: ExperimentSpec = serde_json::from_str(CONFIG).unwrap();
    let curve = simulate_curve(&spec).unwrap();
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let six = |x: f64| format!("{x:.5e}").parse::<f64>().unwrap();
    for (rec, p) in rdr.records().zip(&curve.points) {
        let rec = rec.unwrap();
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        assert_eq!(f(0), p.snr_db);
        assert_eq!(f(1), six(p.p_fa_hat));
        match p.p_md_hat {
            Some(v) => assert_eq!(f(2), six(v)),
            None => assert!(rec[2].is_empty()),
        }
        assert_eq!(f(3), six(p.p_err_hat));
        assert_eq!(f(4), six(p.ci_halfwidth));
    }
}

#[test]
fn zero_trials_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.json", &CONFIG.replace("20000", "0"));
    let o = cogsense(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
}

#[test]
fn unknown_config_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.json", &CONFIG.replace("\"seed\": 7", "\"seed\": 7,\n  \"colour\": 1"));
    let o = cogsense(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour") && err.contains("line 8"), "{err}");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cogsense(&["run", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn figure_meta_has_seed_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let sets = ["--set", "trials=3000", "--set", "seed=11", "--set", "nm=25", "--set", "snr_min=-8", "--set", "snr_max=0"];
    let mut args = vec!["figure", "fig3", "--out", d, "--svg"];
    args.extend(sets);
    let o = cogsense(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig3.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["figure"], "fig3");
    assert!(meta["annotations"]["nm25"]["crossover_db_exact"].is_number());

    let again = dir.path().join("again");
    let meta_path = dir.path().join("fig3.meta.json");
    let o = cogsense(&["figure", "--from-meta", meta_path.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.path().join("fig3.csv")).unwrap(), std::fs::read(again.join("fig3.csv")).unwrap());

    let csv = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert!(csv.starts_with("curve,snr_db,p_fa,p_md,p_err,ci\n"));
    let svg = std::fs::read_to_string(dir.path().join("fig3.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(">1e0<"));
}

#[test]
fn figure_rejects_undocumented_override() {
    let o = cogsense(&["figure", "fig10", "--set", "colour=red", "--out", "/tmp"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_probability_and_series_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let prob = write(dir.path(), "p.csv", "snr_db,p_fa,p_md,p_err,ci\n0,1.0e-2,5.0e-1,2.5e-1,1.0e-3\n10,1.0e-2,1.0e-4,5.0e-3,1.0e-5\n");
    let o = cogsense(&["plot", &prob]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(dir.path().join("p.svg")).unwrap();
    for decade in ["1e-4", "1e-3", "1e-2", "1e-1", "1e0"] {
        assert!(svg.contains(&format!(">{decade}<")), "{decade}");
    }

    let cap = write(dir.path(), "c.csv", "curve,x,y\nstates-4,0,1.2e0\nstates-4,10,1.46e0\n");
    assert!(cogsense(&["plot", &cap]).status.success());
    let svg = std::fs::read_to_string(dir.path().join("c.svg")).unwrap();
    assert!(!svg.contains(">1e"));

    let empty = write(dir.path(), "e.csv", "snr_db,p_fa,p_md,p_err,ci\n");
    assert_eq!(cogsense(&["plot", &empty]).status.code(), Some(2));
}
