mod error;
mod figures;
mod svg;
mod table;

use clap::{Parser, Subcommand, ValueEnum};
use cogsense::montecarlo::{simulate_curve, ExperimentSpec, Metric};
use error::{CliError, CliResult};
use figures::{parse_set, run_figure, FigureId, Meta, Params};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use table::{curve_rows, Table};

/// Spectrum sensing analysis and simulation.
///
/// Set COGSENSE_THREADS to cap the number of simulation threads.
#[derive(Parser)]
#[command(name = "cogsense", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Regenerate the data behind one figure.
    Figure {
        #[arg(required_unless_present = "from_meta")]
        id: Option<FigureId>,
        /// Override a documented parameter; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write an SVG plot.
        #[arg(long)]
        svg: bool,
        /// Rerun the job recorded in a meta.json file.
        #[arg(long, conflicts_with_all = ["id", "set"])]
        from_meta: Option<PathBuf>,
    },
    /// Simulate one experiment config and write its curve as CSV.
    Run {
        config: PathBuf,
        /// Defaults to the config path with a .csv extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a CSV written by this tool as SVG.
    Plot {
        csv: PathBuf,
        /// Log y-axis for series data; probability curves always use one.
        #[arg(long)]
        log_y: bool,
        /// Column plotted from a probability CSV.
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        /// Defaults to the CSV path with a .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    PFa,
    PMd,
    PErr,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn figure(id: FigureId, params: Params, out: &Path, svg: bool) -> CliResult<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let run = run_figure(id, params)?;
    let name = id.name();
    let csv_path = out.join(format!("{name}.csv"));
    write(&csv_path, &run.table.to_bytes()?)?;
    println!("{}", csv_path.display());
    let meta_path = out.join(format!("{name}.meta.json"));
    let meta = serde_json::to_vec_pretty(&run.meta).expect("meta serializes");
    write(&meta_path, &meta)?;
    println!("{}", meta_path.display());
    if svg {
        let metric = run.plot.metric.unwrap_or(Metric::MissedDetection);
        let plot = plot_from_table(&run.table, metric, run.plot.log_y, run.plot.title, run.plot.x_label, run.plot.y_label)?;
        let svg_path = out.join(format!("{name}.svg"));
        write(&svg_path, svg::render(&plot)?.as_bytes())?;
        println!("{}", svg_path.display());
    }
    Ok(())
}

fn plot_from_table(
    table: &Table,
    metric: Metric,
    log_y: bool,
    title: &str,
    x_label: &str,
    y_label: &str,
) -> CliResult<svg::Plot> {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut push = |label: &str, x: f64, y: Option<f64>| {
        if !groups.contains_key(label) {
            order.push(label.to_owned());
        }
        let g = groups.entry(label.to_owned()).or_default();
        if let Some(y) = y {
            g.push((x, y));
        }
    };
    let log_y = match table {
        Table::Curves(rows) => {
            for r in rows {
                let y = match metric {
                    Metric::FalseAlarm => Some(r.p_fa),
                    Metric::MissedDetection => r.p_md,
                    Metric::Error => Some(r.p_err),
                };
                push(r.curve.as_deref().unwrap_or("curve"), r.snr_db, y);
            }
            true
        }
        Table::Series(rows) => {
            for r in rows {
                push(&r.curve, r.x, Some(r.y));
            }
            log_y
        }
    };
    let series = order
        .into_iter()
        .map(|label| svg::Series { points: groups.remove(&label).unwrap_or_default(), label })
        .collect();
    Ok(svg::Plot { title: title.to_owned(), x_label: x_label.to_owned(), y_label: y_label.to_owned(), log_y, series })
}

fn run_config(config: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let text = read(config)?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", config.display())))?;
    spec.validate()?;
    let curve = simulate_curve(&spec)?;
    let out = out.unwrap_or_else(|| config.with_extension("csv"));
    write(&out, &Table::Curves(curve_rows(None, &curve)).to_bytes()?)?;
    println!("{}", out.display());
    Ok(())
}

fn plot_csv(csv: &Path, log_y: bool, metric: Option<MetricArg>, out: Option<PathBuf>) -> CliResult<()> {
    let file = std::fs::File::open(csv).map_err(|e| CliError::io(csv, e))?;
    let table = Table::read(file)?;
    let metric = match metric {
        Some(MetricArg::PFa) => Metric::FalseAlarm,
        Some(MetricArg::PMd) => Metric::MissedDetection,
        Some(MetricArg::PErr) => Metric::Error,
        None => match &table {
            Table::Curves(rows) if rows.iter().all(|r| r.p_md.is_none()) => Metric::Error,
            _ => Metric::MissedDetection,
        },
    };
    let (x_label, y_label) = match (&table, metric) {
        (Table::Series(_), _) => ("x", "y"),
        (_, Metric::FalseAlarm) => ("mean SNR (dB)", "p_fa"),
        (_, Metric::MissedDetection) => ("mean SNR (dB)", "p_md"),
        (_, Metric::Error) => ("mean SNR (dB)", "p_err"),
    };
    let title = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot").to_owned();
    let plot = plot_from_table(&table, metric, log_y, &title, x_label, y_label)?;
    let out = out.unwrap_or_else(|| csv.with_extension("svg"));
    write(&out, svg::render(&plot)?.as_bytes())?;
    println!("{}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Figure { id, set, out, svg, from_meta } => {
            let (id, params) = match from_meta {
                Some(path) => {
                    let meta: Meta = serde_json::from_str(&read(&path)?)
                        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                    let overrides: Vec<(String, String)> = meta.params.0.into_iter().collect();
                    (meta.figure, Params::resolve(meta.figure, &overrides)?)
                }
                None => {
                    let id = id.expect("clap enforces id");
                    let overrides = set.iter().map(|s| parse_set(s)).collect::<CliResult<Vec<_>>>()?;
                    (id, Params::resolve(id, &overrides)?)
                }
            };
            figure(id, params, &out, svg)
        }
        Cmd::Run { config, out } => run_config(&config, out),
        Cmd::Plot { csv, log_y, metric, out } => plot_csv(&csv, log_y, metric, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
