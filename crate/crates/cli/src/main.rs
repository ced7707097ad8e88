//! `fittsbench`: run simulated ring-task trials, fit movement-time models,
//! and serve live sessions.
//!
//! Configuration precedence is flags, then `FITTSBENCH_*` environment
//! variables, then the `--config` file, then built-in defaults.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 I/O, 5 bad or
//! incompatible data, 6 analysis (e.g. a rank-deficient design).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fittsbench::analysis::{fit_report, observations_from_logs, plot_data_csv, summarize, FitReport, MtObservation, SummaryTable};
use fittsbench::config::{parse_gamma_list, BenchConfig};
use fittsbench::engine::{compute_metrics, run_trial, HumanSource, TrialLog};
use fittsbench::experiment::{check_design, check_operator, derive_seed, simulate_cell, sweep_cells};
use fittsbench::geometry::{latin_square, Condition};
use fittsbench::logfile::{read_log_file, write_log_file};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fittsbench", version, about = "Shared-control ring-task benchmark")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides FITTSBENCH_SEED and the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated trials of one condition and write their logs.
    Simulate {
        #[arg(long)]
        ring: u32,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value = "expert")]
        operator: String,
        #[arg(long, default_value_t = 1)]
        repeats: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every condition, then fit and summarize the results.
    Sweep {
        #[arg(long, default_value = "synced")]
        operator: String,
        #[arg(long, default_value_t = 5)]
        repeats: u32,
        /// Comma-separated autonomy levels, replacing the configured ones.
        #[arg(long)]
        gammas: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit Fitts' law and the adapted model to trial logs.
    Fit {
        /// Log files or directories searched recursively for *.jsonl.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisFlags,
        /// Also write fit_report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the fit report, summary tables and plot data for trial logs.
    Report {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisFlags,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Serve live sessions over HTTP and websocket.
    Serve {
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Disclose the autonomy level to clients.
        #[arg(long)]
        show_gamma: bool,
    },
    /// Print the counterbalanced condition order of the first sessions.
    Schedule {
        #[arg(long, default_value_t = 12)]
        sessions: usize,
    },
}

#[derive(Args)]
struct AnalysisFlags {
    /// Keep the first reach of each trial.
    #[arg(long)]
    include_first_reach: bool,
    /// Regress on per-trial mean movement times.
    #[arg(long)]
    aggregate_per_trial: bool,
}

enum Failure {
    Usage(String),
    Config(String),
    Io(String),
    Data(String),
    Analysis(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Config(_) => 3,
            Failure::Io(_) => 4,
            Failure::Data(_) => 5,
            Failure::Analysis(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Config(m) | Failure::Io(m) | Failure::Data(m) | Failure::Analysis(m) => m,
        }
    }
}

impl From<fittsbench::Error> for Failure {
    fn from(e: fittsbench::Error) -> Self {
        use fittsbench::Error as E;
        let m = e.to_string();
        match e {
            E::Domain(_) => Failure::Usage(m),
            E::Config(_) => Failure::Config(m),
            E::RankDeficient { .. } | E::InsufficientData(_) => Failure::Analysis(m),
            E::LogFormat(_) | E::SchemaVersion { .. } | E::Json(_) => Failure::Data(m),
            E::Io(_) => Failure::Io(m),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn load_config(g: &Global) -> Outcome<BenchConfig> {
    let mut cfg = match &g.config {
        Some(p) => BenchConfig::load(p).map_err(as_config)?,
        None => BenchConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok()).map_err(as_config)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn as_config(e: fittsbench::Error) -> Failure {
    match e {
        fittsbench::Error::Io(_) => Failure::from(e),
        e => Failure::Config(e.to_string()),
    }
}

/// Creates `dir` and proves it writable before any work starts.
fn prepare_out_dir(dir: &Path) -> Outcome<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(".fittsbench-write-test");
    fs::write(&probe, b"").map_err(io_err(dir))?;
    fs::remove_file(&probe).map_err(io_err(dir))
}

fn write_file(path: &Path, contents: &[u8]) -> Outcome<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn gamma_tag(g: f64) -> String {
    format!("{g:.2}").replace('.', "p")
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Serialize)]
struct TrialLine<'a> {
    file: String,
    ring_id: u32,
    gamma: f64,
    repeat: u32,
    seed: u64,
    status: &'a str,
    movement_times_s: &'a [f64],
    mean_mt_s: Option<f64>,
    mean_human_speed_mps: f64,
}

fn trial_line<'a>(file: String, log: &'a TrialLog, repeat: u32, exclude_first: bool) -> Outcome<TrialLine<'a>> {
    let metrics = compute_metrics(log, exclude_first)?;
    let analysed: Vec<f64> = metrics.analysis_times().collect();
    Ok(TrialLine {
        file,
        ring_id: log.config.ring.ring_id,
        gamma: log.config.condition.gamma,
        repeat,
        seed: log.config.seed,
        status: if log.is_complete() { "complete" } else { "aborted" },
        movement_times_s: &log.movement_times_s,
        mean_mt_s: mean(&analysed),
        mean_human_speed_mps: metrics.mean_human_speed_mps,
    })
}

fn print_trial_line(line: &TrialLine, json: bool) {
    if json {
        println!("{}", serde_json::to_string(line).expect("line serializes"));
    } else {
        let mt = line.mean_mt_s.map_or("n/a".to_string(), |m| format!("{m:.3} s"));
        println!(
            "ring {} gamma {:.2} repeat {}: {}, {} reaches, mean MT {mt} -> {}",
            line.ring_id,
            line.gamma,
            line.repeat,
            line.status,
            line.movement_times_s.len(),
            line.file
        );
    }
}

fn simulate(cfg: &BenchConfig, ring: u32, gamma: f64, operator: &str, repeats: u32, out: &Path, json: bool) -> Outcome<()> {
    if cfg.ring(ring).is_err() {
        let valid: Vec<String> = cfg.ring_ids().iter().map(u32::to_string).collect();
        return Err(Failure::Usage(format!("--ring {ring} is not configured; valid rings: {}", valid.join(", "))));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Failure::Usage(format!("--gamma {gamma} is outside the valid range [0, 1]")));
    }
    if repeats == 0 {
        return Err(Failure::Usage("--repeats must be at least 1".into()));
    }
    let params = cfg.operator(operator).map_err(|e| Failure::Usage(e.to_string()))?;
    check_operator(cfg, &params)?;
    prepare_out_dir(out)?;
    let condition = Condition::new(ring, gamma)?;
    for repeat in 0..repeats {
        let seed = derive_seed(cfg.seed ^ gamma.to_bits(), ring, 0, repeat);
        let tc = cfg.trial_config(condition, HumanSource::Simulated { params: params.clone() }, seed)?;
        let log = run_trial(&tc)?;
        let file = out.join(format!("ring{ring}_g{}_rep{repeat:03}.jsonl", gamma_tag(gamma)));
        write_log_file(&file, &log)?;
        print_trial_line(&trial_line(file.display().to_string(), &log, repeat, cfg.analysis.exclude_first_reach)?, json);
    }
    Ok(())
}

fn observations_csv(obs: &[MtObservation]) -> Outcome<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for o in obs {
        w.serialize(o).map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Failure::Io(e.to_string()))?).expect("csv is utf-8"))
}

/// Writes the fit report, summary tables and plot data; returns the report.
fn write_analysis(cfg: &BenchConfig, logs: &[TrialLog], out: &Path) -> Outcome<(FitReport, SummaryTable)> {
    let (exclude, aggregate) = (cfg.analysis.exclude_first_reach, cfg.analysis.aggregate_per_trial);
    let obs = observations_from_logs(logs, exclude, aggregate)?;
    let report = fit_report(&obs, exclude, aggregate)?;
    let summary = summarize(logs, exclude)?;
    write_file(&out.join("observations.csv"), observations_csv(&obs)?.as_bytes())?;
    write_file(&out.join("fit_report.json"), to_json(&report).as_bytes())?;
    write_file(&out.join("summary.csv"), summary.to_csv()?.as_bytes())?;
    write_file(&out.join("summary.json"), to_json(&summary).as_bytes())?;
    write_file(&out.join("plot_data.csv"), plot_data_csv(&summary, &report)?.as_bytes())?;
    Ok((report, summary))
}

/// `" + 0.1234 ID"` or `" - 0.1234 ID"`.
fn term(c: f64, name: &str) -> String {
    let sign = if c < 0.0 { '-' } else { '+' };
    format!(" {sign} {:.4}{name}", c.abs())
}

fn print_report(report: &FitReport, summary: Option<&SummaryTable>, json: bool) {
    if json {
        println!("{}", to_json(report));
        return;
    }
    println!("observations: {}", report.n_observations);
    if let Some(f) = &report.fitts_pooled {
        println!("fitts (pooled): MT = {:.4}{}, r2 = {:.4}", f.a, term(f.b, " ID"), f.r2);
    }
    for g in &report.fitts_by_gamma {
        match (&g.fit, &g.error) {
            (Some(f), _) => {
                println!("fitts (gamma {:.2}): MT = {:.4}{}, r2 = {:.4}, n = {}", g.gamma, f.a, term(f.b, " ID"), f.r2, f.n)
            }
            (None, Some(e)) => println!("fitts (gamma {:.2}): not fitted: {e}", g.gamma),
            (None, None) => {}
        }
    }
    match (&report.adapted, &report.adapted_error) {
        (Some(f), _) => println!(
            "adapted: MT = {:.4}{}{}{}, r2 = {:.4}, n = {}",
            f.a,
            term(f.b1, " ID"),
            term(f.b2, " gamma"),
            term(f.b3, " gamma*ID"),
            f.r2,
            f.n
        ),
        (None, Some(e)) => println!("adapted: not fitted: {e}"),
        (None, None) => {}
    }
    if let Some(s) = summary {
        for w in &s.warnings {
            println!("warning: {w}");
        }
    }
}

fn sweep(cfg: &BenchConfig, operator: &str, repeats: u32, out: &Path, json: bool) -> Outcome<()> {
    let params = cfg.operator(operator).map_err(|e| Failure::Usage(e.to_string()))?;
    if repeats == 0 {
        return Err(Failure::Usage("--repeats must be at least 1".into()));
    }
    let design = check_design(cfg)?;
    check_operator(cfg, &params)?;
    let log_dir = out.join("logs");
    prepare_out_dir(&log_dir)?;
    if let Some(refusal) = &design.adapted_refusal {
        eprintln!("note: adapted model will not be fitted: {refusal}");
    }
    let cells = sweep_cells(cfg, repeats)?;
    let logs = cells.par_iter().map(|c| simulate_cell(cfg, c, &params)).collect::<fittsbench::Result<Vec<_>>>()?;
    for (n, (cell, log)) in cells.iter().zip(&logs).enumerate() {
        let name = format!("trial_{n:04}_ring{}_g{}_rep{:03}.jsonl", cell.condition.ring_id, gamma_tag(cell.condition.gamma), cell.repeat);
        write_log_file(&log_dir.join(name), log)?;
    }
    let (report, summary) = write_analysis(cfg, &logs, out)?;
    print_report(&report, Some(&summary), json);
    Ok(())
}

fn collect_log_paths(paths: &[PathBuf]) -> Outcome<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Outcome<()> {
        let mut entries: Vec<PathBuf> =
            fs::read_dir(dir).map_err(io_err(dir))?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io_err(dir))?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|x| x == "jsonl") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(Failure::Io(format!("{}: no such file or directory", p.display())));
        }
    }
    if out.is_empty() {
        return Err(Failure::Data("no trial logs (*.jsonl) found".into()));
    }
    Ok(out)
}

fn load_logs(paths: &[PathBuf]) -> Outcome<Vec<TrialLog>> {
    collect_log_paths(paths)?
        .iter()
        .map(|p| read_log_file(p).map_err(|e| Failure::from(e).with_path(p)))
        .collect()
}

impl Failure {
    fn with_path(self, p: &Path) -> Self {
        let m = format!("{}: {}", p.display(), self.message());
        match self {
            Failure::Usage(_) => Failure::Usage(m),
            Failure::Config(_) => Failure::Config(m),
            Failure::Io(_) => Failure::Io(m),
            Failure::Data(_) => Failure::Data(m),
            Failure::Analysis(_) => Failure::Analysis(m),
        }
    }
}

fn apply_analysis_flags(cfg: &mut BenchConfig, flags: &AnalysisFlags) {
    if flags.include_first_reach {
        cfg.analysis.exclude_first_reach = false;
    }
    if flags.aggregate_per_trial {
        cfg.analysis.aggregate_per_trial = true;
    }
}

#[derive(Serialize)]
struct ScheduleRow {
    session: usize,
    conditions: Vec<Condition>,
}

fn schedule(cfg: &BenchConfig, sessions: usize, json: bool) -> Outcome<()> {
    let conditions = cfg.conditions()?;
    let square = latin_square(&conditions, conditions.len(), cfg.seed)?;
    let rows: Vec<ScheduleRow> = (0..sessions).map(|k| ScheduleRow { session: k, conditions: square.row(k).to_vec() }).collect();
    if json {
        println!("{}", to_json(&rows));
    } else {
        for r in rows {
            let cells: Vec<String> = r.conditions.iter().map(|c| format!("R{}/{:.1}", c.ring_id, c.gamma)).collect();
            println!("session {:>3}: {}", r.session, cells.join(" "));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    let mut cfg = load_config(&cli.global)?;
    let json = cli.global.json;
    match cli.command {
        Command::Simulate { ring, gamma, operator, repeats, out } => simulate(&cfg, ring, gamma, &operator, repeats, &out, json),
        Command::Sweep { operator, repeats, gammas, out } => {
            if let Some(g) = gammas {
                cfg.gammas = parse_gamma_list(&g).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            sweep(&cfg, &operator, repeats, &out, json)
        }
        Command::Fit { paths, analysis, out } => {
            apply_analysis_flags(&mut cfg, &analysis);
            let logs = load_logs(&paths)?;
            let (exclude, aggregate) = (cfg.analysis.exclude_first_reach, cfg.analysis.aggregate_per_trial);
            let obs = observations_from_logs(&logs, exclude, aggregate)?;
            let report = fit_report(&obs, exclude, aggregate)?;
            if let Some(out) = out {
                prepare_out_dir(&out)?;
                write_file(&out.join("fit_report.json"), to_json(&report).as_bytes())?;
            }
            print_report(&report, None, json);
            Ok(())
        }
        Command::Report { paths, analysis, out } => {
            apply_analysis_flags(&mut cfg, &analysis);
            let logs = load_logs(&paths)?;
            prepare_out_dir(&out)?;
            let (report, summary) = write_analysis(&cfg, &logs, &out)?;
            print_report(&report, Some(&summary), json);
            Ok(())
        }
        Command::Serve { listen, data_dir, show_gamma } => {
            if let Some(l) = listen {
                cfg.server.listen = l;
            }
            if let Some(d) = data_dir {
                cfg.server.data_dir = d;
            }
            cfg.server.show_gamma |= show_gamma;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            if !json {
                eprintln!("serving on {} (data in {})", cfg.server.listen, cfg.server.data_dir.display());
            }
            rt.block_on(fittsbench_service::serve(cfg)).map_err(|e| Failure::Io(e.to_string()))
        }
        Command::Schedule { sessions } => schedule(&cfg, sessions, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.global.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if json {
                let _ = writeln!(std::io::stderr(), "{}", serde_json::json!({ "error": f.message(), "exit_code": f.code() }));
            } else {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}
