use std::fs;
use std::path::{Path, PathBuf};

use loglin::export::{export_figures, Scenario};
use loglin::sim::{monte_carlo, read_log_csv, verify_containment, write_log_csv, ContainmentReport, LoggedErrors, MonteCarloReport};
use loglin::{certify_cascade, CertBundle};
use serde::Serialize;

use crate::config::Config;
use crate::{Cli, CliError, Command};

const BUNDLE_FILE: &str = "bundle.json";
const RUNS_DIR: &str = "runs";
const GROUP_SAMPLES: usize = 2000;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn core_err(e: loglin::Error) -> CliError {
    if e.is_infeasible() {
        CliError::Infeasible(e.to_string())
    } else if matches!(e.root(), loglin::Error::Io(_)) {
        CliError::Runtime(e.to_string())
    } else {
        CliError::Config(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(runs) = cli.runs {
        cfg.simulation.runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&Config>) -> PathBuf {
    cli.out.clone().or_else(|| cfg.and_then(|c| c.output.clone())).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn load_bundle(path: &Path) -> Result<CertBundle, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let b: CertBundle = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    b.check().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(b)
}

fn single_bundle(cli: &Cli, out: &Path) -> Result<(PathBuf, CertBundle), CliError> {
    let path = match cli.bundle.as_slice() {
        [] => out.join(BUNDLE_FILE),
        [p] => p.clone(),
        _ => return Err(CliError::Config("this command takes a single --bundle".into())),
    };
    let b = load_bundle(&path)?;
    Ok((path, b))
}

/// `runs/*.csv` under `dir`, sorted by name.
fn run_logs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let runs = dir.join(RUNS_DIR);
    if !runs.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&runs)
        .map_err(|e| io_err(&runs, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

fn read_logs(files: &[PathBuf]) -> Result<Vec<LoggedErrors>, CliError> {
    files
        .iter()
        .map(|p| {
            let f = fs::File::open(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            read_log_csv(f).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        })
        .collect()
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Certify => certify(cli),
        Command::Simulate => simulate(cli),
        Command::Verify { logs } => verify(cli, logs),
        Command::Export => export(cli),
    }
}

fn certify(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let out = out_dir(cli, Some(&cfg));
    let envelope = cfg.envelope()?;
    let bundle = certify_cascade(&cfg.vehicle, &envelope, &cfg.disturbance, &cfg.weights, &cfg.cascade).map_err(core_err)?;
    create_dir(&out)?;
    let path = out.join(BUNDLE_FILE);
    write_json(&path, &bundle)?;
    let e = bundle.zeta_ellipsoid();
    println!("wrote {}", path.display());
    println!("rate-error bound     {:?} rad/s", bundle.omega_bound.as_slice());
    println!("algebra alpha        {:?}", e.alpha);
    println!("max residual         {:e}", bundle.max_residual());
    println!("input distortion     {:.1}% of the nominal bound", 100.0 * bundle.refinement.inflation);
    Ok(())
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    label: Option<&'a str>,
    runs: usize,
    seed: u64,
    logs: Vec<String>,
    report: &'a MonteCarloReport,
}

fn simulate(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let out = out_dir(cli, Some(&cfg));
    let (_, bundle) = single_bundle(cli, &out)?;
    let reference = cfg.reference(&bundle.envelope)?;
    let mc = cfg.simulation.monte_carlo();
    let (report, logs) = monte_carlo(&bundle, reference.as_ref(), &mc, &cfg.simulation.closed_loop()).map_err(core_err)?;

    let runs_dir = out.join(RUNS_DIR);
    create_dir(&runs_dir)?;
    let mut names = Vec::new();
    for (i, log) in logs.iter().enumerate() {
        let name = format!("run{i:03}.csv");
        let path = runs_dir.join(&name);
        let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_log_csv(log, std::io::BufWriter::new(f)).map_err(|e| io_err(&path, e))?;
        names.push(format!("{RUNS_DIR}/{name}"));
    }
    let summary = SimulateSummary { label: cfg.label.as_deref(), runs: mc.runs, seed: mc.seed, logs: names, report: &report };
    let path = out.join("summary.json");
    write_json(&path, &summary)?;
    println!("wrote {} and {} logs", path.display(), logs.len());
    println!("max zeta level {:e}, max rate level {:e}", report.max_lyap_zeta, report.max_lyap_omega);
    if report.violations > 0 {
        return Err(CliError::Violation(format!("{} of {} runs left the certified set", report.violations, mc.runs)));
    }
    println!("all {} runs contained", mc.runs);
    Ok(())
}

#[derive(Serialize)]
struct FileReport {
    path: String,
    zeta: ContainmentReport,
    omega: Option<ContainmentReport>,
}

#[derive(Serialize)]
struct VerifyReport {
    bundle: String,
    violations: usize,
    files: Vec<FileReport>,
}

fn verify(cli: &Cli, logs: &[PathBuf]) -> Result<(), CliError> {
    let out = out_dir(cli, None);
    let (bundle_path, bundle) = single_bundle(cli, &out)?;
    let files = if logs.is_empty() { run_logs(&out)? } else { logs.to_vec() };
    if files.is_empty() {
        return Err(CliError::Config(format!("no logs given and none found under {}", out.join(RUNS_DIR).display())));
    }
    let ez = bundle.zeta_ellipsoid();
    let ew = bundle.omega_ellipsoid();
    let mut reports = Vec::new();
    for (path, log) in files.iter().zip(read_logs(&files)?) {
        let zeta = verify_containment(&log.t, log.zeta.iter().map(|z| z.as_slice()), &ez);
        let omega = ew.as_ref().map(|e| verify_containment(&log.t, log.omega_err.iter().map(|w| w.as_slice()), e));
        reports.push(FileReport { path: path.display().to_string(), zeta, omega });
    }
    let violations = reports.iter().filter(|r| !r.zeta.contained() || r.omega.is_some_and(|o| !o.contained())).count();
    let report = VerifyReport { bundle: bundle_path.display().to_string(), violations, files: reports };
    create_dir(&out)?;
    let path = out.join("verify.json");
    write_json(&path, &report)?;
    println!("wrote {}", path.display());
    if violations > 0 {
        return Err(CliError::Violation(format!("{violations} of {} logs leave the certified set", files.len())));
    }
    println!("all {} logs contained", files.len());
    Ok(())
}

/// Parent directory name for `<dir>/bundle.json`, file stem otherwise.
fn scenario_label(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    if path.file_name().is_some_and(|n| n == BUNDLE_FILE) {
        if let Some(dir) = path.parent().and_then(|d| d.file_name()).and_then(|d| d.to_str()) {
            return dir.to_string();
        }
    }
    stem.to_string()
}

fn export(cli: &Cli) -> Result<(), CliError> {
    if cli.bundle.is_empty() {
        return Err(CliError::Config("export needs at least one --bundle".into()));
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
    let mut loaded = Vec::new();
    for path in &cli.bundle {
        let bundle = load_bundle(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let logs = read_logs(&run_logs(dir)?)?;
        loaded.push((scenario_label(path), bundle, logs));
    }
    let mut labels: Vec<&str> = loaded.iter().map(|(l, _, _)| l.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config("bundles must have distinct scenario labels".into()));
    }
    let scenarios: Vec<Scenario<'_>> = loaded.iter().map(|(label, bundle, logs)| Scenario { label, bundle, logs }).collect();
    let written = export_figures(&out, &scenarios, GROUP_SAMPLES).map_err(core_err)?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
