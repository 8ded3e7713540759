//! Subcommand dispatch, output files and the run manifest.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use subcav_core::error::{Error, ErrorKind};
use subcav_core::scenarios::{
    fit_c0, multiplier_csv, multiplier_profile, roof_csv, run_steady, run_unsteady, series_csv, steady_csv,
    sweep_csv, sweep_sliding_law, Csv, RunFailure, ScenarioConfig, SteadySummary, SweepPoint, TimeSeries,
};

use crate::config::{ConfigError, ConfigFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Sweep,
    Unsteady,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Sweep => "sweep",
            Command::Unsteady => "unsteady",
        }
    }
}

/// Convergence summary of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub converged: bool,
    pub steps: usize,
    pub max_newton_iterations: usize,
    pub final_rate: Option<f64>,
    pub tau_b: Option<f64>,
    pub u_b: Option<f64>,
    /// Sliding-law constant fitted from the uncavitated sweep points.
    pub c0: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: ConfigFile,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub runs: Vec<RunSummary>,
    pub success: bool,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(std::io::Error),
    /// Solver or geometry failure; the manifest has been written.
    Run(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    /// 2 configuration, 3 solver, 4 geometry, 1 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Run(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Solver => 3,
                ErrorKind::Geometry => 4,
            },
        }
    }
}

/// Collects output files; on failure every file gets a `.partial` suffix.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Csv)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: String, csv: Csv) {
        self.files.push((name, csv));
    }

    fn write(&self, partial: bool) -> std::io::Result<Vec<String>> {
        let mut names = Vec::with_capacity(self.files.len());
        for (name, csv) in &self.files {
            let name = if partial { format!("{name}.partial") } else { name.clone() };
            std::fs::write(self.dir.join(&name), csv.render())?;
            names.push(name);
        }
        Ok(names)
    }
}

fn series_summary(label: String, series: &TimeSeries, error: Option<&Error>) -> RunSummary {
    let last = series.last();
    RunSummary {
        label,
        converged: error.is_none(),
        steps: series.len(),
        max_newton_iterations: series.records.iter().map(|r| r.newton_iterations).max().unwrap_or(0),
        final_rate: last.map(|r| r.rate),
        tau_b: last.map(|r| r.tau_b),
        u_b: last.map(|r| r.u_b),
        c0: None,
        error: error.map(|e| e.to_string()),
    }
}

/// Runs `f` over `items` on up to `jobs` threads; results keep input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().expect("poisoned")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("poisoned")
        .into_iter()
        .map(|r| r.expect("every item ran"))
        .collect()
}

fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

fn steady(config: &ConfigFile, out: &mut Outputs, runs: &mut Vec<RunSummary>) -> Option<Error> {
    let mut rows = Vec::new();
    let mut failure = None;
    for n_e in config.mesh.n_e.to_vec() {
        let cfg = config.scenario(n_e);
        match run_steady(&cfg) {
            Ok(s) => {
                rows.push(SteadySummary {
                    n_e,
                    cells: s.mesh.n_cells(),
                    tau_b: s.record.tau_b,
                    u_b: s.record.u_b,
                    x_detach: s.record.x_detach,
                    x_reattach: s.record.x_reattach,
                });
                if config.output.series {
                    out.add(format!("series_ne{n_e}.csv"), series_csv(&s.series));
                }
                if config.output.roof {
                    let mut snaps = s.series.snapshots.clone();
                    snaps.push((s.record.t, s.roof.clone()));
                    out.add(format!("roof_ne{n_e}.csv"), roof_csv(&snaps));
                }
                if config.output.multiplier {
                    out.add(
                        format!("multiplier_ne{n_e}.csv"),
                        multiplier_csv(&multiplier_profile(&s.solution, &s.mesh)),
                    );
                }
                runs.push(series_summary(format!("n_e={n_e}"), &s.series, None));
            }
            Err(RunFailure { error, series }) => {
                out.add(format!("series_ne{n_e}.csv"), series_csv(&series));
                runs.push(series_summary(format!("n_e={n_e}"), &series, Some(&error)));
                failure = Some(error);
                break;
            }
        }
    }
    out.files.insert(0, ("steady.csv".into(), steady_csv(&rows)));
    failure
}

fn sweep(config: &ConfigFile, jobs: usize, out: &mut Outputs, runs: &mut Vec<RunSummary>) -> Option<Error> {
    let Some(section) = &config.sweep else {
        return Some(Error::Config("sweep needs a [sweep] section".into()));
    };
    let base = config.primary();
    let exponents = section.exponents.clone().unwrap_or_else(|| vec![base.rheology.exponent]);
    let single = exponents.len() == 1;
    let results: Vec<(f64, Result<Vec<SweepPoint>, Error>)> = parallel_map(&exponents, jobs, |&n| {
        let cfg = ScenarioConfig {
            rheology: subcav_core::rheology::GlenRheology {
                exponent: n,
                ..base.rheology
            },
            ..base.clone()
        };
        (n, sweep_sliding_law(&cfg, &section.n_eff))
    });
    let mut failure = None;
    for (n, res) in results {
        let label = format!("n={n}");
        match res {
            Ok(points) => {
                let name = if single { "sweep.csv".to_string() } else { format!("sweep_n{}.csv", tag(n)) };
                out.add(name, sweep_csv(&points));
                let c0 = fit_c0(&points, n, base.bed.amplitude(), base.rheology.rate_factor).ok();
                let converged = points.iter().all(|p| p.converged);
                runs.push(RunSummary {
                    label,
                    converged,
                    steps: points.iter().map(|p| p.steps).sum(),
                    max_newton_iterations: 0,
                    final_rate: None,
                    tau_b: points.last().map(|p| p.tau_b),
                    u_b: points.last().map(|p| p.u_b),
                    c0,
                    error: (!converged).then(|| "some sweep points did not converge".to_string()),
                });
            }
            Err(e) => {
                runs.push(RunSummary {
                    label,
                    converged: false,
                    steps: 0,
                    max_newton_iterations: 0,
                    final_rate: None,
                    tau_b: None,
                    u_b: None,
                    c0: None,
                    error: Some(e.to_string()),
                });
                failure.get_or_insert(e);
            }
        }
    }
    failure
}

fn unsteady(config: &ConfigFile, out: &mut Outputs, runs: &mut Vec<RunSummary>) -> Option<Error> {
    let Some(params) = config.unsteady_params() else {
        return Some(Error::Config("unsteady needs an [unsteady] section".into()));
    };
    match run_unsteady(&config.primary(), &params) {
        Ok(run) => {
            out.add("series.csv".into(), series_csv(&run.series));
            if config.output.roof {
                out.add("roof.csv".into(), roof_csv(&run.series.snapshots));
            }
            let mut summary = series_summary("unsteady".into(), &run.series, None);
            summary.tau_b = Some(run.tau_b0);
            runs.push(summary);
            None
        }
        Err(RunFailure { error, series }) => {
            out.add("series.csv".into(), series_csv(&series));
            runs.push(series_summary("unsteady".into(), &series, Some(&error)));
            Some(error)
        }
    }
}

/// Runs `command` and writes its CSVs and `manifest.json` into `out_dir`.
pub fn dispatch(command: Command, config: &ConfigFile, out_dir: &Path, jobs: usize) -> Result<RunManifest, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut out = Outputs::new(out_dir);
    let mut runs = Vec::new();
    let failure = match command {
        Command::Steady => steady(config, &mut out, &mut runs),
        Command::Sweep => sweep(config, jobs, &mut out, &mut runs),
        Command::Unsteady => unsteady(config, &mut out, &mut runs),
    };
    let outputs = out.write(failure.is_some())?;
    let manifest = RunManifest {
        command: command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        runs,
        success: failure.is_none(),
    };
    let name = if failure.is_some() { "manifest.json.partial" } else { "manifest.json" };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(out_dir.join(name), json)?;
    match failure {
        None => Ok(manifest),
        Some(e) => Err(CliError::Run(e)),
    }
}
