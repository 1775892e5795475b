//! Benchmark harness: sample a source, fit a model, optimise it with the
//! certified solver and the GA presets, and report the outcome per sense.

mod functions;
mod report;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

pub use functions::{eval_f1, eval_f2, eval_f3, eval_f4, TestFunction};
pub use report::{Format, Report, ReportRow};

use crate::error::{Error, Result};
use crate::fit::{fit, Dataset, FitConfig};
use crate::ga::{self, GaPreset};
use crate::model::{oracle_optimum, parse_model, serialize_model, KnotGrid, OracleConfig, TitlMarsModel};
use crate::solution::{Sense, Solution, SolveStatus};
use crate::solver::{solve, SolverConfig};
use crate::windfarm::{monte_carlo_power_grid, FarmConfig, WindScenario};

/// Where a job's model comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Function(TestFunction),
    /// built-in scenario name or scenario file
    Scenario(String),
    Dataset(PathBuf),
    Model(PathBuf),
}

#[derive(Clone, Debug)]
pub struct BenchJob {
    pub name: String,
    pub source: Source,
    /// points per axis for a full grid; default 41 for 2-D functions
    pub grid: Option<usize>,
    /// uniform random points when no grid is used
    pub samples: usize,
    pub seed: u64,
    pub max_basis: usize,
    pub layouts: usize,
    pub turbines: usize,
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub jobs: Vec<BenchJob>,
    pub repetitions: usize,
    pub presets: Vec<GaPreset>,
    pub solver: SolverConfig,
    pub oracle_cap: u128,
    /// leave timings out of the main report (they go to a sidecar file)
    pub deterministic: bool,
    /// worker threads, `None` for the rayon default
    pub threads: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default = "default_reps")]
    repetitions: usize,
    #[serde(default = "default_presets")]
    presets: Vec<String>,
    #[serde(default = "default_gap")]
    gap: f64,
    #[serde(default = "default_time_limit")]
    time_limit: f64,
    #[serde(default)]
    node_limit: Option<u64>,
    #[serde(default)]
    oracle_cap: Option<u64>,
    #[serde(default)]
    deterministic: bool,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    seed: u64,
    job: Vec<JobFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JobFile {
    name: Option<String>,
    function: Option<String>,
    scenario: Option<String>,
    dataset: Option<PathBuf>,
    model: Option<PathBuf>,
    grid: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    max_basis: Option<usize>,
    layouts: Option<usize>,
    turbines: Option<usize>,
}

fn default_reps() -> usize {
    30
}

fn default_presets() -> Vec<String> {
    GaPreset::ALL.iter().map(|p| p.name().to_string()).collect()
}

fn default_gap() -> f64 {
    1e-6
}

fn default_time_limit() -> f64 {
    60.0
}

impl BenchJob {
    pub fn new(name: impl Into<String>, source: Source) -> Self {
        BenchJob {
            name: name.into(),
            source,
            grid: None,
            samples: 2000,
            seed: 0,
            max_basis: FitConfig::default().max_basis,
            layouts: 1000,
            turbines: FarmConfig::default().turbines,
        }
    }

    pub fn function(f: TestFunction) -> Self {
        Self::new(f.name(), Source::Function(f))
    }

    pub fn scenario(name: &str) -> Self {
        Self::new(name, Source::Scenario(name.to_string()))
    }
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            jobs: Vec::new(),
            repetitions: default_reps(),
            presets: GaPreset::ALL.to_vec(),
            solver: SolverConfig {
                time_limit: Duration::from_secs_f64(default_time_limit()),
                ..SolverConfig::default()
            },
            oracle_cap: crate::model::DEFAULT_VERTEX_CAP as u128,
            deterministic: false,
            threads: None,
        }
    }
}

impl BenchSpec {
    /// Parses the TOML spec; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let file: SpecFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("bench spec: {e}")))?;
        if file.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !(file.time_limit > 0.0) {
            return Err(Error::Config("time_limit must be positive".into()));
        }
        let presets = file
            .presets
            .iter()
            .map(|p| p.parse())
            .collect::<Result<Vec<GaPreset>>>()?;
        let mut solver = SolverConfig {
            gap: file.gap,
            time_limit: Duration::from_secs_f64(file.time_limit),
            ..SolverConfig::default()
        };
        if let Some(n) = file.node_limit {
            solver.node_limit = n;
        }
        let mut jobs = Vec::new();
        for (i, j) in file.job.into_iter().enumerate() {
            let given = [
                j.function.is_some(),
                j.scenario.is_some(),
                j.dataset.is_some(),
                j.model.is_some(),
            ];
            if given.iter().filter(|&&g| g).count() != 1 {
                return Err(Error::Config(format!(
                    "job {i}: give exactly one of function, scenario, dataset, model"
                )));
            }
            let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
            let (label, source) = if let Some(f) = j.function {
                (f.clone(), Source::Function(f.parse()?))
            } else if let Some(s) = j.scenario {
                let source = if WindScenario::builtin(&s).is_ok() {
                    Source::Scenario(s.clone())
                } else {
                    Source::Scenario(resolve(PathBuf::from(&s)).to_string_lossy().into_owned())
                };
                (s, source)
            } else if let Some(d) = j.dataset {
                (d.to_string_lossy().into_owned(), Source::Dataset(resolve(d)))
            } else {
                let m = j.model.expect("one source is set");
                (m.to_string_lossy().into_owned(), Source::Model(resolve(m)))
            };
            let mut job = BenchJob::new(j.name.unwrap_or(label), source);
            job.grid = j.grid;
            job.seed = j.seed.unwrap_or(file.seed);
            if let Some(s) = j.samples {
                job.samples = s;
            }
            if let Some(m) = j.max_basis {
                job.max_basis = m;
            }
            if let Some(l) = j.layouts {
                job.layouts = l;
            }
            if let Some(t) = j.turbines {
                job.turbines = t;
            }
            jobs.push(job);
        }
        Ok(BenchSpec {
            jobs,
            repetitions: file.repetitions,
            presets,
            solver,
            oracle_cap: file
                .oracle_cap
                .map_or(crate::model::DEFAULT_VERTEX_CAP as u128, u128::from),
            deterministic: file.deterministic,
            threads: file.threads,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }
}

/// Samples for a test function: a full grid when `grid` is set (default for 2-D), else uniform points.
pub fn sample_function(f: TestFunction, grid: Option<usize>, samples: usize, seed: u64) -> Result<Dataset> {
    let (lo, hi) = (-f.half_width(), f.half_width());
    let grid = grid.or((f.dim() == 2).then_some(41));
    let rows: Vec<Vec<f64>> = match grid {
        Some(g) => {
            if g < 2 {
                return Err(Error::Config("grid needs at least 2 points per axis".into()));
            }
            let total = (g as u128).pow(f.dim() as u32);
            if total > 10_000_000 {
                return Err(Error::Capacity(format!("grid of {total} points is too large")));
            }
            let axis: Vec<f64> = (0..g).map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64).collect();
            (0..total as usize)
                .map(|mut k| {
                    (0..f.dim())
                        .map(|_| {
                            let v = axis[k % g];
                            k /= g;
                            v
                        })
                        .collect()
                })
                .collect()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples)
                .map(|_| (0..f.dim()).map(|_| rng.random_range(lo..=hi)).collect())
                .collect()
        }
    };
    let y = rows.iter().map(|x| f.eval(x)).collect::<Result<Vec<_>>>()?;
    Dataset::from_rows(&rows, y)?.with_bounds(f.lower(), f.upper())
}

/// A fitted (or loaded) job model and, for scenario jobs, the farm it maps.
#[derive(Clone, Debug)]
pub struct JobModel {
    pub name: String,
    pub model: TitlMarsModel,
    pub data: Option<Dataset>,
    pub farm: Option<FarmConfig>,
}

/// Builds the model a job optimises.
pub fn prepare(job: &BenchJob) -> Result<JobModel> {
    let cfg = FitConfig {
        max_basis: job.max_basis,
        ..FitConfig::default()
    };
    let (model, data, farm) = match &job.source {
        Source::Function(f) => {
            let data = sample_function(*f, job.grid, job.samples, job.seed)?;
            (fit(&data, &cfg)?, Some(data), None)
        }
        Source::Scenario(s) => {
            let scenario = WindScenario::load(s)?;
            let farm = FarmConfig {
                turbines: job.turbines,
                ..FarmConfig::default()
            };
            let grid = monte_carlo_power_grid(&farm, &scenario, job.layouts, job.seed)?;
            let side = farm.cells as f64 * farm.cell_width;
            let data = grid.to_dataset()?.with_bounds(vec![0.0, 0.0], vec![side, side])?;
            (fit(&data, &cfg)?, Some(data), Some(farm))
        }
        Source::Dataset(p) => {
            let data = Dataset::load(p)?;
            (fit(&data, &cfg)?, Some(data), None)
        }
        Source::Model(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            (parse_model(&text)?, None, None)
        }
    };
    Ok(JobModel {
        name: job.name.clone(),
        model,
        data,
        farm,
    })
}

fn join_x(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn cell_label(farm: Option<&FarmConfig>, x: &[f64]) -> String {
    let Some(farm) = farm else {
        return String::new();
    };
    let idx = |v: f64| ((v / farm.cell_width).floor().max(0.0) as usize).min(farm.cells - 1);
    format!("{}:{}", idx(x[0]), idx(x[1]))
}

fn opt_row(job: &JobModel, sol: &Solution, secs: f64) -> ReportRow {
    let mut r = ReportRow::new(&job.name, "opt", sol.sense);
    r.value_mean = Some(sol.value);
    r.value_best = Some(sol.value);
    r.value_worst = Some(sol.value);
    r.time_mean_s = Some(secs);
    r.gap = Some(sol.gap);
    r.runs = 1;
    r.incomplete = sol.status == SolveStatus::Incomplete;
    r.x_best = join_x(&sol.x);
    r.cell = cell_label(job.farm.as_ref(), &sol.x);
    if r.incomplete {
        r.note = format!("bound {}", sol.bound);
    }
    r
}

/// Raw GA values per `(preset, sense)`, kept for dominance checks.
#[derive(Clone, Debug, Default)]
pub struct GaRuns {
    pub values: Vec<(GaPreset, Sense, Vec<f64>)>,
}

/// Full result of one job: report rows, the model and all GA values.
#[derive(Clone, Debug)]
pub struct JobOutcome {
    pub model: JobModel,
    pub rows: Vec<ReportRow>,
    pub ga: GaRuns,
    pub opt: Vec<Solution>,
}

/// Fails when a GA run beats a certified bound: that would falsify the certificate.
fn check_dominance(name: &str, opt: &Solution, values: &[f64]) -> Result<()> {
    if opt.status == SolveStatus::Incomplete {
        return Ok(());
    }
    let tol = 1e-9 * opt.bound.abs().max(1.0);
    for &v in values {
        let beaten = match opt.sense {
            Sense::Max => v > opt.bound + tol,
            Sense::Min => v < opt.bound - tol,
        };
        if beaten {
            return Err(Error::Certificate(format!(
                "{name}: GA value {v} beats the certified {} bound {}",
                opt.sense, opt.bound
            )));
        }
    }
    Ok(())
}

/// Optimises a prepared model with the solver, the oracle when tractable, and every GA preset.
pub fn run_job(job: JobModel, spec: &BenchSpec) -> Result<JobOutcome> {
    let model = &job.model;
    let mut rows = Vec::new();
    let mut ga_runs = GaRuns::default();
    let mut opts = Vec::new();
    let tractable = KnotGrid::candidates(model).vertex_count() <= spec.oracle_cap;

    for sense in [Sense::Max, Sense::Min] {
        let t = Instant::now();
        let sol = solve(model, sense, &spec.solver)?;
        let secs = t.elapsed().as_secs_f64();
        rows.push(opt_row(&job, &sol, secs));

        if tractable {
            let t = Instant::now();
            let cfg = OracleConfig {
                vertex_cap: spec.oracle_cap as u64,
            };
            let o = oracle_optimum(model, sense, &cfg)?;
            let secs = t.elapsed().as_secs_f64();
            if sol.status != SolveStatus::Incomplete {
                let tol = spec.solver.gap * o.value.abs().max(1.0) + 1e-9;
                if (o.value - sol.value).abs() > tol {
                    return Err(Error::Certificate(format!(
                        "{}: solver {} optimum {} disagrees with oracle {}",
                        job.name, sense, sol.value, o.value
                    )));
                }
            }
            let mut r = ReportRow::new(&job.name, "oracle", sense);
            r.value_mean = Some(o.value);
            r.value_best = Some(o.value);
            r.value_worst = Some(o.value);
            r.time_mean_s = Some(secs);
            r.runs = 1;
            r.x_best = join_x(&o.x);
            r.cell = cell_label(job.farm.as_ref(), &o.x);
            rows.push(r);
        }

        for &preset in &spec.presets {
            let runs: Vec<(Solution, f64)> = (1..=spec.repetitions as u64)
                .into_par_iter()
                .map(|seed| {
                    let t = Instant::now();
                    let s = ga::optimize(model, sense, &preset.params(seed))?;
                    Ok((s, t.elapsed().as_secs_f64()))
                })
                .collect::<Result<_>>()?;
            let values: Vec<f64> = runs.iter().map(|(s, _)| s.value).collect();
            check_dominance(&job.name, &sol, &values)?;
            let n = runs.len() as f64;
            let best = runs
                .iter()
                .enumerate()
                .fold(0, |b, (i, (s, _))| if sense.better(s.value, runs[b].0.value) { i } else { b });
            let worst = match sense {
                Sense::Max => values.iter().copied().fold(f64::INFINITY, f64::min),
                Sense::Min => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            let mut r = ReportRow::new(&job.name, preset.name(), sense);
            r.value_mean = Some(values.iter().sum::<f64>() / n);
            r.value_best = Some(runs[best].0.value);
            r.value_worst = Some(worst);
            r.time_mean_s = Some(runs.iter().map(|(_, t)| t).sum::<f64>() / n);
            r.runs = runs.len();
            r.x_best = join_x(&runs[best].0.x);
            r.cell = cell_label(job.farm.as_ref(), &runs[best].0.x);
            rows.push(r);
            ga_runs.values.push((preset, sense, values));
        }
        opts.push(sol);
    }
    Ok(JobOutcome {
        model: job,
        rows,
        ga: ga_runs,
        opt: opts,
    })
}

/// Runs every job of the spec in order. Jobs whose model cannot be built are flagged and skipped.
pub fn run_benchmark(spec: &BenchSpec) -> Result<(Report, Vec<JobOutcome>)> {
    let body = || -> Result<(Report, Vec<JobOutcome>)> {
        let mut report = Report::default();
        let mut outcomes = Vec::new();
        for job in &spec.jobs {
            let prepared = match prepare(job) {
                Ok(p) => p,
                Err(e @ (Error::Io { .. } | Error::Certificate(_))) => return Err(e),
                Err(e) => {
                    for sense in [Sense::Max, Sense::Min] {
                        let mut r = ReportRow::new(&job.name, "opt", sense);
                        r.incomplete = true;
                        r.note = format!("model unavailable: {e}");
                        report.rows.push(r);
                    }
                    continue;
                }
            };
            let out = run_job(prepared, spec)?;
            report.rows.extend(out.rows.iter().cloned());
            outcomes.push(out);
        }
        Ok((report, outcomes))
    };
    match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}

/// Writes the report (and, in deterministic mode, a `timings.csv` sidecar) plus every model.
pub fn write_outputs(
    report: &Report,
    outcomes: &[JobOutcome],
    spec: &BenchSpec,
    dir: &Path,
    format: Format,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let main = dir.join(format!("report.{}", format.extension()));
    if spec.deterministic {
        report.without_timings().emit(format, &main)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["function", "method", "sense", "time_mean_s"])?;
        for r in &report.rows {
            let t = r.time_mean_s.map_or(String::new(), |t| t.to_string());
            w.write_record([r.function.as_str(), r.method.as_str(), r.sense.as_str(), t.as_str()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
        let path = dir.join("timings.csv");
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    } else {
        report.emit(format, &main)?;
    }
    written.insert(0, main);
    for out in outcomes {
        let safe: String = out
            .model
            .name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        let path = dir.join(format!("{safe}.model"));
        std::fs::write(&path, serialize_model(&out.model.model)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        if let (Some(data), Some(_)) = (&out.model.data, &out.model.farm) {
            let path = dir.join(format!("{safe}.csv"));
            data.save(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}
