use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use titl_mars::bench::{run_benchmark, write_outputs, BenchSpec, Format};
use titl_mars::fit::KnotCandidates;
use titl_mars::ga::{self, GaParams, GaPreset};
use titl_mars::solver::BranchRule;
use titl_mars::windfarm::{monte_carlo_power_grid, FarmConfig, WindScenario};
use titl_mars::{
    build_miqp, fit, oracle_optimum, parse_model, serialize_model, solve, Dataset, Error, FitConfig,
    OracleConfig, Sense, SolveStatus, SolverConfig, TitlMarsModel,
};

#[derive(Parser)]
#[command(name = "titl-mars", version, about = "Fit, optimise and benchmark TITL-MARS models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SenseArg {
    Max,
    Min,
}

impl From<SenseArg> for Sense {
    fn from(s: SenseArg) -> Sense {
        match s {
            SenseArg::Max => Sense::Max,
            SenseArg::Min => Sense::Min,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Grefenstette,
    Michalewicz,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Priority,
    Spatial,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Md,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to `x1,...,xV,y` CSV data.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 40)]
        max_basis: usize,
        /// knot candidates per variable; 0 uses every distinct sample value
        #[arg(long, default_value_t = 100)]
        knots: usize,
        #[arg(long, default_value_t = 3.0)]
        penalty: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certified global optimum by branch-and-bound.
    Solve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        sense: SenseArg,
        #[arg(long, default_value_t = 1e-6)]
        gap: f64,
        /// seconds
        #[arg(long, default_value_t = 600.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 10_000_000)]
        node_limit: u64,
        #[arg(long, value_enum, default_value = "priority")]
        branching: BranchArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Genetic-algorithm baseline.
    Ga {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        sense: SenseArg,
        #[arg(long, value_enum, default_value = "grefenstette")]
        preset: PresetArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        crossover: Option<f64>,
        #[arg(long)]
        mutation: Option<f64>,
        #[arg(long)]
        bits: Option<u32>,
    },
    /// Monte Carlo per-cell power dataset for a wind scenario.
    Windfarm {
        /// fw1..fw4 or a scenario TOML file
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1000)]
        layouts: usize,
        #[arg(long, default_value_t = 40)]
        turbines: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 41)]
        cells: usize,
        #[arg(long, default_value_t = 308.0)]
        cell_width: f64,
        #[arg(long, default_value_t = 40.0)]
        rotor_radius: f64,
        #[arg(long, default_value_t = 0.075)]
        wake_decay: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark spec and write the report.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// worker threads; overrides the spec
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Brute-force optimum over every knot-grid vertex.
    Oracle {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        sense: SenseArg,
        #[arg(long, default_value_t = titl_mars::model::DEFAULT_VERTEX_CAP)]
        cap: u64,
    },
    /// Print the mixed-integer quadratic program of a model.
    Miqp {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "max")]
        sense: SenseArg,
    },
}

/// Exit codes: 2 input, 3 capacity or limit, 4 internal.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Capacity(_) => 3,
        Error::Certificate(_) => 4,
        _ => 2,
    }
}

fn load_model(path: &Path) -> titl_mars::Result<TitlMarsModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

fn write_file(path: &Path, text: &str) -> titl_mars::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn run(cmd: Command) -> titl_mars::Result<u8> {
    match cmd {
        Command::Fit {
            data,
            max_basis,
            knots,
            penalty,
            out,
        } => {
            let data = Dataset::load(&data)?;
            let cfg = FitConfig {
                max_basis,
                knots: if knots == 0 {
                    KnotCandidates::All
                } else {
                    KnotCandidates::Quantiles(knots)
                },
                penalty,
                ..FitConfig::default()
            };
            let model = fit(&data, &cfg)?;
            write_file(&out, &serialize_model(&model))?;
            println!(
                "bases {}\nr_squared {}",
                model.num_bases(),
                titl_mars::fit::r_squared(&model, &data)
            );
            Ok(0)
        }
        Command::Solve {
            model,
            sense,
            gap,
            time_limit,
            node_limit,
            branching,
            seed,
        } => {
            let model = load_model(&model)?;
            if !(time_limit > 0.0) {
                return Err(Error::Input("time limit must be positive".into()));
            }
            let cfg = SolverConfig {
                gap,
                time_limit: Duration::from_secs_f64(time_limit),
                node_limit,
                branching: match branching {
                    BranchArg::Priority => BranchRule::Priority,
                    BranchArg::Spatial => BranchRule::Spatial,
                },
                seed,
            };
            let sol = solve(&model, sense.into(), &cfg)?;
            print!("{}", sol.to_text());
            Ok(if sol.status == SolveStatus::Incomplete { 3 } else { 0 })
        }
        Command::Ga {
            model,
            sense,
            preset,
            seed,
            population,
            generations,
            crossover,
            mutation,
            bits,
        } => {
            let model = load_model(&model)?;
            let preset = match preset {
                PresetArg::Grefenstette => GaPreset::Grefenstette,
                PresetArg::Michalewicz => GaPreset::Michalewicz,
            };
            let base = preset.params(seed);
            let params = GaParams {
                population: population.unwrap_or(base.population),
                generations: generations.unwrap_or(base.generations),
                crossover: crossover.unwrap_or(base.crossover),
                mutation: mutation.unwrap_or(base.mutation),
                bits: bits.unwrap_or(base.bits),
                seed,
            };
            let sol = ga::optimize(&model, sense.into(), &params)?;
            print!("{}", sol.to_text());
            Ok(0)
        }
        Command::Windfarm {
            scenario,
            layouts,
            turbines,
            seed,
            cells,
            cell_width,
            rotor_radius,
            wake_decay,
            out,
        } => {
            let scenario = WindScenario::load(&scenario)?;
            let farm = FarmConfig {
                cells,
                cell_width,
                rotor_radius,
                wake_decay,
                turbines,
            };
            let grid = monte_carlo_power_grid(&farm, &scenario, layouts, seed)?;
            let data = grid.to_dataset()?;
            data.save(&out)?;
            println!("cells {}", data.len());
            Ok(0)
        }
        Command::Bench {
            spec,
            out_dir,
            format,
            threads,
        } => {
            let mut spec = BenchSpec::load(&spec)?;
            if threads.is_some() {
                spec.threads = threads;
            }
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
                FormatArg::Md => Format::Markdown,
            };
            let (report, outcomes) = run_benchmark(&spec)?;
            for path in write_outputs(&report, &outcomes, &spec, &out_dir, format)? {
                println!("wrote {}", path.display());
            }
            Ok(if report.rows.iter().any(|r| r.incomplete) { 3 } else { 0 })
        }
        Command::Oracle { model, sense, cap } => {
            let model = load_model(&model)?;
            let sol = oracle_optimum(&model, sense.into(), &OracleConfig { vertex_cap: cap })?;
            print!("{}", sol.to_text());
            Ok(0)
        }
        Command::Miqp { model, sense } => {
            let model = load_model(&model)?;
            print!("{}", build_miqp(&model, sense.into()).to_text());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        eprintln!("internal error: {info}");
        std::process::exit(4);
    }));
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
