//! Command-line front end. Task indices in every file and output are 1-based.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use offload_core::oracle::{self, GridOptions, PowerOracle};
use offload_core::{
    alternate, delay, flowshop, power, AltMinConfig, Instance, ObjectiveValue, PowerAllocation,
    Schedule, SolverOptions, TaskSpec,
};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::experiment::{self, Fig2Params, Fig3Params, Fig4Params};
use crate::generate::{generate_instance, InstanceSpec};
use crate::validate::{self, Sizes};

#[derive(Debug, Parser)]
#[command(
    name = "offload",
    version,
    about = "Task upload scheduling and power allocation"
)]
struct Cli {
    /// JSON configuration file; missing keys take the reference values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicate count for experiments.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Output directory for experiment files.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Energy weight in s/J (overrides the config).
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Johnson order for an instance and fixed powers.
    Schedule {
        /// Instance JSON with a `tasks` array of `d_bits` and `c_cycles_per_bit`.
        #[arg(long)]
        instance: PathBuf,
        /// JSON file with `powers_w`; peak power if omitted.
        #[arg(long)]
        powers: Option<PathBuf>,
    },
    /// Optimal powers for an instance and a fixed order.
    Power {
        /// Instance JSON with a `tasks` array of `d_bits` and `c_cycles_per_bit`.
        #[arg(long)]
        instance: PathBuf,
        /// JSON file with a 1-based `sigma` array.
        #[arg(long)]
        sigma: PathBuf,
    },
    /// Joint order and powers by alternating minimization.
    Solve {
        /// Instance JSON with a `tasks` array of `d_bits` and `c_cycles_per_bit`.
        #[arg(long)]
        instance: PathBuf,
    },
    /// Exhaustive reference on a small instance.
    Oracle(OracleArgs),
    /// Monte Carlo experiment writing `<out>/<name>.csv` and `.meta.json`.
    Experiment {
        #[arg(value_enum)]
        which: Figure,
    },
    /// Runs the invariant and reproduction checks.
    Validate {
        /// Use the full acceptance counts instead of the quick ones.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Instance JSON with a `tasks` array of `d_bits` and `c_cycles_per_bit`.
    #[arg(long, conflicts_with = "n", required_unless_present = "n")]
    instance: Option<PathBuf>,
    /// Generate a random instance of this size from the config and seed.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value_t = OracleKind::Joint)]
    kind: OracleKind,
    /// Grid points per dimension for the joint search with N <= 3.
    #[arg(long, default_value_t = 100)]
    grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    /// Every order at peak power, minimizing the makespan.
    Schedule,
    /// Every order with its optimal powers, minimizing the weighted objective.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRow {
    pub d_bits: f64,
    pub c_cycles_per_bit: f64,
}

/// Instance file: `{"tasks": [{"d_bits": .., "c_cycles_per_bit": ..}, ..]}`.
/// Channel and server settings come from the config.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub tasks: Vec<TaskRow>,
}

#[derive(Debug, Deserialize)]
struct PowersFile {
    powers_w: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct SigmaFile {
    sigma: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct ObjectiveOut {
    delay_s: f64,
    energy_j: f64,
    eta: f64,
    weighted: f64,
}

impl From<ObjectiveValue> for ObjectiveOut {
    fn from(v: ObjectiveValue) -> Self {
        Self {
            delay_s: v.delay_s,
            energy_j: v.energy_j,
            eta: v.eta,
            weighted: v.weighted,
        }
    }
}

fn one_based(order: &[usize]) -> Vec<usize> {
    order.iter().map(|i| i + 1).collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path, cfg: &Config) -> Result<Instance> {
    let file: InstanceFile = read_json(path)?;
    let tasks = file
        .tasks
        .iter()
        .map(|t| TaskSpec::new(t.d_bits, t.c_cycles_per_bit))
        .collect::<offload_core::Result<Vec<_>>>()?;
    Ok(Instance::new(tasks, cfg.channel()?, cfg.server()?)?)
}

fn load_sigma(path: &Path, n: usize) -> Result<Schedule> {
    let file: SigmaFile = read_json(path)?;
    if file.sigma.len() != n || file.sigma.contains(&0) {
        return Err(HarnessError::Config(format!(
            "{}: sigma must be a permutation of 1..={n}",
            path.display()
        )));
    }
    Schedule::new(file.sigma.iter().map(|i| i - 1).collect()).map_err(|_| {
        HarnessError::Config(format!("{}: sigma is not a permutation", path.display()))
    })
}

fn emit<W: Write>(out: &mut W, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    writeln!(out, "{text}").map_err(|e| HarnessError::io("<stdout>", e))
}

fn execute<W: Write>(cli: Cli, out: &mut W) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(eta) = cli.eta {
        cfg.eta = eta;
    }
    cfg.validate()?;
    let eta = cfg.eta;

    match cli.command {
        Command::Schedule { instance, powers } => {
            let inst = load_instance(&instance, &cfg)?;
            let p = match powers {
                Some(path) => {
                    PowerAllocation::new(read_json::<PowersFile>(&path)?.powers_w, inst.channel())?
                }
                None => PowerAllocation::full(inst.len(), inst.channel()),
            };
            let sigma = flowshop::johnson_schedule(&inst, &p)?;
            let part = flowshop::partition(&inst, &p)?;
            emit(
                out,
                &serde_json::json!({
                    "sigma": one_based(sigma.order()),
                    "makespan_s": delay::makespan(&inst, &sigma, &p)?,
                    "set_f": one_based(&part.set_f),
                    "set_g": one_based(&part.set_g),
                }),
            )
        }
        Command::Power { instance, sigma } => {
            let inst = load_instance(&instance, &cfg)?;
            let sigma = load_sigma(&sigma, inst.len())?;
            let prob = power::build_p3(&inst, &sigma, eta)?;
            let sol = power::solve_p3(&prob, &SolverOptions::default())?;
            let p = sol.power_allocation(&prob)?;
            emit(
                out,
                &serde_json::json!({
                    "sigma": one_based(sigma.order()),
                    "powers_w": p.powers(),
                    "objective": ObjectiveOut::from(delay::objective(&inst, &sigma, &p, eta)?),
                    "converged": sol.converged,
                    "iterations": sol.iterations,
                    "kkt_residual": sol.kkt_residual,
                    "upper_bound_raises": sol.upper_bound_raises,
                }),
            )
        }
        Command::Solve { instance } => {
            let inst = load_instance(&instance, &cfg)?;
            let report = alternate(&inst, eta, &AltMinConfig::default())?;
            let trace: Vec<ObjectiveOut> =
                report.objective_trace.iter().map(|&v| v.into()).collect();
            emit(
                out,
                &serde_json::json!({
                    "sigma": one_based(report.final_sigma.order()),
                    "powers_w": report.final_p.powers(),
                    "objective": ObjectiveOut::from(report.final_objective()),
                    "objective_trace": trace,
                    "iterations_used": report.iterations_used,
                    "converged": report.converged,
                }),
            )
        }
        Command::Oracle(args) => {
            let inst = match (&args.instance, args.n) {
                (Some(path), _) => load_instance(path, &cfg)?,
                (None, Some(n)) => {
                    let mut spec = InstanceSpec::from_config(&cfg, cfg.seed)?;
                    spec.n_tasks = n;
                    generate_instance(&spec)?
                }
                (None, None) => unreachable!("clap requires one of --instance and --n"),
            };
            let result = match args.kind {
                OracleKind::Schedule => {
                    let full = PowerAllocation::full(inst.len(), inst.channel());
                    oracle::brute_force_schedule(&inst, &full)?
                }
                OracleKind::Joint => {
                    let inner = if inst.len() <= oracle::GRID_CAP {
                        PowerOracle::Grid(GridOptions::new(args.grid_points))
                    } else {
                        PowerOracle::Solver(SolverOptions::default())
                    };
                    oracle::joint_brute_force(&inst, eta, &inner)?
                }
            };
            emit(
                out,
                &serde_json::json!({
                    "kind": format!("{:?}", args.kind).to_lowercase(),
                    "best_value": result.best_value,
                    "best_sigma": one_based(result.best_sigma.order()),
                    "best_powers_w": result.best_p.powers(),
                    "evaluations": result.evaluations,
                }),
            )
        }
        Command::Experiment { which } => {
            let seed = cfg.seed;
            let result = match which {
                Figure::Fig2 => {
                    let mut params = Fig2Params::defaults(&cfg);
                    params.replicates = cli.replicates.unwrap_or(params.replicates);
                    experiment::run_fig2(&cfg, &params, seed)?
                }
                Figure::Fig3 => {
                    let mut params = Fig3Params::default();
                    params.replicates = cli.replicates.unwrap_or(params.replicates);
                    experiment::run_fig3(&cfg, &params, seed)?
                }
                Figure::Fig4 => {
                    let mut params = Fig4Params::default();
                    params.replicates = cli.replicates.unwrap_or(params.replicates);
                    experiment::run_fig4(&cfg, &params, seed)?
                }
            };
            let (csv, meta) = result.write_to_dir(&cli.out)?;
            emit(out, &serde_json::json!({ "csv": csv, "meta": meta }))
        }
        Command::Validate { full } => {
            let sizes = if full { Sizes::FULL } else { Sizes::QUICK };
            let checks = validate::run_all(&cfg, &sizes, cfg.seed)?;
            let failed: Vec<String> = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.clone())
                .collect();
            emit(
                out,
                &serde_json::json!({ "passed": failed.is_empty(), "checks": checks }),
            )?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(HarnessError::Validation(failed))
            }
        }
    }
}

fn error_object(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Failures print `{"error": {"kind", "message"}}` to `err`.
pub fn run<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let _ = writeln!(err, "{}", error_object("usage", e.to_string().trim()));
            return 2;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", error_object(e.kind(), &e.to_string()));
            e.exit_code()
        }
    }
}
