//! `vaoi`: command-line driver for the scheduling experiments.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vaoi_core::aoi;
use vaoi_core::dqn::{self, Checkpoint};
use vaoi_core::experiment::{self, Comparison, PolicySource, RunSummary, TOY_ZETA};
use vaoi_core::{build_scenario, Environment, ExperimentSpec, ScenarioConfig, SolverKind, Sweep};

/// Environment variable read for log filtering, e.g. `VAOI_LOG=debug`.
const LOG_ENV: &str = "VAOI_LOG";

#[derive(Parser)]
#[command(name = "vaoi", version, about = "AoI-aware unicast/multicast scheduling experiments")]
struct Cli {
    /// Scenario TOML; the five-vehicle example when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Base seed; replication k uses a seed mixed from (seed, k).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for trajectory logs and summaries.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// random, exhaustive, aco or dqn.
    #[arg(long, default_value = "exhaustive")]
    solver: SolverKind,
    /// AoI weight in (0, 1]; defaults to the config value.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Training episodes for the dqn solver.
    #[arg(long)]
    episodes: Option<usize>,
    /// Use a trained network instead of training per replication (dqn only).
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario with one solver.
    Run(Common),
    /// Repeat a run over several AoI weights.
    SweepZeta {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
        zetas: Vec<f64>,
    },
    /// Repeat a run over random demand matrices with a fixed count per vehicle.
    SweepDemand {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8")]
        counts: Vec<usize>,
        /// Override the number of processes.
        #[arg(long)]
        processes: Option<usize>,
    },
    /// Run several solvers on common seeds.
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "random,exhaustive,aco")]
        solvers: Vec<SolverKind>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
        zetas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Train a Q-network and save a checkpoint plus its training log.
    TrainDqn {
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Greedy evaluation of a saved Q-network.
    EvalDqn {
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
    /// Bounds and the illustrative schedule of the five-vehicle example.
    ToyExample {
        #[arg(long, default_value_t = TOY_ZETA)]
        zeta: f64,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::from_path(path)?,
        None => ScenarioConfig::toy(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn spec_for(cli: &Cli, cfg: ScenarioConfig, c: &Common, sweep: Sweep) -> ExperimentSpec {
    let mut cfg = cfg;
    if let Some(n) = c.episodes {
        cfg.solver.dqn.episodes = n;
    }
    let mut spec = ExperimentSpec::new(cfg, c.solver);
    spec.zeta = c.zeta;
    spec.replications = c.reps;
    spec.sweep = sweep;
    spec.out_dir = cli.out.clone();
    if let Some(path) = &c.checkpoint {
        spec.policy = PolicySource::Checkpoint(path.clone());
    }
    spec
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Run(c) => print_summary(&experiment::run_experiment(&spec_for(&cli, cfg, c, Sweep::None))?),
        Command::SweepZeta { common, zetas } => {
            print_summary(&experiment::run_experiment(&spec_for(&cli, cfg, common, Sweep::Zeta(zetas.clone())))?)
        }
        Command::SweepDemand { common, counts, processes } => {
            let mut cfg = cfg;
            if let Some(f) = processes {
                cfg.processes = *f;
                cfg.demand = None;
            }
            print_summary(&experiment::run_experiment(&spec_for(&cli, cfg, common, Sweep::PerVehicleDemand(counts.clone())))?)
        }
        Command::Compare { solvers, zetas, reps, episodes } => {
            let common = Common { solver: solvers.first().copied().unwrap_or(SolverKind::Random), zeta: None, reps: *reps, episodes: *episodes, checkpoint: None };
            let spec = spec_for(&cli, cfg, &common, Sweep::Zeta(zetas.clone()));
            print_comparison(&experiment::compare_solvers(&spec, solvers)?)
        }
        Command::TrainDqn { zeta, episodes } => train(&cli, cfg, *zeta, *episodes),
        Command::EvalDqn { checkpoint, zeta, reps } => {
            let common = Common { solver: SolverKind::Dqn, zeta: *zeta, reps: *reps, episodes: None, checkpoint: Some(checkpoint.clone()) };
            print_summary(&experiment::run_experiment(&spec_for(&cli, cfg, &common, Sweep::None))?)
        }
        Command::ToyExample { zeta } => toy(&cli, cfg, *zeta),
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn train(cli: &Cli, mut cfg: ScenarioConfig, zeta: Option<f64>, episodes: Option<usize>) -> Result<()> {
    if let Some(n) = episodes {
        cfg.solver.dqn.episodes = n;
    }
    let zeta = zeta.unwrap_or(cfg.solver.zeta);
    let env = Environment::new(build_scenario(&cfg)?)?;
    let agent = dqn::train_agent(&env, zeta, cfg.solver.nu, &cfg.solver.dqn, cfg.seed)?;
    let dir = out_dir(cli)?;
    let ck_path = dir.join("checkpoint.json");
    Checkpoint::new(agent.net.clone(), zeta, cfg.seed).save(&ck_path)?;
    dqn::write_training_log(&dir.join("training_log.csv"), &agent.log)?;
    let greedy = dqn::greedy_rollout(&agent.net, &env, zeta)?;
    println!("episodes {}", agent.log.len());
    println!("greedy objective {:.6}", greedy.breakdown.value);
    println!("checkpoint {}", ck_path.display());
    Ok(())
}

fn toy(cli: &Cli, cfg: ScenarioConfig, zeta: f64) -> Result<()> {
    let env = Environment::new(build_scenario(&cfg)?)?;
    let s = &env.scenario;
    if s.vehicles != 5 || s.processes != 4 {
        bail!("toy-example needs the five-vehicle, four-process example scenario");
    }
    let (lo, hi) = env.aoi_bounds();
    let lo_slots = (0..s.vehicles).map(|i| aoi::lower_bound_slots(s.demand.count(i), s.slots)).sum::<u64>();
    let hi_slots = (0..s.vehicles).map(|i| aoi::upper_bound_slots(s.demand.count(i), s.slots)).sum::<u64>();
    println!("horizon {} slots, delta {} s", s.slots, s.slot_duration);
    println!("upper bound {hi_slots}/{} s = {hi:.4} s", s.slots);
    println!("lower bound {lo_slots}/{} s = {lo:.4} s", s.slots);
    let r = experiment::toy_replay(&env, zeta, cfg.solver.slot_score)?;
    println!("illustrative schedule at zeta {zeta}:");
    for rec in &r.records {
        println!(
            "  t={} mu={:?} power={:.4} W delivered={:?}",
            rec.t,
            rec.assignment.labels(),
            rec.total_power(),
            rec.success.iter().map(|&b| u8::from(b)).collect::<Vec<_>>()
        );
    }
    println!("average AoI {:.4} s, average power {:.4} W, objective {:.6}", r.breakdown.avg_aoi, r.breakdown.avg_power, r.breakdown.value);
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir)?;
        experiment::write_trajectory(&dir.join("toy_schedule.csv"), s, &r.records)?;
    }
    Ok(())
}

fn print_summary(s: &RunSummary) -> Result<()> {
    println!("solver,zeta,perVehicleDemand,reps,objective_mean,objective_std,aoi_term_mean,power_term_mean,avg_aoi_mean,avg_power_mean");
    for g in &s.groups {
        println!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.4},{:.4}",
            g.solver,
            g.zeta,
            g.per_vehicle_demand.map_or(String::new(), |n| n.to_string()),
            g.replications,
            g.objective.mean,
            g.objective.std,
            g.aoi_term.mean,
            g.power_term.mean,
            g.avg_aoi.mean,
            g.avg_power.mean
        );
    }
    Ok(())
}

fn print_comparison(c: &Comparison) -> Result<()> {
    print!("{}", experiment::comparison_csv(c));
    Ok(())
}
