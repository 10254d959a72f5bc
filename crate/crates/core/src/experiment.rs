//! Seeded experiment orchestration: replications, sweeps, solver comparisons,
//! trajectory logs and summaries.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aoi::{self, check_zeta, ObjectiveBreakdown};
use crate::config::SolverConfig;
use crate::dqn;
use crate::env::{Environment, SlotRecord};
use crate::error::{Error, Result};
use crate::rng;
use crate::scenario::{build_scenario, RandomDemand, Scenario, ScenarioConfig};
use crate::assignment::Assignment;
use crate::sched::{self, SlotScore, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Random,
    Exhaustive,
    Aco,
    Dqn,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Random, SolverKind::Exhaustive, SolverKind::Aco, SolverKind::Dqn];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Random => "random",
            SolverKind::Exhaustive => "exhaustive",
            SolverKind::Aco => "aco",
            SolverKind::Dqn => "dqn",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown solver {s:?} (expected random, exhaustive, aco or dqn)")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "axis", content = "values")]
pub enum Sweep {
    #[default]
    None,
    Zeta(Vec<f64>),
    PerVehicleDemand(Vec<usize>),
}

/// Where a DQN policy comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    /// Train a fresh agent on every replication's scenario.
    Train,
    Checkpoint(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config: ScenarioConfig,
    pub solver: SolverKind,
    /// Used when the sweep is not over ζ; defaults to the config's value.
    pub zeta: Option<f64>,
    pub replications: usize,
    pub base_seed: u64,
    pub sweep: Sweep,
    pub out_dir: Option<PathBuf>,
    pub policy: PolicySource,
}

impl ExperimentSpec {
    pub fn new(config: ScenarioConfig, solver: SolverKind) -> Self {
        let base_seed = config.seed;
        Self {
            config,
            solver,
            zeta: None,
            replications: 1,
            base_seed,
            sweep: Sweep::None,
            out_dir: None,
            policy: PolicySource::Train,
        }
    }

    pub fn zeta(&self) -> f64 {
        self.zeta.unwrap_or(self.config.solver.zeta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be ≥ 1".into()));
        }
        check_zeta(self.zeta())?;
        match &self.sweep {
            Sweep::Zeta(zs) => {
                if zs.is_empty() {
                    return Err(Error::InvalidParameter("empty zeta sweep".into()));
                }
                zs.iter().try_for_each(|&z| check_zeta(z))
            }
            Sweep::PerVehicleDemand(ns) => {
                if ns.is_empty() {
                    return Err(Error::InvalidParameter("empty demand sweep".into()));
                }
                match ns.iter().find(|&&n| n == 0 || n > self.config.processes) {
                    Some(n) => Err(Error::InvalidParameter(format!("per-vehicle demand {n} outside 1..={}", self.config.processes))),
                    None => Ok(()),
                }
            }
            Sweep::None => Ok(()),
        }
    }

    /// `(ζ, demand count)` grid points in sweep order.
    fn points(&self) -> Vec<(f64, Option<usize>)> {
        match &self.sweep {
            Sweep::None => vec![(self.zeta(), None)],
            Sweep::Zeta(zs) => zs.iter().map(|&z| (z, None)).collect(),
            Sweep::PerVehicleDemand(ns) => ns.iter().map(|&n| (self.zeta(), Some(n))).collect(),
        }
    }

    /// Scenario config of replication `k` at the given demand count.
    pub fn replication_config(&self, k: usize, demand: Option<usize>) -> ScenarioConfig {
        let mut cfg = self.config.clone();
        cfg.seed = rng::derive_seed(self.base_seed, k as u64);
        if let Some(n) = demand {
            cfg.demand = None;
            cfg.random_demand = Some(RandomDemand { per_vehicle_count: n });
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub replication: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub zeta: f64,
    pub per_vehicle_demand: Option<usize>,
    pub aoi_term: f64,
    pub power_term: f64,
    pub objective: f64,
    pub avg_aoi: f64,
    pub avg_power: f64,
    pub wall_time_s: f64,
    pub trajectory: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GroupSummary {
    pub solver: SolverKind,
    pub zeta: f64,
    pub per_vehicle_demand: Option<usize>,
    pub replications: usize,
    pub objective: Stat,
    pub aoi_term: Stat,
    pub power_term: Stat,
    pub avg_aoi: Stat,
    pub avg_power: Stat,
}

impl GroupSummary {
    fn of(runs: &[RunRecord]) -> Self {
        let first = &runs[0];
        Self {
            solver: first.solver,
            zeta: first.zeta,
            per_vehicle_demand: first.per_vehicle_demand,
            replications: runs.len(),
            objective: Stat::of(runs.iter().map(|r| r.objective)),
            aoi_term: Stat::of(runs.iter().map(|r| r.aoi_term)),
            power_term: Stat::of(runs.iter().map(|r| r.power_term)),
            avg_aoi: Stat::of(runs.iter().map(|r| r.avg_aoi)),
            avg_power: Stat::of(runs.iter().map(|r| r.avg_power)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub groups: Vec<GroupSummary>,
    pub runs: Vec<RunRecord>,
}

/// Solves one environment with the chosen solver. Solver seeds derive from
/// the scenario seed so every solver sees the same instance.
pub fn solve(env: &Environment, solver: SolverKind, zeta: f64, cfg: &SolverConfig, policy: &PolicySource) -> Result<SolveResult> {
    let s = &env.scenario;
    match solver {
        SolverKind::Random => {
            let mut r = rng::stream(s.seed, rng::STREAM_RANDOM_POLICY);
            sched::random_policy(env, zeta, s.seed, &mut r)
        }
        SolverKind::Exhaustive => sched::exhaustive_policy(env, zeta, cfg.slot_score),
        SolverKind::Aco => sched::aco_solve(env, zeta, &cfg.aco, s.seed),
        SolverKind::Dqn => {
            let net = match policy {
                PolicySource::Train => dqn::train_agent(env, zeta, cfg.nu, &cfg.dqn, s.seed)?.net,
                PolicySource::Checkpoint(path) => dqn::Checkpoint::load(path)?.network,
            };
            dqn::greedy_rollout(&net, env, zeta)
        }
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunSummary> {
    spec.validate()?;
    if let Some(dir) = &spec.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut runs = Vec::new();
    let mut groups = Vec::new();
    for (zeta, demand) in spec.points() {
        let one = |k: usize| -> Result<RunRecord> {
            let cfg = spec.replication_config(k, demand);
            let started = Instant::now();
            let env = Environment::new(build_scenario(&cfg)?)?;
            let result = solve(&env, spec.solver, zeta, &cfg.solver, &spec.policy)?;
            let wall_time_s = started.elapsed().as_secs_f64();
            let trajectory = match &spec.out_dir {
                Some(dir) => {
                    let name = trajectory_name(spec.solver, zeta, demand, k);
                    write_trajectory(&dir.join(&name), &env.scenario, &result.records)?;
                    Some(name)
                }
                None => None,
            };
            log::info!("{} zeta {zeta} rep {k}: objective {:.6}", spec.solver, result.breakdown.value);
            Ok(record(k, cfg.seed, spec.solver, demand, &result.breakdown, wall_time_s, trajectory))
        };
        // DQN training is sequential by contract; everything else fans out.
        let point: Vec<RunRecord> = if spec.solver == SolverKind::Dqn {
            (0..spec.replications).map(one).collect::<Result<_>>()?
        } else {
            (0..spec.replications).into_par_iter().map(one).collect::<Result<_>>()?
        };
        groups.push(GroupSummary::of(&point));
        runs.extend(point);
    }
    let summary = RunSummary { groups, runs };
    if let Some(dir) = &spec.out_dir {
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(summary)
}

fn record(k: usize, seed: u64, solver: SolverKind, demand: Option<usize>, b: &ObjectiveBreakdown, wall_time_s: f64, trajectory: Option<String>) -> RunRecord {
    RunRecord {
        replication: k,
        seed,
        solver,
        zeta: b.zeta,
        per_vehicle_demand: demand,
        aoi_term: b.aoi_term,
        power_term: b.power_term,
        objective: b.value,
        avg_aoi: b.avg_aoi,
        avg_power: b.avg_power,
        wall_time_s,
        trajectory,
    }
}

fn trajectory_name(solver: SolverKind, zeta: f64, demand: Option<usize>, k: usize) -> String {
    match demand {
        Some(n) => format!("traj_{solver}_z{zeta}_d{n}_r{k}.csv"),
        None => format!("traj_{solver}_z{zeta}_r{k}.csv"),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Twelve significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn trajectory_header(s: &Scenario) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=s.vehicles).map(|i| format!("mu_{i}")));
    cols.extend((1..=s.processes).map(|l| format!("p_{l}")));
    cols.extend((1..=s.vehicles).map(|i| format!("success_{i}")));
    cols.push("weightedAgeSum".into());
    cols.join(",")
}

pub fn trajectory_csv(s: &Scenario, records: &[SlotRecord]) -> String {
    let mut out = trajectory_header(s);
    out.push('\n');
    for r in records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.assignment.labels().iter().map(usize::to_string));
        row.extend(r.powers.iter().map(|&p| fmt_sig(p)));
        row.extend(r.success.iter().map(|&ok| u8::from(ok).to_string()));
        row.push(fmt_sig(r.weighted_age_sum));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_trajectory(path: &Path, s: &Scenario, records: &[SlotRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(trajectory_csv(s, records).as_bytes())?;
    Ok(())
}

/// Recomputes the objective from a trajectory log alone: average AoI from the
/// `weightedAgeSum` column, average power from the `p_l` columns.
pub fn objective_from_log(csv: &str, s: &Scenario, zeta: f64) -> Result<ObjectiveBreakdown> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty trajectory log".into()))?;
    if header != trajectory_header(s) {
        return Err(Error::Config(format!("trajectory header {header:?} does not match the scenario")));
    }
    let power_cols = 1 + s.vehicles..1 + s.vehicles + s.processes;
    let age_col = 1 + 2 * s.vehicles + s.processes;
    let (mut age_sum, mut power_sum, mut rows) = (0.0, 0.0, 0usize);
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let num = |k: usize| -> Result<f64> {
            fields
                .get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config(format!("trajectory row {}: bad column {k}", n + 2)))
        };
        for k in power_cols.clone() {
            power_sum += num(k)?;
        }
        age_sum += num(age_col)?;
        rows += 1;
    }
    if rows != s.slots {
        return Err(Error::HorizonMismatch { expected: s.slots, actual: rows });
    }
    let horizon = s.slots as f64;
    aoi::objective(
        age_sum / horizon,
        power_sum / horizon,
        aoi::aoi_lower_bound(&s.demand, s.slots, s.slot_duration),
        aoi::aoi_upper_bound(&s.demand, s.slots, s.slot_duration),
        s.max_power,
        zeta,
    )
}

/// Weight used when replaying the illustrative five-vehicle schedule.
pub const TOY_ZETA: f64 = 0.7;

/// Opening slots of the illustrative schedule: idle; broadcast of process 1;
/// process 3 to vehicle 2, process 4 to vehicles 1 and 3, process 2 to
/// vehicles 4 and 5.
pub fn toy_prefix() -> Vec<Assignment> {
    vec![
        Assignment::from_labels(&[0, 0, 0, 0, 0]),
        Assignment::from_labels(&[1, 1, 1, 1, 1]),
        Assignment::from_labels(&[4, 3, 4, 2, 2]),
    ]
}

/// The illustrative schedule: [`toy_prefix`], then per-slot exhaustive search.
pub fn toy_replay(env: &Environment, zeta: f64, score: SlotScore) -> Result<SolveResult> {
    sched::exhaustive_policy_from(env, zeta, score, &toy_prefix())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub zeta: f64,
    pub per_vehicle_demand: Option<usize>,
    /// Mean objective per solver, in the requested solver order.
    pub mean_objective: Vec<f64>,
    /// `(mean − mean_reference) / mean_reference` per solver.
    pub relative_gap: Vec<f64>,
    /// `win_rate[a][b]`: share of seeds where solver `a` scores strictly below `b`.
    pub win_rate: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    pub solvers: Vec<SolverKind>,
    /// Gap reference: exhaustive if present, else the first solver.
    pub reference: SolverKind,
    pub rows: Vec<ComparisonRow>,
    pub runs: Vec<RunRecord>,
}

/// Runs every solver on common seeds at each sweep point.
pub fn compare_solvers(spec: &ExperimentSpec, solvers: &[SolverKind]) -> Result<Comparison> {
    if solvers.len() < 2 {
        return Err(Error::InvalidParameter("need ≥ 2 solvers".into()));
    }
    let mut per_solver = Vec::with_capacity(solvers.len());
    for &solver in solvers {
        let sub = ExperimentSpec { solver, out_dir: spec.out_dir.clone(), ..spec.clone() };
        per_solver.push(run_experiment(&sub)?);
    }
    let reference = if solvers.contains(&SolverKind::Exhaustive) { SolverKind::Exhaustive } else { solvers[0] };
    let ref_idx = solvers.iter().position(|&s| s == reference).expect("reference is one of the solvers");
    let reps = spec.replications;
    let rows = spec
        .points()
        .iter()
        .enumerate()
        .map(|(p, &(zeta, demand))| {
            let objs: Vec<&[RunRecord]> = per_solver.iter().map(|s| &s.runs[p * reps..(p + 1) * reps]).collect();
            let mean_objective: Vec<f64> = per_solver.iter().map(|s| s.groups[p].objective.mean).collect();
            let base = mean_objective[ref_idx];
            let relative_gap = mean_objective.iter().map(|m| (m - base) / base).collect();
            let win_rate = objs
                .iter()
                .map(|a| {
                    objs.iter()
                        .map(|b| a.iter().zip(b.iter()).filter(|(x, y)| x.objective < y.objective).count() as f64 / reps as f64)
                        .collect()
                })
                .collect();
            ComparisonRow { zeta, per_vehicle_demand: demand, mean_objective, relative_gap, win_rate }
        })
        .collect();
    let comparison = Comparison {
        solvers: solvers.to_vec(),
        reference,
        rows,
        runs: per_solver.into_iter().flat_map(|s| s.runs).collect(),
    };
    if let Some(dir) = &spec.out_dir {
        write_json(&dir.join("comparison.json"), &comparison)?;
        std::fs::write(dir.join("comparison.csv"), comparison_csv(&comparison))?;
    }
    Ok(comparison)
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut cols = vec!["zeta".to_string(), "perVehicleDemand".to_string()];
    cols.extend(c.solvers.iter().map(|s| format!("mean_{s}")));
    cols.extend(c.solvers.iter().map(|s| format!("gap_{s}")));
    let mut out = cols.join(",") + "\n";
    for r in &c.rows {
        let mut row = vec![fmt_sig(r.zeta), r.per_vehicle_demand.map_or(String::new(), |n| n.to_string())];
        row.extend(r.mean_objective.iter().map(|&m| fmt_sig(m)));
        row.extend(r.relative_gap.iter().map(|&g| fmt_sig(g)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
