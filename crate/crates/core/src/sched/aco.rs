//! Ant colony search over whole-horizon schedules.
//!
//! Each ant walks the `T` slots; at every slot it draws one choice per
//! vehicle with probability proportional to `τ^ι₁·ϱ^ι₂` against a constant
//! idle weight of one, where `ϱ_il = r_il·Δ_il/t` favours stale demanded
//! processes. Powers come from the minimum-power LP. After each colony the
//! two lowest-objective ants reinforce their choices by `exp(−O)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aoi::{check_zeta, AoiState};
use crate::assignment::Assignment;
use crate::env::{Environment, SlotRecord};
use crate::error::{Error, Result};
use crate::rng::{self, STREAM_ACO};

use super::{SolveResult, SolverMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct AcoParams {
    /// Ants per colony.
    pub ants: usize,
    /// Maximum number of colonies.
    pub colonies: usize,
    /// Evaporation coefficient.
    pub kappa: f64,
    /// Pheromone exponent.
    pub iota1: f64,
    /// Attractiveness exponent.
    pub iota2: f64,
    /// Stop once a colony improves the best objective by less than this.
    pub epsilon0: f64,
    pub initial_pheromone: f64,
}

impl Default for AcoParams {
    fn default() -> Self {
        Self {
            ants: 100,
            colonies: 400,
            kappa: 0.1,
            iota1: 1.0,
            iota2: 1.0,
            epsilon0: 0.01,
            initial_pheromone: 1.0,
        }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.ants < 2 {
            return bad("ACO needs at least two ants");
        }
        if self.colonies < 1 {
            return bad("ACO needs at least one colony");
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad("evaporation coefficient must lie in (0, 1)");
        }
        if !(self.initial_pheromone >= 0.0) || !(self.epsilon0 >= 0.0) {
            return bad("initial pheromone and epsilon0 must be nonnegative");
        }
        Ok(())
    }
}

/// Choice probabilities for one vehicle, index 0 being "no update":
/// `π_l = w_l / (1 + Σ w)`, `π_0 = 1 − Σ π_l`, with `w_l = τ_l^ι₁ ϱ_l^ι₂`.
pub fn choice_probabilities(tau: &[f64], attractiveness: &[f64], iota1: f64, iota2: f64) -> Vec<f64> {
    let weights: Vec<f64> = tau
        .iter()
        .zip(attractiveness)
        .map(|(&t, &r)| if t == 0.0 || r == 0.0 { 0.0 } else { t.powf(iota1) * r.powf(iota2) })
        .collect();
    let denom = 1.0 + weights.iter().sum::<f64>();
    let mut probs = Vec::with_capacity(weights.len() + 1);
    let rest: Vec<f64> = weights.iter().map(|w| w / denom).collect();
    probs.push((1.0 - rest.iter().sum::<f64>()).max(0.0));
    probs.extend(rest);
    probs
}

/// Inverse-CDF draw; returns an index into `probs`.
fn sample<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Trail intensities indexed by slot, vehicle and process.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneTable {
    slots: usize,
    vehicles: usize,
    processes: usize,
    tau: Vec<f64>,
    pub kappa: f64,
    pub iota1: f64,
    pub iota2: f64,
}

impl PheromoneTable {
    pub fn new(slots: usize, vehicles: usize, processes: usize, initial: f64, params: &AcoParams) -> Self {
        Self {
            slots,
            vehicles,
            processes,
            tau: vec![initial; slots * vehicles * processes],
            kappa: params.kappa,
            iota1: params.iota1,
            iota2: params.iota2,
        }
    }

    fn offset(&self, t: usize, i: usize) -> usize {
        ((t - 1) * self.vehicles + i) * self.processes
    }

    /// `τ` of vehicle `i` at 1-based slot `t`, one entry per process.
    pub fn row(&self, t: usize, i: usize) -> &[f64] {
        let o = self.offset(t, i);
        &self.tau[o..o + self.processes]
    }

    pub fn get(&self, t: usize, i: usize, l: usize) -> f64 {
        self.row(t, i)[l]
    }

    pub fn max(&self) -> f64 {
        self.tau.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.tau.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// One evaporation, then every depositing tour adds `deposit` on the
    /// cells it chose.
    pub fn update(&mut self, deposits: &[(&[Assignment], f64)]) {
        let keep = 1.0 - self.kappa;
        self.tau.iter_mut().for_each(|v| *v *= keep);
        for (tour, amount) in deposits {
            if *amount == 0.0 {
                continue;
            }
            for (k, a) in tour.iter().enumerate().take(self.slots) {
                for (i, c) in a.choice.iter().enumerate() {
                    if let Some(l) = c {
                        let o = self.offset(k + 1, i) + l;
                        self.tau[o] += amount;
                    }
                }
            }
        }
    }
}

/// One ant's tour.
#[derive(Debug, Clone)]
pub struct AntTour {
    pub assignments: Vec<Assignment>,
    pub records: Vec<SlotRecord>,
    pub state: AoiState,
    pub objective: f64,
    /// False if any drawn assignment had no power allocation within budget.
    pub within_budget: bool,
}

impl AntTour {
    /// `exp(−O)` if the tour kept to the budget, else zero.
    pub fn deposit(&self) -> f64 {
        if self.within_budget {
            (-self.objective).exp()
        } else {
            0.0
        }
    }
}

/// Walks one tour. Infeasible draws execute as idle slots.
pub fn construct_tour<R: Rng + ?Sized>(env: &Environment, table: &PheromoneTable, zeta: f64, rng: &mut R) -> Result<AntTour> {
    let s = &env.scenario;
    let mut state = AoiState::for_scenario(s);
    let mut assignments = Vec::with_capacity(s.slots);
    let mut records = Vec::with_capacity(s.slots);
    let mut within_budget = true;
    let mut attract = vec![0.0; s.processes];
    for t in 1..=s.slots {
        let choice = (0..s.vehicles)
            .map(|i| {
                for (l, a) in attract.iter_mut().enumerate() {
                    *a = if s.demand.wants(i, l) { (state.age_slots(i, l) + 1) as f64 / t as f64 } else { 0.0 };
                }
                let probs = choice_probabilities(table.row(t, i), &attract, table.iota1, table.iota2);
                sample(&probs, rng).checked_sub(1)
            })
            .collect();
        let a = Assignment::new(choice);
        let (rec, feasible) = env.execute_min_power(&mut state, &a);
        within_budget &= feasible;
        assignments.push(a);
        records.push(rec);
    }
    let objective = env.objective(&state, &records, zeta)?.value;
    Ok(AntTour { assignments, records, state, objective, within_budget })
}

pub fn aco_solve(env: &Environment, zeta: f64, params: &AcoParams, seed: u64) -> Result<SolveResult> {
    check_zeta(zeta)?;
    params.validate()?;
    let s = &env.scenario;
    let mut table = PheromoneTable::new(s.slots, s.vehicles, s.processes, params.initial_pheromone, params);
    let mut best: Option<AntTour> = None;
    let mut best_value = f64::INFINITY;
    let mut previous = 0.0;
    let mut colonies = 0;
    while colonies < params.colonies && (best_value - previous).abs() >= params.epsilon0 {
        previous = best_value;
        let frozen = &table;
        let tours: Vec<AntTour> = (0..params.ants)
            .into_par_iter()
            .map(|a| {
                let mut r = rng::substream(seed, STREAM_ACO, colonies as u64, a as u64);
                construct_tour(env, frozen, zeta, &mut r)
            })
            .collect::<Result<_>>()?;
        colonies += 1;

        // Two lowest objectives, ties to the lower ant index.
        let mut order: Vec<usize> = (0..tours.len()).collect();
        order.sort_by(|&a, &b| tours[a].objective.total_cmp(&tours[b].objective).then(a.cmp(&b)));
        let (first, second) = (&tours[order[0]], &tours[order[1]]);
        table.update(&[
            (first.assignments.as_slice(), first.deposit()),
            (second.assignments.as_slice(), second.deposit()),
        ]);
        if first.objective < best_value {
            best_value = first.objective;
            best = Some(first.clone());
        }
        log::debug!("aco colony {colonies}: best {:.6} overall {:.6}", first.objective, best_value);
    }
    let best = best.expect("at least one colony runs");
    let meta = SolverMeta {
        solver: "aco".into(),
        seed,
        iterations: colonies * params.ants,
        colonies,
    };
    SolveResult::finish(env, &best.state, best.records, zeta, meta)
}
