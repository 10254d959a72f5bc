//! Per-slot exhaustive search over the joint action space.
//!
//! The objective is additive over slots: slot `t` contributes
//! `ζ·δ·A_t / (T·(Δmax − Δmin)) + (1−ζ)·P_t / (T·Pmax)`, where `A_t` is the
//! demand-weighted age sum after the slot and `P_t` its total power. Every
//! slot, all actions are evaluated at their minimum power and the cheapest is
//! executed. Three scores are available:
//!
//! - [`SlotScore::Myopic`]: the contribution of slot `t` alone.
//! - [`SlotScore::CarryForward`]: the post-slot age sum charged for the
//!   `T − t + 1` slots it stays in force if nothing else is delivered.
//! - [`SlotScore::Rollout`]: the exact cost of slots `t..=T` when the rest of
//!   the horizon is completed by the carry-forward rule.
//!
//! Power allocation depends only on the slot and the action, so it is solved
//! once per `(t, action)` pair and cached in a [`SlotTable`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aoi::{check_zeta, AoiState};
use crate::assignment::Assignment;
use crate::env::Environment;
use crate::error::Result;

use super::{ActionSpace, SolveResult, SolverMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotScore {
    #[default]
    Myopic,
    CarryForward,
    Rollout,
}

/// Minimum-power outcome of one action at one slot.
#[derive(Debug, Clone)]
pub struct SlotOption {
    pub index: usize,
    pub assignment: Assignment,
    pub powers: Vec<f64>,
    pub total_power: f64,
    pub success: Vec<bool>,
}

/// Feasible actions per slot, in action-index order.
#[derive(Debug, Clone)]
pub struct SlotTable {
    slots: Vec<Vec<SlotOption>>,
    /// Per slot, action index → position in `slots[t]`.
    lookup: Vec<Vec<Option<usize>>>,
}

impl SlotTable {
    pub fn new(env: &Environment, space: &ActionSpace) -> Self {
        let slots: Vec<Vec<SlotOption>> = (1..=env.slots())
            .map(|t| {
                (0..space.len())
                    .into_par_iter()
                    .filter_map(|index| {
                        let assignment = space.get(index);
                        let sol = env.solve_power(t, &assignment);
                        sol.feasible.then(|| {
                            let success = env.deliveries(t, &assignment, &sol.powers);
                            SlotOption {
                                index,
                                total_power: sol.total(),
                                powers: sol.powers,
                                success,
                                assignment,
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        let lookup = slots
            .iter()
            .map(|opts| {
                let mut pos = vec![None; space.len()];
                for (k, o) in opts.iter().enumerate() {
                    pos[o.index] = Some(k);
                }
                pos
            })
            .collect();
        Self { slots, lookup }
    }

    /// Minimum-power outcome of action `index` at slot `t`, if feasible.
    pub fn get(&self, t: usize, index: usize) -> Option<&SlotOption> {
        self.lookup[t - 1][index].map(|k| &self.slots[t - 1][k])
    }

    /// Feasible options at 1-based slot `t`.
    pub fn options(&self, t: usize) -> &[SlotOption] {
        &self.slots[t - 1]
    }
}

struct Costs {
    aoi_scale: f64,
    power_scale: f64,
    horizon: usize,
}

impl Costs {
    fn new(env: &Environment, zeta: f64) -> Self {
        let s = &env.scenario;
        let (lo, hi) = env.aoi_bounds();
        Self {
            aoi_scale: zeta * s.slot_duration / (s.slots as f64 * (hi - lo)),
            power_scale: (1.0 - zeta) / (s.slots as f64 * s.max_power),
            horizon: s.slots,
        }
    }

    /// Slot contribution with the age term weighted `weight` times.
    fn slot(&self, ages: u64, power: f64, weight: f64) -> f64 {
        self.aoi_scale * weight * ages as f64 + self.power_scale * power
    }
}

/// Option minimizing `score`, ties to the lowest action index.
fn argmin<'a, F: Fn(&SlotOption) -> f64>(options: &'a [SlotOption], score: F) -> Option<&'a SlotOption> {
    let mut best: Option<(&SlotOption, f64)> = None;
    for o in options {
        let v = score(o);
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((o, v));
        }
    }
    best.map(|(o, _)| o)
}

fn carry_forward_choice<'a>(env: &Environment, table: &'a SlotTable, costs: &Costs, state: &AoiState) -> Option<&'a SlotOption> {
    let t = state.slot() + 1;
    let weight = (costs.horizon - t + 1) as f64;
    let demand = &env.scenario.demand;
    argmin(table.options(t), |o| {
        let ages = state.step(demand, &o.assignment, &o.success).weighted_age_slots(demand);
        costs.slot(ages, o.total_power, weight)
    })
}

/// Exact cost of the remaining slots under the carry-forward rule.
fn carry_forward_completion(env: &Environment, table: &SlotTable, costs: &Costs, mut state: AoiState) -> f64 {
    let demand = &env.scenario.demand;
    let mut total = 0.0;
    while state.slot() < costs.horizon {
        let o = carry_forward_choice(env, table, costs, &state).expect("idle is always feasible");
        state.step_mut(demand, &o.assignment, &o.success);
        total += costs.slot(state.weighted_age_slots(demand), o.total_power, 1.0);
    }
    total
}

fn choose<'a>(env: &Environment, table: &'a SlotTable, costs: &Costs, state: &AoiState, mode: SlotScore) -> Option<&'a SlotOption> {
    let t = state.slot() + 1;
    let demand = &env.scenario.demand;
    match mode {
        SlotScore::Myopic => argmin(table.options(t), |o| {
            let ages = state.step(demand, &o.assignment, &o.success).weighted_age_slots(demand);
            costs.slot(ages, o.total_power, 1.0)
        }),
        SlotScore::CarryForward => carry_forward_choice(env, table, costs, state),
        SlotScore::Rollout => {
            let options = table.options(t);
            let scores: Vec<f64> = options
                .par_iter()
                .map(|o| {
                    let next = state.step(demand, &o.assignment, &o.success);
                    let now = costs.slot(next.weighted_age_slots(demand), o.total_power, 1.0);
                    now + carry_forward_completion(env, table, costs, next)
                })
                .collect();
            let mut best: Option<usize> = None;
            for (k, v) in scores.iter().enumerate() {
                if best.map_or(true, |b| *v < scores[b]) {
                    best = Some(k);
                }
            }
            best.map(|k| &options[k])
        }
    }
}

pub fn exhaustive_policy(env: &Environment, zeta: f64, mode: SlotScore) -> Result<SolveResult> {
    exhaustive_policy_from(env, zeta, mode, &[])
}

/// Runs `prefix` at minimum power, then fills the remaining slots by
/// per-slot exhaustive search.
pub fn exhaustive_policy_from(env: &Environment, zeta: f64, mode: SlotScore, prefix: &[Assignment]) -> Result<SolveResult> {
    check_zeta(zeta)?;
    let s = &env.scenario;
    let space = ActionSpace::new(&s.demand)?;
    let table = SlotTable::new(env, &space);
    let costs = Costs::new(env, zeta);
    let mut state = AoiState::for_scenario(s);
    let mut records = Vec::with_capacity(s.slots);
    for a in prefix.iter().take(s.slots) {
        let (rec, _) = env.execute_min_power(&mut state, a);
        records.push(rec);
    }
    while state.slot() < s.slots {
        let rec = match choose(env, &table, &costs, &state, mode) {
            Some(o) => env.execute(&mut state, &o.assignment, &o.powers),
            None => env.execute(&mut state, &Assignment::idle(s.vehicles), &vec![0.0; s.processes]),
        };
        records.push(rec);
    }
    let meta = SolverMeta {
        solver: "exhaustive".into(),
        seed: s.seed,
        iterations: s.slots * space.len(),
        colonies: 0,
    };
    SolveResult::finish(env, &state, records, zeta, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::scenario::{build_scenario, DemandMatrix, ScenarioConfig};
    use crate::sched::random_policy;

    fn toy_env(seed: u64) -> Environment {
        let cfg = ScenarioConfig { seed, ..ScenarioConfig::toy() };
        Environment::new(build_scenario(&cfg).unwrap()).unwrap()
    }

    fn single_env() -> Environment {
        let cfg = ScenarioConfig {
            vehicles: 1,
            processes: 1,
            demand: Some(DemandMatrix::from_binary(&[&[1]]).unwrap()),
            ..ScenarioConfig::default()
        };
        Environment::new(build_scenario(&cfg).unwrap()).unwrap()
    }

    #[test]
    fn pure_age_weight_updates_every_slot() {
        let env = single_env();
        let r = exhaustive_policy(&env, 1.0, SlotScore::Myopic).unwrap();
        // The first slot is indifferent (every age is one slot either way) and
        // ties go to idle; from then on the vehicle is served each slot.
        assert!(r.records[1..].iter().all(|rec| rec.success[0]));
        assert!(r.records.iter().all(|rec| rec.weighted_age_sum == env.scenario.slot_duration));
        assert!((r.breakdown.avg_aoi - env.scenario.slot_duration).abs() < 1e-12);
    }

    #[test]
    fn tiny_age_weight_never_transmits() {
        let env = toy_env(3);
        for mode in [SlotScore::Myopic, SlotScore::CarryForward, SlotScore::Rollout] {
            let r = exhaustive_policy(&env, 1e-9, mode).unwrap();
            assert!(r.records.iter().all(|rec| rec.assignment.is_idle() && rec.total_power() == 0.0));
            assert_eq!(r.breakdown.power_term, 0.0);
        }
    }

    #[test]
    fn beats_random_on_common_seeds() {
        for k in 0..5 {
            let seed = rng::derive_seed(11, k);
            let env = toy_env(seed);
            let mut r = rng::stream(seed, rng::STREAM_RANDOM_POLICY);
            let random = random_policy(&env, 0.5, seed, &mut r).unwrap();
            let ex = exhaustive_policy(&env, 0.5, SlotScore::Myopic).unwrap();
            assert!(ex.breakdown.value <= random.breakdown.value, "seed {seed}");
        }
    }

    #[test]
    fn rollout_improves_on_its_base_policy() {
        for k in 0..4 {
            let env = toy_env(rng::derive_seed(12, k));
            for zeta in [0.3, 0.7] {
                let base = exhaustive_policy(&env, zeta, SlotScore::CarryForward).unwrap();
                let roll = exhaustive_policy(&env, zeta, SlotScore::Rollout).unwrap();
                assert!(roll.breakdown.value <= base.breakdown.value + 1e-12);
            }
        }
    }

    #[test]
    fn per_slot_costs_sum_to_objective() {
        let env = toy_env(5);
        let zeta = 0.4;
        let r = exhaustive_policy(&env, zeta, SlotScore::Myopic).unwrap();
        let costs = Costs::new(&env, zeta);
        let (lo, hi) = env.aoi_bounds();
        let summed: f64 = r
            .records
            .iter()
            .map(|rec| costs.slot((rec.weighted_age_sum / env.scenario.slot_duration).round() as u64, rec.total_power(), 1.0))
            .sum();
        // The objective subtracts the normalized lower bound; the slot costs do not.
        let offset = zeta * lo / (hi - lo);
        assert!((summed - offset - r.breakdown.value).abs() < 1e-12);
    }

    #[test]
    fn table_holds_only_feasible_options() {
        let env = toy_env(7);
        let space = ActionSpace::new(&env.scenario.demand).unwrap();
        let table = SlotTable::new(&env, &space);
        for t in 1..=env.slots() {
            let opts = table.options(t);
            assert_eq!(opts[0].index, 0);
            assert!(opts.windows(2).all(|w| w[0].index < w[1].index));
            for o in opts {
                assert!(o.total_power <= env.scenario.max_power * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn prefix_is_replayed_first() {
        let env = toy_env(9);
        let prefix = vec![Assignment::idle(5), Assignment::from_labels(&[1, 1, 1, 1, 1])];
        let r = exhaustive_policy_from(&env, 0.5, SlotScore::Myopic, &prefix).unwrap();
        assert!(r.records[0].assignment.is_idle());
        assert_eq!(r.records.len(), env.slots());
    }
}
