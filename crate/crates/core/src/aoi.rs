//! Age-of-information bookkeeping, analytic bounds and the weighted-sum
//! objective.
//!
//! Ages are kept as integer multiples of the slot duration. Every age starts
//! at zero, so a process that has never been delivered has age `t·δ` at slot
//! `t`, and a delivery resets the age to `δ`.

use serde::Serialize;

use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::scenario::{DemandMatrix, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AoiState {
    vehicles: usize,
    processes: usize,
    /// Row-major vehicles × processes, in slots.
    ages: Vec<u64>,
    slot: usize,
    /// Σ over elapsed slots of Σ_il r_il·age_il, in slots.
    cumulative: u64,
}

impl AoiState {
    pub fn new(vehicles: usize, processes: usize) -> Self {
        Self {
            vehicles,
            processes,
            ages: vec![0; vehicles * processes],
            slot: 0,
            cumulative: 0,
        }
    }

    pub fn for_scenario(s: &Scenario) -> Self {
        Self::new(s.vehicles, s.processes)
    }

    /// Number of slots already accounted for.
    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn vehicles(&self) -> usize {
        self.vehicles
    }

    pub fn processes(&self) -> usize {
        self.processes
    }

    /// Age of `(i, l)` in slots.
    pub fn age_slots(&self, vehicle: usize, process: usize) -> u64 {
        self.ages[vehicle * self.processes + process]
    }

    pub fn age(&self, vehicle: usize, process: usize, delta: f64) -> f64 {
        self.age_slots(vehicle, process) as f64 * delta
    }

    /// Demand-weighted age sum accumulated over all elapsed slots, in slots.
    pub fn cumulative_slots(&self) -> u64 {
        self.cumulative
    }

    /// Σ_il r_il·age_il at the current slot, in slots.
    pub fn weighted_age_slots(&self, demand: &DemandMatrix) -> u64 {
        (0..self.vehicles)
            .flat_map(|i| (0..self.processes).map(move |l| (i, l)))
            .filter(|&(i, l)| demand.wants(i, l))
            .map(|(i, l)| self.age_slots(i, l))
            .sum()
    }

    /// One slot of the age recursion. `success[i]` says whether vehicle `i`
    /// decoded its update within the error target.
    pub fn step(&self, demand: &DemandMatrix, assignment: &Assignment, success: &[bool]) -> Self {
        let mut next = self.clone();
        next.step_mut(demand, assignment, success);
        next
    }

    pub fn step_mut(&mut self, demand: &DemandMatrix, assignment: &Assignment, success: &[bool]) {
        for i in 0..self.vehicles {
            for l in 0..self.processes {
                let k = i * self.processes + l;
                if assignment.serves(i, l) && success[i] {
                    self.ages[k] = 1;
                } else {
                    self.ages[k] += 1;
                }
            }
        }
        self.slot += 1;
        self.cumulative += self.weighted_age_slots(demand);
    }
}

/// Time-average AoI over a horizon of `horizon` slots, in seconds.
pub fn average_aoi(state: &AoiState, horizon: usize, delta: f64) -> Result<f64> {
    if state.slot != horizon {
        return Err(Error::HorizonMismatch { expected: horizon, actual: state.slot });
    }
    Ok(delta * state.cumulative as f64 / horizon as f64)
}

/// Σ of ages over `horizon` slots when a `count`-process vehicle is never
/// updated, in slots.
pub fn upper_bound_slots(count: usize, horizon: usize) -> u64 {
    (count * horizon * (horizon + 1) / 2) as u64
}

/// Round-robin optimum when the horizon covers at least one full cycle
/// (`T ≥ |R|`): `T·|R|(|R|+1)/2 − Σ_{r=1}^{|R|-1} r(r+1)/2`.
pub fn lower_bound_slots_long(count: usize, horizon: usize) -> u64 {
    let r = count as u64;
    let t = horizon as u64;
    t * r * (r + 1) / 2 - (1..r).map(|k| k * (k + 1) / 2).sum::<u64>()
}

/// Optimum for horizons shorter than one cycle (`T < |R|`), where each slot
/// delivers a process that has not been delivered before:
/// `|R|·T(T+1)/2 − Σ_{r=1}^{T-1} r(r+1)/2`.
pub fn lower_bound_slots_short(count: usize, horizon: usize) -> u64 {
    let r = count as u64;
    let t = horizon as u64;
    r * t * (t + 1) / 2 - (1..t).map(|k| k * (k + 1) / 2).sum::<u64>()
}

/// Minimum Σ of ages over `horizon` slots for one vehicle, in slots.
pub fn lower_bound_slots(count: usize, horizon: usize) -> u64 {
    if horizon >= count {
        lower_bound_slots_long(count, horizon)
    } else {
        lower_bound_slots_short(count, horizon)
    }
}

/// Largest total time-average AoI (no vehicle ever updated), seconds.
pub fn aoi_upper_bound(demand: &DemandMatrix, horizon: usize, delta: f64) -> f64 {
    delta * (horizon + 1) as f64 / 2.0 * demand.total() as f64
}

/// Smallest total time-average AoI (each vehicle updated every slot,
/// alternating among its processes), seconds.
pub fn aoi_lower_bound(demand: &DemandMatrix, horizon: usize, delta: f64) -> f64 {
    let total: u64 = (0..demand.vehicles())
        .map(|i| lower_bound_slots(demand.count(i), horizon))
        .sum();
    delta * total as f64 / horizon as f64
}

/// Normalized AoI and power terms with their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    pub avg_aoi: f64,
    pub aoi_lower: f64,
    pub aoi_upper: f64,
    pub avg_power: f64,
    pub max_power: f64,
    pub zeta: f64,
    /// `(Δ̄ − Δ̄min)/(Δ̄max − Δ̄min)`.
    pub aoi_term: f64,
    /// `p̄ / Pmax`.
    pub power_term: f64,
    pub value: f64,
}

pub fn check_zeta(zeta: f64) -> Result<()> {
    if zeta > 0.0 && zeta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("zeta {zeta} outside (0, 1]")))
    }
}

/// Weighted-sum utility with `P^min = 0`.
pub fn objective(avg_aoi: f64, avg_power: f64, aoi_lower: f64, aoi_upper: f64, max_power: f64, zeta: f64) -> Result<ObjectiveBreakdown> {
    check_zeta(zeta)?;
    let range = aoi_upper - aoi_lower;
    if range <= 0.0 {
        return Err(Error::DegenerateRange(aoi_upper));
    }
    let aoi_term = (avg_aoi - aoi_lower) / range;
    let power_term = avg_power / max_power;
    Ok(ObjectiveBreakdown {
        avg_aoi,
        aoi_lower,
        aoi_upper,
        avg_power,
        max_power,
        zeta,
        aoi_term,
        power_term,
        value: zeta * aoi_term + (1.0 - zeta) * power_term,
    })
}

/// Objective of a finished trajectory: `state` after all `T` slots and the
/// total transmit power of each slot.
pub fn trajectory_objective(scenario: &Scenario, state: &AoiState, slot_powers: &[f64], zeta: f64) -> Result<ObjectiveBreakdown> {
    let horizon = scenario.slots;
    let delta = scenario.slot_duration;
    let avg_aoi = average_aoi(state, horizon, delta)?;
    let avg_power = slot_powers.iter().sum::<f64>() / horizon as f64;
    objective(
        avg_aoi,
        avg_power,
        aoi_lower_bound(&scenario.demand, horizon, delta),
        aoi_upper_bound(&scenario.demand, horizon, delta),
        scenario.max_power,
        zeta,
    )
}

/// Running cost `ρ` after `t = state.slot()` slots, with every horizon-`T`
/// quantity replaced by its horizon-`t` counterpart. At `t = 1` the AoI bounds
/// coincide (every age equals `δ`) and the AoI term is taken as zero.
pub fn running_cost(scenario: &Scenario, state: &AoiState, slot_powers: &[f64], zeta: f64) -> f64 {
    let t = state.slot();
    debug_assert!(t >= 1 && slot_powers.len() == t);
    let delta = scenario.slot_duration;
    let avg = delta * state.cumulative_slots() as f64 / t as f64;
    let lo = aoi_lower_bound(&scenario.demand, t, delta);
    let hi = aoi_upper_bound(&scenario.demand, t, delta);
    let aoi_term = if hi > lo { (avg - lo) / (hi - lo) } else { 0.0 };
    let avg_power = slot_powers.iter().sum::<f64>() / t as f64;
    zeta * aoi_term + (1.0 - zeta) * avg_power / scenario.max_power
}

/// Per-slot reinforcement-learning reward `−ln(ρ + ν)`.
pub fn slot_reward(scenario: &Scenario, state: &AoiState, slot_powers: &[f64], zeta: f64, nu: f64) -> f64 {
    -(running_cost(scenario, state, slot_powers, zeta) + nu).ln()
}
