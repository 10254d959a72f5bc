//! Slot execution shared by every solver: channels, thresholds, power
//! allocation and the SINR → decoding-error → AoI pipeline.

use serde::Serialize;

use crate::aoi::{self, AoiState, ObjectiveBreakdown};
use crate::assignment::Assignment;
use crate::error::Result;
use crate::link::{self, SinrThresholds};
use crate::power::{min_power_allocation, PowerProblem, PowerSolution};
use crate::scenario::{ChannelState, Scenario};

/// Relative slack on the error target when judging a delivery. Powers from
/// the fixed point meet the threshold only up to its stopping tolerance.
pub const SUCCESS_SLACK: f64 = 1e-6;

/// One executed slot, as written to the trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    /// 1-based slot.
    pub t: usize,
    pub assignment: Assignment,
    pub powers: Vec<f64>,
    pub success: Vec<bool>,
    /// Σ r_il·Δ_il after this slot, seconds.
    pub weighted_age_sum: f64,
}

impl SlotRecord {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Precomputed channels and thresholds for one scenario.
#[derive(Debug, Clone)]
pub struct Environment {
    pub scenario: Scenario,
    pub channels: Vec<ChannelState>,
    pub thresholds: SinrThresholds,
}

impl Environment {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let channels = scenario.channel_trajectory()?;
        let thresholds = SinrThresholds::for_scenario(&scenario)?;
        Ok(Self { scenario, channels, thresholds })
    }

    pub fn slots(&self) -> usize {
        self.scenario.slots
    }

    /// Channels at 1-based slot `t`.
    pub fn channel(&self, t: usize) -> &ChannelState {
        &self.channels[t - 1]
    }

    pub fn power_problem(&self, t: usize, assignment: &Assignment) -> PowerProblem {
        let s = &self.scenario;
        PowerProblem::from_channels(
            assignment,
            s.processes,
            self.channel(t),
            &self.thresholds.gamma_hat,
            s.noise_power,
            s.max_power,
        )
    }

    pub fn solve_power(&self, t: usize, assignment: &Assignment) -> PowerSolution {
        min_power_allocation(&self.power_problem(t, assignment))
    }

    /// Delivery outcome per vehicle for the given assignment and powers.
    pub fn deliveries(&self, t: usize, assignment: &Assignment, powers: &[f64]) -> Vec<bool> {
        let s = &self.scenario;
        let ch = self.channel(t);
        let beams = link::mrt_beamformers(&assignment.choice, powers, ch);
        assignment
            .choice
            .iter()
            .enumerate()
            .map(|(i, c)| match c {
                None => false,
                Some(l) => {
                    let gamma = link::sinr(i, *l, &beams, ch, s.noise_power);
                    link::decoding_error_prob(gamma, s)
                        .map(|e| e <= s.max_error_probability * (1.0 + SUCCESS_SLACK))
                        .unwrap_or(false)
                }
            })
            .collect()
    }

    /// Executes one slot on `state` and returns its log record.
    pub fn execute(&self, state: &mut AoiState, assignment: &Assignment, powers: &[f64]) -> SlotRecord {
        let t = state.slot() + 1;
        let success = self.deliveries(t, assignment, powers);
        state.step_mut(&self.scenario.demand, assignment, &success);
        SlotRecord {
            t,
            assignment: assignment.clone(),
            powers: powers.to_vec(),
            success,
            weighted_age_sum: state.weighted_age_slots(&self.scenario.demand) as f64 * self.scenario.slot_duration,
        }
    }

    /// Executes `assignment` at its minimum feasible power. An infeasible
    /// assignment runs as an idle slot; the flag reports whether that happened.
    pub fn execute_min_power(&self, state: &mut AoiState, assignment: &Assignment) -> (SlotRecord, bool) {
        let t = state.slot() + 1;
        let sol = self.solve_power(t, assignment);
        if sol.feasible {
            (self.execute(state, assignment, &sol.powers), true)
        } else {
            let idle = Assignment::idle(self.scenario.vehicles);
            (self.execute(state, &idle, &vec![0.0; self.scenario.processes]), false)
        }
    }

    /// Replays a logged schedule from scratch.
    pub fn replay(&self, schedule: &[(Assignment, Vec<f64>)]) -> (AoiState, Vec<SlotRecord>) {
        let mut state = AoiState::for_scenario(&self.scenario);
        let records = schedule
            .iter()
            .map(|(a, p)| self.execute(&mut state, a, p))
            .collect();
        (state, records)
    }

    pub fn objective(&self, state: &AoiState, records: &[SlotRecord], zeta: f64) -> Result<ObjectiveBreakdown> {
        let powers: Vec<f64> = records.iter().map(SlotRecord::total_power).collect();
        aoi::trajectory_objective(&self.scenario, state, &powers, zeta)
    }

    pub fn aoi_bounds(&self) -> (f64, f64) {
        let s = &self.scenario;
        (
            aoi::aoi_lower_bound(&s.demand, s.slots, s.slot_duration),
            aoi::aoi_upper_bound(&s.demand, s.slots, s.slot_duration),
        )
    }
}
