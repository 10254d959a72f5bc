//! Minimum total power meeting every assigned vehicle's SINR threshold.
//!
//! With beam directions fixed, the SINR constraint of vehicle `i` on process
//! `l` is linear in the powers:
//!
//! ```text
//! p_l·g[i][l] ≥ γ̂_i·(Σ_{m≠l} p_m·g[i][m] + σ²)
//! ```
//!
//! where `g[i][m] = |h_iᴴ ŵ_m|²` for unit-norm directions. The production
//! solver iterates the standard interference function from zero; the simplex
//! in [`simplex`] solves the same LP and serves as an oracle.

pub mod simplex;

use serde::Serialize;

use crate::assignment::Assignment;
use crate::link::{inner, mrt_directions};
use crate::scenario::ChannelState;

use self::simplex::{Constraint, LinearProgram, LpOutcome, Relation};

pub const MAX_ITERATIONS: usize = 10_000;
/// Stop once the sup-norm step falls below this fraction of the largest power.
pub const RELATIVE_STEP_TOL: f64 = 1e-12;
/// Iterates above this multiple of the budget are treated as divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerProblem {
    /// `g[i][l]`, vehicles × processes.
    pub gains: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub assignment: Assignment,
    pub noise_power: f64,
    pub max_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSolution {
    pub powers: Vec<f64>,
    pub feasible: bool,
    pub iterations: usize,
}

impl PowerSolution {
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    fn infeasible(processes: usize, iterations: usize) -> Self {
        Self { powers: vec![0.0; processes], feasible: false, iterations }
    }
}

impl PowerProblem {
    /// Gains of the MRT directions for `assignment` on the given channels.
    pub fn from_channels(assignment: &Assignment, processes: usize, channels: &ChannelState, thresholds: &[f64], noise_power: f64, max_power: f64) -> Self {
        let dirs = mrt_directions(&assignment.choice, processes, channels);
        let gains = channels
            .vehicles
            .iter()
            .map(|vc| {
                dirs.iter()
                    .map(|d| d.as_ref().map_or(0.0, |w| inner(&vc.channel, w).norm_sqr()))
                    .collect()
            })
            .collect();
        Self {
            gains,
            thresholds: thresholds.to_vec(),
            assignment: assignment.clone(),
            noise_power,
            max_power,
        }
    }

    pub fn processes(&self) -> usize {
        self.gains.first().map_or(0, Vec::len)
    }

    /// `(vehicle, process)` pairs carrying a constraint.
    fn assigned_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment
            .choice
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|l| (i, l)))
    }

    /// Achieved SINR of vehicle `i` on process `l` under `powers`.
    pub fn sinr(&self, vehicle: usize, process: usize, powers: &[f64]) -> f64 {
        let g = &self.gains[vehicle];
        let interference: f64 = (0..powers.len())
            .filter(|&m| m != process)
            .map(|m| powers[m] * g[m])
            .sum();
        powers[process] * g[process] / (interference + self.noise_power)
    }

    /// Largest relative shortfall `(γ̂ − γ)/γ̂` over assigned pairs (0 if none).
    pub fn max_violation(&self, powers: &[f64]) -> f64 {
        self.assigned_pairs()
            .map(|(i, l)| {
                let t = self.thresholds[i];
                ((t - self.sinr(i, l, powers)) / t).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Per scheduled process, the smallest relative slack `(γ_i − γ̂_i)/γ̂_i`
    /// among its receivers; zero means the process's power is tight.
    pub fn tightest_slack(&self, powers: &[f64]) -> Vec<(usize, f64)> {
        self.assignment
            .scheduled_processes(self.processes())
            .into_iter()
            .map(|l| {
                let slack = self
                    .assignment
                    .group(l)
                    .into_iter()
                    .map(|i| (self.sinr(i, l, powers) - self.thresholds[i]) / self.thresholds[i])
                    .fold(f64::INFINITY, f64::min);
                (l, slack)
            })
            .collect()
    }
}

/// Fixed-point power control from all-zero powers.
pub fn min_power_allocation(problem: &PowerProblem) -> PowerSolution {
    let f = problem.processes();
    let scheduled = problem.assignment.scheduled_processes(f);
    if scheduled.is_empty() {
        return PowerSolution { powers: vec![0.0; f], feasible: true, iterations: 0 };
    }
    if problem.assigned_pairs().any(|(i, l)| !(problem.gains[i][l] > 0.0)) {
        return PowerSolution::infeasible(f, 0);
    }
    let groups: Vec<(usize, Vec<usize>)> = scheduled
        .iter()
        .map(|&l| (l, problem.assignment.group(l)))
        .collect();

    let mut p = vec![0.0; f];
    let mut next = vec![0.0; f];
    for it in 1..=MAX_ITERATIONS {
        for (l, group) in &groups {
            next[*l] = group
                .iter()
                .map(|&i| {
                    let g = &problem.gains[i];
                    let interference: f64 = scheduled
                        .iter()
                        .filter(|&&m| m != *l)
                        .map(|&m| p[m] * g[m])
                        .sum();
                    problem.thresholds[i] * (interference + problem.noise_power) / g[*l]
                })
                .fold(0.0, f64::max);
        }
        let step = scheduled.iter().map(|&l| (next[l] - p[l]).abs()).fold(0.0, f64::max);
        let peak = scheduled.iter().map(|&l| next[l]).fold(0.0, f64::max);
        std::mem::swap(&mut p, &mut next);
        let total: f64 = p.iter().sum();
        if !total.is_finite() || total > DIVERGENCE_FACTOR * problem.max_power {
            return PowerSolution::infeasible(f, it);
        }
        if step <= RELATIVE_STEP_TOL * peak {
            return PowerSolution {
                feasible: total <= problem.max_power,
                powers: if total <= problem.max_power { p } else { vec![0.0; f] },
                iterations: it,
            };
        }
    }
    PowerSolution::infeasible(f, MAX_ITERATIONS)
}

/// Same LP solved by the dense simplex. Intended for small instances.
pub fn lp_oracle(problem: &PowerProblem) -> crate::Result<PowerSolution> {
    let f = problem.processes();
    let scheduled = problem.assignment.scheduled_processes(f);
    if scheduled.is_empty() {
        return Ok(PowerSolution { powers: vec![0.0; f], feasible: true, iterations: 0 });
    }
    let col = |l: usize| scheduled.iter().position(|&m| m == l).unwrap();
    let k = scheduled.len();
    let mut constraints: Vec<Constraint> = problem
        .assigned_pairs()
        .map(|(i, l)| {
            let t = problem.thresholds[i];
            let mut coeffs = vec![0.0; k];
            for &m in &scheduled {
                coeffs[col(m)] = if m == l { problem.gains[i][m] } else { -t * problem.gains[i][m] };
            }
            Constraint { coeffs, relation: Relation::Ge, rhs: t * problem.noise_power }
        })
        .collect();
    constraints.push(Constraint { coeffs: vec![1.0; k], relation: Relation::Le, rhs: problem.max_power });
    let lp = LinearProgram { cost: vec![1.0; k], constraints };
    Ok(match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let mut powers = vec![0.0; f];
            for (j, &l) in scheduled.iter().enumerate() {
                powers[l] = x[j];
            }
            PowerSolution { powers, feasible: true, iterations: 0 }
        }
        LpOutcome::Infeasible | LpOutcome::Unbounded => PowerSolution::infeasible(f, 0),
    })
}
