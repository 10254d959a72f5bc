//! Assignment search: the joint action space and the baseline, exhaustive and
//! ant-colony schedulers.

pub mod aco;
pub mod exhaustive;
pub mod random;

use serde::Serialize;

use crate::aoi::{AoiState, ObjectiveBreakdown};
use crate::assignment::Assignment;
use crate::env::{Environment, SlotRecord};
use crate::error::{Error, Result};
use crate::scenario::DemandMatrix;

pub use aco::{aco_solve, AcoParams, PheromoneTable};
pub use exhaustive::{exhaustive_policy, exhaustive_policy_from, SlotOption, SlotScore, SlotTable};
pub use random::random_policy;

/// Upper limit on the joint action-space size.
pub const ACTION_SPACE_LIMIT: u128 = 1_000_000;

/// Mixed-radix enumeration of `Π_i ({idle} ∪ R_i)`.
///
/// Vehicle 1 is the most significant digit and each vehicle's choices are
/// ordered idle first, then demanded processes ascending, so index 0 is the
/// all-idle assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    choices: Vec<Vec<Option<usize>>>,
    len: usize,
}

impl ActionSpace {
    pub fn new(demand: &DemandMatrix) -> Result<Self> {
        let choices: Vec<Vec<Option<usize>>> = (0..demand.vehicles())
            .map(|i| std::iter::once(None).chain(demand.interests(i).into_iter().map(Some)).collect())
            .collect();
        let cardinality = choices
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
            .unwrap_or(u128::MAX);
        if cardinality > ACTION_SPACE_LIMIT {
            return Err(Error::ActionSpaceTooLarge { cardinality, limit: ACTION_SPACE_LIMIT });
        }
        Ok(Self { choices, len: cardinality as usize })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, mut index: usize) -> Assignment {
        assert!(index < self.len, "action index {index} out of range");
        let mut choice = vec![None; self.choices.len()];
        for (i, opts) in self.choices.iter().enumerate().rev() {
            choice[i] = opts[index % opts.len()];
            index /= opts.len();
        }
        Assignment::new(choice)
    }

    pub fn index_of(&self, a: &Assignment) -> Option<usize> {
        if a.vehicles() != self.choices.len() {
            return None;
        }
        self.choices.iter().zip(&a.choice).try_fold(0usize, |acc, (opts, c)| {
            opts.iter().position(|o| o == c).map(|d| acc * opts.len() + d)
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Assignment> + '_ {
        (0..self.len).map(|k| self.get(k))
    }
}

/// Enumerates every valid joint assignment in index order.
pub fn enumerate_actions(demand: &DemandMatrix) -> Result<Vec<Assignment>> {
    let space = ActionSpace::new(demand)?;
    Ok(space.iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverMeta {
    pub solver: String,
    pub seed: u64,
    pub iterations: usize,
    pub colonies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub records: Vec<SlotRecord>,
    pub breakdown: ObjectiveBreakdown,
    pub meta: SolverMeta,
}

impl SolveResult {
    pub(crate) fn finish(env: &Environment, state: &AoiState, records: Vec<SlotRecord>, zeta: f64, meta: SolverMeta) -> Result<Self> {
        let breakdown = env.objective(state, &records, zeta)?;
        Ok(Self { records, breakdown, meta })
    }

    pub fn schedule(&self) -> Vec<(Assignment, Vec<f64>)> {
        self.records.iter().map(|r| (r.assignment.clone(), r.powers.clone())).collect()
    }
}
