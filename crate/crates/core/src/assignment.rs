use serde::{Deserialize, Serialize};

use crate::scenario::DemandMatrix;

/// Per-slot process-to-vehicle decision.
///
/// `choice[i]` is the zero-based process delivered to vehicle `i`, or `None`
/// when the vehicle is not updated. At most one process per vehicle holds by
/// construction; [`Assignment::respects`] checks the demand restriction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub choice: Vec<Option<usize>>,
}

impl Assignment {
    pub fn idle(vehicles: usize) -> Self {
        Self { choice: vec![None; vehicles] }
    }

    pub fn new(choice: Vec<Option<usize>>) -> Self {
        Self { choice }
    }

    /// Builds from 1-based labels where 0 means idle.
    pub fn from_labels(labels: &[usize]) -> Self {
        Self { choice: labels.iter().map(|&m| m.checked_sub(1)).collect() }
    }

    /// 1-based labels, 0 for idle.
    pub fn labels(&self) -> Vec<usize> {
        self.choice.iter().map(|c| c.map_or(0, |l| l + 1)).collect()
    }

    pub fn vehicles(&self) -> usize {
        self.choice.len()
    }

    /// Binary `η` matrix, vehicles × processes.
    pub fn eta(&self, processes: usize) -> Vec<Vec<u8>> {
        self.choice
            .iter()
            .map(|c| (0..processes).map(|l| u8::from(*c == Some(l))).collect())
            .collect()
    }

    pub fn serves(&self, vehicle: usize, process: usize) -> bool {
        self.choice[vehicle] == Some(process)
    }

    pub fn is_idle(&self) -> bool {
        self.choice.iter().all(Option::is_none)
    }

    /// Processes with at least one receiver, ascending.
    pub fn scheduled_processes(&self, processes: usize) -> Vec<usize> {
        (0..processes).filter(|&l| self.choice.contains(&Some(l))).collect()
    }

    /// Vehicles receiving process `l`.
    pub fn group(&self, process: usize) -> Vec<usize> {
        (0..self.choice.len()).filter(|&i| self.choice[i] == Some(process)).collect()
    }

    /// Demand restriction: only demanded processes are delivered.
    pub fn respects(&self, demand: &DemandMatrix) -> bool {
        self.choice.len() == demand.vehicles()
            && self.choice.iter().enumerate().all(|(i, c)| match c {
                Some(l) => *l < demand.processes() && demand.wants(i, *l),
                None => true,
            })
    }
}
