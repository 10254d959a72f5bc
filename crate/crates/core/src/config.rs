use serde::{Deserialize, Serialize};

use crate::dqn::DqnParams;
use crate::sched::{AcoParams, SlotScore};

/// The `[solver]` section of a scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Weight of the AoI term, in (0, 1].
    pub zeta: f64,
    /// Offset inside the logarithmic reward.
    pub nu: f64,
    pub slot_score: SlotScore,
    pub aco: AcoParams,
    pub dqn: DqnParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            zeta: 0.5,
            nu: 1e-6,
            slot_score: SlotScore::default(),
            aco: AcoParams::default(),
            dqn: DqnParams::default(),
        }
    }
}
