//! Observation vector: per vehicle, the large-scale gain relative to its value
//! at the reference distance, followed by the demand-masked ages over `δ·T`.

use crate::aoi::AoiState;
use crate::scenario::{ChannelState, Scenario};

/// Length of the encoded state, `V·(F+1)`.
pub fn state_len(s: &Scenario) -> usize {
    s.vehicles * (s.processes + 1)
}

pub fn encode_state(state: &AoiState, channels: &ChannelState, s: &Scenario) -> Vec<f64> {
    let chi_ref = s.reference_gain();
    let horizon = s.slots as f64;
    let mut out = Vec::with_capacity(state_len(s));
    for (i, v) in channels.vehicles.iter().enumerate() {
        out.push(v.large_scale_gain / chi_ref);
        for l in 0..s.processes {
            out.push(if s.demand.wants(i, l) { state.age_slots(i, l) as f64 / horizon } else { 0.0 });
        }
    }
    out
}

/// Decoded observation: relative gains and masked ages in slots.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedState {
    pub relative_gain: Vec<f64>,
    pub ages: Vec<Vec<f64>>,
}

pub fn decode_state(x: &[f64], s: &Scenario) -> DecodedState {
    let width = s.processes + 1;
    assert_eq!(x.len(), state_len(s), "state length");
    let horizon = s.slots as f64;
    let (relative_gain, ages) = x
        .chunks(width)
        .map(|row| (row[0], row[1..].iter().map(|a| a * horizon).collect()))
        .unzip();
    DecodedState { relative_gain, ages }
}
