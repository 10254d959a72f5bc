//! Short-packet decoding error, SINR thresholds and MRT multicast beamforming.

use std::f64::consts::{LN_2, SQRT_2};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::{ChannelState, Scenario};

/// Gaussian tail probability `Q(q) = P(Z > q)`.
pub fn q_function(q: f64) -> f64 {
    0.5 * libm::erfc(q / SQRT_2)
}

/// Finite-blocklength decoding error probability at SINR `gamma`.
pub fn decoding_error_prob(gamma: f64, scenario: &Scenario) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::SinrDomain(gamma));
    }
    Ok(decoding_error(gamma, scenario.transmission_time() * scenario.bandwidth, scenario.payload_bits))
}

/// `Q(sqrt(n/V)·[ln(1+γ) − L ln2 / n])` with `n = δ₂ω` channel uses.
fn decoding_error(gamma: f64, uses: f64, payload_bits: f64) -> f64 {
    // 1 − 1/(1+γ)² without cancellation for small γ.
    let dispersion = gamma * (2.0 + gamma) / ((1.0 + gamma) * (1.0 + gamma));
    let arg = (uses / dispersion).sqrt() * (gamma.ln_1p() - payload_bits * LN_2 / uses);
    q_function(arg)
}

const BRACKET_LO: f64 = 1e-12;
const BRACKET_HI: f64 = 1e12;
const BISECTION_STEPS: usize = 60;

/// SINR `γ̂` whose decoding error equals `epsilon_max`.
///
/// The returned value sits on the feasible side: `ε(γ̂) ≤ epsilon_max`.
pub fn invert_error_to_sinr(epsilon_max: f64, scenario: &Scenario) -> Result<f64> {
    if !(epsilon_max > 0.0 && epsilon_max < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "target error probability {epsilon_max} outside (0, 0.5)"
        )));
    }
    let eps = |g: f64| decoding_error_prob(g, scenario).expect("positive SINR");

    // Geometric bracket expansion from γ = 1.
    let (mut lo, mut hi) = (1.0, 1.0);
    if eps(1.0) > epsilon_max {
        while eps(hi) > epsilon_max {
            lo = hi;
            hi *= 2.0;
            if hi > BRACKET_HI {
                return Err(Error::NoBracket(epsilon_max));
            }
        }
    } else {
        while eps(lo) <= epsilon_max {
            hi = lo;
            lo *= 0.5;
            if lo < BRACKET_LO {
                return Err(Error::NoBracket(epsilon_max));
            }
        }
    }
    // Invariant: eps(lo) > target >= eps(hi).
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eps(mid) > epsilon_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Per-vehicle SINR thresholds `γ̂_i`. All vehicles share one error target.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrThresholds {
    pub gamma_hat: Vec<f64>,
}

impl SinrThresholds {
    pub fn for_scenario(scenario: &Scenario) -> Result<Self> {
        let g = invert_error_to_sinr(scenario.max_error_probability, scenario)?;
        Ok(Self { gamma_hat: vec![g; scenario.vehicles] })
    }
}

/// Per-process beamformers and their powers.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub w: Vec<Vec<Complex64>>,
    pub powers: Vec<f64>,
}

/// `h^H w`.
pub fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Unit-norm MRT directions: the equal-gain sum of normalized channels of the
/// vehicles assigned to each process. `None` for unscheduled processes.
///
/// `assigned[i]` is the zero-based process served to vehicle `i`, if any.
pub fn mrt_directions(assigned: &[Option<usize>], processes: usize, channels: &ChannelState) -> Vec<Option<Vec<Complex64>>> {
    let antennas = channels.vehicles.first().map(|v| v.channel.len()).unwrap_or(0);
    let mut sums: Vec<Option<Vec<Complex64>>> = vec![None; processes];
    for (i, &choice) in assigned.iter().enumerate() {
        let Some(l) = choice else { continue };
        let vc = &channels.vehicles[i];
        let scale = 1.0 / (antennas as f64 * vc.large_scale_gain).sqrt();
        let acc = sums[l].get_or_insert_with(|| vec![Complex64::new(0.0, 0.0); antennas]);
        for (a, h) in acc.iter_mut().zip(&vc.channel) {
            *a += h * scale;
        }
    }
    sums.into_iter()
        .map(|u| {
            u.and_then(|mut u| {
                let n = norm_sqr(&u).sqrt();
                if n == 0.0 {
                    return None;
                }
                u.iter_mut().for_each(|c| *c /= n);
                Some(u)
            })
        })
        .collect()
}

/// MRT beamformers scaled so that `‖w_l‖² = p_l`.
pub fn mrt_beamformers(assigned: &[Option<usize>], powers: &[f64], channels: &ChannelState) -> BeamformerSet {
    let antennas = channels.vehicles.first().map(|v| v.channel.len()).unwrap_or(0);
    let dirs = mrt_directions(assigned, powers.len(), channels);
    let w = dirs
        .into_iter()
        .zip(powers)
        .map(|(dir, &p)| match dir {
            Some(d) if p > 0.0 => {
                let s = p.sqrt();
                d.into_iter().map(|c| c * s).collect()
            }
            _ => vec![Complex64::new(0.0, 0.0); antennas],
        })
        .collect();
    let powers = powers
        .iter()
        .enumerate()
        .map(|(l, &p)| if assigned.contains(&Some(l)) { p } else { 0.0 })
        .collect();
    BeamformerSet { w, powers }
}

/// SINR of vehicle `i` decoding process `l`.
pub fn sinr(vehicle: usize, process: usize, beams: &BeamformerSet, channels: &ChannelState, noise_power: f64) -> f64 {
    let h = channels.channel(vehicle);
    let signal = inner(h, &beams.w[process]).norm_sqr();
    let interference: f64 = beams
        .w
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != process)
        .map(|(_, w)| inner(h, w).norm_sqr())
        .sum();
    signal / (interference + noise_power)
}
