//! Problem instance, vehicle mobility and the line-of-sight channel model.
//!
//! Vehicles drive along straight lanes parallel to the x-axis at constant
//! speed. The RSU carries an `N`-element half-wavelength uniform linear array,
//! so every vehicle sees a pure steering-vector channel scaled by the
//! free-space gain and rotated by its Doppler phase.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, STREAM_SCENARIO};

/// Reference distance used to normalize large-scale gains in the DQN state.
pub const REFERENCE_DISTANCE: f64 = 100.0;

/// Binary vehicle × process interest matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct DemandMatrix {
    rows: Vec<Vec<bool>>,
    processes: usize,
}

impl DemandMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let processes = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || processes == 0 {
            return Err(Error::InvalidScenario("demand matrix is empty".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != processes {
                return Err(Error::InvalidScenario(format!(
                    "demand row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    processes
                )));
            }
            if !row.iter().any(|&b| b) {
                return Err(Error::InvalidScenario(format!(
                    "vehicle has empty demand (vehicle {})",
                    i + 1
                )));
            }
        }
        Ok(Self { rows, processes })
    }

    pub fn from_binary(rows: &[&[u8]]) -> Result<Self> {
        Self::try_from(rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    /// Every vehicle interested in a uniformly drawn subset of `count` processes.
    pub fn random<R: Rng + ?Sized>(vehicles: usize, processes: usize, count: usize, rng: &mut R) -> Result<Self> {
        if count == 0 || count > processes {
            return Err(Error::InvalidScenario(format!(
                "perVehicleCount {count} outside 1..={processes}"
            )));
        }
        let rows = (0..vehicles)
            .map(|_| {
                let picked = rand::seq::index::sample(rng, processes, count);
                let mut row = vec![false; processes];
                for l in picked.iter() {
                    row[l] = true;
                }
                row
            })
            .collect();
        Self::new(rows)
    }

    pub fn vehicles(&self) -> usize {
        self.rows.len()
    }

    pub fn processes(&self) -> usize {
        self.processes
    }

    /// `r_il` with zero-based indices.
    pub fn wants(&self, vehicle: usize, process: usize) -> bool {
        self.rows[vehicle][process]
    }

    pub fn row(&self, vehicle: usize) -> &[bool] {
        &self.rows[vehicle]
    }

    /// `|R_i|`.
    pub fn count(&self, vehicle: usize) -> usize {
        self.rows[vehicle].iter().filter(|&&b| b).count()
    }

    pub fn total(&self) -> usize {
        (0..self.vehicles()).map(|i| self.count(i)).sum()
    }

    /// Zero-based indices of the processes vehicle `i` cares about.
    pub fn interests(&self, vehicle: usize) -> Vec<usize> {
        self.rows[vehicle]
            .iter()
            .enumerate()
            .filter_map(|(l, &b)| b.then_some(l))
            .collect()
    }
}

impl TryFrom<Vec<Vec<u8>>> for DemandMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|v| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(Error::InvalidScenario(format!("demand entry {other} is not binary"))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }
}

impl From<DemandMatrix> for Vec<Vec<u8>> {
    fn from(d: DemandMatrix) -> Self {
        d.rows
            .into_iter()
            .map(|row| row.into_iter().map(u8::from).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleInit {
    /// Position at slot 1, metres.
    pub position: [f64; 2],
    /// Speed along +x, m/s.
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RandomDemand {
    pub per_vehicle_count: usize,
}

/// How random initial vehicle states are drawn when `vehicleInit` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct MobilityConfig {
    pub segment: [f64; 2],
    pub lane_offset: f64,
    pub speed_range: [f64; 2],
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            segment: [-100.0, 100.0],
            lane_offset: 10.0,
            speed_range: [10.0, 15.0],
        }
    }
}

/// Parsed scenario document. Every field has a default; see `docs/config.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub vehicles: usize,
    pub processes: usize,
    pub slots: usize,
    pub slot_duration: f64,
    /// Defaults to a tenth of the slot.
    pub acquisition_time: Option<f64>,
    pub antennas: usize,
    pub carrier_frequency: f64,
    pub speed_of_light: f64,
    pub payload_bits: f64,
    pub bandwidth: f64,
    pub max_power: f64,
    pub noise_power: f64,
    pub max_error_probability: f64,
    pub demand: Option<DemandMatrix>,
    pub random_demand: Option<RandomDemand>,
    pub rsu_position: [f64; 2],
    pub vehicle_init: Option<Vec<VehicleInit>>,
    pub mobility: MobilityConfig,
    pub seed: u64,
    pub solver: crate::config::SolverConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            vehicles: 5,
            processes: 4,
            slots: 7,
            slot_duration: 1.0,
            acquisition_time: None,
            antennas: 64,
            carrier_frequency: 3e9,
            speed_of_light: 2.99e8,
            payload_bits: 1024.0,
            bandwidth: 1e7,
            max_power: 1.0,
            noise_power: 0.1,
            max_error_probability: 1e-6,
            demand: None,
            random_demand: None,
            rsu_position: [0.0, 0.0],
            vehicle_init: None,
            mobility: MobilityConfig::default(),
            seed: 1,
            solver: crate::config::SolverConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Five vehicles, four processes, seven slots, the illustrative demand
    /// matrix, all other values at their defaults.
    pub fn toy() -> Self {
        Self {
            demand: Some(toy_demand()),
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }
}

/// The demand matrix of the five-vehicle illustrative example.
pub fn toy_demand() -> DemandMatrix {
    DemandMatrix::from_binary(&[
        &[1, 0, 0, 1],
        &[1, 0, 1, 0],
        &[1, 0, 0, 1],
        &[1, 1, 1, 0],
        &[1, 1, 0, 0],
    ])
    .expect("toy demand is valid")
}

/// Validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub vehicles: usize,
    pub processes: usize,
    pub slots: usize,
    pub slot_duration: f64,
    pub acquisition_time: f64,
    pub antennas: usize,
    pub carrier_frequency: f64,
    pub speed_of_light: f64,
    pub payload_bits: f64,
    pub bandwidth: f64,
    pub max_power: f64,
    pub noise_power: f64,
    pub max_error_probability: f64,
    pub demand: DemandMatrix,
    pub rsu_position: [f64; 2],
    pub vehicle_init: Vec<VehicleInit>,
    pub seed: u64,
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidScenario(what.to_string()))
    }
}

/// Validates `config` and draws any random fields from the seeded stream.
///
/// Draw order: all speeds, then all positions, then the random demand matrix.
pub fn build_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    let c = config;
    check(c.vehicles >= 1, "vehicle count must be at least 1")?;
    check(c.processes >= 1, "process count must be at least 1")?;
    check(c.slots >= 1, "slot count must be at least 1")?;
    check(c.slot_duration > 0.0, "slot duration must be positive")?;
    let acquisition_time = c.acquisition_time.unwrap_or(0.1 * c.slot_duration);
    check(
        acquisition_time > 0.0 && acquisition_time < c.slot_duration,
        "acquisition time must lie strictly inside the slot",
    )?;
    check(c.antennas >= 1, "antenna count must be at least 1")?;
    check(c.carrier_frequency > 0.0, "carrier frequency must be positive")?;
    check(c.speed_of_light > 0.0, "speed of light must be positive")?;
    check(c.payload_bits > 0.0, "payload must be positive")?;
    check(c.bandwidth > 0.0, "bandwidth must be positive")?;
    check(c.max_power > 0.0, "maximum power must be positive")?;
    check(c.noise_power > 0.0, "noise power must be positive")?;
    check(
        c.max_error_probability > 0.0 && c.max_error_probability < 1.0,
        "maximum error probability must lie in (0, 1)",
    )?;
    let m = &c.mobility;
    check(m.segment[0] <= m.segment[1], "mobility segment is reversed")?;
    check(
        m.speed_range[0] >= 0.0 && m.speed_range[0] <= m.speed_range[1],
        "mobility speed range is invalid",
    )?;

    let mut rng = rng::stream(c.seed, STREAM_SCENARIO);
    let vehicle_init = match &c.vehicle_init {
        Some(init) => {
            check(init.len() == c.vehicles, "vehicleInit length differs from vehicle count")?;
            init.clone()
        }
        None => {
            let speeds: Vec<f64> = (0..c.vehicles)
                .map(|_| uniform(&mut rng, m.speed_range))
                .collect();
            let xs: Vec<f64> = (0..c.vehicles).map(|_| uniform(&mut rng, m.segment)).collect();
            speeds
                .into_iter()
                .zip(xs)
                .map(|(speed, x)| VehicleInit {
                    position: [x, c.rsu_position[1] + m.lane_offset],
                    speed,
                })
                .collect()
        }
    };

    let demand = match (&c.demand, &c.random_demand) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidScenario(
                "give either demand or randomDemand, not both".into(),
            ))
        }
        (Some(d), None) => DemandMatrix::new(d.rows.clone())?,
        (None, Some(rd)) => DemandMatrix::random(c.vehicles, c.processes, rd.per_vehicle_count, &mut rng)?,
        (None, None) => {
            return Err(Error::InvalidScenario("missing demand or randomDemand".into()))
        }
    };
    check(demand.vehicles() == c.vehicles, "demand rows differ from vehicle count")?;
    check(demand.processes() == c.processes, "demand columns differ from process count")?;

    Ok(Scenario {
        vehicles: c.vehicles,
        processes: c.processes,
        slots: c.slots,
        slot_duration: c.slot_duration,
        acquisition_time,
        antennas: c.antennas,
        carrier_frequency: c.carrier_frequency,
        speed_of_light: c.speed_of_light,
        payload_bits: c.payload_bits,
        bandwidth: c.bandwidth,
        max_power: c.max_power,
        noise_power: c.noise_power,
        max_error_probability: c.max_error_probability,
        demand,
        rsu_position: c.rsu_position,
        vehicle_init,
        seed: c.seed,
    })
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

/// Positions of all vehicles at 1-based slot `t`.
pub fn advance_mobility(scenario: &Scenario, t: usize) -> Vec<[f64; 2]> {
    let elapsed = t.saturating_sub(1) as f64 * scenario.slot_duration;
    scenario
        .vehicle_init
        .iter()
        .map(|v| [v.position[0] + v.speed * elapsed, v.position[1]])
        .collect()
}

/// Half-wavelength ULA response: element `n` is `exp(j n π sin φ)`.
pub fn steering_vector(phi: f64, antennas: usize) -> Vec<Complex64> {
    let step = PI * phi.sin();
    (0..antennas)
        .map(|n| Complex64::from_polar(1.0, n as f64 * step))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleChannel {
    pub position: [f64; 2],
    pub distance: f64,
    /// Angle from the array axis, in `[0, π]`.
    pub angle: f64,
    /// Hz.
    pub doppler_shift: f64,
    /// `sqrt(χ) · conj(a(φ)) · e^{j2πϱ}`.
    pub channel: Vec<Complex64>,
    /// Real magnitude `c0 / (4π fc ℓ²)`.
    pub large_scale_gain: f64,
    /// `2πϱ`, radians.
    pub doppler_phase: f64,
}

/// Channel vector of vehicle `i` (zero-based) at 1-based slot `t`.
pub fn channel_vector(scenario: &Scenario, t: usize, i: usize) -> Result<VehicleChannel> {
    let position = advance_mobility(scenario, t)[i];
    vehicle_channel(scenario, position, scenario.vehicle_init[i].speed)
        .ok_or(Error::Collocated { vehicle: i + 1, slot: t })
}

fn vehicle_channel(s: &Scenario, position: [f64; 2], speed: f64) -> Option<VehicleChannel> {
    let dx = position[0] - s.rsu_position[0];
    let dy = position[1] - s.rsu_position[1];
    let distance = dx.hypot(dy);
    if distance == 0.0 {
        return None;
    }
    let angle = (dx / distance).clamp(-1.0, 1.0).acos();
    let doppler_shift = speed * s.carrier_frequency * angle.cos() / s.speed_of_light;
    let doppler_phase = 2.0 * PI * doppler_shift;
    let large_scale_gain = s.speed_of_light / (4.0 * PI * s.carrier_frequency * distance * distance);
    let rotation = Complex64::from_polar(large_scale_gain.sqrt(), doppler_phase);
    let channel = steering_vector(angle, s.antennas)
        .into_iter()
        .map(|a| a.conj() * rotation)
        .collect();
    Some(VehicleChannel {
        position,
        distance,
        angle,
        doppler_shift,
        channel,
        large_scale_gain,
        doppler_phase,
    })
}

/// Channels of every vehicle at one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub slot: usize,
    pub vehicles: Vec<VehicleChannel>,
}

impl ChannelState {
    pub fn at(scenario: &Scenario, t: usize) -> Result<Self> {
        let positions = advance_mobility(scenario, t);
        let vehicles = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                vehicle_channel(scenario, p, scenario.vehicle_init[i].speed)
                    .ok_or(Error::Collocated { vehicle: i + 1, slot: t })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { slot: t, vehicles })
    }

    pub fn channel(&self, i: usize) -> &[Complex64] {
        &self.vehicles[i].channel
    }
}

impl Scenario {
    /// Channel states for slots `1..=T`.
    pub fn channel_trajectory(&self) -> Result<Vec<ChannelState>> {
        (1..=self.slots).map(|t| ChannelState::at(self, t)).collect()
    }

    /// Information transmission time `δ − δ₁`.
    pub fn transmission_time(&self) -> f64 {
        self.slot_duration - self.acquisition_time
    }

    /// Large-scale gain at [`REFERENCE_DISTANCE`].
    pub fn reference_gain(&self) -> f64 {
        self.speed_of_light
            / (4.0 * PI * self.carrier_frequency * REFERENCE_DISTANCE * REFERENCE_DISTANCE)
    }

    /// Copy with the horizon replaced; mobility and demand unchanged.
    pub fn with_slots(&self, slots: usize) -> Self {
        Self { slots, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn toy_demand_counts() {
        let s = build_scenario(&ScenarioConfig::toy()).unwrap();
        let counts: Vec<usize> = (0..5).map(|i| s.demand.count(i)).collect();
        assert_eq!(counts, vec![2, 2, 2, 3, 2]);
        assert_eq!(s.demand.total(), 11);
    }

    #[test]
    fn empty_demand_row_rejected() {
        let cfg = ScenarioConfig {
            vehicles: 2,
            processes: 2,
            demand: Some(DemandMatrix { rows: vec![vec![true, false], vec![false, false]], processes: 2 }),
            ..ScenarioConfig::default()
        };
        let err = build_scenario(&cfg).unwrap_err().to_string();
        assert!(err.contains("vehicle has empty demand"), "{err}");
        let err = DemandMatrix::from_binary(&[&[0, 0]]).unwrap_err().to_string();
        assert!(err.contains("vehicle has empty demand"), "{err}");
    }

    #[test]
    fn invariant_violations_are_named() {
        let bad = ScenarioConfig { acquisition_time: Some(1.0), ..ScenarioConfig::toy() };
        assert!(build_scenario(&bad).unwrap_err().to_string().contains("acquisition time"));
        let bad = ScenarioConfig { max_error_probability: 1.0, ..ScenarioConfig::toy() };
        assert!(build_scenario(&bad).unwrap_err().to_string().contains("error probability"));
        let bad = ScenarioConfig { slots: 0, ..ScenarioConfig::toy() };
        assert!(build_scenario(&bad).unwrap_err().to_string().contains("slot count"));
    }

    #[test]
    fn same_seed_same_vehicles() {
        let a = build_scenario(&ScenarioConfig::toy()).unwrap();
        let b = build_scenario(&ScenarioConfig::toy()).unwrap();
        assert_eq!(a.vehicle_init, b.vehicle_init);
        let c = build_scenario(&ScenarioConfig { seed: 2, ..ScenarioConfig::toy() }).unwrap();
        assert_ne!(a.vehicle_init, c.vehicle_init);
        for v in &a.vehicle_init {
            assert!((10.0..15.0).contains(&v.speed));
            assert!((-100.0..100.0).contains(&v.position[0]));
        }
    }

    fn single(x0: f64, speed: f64) -> Scenario {
        let cfg = ScenarioConfig {
            vehicles: 1,
            processes: 1,
            demand: Some(DemandMatrix::from_binary(&[&[1]]).unwrap()),
            vehicle_init: Some(vec![VehicleInit { position: [x0, 10.0], speed }]),
            ..ScenarioConfig::default()
        };
        build_scenario(&cfg).unwrap()
    }

    #[test]
    fn linear_motion() {
        let s = single(0.0, 10.0);
        assert_eq!(advance_mobility(&s, 1)[0], [0.0, 10.0]);
        assert_eq!(advance_mobility(&s, 3)[0][0], 20.0);
        let s = single(-50.0, 15.0);
        assert_eq!(advance_mobility(&s, 7)[0][0], 40.0);
    }

    #[test]
    fn steering_examples() {
        let j = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        assert!(steering_vector(0.0, 4).iter().all(|&a| close(a, one)));
        let a = steering_vector(PI / 2.0, 2);
        assert!(close(a[0], one) && close(a[1], -one));
        let a = steering_vector(PI / 6.0, 3);
        assert!(close(a[0], one) && close(a[1], j) && close(a[2], -one));
    }

    #[test]
    fn channel_magnitudes_and_inverse_square() {
        let s = single(30.0, 12.0);
        let h = channel_vector(&s, 1, 0).unwrap();
        let mags: Vec<f64> = h.channel.iter().map(|c| c.norm()).collect();
        let spread = mags.iter().cloned().fold(f64::MIN, f64::max) - mags.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread.abs() < 1e-15);
        assert!((mags[0] - h.large_scale_gain.sqrt()).abs() < 1e-15);

        let near = single(0.0, 12.0);
        let far = Scenario {
            vehicle_init: vec![VehicleInit { position: [0.0, 20.0], speed: 12.0 }],
            ..near.clone()
        };
        let p1 = channel_vector(&near, 1, 0).unwrap().channel[0].norm_sqr();
        let p2 = channel_vector(&far, 1, 0).unwrap().channel[0].norm_sqr();
        assert!((p2 / p1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn reference_gain_arithmetic() {
        // c0 / (4π fc ℓ²) with fc = 3 GHz, ℓ = 100 m, c0 = 2.99e8, evaluated
        // independently in 40-digit arithmetic: 7.931221330746117565816e-7.
        let s = single(0.0, 10.0);
        assert!((s.reference_gain() - 7.931_221_330_746_118e-7).abs() < 1e-21);
    }

    #[test]
    fn collocated_vehicle_errors() {
        let s = Scenario {
            vehicle_init: vec![VehicleInit { position: [0.0, 0.0], speed: 0.0 }],
            ..single(0.0, 10.0)
        };
        assert!(matches!(channel_vector(&s, 1, 0), Err(Error::Collocated { .. })));
    }

    #[test]
    fn angle_and_doppler() {
        let s = single(10.0, 10.0);
        let h = channel_vector(&s, 1, 0).unwrap();
        assert!((h.angle - PI / 4.0).abs() < 1e-12);
        let expected = 10.0 * 3e9 * (PI / 4.0).cos() / 2.99e8;
        assert!((h.doppler_shift - expected).abs() < 1e-9);
    }

    #[test]
    fn config_roundtrip_through_toml() {
        let cfg = ScenarioConfig::toy();
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn random_demand_has_requested_count() {
        let cfg = ScenarioConfig {
            processes: 10,
            random_demand: Some(RandomDemand { per_vehicle_count: 4 }),
            ..ScenarioConfig::default()
        };
        let s = build_scenario(&cfg).unwrap();
        assert!((0..5).all(|i| s.demand.count(i) == 4));
    }

    proptest::proptest! {
        #[test]
        fn steering_entries_unit_modulus(phi in -PI..PI, n in 1usize..=256) {
            for a in steering_vector(phi, n) {
                proptest::prop_assert!((a.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn channel_power_and_angle_range(seed: u64, antennas in 1usize..=128) {
            let cfg = ScenarioConfig { antennas, seed, ..ScenarioConfig::toy() };
            let s = build_scenario(&cfg).unwrap();
            for t in 1..=s.slots {
                let state = ChannelState::at(&s, t).unwrap();
                for v in &state.vehicles {
                    let power: f64 = v.channel.iter().map(|c| c.norm_sqr()).sum();
                    let want = antennas as f64 * v.large_scale_gain;
                    proptest::prop_assert!((power - want).abs() <= 1e-12 * want);
                    proptest::prop_assert!((0.0..=PI).contains(&v.angle));
                }
            }
            proptest::prop_assert_eq!(s.channel_trajectory().unwrap(), build_scenario(&cfg).unwrap().channel_trajectory().unwrap());
        }
    }
}
