//! Fixtures shared by the solver benchmarks.

use vaoi_core::{build_scenario, Environment, ScenarioConfig};

/// The five-vehicle, four-process example.
pub fn toy_env() -> Environment {
    Environment::new(build_scenario(&ScenarioConfig::toy()).expect("toy scenario")).expect("toy environment")
}

/// Five vehicles, `processes` processes, `per_vehicle` random interests each.
pub fn demand_env(processes: usize, per_vehicle: usize, seed: u64) -> Environment {
    let cfg = ScenarioConfig {
        processes,
        demand: None,
        random_demand: Some(vaoi_core::scenario::RandomDemand { per_vehicle_count: per_vehicle }),
        seed,
        ..ScenarioConfig::toy()
    };
    Environment::new(build_scenario(&cfg).expect("scenario")).expect("environment")
}
