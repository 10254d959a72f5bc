use rand::Rng;

use crate::aoi::AoiState;
use crate::env::Environment;
use crate::error::Result;

use super::{ActionSpace, SolveResult, SolverMeta};

/// Uniform joint assignment per slot; a uniform fraction of the budget is
/// split equally across the scheduled processes.
pub fn random_policy<R: Rng + ?Sized>(env: &Environment, zeta: f64, seed: u64, rng: &mut R) -> Result<SolveResult> {
    let s = &env.scenario;
    let space = ActionSpace::new(&s.demand)?;
    let mut state = AoiState::for_scenario(s);
    let mut records = Vec::with_capacity(s.slots);
    for _ in 0..s.slots {
        let assignment = space.get(rng.gen_range(0..space.len()));
        let fraction: f64 = rng.gen();
        let scheduled = assignment.scheduled_processes(s.processes);
        let mut powers = vec![0.0; s.processes];
        if !scheduled.is_empty() {
            let share = fraction * s.max_power / scheduled.len() as f64;
            for l in scheduled {
                powers[l] = share;
            }
        }
        records.push(env.execute(&mut state, &assignment, &powers));
    }
    let meta = SolverMeta { solver: "random".into(), seed, iterations: s.slots, colonies: 0 };
    SolveResult::finish(env, &state, records, zeta, meta)
}
