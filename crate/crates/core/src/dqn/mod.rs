//! Deep Q-learning scheduler: the agent observes channel gains and ages,
//! picks one joint assignment per slot, and the power allocator fills in the
//! powers. Rewards are `−ln(ρ + ν)` with `ρ` the running objective.

pub mod net;
pub mod replay;
pub mod state;

use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aoi::{self, check_zeta, AoiState};
use crate::assignment::Assignment;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng;
use crate::sched::{ActionSpace, SlotTable, SolveResult, SolverMeta};

pub use net::{argmax, Adam, QNetwork};
pub use replay::{ReplayBuffer, Transition};
pub use state::{decode_state, encode_state, state_len, DecodedState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct DqnParams {
    pub episodes: usize,
    pub hidden: Vec<usize>,
    pub discount: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Share of the episodes over which exploration decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Gradient steps between target-network syncs; `None` bootstraps from
    /// the online network, which diverges at the default learning rate.
    pub target_sync: Option<usize>,
    pub optimizer: Optimizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

impl Default for DqnParams {
    fn default() -> Self {
        Self {
            episodes: 2000,
            hidden: vec![128, 128],
            discount: 0.95,
            learning_rate: 1e-3,
            batch_size: 64,
            buffer_capacity: 10_000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.8,
            target_sync: Some(250),
            optimizer: Optimizer::default(),
        }
    }
}

impl DqnParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.episodes == 0 {
            return bad("dqn episodes must be ≥ 1");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("batch size must be in 1..=buffer capacity");
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.epsilon_start) || !unit.contains(&self.epsilon_end) || !unit.contains(&self.epsilon_decay_fraction) {
            return bad("exploration settings must lie in [0, 1]");
        }
        if self.target_sync == Some(0) {
            return bad("target sync interval must be ≥ 1");
        }
        Ok(())
    }

    /// Exploration rate for 0-based `episode`.
    pub fn epsilon(&self, episode: usize) -> f64 {
        let span = self.epsilon_decay_fraction * self.episodes as f64;
        if span <= 0.0 {
            return self.epsilon_end;
        }
        let frac = (episode as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    pub fn layer_sizes(&self, inputs: usize, actions: usize) -> Vec<usize> {
        std::iter::once(inputs).chain(self.hidden.iter().copied()).chain(std::iter::once(actions)).collect()
    }
}

/// Uniform action with probability `epsilon`, otherwise the greedy one.
pub fn act_epsilon_greedy<R: Rng + ?Sized>(net: &QNetwork, x: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..net.outputs())
    } else {
        argmax(&net.forward(x))
    }
}

/// Squared temporal-difference loss on a batch and its gradient. Bootstrap
/// values come from `target` when given, else from `net` itself.
pub fn td_loss(net: &QNetwork, target: Option<&QNetwork>, batch: &[&Transition], discount: f64) -> (f64, QNetwork) {
    let boot = target.unwrap_or(net);
    let ys: Vec<f64> = batch
        .iter()
        .map(|tr| {
            if tr.terminal {
                tr.reward
            } else {
                let q = boot.forward(&tr.next_state);
                tr.reward + discount * q[argmax(&q)]
            }
        })
        .collect();
    let samples: Vec<net::Sample> = batch.iter().zip(&ys).map(|(tr, &y)| (tr.state.as_slice(), tr.action, y)).collect();
    net.loss_and_gradient(&samples)
}

/// One plain gradient-descent step; returns the loss before the step.
pub fn train_step(net: &mut QNetwork, target: Option<&QNetwork>, batch: &[&Transition], discount: f64, learning_rate: f64) -> f64 {
    let (loss, grad) = td_loss(net, target, batch, discount);
    net.descend(&grad, learning_rate);
    loss
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub epsilon: f64,
    /// Mean training loss over the episode's gradient steps; NaN if none ran.
    pub mean_loss: f64,
    pub reward: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub net: QNetwork,
    pub log: Vec<EpisodeLog>,
}

/// Trains a Q-network on `env`. Infeasible actions run as idle slots.
pub fn train_agent(env: &Environment, zeta: f64, nu: f64, params: &DqnParams, seed: u64) -> Result<TrainedAgent> {
    check_zeta(zeta)?;
    params.validate()?;
    let s = &env.scenario;
    let space = ActionSpace::new(&s.demand)?;
    let table = SlotTable::new(env, &space);
    let mut r = rng::stream(seed, rng::STREAM_DQN);
    let mut net = QNetwork::new(&params.layer_sizes(state_len(s), space.len()), &mut r);
    let mut target = params.target_sync.map(|_| net.clone());
    let mut adam = (params.optimizer == Optimizer::Adam).then(|| Adam::new(&net));
    let mut buffer = ReplayBuffer::new(params.buffer_capacity);
    let idle = Assignment::idle(s.vehicles);
    let no_success = vec![false; s.vehicles];
    let mut steps = 0usize;
    let mut log = Vec::with_capacity(params.episodes);

    for episode in 0..params.episodes {
        let epsilon = params.epsilon(episode);
        let mut state = AoiState::for_scenario(s);
        let mut powers = Vec::with_capacity(s.slots);
        let (mut loss_sum, mut loss_n, mut reward_sum) = (0.0, 0usize, 0.0);
        for t in 1..=s.slots {
            let x = encode_state(&state, env.channel(t), s);
            let action = act_epsilon_greedy(&net, &x, epsilon, &mut r);
            match table.get(t, action) {
                Some(o) => {
                    state.step_mut(&s.demand, &o.assignment, &o.success);
                    powers.push(o.total_power);
                }
                None => {
                    state.step_mut(&s.demand, &idle, &no_success);
                    powers.push(0.0);
                }
            }
            let reward = aoi::slot_reward(s, &state, &powers, zeta, nu);
            reward_sum += reward;
            let terminal = t == s.slots;
            let next_state = encode_state(&state, env.channel((t + 1).min(s.slots)), s);
            buffer.push(Transition { state: x, action, reward, next_state, terminal });
            if buffer.len() >= params.batch_size {
                let batch = buffer.sample(params.batch_size, &mut r);
                let (loss, grad) = td_loss(&net, target.as_ref(), &batch, params.discount);
                match adam.as_mut() {
                    Some(opt) => opt.step(&mut net, &grad, params.learning_rate),
                    None => net.descend(&grad, params.learning_rate),
                }
                loss_sum += loss;
                loss_n += 1;
                steps += 1;
                if let (Some(every), Some(tn)) = (params.target_sync, target.as_mut()) {
                    if steps % every == 0 {
                        *tn = net.clone();
                    }
                }
            }
        }
        let objective = aoi::trajectory_objective(s, &state, &powers, zeta)?.value;
        let mean_loss = if loss_n > 0 { loss_sum / loss_n as f64 } else { f64::NAN };
        log::debug!("dqn episode {episode}: eps {epsilon:.3} loss {mean_loss:.4e} objective {objective:.4}");
        log.push(EpisodeLog { episode, epsilon, mean_loss, reward: reward_sum, objective });
    }
    if !net.is_finite() {
        return Err(Error::InvalidParameter("training diverged to non-finite weights".into()));
    }
    Ok(TrainedAgent { net, log })
}

/// Greedy rollout through the full slot pipeline.
pub fn greedy_rollout(net: &QNetwork, env: &Environment, zeta: f64) -> Result<SolveResult> {
    let s = &env.scenario;
    let space = ActionSpace::new(&s.demand)?;
    if net.inputs() != state_len(s) || net.outputs() != space.len() {
        return Err(Error::InvalidParameter(format!(
            "network {:?} does not fit {} inputs and {} actions",
            net.sizes(),
            state_len(s),
            space.len()
        )));
    }
    let mut state = AoiState::for_scenario(s);
    let mut records = Vec::with_capacity(s.slots);
    for t in 1..=s.slots {
        let x = encode_state(&state, env.channel(t), s);
        let (rec, _) = env.execute_min_power(&mut state, &space.get(argmax(&net.forward(&x))));
        records.push(rec);
    }
    let meta = SolverMeta { solver: "dqn".into(), seed: s.seed, iterations: s.slots, colonies: 0 };
    SolveResult::finish(env, &state, records, zeta, meta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalStats {
    pub episodes: usize,
    pub mean_objective: f64,
    pub std_objective: f64,
    pub mean_aoi: f64,
    pub mean_power: f64,
}

/// Greedy evaluation over one or more environments, one episode each.
pub fn evaluate_policy(net: &QNetwork, envs: &[Environment], zeta: f64) -> Result<EvalStats> {
    if envs.is_empty() {
        return Err(Error::InvalidParameter("evaluation needs at least one episode".into()));
    }
    let runs: Vec<SolveResult> = envs.iter().map(|e| greedy_rollout(net, e, zeta)).collect::<Result<_>>()?;
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&SolveResult) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let mean_objective = mean(&|r| r.breakdown.value);
    let var = mean(&|r| (r.breakdown.value - mean_objective).powi(2));
    Ok(EvalStats {
        episodes: runs.len(),
        mean_objective,
        std_objective: var.sqrt(),
        mean_aoi: mean(&|r| r.breakdown.avg_aoi),
        mean_power: mean(&|r| r.breakdown.avg_power),
    })
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Checkpoint {
    pub version: u32,
    pub sizes: Vec<usize>,
    pub zeta: f64,
    pub seed: u64,
    pub network: QNetwork,
}

impl Checkpoint {
    pub fn new(net: QNetwork, zeta: f64, seed: u64) -> Self {
        Self { version: CHECKPOINT_VERSION, sizes: net.sizes(), zeta, seed, network: net }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ck: Self = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {}", ck.version)));
        }
        let consistent = ck.sizes == ck.network.sizes()
            && ck.network.layers.iter().all(|l| l.weights.len() == l.inputs * l.outputs && l.biases.len() == l.outputs);
        if !consistent {
            return Err(Error::Checkpoint("layer shapes disagree with the declared sizes".into()));
        }
        Ok(ck)
    }
}

pub fn write_training_log(path: &Path, log: &[EpisodeLog]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "episode,epsilon,mean_loss,episode_reward,objective")?;
    for e in log {
        writeln!(f, "{},{},{},{},{}", e.episode, e.epsilon, e.mean_loss, e.reward, e.objective)?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_scenario, ScenarioConfig};

    fn toy_env() -> Environment {
        Environment::new(build_scenario(&ScenarioConfig::toy()).unwrap()).unwrap()
    }

    fn small(episodes: usize) -> DqnParams {
        DqnParams { episodes, hidden: vec![16, 16], batch_size: 8, ..DqnParams::default() }
    }

    #[test]
    fn exploration_schedule() {
        let p = DqnParams { episodes: 100, ..DqnParams::default() };
        assert_eq!(p.epsilon(0), 1.0);
        assert!((p.epsilon(40) - 0.525).abs() < 1e-12);
        assert!((p.epsilon(80) - 0.05).abs() < 1e-12);
        assert!((p.epsilon(99) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn uniform_exploration() {
        let net = QNetwork::zeros(&[2, 3, 10]);
        let mut r = rng::stream(5, 0);
        let mut counts = [0usize; 10];
        for _ in 0..10_000 {
            counts[act_epsilon_greedy(&net, &[0.0, 0.0], 1.0, &mut r)] += 1;
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
        // 99th percentile of chi-square with 9 degrees of freedom.
        assert!(chi2 < 21.666, "chi2 {chi2}");
    }

    #[test]
    fn greedy_choices() {
        let mut r = rng::stream(6, 0);
        let mut net = QNetwork::zeros(&[2, 3, 10]);
        assert_eq!(act_epsilon_greedy(&net, &[0.3, 0.4], 0.0, &mut r), 0);
        net.layers[1].biases[7] = 1.0;
        assert_eq!(act_epsilon_greedy(&net, &[0.3, 0.4], 0.0, &mut r), 7);
    }

    #[test]
    fn terminal_targets_are_rewards() {
        let mut r = rng::stream(7, 0);
        let mut net = QNetwork::new(&[2, 4, 3], &mut r);
        let trs: Vec<Transition> = (0..3)
            .map(|k| Transition { state: vec![0.1 * k as f64, 0.2], action: k, reward: k as f64 - 1.0, next_state: vec![9.0, 9.0], terminal: true })
            .collect();
        let batch: Vec<&Transition> = trs.iter().collect();
        let expected: f64 = trs.iter().map(|t| (net.forward(&t.state)[t.action] - t.reward).powi(2)).sum::<f64>() / 3.0;
        let loss = train_step(&mut net, None, &batch, 0.95, 0.0);
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_uses_target_network() {
        let mut net = QNetwork::zeros(&[1, 2]);
        let mut target = QNetwork::zeros(&[1, 2]);
        target.layers[0].biases = vec![3.0, 5.0];
        let tr = Transition { state: vec![0.0], action: 0, reward: 1.0, next_state: vec![0.0], terminal: false };
        let loss = train_step(&mut net, Some(&target), &[&tr], 0.5, 0.0);
        // y = 1 + 0.5·5, Q = 0.
        assert!((loss - 3.5f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn one_episode_logs_horizon_transitions() {
        let env = toy_env();
        let p = DqnParams { batch_size: 1, ..small(1) };
        let agent = train_agent(&env, 0.5, 1e-6, &p, 3).unwrap();
        assert_eq!(agent.log.len(), 1);
        // A batch of one trains after every slot.
        assert!(agent.log[0].mean_loss.is_finite());
    }

    #[test]
    fn training_is_deterministic() {
        let env = toy_env();
        let a = train_agent(&env, 0.5, 1e-6, &small(5), 11).unwrap();
        let b = train_agent(&env, 0.5, 1e-6, &small(5), 11).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(format!("{:?}", a.log), format!("{:?}", b.log));
    }

    #[test]
    fn zero_network_idles_at_upper_bound() {
        let env = toy_env();
        let net = QNetwork::zeros(&DqnParams::default().layer_sizes(25, 324));
        let r = greedy_rollout(&net, &env, 0.5).unwrap();
        assert!(r.records.iter().all(|rec| rec.assignment.is_idle()));
        assert!((r.breakdown.value - 0.5).abs() < 1e-12);
        let stats = evaluate_policy(&net, &[env.clone(), env], 0.5).unwrap();
        assert_eq!(stats.std_objective, 0.0);
    }

    #[test]
    fn checkpoint_roundtrip_and_version_guard() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        let mut r = rng::stream(8, 0);
        let ck = Checkpoint::new(QNetwork::new(&[3, 5, 2], &mut r), 0.5, 8);
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        let text = std::fs::read_to_string(&path).unwrap().replace("\"version\":1", "\"version\":99");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Checkpoint(_))));
    }
}
