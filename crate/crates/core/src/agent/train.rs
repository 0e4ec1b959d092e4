use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{select_action, EpsilonSchedule, ReplayBuffer, ValueNetwork};
use crate::env::{Action, BusEnv, RewardParams, Scheme, TraceRecord};
use crate::line_model::{LineConfig, TravelTimeTable};
use crate::od_data::DemandSet;
use crate::scalar::Real;
use crate::simulator::{Metrics, Timetable};
use crate::stats;
use crate::{Error, Result};

/// Stop once the rolling standard deviation of ND stops moving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    /// Episodes in the rolling window.
    pub window: usize,
    /// Maximum change of the rolling ND standard deviation across one window.
    pub tolerance: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            window: 25,
            tolerance: 0.05,
        }
    }
}

/// DQN hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_size: usize,
    pub epsilon: EpsilonSchedule,
    /// Environment steps between target-network copies.
    pub target_sync: u64,
    pub episodes: usize,
    pub early_stop: Option<EarlyStop>,
    /// Store the forced first/last-minute transitions too.
    pub include_forced: bool,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![300; 10],
            learning_rate: 0.01,
            gamma: 0.4,
            batch_size: 32,
            buffer_size: 3000,
            epsilon: EpsilonSchedule::default(),
            target_sync: 500,
            episodes: 300,
            early_stop: Some(EarlyStop::default()),
            include_forced: false,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("agent: {m}")));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.batch_size == 0 || self.buffer_size == 0 || self.target_sync == 0 {
            return bad("batch_size, buffer_size and target_sync must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        let e = &self.epsilon;
        if !((0.0..=1.0).contains(&e.start)
            && (0.0..=1.0).contains(&e.end)
            && (0.0..=1.0).contains(&e.decay_fraction))
        {
            return bad("epsilon schedule values must lie in [0, 1]");
        }
        if matches!(self.early_stop, Some(EarlyStop { window: 0, .. })) {
            return bad("early_stop.window must be positive");
        }
        Ok(())
    }

    /// Layer sizes for a given input width and two outputs.
    pub fn layer_sizes(&self, input: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input);
        sizes.extend(&self.hidden);
        sizes.push(2);
        sizes
    }
}

/// Freshly initialised network for `config` and input width `input`.
pub fn build_network<T: Real>(config: &AgentConfig, input: usize) -> ValueNetwork<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    ValueNetwork::new(&config.layer_sizes(input), &mut rng)
}

/// `r` if terminal, else `r + γ · max_a q_target(s', a)`.
pub fn td_target<T: Real>(
    r: T,
    s_next: &[T],
    done: bool,
    q_target: &ValueNetwork<T>,
    gamma: T,
) -> T {
    if done || gamma == T::zero() {
        r
    } else {
        r + gamma * q_target.max_value(s_next)
    }
}

/// One SGD step on a uniformly sampled batch; returns the loss before the step.
pub fn train_step<T: Real, R: Rng + ?Sized>(
    q: &mut ValueNetwork<T>,
    q_target: &ValueNetwork<T>,
    buffer: &ReplayBuffer<T>,
    config: &AgentConfig,
    rng: &mut R,
) -> Result<T> {
    if buffer.len() < config.batch_size {
        return Err(Error::Training(format!(
            "replay buffer holds {} transitions, batch needs {}",
            buffer.len(),
            config.batch_size
        )));
    }
    let gamma = T::of(config.gamma);
    let sample = buffer.sample(config.batch_size, rng);
    let targets: Vec<T> = sample
        .iter()
        .map(|t| td_target(t.r, &t.s_next, t.done, q_target, gamma))
        .collect();
    let batch: Vec<(&[T], Action, T)> = sample
        .iter()
        .zip(&targets)
        .map(|(t, &y)| (t.s.as_slice(), t.a, y))
        .collect();
    let (loss, grads) = q.td_loss_and_gradient(&batch);
    q.apply_gradients(&grads, T::of(config.learning_rate));
    if !q.is_finite() {
        return Err(Error::Training(
            "network parameters diverged to non-finite values".into(),
        ));
    }
    Ok(loss)
}

/// Per-episode training statistics (one reward-curve row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub mean_reward: f64,
    pub nd: usize,
    pub awt: f64,
    pub nsp: u64,
}

/// How a rollout picks actions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// `ε = 0`.
    Greedy,
    /// ε-greedy with a fixed ε.
    EpsilonGreedy(f64),
    /// Rule-constrained uniform random.
    Random,
}

/// Result of running one episode with a fixed network.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub timetable: Timetable,
    pub metrics: Metrics,
    pub mean_reward: f64,
    pub trace: Vec<TraceRecord>,
}

/// Everything [`train`] returns.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub network: ValueNetwork<T>,
    pub curve: Vec<EpisodeStats>,
    /// Greedy rollout after training.
    pub greedy: Rollout,
    pub steps: u64,
    pub stopped_early: bool,
}

/// Runs one episode. `seed` drives the exploration draws.
#[allow(clippy::too_many_arguments)]
pub fn rollout<T: Real, S: Scheme<T> + ?Sized>(
    q: &ValueNetwork<T>,
    line: &LineConfig,
    tt: &TravelTimeTable,
    demand: &DemandSet,
    params: RewardParams<T>,
    scheme: &mut S,
    policy: Policy,
    seed: u64,
) -> Result<Rollout> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = (line.min_interval, line.max_interval);
    let mut env = BusEnv::new(line, tt, demand, params)?;
    scheme.reset();
    let mut s = scheme.encode(&env);
    let mut total = 0.0;
    let mut steps = 0usize;
    let mut trace = Vec::new();
    while !env.is_done() {
        let eps = match policy {
            Policy::Greedy => 0.0,
            Policy::EpsilonGreedy(e) => e,
            Policy::Random => 1.0,
        };
        let wanted = select_action(q, &s, env.t_ml(), bounds, eps, &mut rng);
        let a = if env.is_forced_minute() {
            Action::Depart
        } else {
            wanted
        };
        let r = scheme.reward(&env, a);
        let mut info = env.step(a)?;
        info.transition.r = r;
        total += r.to_f64_lossy();
        steps += 1;
        trace.push(TraceRecord::from(&info));
        if !env.is_done() {
            s = scheme.encode(&env);
        }
    }
    Ok(Rollout {
        timetable: env.episode_to_timetable()?,
        metrics: env.metrics(),
        mean_reward: total / steps as f64,
        trace,
    })
}

/// Trains a DQN controller on one line and demand set.
///
/// Each episode resets the environment, then per minute: choose an action
/// (rule-constrained ε-greedy), step, store the transition, take one SGD step
/// once the buffer holds a batch, and copy the online network into the target
/// network every `target_sync` steps. Deterministic for a fixed seed.
pub fn train<T: Real, S: Scheme<T> + ?Sized>(
    line: &LineConfig,
    tt: &TravelTimeTable,
    demand: &DemandSet,
    params: RewardParams<T>,
    scheme: &mut S,
    config: &AgentConfig,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    line.validate()?;
    let mut q: ValueNetwork<T> = build_network(config, scheme.state_dim(line));
    let mut q_target = q.clone();
    let mut buffer = ReplayBuffer::new(config.buffer_size);
    let mut act_rng = ChaCha8Rng::seed_from_u64(config.seed);
    act_rng.set_stream(1);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(config.seed);
    batch_rng.set_stream(2);

    let bounds = (line.min_interval, line.max_interval);
    let steps_per_episode = u64::from(line.window()) + 1;
    let total_steps = steps_per_episode * config.episodes as u64;
    let decay_steps = config.epsilon.decay_steps(total_steps);
    let mut step_count = 0u64;
    let mut curve = Vec::with_capacity(config.episodes);
    let mut stopped_early = false;

    for episode in 0..config.episodes {
        if demand.is_empty() {
            return Err(Error::Training("demand is empty".into()));
        }
        let mut env = BusEnv::new(line, tt, demand, params)?;
        scheme.reset();
        let mut s = scheme.encode(&env);
        let mut total = 0.0;
        let mut steps = 0usize;
        while !env.is_done() {
            let eps = config.epsilon.value(step_count, total_steps);
            let forced = env.is_forced_minute();
            let wanted = select_action(&q, &s, env.t_ml(), bounds, eps, &mut act_rng);
            let a = if forced { Action::Depart } else { wanted };
            let r = scheme.reward(&env, a);
            let info = env.step(a)?;
            let s_next = if info.transition.done {
                s.clone()
            } else {
                scheme.encode(&env)
            };
            total += r.to_f64_lossy();
            steps += 1;
            if !forced || config.include_forced {
                buffer.push(crate::env::Transition {
                    s: std::mem::replace(&mut s, s_next.clone()),
                    a,
                    r,
                    s_next,
                    done: info.transition.done,
                });
            } else {
                s = s_next;
            }
            if buffer.len() >= config.batch_size {
                train_step(&mut q, &q_target, &buffer, config, &mut batch_rng)?;
            }
            step_count += 1;
            if step_count % config.target_sync == 0 {
                q_target = q.clone();
            }
        }
        let m = env.metrics();
        curve.push(EpisodeStats {
            episode,
            mean_reward: total / steps as f64,
            nd: m.nd,
            awt: m.awt,
            nsp: m.nsp,
        });
        log::debug!(
            "episode {episode}: mean reward {:.4}, nd {}, awt {:.3}, nsp {}",
            total / steps as f64,
            m.nd,
            m.awt,
            m.nsp
        );
        if let Some(stop) = config.early_stop {
            if step_count >= decay_steps && plateaued(&curve, stop) {
                log::info!("early stop after episode {episode}");
                stopped_early = true;
                break;
            }
        }
    }

    let greedy = rollout(
        &q,
        line,
        tt,
        demand,
        params,
        scheme,
        Policy::Greedy,
        config.seed,
    )?;
    Ok(TrainOutcome {
        network: q,
        curve,
        greedy,
        steps: step_count,
        stopped_early,
    })
}

fn plateaued(curve: &[EpisodeStats], stop: EarlyStop) -> bool {
    let w = stop.window;
    if curve.len() < 2 * w {
        return false;
    }
    let nd = |range: &[EpisodeStats]| -> Vec<f64> { range.iter().map(|e| e.nd as f64).collect() };
    let now = stats::std_dev(&nd(&curve[curve.len() - w..]));
    let before = stats::std_dev(&nd(&curve[curve.len() - 2 * w..curve.len() - w]));
    (now - before).abs() <= stop.tolerance
}

/// Writes the reward curve CSV (`episode,mean_reward,nd,awt,nsp`).
pub fn write_reward_curve<W: Write>(curve: &[EpisodeStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in curve {
        w.serialize(e)?;
    }
    if curve.is_empty() {
        w.write_record(["episode", "mean_reward", "nd", "awt", "nsp"])?;
    }
    w.flush()?;
    Ok(())
}
