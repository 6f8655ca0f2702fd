//! Tabular Q-learning driven by extrinsic plus intrinsic reward.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingFunction;
use crate::env::{Action, Environment, Termination};
use crate::error::{RecodeError, Result};
use crate::memory::RecodeMemory;
use crate::normalizer::RewardNormalizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Q-learning step size α.
    pub learning_rate: f64,
    /// ε-greedy exploration rate.
    pub epsilon: f64,
    /// RL discount.
    pub discount: f64,
    /// Weight β of the normalised intrinsic reward.
    pub intrinsic_scale: f64,
    /// Value of every action before its first update.
    pub initial_q: f64,
    pub episodes: u64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epsilon: 0.05,
            discount: 0.99,
            intrinsic_scale: 1.0,
            initial_q: 0.0,
            episodes: 100,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate <= 1.0
            && (0.0..=1.0).contains(&self.epsilon)
            && (0.0..1.0).contains(&self.discount)
            && self.intrinsic_scale >= 0.0
            && self.intrinsic_scale.is_finite()
            && self.initial_q.is_finite();
        if ok {
            Ok(())
        } else {
            Err(RecodeError::InvalidConfig(format!("invalid agent config {self:?}")))
        }
    }
}

/// Action values per state; unseen entries read as the initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_actions: usize,
    initial: f64,
    values: HashMap<usize, Vec<f64>>,
}

impl QTable {
    pub fn new(num_actions: usize) -> Self {
        Self::with_initial(num_actions, 0.0)
    }

    pub fn with_initial(num_actions: usize, initial: f64) -> Self {
        Self {
            num_actions,
            initial,
            values: HashMap::new(),
        }
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn values(&self, state: usize) -> Vec<f64> {
        self.values
            .get(&state)
            .cloned()
            .unwrap_or_else(|| vec![self.initial; self.num_actions])
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values.get(&state).map_or(self.initial, |v| v[action])
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        let (n, init) = (self.num_actions, self.initial);
        self.values.entry(state).or_insert_with(|| vec![init; n])[action] = value;
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.values
            .get(&state)
            .map_or(self.initial, |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Greedy action with lowest-index tie-break.
    pub fn greedy(&self, state: usize) -> usize {
        let Some(v) = self.values.get(&state) else {
            return 0;
        };
        let mut best = 0;
        for (i, &x) in v.iter().enumerate() {
            if x > v[best] {
                best = i;
            }
        }
        best
    }

    /// Largest absolute value, unseen entries included.
    pub fn max_abs(&self) -> f64 {
        self.values.values().flatten().fold(self.initial.abs(), |m: f64, x| m.max(x.abs()))
    }
}

/// ε-greedy selection. One uniform draw decides whether to explore; a
/// second picks the random action.
pub fn select_action<R: Rng>(q: &QTable, state: usize, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..q.num_actions())
    } else {
        q.greedy(state)
    }
}

/// One-step temporal-difference backup.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    q: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    terminal: bool,
    alpha: f64,
    discount: f64,
) {
    let bootstrap = if terminal { 0.0 } else { discount * q.max_value(next_state) };
    let old = q.get(state, action);
    let updated = old + alpha * (reward + bootstrap - old);
    if updated != old {
        q.set(state, action, updated);
    }
}

/// Raw and normalised intrinsic reward for one embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsic {
    pub raw: f64,
    pub normalized: f64,
}

/// Anything that scores embeddings by novelty.
pub trait NoveltySource {
    fn intrinsic(&mut self, e: &[f64]) -> Result<Intrinsic>;
}

/// A memory and normaliser owned by a single agent.
#[derive(Debug, Clone)]
pub struct LocalNovelty {
    pub memory: RecodeMemory,
    pub normalizer: RewardNormalizer,
}

impl LocalNovelty {
    pub fn new(memory: RecodeMemory) -> Self {
        Self {
            memory,
            normalizer: RewardNormalizer::default(),
        }
    }
}

impl NoveltySource for LocalNovelty {
    fn intrinsic(&mut self, e: &[f64]) -> Result<Intrinsic> {
        let raw = self.memory.process(e)?;
        Ok(Intrinsic {
            raw,
            normalized: self.normalizer.normalize(raw),
        })
    }
}

/// Scores everything zero. Pairs with `intrinsic_scale = 0` for a purely
/// extrinsic or random learner.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoNovelty;

impl NoveltySource for NoNovelty {
    fn intrinsic(&mut self, _e: &[f64]) -> Result<Intrinsic> {
        Ok(Intrinsic {
            raw: 0.0,
            normalized: 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub length: u64,
    pub extrinsic_return: f64,
    /// Sum of raw intrinsic rewards over the episode's steps.
    pub intrinsic_sum: f64,
    pub unique_states: usize,
    pub cause: Termination,
    /// State indices visited, starting with the reset state.
    pub states: Vec<usize>,
}

/// Runs one episode of at most `step_limit` steps.
///
/// Every observation, the reset one included, is embedded and fed to
/// `novelty`; the reset observation's reward is not used for learning. Each
/// step combines `r_ext + β·r_int_normalized` into a Q-update. An episode cut
/// by `step_limit` reports cause `None`.
pub fn run_episode<E, R>(
    env: &mut E,
    embed: &dyn EmbeddingFunction,
    novelty: &mut dyn NoveltySource,
    q: &mut QTable,
    config: &AgentConfig,
    step_limit: u64,
    rng: &mut R,
) -> Result<EpisodeRecord>
where
    E: Environment + ?Sized,
    R: Rng,
{
    let obs = env.reset();
    novelty.intrinsic(&embed.embed(&obs)?)?;
    let mut state = env.state_index();
    let mut record = EpisodeRecord {
        length: 0,
        extrinsic_return: 0.0,
        intrinsic_sum: 0.0,
        unique_states: 1,
        cause: Termination::None,
        states: vec![state],
    };
    let mut seen = HashSet::from([state]);

    while !env.is_terminated() && record.length < step_limit {
        let action = select_action(q, state, config.epsilon, rng);
        let step = env.step(Action::from_index(action).expect("4-action environments"))?;
        let next = env.state_index();
        let bonus = novelty.intrinsic(&embed.embed(&step.observation)?)?;
        let total = step.reward + config.intrinsic_scale * bonus.normalized;
        q_update(
            q,
            state,
            action,
            total,
            next,
            step.terminated,
            config.learning_rate,
            config.discount,
        );
        record.length += 1;
        record.extrinsic_return += step.reward;
        record.intrinsic_sum += bonus.raw;
        record.cause = step.cause;
        record.states.push(next);
        seen.insert(next);
        state = next;
    }
    record.unique_states = seen.len();
    Ok(record)
}

/// Coverage of a step-budgeted run.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub steps: u64,
    pub episodes: u64,
    pub unique_states: usize,
    pub goal_reached: bool,
    /// Step at which the goal was first reached.
    pub first_goal_step: Option<u64>,
    /// `(total steps, unique states)` after each episode.
    pub curve: Vec<(u64, usize)>,
}

/// Runs episodes until `step_budget` environment steps are spent.
pub fn run_agent<E, R>(
    env: &mut E,
    embed: &dyn EmbeddingFunction,
    novelty: &mut dyn NoveltySource,
    q: &mut QTable,
    config: &AgentConfig,
    step_budget: u64,
    rng: &mut R,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<Coverage>
where
    E: Environment + ?Sized,
    R: Rng,
{
    let mut seen = HashSet::new();
    let mut coverage = Coverage {
        steps: 0,
        episodes: 0,
        unique_states: 0,
        goal_reached: false,
        first_goal_step: None,
        curve: Vec::new(),
    };
    loop {
        let record = run_episode(env, embed, novelty, q, config, step_budget - coverage.steps, rng)?;
        coverage.steps += record.length;
        coverage.episodes += 1;
        seen.extend(record.states.iter().copied());
        if record.cause == Termination::Goal && !coverage.goal_reached {
            coverage.goal_reached = true;
            coverage.first_goal_step = Some(coverage.steps);
        }
        coverage.curve.push((coverage.steps, seen.len()));
        on_episode(&record);
        if coverage.steps >= step_budget || record.length == 0 {
            break;
        }
    }
    coverage.unique_states = seen.len();
    Ok(coverage)
}

/// Uniform-random policy over `step_budget` steps, resetting on
/// termination. Uses the same draws as [`select_action`] with ε = 1.
pub fn run_random_baseline<E, R>(env: &mut E, step_budget: u64, rng: &mut R) -> Result<Coverage>
where
    E: Environment + ?Sized,
    R: Rng,
{
    let q = QTable::new(env.num_actions());
    env.reset();
    let mut seen = HashSet::from([env.state_index()]);
    let mut coverage = Coverage {
        steps: 0,
        episodes: 1,
        unique_states: 1,
        goal_reached: false,
        first_goal_step: None,
        curve: Vec::new(),
    };
    while coverage.steps < step_budget {
        if env.is_terminated() {
            coverage.curve.push((coverage.steps, seen.len()));
            env.reset();
            coverage.episodes += 1;
        }
        let action = select_action(&q, env.state_index(), 1.0, rng);
        let step = env.step(Action::from_index(action).expect("4-action environments"))?;
        coverage.steps += 1;
        seen.insert(env.state_index());
        if step.cause == Termination::Goal && !coverage.goal_reached {
            coverage.goal_reached = true;
            coverage.first_goal_step = Some(coverage.steps);
        }
    }
    coverage.curve.push((coverage.steps, seen.len()));
    coverage.unique_states = seen.len();
    Ok(coverage)
}
