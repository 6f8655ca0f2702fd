//! One memory shared by many concurrent actors.
//!
//! Every submission runs a full memory step plus reward normalisation under
//! a single lock, so the final state always corresponds to some sequential
//! order of the submitted embeddings. In round-robin mode that order is
//! fixed: actor 0, 1, …, n−1, 0, 1, … with finished actors skipped.

use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Condvar, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Intrinsic, NoveltySource};
use crate::error::{RecodeError, Result};
use crate::memory::RecodeMemory;
use crate::normalizer::RewardNormalizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulingMode {
    FreeRunning,
    DeterministicRoundRobin,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error("actor {actor} panicked: {message}")]
    ActorPanicked { actor: usize, message: String },
    #[error("actor {actor} failed: {source}")]
    ActorFailed { actor: usize, source: RecodeError },
    #[error("at least one actor is required")]
    NoActors,
}

struct Shared {
    memory: RecodeMemory,
    normalizer: RewardNormalizer,
}

pub struct MemoryService {
    inner: Mutex<Shared>,
    submissions: AtomicU64,
}

fn relock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // a panicking actor never leaves the memory half-updated: process()
    // validates before mutating, so a poisoned lock is still consistent
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl MemoryService {
    pub fn new(memory: RecodeMemory, normalizer: RewardNormalizer) -> Self {
        Self {
            inner: Mutex::new(Shared { memory, normalizer }),
            submissions: AtomicU64::new(0),
        }
    }

    /// Processes `e` and normalises the reward as one atomic step.
    pub fn submit(&self, e: &[f64]) -> Result<Intrinsic> {
        let mut shared = relock(&self.inner);
        let raw = shared.memory.process(e)?;
        let normalized = shared.normalizer.normalize(raw);
        self.submissions.fetch_add(1, Ordering::SeqCst);
        Ok(Intrinsic { raw, normalized })
    }

    pub fn submissions(&self) -> u64 {
        self.submissions.load(Ordering::SeqCst)
    }

    pub fn snapshot(&self) -> String {
        relock(&self.inner).memory.to_snapshot()
    }

    /// Read access to the memory between submissions.
    pub fn with_memory<T>(&self, f: impl FnOnce(&RecodeMemory) -> T) -> T {
        f(&relock(&self.inner).memory)
    }

    pub fn into_inner(self) -> (RecodeMemory, RewardNormalizer) {
        let shared = self.inner.into_inner().unwrap_or_else(|p| p.into_inner());
        (shared.memory, shared.normalizer)
    }
}

impl NoveltySource for &MemoryService {
    fn intrinsic(&mut self, e: &[f64]) -> Result<Intrinsic> {
        self.submit(e)
    }
}

/// An actor loop body, driven one submission at a time.
pub trait Actor: Send {
    /// Next embedding to submit, or `None` once the actor is done.
    fn next_embedding(&mut self) -> Option<Vec<f64>>;

    /// Reward returned for the last submission.
    fn observe(&mut self, _reward: Intrinsic) {}
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStats {
    pub per_actor: Vec<u64>,
    pub total: u64,
}

enum Outcome {
    Submitted,
    Finished,
    Failed(ServiceError),
}

fn one_turn<A: Actor>(id: usize, actor: &mut A, service: &MemoryService) -> Outcome {
    let result = panic::catch_unwind(AssertUnwindSafe(|| {
        let Some(e) = actor.next_embedding() else {
            return Ok(false);
        };
        let reward = service.submit(&e)?;
        actor.observe(reward);
        Ok(true)
    }));
    match result {
        Ok(Ok(true)) => Outcome::Submitted,
        Ok(Ok(false)) => Outcome::Finished,
        Ok(Err(source)) => Outcome::Failed(ServiceError::ActorFailed { actor: id, source }),
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            Outcome::Failed(ServiceError::ActorPanicked { actor: id, message })
        }
    }
}

struct Turn {
    current: Option<usize>,
    active: Vec<bool>,
    failure: Option<ServiceError>,
}

impl Turn {
    fn advance(&mut self, from: usize) {
        let n = self.active.len();
        self.current = (1..=n).map(|s| (from + s) % n).find(|&j| self.active[j]);
    }
}

/// Runs every actor on its own thread against `service` until all are done
/// or one fails. Actors are handed back in their final state.
pub fn spawn_actors<A: Actor>(
    service: &MemoryService,
    mut actors: Vec<A>,
    mode: SchedulingMode,
) -> std::result::Result<(RunStats, Vec<A>), ServiceError> {
    if actors.is_empty() {
        return Err(ServiceError::NoActors);
    }
    let n = actors.len();
    let mut per_actor = vec![0u64; n];

    let failure = match mode {
        SchedulingMode::FreeRunning => {
            let abort = AtomicBool::new(false);
            let failure: Mutex<Option<ServiceError>> = Mutex::new(None);
            std::thread::scope(|scope| {
                for (id, (actor, count)) in actors.iter_mut().zip(per_actor.iter_mut()).enumerate() {
                    let (abort, failure) = (&abort, &failure);
                    scope.spawn(move || {
                        while !abort.load(Ordering::SeqCst) {
                            match one_turn(id, actor, service) {
                                Outcome::Submitted => *count += 1,
                                Outcome::Finished => break,
                                Outcome::Failed(e) => {
                                    abort.store(true, Ordering::SeqCst);
                                    relock(failure).get_or_insert(e);
                                    break;
                                }
                            }
                        }
                    });
                }
            });
            failure.into_inner().unwrap_or_else(|p| p.into_inner())
        }
        SchedulingMode::DeterministicRoundRobin => {
            let turn = Mutex::new(Turn {
                current: Some(0),
                active: vec![true; n],
                failure: None,
            });
            let cv = Condvar::new();
            std::thread::scope(|scope| {
                for (id, (actor, count)) in actors.iter_mut().zip(per_actor.iter_mut()).enumerate() {
                    let (turn, cv) = (&turn, &cv);
                    scope.spawn(move || loop {
                        {
                            let mut t = relock(turn);
                            while t.current != Some(id) && t.current.is_some() && t.failure.is_none() {
                                t = cv.wait(t).unwrap_or_else(|p| p.into_inner());
                            }
                            if t.current != Some(id) || t.failure.is_some() {
                                return;
                            }
                        }
                        let outcome = one_turn(id, actor, service);
                        let mut t = relock(turn);
                        let stop = match outcome {
                            Outcome::Submitted => {
                                *count += 1;
                                false
                            }
                            Outcome::Finished => {
                                t.active[id] = false;
                                true
                            }
                            Outcome::Failed(e) => {
                                t.active[id] = false;
                                t.failure.get_or_insert(e);
                                true
                            }
                        };
                        t.advance(id);
                        cv.notify_all();
                        if stop {
                            return;
                        }
                    });
                }
            });
            turn.into_inner().unwrap_or_else(|p| p.into_inner()).failure
        }
    };

    if let Some(e) = failure {
        return Err(e);
    }
    let total = per_actor.iter().sum();
    Ok((RunStats { per_actor, total }, actors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::RecodeConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[derive(Debug)]
    struct Scripted {
        stream: Vec<Vec<f64>>,
        at: usize,
        rewards: Vec<f64>,
    }

    impl Actor for Scripted {
        fn next_embedding(&mut self) -> Option<Vec<f64>> {
            let e = self.stream.get(self.at).cloned();
            self.at += 1;
            e
        }

        fn observe(&mut self, reward: Intrinsic) {
            self.rewards.push(reward.raw);
        }
    }

    fn stream(seed: u64, len: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| vec![rng.random::<f64>() * 10.0, rng.random::<f64>()]).collect()
    }

    fn service() -> MemoryService {
        let config = RecodeConfig {
            capacity: 16,
            k: 4,
            seed: 2,
            ..RecodeConfig::default()
        };
        MemoryService::new(RecodeMemory::new(config, 2).unwrap(), RewardNormalizer::default())
    }

    #[test]
    fn single_actor_matches_direct_processing() {
        let s = service();
        let data = stream(1, 200);
        let actor = Scripted { stream: data.clone(), at: 0, rewards: vec![] };
        let (stats, actors) = spawn_actors(&s, vec![actor], SchedulingMode::FreeRunning).unwrap();
        assert_eq!(stats.total, 200);

        let (mut direct, _) = service().into_inner();
        let rewards: Vec<f64> = data.iter().map(|e| direct.process(e).unwrap()).collect();
        assert_eq!(actors[0].rewards, rewards);
        assert_eq!(s.snapshot(), direct.to_snapshot());
    }

    #[test]
    fn round_robin_matches_interleaved_replay_with_uneven_actors() {
        let lens = [30, 5, 17];
        let actors: Vec<Scripted> = lens
            .iter()
            .enumerate()
            .map(|(i, &len)| Scripted { stream: stream(10 + i as u64, len), at: 0, rewards: vec![] })
            .collect();
        let streams: Vec<_> = actors.iter().map(|a| a.stream.clone()).collect();
        let s = service();
        let (stats, _) = spawn_actors(&s, actors, SchedulingMode::DeterministicRoundRobin).unwrap();
        assert_eq!(stats.per_actor, vec![30, 5, 17]);
        assert_eq!(s.submissions(), 52);

        let (mut replay, _) = service().into_inner();
        for round in 0..30 {
            for st in &streams {
                if let Some(e) = st.get(round) {
                    replay.process(e).unwrap();
                }
            }
        }
        assert_eq!(s.snapshot(), replay.to_snapshot());
    }

    #[derive(Debug)]
    struct Faulty(usize);

    impl Actor for Faulty {
        fn next_embedding(&mut self) -> Option<Vec<f64>> {
            self.0 += 1;
            if self.0 == 3 {
                panic!("actor blew up");
            }
            Some(vec![self.0 as f64, 0.0])
        }
    }

    #[test]
    fn panicking_actor_aborts_run_and_releases_lock() {
        for mode in [SchedulingMode::FreeRunning, SchedulingMode::DeterministicRoundRobin] {
            let s = service();
            let err = spawn_actors(&s, vec![Faulty(0), Faulty(0)], mode).unwrap_err();
            assert!(matches!(err, ServiceError::ActorPanicked { .. }), "{err}");
            // the service is still usable
            s.submit(&[0.0, 0.0]).unwrap();
        }
    }

    #[derive(Debug)]
    struct Bad;

    impl Actor for Bad {
        fn next_embedding(&mut self) -> Option<Vec<f64>> {
            Some(vec![f64::INFINITY, 0.0])
        }
    }

    #[test]
    fn rejected_embedding_fails_the_run_without_state_change() {
        let s = service();
        let before = s.snapshot();
        let err = spawn_actors(&s, vec![Bad], SchedulingMode::DeterministicRoundRobin).unwrap_err();
        assert!(matches!(err, ServiceError::ActorFailed { actor: 0, .. }));
        assert_eq!(s.snapshot(), before);
        assert_eq!(s.submissions(), 0);
    }

    #[test]
    fn no_actors_is_an_error() {
        let s = service();
        assert_eq!(
            spawn_actors::<Scripted>(&s, vec![], SchedulingMode::FreeRunning).unwrap_err(),
            ServiceError::NoActors
        );
    }
}
