//! Streaming fixed-capacity clustering memory for novelty-based exploration,
//! together with the embeddings, toy environments, tabular agent and shared
//! memory service used to exercise it.

pub mod agent;
pub mod embeddings;
pub mod env;
pub mod error;
pub mod memory;
pub mod normalizer;
pub mod service;
mod snapshot;

pub use error::{RecodeError, Result};
pub use memory::{
    intrinsic_reward_raw, kernel_value, Atom, BandwidthEma, Branch, RecodeConfig, RecodeMemory, RemovalStrategy,
    StepTrace,
};
pub use normalizer::RewardNormalizer;
pub use service::{spawn_actors, Actor, MemoryService, RunStats, SchedulingMode, ServiceError};
