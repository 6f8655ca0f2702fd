//! Seeded toy environments and embedding streams.

mod gridworld;
mod maze;
mod stream;

pub use gridworld::GridWorld;
pub use maze::{Cell, DiscoMaze, DiscoMazeConfig};
pub use stream::{expanding_square_batch, StreamKind, StreamSchedule};

use crate::embeddings::Observation;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(d_row, d_col)` with row 0 at the top.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    None,
    Wall,
    Goal,
    Timeout,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::None => "none",
            Termination::Wall => "wall",
            Termination::Goal => "goal",
            Termination::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub cause: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    /// Per-cell one-hot over {open, wall colours…, agent, goal}.
    Full,
    /// One-hot of the agent's cell index.
    PositionOnly,
}

/// Episodic 4-action grid environment.
pub trait Environment {
    fn num_actions(&self) -> usize {
        Action::ALL.len()
    }

    /// Number of grid cells; state indices lie in `0..num_states()`.
    fn num_states(&self) -> usize;

    /// Starts a new episode and returns the first observation.
    fn reset(&mut self) -> Observation;

    fn step(&mut self, action: Action) -> Result<StepResult>;

    /// Row-major index of the agent's cell.
    fn state_index(&self) -> usize;

    fn is_terminated(&self) -> bool;

    fn render(&self, mode: RenderMode) -> Observation;

    fn observation_dim(&self, mode: RenderMode) -> usize;
}
