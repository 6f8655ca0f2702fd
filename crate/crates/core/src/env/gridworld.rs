use super::{Action, Environment, RenderMode, StepResult, Termination};
use crate::embeddings::Observation;
use crate::error::{RecodeError, Result};

/// Open square room. Moves against the boundary leave the agent in place;
/// reaching the goal (if any) pays 1 and ends the episode.
#[derive(Debug, Clone)]
pub struct GridWorld {
    size: usize,
    start: usize,
    goal: Option<usize>,
    max_steps: Option<u64>,
    mode: RenderMode,
    agent: usize,
    step_count: u64,
    terminated: bool,
}

impl GridWorld {
    /// Positions are `(row, col)`, row 0 at the top.
    pub fn new(size: usize, start: (usize, usize), goal: Option<(usize, usize)>, mode: RenderMode) -> Result<Self> {
        if size == 0 {
            return Err(RecodeError::InvalidConfig("grid size must be positive".into()));
        }
        let index = |(r, c): (usize, usize)| -> Result<usize> {
            if r >= size || c >= size {
                return Err(RecodeError::InvalidConfig(format!("position ({r}, {c}) outside {size}x{size} grid")));
            }
            Ok(r * size + c)
        };
        let start = index(start)?;
        let goal = goal.map(index).transpose()?;
        Ok(Self {
            size,
            start,
            goal,
            max_steps: None,
            mode,
            agent: start,
            step_count: 0,
            terminated: goal == Some(start),
        })
    }

    /// Episodes end with `Timeout` after this many steps.
    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = Some(max_steps);
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn start(&self) -> usize {
        self.start
    }
}

impl Environment for GridWorld {
    fn num_states(&self) -> usize {
        self.size * self.size
    }

    /// When the start is the goal the episode is over before it begins.
    fn reset(&mut self) -> Observation {
        self.agent = self.start;
        self.step_count = 0;
        self.terminated = self.goal == Some(self.start);
        self.render(self.mode)
    }

    fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.terminated {
            return Err(RecodeError::EpisodeTerminated);
        }
        self.step_count += 1;
        let n = self.size;
        let (r, c) = (self.agent / n, self.agent % n);
        let (dr, dc) = action.delta();
        if let (Some(rr), Some(cc)) = (r.checked_add_signed(dr), c.checked_add_signed(dc)) {
            if rr < n && cc < n {
                self.agent = rr * n + cc;
            }
        }
        let cause = if Some(self.agent) == self.goal {
            Termination::Goal
        } else if self.max_steps.is_some_and(|m| self.step_count >= m) {
            Termination::Timeout
        } else {
            Termination::None
        };
        self.terminated = cause != Termination::None;
        Ok(StepResult {
            observation: self.render(self.mode),
            reward: if cause == Termination::Goal { 1.0 } else { 0.0 },
            terminated: self.terminated,
            cause,
        })
    }

    fn state_index(&self) -> usize {
        self.agent
    }

    fn is_terminated(&self) -> bool {
        self.terminated
    }

    fn observation_dim(&self, mode: RenderMode) -> usize {
        match mode {
            RenderMode::Full => self.size * self.size * 3,
            RenderMode::PositionOnly => self.size * self.size,
        }
    }

    /// Full mode uses categories {open, agent, goal} per cell.
    fn render(&self, mode: RenderMode) -> Observation {
        let mut obs = vec![0.0; self.observation_dim(mode)];
        match mode {
            RenderMode::PositionOnly => obs[self.agent] = 1.0,
            RenderMode::Full => {
                for i in 0..self.size * self.size {
                    let category = if i == self.agent {
                        1
                    } else if Some(i) == self.goal {
                        2
                    } else {
                        0
                    };
                    obs[i * 3 + category] = 1.0;
                }
            }
        }
        obs
    }
}
