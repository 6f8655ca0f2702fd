use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Action, Environment, RenderMode, StepResult, Termination};
use crate::embeddings::Observation;
use crate::error::{RecodeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoMazeConfig {
    /// Odd side length, at least 5.
    pub size: usize,
    pub num_colors: usize,
    pub max_steps: u64,
    pub seed: u64,
}

impl Default for DiscoMazeConfig {
    fn default() -> Self {
        Self {
            size: 21,
            num_colors: 5,
            max_steps: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Open,
    Wall,
}

/// Perfect maze whose wall colours are redrawn after every move.
///
/// The layout comes from a seeded recursive backtracker over the odd lattice.
/// The agent starts in the bottom-left open cell; the goal is the open cell
/// farthest from it. Stepping into a wall ends the episode.
#[derive(Debug, Clone)]
pub struct DiscoMaze {
    config: DiscoMazeConfig,
    layout: Vec<Cell>,
    wall_colors: Vec<u8>,
    start: usize,
    goal: usize,
    agent: usize,
    step_count: u64,
    terminated: bool,
    mode: RenderMode,
    color_rng: ChaCha8Rng,
}

impl DiscoMaze {
    pub fn new(config: DiscoMazeConfig, mode: RenderMode) -> Result<Self> {
        if config.size < 5 || config.size % 2 == 0 {
            return Err(RecodeError::InvalidConfig("maze size must be odd and >= 5".into()));
        }
        if config.num_colors == 0 || config.num_colors > u8::MAX as usize {
            return Err(RecodeError::InvalidConfig("num_colors must lie in 1..=255".into()));
        }
        if config.max_steps == 0 {
            return Err(RecodeError::InvalidConfig("max_steps must be positive".into()));
        }
        let n = config.size;
        let layout = carve(n, config.seed);
        let start = (n - 2) * n + 1;
        let dist = bfs(&layout, n, start);
        let goal = (0..n * n)
            .filter(|&i| dist[i].is_some())
            .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)))
            .expect("start is open");
        let mut color_rng = ChaCha8Rng::seed_from_u64(config.seed);
        color_rng.set_stream(1);
        let mut maze = Self {
            wall_colors: vec![0; n * n],
            config,
            layout,
            start,
            goal,
            agent: start,
            step_count: 0,
            terminated: false,
            mode,
            color_rng,
        };
        maze.resample_colors();
        Ok(maze)
    }

    /// Reseeds the colour stream, keeping the layout.
    pub fn with_color_seed(mut self, seed: u64) -> Self {
        self.color_rng = ChaCha8Rng::seed_from_u64(seed);
        self.color_rng.set_stream(1);
        self.resample_colors();
        self
    }

    pub fn config(&self) -> &DiscoMazeConfig {
        &self.config
    }

    pub fn size(&self) -> usize {
        self.config.size
    }

    pub fn layout(&self) -> &[Cell] {
        &self.layout
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.layout[row * self.config.size + col]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn mode(&self) -> RenderMode {
        self.mode
    }

    /// Colour index per cell; meaningful on wall cells only.
    pub fn wall_colors(&self) -> &[u8] {
        &self.wall_colors
    }

    pub fn open_cells(&self) -> usize {
        self.layout.iter().filter(|&&c| c == Cell::Open).count()
    }

    /// Shortest-path distance from the start to every cell (`None` for walls).
    pub fn distances_from_start(&self) -> Vec<Option<usize>> {
        bfs(&self.layout, self.config.size, self.start)
    }

    fn resample_colors(&mut self) {
        let k = self.config.num_colors as u8;
        for (cell, color) in self.layout.iter().zip(self.wall_colors.iter_mut()) {
            if *cell == Cell::Wall {
                *color = self.color_rng.random_range(0..k);
            }
        }
    }

    /// `#` wall, `.` open, `S` start, `G` goal; one line per row.
    pub fn to_text(&self) -> String {
        let n = self.config.size;
        let mut out = String::with_capacity(n * (n + 1));
        for r in 0..n {
            for c in 0..n {
                let i = r * n + c;
                out.push(if i == self.start {
                    'S'
                } else if i == self.goal {
                    'G'
                } else if self.layout[i] == Cell::Wall {
                    '#'
                } else {
                    '.'
                });
            }
            out.push('\n');
        }
        out
    }
}

fn carve(n: usize, seed: u64) -> Vec<Cell> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layout = vec![Cell::Wall; n * n];
    let origin = (n - 2, 1);
    layout[origin.0 * n + origin.1] = Cell::Open;
    let mut stack = vec![origin];
    while let Some(&(r, c)) = stack.last() {
        let mut options: Vec<(usize, usize)> = Vec::with_capacity(4);
        if r >= 3 {
            options.push((r - 2, c));
        }
        if r + 2 <= n - 2 {
            options.push((r + 2, c));
        }
        if c >= 3 {
            options.push((r, c - 2));
        }
        if c + 2 <= n - 2 {
            options.push((r, c + 2));
        }
        options.retain(|&(rr, cc)| layout[rr * n + cc] == Cell::Wall);
        if options.is_empty() {
            stack.pop();
            continue;
        }
        options.shuffle(&mut rng);
        let (nr, nc) = options[0];
        layout[((r + nr) / 2) * n + (c + nc) / 2] = Cell::Open;
        layout[nr * n + nc] = Cell::Open;
        stack.push((nr, nc));
    }
    layout
}

fn bfs(layout: &[Cell], n: usize, from: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; layout.len()];
    dist[from] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(i) = queue.pop_front() {
        let d = dist[i].expect("queued cells have a distance");
        let (r, c) = (i / n, i % n);
        for a in Action::ALL {
            let (dr, dc) = a.delta();
            let (Some(rr), Some(cc)) = (r.checked_add_signed(dr), c.checked_add_signed(dc)) else {
                continue;
            };
            if rr >= n || cc >= n {
                continue;
            }
            let j = rr * n + cc;
            if layout[j] == Cell::Open && dist[j].is_none() {
                dist[j] = Some(d + 1);
                queue.push_back(j);
            }
        }
    }
    dist
}

impl Environment for DiscoMaze {
    fn num_states(&self) -> usize {
        self.config.size * self.config.size
    }

    fn reset(&mut self) -> Observation {
        self.agent = self.start;
        self.step_count = 0;
        self.terminated = false;
        self.resample_colors();
        self.render(self.mode)
    }

    fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.terminated {
            return Err(RecodeError::EpisodeTerminated);
        }
        let n = self.config.size;
        self.step_count += 1;
        let (r, c) = (self.agent / n, self.agent % n);
        let (dr, dc) = action.delta();
        let target = match (r.checked_add_signed(dr), c.checked_add_signed(dc)) {
            (Some(rr), Some(cc)) if rr < n && cc < n => Some(rr * n + cc),
            _ => None,
        };
        let cause = match target {
            Some(j) if self.layout[j] == Cell::Open => {
                self.agent = j;
                if j == self.goal {
                    Termination::Goal
                } else if self.step_count >= self.config.max_steps {
                    Termination::Timeout
                } else {
                    Termination::None
                }
            }
            _ => Termination::Wall,
        };
        self.terminated = cause != Termination::None;
        self.resample_colors();
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
        let cells = self.config.size * self.config.size;
        match mode {
            RenderMode::Full => cells * (self.config.num_colors + 3),
            RenderMode::PositionOnly => cells,
        }
    }

    fn render(&self, mode: RenderMode) -> Observation {
        let cells = self.config.size * self.config.size;
        let mut obs = vec![0.0; self.observation_dim(mode)];
        match mode {
            RenderMode::PositionOnly => obs[self.agent] = 1.0,
            RenderMode::Full => {
                let width = self.config.num_colors + 3;
                for i in 0..cells {
                    let category = if i == self.agent {
                        self.config.num_colors + 1
                    } else if i == self.goal {
                        self.config.num_colors + 2
                    } else if self.layout[i] == Cell::Wall {
                        1 + self.wall_colors[i] as usize
                    } else {
                        0
                    };
                    obs[i * width + category] = 1.0;
                }
            }
        }
        obs
    }
}
