//! Embedding functions that map observations into the memory's space.

mod ap;

pub use ap::{ApConfig, ApModel, Block, GradCheck, GradCheckReport, Transition};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RecodeError, Result};

/// Environment-specific feature vector.
pub type Observation = Vec<f64>;

pub trait EmbeddingFunction {
    fn dim(&self) -> usize;
    fn embed(&self, obs: &[f64]) -> Result<Vec<f64>>;
}

/// Unit basis vector `e_{state_index}` in `num_states` dimensions.
pub fn one_hot_embed(state_index: usize, num_states: usize) -> Result<Vec<f64>> {
    if state_index >= num_states {
        return Err(RecodeError::IndexOutOfRange {
            index: state_index,
            len: num_states,
        });
    }
    let mut v = vec![0.0; num_states];
    v[state_index] = 1.0;
    Ok(v)
}

/// Passes observations through unchanged.
#[derive(Debug, Clone, Copy)]
pub struct Identity {
    pub dim: usize,
}

impl EmbeddingFunction for Identity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.dim {
            return Err(RecodeError::DimensionMismatch {
                expected: self.dim,
                got: obs.len(),
            });
        }
        Ok(obs.to_vec())
    }
}

/// Fixed Gaussian random projection, `out_dim × in_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjection {
    in_dim: usize,
    out_dim: usize,
    matrix: Vec<f64>,
}

impl RandomProjection {
    /// Entries are i.i.d. N(0, 1/out_dim) drawn from a seeded stream.
    pub fn new(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (out_dim as f64).sqrt().recip();
        let matrix = (0..in_dim * out_dim)
            .map(|_| standard_normal(&mut rng) * scale)
            .collect();
        Self {
            in_dim,
            out_dim,
            matrix,
        }
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
}

impl EmbeddingFunction for RandomProjection {
    fn dim(&self) -> usize {
        self.out_dim
    }

    fn embed(&self, obs: &[f64]) -> Result<Vec<f64>> {
        random_projection_embed(obs, self)
    }
}

pub fn random_projection_embed(obs: &[f64], projection: &RandomProjection) -> Result<Vec<f64>> {
    if obs.len() != projection.in_dim {
        return Err(RecodeError::DimensionMismatch {
            expected: projection.in_dim,
            got: obs.len(),
        });
    }
    Ok(projection
        .matrix
        .chunks_exact(projection.in_dim)
        .map(|row| row.iter().zip(obs).map(|(a, x)| a * x).sum())
        .collect())
}

/// Box-Muller; one sample per call keeps the stream position simple.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Appends `noise_dims` i.i.d. uniform coordinates spanning the range of `e`
/// (`[min e, max e]`, or `[min e, min e + 1]` when `e` is constant).
pub fn noise_augment<R: Rng>(e: &[f64], noise_dims: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(e.len() + noise_dims);
    out.extend_from_slice(e);
    if noise_dims == 0 {
        return out;
    }
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, width) = if lo.is_finite() && hi > lo {
        (lo, hi - lo)
    } else if lo.is_finite() {
        (lo, 1.0)
    } else {
        (0.0, 1.0)
    };
    out.extend((0..noise_dims).map(|_| lo + width * rng.random::<f64>()));
    out
}
