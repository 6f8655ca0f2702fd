//! Fixed-capacity clustering memory that turns embeddings into novelty rewards.
//!
//! Each call to [`RecodeMemory::process`] runs one full update step:
//!
//! 1. soft visitation count of `e` under the current bandwidth,
//! 2. raw reward `1 / (sqrt(n) + n0)`,
//! 3. k-nearest-neighbour bandwidth update,
//! 4. discount of every atom count by `gamma`,
//! 5. nearest atom lookup and a coin flip `u ~ U[0, 1)`,
//! 6. either insertion of `e` as a new atom (evicting one when full) or
//!    assimilation of `e` into the nearest atom.
//!
//! The store starts empty. While it holds fewer than `capacity` atoms a far
//! embedding is appended without a coin flip; once full, insertion needs
//! `u < eta` and evicts an atom chosen by the configured [`RemovalStrategy`].
//! The evicted atom's count moves to its nearest surviving neighbour, so the
//! total count after a step is always `gamma * total_before + 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RecodeError, Result};

/// Floor applied to counts inside removal weights only.
pub const REMOVAL_COUNT_FLOOR: f64 = 1e-6;

/// How the atom to evict is chosen when inserting into a full memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalStrategy {
    /// `P(j) ∝ 1 / c_j²`
    InverseCountSquared,
    /// `P(j) ∝ 1 / c_j`
    InverseCount,
    /// Deterministic argmin of the counts.
    MinCount,
}

impl RemovalStrategy {
    pub const ALL: [RemovalStrategy; 3] = [
        RemovalStrategy::InverseCountSquared,
        RemovalStrategy::InverseCount,
        RemovalStrategy::MinCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RemovalStrategy::InverseCountSquared => "inverse_count_squared",
            RemovalStrategy::InverseCount => "inverse_count",
            RemovalStrategy::MinCount => "min_count",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Which side of the bandwidth moving average `tau` weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthEma {
    /// `d ← (1 − tau)·d + tau·mean_knn`
    #[default]
    TauWeightsNew,
    /// `d ← tau·d + (1 − tau)·mean_knn`
    TauWeightsOld,
}

impl BandwidthEma {
    pub fn name(self) -> &'static str {
        match self {
            BandwidthEma::TauWeightsNew => "tau_weights_new",
            BandwidthEma::TauWeightsOld => "tau_weights_old",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tau_weights_new" => Some(BandwidthEma::TauWeightsNew),
            "tau_weights_old" => Some(BandwidthEma::TauWeightsOld),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecodeConfig {
    /// Maximum number of atoms.
    pub capacity: usize,
    /// Neighbours used by the bandwidth estimate.
    pub k: usize,
    /// Relative tolerance: an embedding is "far" when its squared distance to
    /// the nearest atom exceeds `kappa * d_ema_sq`.
    pub kappa: f64,
    /// Bandwidth moving-average weight.
    pub tau: f64,
    /// Per-step count discount.
    pub gamma: f64,
    /// Insertion probability once the memory is full.
    pub eta: f64,
    /// Reward denominator constant.
    pub n0: f64,
    /// Kernel width relative to the bandwidth.
    pub epsilon: f64,
    pub removal: RemovalStrategy,
    pub bandwidth_ema: BandwidthEma,
    pub seed: u64,
}

impl Default for RecodeConfig {
    fn default() -> Self {
        Self {
            capacity: 50_000,
            k: 20,
            kappa: 0.2,
            tau: 0.9999,
            gamma: 0.999,
            eta: 0.05,
            n0: 0.01,
            epsilon: 1e-3,
            removal: RemovalStrategy::InverseCountSquared,
            bandwidth_ema: BandwidthEma::TauWeightsNew,
            seed: 0,
        }
    }
}

impl RecodeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(RecodeError::InvalidConfig(msg.to_string()));
        if self.capacity < 2 {
            return bad("capacity must be at least 2");
        }
        if self.k == 0 {
            return bad("k must be positive");
        }
        let reals = [
            ("kappa", self.kappa),
            ("tau", self.tau),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("n0", self.n0),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in reals {
            if !v.is_finite() {
                return Err(RecodeError::InvalidConfig(format!("{name} must be finite")));
            }
        }
        if self.kappa <= 0.0 {
            return bad("kappa must be > 0");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        if self.n0 <= 0.0 {
            return bad("n0 must be > 0");
        }
        if self.epsilon <= 0.0 {
            return bad("epsilon must be > 0");
        }
        Ok(())
    }
}

/// A cluster centre with its soft visitation count.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub position: Vec<f64>,
    pub count: f64,
    /// Value of `steps_processed` when the atom was inserted.
    pub born: u64,
}

/// Which branch of the update a step took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `e` became a new atom at `slot`; `evicted` is set when an existing
    /// atom was removed to make room.
    Inserted { slot: usize, evicted: bool },
    /// `e` was merged into the atom at `slot`.
    Assimilated { slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTrace {
    pub reward: f64,
    pub soft_count: f64,
    /// Bandwidth used for the reward.
    pub d_ema_sq_before: f64,
    /// Bandwidth used for the insertion test.
    pub d_ema_sq_after: f64,
    pub branch: Branch,
}

/// Kernel between an atom and an embedding.
///
/// `1 / (1 + ‖e − m‖² / (epsilon · d_ema_sq))` inside the bandwidth radius
/// (strict `‖e − m‖² < d_ema_sq`), zero outside and zero when `d_ema_sq = 0`.
pub fn kernel_value(m: &[f64], e: &[f64], d_ema_sq: f64, epsilon: f64) -> Result<f64> {
    if m.len() != e.len() {
        return Err(RecodeError::DimensionMismatch {
            expected: m.len(),
            got: e.len(),
        });
    }
    Ok(kernel_from_sq_dist(sq_dist(m, e), d_ema_sq, epsilon))
}

#[inline]
pub(crate) fn kernel_from_sq_dist(sq: f64, d_ema_sq: f64, epsilon: f64) -> f64 {
    if d_ema_sq > 0.0 && sq < d_ema_sq {
        1.0 / (1.0 + sq / (epsilon * d_ema_sq))
    } else {
        0.0
    }
}

/// `1 / (sqrt(n) + n0)`
pub fn intrinsic_reward_raw(n: f64, n0: f64) -> f64 {
    1.0 / (n.sqrt() + n0)
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Orders `(distance, index)` pairs with lowest-index tie-break.
#[inline]
fn by_dist(dists: &[f64]) -> impl Fn(&usize, &usize) -> std::cmp::Ordering + '_ {
    move |&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b))
}

fn argmin(values: &[f64]) -> Option<usize> {
    (0..values.len()).min_by(by_dist(values))
}

fn k_smallest(dists: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dists.len()).collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, by_dist(dists));
        idx.truncate(k);
    }
    idx.sort_unstable_by(by_dist(dists));
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecodeMemory {
    config: RecodeConfig,
    dim: usize,
    atoms: Vec<Atom>,
    d_ema_sq: f64,
    steps_processed: u64,
    rng: ChaCha8Rng,
}

impl RecodeMemory {
    /// Empty memory for `dim`-dimensional embeddings.
    pub fn new(config: RecodeConfig, dim: usize) -> Result<Self> {
        Self::from_parts(config, dim, Vec::new(), 0.0, 0)
    }

    /// Memory with pre-populated atoms and bandwidth. The RNG starts from
    /// `config.seed`.
    pub fn from_parts(
        config: RecodeConfig,
        dim: usize,
        atoms: Vec<Atom>,
        d_ema_sq: f64,
        steps_processed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if dim == 0 {
            return Err(RecodeError::InvalidConfig("dimension must be >= 1".into()));
        }
        if atoms.len() > config.capacity {
            return Err(RecodeError::InvalidConfig(format!(
                "{} atoms exceed capacity {}",
                atoms.len(),
                config.capacity
            )));
        }
        for atom in &atoms {
            check_embedding(&atom.position, dim)?;
            if !(atom.count.is_finite() && atom.count >= 0.0) {
                return Err(RecodeError::InvalidConfig("atom count must be finite and >= 0".into()));
            }
        }
        if !(d_ema_sq.is_finite() && d_ema_sq >= 0.0) {
            return Err(RecodeError::InvalidConfig("d_ema_sq must be finite and >= 0".into()));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            dim,
            atoms,
            d_ema_sq,
            steps_processed,
            rng,
        })
    }

    pub fn config(&self) -> &RecodeConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.atoms.len() >= self.config.capacity
    }

    pub fn d_ema_sq(&self) -> f64 {
        self.d_ema_sq
    }

    pub fn steps_processed(&self) -> u64 {
        self.steps_processed
    }

    pub fn total_count(&self) -> f64 {
        self.atoms.iter().map(|a| a.count).sum()
    }

    pub(crate) fn rng_state(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub(crate) fn set_rng_state(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }

    fn check(&self, e: &[f64]) -> Result<()> {
        check_embedding(e, self.dim)
    }

    fn sq_distances(&self, e: &[f64]) -> Vec<f64> {
        self.atoms.iter().map(|a| sq_dist(&a.position, e)).collect()
    }

    fn soft_count_from(&self, dists: &[f64], d_ema_sq: f64) -> f64 {
        self.atoms
            .iter()
            .zip(dists)
            .map(|(a, &sq)| (1.0 + a.count) * kernel_from_sq_dist(sq, d_ema_sq, self.config.epsilon))
            .sum()
    }

    /// Kernel-weighted sum of `1 + c_l` over all atoms.
    pub fn soft_visitation_count(&self, e: &[f64]) -> Result<f64> {
        self.check(e)?;
        Ok(self.soft_count_from(&self.sq_distances(e), self.d_ema_sq))
    }

    /// Indices of the `min(k, len)` nearest atoms, closest first.
    pub fn knn(&self, e: &[f64], k: usize) -> Result<Vec<usize>> {
        self.check(e)?;
        Ok(k_smallest(&self.sq_distances(e), k))
    }

    fn blend_bandwidth(&mut self, mean_sq: f64) {
        let tau = self.config.tau;
        self.d_ema_sq = match self.config.bandwidth_ema {
            BandwidthEma::TauWeightsNew => (1.0 - tau) * self.d_ema_sq + tau * mean_sq,
            BandwidthEma::TauWeightsOld => tau * self.d_ema_sq + (1.0 - tau) * mean_sq,
        };
    }

    fn update_bandwidth_from(&mut self, dists: &[f64]) {
        let neigh = k_smallest(dists, self.config.k);
        if neigh.is_empty() {
            return;
        }
        let sum: f64 = neigh.iter().map(|&i| dists[i]).sum();
        self.blend_bandwidth(sum / neigh.len() as f64);
    }

    /// Moves `d_ema_sq` toward the mean squared distance from `e` to its
    /// k nearest atoms. No-op on an empty memory.
    pub fn update_bandwidth(&mut self, e: &[f64]) -> Result<()> {
        self.check(e)?;
        let dists = self.sq_distances(e);
        self.update_bandwidth_from(&dists);
        Ok(())
    }

    pub fn discount_counts(&mut self) {
        let gamma = self.config.gamma;
        for atom in &mut self.atoms {
            atom.count *= gamma;
        }
    }

    pub fn nearest_atom(&self, e: &[f64]) -> Result<usize> {
        self.check(e)?;
        argmin(&self.sq_distances(e)).ok_or(RecodeError::EmptyMemory)
    }

    /// Unnormalised removal weights for the configured strategy. For
    /// `MinCount` the argmin gets weight 1 and every other atom 0.
    pub fn removal_weights(&self) -> Vec<f64> {
        let floored = |a: &Atom| a.count.max(REMOVAL_COUNT_FLOOR);
        match self.config.removal {
            RemovalStrategy::InverseCountSquared => self
                .atoms
                .iter()
                .map(|a| {
                    let c = floored(a);
                    1.0 / (c * c)
                })
                .collect(),
            RemovalStrategy::InverseCount => self.atoms.iter().map(|a| 1.0 / floored(a)).collect(),
            RemovalStrategy::MinCount => {
                let counts: Vec<f64> = self.atoms.iter().map(|a| a.count).collect();
                let mut w = vec![0.0; counts.len()];
                if let Some(j) = argmin(&counts) {
                    w[j] = 1.0;
                }
                w
            }
        }
    }

    /// Draws the index of the atom to evict.
    pub fn sample_removal(&mut self) -> Result<usize> {
        if self.atoms.is_empty() {
            return Err(RecodeError::EmptyMemory);
        }
        if self.config.removal == RemovalStrategy::MinCount {
            let counts: Vec<f64> = self.atoms.iter().map(|a| a.count).collect();
            return Ok(argmin(&counts).expect("nonempty"));
        }
        let weights = self.removal_weights();
        let total: f64 = weights.iter().sum();
        let target = self.rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (j, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return Ok(j);
            }
        }
        // target landed on the rounding slack above the last partial sum
        Ok(weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1))
    }

    /// Moves the count of atom `j` onto its nearest other atom and zeroes it.
    /// Returns the receiving index, or `None` for a singleton memory (the
    /// count is then dropped).
    fn transfer_count(&mut self, j: usize) -> Option<usize> {
        let pos = &self.atoms[j].position;
        let dists: Vec<f64> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| if i == j { f64::INFINITY } else { sq_dist(&a.position, pos) })
            .collect();
        let receiver = if self.atoms.len() > 1 { argmin(&dists) } else { None };
        let moved = self.atoms[j].count;
        if let Some(r) = receiver {
            self.atoms[r].count += moved;
        }
        self.atoms[j].count = 0.0;
        receiver
    }

    /// Hands the count of atom `removed` to its nearest neighbour and
    /// deletes it. Returns the receiver's index before deletion.
    pub fn redistribute_count(&mut self, removed: usize) -> Result<Option<usize>> {
        if removed >= self.atoms.len() {
            return Err(RecodeError::IndexOutOfRange {
                index: removed,
                len: self.atoms.len(),
            });
        }
        let receiver = self.transfer_count(removed);
        self.atoms.remove(removed);
        Ok(receiver)
    }

    /// Count-weighted running-mean update of atom `target` toward `e`.
    pub fn assimilate(&mut self, e: &[f64], target: usize) -> Result<()> {
        self.check(e)?;
        let len = self.atoms.len();
        let atom = self
            .atoms
            .get_mut(target)
            .ok_or(RecodeError::IndexOutOfRange { index: target, len })?;
        let c = atom.count;
        let keep = c / (c + 1.0);
        let take = 1.0 / (c + 1.0);
        for (m, &x) in atom.position.iter_mut().zip(e) {
            *m = keep * *m + take * x;
        }
        atom.count = c + 1.0;
        Ok(())
    }

    /// Runs one update step and returns the raw intrinsic reward.
    pub fn process(&mut self, e: &[f64]) -> Result<f64> {
        self.process_traced(e).map(|t| t.reward)
    }

    /// [`process`](Self::process) with the intermediate quantities exposed.
    pub fn process_traced(&mut self, e: &[f64]) -> Result<StepTrace> {
        self.check(e)?;
        let dists = self.sq_distances(e);
        let d_before = self.d_ema_sq;
        let soft_count = self.soft_count_from(&dists, d_before);
        let reward = intrinsic_reward_raw(soft_count, self.config.n0);

        self.update_bandwidth_from(&dists);
        self.discount_counts();

        let now = self.steps_processed;
        self.steps_processed += 1;
        let fresh = Atom {
            position: e.to_vec(),
            count: 1.0,
            born: now,
        };

        let Some(star) = argmin(&dists) else {
            self.atoms.push(fresh);
            return Ok(StepTrace {
                reward,
                soft_count,
                d_ema_sq_before: d_before,
                d_ema_sq_after: self.d_ema_sq,
                branch: Branch::Inserted { slot: 0, evicted: false },
            });
        };
        let u: f64 = self.rng.random();
        let far = dists[star] > self.config.kappa * self.d_ema_sq;

        let branch = if far && !self.is_full() {
            self.atoms.push(fresh);
            Branch::Inserted {
                slot: self.atoms.len() - 1,
                evicted: false,
            }
        } else if far && u < self.config.eta {
            let j = self.sample_removal()?;
            self.transfer_count(j);
            self.atoms[j] = fresh;
            Branch::Inserted { slot: j, evicted: true }
        } else {
            self.assimilate(e, star)?;
            Branch::Assimilated { slot: star }
        };

        Ok(StepTrace {
            reward,
            soft_count,
            d_ema_sq_before: d_before,
            d_ema_sq_after: self.d_ema_sq,
            branch,
        })
    }

    /// `steps_processed − born` for every atom.
    pub fn atom_ages(&self) -> Vec<u64> {
        self.atoms
            .iter()
            .map(|a| self.steps_processed.saturating_sub(a.born))
            .collect()
    }
}

pub(crate) fn check_embedding(e: &[f64], dim: usize) -> Result<()> {
    if e.len() != dim {
        return Err(RecodeError::DimensionMismatch {
            expected: dim,
            got: e.len(),
        });
    }
    if let Some(index) = e.iter().position(|v| !v.is_finite()) {
        return Err(RecodeError::NonFinite { index });
    }
    Ok(())
}
