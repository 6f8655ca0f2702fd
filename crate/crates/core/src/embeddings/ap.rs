//! One-step action-prediction embedding.
//!
//! An encoder `f(o) = W2·tanh(W1·o + b1) + b2` embeds both observations of a
//! transition; a classifier `softmax(V2·tanh(V1·[f(o_t); f(o_t+1)] + c1) + c2)`
//! predicts the action taken between them. Encoder and classifier are trained
//! jointly on the mean negative log-likelihood of the true action with plain
//! full-batch gradient descent. The memory consumes `f(o)`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EmbeddingFunction;
use crate::error::{RecodeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApConfig {
    pub obs_dim: usize,
    pub embed_dim: usize,
    pub encoder_hidden: usize,
    pub classifier_hidden: usize,
    pub num_actions: usize,
    pub learning_rate: f64,
    /// Parameters start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for ApConfig {
    fn default() -> Self {
        Self {
            obs_dim: 25,
            embed_dim: 16,
            encoder_hidden: 64,
            classifier_hidden: 64,
            num_actions: 4,
            learning_rate: 1e-2,
            init_scale: 1e-2,
            seed: 0,
        }
    }
}

/// Parameter blocks in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    EncoderW1,
    EncoderB1,
    EncoderW2,
    EncoderB2,
    ClassifierW1,
    ClassifierB1,
    ClassifierW2,
    ClassifierB2,
}

impl Block {
    pub const ALL: [Block; 8] = [
        Block::EncoderW1,
        Block::EncoderB1,
        Block::EncoderW2,
        Block::EncoderB2,
        Block::ClassifierW1,
        Block::ClassifierB1,
        Block::ClassifierW2,
        Block::ClassifierB2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::EncoderW1 => "encoder_w1",
            Block::EncoderB1 => "encoder_b1",
            Block::EncoderW2 => "encoder_w2",
            Block::EncoderB2 => "encoder_b2",
            Block::ClassifierW1 => "classifier_w1",
            Block::ClassifierB1 => "classifier_b1",
            Block::ClassifierW2 => "classifier_w2",
            Block::ClassifierB2 => "classifier_b2",
        }
    }
}

/// `(o_t, a_t, o_t+1)`
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub next_obs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApModel {
    config: ApConfig,
    params: Vec<f64>,
    /// `(offset, rows, cols)` per block, indexed like [`Block::ALL`].
    layout: [(usize, usize, usize); 8],
}

struct EncoderActs {
    hidden: Vec<f64>,
    z: Vec<f64>,
}

struct ForwardActs {
    enc_t: EncoderActs,
    enc_n: EncoderActs,
    input: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

fn layout_for(c: &ApConfig) -> [(usize, usize, usize); 8] {
    let shapes = [
        (c.encoder_hidden, c.obs_dim),
        (c.encoder_hidden, 1),
        (c.embed_dim, c.encoder_hidden),
        (c.embed_dim, 1),
        (c.classifier_hidden, 2 * c.embed_dim),
        (c.classifier_hidden, 1),
        (c.num_actions, c.classifier_hidden),
        (c.num_actions, 1),
    ];
    let mut out = [(0, 0, 0); 8];
    let mut offset = 0;
    for (slot, (r, k)) in out.iter_mut().zip(shapes) {
        *slot = (offset, r, k);
        offset += r * k;
    }
    out
}

/// `out = W·x + b` with `W` row-major `rows × x.len()`.
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.chunks_exact(x.len())
        .zip(b)
        .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// `dx = Wᵀ·dy`
fn affine_back_input(w: &[f64], dy: &[f64], in_dim: usize) -> Vec<f64> {
    let mut dx = vec![0.0; in_dim];
    for (row, g) in w.chunks_exact(in_dim).zip(dy) {
        for (d, a) in dx.iter_mut().zip(row) {
            *d += g * a;
        }
    }
    dx
}

/// `dW += dy ⊗ x`, `db += dy`
fn affine_back_params(dw: &mut [f64], db: &mut [f64], dy: &[f64], x: &[f64]) {
    for ((row, g), bias) in dw.chunks_exact_mut(x.len()).zip(dy).zip(db.iter_mut()) {
        *bias += g;
        for (d, v) in row.iter_mut().zip(x) {
            *d += g * v;
        }
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|x| x / total).collect()
}

impl ApModel {
    pub fn new(config: ApConfig) -> Result<Self> {
        let dims = [
            config.obs_dim,
            config.embed_dim,
            config.encoder_hidden,
            config.classifier_hidden,
            config.num_actions,
        ];
        if dims.contains(&0) {
            return Err(RecodeError::InvalidConfig("model dimensions must be positive".into()));
        }
        if !(config.learning_rate.is_finite() && config.learning_rate >= 0.0) {
            return Err(RecodeError::InvalidConfig("learning_rate must be finite and >= 0".into()));
        }
        if !(config.init_scale.is_finite() && config.init_scale >= 0.0) {
            return Err(RecodeError::InvalidConfig("init_scale must be finite and >= 0".into()));
        }
        let layout = layout_for(&config);
        let total = layout[7].0 + layout[7].1 * layout[7].2;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let s = config.init_scale;
        let params = (0..total).map(|_| s * (2.0 * rng.random::<f64>() - 1.0)).collect();
        Ok(Self { config, params, layout })
    }

    pub fn config(&self) -> &ApConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn block_range(&self, block: Block) -> std::ops::Range<usize> {
        let (offset, r, k) = self.layout[block as usize];
        offset..offset + r * k
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.params[self.block_range(block)]
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [f64] {
        let range = self.block_range(block);
        &mut self.params[range]
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.config.obs_dim {
            return Err(RecodeError::DimensionMismatch {
                expected: self.config.obs_dim,
                got: obs.len(),
            });
        }
        Ok(())
    }

    fn encode_acts(&self, obs: &[f64]) -> EncoderActs {
        let hidden: Vec<f64> = affine(self.block(Block::EncoderW1), self.block(Block::EncoderB1), obs)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let z = affine(self.block(Block::EncoderW2), self.block(Block::EncoderB2), &hidden);
        EncoderActs { hidden, z }
    }

    /// The embedding `f(o)` handed to the memory.
    pub fn encode(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.check_obs(obs)?;
        Ok(self.encode_acts(obs).z)
    }

    fn forward_acts(&self, obs: &[f64], next_obs: &[f64]) -> ForwardActs {
        let enc_t = self.encode_acts(obs);
        let enc_n = self.encode_acts(next_obs);
        let mut input = enc_t.z.clone();
        input.extend_from_slice(&enc_n.z);
        let hidden: Vec<f64> = affine(self.block(Block::ClassifierW1), self.block(Block::ClassifierB1), &input)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let logits = affine(self.block(Block::ClassifierW2), self.block(Block::ClassifierB2), &hidden);
        ForwardActs {
            enc_t,
            enc_n,
            input,
            hidden,
            probs: softmax(&logits),
        }
    }

    /// Action probabilities `p(a | o_t, o_t+1)`.
    pub fn forward(&self, obs: &[f64], next_obs: &[f64]) -> Result<Vec<f64>> {
        self.check_obs(obs)?;
        self.check_obs(next_obs)?;
        Ok(self.forward_acts(obs, next_obs).probs)
    }

    fn check_batch(&self, batch: &[Transition]) -> Result<()> {
        if batch.is_empty() {
            return Err(RecodeError::EmptyBatch);
        }
        for t in batch {
            self.check_obs(&t.obs)?;
            self.check_obs(&t.next_obs)?;
            if t.action >= self.config.num_actions {
                return Err(RecodeError::IndexOutOfRange {
                    index: t.action,
                    len: self.config.num_actions,
                });
            }
        }
        Ok(())
    }

    /// Mean negative log-likelihood of the true actions.
    pub fn loss(&self, batch: &[Transition]) -> Result<f64> {
        self.check_batch(batch)?;
        Ok(self.loss_unchecked(batch))
    }

    fn loss_unchecked(&self, batch: &[Transition]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|t| -self.forward_acts(&t.obs, &t.next_obs).probs[t.action].ln())
            .sum();
        total / batch.len() as f64
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, batch: &[Transition]) -> Result<(f64, Vec<f64>)> {
        self.check_batch(batch)?;
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let d = self.config.embed_dim;

        for t in batch {
            let acts = self.forward_acts(&t.obs, &t.next_obs);
            loss -= acts.probs[t.action].ln();

            let mut dlogits: Vec<f64> = acts.probs.iter().map(|p| p * scale).collect();
            dlogits[t.action] -= scale;

            let dh2 = affine_back_input(self.block(Block::ClassifierW2), &dlogits, acts.hidden.len());
            self.accumulate(&mut grad, Block::ClassifierW2, Block::ClassifierB2, &dlogits, &acts.hidden);
            let da2: Vec<f64> = dh2.iter().zip(&acts.hidden).map(|(g, h)| g * (1.0 - h * h)).collect();

            let dx = affine_back_input(self.block(Block::ClassifierW1), &da2, acts.input.len());
            self.accumulate(&mut grad, Block::ClassifierW1, Block::ClassifierB1, &da2, &acts.input);

            for (enc, obs, dz) in [
                (&acts.enc_t, &t.obs, &dx[..d]),
                (&acts.enc_n, &t.next_obs, &dx[d..]),
            ] {
                let dh1 = affine_back_input(self.block(Block::EncoderW2), dz, enc.hidden.len());
                self.accumulate(&mut grad, Block::EncoderW2, Block::EncoderB2, dz, &enc.hidden);
                let da1: Vec<f64> = dh1.iter().zip(&enc.hidden).map(|(g, h)| g * (1.0 - h * h)).collect();
                self.accumulate(&mut grad, Block::EncoderW1, Block::EncoderB1, &da1, obs);
            }
        }
        Ok((loss * scale, grad))
    }

    fn accumulate(&self, grad: &mut [f64], w: Block, b: Block, dy: &[f64], x: &[f64]) {
        let wr = self.block_range(w);
        let br = self.block_range(b);
        // weight block directly precedes its bias block
        debug_assert_eq!(wr.end, br.start);
        let (dw, db) = grad[wr.start..br.end].split_at_mut(wr.len());
        affine_back_params(dw, db, dy, x);
    }

    /// One gradient-descent step. Returns the loss before the update; a
    /// non-finite gradient leaves the parameters untouched.
    pub fn train_step(&mut self, batch: &[Transition]) -> Result<f64> {
        let (loss, grad) = self.loss_and_grad(batch)?;
        for block in Block::ALL {
            if grad[self.block_range(block)].iter().any(|g| !g.is_finite()) {
                return Err(RecodeError::NonFiniteGradient(block.name().to_string()));
            }
        }
        let lr = self.config.learning_rate;
        for (p, g) in self.params.iter_mut().zip(&grad) {
            *p -= lr * g;
        }
        Ok(loss)
    }

    /// Writes the model as text: a header with the layer shapes, then one
    /// `block <name> <rows> <cols>` line per block followed by its values on a
    /// single line.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        writeln!(out, "ap-model v1").unwrap();
        writeln!(
            out,
            "shape {} {} {} {} {}",
            c.obs_dim, c.embed_dim, c.encoder_hidden, c.classifier_hidden, c.num_actions
        )
        .unwrap();
        writeln!(out, "learning_rate {:?}", c.learning_rate).unwrap();
        writeln!(out, "init_scale {:?}", c.init_scale).unwrap();
        writeln!(out, "seed {}", c.seed).unwrap();
        for block in Block::ALL {
            let (_, r, k) = self.layout[block as usize];
            writeln!(out, "block {} {r} {k}", block.name()).unwrap();
            let values: Vec<String> = self.block(block).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", values.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| RecodeError::ModelFile {
            line,
            msg: msg.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        let get = |i: usize| lines.get(i).copied().ok_or(err(i + 1, "unexpected end of file"));
        if get(0)?.trim() != "ap-model v1" {
            return Err(err(1, "missing `ap-model v1` header"));
        }
        let field = |i: usize, key: &str| -> Result<String> {
            let l = get(i)?;
            l.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or(err(i + 1, &format!("expected `{key}`")))
        };
        let shape: Vec<usize> = field(1, "shape")?
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| err(2, "bad shape value")))
            .collect::<Result<_>>()?;
        if shape.len() != 5 {
            return Err(err(2, "shape needs five values"));
        }
        let config = ApConfig {
            obs_dim: shape[0],
            embed_dim: shape[1],
            encoder_hidden: shape[2],
            classifier_hidden: shape[3],
            num_actions: shape[4],
            learning_rate: field(2, "learning_rate")?.parse().map_err(|_| err(3, "bad learning_rate"))?,
            init_scale: field(3, "init_scale")?.parse().map_err(|_| err(4, "bad init_scale"))?,
            seed: field(4, "seed")?.parse().map_err(|_| err(5, "bad seed"))?,
        };
        let mut model = ApModel::new(config)?;
        for (n, block) in Block::ALL.into_iter().enumerate() {
            let header_line = 5 + 2 * n;
            let (_, r, k) = model.layout[block as usize];
            let expected = format!("block {} {r} {k}", block.name());
            if get(header_line)?.trim() != expected {
                return Err(err(header_line + 1, &format!("expected `{expected}`")));
            }
            let values: Vec<f64> = get(header_line + 1)?
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| err(header_line + 2, "bad parameter value")))
                .collect::<Result<_>>()?;
            if values.len() != r * k {
                return Err(err(header_line + 2, "wrong number of values for block"));
            }
            model.block_mut(block).copy_from_slice(&values);
        }
        Ok(model)
    }
}

impl EmbeddingFunction for ApModel {
    fn dim(&self) -> usize {
        self.config.embed_dim
    }

    fn embed(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.encode(obs)
    }
}

/// Finite-difference check of [`ApModel::loss_and_grad`].
#[derive(Debug, Clone)]
pub struct GradCheck {
    /// Parameters to probe; every block gets at least `min(len, 8)`.
    pub samples: usize,
    pub step: f64,
    pub seed: u64,
    /// Multiplies the analytic gradient of one block before comparing.
    pub corrupt: Option<(Block, f64)>,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self {
            samples: 256,
            step: 1e-5,
            seed: 0,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    /// Worst relative error per block, in [`Block::ALL`] order.
    pub per_block: Vec<(Block, f64)>,
}

impl GradCheck {
    pub fn run(&self, model: &ApModel, batch: &[Transition]) -> Result<GradCheckReport> {
        let (_, mut grad) = model.loss_and_grad(batch)?;
        if let Some((block, factor)) = self.corrupt {
            for g in &mut grad[model.block_range(block)] {
                *g *= factor;
            }
        }
        let indices = self.sample_indices(model);
        let mut probe = model.clone();
        let mut per_block: Vec<(Block, f64)> = Block::ALL.iter().map(|&b| (b, 0.0)).collect();
        for &i in &indices {
            let original = probe.params[i];
            probe.params[i] = original + self.step;
            let up = probe.loss_unchecked(batch);
            probe.params[i] = original - self.step;
            let down = probe.loss_unchecked(batch);
            probe.params[i] = original;
            let numeric = (up - down) / (2.0 * self.step);
            let analytic = grad[i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            let rel = (analytic - numeric).abs() / denom;
            let block = Block::ALL
                .into_iter()
                .find(|&b| model.block_range(b).contains(&i))
                .expect("index inside some block");
            let slot = &mut per_block[block as usize].1;
            *slot = slot.max(rel);
        }
        let max_rel_err = per_block.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        Ok(GradCheckReport {
            max_rel_err,
            checked: indices.len(),
            per_block,
        })
    }

    fn sample_indices(&self, model: &ApModel) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut chosen = std::collections::BTreeSet::new();
        for block in Block::ALL {
            let range = model.block_range(block);
            let want = range.len().min(8);
            let mut picked = 0;
            while picked < want {
                if chosen.insert(rng.random_range(range.clone())) {
                    picked += 1;
                }
            }
        }
        let target = self.samples.min(model.num_params());
        while chosen.len() < target {
            chosen.insert(rng.random_range(0..model.num_params()));
        }
        chosen.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ApConfig {
        ApConfig {
            obs_dim: 6,
            embed_dim: 3,
            encoder_hidden: 5,
            classifier_hidden: 4,
            num_actions: 4,
            learning_rate: 0.1,
            init_scale: 0.5,
            seed: 3,
        }
    }

    fn batch(n: usize, cfg: &ApConfig) -> Vec<Transition> {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        (0..n)
            .map(|_| Transition {
                obs: (0..cfg.obs_dim).map(|_| rng.random::<f64>() - 0.5).collect(),
                action: rng.random_range(0..cfg.num_actions),
                next_obs: (0..cfg.obs_dim).map(|_| rng.random::<f64>() - 0.5).collect(),
            })
            .collect()
    }

    #[test]
    fn softmax_normalised_and_near_uniform_at_init() {
        let cfg = ApConfig {
            obs_dim: 6,
            ..ApConfig::default()
        };
        let m = ApModel::new(cfg.clone()).unwrap();
        for t in batch(20, &cfg) {
            let p = m.forward(&t.obs, &t.next_obs).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&x| x >= 0.0 && (x - 0.25).abs() < 0.1));
        }
    }

    #[test]
    fn permuting_output_rows_permutes_probabilities() {
        let cfg = small();
        let m = ApModel::new(cfg.clone()).unwrap();
        let t = &batch(1, &cfg)[0];
        let p = m.forward(&t.obs, &t.next_obs).unwrap();
        let mut swapped = m.clone();
        let h = cfg.classifier_hidden;
        let w2 = swapped.block_mut(Block::ClassifierW2);
        for j in 0..h {
            w2.swap(j, h + j);
        }
        swapped.block_mut(Block::ClassifierB2).swap(0, 1);
        let q = swapped.forward(&t.obs, &t.next_obs).unwrap();
        assert!((p[0] - q[1]).abs() < 1e-15 && (p[1] - q[0]).abs() < 1e-15);
        assert!((p[2] - q[2]).abs() < 1e-15 && (p[3] - q[3]).abs() < 1e-15);
    }

    #[test]
    fn loss_matches_independent_nll() {
        let cfg = small();
        let m = ApModel::new(cfg.clone()).unwrap();
        let b = batch(12, &cfg);
        let mut total = 0.0;
        for t in &b {
            total += -m.forward(&t.obs, &t.next_obs).unwrap()[t.action].ln();
        }
        assert_eq!(m.loss(&b).unwrap(), total / b.len() as f64);
        let (l, _) = m.loss_and_grad(&b).unwrap();
        assert!((l - total / b.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn uniform_model_loss_is_ln_actions() {
        let cfg = ApConfig {
            init_scale: 0.0,
            ..small()
        };
        let m = ApModel::new(cfg.clone()).unwrap();
        assert!((m.loss(&batch(7, &cfg)).unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_model_has_zero_loss_and_zero_rel_err() {
        let cfg = ApConfig {
            init_scale: 0.0,
            ..small()
        };
        let mut m = ApModel::new(cfg.clone()).unwrap();
        m.block_mut(Block::ClassifierB2)[2] = 1000.0;
        let b: Vec<Transition> = batch(5, &cfg)
            .into_iter()
            .map(|t| Transition { action: 2, ..t })
            .collect();
        assert_eq!(m.loss(&b).unwrap(), 0.0);
        let report = GradCheck::default().run(&m, &b).unwrap();
        assert_eq!(report.max_rel_err, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = small();
        let m = ApModel::new(cfg.clone()).unwrap();
        let b = batch(10, &cfg);
        let report = GradCheck {
            samples: 10_000,
            ..GradCheck::default()
        }
        .run(&m, &b)
        .unwrap();
        assert_eq!(report.checked, m.num_params());
        assert!(report.max_rel_err < 1e-4, "{report:?}");

        for block in Block::ALL {
            let bad = GradCheck {
                corrupt: Some((block, 2.0)),
                ..GradCheck::default()
            }
            .run(&m, &b)
            .unwrap();
            assert!(bad.max_rel_err > 0.4, "{block:?}: {bad:?}");
        }
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let cfg = ApConfig {
            learning_rate: 0.0,
            ..small()
        };
        let mut m = ApModel::new(cfg.clone()).unwrap();
        let before = m.params().to_vec();
        m.train_step(&batch(4, &cfg)).unwrap();
        assert_eq!(m.params(), &before[..]);
    }

    #[test]
    fn train_step_returns_pre_update_loss() {
        let cfg = small();
        let mut m = ApModel::new(cfg.clone()).unwrap();
        let b = batch(8, &cfg);
        let l0 = m.loss(&b).unwrap();
        assert_eq!(m.train_step(&b).unwrap(), l0);
        assert!(m.loss(&b).unwrap() < l0);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let cfg = small();
        let mut m = ApModel::new(cfg.clone()).unwrap();
        let mut b = batch(3, &cfg);
        b[0].obs[0] = f64::NAN;
        let before = m.params().to_vec();
        assert!(matches!(m.train_step(&b), Err(RecodeError::NonFiniteGradient(_))));
        assert_eq!(m.params(), &before[..]);
    }

    #[test]
    fn rejects_bad_batches() {
        let cfg = small();
        let m = ApModel::new(cfg.clone()).unwrap();
        assert_eq!(m.loss(&[]), Err(RecodeError::EmptyBatch));
        let mut b = batch(1, &cfg);
        b[0].action = 9;
        assert!(m.loss(&b).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = ApModel::new(small()).unwrap();
        let text = m.to_text();
        let back = ApModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert!(ApModel::from_text(&text.replace("block encoder_b1 5 1", "block encoder_b1 4 1")).is_err());
        assert!(ApModel::from_text("nope").is_err());
    }
}
