//! Plain-text memory snapshots.
//!
//! One `key value` pair per line, followed by one line per atom:
//!
//! ```text
//! recode-memory-snapshot v1
//! capacity 50000
//! k 20
//! kappa 0.2
//! tau 0.9999
//! gamma 0.999
//! eta 0.05
//! n0 0.01
//! epsilon 0.001
//! removal inverse_count_squared
//! bandwidth_ema tau_weights_new
//! seed 0
//! dim 2
//! d_ema_sq 1.25
//! steps_processed 3
//! rng_seed <64 hex digits>
//! rng_stream 0
//! rng_word_pos 16
//! atoms 2
//! atom <born> <count> <x_1> ... <x_dim>
//! atom <born> <count> <x_1> ... <x_dim>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a restored memory is
//! bit-identical to the original, PRNG position included.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{RecodeError, Result};
use crate::memory::{Atom, BandwidthEma, RecodeConfig, RecodeMemory, RemovalStrategy};

const MAGIC: &str = "recode-memory-snapshot v1";

impl RecodeMemory {
    pub fn to_snapshot(&self) -> String {
        let c = self.config();
        let rng = self.rng_state();
        let mut out = String::new();
        let seed_hex: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "capacity {}", c.capacity).unwrap();
        writeln!(out, "k {}", c.k).unwrap();
        writeln!(out, "kappa {:?}", c.kappa).unwrap();
        writeln!(out, "tau {:?}", c.tau).unwrap();
        writeln!(out, "gamma {:?}", c.gamma).unwrap();
        writeln!(out, "eta {:?}", c.eta).unwrap();
        writeln!(out, "n0 {:?}", c.n0).unwrap();
        writeln!(out, "epsilon {:?}", c.epsilon).unwrap();
        writeln!(out, "removal {}", c.removal.name()).unwrap();
        writeln!(out, "bandwidth_ema {}", c.bandwidth_ema.name()).unwrap();
        writeln!(out, "seed {}", c.seed).unwrap();
        writeln!(out, "dim {}", self.dim()).unwrap();
        writeln!(out, "d_ema_sq {:?}", self.d_ema_sq()).unwrap();
        writeln!(out, "steps_processed {}", self.steps_processed()).unwrap();
        writeln!(out, "rng_seed {seed_hex}").unwrap();
        writeln!(out, "rng_stream {}", rng.get_stream()).unwrap();
        writeln!(out, "rng_word_pos {}", rng.get_word_pos()).unwrap();
        writeln!(out, "atoms {}", self.len()).unwrap();
        for atom in self.atoms() {
            write!(out, "atom {} {:?}", atom.born, atom.count).unwrap();
            for x in &atom.position {
                write!(out, " {x:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (line, first) = lines.next().ok_or(err(1, "empty snapshot"))?;
        if first.trim() != MAGIC {
            return Err(err(line, "missing snapshot header"));
        }

        let mut field = |key: &str| -> Result<(usize, String)> {
            let (line, l) = lines.next().ok_or(err(0, &format!("missing `{key}`")))?;
            let (k, v) = l.split_once(' ').ok_or(err(line, "expected `key value`"))?;
            if k != key {
                return Err(err(line, &format!("expected `{key}`, found `{k}`")));
            }
            Ok((line, v.trim().to_string()))
        };

        let config = RecodeConfig {
            capacity: parse(field("capacity")?)?,
            k: parse(field("k")?)?,
            kappa: parse(field("kappa")?)?,
            tau: parse(field("tau")?)?,
            gamma: parse(field("gamma")?)?,
            eta: parse(field("eta")?)?,
            n0: parse(field("n0")?)?,
            epsilon: parse(field("epsilon")?)?,
            removal: {
                let (line, v) = field("removal")?;
                RemovalStrategy::from_name(&v).ok_or(err(line, "unknown removal strategy"))?
            },
            bandwidth_ema: {
                let (line, v) = field("bandwidth_ema")?;
                BandwidthEma::from_name(&v).ok_or(err(line, "unknown bandwidth_ema"))?
            },
            seed: parse(field("seed")?)?,
        };
        let dim: usize = parse(field("dim")?)?;
        let d_ema_sq: f64 = parse(field("d_ema_sq")?)?;
        let steps: u64 = parse(field("steps_processed")?)?;
        let (seed_line, seed_hex) = field("rng_seed")?;
        let stream: u64 = parse(field("rng_stream")?)?;
        let word_pos: u128 = parse(field("rng_word_pos")?)?;
        let (count_line, n) = field("atoms")?;
        let n: usize = parse((count_line, n))?;

        let mut atoms = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, l) = lines.next().ok_or(err(count_line, "fewer atom lines than declared"))?;
            let mut parts = l.split_whitespace();
            if parts.next() != Some("atom") {
                return Err(err(line, "expected `atom`"));
            }
            let born: u64 = parse((line, parts.next().unwrap_or_default().to_string()))?;
            let count: f64 = parse((line, parts.next().unwrap_or_default().to_string()))?;
            let position = parts
                .map(|p| parse::<f64>((line, p.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if position.len() != dim {
                return Err(err(line, "atom dimension does not match `dim`"));
            }
            atoms.push(Atom { position, count, born });
        }
        if let Some((line, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(line, &format!("trailing content `{l}`")));
        }

        let seed = decode_seed(&seed_hex).ok_or(err(seed_line, "rng_seed must be 64 hex digits"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);

        let mut memory = RecodeMemory::from_parts(config, dim, atoms, d_ema_sq, steps)?;
        memory.set_rng_state(rng);
        Ok(memory)
    }
}

fn err(line: usize, msg: &str) -> RecodeError {
    RecodeError::Snapshot {
        line,
        msg: msg.to_string(),
    }
}

fn parse<T: std::str::FromStr>((line, v): (usize, String)) -> Result<T> {
    v.parse().map_err(|_| err(line, &format!("cannot parse `{v}`")))
}

fn decode_seed(hex: &str) -> Option<[u8; 32]> {
    if hex.len() != 64 || !hex.is_ascii() {
        return None;
    }
    let mut seed = [0u8; 32];
    for (i, byte) in seed.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(seed)
}
