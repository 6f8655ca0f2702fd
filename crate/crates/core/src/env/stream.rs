use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    /// Side `min(100, t)`.
    CappedSquare,
    /// Side `1 + sqrt(t)`.
    SqrtSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSchedule {
    pub kind: StreamKind,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub horizon: u64,
}

fn default_batch() -> usize {
    64
}

impl StreamSchedule {
    pub fn side(&self, t: u64) -> f64 {
        match self.kind {
            StreamKind::CappedSquare => t.min(100) as f64,
            StreamKind::SqrtSquare => 1.0 + (t as f64).sqrt(),
        }
    }
}

/// `batch_size` points drawn uniformly from `[0, side(t)]²`.
pub fn expanding_square_batch<R: Rng>(t: u64, schedule: &StreamSchedule, rng: &mut R) -> Vec<[f64; 2]> {
    let side = schedule.side(t);
    (0..schedule.batch_size)
        .map(|_| [side * rng.random::<f64>(), side * rng.random::<f64>()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sched(kind: StreamKind) -> StreamSchedule {
        StreamSchedule {
            kind,
            batch_size: 64,
            horizon: 100,
        }
    }

    #[test]
    fn zero_side_gives_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = expanding_square_batch(0, &sched(StreamKind::CappedSquare), &mut rng);
        assert_eq!(b.len(), 64);
        assert!(b.iter().all(|p| *p == [0.0, 0.0]));
    }

    #[test]
    fn samples_stay_inside_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sched(StreamKind::SqrtSquare);
        for t in [0, 1, 7, 100] {
            let side = s.side(t);
            for p in expanding_square_batch(t, &s, &mut rng) {
                assert!(p.iter().all(|&x| (0.0..=side).contains(&x)));
            }
        }
        assert_eq!(s.side(100), 11.0);
        assert_eq!(sched(StreamKind::CappedSquare).side(250), 100.0);
    }

    #[test]
    fn capped_square_mean_is_centre() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sched(StreamKind::CappedSquare);
        let mut sum = [0.0; 2];
        let mut n: f64 = 0.0;
        while n < 10_000.0 {
            for p in expanding_square_batch(150, &s, &mut rng) {
                sum[0] += p[0];
                sum[1] += p[1];
                n += 1.0;
            }
        }
        // uniform on [0, 100]: sd 100/sqrt(12) per sample
        let se = 100.0 / 12f64.sqrt() / n.sqrt();
        for s in sum {
            assert!((s / n - 50.0).abs() < 3.0 * se);
        }
    }
}
