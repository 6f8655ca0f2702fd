/// Samples observed before rewards start being scaled.
pub const DEFAULT_WARMUP: u64 = 100;

/// Lower bound on the standard deviation used as a divisor.
pub const STD_FLOOR: f64 = 1e-8;

/// Divides rewards by a running (Welford) estimate of their standard
/// deviation. Before `warmup` samples have been seen rewards pass through
/// unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardNormalizer {
    count: u64,
    mean: f64,
    m2: f64,
    warmup: u64,
}

impl Default for RewardNormalizer {
    fn default() -> Self {
        Self::new(DEFAULT_WARMUP)
    }
}

impl RewardNormalizer {
    pub fn new(warmup: u64) -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            warmup,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// The divisor currently applied after warmup.
    pub fn std(&self) -> f64 {
        self.variance().sqrt().max(STD_FLOOR)
    }

    pub fn update(&mut self, r: f64) {
        self.count += 1;
        let delta = r - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (r - self.mean);
    }

    /// Records `r_raw` and returns it scaled by the running std.
    ///
    /// A constant stream has zero variance, so after warmup its rewards are
    /// divided by [`STD_FLOOR`] and come out very large.
    pub fn normalize(&mut self, r_raw: f64) -> f64 {
        self.update(r_raw);
        if self.count >= self.warmup {
            r_raw / self.std()
        } else {
            r_raw
        }
    }
}
