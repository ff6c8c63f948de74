use crate::harness::Scheme;

/// Two-sided 95% normal quantile.
pub const WILSON_Z95: f64 = 1.959963984540054;

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if errors >= trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Block-error counts and rates of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct BlerReport {
    pub scheme: Scheme,
    pub k: [u32; 2],
    pub n: usize,
    pub snr_f_db: f64,
    /// `None` for noiseless feedback.
    pub snr_fb_db: Option<f64>,
    pub trials: u64,
    pub block_errors: [u64; 2],
    pub seed: u64,
    pub wall_time_s: Option<f64>,
}

impl BlerReport {
    pub fn bler(&self, user: usize) -> f64 {
        self.block_errors[user] as f64 / self.trials as f64
    }

    /// Average of the two users' rates.
    pub fn joint_bler(&self) -> f64 {
        (self.bler(0) + self.bler(1)) / 2.0
    }

    pub fn ci95(&self, user: usize) -> (f64, f64) {
        wilson_interval(self.block_errors[user], self.trials, WILSON_Z95)
    }

    /// Binomial standard error of user `u`'s rate.
    pub fn stderr(&self, user: usize) -> f64 {
        let p = self.bler(user);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// User 1's rate `K₁/N`.
    pub fn rate(&self) -> f64 {
        f64::from(self.k[0]) / self.n as f64
    }
}
