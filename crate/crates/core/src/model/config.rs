use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Largest message length per user; finer PAM grids lose to rounding.
pub const MAX_BITS: u32 = 24;

/// Receiver index, `0` for user 1 and `1` for user 2.
pub type User = usize;

pub const USERS: [User; 2] = [0, 1];

/// Converts an SNR in dB into the noise variance that achieves it at `power`.
pub fn snr_db_to_variance<T: Scalar>(snr_db: T, power: T) -> T {
    power / T::lit(10.0).powf(snr_db / T::lit(10.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Feedback {
    Noiseless,
    Noisy { sigma2: [f64; 2] },
}

impl Feedback {
    pub fn is_noisy(&self) -> bool {
        matches!(self, Feedback::Noisy { .. })
    }
}

/// Ground truth of an experiment: powers, noise levels, blocklength and
/// message sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    power: f64,
    sigma2_f: [f64; 2],
    feedback: Feedback,
    blocklength: usize,
    bits: [u32; 2],
}

impl ChannelConfig {
    pub fn new(
        power: f64,
        sigma2_f: [f64; 2],
        feedback: Feedback,
        blocklength: usize,
        bits: [u32; 2],
    ) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::invalid(format!(
                "power must be positive, got {power}"
            )));
        }
        let positive = |v: &f64| v.is_finite() && *v > 0.0;
        if !sigma2_f.iter().all(positive) {
            return Err(Error::invalid(format!(
                "forward noise variances must be positive, got {sigma2_f:?}"
            )));
        }
        if let Feedback::Noisy { sigma2 } = feedback {
            if !sigma2.iter().all(positive) {
                return Err(Error::invalid(format!(
                    "feedback noise variances must be positive, got {sigma2:?}"
                )));
            }
        }
        if blocklength < 2 {
            return Err(Error::invalid(format!(
                "blocklength must be at least 2, got {blocklength}"
            )));
        }
        if bits.iter().any(|&k| k == 0 || k > MAX_BITS) {
            return Err(Error::invalid(format!(
                "message lengths must lie in 1..={MAX_BITS}, got {bits:?}"
            )));
        }
        Ok(Self {
            power,
            sigma2_f,
            feedback,
            blocklength,
            bits,
        })
    }

    /// Symmetric configuration from SNRs in dB; `snr_fb_db = None` means
    /// noiseless feedback.
    pub fn symmetric(
        power: f64,
        snr_f_db: f64,
        snr_fb_db: Option<f64>,
        blocklength: usize,
        bits: u32,
    ) -> Result<Self> {
        if !snr_f_db.is_finite() || snr_fb_db.is_some_and(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR values must be finite"));
        }
        let s2 = snr_db_to_variance(snr_f_db, power);
        let feedback = match snr_fb_db {
            None => Feedback::Noiseless,
            Some(db) => {
                let v = snr_db_to_variance(db, power);
                Feedback::Noisy { sigma2: [v, v] }
            }
        };
        Self::new(power, [s2, s2], feedback, blocklength, [bits, bits])
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn sigma2_f(&self, user: User) -> f64 {
        self.sigma2_f[user]
    }

    /// Feedback noise variance, zero for noiseless feedback.
    pub fn sigma2_fb(&self, user: User) -> f64 {
        match self.feedback {
            Feedback::Noiseless => 0.0,
            Feedback::Noisy { sigma2 } => sigma2[user],
        }
    }

    pub fn feedback(&self) -> Feedback {
        self.feedback
    }

    pub fn blocklength(&self) -> usize {
        self.blocklength
    }

    pub fn bits(&self, user: User) -> u32 {
        self.bits[user]
    }

    pub fn bits_pair(&self) -> [u32; 2] {
        self.bits
    }

    /// Forward SNR of user 1 in dB.
    pub fn snr_f_db(&self) -> f64 {
        10.0 * (self.power / self.sigma2_f[0]).log10()
    }

    /// Feedback SNR of user 1 in dB; `None` for noiseless feedback.
    pub fn snr_fb_db(&self) -> Option<f64> {
        match self.feedback {
            Feedback::Noiseless => None,
            Feedback::Noisy { sigma2 } => Some(10.0 * (self.power / sigma2[0]).log10()),
        }
    }

    /// Same configuration with the feedback links made noiseless.
    pub fn without_feedback_noise(&self) -> Self {
        Self {
            feedback: Feedback::Noiseless,
            ..self.clone()
        }
    }

    pub fn with_blocklength(&self, blocklength: usize) -> Result<Self> {
        Self::new(
            self.power,
            self.sigma2_f,
            self.feedback,
            blocklength,
            self.bits,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_db_to_variance(0.0f64, 1.0), 1.0);
        assert!((snr_db_to_variance(3.0f64, 1.0) - 0.501187).abs() < 1e-6);
        assert!((snr_db_to_variance(-2.0f64, 1.0) - 1.584893).abs() < 1e-6);
        assert!((snr_db_to_variance(3.0f32, 2.0) - 1.002374).abs() < 1e-5);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(ChannelConfig::new(0.0, [1.0, 1.0], Feedback::Noiseless, 3, [1, 1]).is_err());
        assert!(ChannelConfig::new(1.0, [0.0, 1.0], Feedback::Noiseless, 3, [1, 1]).is_err());
        assert!(ChannelConfig::new(1.0, [1.0, 1.0], Feedback::Noiseless, 1, [1, 1]).is_err());
        assert!(ChannelConfig::new(1.0, [1.0, 1.0], Feedback::Noiseless, 3, [0, 1]).is_err());
        assert!(ChannelConfig::new(1.0, [1.0, 1.0], Feedback::Noiseless, 3, [25, 1]).is_err());
        let noisy = Feedback::Noisy {
            sigma2: [1.0, -1.0],
        };
        assert!(ChannelConfig::new(1.0, [1.0, 1.0], noisy, 3, [1, 1]).is_err());
    }

    #[test]
    fn symmetric_helper() {
        let c = ChannelConfig::symmetric(1.0, 3.0, Some(10.0), 9, 3).unwrap();
        assert_eq!(c.sigma2_f(0), c.sigma2_f(1));
        assert_eq!(c.sigma2_fb(0), c.sigma2_fb(1));
        assert!((c.snr_f_db() - 3.0).abs() < 1e-12);
        assert!((c.snr_fb_db().unwrap() - 10.0).abs() < 1e-12);
        let n = ChannelConfig::symmetric(1.0, 3.0, None, 3, 1).unwrap();
        assert_eq!(n.sigma2_fb(1), 0.0);
        assert_eq!(n.snr_fb_db(), None);
    }
}
