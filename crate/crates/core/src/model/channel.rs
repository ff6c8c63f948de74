use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{ChannelConfig, StreamRole, TrialRng, User};
use crate::Scalar;

/// Forward and feedback noise generators of one trial.
///
/// User `u`'s forward and feedback noises come from their own streams, so
/// consuming (or skipping) one user's noise never shifts the other's.
#[derive(Clone, Debug)]
pub struct ChannelNoise {
    forward: [ChaCha8Rng; 2],
    feedback: Option<[ChaCha8Rng; 2]>,
    sigma_f: [f64; 2],
    sigma_fb: [f64; 2],
}

impl ChannelNoise {
    pub fn new(trial: &TrialRng, config: &ChannelConfig) -> Self {
        let feedback = config.feedback().is_noisy().then(|| {
            [
                trial.stream(StreamRole::NoiseFbU1),
                trial.stream(StreamRole::NoiseFbU2),
            ]
        });
        Self {
            forward: [
                trial.stream(StreamRole::NoiseFwdU1),
                trial.stream(StreamRole::NoiseFwdU2),
            ],
            feedback,
            sigma_f: [config.sigma2_f(0).sqrt(), config.sigma2_f(1).sqrt()],
            sigma_fb: [config.sigma2_fb(0).sqrt(), config.sigma2_fb(1).sqrt()],
        }
    }

    #[inline]
    pub fn forward_noise(&mut self, user: User) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.forward[user]);
        z * self.sigma_f[user]
    }

    /// Feedback noise sample; exactly zero (and no draw) when feedback is noiseless.
    #[inline]
    pub fn feedback_noise(&mut self, user: User) -> f64 {
        match &mut self.feedback {
            None => 0.0,
            Some(rngs) => {
                let z: f64 = StandardNormal.sample(&mut rngs[user]);
                z * self.sigma_fb[user]
            }
        }
    }

    /// `Y_u = x + Z_u` for both receivers.
    #[inline]
    pub fn transmit<T: Scalar>(&mut self, x: T) -> [T; 2] {
        [
            x + T::lit(self.forward_noise(0)),
            x + T::lit(self.forward_noise(1)),
        ]
    }

    /// Feedback symbol seen by the transmitter for receiver `user`.
    #[inline]
    pub fn feed_back<T: Scalar>(&mut self, user: User, y: T) -> T {
        match self.feedback {
            None => y,
            Some(_) => y + T::lit(self.feedback_noise(user)),
        }
    }
}

/// Symbols of one trial: transmitted `X_i`, received `Y_{u,i}` and fed back `Ỹ_{u,i}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialTranscript<T> {
    pub x: Vec<T>,
    pub y: [Vec<T>; 2],
    pub y_tilde: [Vec<T>; 2],
}

impl<T: Copy> TrialTranscript<T> {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            x: Vec::with_capacity(n),
            y: [Vec::with_capacity(n), Vec::with_capacity(n)],
            y_tilde: [Vec::with_capacity(n), Vec::with_capacity(n)],
        }
    }

    pub fn push(&mut self, x: T, y: [T; 2], y_tilde: [T; 2]) {
        self.x.push(x);
        for u in 0..2 {
            self.y[u].push(y[u]);
            self.y_tilde[u].push(y_tilde[u]);
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Feedback, StreamKey};

    fn config(feedback: Feedback) -> ChannelConfig {
        ChannelConfig::new(1.0, [0.5, 0.5], feedback, 3, [1, 1]).unwrap()
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = config(Feedback::Noiseless);
        let key = StreamKey::new(11);
        let mut a = ChannelNoise::new(&key.trial(5), &cfg);
        let mut b = ChannelNoise::new(&key.trial(5), &cfg);
        for _ in 0..10 {
            assert_eq!(a.transmit(0.3f64), b.transmit(0.3f64));
        }
    }

    #[test]
    fn forward_noise_statistics() {
        let cfg = config(Feedback::Noiseless);
        let key = StreamKey::new(2);
        let n = 1_000_000;
        let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut noise = ChannelNoise::new(&key.trial(0), &cfg);
        for _ in 0..n {
            let x = 0.7f64;
            let [y1, y2] = noise.transmit(x);
            let (z1, z2) = (y1 - x, y2 - x);
            s1 += z1;
            s2 += z2;
            s11 += z1 * z1;
            s22 += z2 * z2;
            s12 += z1 * z2;
        }
        let nf = n as f64;
        let v1 = s11 / nf - (s1 / nf).powi(2);
        let v2 = s22 / nf - (s2 / nf).powi(2);
        let c = (s12 / nf - s1 * s2 / (nf * nf)) / (v1 * v2).sqrt();
        assert!((v1 - 0.5).abs() < 0.003, "{v1}");
        assert!((v2 - 0.5).abs() < 0.003, "{v2}");
        assert!(c.abs() < 0.003, "{c}");
    }

    #[test]
    fn noiseless_feedback_echoes_output() {
        let cfg = config(Feedback::Noiseless);
        let mut noise = ChannelNoise::new(&StreamKey::new(0).trial(0), &cfg);
        assert_eq!(noise.feed_back(0, 1.25f64), 1.25);
        assert_eq!(noise.feedback_noise(1), 0.0);
    }

    #[test]
    fn user_streams_are_decoupled() {
        let cfg = config(Feedback::Noisy { sigma2: [0.1, 0.1] });
        let trial = StreamKey::new(3).trial(9);
        let mut both = ChannelNoise::new(&trial, &cfg);
        let mut only_one = ChannelNoise::new(&trial, &cfg);
        for _ in 0..20 {
            let a = both.forward_noise(0);
            let _ = both.forward_noise(1);
            let _ = both.feedback_noise(1);
            let fa = both.feedback_noise(0);
            assert_eq!(a, only_one.forward_noise(0));
            assert_eq!(fa, only_one.feedback_noise(0));
        }
    }
}
