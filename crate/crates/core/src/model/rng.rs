use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::User;

/// Consumer of an independent random stream within one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum StreamRole {
    NoiseFwdU1 = 0,
    NoiseFwdU2 = 1,
    NoiseFbU1 = 2,
    NoiseFbU2 = 3,
    MessageU1 = 4,
    MessageU2 = 5,
}

const ROLE_SLOTS: u64 = 8;

impl StreamRole {
    pub fn forward(user: User) -> Self {
        [Self::NoiseFwdU1, Self::NoiseFwdU2][user]
    }

    pub fn feedback(user: User) -> Self {
        [Self::NoiseFbU1, Self::NoiseFbU2][user]
    }

    pub fn message(user: User) -> Self {
        [Self::MessageU1, Self::MessageU2][user]
    }
}

/// ChaCha key derived from an experiment seed.
///
/// Every `(trial, role)` pair selects its own ChaCha stream under this key, so
/// a trial's randomness depends only on the seed and the trial id, never on
/// which worker runs it or in which order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey {
    key: [u8; 32],
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self {
            key: ChaCha8Rng::seed_from_u64(seed).get_seed(),
        }
    }

    pub fn trial(&self, trial: u64) -> TrialRng {
        TrialRng { key: *self, trial }
    }

    pub fn stream(&self, trial: u64, role: StreamRole) -> ChaCha8Rng {
        assert!(trial < u64::MAX / ROLE_SLOTS, "trial id out of range");
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(trial * ROLE_SLOTS + role as u64);
        rng
    }
}

/// Random streams owned by a single trial.
#[derive(Clone, Copy, Debug)]
pub struct TrialRng {
    key: StreamKey,
    trial: u64,
}

impl TrialRng {
    pub fn id(&self) -> u64 {
        self.trial
    }

    pub fn stream(&self, role: StreamRole) -> ChaCha8Rng {
        self.key.stream(self.trial, role)
    }

    /// Uniform message index over `{0, …, 2^bits − 1}`.
    pub fn message(&self, user: User, bits: u32) -> u32 {
        self.stream(StreamRole::message(user))
            .random_range(0..(1u32 << bits))
    }

    pub fn messages(&self, bits: [u32; 2]) -> [u32; 2] {
        [self.message(0, bits[0]), self.message(1, bits[1])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let key = StreamKey::new(7);
        let a: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(key.stream(3, StreamRole::NoiseFwdU1), |r, _| {
                Some(r.next_u64())
            })
            .collect();
        let mut r = StreamKey::new(7).stream(3, StreamRole::NoiseFwdU1);
        let b: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(a, b);

        let first = |t, role| key.stream(t, role).next_u64();
        assert_ne!(
            first(3, StreamRole::NoiseFwdU1),
            first(3, StreamRole::NoiseFwdU2)
        );
        assert_ne!(
            first(3, StreamRole::NoiseFwdU1),
            first(4, StreamRole::NoiseFwdU1)
        );
        assert_ne!(
            first(3, StreamRole::NoiseFwdU1),
            StreamKey::new(8)
                .stream(3, StreamRole::NoiseFwdU1)
                .next_u64()
        );
    }

    #[test]
    fn messages_cover_the_alphabet_uniformly() {
        let key = StreamKey::new(1);
        let mut counts = [0u32; 8];
        for t in 0..80_000 {
            counts[key.trial(t).message(0, 3) as usize] += 1;
        }
        // Binomial(80000, 1/8): sd ≈ 93.5
        for c in counts {
            assert!((f64::from(c) - 10_000.0).abs() < 5.0 * 93.5, "{counts:?}");
        }
    }
}
