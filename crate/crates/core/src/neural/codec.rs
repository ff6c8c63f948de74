use crate::error::{Error, Result};
use crate::model::{
    index_to_bits, ChannelConfig, ChannelNoise, PamConstellation, TrialRng, TrialTranscript, User,
};
use crate::neural::layers::{softmax, FeatureExtractor};
use crate::neural::CodecWeights;
use crate::Scalar;

/// Past symbols and feedback available to the transmitter before round `i`.
///
/// Each slice must hold at least `i − 1` entries; anything beyond is ignored.
#[derive(Clone, Copy, Debug)]
pub struct EncoderHistory<'a, T> {
    pub x: &'a [T],
    pub y_tilde: [&'a [T]; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutput<T> {
    pub logits: Vec<T>,
    pub probabilities: Vec<T>,
    pub index: u32,
    pub bits: Vec<u8>,
}

impl<T: Scalar> CodecWeights<T> {
    pub fn fe_forward(&self, fe: &FeatureExtractor<T>, input: &[T]) -> Result<Vec<T>> {
        fe.forward(input, self.activation, self.fe_wiring, T::lit(self.ln_eps))
    }

    /// PAM rounds: `X₁ = β₁Θ₁`, `X₂ = β₂Θ₂`.
    pub fn init_rounds(&self, theta: [T; 2]) -> [T; 2] {
        [self.beta[0] * theta[0], self.beta[1] * theta[1]]
    }

    /// Zero-padded `[X | Ỹ₁ | Ỹ₂]` input of round `round` (1-based, ≥ 3).
    pub fn encoder_input(&self, history: &EncoderHistory<'_, T>, round: usize) -> Result<Vec<T>> {
        if round < 3 || round > self.n {
            return Err(Error::invalid(format!(
                "learned rounds are 3..={}, got {round}",
                self.n
            )));
        }
        let used = round - 1;
        let block = self.n - 1;
        let blocks = [history.x, history.y_tilde[0], history.y_tilde[1]];
        if blocks.iter().any(|b| b.len() < used) {
            return Err(Error::invalid(format!(
                "round {round} needs {used} past values per history block"
            )));
        }
        let mut q = vec![T::zero(); 3 * block];
        for (dst, src) in q.chunks_exact_mut(block).zip(blocks) {
            dst[..used].copy_from_slice(&src[..used]);
        }
        Ok(q)
    }

    /// Encoder output `s` before the power-constraint block.
    pub fn raw_encoder_output(&self, history: &EncoderHistory<'_, T>, round: usize) -> Result<T> {
        let q = self.encoder_input(history, round)?;
        let features = self.fe_forward(&self.fe_enc, &q)?;
        Ok(self.mlp_enc.forward(&features, self.activation))
    }

    /// `X_i = β_i·(s − μ_i)/√(σ²_i + ε)`.
    pub fn encode_round(&self, history: &EncoderHistory<'_, T>, round: usize) -> Result<T> {
        let s = self.raw_encoder_output(history, round)?;
        let stat = self.ps_stats[round - 1];
        let standardized = (s - stat.mean) / (stat.var + T::lit(self.ps_eps)).sqrt();
        Ok(self.beta[round - 1] * standardized)
    }

    pub fn logits(&self, y: &[T], user: User) -> Result<Vec<T>> {
        if y.len() != self.n {
            return Err(Error::invalid(format!(
                "decoder expects {} channel outputs, got {}",
                self.n,
                y.len()
            )));
        }
        let features = self.fe_forward(&self.fe_dec[user], y)?;
        Ok(self.mlp_dec[user].forward(&features))
    }

    /// Class probabilities, MAP index (ties to the smaller index) and bits.
    pub fn decode(&self, y: &[T], user: User) -> Result<DecodeOutput<T>> {
        let logits = self.logits(y, user)?;
        let probabilities = softmax(&logits);
        let index = argmax(&logits);
        let bits = index_to_bits(index, self.k[user])?;
        Ok(DecodeOutput {
            logits,
            probabilities,
            index,
            bits,
        })
    }
}

fn argmax<T: Scalar>(v: &[T]) -> u32 {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best as u32
}

/// Learned codec bound to a channel configuration.
#[derive(Clone, Debug)]
pub struct NeuralCodec<T> {
    weights: CodecWeights<T>,
    config: ChannelConfig,
    pam: [PamConstellation<T>; 2],
}

impl<T: Scalar> NeuralCodec<T> {
    pub fn new(weights: CodecWeights<T>, config: &ChannelConfig) -> Result<Self> {
        if weights.n != config.blocklength() {
            return Err(Error::Mismatch(format!(
                "weights trained for N = {}, configuration has N = {}",
                weights.n,
                config.blocklength()
            )));
        }
        if weights.k != config.bits_pair() {
            return Err(Error::Mismatch(format!(
                "weights trained for K = {:?}, configuration has K = {:?}",
                weights.k,
                config.bits_pair()
            )));
        }
        if (weights.power - config.power()).abs() > 1e-6 * config.power() {
            return Err(Error::Mismatch(format!(
                "weights trained for P = {}, configuration has P = {}",
                weights.power,
                config.power()
            )));
        }
        let pam = [
            PamConstellation::new(config.bits(0))?,
            PamConstellation::new(config.bits(1))?,
        ];
        Ok(Self {
            weights,
            config: config.clone(),
            pam,
        })
    }

    pub fn weights(&self) -> &CodecWeights<T> {
        &self.weights
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn run_trial(&self, messages: [u32; 2], noise: &mut ChannelNoise) -> [u32; 2] {
        self.run_trial_recorded(messages, noise).0
    }

    pub fn run_trial_recorded(
        &self,
        messages: [u32; 2],
        noise: &mut ChannelNoise,
    ) -> ([u32; 2], TrialTranscript<T>) {
        let w = &self.weights;
        let n = w.n;
        let theta = [
            self.pam[0].point(messages[0]),
            self.pam[1].point(messages[1]),
        ];
        let mut t = TrialTranscript::with_capacity(n);
        for x in w.init_rounds(theta) {
            let y = noise.transmit(x);
            let yt = [noise.feed_back(0, y[0]), noise.feed_back(1, y[1])];
            t.push(x, y, yt);
        }
        for round in 3..=n {
            let history = EncoderHistory {
                x: &t.x,
                y_tilde: [&t.y_tilde[0], &t.y_tilde[1]],
            };
            let x = w
                .encode_round(&history, round)
                .expect("history length and round validated by construction");
            let y = noise.transmit(x);
            let yt = [noise.feed_back(0, y[0]), noise.feed_back(1, y[1])];
            t.push(x, y, yt);
        }
        let decoded = [0, 1].map(|u| {
            w.logits(&t.y[u], u)
                .map(|l| argmax(&l))
                .expect("decoder input length equals N")
        });
        (decoded, t)
    }

    pub fn simulate(&self, trial: &TrialRng) -> ([u32; 2], [u32; 2]) {
        let messages = trial.messages(self.config.bits_pair());
        let mut noise = ChannelNoise::new(trial, &self.config);
        (messages, self.run_trial(messages, &mut noise))
    }
}
