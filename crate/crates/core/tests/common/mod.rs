#![allow(dead_code)]

use gbcf_core::analytical::AnalyticalCodec;
use gbcf_core::model::{ChannelNoise, StreamKey};

type Codec = AnalyticalCodec<f64>;

/// Running sums of a statistic and its square.
#[derive(Clone, Copy, Default)]
pub struct Acc {
    sum: f64,
    sq: f64,
}

impl Acc {
    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.sq += v * v;
    }

    pub fn mean(&self, n: u64) -> f64 {
        self.sum / n as f64
    }

    pub fn stderr(&self, n: u64) -> f64 {
        let m = self.mean(n);
        ((self.sq / n as f64 - m * m) / n as f64).sqrt()
    }
}

/// Per-round sample moments of the receiver errors: α₁, α₂, E[ε₁ε₂], replica gaps, X².
pub struct RoundMoments {
    pub trials: u64,
    pub alpha: Vec<[Acc; 2]>,
    pub cross: Vec<Acc>,
    pub gap: Vec<[Acc; 2]>,
    pub power: Vec<Acc>,
}

pub fn sample_moments(codec: &Codec, trials: u64, seed: u64) -> RoundMoments {
    let n = codec.config().blocklength();
    let mut m = RoundMoments {
        trials,
        alpha: vec![[Acc::default(); 2]; n],
        cross: vec![Acc::default(); n],
        gap: vec![[Acc::default(); 2]; n],
        power: vec![Acc::default(); n],
    };
    let key = StreamKey::new(seed);
    for t in 0..trials {
        let trial = key.trial(t);
        let messages = trial.messages(codec.config().bits_pair());
        let mut noise = ChannelNoise::new(&trial, codec.config());
        let (_, rec) = codec.run_trial_recorded(messages, &mut noise);
        for i in 0..n {
            let e = [0, 1].map(|u| rec.decoder_estimates[u][i] - rec.theta[u]);
            for u in 0..2 {
                m.alpha[i][u].push(e[u] * e[u]);
                let g = rec.encoder_estimates[u][i] - rec.decoder_estimates[u][i];
                m.gap[i][u].push(g * g);
            }
            m.cross[i].push(e[0] * e[1]);
            m.power[i].push(rec.transcript.x[i] * rec.transcript.x[i]);
        }
    }
    m
}

pub fn assert_within_3se(what: &str, acc: &Acc, trials: u64, tracked: f64) {
    let (mean, se) = (acc.mean(trials), acc.stderr(trials));
    assert!(
        (mean - tracked).abs() <= 3.0 * se.max(1e-15),
        "{what}: sample {mean} vs tracked {tracked} (se {se})"
    );
}

/// `|sample − tracked|` in standard errors.
pub fn z_score(acc: &Acc, trials: u64, tracked: f64) -> f64 {
    (acc.mean(trials) - tracked).abs() / acc.stderr(trials).max(1e-15)
}
