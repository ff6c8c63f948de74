use serde::{Deserialize, Serialize};

use crate::analytical::ol::{ol_decode_update, ol_moments, sgn, OlParams, OlState};
use crate::analytical::MomentTracker;
use crate::error::{Error, Result};
use crate::model::{
    bits_to_index, index_to_bits, ChannelConfig, ChannelNoise, PamConstellation, TrialRng,
    TrialTranscript, User,
};
use crate::Scalar;

/// Diagonal floor of the two-output normal equations.
const GRAM_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticalScheme {
    /// Ozarow's linear scheme with memoryless MMSE receivers.
    Ol,
    /// OL transmitter; receivers estimate from the current and previous output.
    Eol,
    /// Time division: each user gets half the channel uses of a single-user
    /// OL (Schalkwijk-Kailath) run.
    TdOl,
}

/// What the transmitter sends in one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transmit<T> {
    /// `X = amplitude·Θ_user`.
    Message { user: User, amplitude: T },
    /// `X = w₁ε̃₁ + w₂ε̃₂` from the transmitter's view of the receivers' errors.
    Errors { weights: [T; 2] },
}

/// How a receiver folds the round's output into its estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Update<T> {
    Hold,
    /// `Θ̂ = gain·Y_i`.
    Init {
        gain: T,
    },
    /// `Θ̂ ← Θ̂ − prev·Y_{i−1} − curr·Y_i`.
    Refine {
        prev: T,
        curr: T,
    },
}

impl<T: Scalar> Update<T> {
    #[inline]
    fn apply(&self, estimate: T, prev: T, curr: T) -> T {
        match *self {
            Update::Hold => estimate,
            Update::Init { gain } => gain * curr,
            Update::Refine { prev: a, curr: b } => estimate - a * prev - b * curr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundPlan<T> {
    pub transmit: Transmit<T>,
    pub update: [Update<T>; 2],
}

/// Exact statistics after a round, under the configured feedback.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundStats<T> {
    /// `E[X_i²]`.
    pub power: T,
    /// Receiver error variances `α_u`.
    pub alpha: [T; 2],
    /// Correlation of the receivers' errors.
    pub rho: T,
    /// `E[(ε̃_u − ε_u)²]`; zero with noiseless feedback.
    pub replica_gap: [T; 2],
    /// For error-combining rounds, `E[S²]` of the un-normalized symbol.
    pub raw_power: Option<T>,
}

/// Everything a trial went through, for inspection and Monte-Carlo checks.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord<T> {
    pub theta: [T; 2],
    pub transcript: TrialTranscript<T>,
    /// Receiver estimates `Θ̂_{u,i}` after each round.
    pub decoder_estimates: [Vec<T>; 2],
    /// Transmitter-side replicas of the estimates after each round.
    pub encoder_estimates: [Vec<T>; 2],
}

/// Precomputed analytical codec for one configuration.
///
/// Building the codec runs the moment recursion once; trials then only
/// execute the frozen per-round coefficients and can share the codec freely.
#[derive(Clone, Debug)]
pub struct AnalyticalCodec<T> {
    scheme: AnalyticalScheme,
    config: ChannelConfig,
    params: OlParams<T>,
    pam: [PamConstellation<T>; 2],
    plan: Vec<RoundPlan<T>>,
    stats: Vec<RoundStats<T>>,
}

impl<T: Scalar> AnalyticalCodec<T> {
    pub fn new(
        scheme: AnalyticalScheme,
        config: &ChannelConfig,
        params: OlParams<T>,
    ) -> Result<Self> {
        let pam = [
            PamConstellation::new(config.bits(0))?,
            PamConstellation::new(config.bits(1))?,
        ];
        let nominal = config.without_feedback_noise();
        let mut plan = match scheme {
            AnalyticalScheme::Ol => ol_plan(&nominal, &params)?,
            AnalyticalScheme::Eol => eol_plan(&nominal, &params)?,
            AnalyticalScheme::TdOl => td_plan(&nominal)?,
        };
        let stats = evaluate(&mut plan, config)?;
        Ok(Self {
            scheme,
            config: config.clone(),
            params,
            pam,
            plan,
            stats,
        })
    }

    pub fn scheme(&self) -> AnalyticalScheme {
        self.scheme
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn params(&self) -> &OlParams<T> {
        &self.params
    }

    pub fn constellation(&self, user: User) -> &PamConstellation<T> {
        &self.pam[user]
    }

    pub fn plan(&self) -> &[RoundPlan<T>] {
        &self.plan
    }

    /// Tracked statistics after each round (index 0 is round 1).
    pub fn stats(&self) -> &[RoundStats<T>] {
        &self.stats
    }

    /// Runs one block and returns the decoded message indices.
    pub fn run_trial(&self, messages: [u32; 2], noise: &mut ChannelNoise) -> [u32; 2] {
        self.execute(messages, noise, None)
    }

    pub fn run_trial_recorded(
        &self,
        messages: [u32; 2],
        noise: &mut ChannelNoise,
    ) -> ([u32; 2], TrialRecord<T>) {
        let n = self.plan.len();
        let mut record = TrialRecord {
            theta: [
                self.pam[0].point(messages[0]),
                self.pam[1].point(messages[1]),
            ],
            transcript: TrialTranscript::with_capacity(n),
            decoder_estimates: [Vec::with_capacity(n), Vec::with_capacity(n)],
            encoder_estimates: [Vec::with_capacity(n), Vec::with_capacity(n)],
        };
        let decoded = self.execute(messages, noise, Some(&mut record));
        (decoded, record)
    }

    /// Draws messages and noise for `trial` and returns `(sent, decoded)`.
    pub fn simulate(&self, trial: &TrialRng) -> ([u32; 2], [u32; 2]) {
        let messages = trial.messages(self.config.bits_pair());
        let mut noise = ChannelNoise::new(trial, &self.config);
        (messages, self.run_trial(messages, &mut noise))
    }

    fn execute(
        &self,
        messages: [u32; 2],
        noise: &mut ChannelNoise,
        mut record: Option<&mut TrialRecord<T>>,
    ) -> [u32; 2] {
        let theta = [
            self.pam[0].point(messages[0]),
            self.pam[1].point(messages[1]),
        ];
        let zero = T::zero();
        let mut dec = [zero; 2];
        let mut enc = [zero; 2];
        let mut y_prev = [zero; 2];
        let mut yt_prev = [zero; 2];
        for round in &self.plan {
            let x = match round.transmit {
                Transmit::Message { user, amplitude } => amplitude * theta[user],
                Transmit::Errors { weights } => {
                    weights[0] * (enc[0] - theta[0]) + weights[1] * (enc[1] - theta[1])
                }
            };
            let y = noise.transmit(x);
            let yt = [noise.feed_back(0, y[0]), noise.feed_back(1, y[1])];
            for u in 0..2 {
                dec[u] = round.update[u].apply(dec[u], y_prev[u], y[u]);
                enc[u] = round.update[u].apply(enc[u], yt_prev[u], yt[u]);
            }
            y_prev = y;
            yt_prev = yt;
            if let Some(rec) = record.as_deref_mut() {
                rec.transcript.push(x, y, yt);
                for u in 0..2 {
                    rec.decoder_estimates[u].push(dec[u]);
                    rec.encoder_estimates[u].push(enc[u]);
                }
            }
        }
        [
            self.pam[0].nearest_index(dec[0]),
            self.pam[1].nearest_index(dec[1]),
        ]
    }
}

/// One-shot convenience: builds the codec, runs a single trial on bit vectors.
pub fn run_analytical_trial<T: Scalar>(
    scheme: AnalyticalScheme,
    messages: [&[u8]; 2],
    config: &ChannelConfig,
    params: OlParams<T>,
    trial: &TrialRng,
) -> Result<([Vec<u8>; 2], TrialTranscript<T>)> {
    let codec = AnalyticalCodec::new(scheme, config, params)?;
    let mut idx = [0u32; 2];
    for u in 0..2 {
        if messages[u].len() != config.bits(u) as usize {
            return Err(Error::invalid(format!(
                "user {} message has {} bits, configuration expects {}",
                u + 1,
                messages[u].len(),
                config.bits(u)
            )));
        }
        idx[u] = bits_to_index(messages[u])?;
    }
    let mut noise = ChannelNoise::new(trial, config);
    let (decoded, record) = codec.run_trial_recorded(idx, &mut noise);
    Ok((
        [
            index_to_bits(decoded[0], config.bits(0))?,
            index_to_bits(decoded[1], config.bits(1))?,
        ],
        record.transcript,
    ))
}

fn init_round<T: Scalar>(config: &ChannelConfig, user: User) -> RoundPlan<T> {
    let p = config.power();
    let mut update = [Update::Hold; 2];
    update[user] = Update::Init {
        gain: T::lit(p.sqrt() / (p + config.sigma2_f(user))),
    };
    RoundPlan {
        transmit: Transmit::Message {
            user,
            amplitude: T::lit(p.sqrt()),
        },
        update,
    }
}

/// Per-user encoder weights `√(P/D)/√α₁` and `√(P/D)·g·sgn(ρ)/√α₂`.
fn ol_weights<T: Scalar>(alpha: [T; 2], rho: T, params: &OlParams<T>, power: T) -> Result<[T; 2]> {
    if !alpha.iter().all(|a| *a > T::zero() && a.is_finite()) {
        return Err(Error::Invariant(format!(
            "error variances must be positive, got {alpha:?}"
        )));
    }
    let g = params.g();
    let d = T::one() + g * g + T::lit(2.0) * g * rho.abs();
    let scale = (power / d).sqrt();
    Ok([
        scale / alpha[0].sqrt(),
        scale * g * sgn(rho) / alpha[1].sqrt(),
    ])
}

/// OL plan from the closed-form moment recursion.
fn ol_plan<T: Scalar>(config: &ChannelConfig, params: &OlParams<T>) -> Result<Vec<RoundPlan<T>>> {
    let power = T::lit(config.power());
    let mut plan = vec![init_round(config, 0), init_round(config, 1)];
    let mut state = OlState::after_init([T::zero(); 2], config);
    for _ in 2..config.blocklength() {
        let weights = ol_weights(state.alpha, state.rho, params, power)?;
        let moments = ol_moments(&state, params, config);
        plan.push(RoundPlan {
            transmit: Transmit::Errors { weights },
            update: [0, 1].map(|u| Update::Refine {
                prev: T::zero(),
                curr: moments.coefficient(u),
            }),
        });
        state = ol_decode_update(&state, [T::zero(); 2], &moments);
    }
    Ok(plan)
}

/// EOL plan: OL transmitter, two-output LMMSE receivers from round 4 on.
fn eol_plan<T: Scalar>(config: &ChannelConfig, params: &OlParams<T>) -> Result<Vec<RoundPlan<T>>> {
    let power = T::lit(config.power());
    let mut tracker = MomentTracker::new(config);
    let mut plan = Vec::with_capacity(config.blocklength());
    for user in [0, 1] {
        let round = init_round(config, user);
        tracker.transmit(&round.transmit);
        tracker.apply(&round.update);
        plan.push(round);
    }
    for i in 2..config.blocklength() {
        let alpha = [tracker.alpha(0), tracker.alpha(1)];
        let weights = ol_weights(alpha, tracker.rho(), params, power)?;
        let transmit = Transmit::Errors { weights };
        tracker.transmit(&transmit);
        let update = [0, 1].map(|u| {
            if i == 2 {
                memoryless_update(&tracker, u)
            } else {
                two_output_update(&tracker, u)
            }
        });
        tracker.apply(&update);
        plan.push(RoundPlan { transmit, update });
    }
    Ok(plan)
}

/// Time division: user 1 on the first half, user 2 on the second half.
fn td_plan<T: Scalar>(config: &ChannelConfig) -> Result<Vec<RoundPlan<T>>> {
    let n = config.blocklength();
    if !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "time division needs an even number of channel uses, got {n}"
        )));
    }
    let power = T::lit(config.power());
    let mut tracker = MomentTracker::new(config);
    let mut plan = Vec::with_capacity(n);
    for user in [0, 1] {
        let round = init_round(config, user);
        tracker.transmit(&round.transmit);
        tracker.apply(&round.update);
        plan.push(round);
        for _ in 1..n / 2 {
            let mut weights = [T::zero(); 2];
            weights[user] = (power / tracker.alpha(user)).sqrt();
            let transmit = Transmit::Errors { weights };
            tracker.transmit(&transmit);
            let mut update = [Update::Hold; 2];
            update[user] = memoryless_update(&tracker, user);
            tracker.apply(&update);
            plan.push(RoundPlan { transmit, update });
        }
    }
    Ok(plan)
}

fn memoryless_update<T: Scalar>(tracker: &MomentTracker<T>, user: User) -> Update<T> {
    let [_, _, curr2] = tracker.output_gram(user);
    Update::Refine {
        prev: T::zero(),
        curr: tracker.err_output(user) / curr2,
    }
}

/// Solves the 2×2 normal equations for `E[ε | Y_{i−1}, Y_i]`.
fn two_output_update<T: Scalar>(tracker: &MomentTracker<T>, user: User) -> Update<T> {
    let floor = T::lit(GRAM_FLOOR);
    let [pp, pc, cc] = tracker.output_gram(user);
    let (pp, cc) = (pp + floor, cc + floor);
    let rp = tracker.err_prev_output(user);
    let rc = tracker.err_output(user);
    let det = pp * cc - pc * pc;
    Update::Refine {
        prev: (cc * rp - pc * rc) / det,
        curr: (pp * rc - pc * rp) / det,
    }
}

/// Replays `plan` through the exact tracker under the real feedback noise.
///
/// With noisy feedback each error-combining round is rescaled so that its
/// tracked power is exactly `P`; the receivers keep their nominal coefficients.
fn evaluate<T: Scalar>(
    plan: &mut [RoundPlan<T>],
    config: &ChannelConfig,
) -> Result<Vec<RoundStats<T>>> {
    let power = T::lit(config.power());
    let noisy = config.feedback().is_noisy();
    let mut tracker = MomentTracker::new(config);
    let mut stats = Vec::with_capacity(plan.len());
    for round in plan.iter_mut() {
        let mut raw_power = None;
        if let Transmit::Errors { weights } = &mut round.transmit {
            let raw = tracker.encoder_combination_power(*weights);
            raw_power = Some(raw);
            if noisy {
                if !(raw > T::zero() && raw.is_finite()) {
                    return Err(Error::Invariant(format!(
                        "symbol power must be positive, got {raw}"
                    )));
                }
                let scale = (power / raw).sqrt();
                *weights = [weights[0] * scale, weights[1] * scale];
            }
        }
        tracker.transmit(&round.transmit);
        tracker.apply(&round.update);
        stats.push(RoundStats {
            power: tracker.power(),
            alpha: [tracker.alpha(0), tracker.alpha(1)],
            rho: tracker.rho(),
            replica_gap: [tracker.replica_gap(0), tracker.replica_gap(1)],
            raw_power,
        });
    }
    Ok(stats)
}
