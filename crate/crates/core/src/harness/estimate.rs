use std::time::Instant;

use rayon::prelude::*;

use crate::analytical::{AnalyticalCodec, OlParams};
use crate::error::{Error, Result};
use crate::harness::{BlerReport, Experiment, Scheme};
use crate::model::{ChannelConfig, Feedback, StreamKey, TrialRng};
use crate::neural::{load_weights, NeuralCodec};
use crate::Scalar;

/// Trials per work unit. Fixed so results do not depend on the worker count.
const CHUNK_TRIALS: u64 = 4096;
/// Chunks evaluated between early-stopping checks.
const CHUNKS_PER_WAVE: u64 = 32;

/// Anything that can run one seeded trial end to end.
pub trait TrialCodec: Sync {
    /// Returns `(sent, decoded)` message indices.
    fn simulate(&self, trial: &TrialRng) -> ([u32; 2], [u32; 2]);
}

impl<T: Scalar> TrialCodec for AnalyticalCodec<T> {
    fn simulate(&self, trial: &TrialRng) -> ([u32; 2], [u32; 2]) {
        AnalyticalCodec::simulate(self, trial)
    }
}

impl<T: Scalar> TrialCodec for NeuralCodec<T> {
    fn simulate(&self, trial: &TrialRng) -> ([u32; 2], [u32; 2]) {
        NeuralCodec::simulate(self, trial)
    }
}

/// Effective worker count: the request (or every core), capped by `GBCF_THREADS`.
pub fn worker_count(requested: Option<usize>) -> usize {
    let base =
        requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var("GBCF_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    cap.map_or(base, |c| base.min(c)).max(1)
}

fn count_chunk(codec: &dyn TrialCodec, key: &StreamKey, start: u64, end: u64) -> [u64; 2] {
    let mut errors = [0u64; 2];
    for t in start..end {
        let (sent, decoded) = codec.simulate(&key.trial(t));
        for u in 0..2 {
            errors[u] += u64::from(sent[u] != decoded[u]);
        }
    }
    errors
}

/// Counts block errors of `codec` over `trials` seeded trials.
///
/// Returns `(trials_run, errors)`. Without `min_errors` every trial runs and
/// the counts depend only on `seed`.
pub fn estimate_with_codec(
    codec: &dyn TrialCodec,
    trials: u64,
    seed: u64,
    workers: usize,
    min_errors: Option<u64>,
) -> Result<(u64, [u64; 2])> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    let key = StreamKey::new(seed);
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    let wave = if min_errors.is_some() {
        CHUNKS_PER_WAVE
    } else {
        chunks.max(1)
    };
    let mut errors = [0u64; 2];
    let mut done = 0u64;
    let mut next = 0u64;
    while next < chunks {
        let stop = (next + wave).min(chunks);
        let part = pool.install(|| {
            (next..stop)
                .into_par_iter()
                .map(|c| {
                    let start = c * CHUNK_TRIALS;
                    let end = (start + CHUNK_TRIALS).min(trials);
                    count_chunk(codec, &key, start, end)
                })
                .reduce(|| [0, 0], |a, b| [a[0] + b[0], a[1] + b[1]])
        });
        errors[0] += part[0];
        errors[1] += part[1];
        done = (stop * CHUNK_TRIALS).min(trials);
        next = stop;
        if min_errors.is_some_and(|m| errors.iter().all(|&e| e >= m)) {
            break;
        }
    }
    Ok((done, errors))
}

/// Runs one experiment and reports block-error rates with 95% Wilson intervals.
pub fn estimate_bler(exp: &Experiment) -> Result<BlerReport> {
    exp.validate()?;
    let clock = Instant::now();
    let workers = worker_count(exp.workers);
    let (trials, block_errors) = match exp.scheme.analytical() {
        Some(scheme) => {
            let codec = AnalyticalCodec::<f64>::new(scheme, &exp.config, OlParams::new(exp.g)?)?;
            estimate_with_codec(&codec, exp.trials, exp.seed, workers, exp.min_errors)?
        }
        None => {
            let path = exp
                .weights
                .as_ref()
                .ok_or_else(|| Error::invalid("the neural scheme needs a weights file"))?;
            let codec = NeuralCodec::new(load_weights(path)?, &exp.config)?;
            estimate_with_codec(&codec, exp.trials, exp.seed, workers, exp.min_errors)?
        }
    };
    Ok(BlerReport {
        scheme: exp.scheme,
        k: exp.config.bits_pair(),
        n: exp.config.blocklength(),
        snr_f_db: tidy_db(exp.config.snr_f_db()),
        snr_fb_db: exp.config.snr_fb_db().map(tidy_db),
        trials,
        block_errors,
        seed: exp.seed,
        wall_time_s: Some(clock.elapsed().as_secs_f64()),
    })
}

// Undo the dB -> variance -> dB round-off so reports carry the grid values.
fn tidy_db(db: f64) -> f64 {
    (db * 1e9).round() / 1e9
}

/// Time-division baseline for the same channel and budget.
pub fn td_baseline(exp: &Experiment) -> Result<BlerReport> {
    let n = exp.config.blocklength();
    if !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "time division needs an even number of channel uses, got {n}"
        )));
    }
    let mut td = exp.clone();
    td.scheme = Scheme::TdOl;
    td.weights = None;
    estimate_bler(&td)
}

/// Evaluates `template` over a grid: forward SNR outer, feedback SNR inner.
/// `snr_fb_grid = None` keeps feedback noiseless. Every point reuses the
/// template seed.
pub fn sweep(
    template: &Experiment,
    snr_f_grid: &[f64],
    snr_fb_grid: Option<&[f64]>,
) -> Result<Vec<BlerReport>> {
    if snr_f_grid.is_empty() {
        return Err(Error::invalid("forward SNR grid is empty"));
    }
    if snr_fb_grid.is_some_and(|g| g.is_empty()) {
        return Err(Error::invalid("feedback SNR grid is empty"));
    }
    let base = &template.config;
    let fb_points: Vec<Option<f64>> = match snr_fb_grid {
        Some(g) => g.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::with_capacity(snr_f_grid.len() * fb_points.len());
    for &snr_f in snr_f_grid {
        for &snr_fb in &fb_points {
            let config = point_config(base, snr_f, snr_fb)?;
            let exp = Experiment {
                config,
                ..template.clone()
            };
            out.push(estimate_bler(&exp)?);
        }
    }
    Ok(out)
}

fn point_config(base: &ChannelConfig, snr_f: f64, snr_fb: Option<f64>) -> Result<ChannelConfig> {
    let sym = ChannelConfig::symmetric(
        base.power(),
        snr_f,
        snr_fb,
        base.blocklength(),
        base.bits(0),
    )?;
    let feedback = match snr_fb {
        None => Feedback::Noiseless,
        Some(_) => sym.feedback(),
    };
    ChannelConfig::new(
        base.power(),
        [sym.sigma2_f(0), sym.sigma2_f(1)],
        feedback,
        base.blocklength(),
        base.bits_pair(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(trials: u64) -> Experiment {
        let config = ChannelConfig::symmetric(1.0, 3.0, None, 3, 1).unwrap();
        Experiment::new(Scheme::Ol, config, trials, 11)
    }

    #[test]
    fn worker_count_independent() {
        let e = exp(10_000);
        let a = estimate_bler(&e.clone().with_workers(1)).unwrap();
        let b = estimate_bler(&e.with_workers(3)).unwrap();
        assert_eq!(a.block_errors, b.block_errors);
        assert_eq!(a.trials, 10_000);
    }

    #[test]
    fn partial_chunk_counts_all_trials() {
        let r = estimate_bler(&exp(CHUNK_TRIALS + 5)).unwrap();
        assert_eq!(r.trials, CHUNK_TRIALS + 5);
    }

    #[test]
    fn early_stop_is_wave_aligned() {
        let mut e = exp(10_000_000);
        e.min_errors = Some(50);
        let r = estimate_bler(&e).unwrap();
        assert!(r.trials < e.trials);
        assert_eq!(r.trials % (CHUNK_TRIALS * CHUNKS_PER_WAVE), 0);
        assert!(r.block_errors.iter().all(|&x| x >= 50));
    }

    #[test]
    fn td_rejects_odd_blocklength() {
        assert!(matches!(
            td_baseline(&exp(10)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sweep_order_outer_forward() {
        let mut e = exp(200);
        e.config = ChannelConfig::new(1.0, [1.0, 1.0], Feedback::Noiseless, 3, [1, 2]).unwrap();
        let rows = sweep(&e, &[0.0, 4.0], Some(&[10.0, 20.0, 30.0])).unwrap();
        let pts: Vec<_> = rows.iter().map(|r| (r.snr_f_db, r.snr_fb_db)).collect();
        assert_eq!(rows.len(), 6);
        assert!((pts[0].0 - 0.0).abs() < 1e-12 && (pts[0].1.unwrap() - 10.0).abs() < 1e-12);
        assert!((pts[2].1.unwrap() - 30.0).abs() < 1e-12);
        assert!((pts[3].0 - 4.0).abs() < 1e-12);
        assert!(rows.iter().all(|r| r.k == [1, 2]));
        assert!(sweep(&e, &[], None).is_err());
        assert!(sweep(&e, &[1.0], Some(&[])).is_err());
    }
}
