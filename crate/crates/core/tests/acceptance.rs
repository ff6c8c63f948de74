//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use gbcf_core::analytical::{AnalyticalCodec, AnalyticalScheme, OlParams};
use gbcf_core::harness::{
    estimate_bler, estimate_with_codec, sweep, write_csv, BlerReport, Experiment, Scheme,
};
use gbcf_core::model::{ChannelConfig, Feedback};
use gbcf_core::neural::{load_weights, softmax, CodecWeights, EncoderHistory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

mod common;
use common::{sample_moments, z_score};

type Check = Result<String, String>;

const MC_TRIALS: u64 = 1_000_000;

fn cfg(snr_f: f64, snr_fb: Option<f64>, n: usize, k: u32) -> ChannelConfig {
    ChannelConfig::symmetric(1.0, snr_f, snr_fb, n, k).unwrap()
}

fn ol(config: &ChannelConfig) -> AnalyticalCodec<f64> {
    AnalyticalCodec::new(AnalyticalScheme::Ol, config, OlParams::default()).unwrap()
}

fn bler(scheme: Scheme, config: ChannelConfig, seed: u64) -> BlerReport {
    estimate_bler(&Experiment::new(scheme, config, MC_TRIALS, seed)).unwrap()
}

/// `b − a` in combined standard errors, per user.
fn separation(a: &BlerReport, b: &BlerReport, user: usize) -> f64 {
    let se = (a.stderr(user).powi(2) + b.stderr(user).powi(2)).sqrt();
    (b.bler(user) - a.bler(user)) / se.max(1e-300)
}

fn fmt_pair(r: &BlerReport) -> String {
    format!("[{:.5}, {:.5}]", r.bler(0), r.bler(1))
}

fn uncoded_baseline() -> Check {
    let config = cfg(3.0, None, 2, 1);
    let codec = ol(&config);
    let clock = Instant::now();
    let (n, e) = estimate_with_codec(&codec, MC_TRIALS, 1, 1, None).map_err(|e| e.to_string())?;
    let secs = clock.elapsed().as_secs_f64();
    let p = e.map(|x| x as f64 / n as f64);
    let detail = format!("BLER {p:?} vs 0.0789 ± 0.001, {secs:.2} s single-threaded");
    let ok = p.iter().all(|v| (v - 0.0789).abs() <= 0.001) && secs < 10.0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tracker_exactness() -> Check {
    let hand = ChannelConfig::new(1.0, [0.5, 0.5], Feedback::Noiseless, 3, [1, 1]).unwrap();
    let r3 = ol(&hand).stats()[2];
    if (r3.alpha[0] - 0.222222).abs() > 1e-6 || (r3.rho + 0.666667).abs() > 1e-6 {
        return Err(format!("checkpoint: alpha {} rho {}", r3.alpha[0], r3.rho));
    }
    let mut worst = (0.0f64, String::new());
    let mut seed = 100;
    for n in [3, 6, 9] {
        for snr in [0.0, 3.0] {
            let codec = ol(&cfg(snr, None, n, 1));
            seed += 1;
            let m = sample_moments(&codec, MC_TRIALS, seed);
            for (i, s) in codec.stats().iter().enumerate() {
                let cov = s.rho * (s.alpha[0] * s.alpha[1]).sqrt();
                let zs = [
                    ("alpha1", z_score(&m.alpha[i][0], m.trials, s.alpha[0])),
                    ("alpha2", z_score(&m.alpha[i][1], m.trials, s.alpha[1])),
                    ("rho", z_score(&m.cross[i], m.trials, cov)),
                ];
                for (what, z) in zs {
                    if z > worst.0 {
                        worst = (z, format!("{what} N={n} {snr} dB round {}", i + 1));
                    }
                }
            }
        }
    }
    let detail = format!(
        "checkpoint alpha {:.6} rho {:.6}; worst deviation {:.2} se ({})",
        r3.alpha[0], r3.rho, worst.0, worst.1
    );
    if worst.0 <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn power_constraint() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (seed, fb) in [(201, None), (202, Some(15.0)), (203, Some(5.0))] {
        let codec = ol(&cfg(3.0, fb, 9, 1));
        let tracked = codec.stats()[2..]
            .iter()
            .map(|s| (s.power - 1.0).abs())
            .fold(0.0, f64::max);
        let m = sample_moments(&codec, MC_TRIALS, seed);
        let avg = m.power.iter().map(|a| a.mean(m.trials)).sum::<f64>() / m.power.len() as f64;
        ok &= tracked <= 1e-9 && avg <= 1.01;
        let label = fb.map_or("noiseless".to_string(), |d| format!("fb {d} dB"));
        notes.push(format!(
            "{label}: tracked gap {tracked:.1e}, empirical {avg:.4}"
        ));
    }
    let detail = notes.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn short_vs_long_ordering() -> Check {
    let low = [
        bler(Scheme::Ol, cfg(-2.0, None, 3, 1), 301),
        bler(Scheme::Ol, cfg(-2.0, None, 9, 3), 302),
    ];
    let high = [
        bler(Scheme::Ol, cfg(6.0, None, 3, 1), 303),
        bler(Scheme::Ol, cfg(6.0, None, 9, 3), 304),
    ];
    let z_low = (0..2)
        .map(|u| separation(&low[0], &low[1], u))
        .fold(f64::INFINITY, f64::min);
    let z_high = (0..2)
        .map(|u| separation(&high[1], &high[0], u))
        .fold(f64::INFINITY, f64::min);
    let detail = format!(
        "-2 dB: K1N3 {} < K3N9 {} ({z_low:.1} se); 6 dB: K1N3 {} > K3N9 {} ({z_high:.1} se)",
        fmt_pair(&low[0]),
        fmt_pair(&low[1]),
        fmt_pair(&high[0]),
        fmt_pair(&high[1])
    );
    if z_low > 3.0 && z_high > 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn eol_dominance() -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut seed = 400;
    for k in [1u32, 3] {
        for snr in [0.0, 3.0, 6.0] {
            let c = cfg(snr, None, 3 * k as usize, k);
            seed += 2;
            let a = bler(Scheme::Ol, c.clone(), seed);
            let b = bler(Scheme::Eol, c, seed + 1);
            for u in 0..2 {
                // positive when EOL is worse than OL
                worst = worst.max(-separation(&b, &a, u));
            }
        }
    }
    let detail = format!("largest EOL excess over OL: {worst:.2} se (limit 3)");
    if worst <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn td_inferiority() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (n, seed) in [(8usize, 601), (10, 603)] {
        let c = cfg(3.0, None, n, 3);
        let o = bler(Scheme::Ol, c.clone(), seed);
        let t = bler(Scheme::TdOl, c, seed + 1);
        let z = (0..2)
            .map(|u| separation(&o, &t, u))
            .fold(f64::INFINITY, f64::min);
        ok &= z > 3.0;
        notes.push(format!(
            "N={n}: TD {} vs OL {} ({z:.1} se)",
            fmt_pair(&t),
            fmt_pair(&o)
        ));
    }
    let detail = notes.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn noisy_feedback_trend() -> Check {
    let grid = [20.0, 15.0, 10.0, 5.0];
    let run = |n: usize, k: u32, seed: u64| -> Vec<BlerReport> {
        grid.iter()
            .enumerate()
            .map(|(i, &fb)| bler(Scheme::Ol, cfg(3.0, Some(fb), n, k), seed + i as u64))
            .collect()
    };
    let short = run(3, 1, 700);
    let long = run(9, 3, 710);
    let joint_se = |r: &BlerReport| ((r.stderr(0).powi(2) + r.stderr(1).powi(2)) / 4.0).sqrt();
    let deg = |rs: &[BlerReport]| rs[3].joint_bler() - rs[0].joint_bler();
    let deg_se = (joint_se(&short[0]).powi(2)
        + joint_se(&short[3]).powi(2)
        + joint_se(&long[0]).powi(2)
        + joint_se(&long[3]).powi(2))
    .sqrt();
    let faster = deg(&long) - deg(&short) > 3.0 * deg_se;
    let diff: Vec<f64> = short
        .iter()
        .zip(&long)
        .map(|(s, l)| l.joint_bler() - s.joint_bler())
        .collect();
    let crossover = diff.windows(2).any(|w| w[0].signum() != w[1].signum());
    let short_better_low = short[2..].iter().zip(&long[2..]).all(|(s, l)| {
        l.joint_bler() - s.joint_bler() > 3.0 * (joint_se(s).powi(2) + joint_se(l).powi(2)).sqrt()
    });
    let fmt = |rs: &[BlerReport]| {
        rs.iter()
            .map(|r| format!("{:.4}", r.joint_bler()))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let detail = format!(
        "fb 20/15/10/5 dB: N=3 [{}], N=9 [{}]; degradation {:.4} vs {:.4}",
        fmt(&short),
        fmt(&long),
        deg(&short),
        deg(&long)
    );
    if faster && (crossover || short_better_low) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.gbcf"))
}

fn parallel_equivalence() -> Check {
    let csv_for = |workers: usize| -> Vec<u8> {
        let mut rows = Vec::new();
        let ol =
            Experiment::new(Scheme::Ol, cfg(0.0, None, 3, 1), 20_000, 808).with_workers(workers);
        rows.extend(sweep(&ol, &[0.0, 3.0], Some(&[10.0, 20.0])).unwrap());
        let eol = Experiment {
            scheme: Scheme::Eol,
            config: cfg(3.0, None, 6, 2),
            ..ol.clone()
        };
        rows.extend(sweep(&eol, &[1.0, 4.0], None).unwrap());
        let neural = Experiment::new(Scheme::Neural, cfg(3.0, None, 3, 1), 9_000, 808)
            .with_weights(fixture("fixture_n3_k1"))
            .with_workers(workers);
        rows.push(estimate_bler(&neural).unwrap());
        for r in &mut rows {
            r.wall_time_s = None;
        }
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        out
    };
    let one = csv_for(1);
    let four = csv_for(4);
    let sixteen = csv_for(16);
    let detail = format!(
        "{} bytes, {} rows at 1/4/16 workers",
        one.len(),
        one.iter().filter(|&&b| b == b'\n').count() - 1
    );
    if one == four && one == sixteen {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn floats(v: &Value) -> Vec<f32> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap() as f32)
        .collect()
}

fn neural_runtime() -> Check {
    let golden: Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden.json"),
        )
        .map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (name, g) in golden.as_object().unwrap() {
        let w: CodecWeights<f32> = load_weights(fixture(name)).map_err(|e| e.to_string())?;
        for c in g["encoder"].as_array().unwrap() {
            let round = c["round"].as_u64().unwrap() as usize;
            let (x, y1, y2) = (floats(&c["x"]), floats(&c["yt1"]), floats(&c["yt2"]));
            let h = EncoderHistory {
                x: &x,
                y_tilde: [&y1, &y2],
            };
            let got = w.encode_round(&h, round).map_err(|e| e.to_string())?;
            worst = worst.max((f64::from(got) - c["symbol_f32"].as_f64().unwrap()).abs());
            cases += 1;
        }
        for c in g["decoder"].as_array().unwrap() {
            let user = c["user"].as_u64().unwrap() as usize - 1;
            let logits = w
                .logits(&floats(&c["y"]), user)
                .map_err(|e| e.to_string())?;
            for (a, b) in logits.iter().zip(c["logits_f32"].as_array().unwrap()) {
                worst = worst.max((f64::from(*a) - b.as_f64().unwrap()).abs());
            }
            cases += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sum_gap = 0.0f64;
    for _ in 0..10_000 {
        let c = rng.random_range(2..=64);
        let logits: Vec<f64> = (0..c).map(|_| rng.random_range(-30.0..30.0)).collect();
        let p = softmax(&logits);
        if p.iter().any(|&v| v <= 0.0) {
            return Err("softmax produced a non-positive probability".into());
        }
        sum_gap = sum_gap.max((p.iter().sum::<f64>() - 1.0).abs());
    }
    let detail = format!(
        "{cases} golden cases, worst gap {worst:.1e} (limit 1e-6); softmax sum gap {sum_gap:.1e}"
    );
    if worst <= 1e-6 && sum_gap <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("uncoded baseline oracle", uncoded_baseline),
        ("moment tracker exactness", tracker_exactness),
        ("power constraint", power_constraint),
        (
            "short/long block ordering at rate 1/3",
            short_vs_long_ordering,
        ),
        ("EOL dominance", eol_dominance),
        ("time-division inferiority", td_inferiority),
        ("noisy-feedback robustness trend", noisy_feedback_trend),
        ("determinism and parallel equivalence", parallel_equivalence),
        ("neural runtime without trainer", neural_runtime),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| *f == id || title.contains(f.as_str()))
        {
            continue;
        }
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {id}. {title}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {id}. {title}: {d} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
