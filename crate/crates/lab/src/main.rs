use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gbcf_core::harness::{
    emit, estimate_bler, sweep, BlerReport, Experiment, OutputFormat, Scheme,
};
use gbcf_core::model::{snr_db_to_variance, ChannelConfig, Feedback};
use gbcf_core::neural::{interpret_sweep, load_weights, InterpretTable};
use gbcf_core::Error;

/// Monte-Carlo block-error-rate lab for feedback codes on the two-user
/// Gaussian broadcast channel.
#[derive(Parser, Debug)]
#[command(name = "gbcf-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate BLER at one operating point.
    Run(RunArgs),
    /// Estimate BLER over a grid of forward (and feedback) SNRs.
    Sweep(SweepArgs),
    /// Tabulate a learned encoder's third-round symbol against one feedback value.
    Interpret(InterpretArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Ol,
    Eol,
    Neural,
    Td,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Ol => Scheme::Ol,
            SchemeArg::Eol => Scheme::Eol,
            SchemeArg::Neural => Scheme::Neural,
            SchemeArg::Td => Scheme::TdOl,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long)]
    k1: u32,
    #[arg(long)]
    k2: u32,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Worker threads (default: all cores, capped by GBCF_THREADS).
    #[arg(long)]
    workers: Option<usize>,
    /// Stop once both users reach this many block errors (not reproducible across budgets).
    #[arg(long)]
    min_errors: Option<u64>,
    /// Leave wall_time_s empty so repeated runs produce identical files.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    snr_f: f64,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "noiseless_fb")]
    snr_fb: Option<f64>,
    /// Noiseless feedback (the default when --snr-fb is absent).
    #[arg(long)]
    noiseless_fb: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    snr_f_grid: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "noiseless_fb"
    )]
    snr_fb_grid: Option<Vec<f64>>,
    #[arg(long)]
    noiseless_fb: bool,
}

#[derive(Args, Debug)]
struct InterpretArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = 3)]
    round: usize,
    /// User whose message index and forward noise are held at zero.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    fix_user: u8,
    /// Feedback values as lo:hi:step.
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Message index of the swept user.
    #[arg(long, default_value_t = 0)]
    index: u32,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

fn config_error(e: Error) -> (u8, String) {
    let code = match &e {
        Error::InvalidArgument(_) | Error::Mismatch(_) => 2,
        Error::Invariant(_) => 1,
        _ => 3,
    };
    (code, e.to_string())
}

fn build_config(c: &Common, snr_f: f64, snr_fb: Option<f64>) -> Result<ChannelConfig, Error> {
    if !snr_f.is_finite() || snr_fb.is_some_and(|v| !v.is_finite()) {
        return Err(Error::invalid("SNR values must be finite"));
    }
    let s2 = snr_db_to_variance(snr_f, c.power);
    let feedback = match snr_fb {
        None => Feedback::Noiseless,
        Some(db) => {
            let v = snr_db_to_variance(db, c.power);
            Feedback::Noisy { sigma2: [v, v] }
        }
    };
    ChannelConfig::new(c.power, [s2, s2], feedback, c.n, [c.k1, c.k2])
}

fn experiment(c: &Common, config: ChannelConfig) -> Experiment {
    let scheme = Scheme::from(c.scheme);
    Experiment {
        scheme,
        config,
        g: c.g,
        weights: c.weights.clone(),
        trials: c.trials,
        seed: c.seed,
        workers: c.workers,
        min_errors: c.min_errors,
    }
}

fn finish(c: &Common, mut reports: Vec<BlerReport>) -> Result<(), Error> {
    if c.no_timing {
        for r in &mut reports {
            r.wall_time_s = None;
        }
    }
    emit(&reports, &c.out, c.format.into())?;
    for r in &reports {
        let fb = r.snr_fb_db.map_or("inf".to_string(), |v| v.to_string());
        println!(
            "{} K=({},{}) N={} snr_f={} snr_fb={}: bler {:.6} {:.6} joint {:.6} ({} trials)",
            r.scheme,
            r.k[0],
            r.k[1],
            r.n,
            r.snr_f_db,
            fb,
            r.bler(0),
            r.bler(1),
            r.joint_bler(),
            r.trials
        );
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let fb = if args.noiseless_fb { None } else { args.snr_fb };
    let exp = experiment(&args.common, build_config(&args.common, args.snr_f, fb)?);
    let report = estimate_bler(&exp)?;
    finish(&args.common, vec![report])
}

fn run_sweep(args: &SweepArgs) -> Result<(), Error> {
    let first = args.snr_f_grid.first().copied().unwrap_or(0.0);
    let exp = experiment(&args.common, build_config(&args.common, first, None)?);
    let fb_grid = if args.noiseless_fb {
        None
    } else {
        args.snr_fb_grid.as_deref()
    };
    let reports = sweep(&exp, &args.snr_f_grid, fb_grid)?;
    finish(&args.common, reports)
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = match parts.as_slice() {
        [a, b, c] => [a, b, c]
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::invalid(format!("grid `{text}` is not lo:hi:step")))?,
        _ => return Err(Error::invalid(format!("grid `{text}` is not lo:hi:step"))),
    };
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::invalid(format!(
            "grid `{text}` needs lo <= hi and step > 0"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::invalid(format!("grid `{text}` has too many points")));
    }
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

fn write_table(table: &InterpretTable, path: &Path, format: FormatArg) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        FormatArg::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let res = (|| -> csv::Result<()> {
                w.write_record([table.swept.as_str(), "x"])?;
                for r in &table.rows {
                    w.write_record([r.feedback.to_string(), r.x.to_string()])?;
                }
                w.flush()?;
                Ok(())
            })();
            res.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                source: e,
            })?;
        }
        FormatArg::Json => {
            serde_json::to_writer_pretty(&mut out, table).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn interpret(args: &InterpretArgs) -> Result<(), Error> {
    let grid = parse_grid(&args.grid)?;
    let weights = load_weights(&args.weights)?.cast::<f64>();
    let fixed = usize::from(args.fix_user) - 1;
    let table = interpret_sweep(&weights, fixed, args.round, args.index, &grid)?;
    write_table(&table, &args.out, args.format)?;
    match &table.fit {
        Some(f) if !f.is_degenerate() => println!(
            "{} -> x{}: slope {:.6} intercept {:.6} r2 {:.6}",
            table.swept,
            table.round,
            f.slope,
            f.intercept,
            f.r2.unwrap_or(f64::NAN)
        ),
        _ => println!("{} -> x{}: degenerate fit", table.swept, table.round),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Interpret(a) => interpret(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, msg) = config_error(e);
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
