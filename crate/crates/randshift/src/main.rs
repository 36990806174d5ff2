use clap::{Parser, Subcommand};
use randshift::averages::{
    clt_experiment, norlund_l2_experiment, NorlundWeights, TrigPoly,
};
use randshift::config::{run_config, ExperimentConfig};
use randshift::ergodic::{parse_alpha, split_partition, ErgodicSystem};
use randshift::recipes::reproduce;
use randshift::report::OutputFormat;
use randshift::rokhlin::{build_bad_set, harmonic_sum_experiment};
use randshift::spaces::{single_shift_verdict, SpaceKind};
use randshift::weights::WeightSequence;
use randshift::Result;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulate random products of weighted backward shifts driven by ergodic
/// systems and reproduce the associated growth/averaging experiments.
#[derive(Parser)]
#[command(name = "randshift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout summary only.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Run a named reproduction recipe and print PASS/FAIL lines.
    Reproduce {
        /// One of the pinned recipes; pass an unknown name to list them.
        recipe: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Emit the underlying report (recipes that produce one) as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a single weighted shift on a space.
    SingleShift {
        #[arg(long)]
        space: String,
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
    },
    /// Empirical L2 errors of weighted averages of the cell-1 indicator.
    Norlund {
        #[arg(long, default_value = "bernoulli:0.5,0.5")]
        system: String,
        /// Split point of the two-cell partition for interval drivers.
        #[arg(long)]
        split: Option<String>,
        #[arg(long, default_value = "harmonic")]
        kind: String,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Largest acceptable error at the final grid point.
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Sup over grid starts of |M_n - integral| for a rotation.
    Oxtoby {
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, default_value = "harmonic")]
        kind: String,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 512)]
        starts: usize,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
    },
    /// Kolmogorov-Smirnov distance of standardized centered sums to the
    /// standard normal.
    Clt {
        #[arg(long, default_value = "doubling")]
        system: String,
        #[arg(long, default_value = "0.5")]
        split: String,
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0.08)]
        threshold: f64,
    },
    /// Bad-set construction and harmonic-average probe.
    Rokhlin {
        #[arg(long, value_delimiter = ',', default_value = "512,4096,32768")]
        heights: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 32768)]
        horizon: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Returns Ok(true) on PASS, Ok(false) on FAIL.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, seed, out, format } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            let report = run_config(&cfg)?;
            for (label, count) in &report.verdict_histogram {
                println!("{label}: {count}/{}", report.samples.len());
            }
            if let Some(path) = out {
                let format: OutputFormat = format.parse()?;
                report.emit(format, &path)?;
                println!("report written to {}", path.display());
            }
            Ok(true)
        }
        Command::Reproduce { recipe, seed, out } => {
            let outcome = reproduce(&recipe, seed)?;
            print!("{}", outcome.render());
            if let Some(path) = out {
                if let Some(report) = &outcome.report {
                    report.emit(OutputFormat::Json, &path)?;
                    println!("report written to {}", path.display());
                } else {
                    eprintln!("note: this recipe does not produce a sample report");
                }
            }
            Ok(outcome.passed())
        }
        Command::SingleShift { space, weights, horizon } => {
            let space = SpaceKind::parse(&space)?;
            let w = WeightSequence::parse(&weights)?;
            let verdict = single_shift_verdict(space, &w, horizon)?;
            println!(
                "{} (running max {:.4}, tail min {:.4}, slope {:.4})",
                verdict.label, verdict.running_max, verdict.tail_min, verdict.trend_slope
            );
            Ok(true)
        }
        Command::Norlund { system, split, kind, grid, samples, seed, threshold } => {
            let system = ErgodicSystem::parse(&system)?;
            let partition = match (&split, system.implicit_partition()) {
                (Some(t), None) => split_partition(t)?,
                (None, Some(p)) => p,
                (None, None) => split_partition("0.5")?,
                (Some(_), Some(_)) => {
                    return Err(randshift::Error::invalid(
                        "this driver carries its own partition; drop --split",
                    ))
                }
            };
            let p = NorlundWeights::parse(&kind)?;
            let errs = norlund_l2_experiment(&system, &partition, &p, &grid, samples, seed)?;
            for (n, e) in &errs {
                println!("n = {n}: L2 error {e:.5}");
            }
            Ok(errs.last().unwrap().1 <= threshold)
        }
        Command::Oxtoby { alpha, kind, n, starts, threshold } => {
            let sys = ErgodicSystem::rotation(parse_alpha(&alpha)?)?;
            let p = NorlundWeights::parse(&kind)?;
            let dev = oxtoby_dev(&sys, &p, n, starts)?;
            println!("sup deviation over {starts} starts at n = {n}: {dev:.5}");
            Ok(dev <= threshold)
        }
        Command::Clt { system, split, grid, samples, seed, threshold } => {
            let system = ErgodicSystem::parse(&system)?;
            let partition = match system.implicit_partition() {
                Some(p) => p,
                None => split_partition(&split)?,
            };
            let pts = clt_experiment(&system, &partition, &grid, samples, seed)?;
            for p in &pts {
                println!(
                    "n = {}: KS {:.4}{}",
                    p.n,
                    p.ks_distance,
                    if p.degenerate { " (degenerate)" } else { "" }
                );
            }
            Ok(pts.last().unwrap().ks_distance <= threshold)
        }
        Command::Rokhlin { heights, samples, horizon, seed } => {
            let bad = build_bad_set(&heights)?;
            let out = harmonic_sum_experiment(&bad, samples, horizon, seed)?;
            let theta = randshift::spaces::ClassifyPolicy::default().theta_up;
            let h_hits = out.samples.iter().filter(|s| s.h_max >= 0.6).count();
            let v_hits = out.samples.iter().filter(|s| s.v_max >= theta).count();
            println!(
                "measure(B) = {:.4}, 95% CI ({:.4}, {:.4})",
                out.measure_estimate, out.measure_ci.0, out.measure_ci.1
            );
            println!("harmonic max >= 0.6: {h_hits}/{samples}");
            println!("cocycle running max >= {theta}: {v_hits}/{samples}");
            Ok(out.measure_ci.1 < 1.0 / 3.0
                && h_hits * 10 >= samples * 7
                && v_hits * 10 >= samples * 6)
        }
    }
}

fn oxtoby_dev(
    sys: &ErgodicSystem,
    p: &NorlundWeights,
    n: usize,
    starts: usize,
) -> Result<f64> {
    randshift::averages::oxtoby_sup_experiment(sys, &TrigPoly::cos_wave(), p, n, starts)
}
