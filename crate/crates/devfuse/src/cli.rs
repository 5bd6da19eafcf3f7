//! Command-line interface: one binary, deterministic scriptable output.
//!
//! Exit codes: 0 success, 1 validation error, 2 runtime failure. The
//! resolved configuration (including the effective seed) is echoed to
//! stderr on every run; data goes to stdout and to the output files, which
//! are written atomically. `DEVFUSE_SEED` overrides `--seed`.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use devfuse_core::pooling::{md_pool_forward, PoolParams};
use devfuse_core::{
    d_mean_bisect, d_mean_epsilon_closed, fuse, two_point_epsilon, DeviationSpec, SolverConfig,
    WeightSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::{bench_windows, speedups, DEFAULT_WINDOW_COUNT};
use crate::decide::run_decide;
use crate::error::{Error, Result};
use crate::experiment::{
    epsilon_sweep, method_means, run_reduction_experiment, ExperimentOptions, Method,
};
use crate::gradcheck::{pool_grad_check, GRAD_TOLERANCE};

pub const SEED_ENV_VAR: &str = "DEVFUSE_SEED";
const DEFAULT_METHODS: &str = "md,mean,median,gaussian,geomean,k0.25,k0.5,k0.75,cowa,penalty";

#[derive(Parser, Debug)]
#[command(
    name = "devfuse",
    version,
    about = "Deviation-based fusion of multi-channel matrices: image reduction, pooling, decision making"
)]
pub struct Cli {
    /// RNG seed for benchmarks, gradient checks and the selftest
    /// (the DEVFUSE_SEED environment variable takes precedence)
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads for batch image processing (1 keeps timings quiet)
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reduce every image in a directory with each method and score the
    /// reconstruction with SSIM and MSE
    Fuse {
        /// Directory of PNG/PPM images
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated methods (md, mean, median, gaussian, geomean,
        /// k<alpha>, cowa, penalty, min, max)
        #[arg(long, default_value = DEFAULT_METHODS)]
        methods: String,
        /// Block size
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Comma-separated epsilons for the md method
        #[arg(long, default_value = "1,2,4,8,16,32")]
        eps: String,
        /// Report CSV (image,method,r,eps,ssim,mse,time_ns)
        #[arg(long)]
        out: PathBuf,
    },

    /// Count, per epsilon, the images where the deviation-based reduction
    /// strictly beats every competitor on SSIM
    SweepEps {
        /// Directory of PNG/PPM images
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated epsilons to sweep
        #[arg(long, default_value = "1,2,4,8,16,32")]
        eps: String,
        /// Block size
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Competitor methods (any md entry is ignored)
        #[arg(long, default_value = DEFAULT_METHODS)]
        methods: String,
        /// Output CSV (eps,best_count)
        #[arg(long)]
        out: PathBuf,
    },

    /// Time the closed-form reduction against the penalty selector on
    /// seeded random windows
    Bench {
        /// Comma-separated window sizes
        #[arg(long, default_value = "2,4,8")]
        r: String,
        /// Windows per size
        #[arg(long, default_value_t = DEFAULT_WINDOW_COUNT)]
        windows: usize,
        /// Output CSV (r,method,windows,total_time_ns)
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Verify analytic pooling gradients against central finite differences
    PoolGradCheck {
        /// Number of randomized trials
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Comma-separated window sizes
        #[arg(long, default_value = "2")]
        r: String,
        /// Comma-separated epsilons
        #[arg(long, default_value = "1,2,32")]
        eps: String,
    },

    /// Fuse expert preference matrices and rank the alternatives
    Decide {
        /// Preference JSON ({"alternatives": p, "experts": [...]})
        #[arg(long)]
        input: PathBuf,
        /// Expert weight JSON (bare array); unit weights when omitted
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Epsilon of the deviation family
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Ranking JSON output; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run the built-in consistency suites (oracle equivalence,
    /// idempotency, pooling/fusion agreement, gradients)
    Selftest,
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad {what} entry: {t}")))
        })
        .collect()
}

fn parse_eps_list(s: &str) -> Result<Vec<f64>> {
    let eps = parse_f64_list(s, "eps")?;
    if let Some(bad) = eps.iter().find(|e| !e.is_finite() || **e < 1.0) {
        return Err(Error::invalid(format!("eps must be >= 1, got {bad}")));
    }
    Ok(eps)
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad {what} entry: {t}")))
        })
        .collect()
}

/// Applies the environment seed override and runs the chosen subcommand.
pub fn dispatch(mut cli: Cli) -> Result<()> {
    if let Ok(value) = std::env::var(SEED_ENV_VAR) {
        cli.seed = value
            .parse()
            .map_err(|_| Error::invalid(format!("{SEED_ENV_VAR} is not a u64: {value}")))?;
    }
    eprintln!("config: {cli:?}");
    let seed = cli.seed;
    let threads = cli.threads;
    match cli.command {
        Command::Fuse {
            input,
            methods,
            r,
            eps,
            out,
        } => {
            let opts = ExperimentOptions {
                methods: Method::parse_list(&methods)?,
                r,
                eps_list: parse_eps_list(&eps)?,
                threads,
                ..Default::default()
            };
            let reports = run_reduction_experiment(&input, &opts, Some(&out))?;
            for (key, ssim, mse) in method_means(&reports) {
                println!("{key}: mean ssim {ssim:.6}, mean mse {mse:.6}");
            }
            println!("wrote {} rows to {}", reports.len(), out.display());
            Ok(())
        }
        Command::SweepEps {
            input,
            eps,
            r,
            methods,
            out,
        } => {
            let competitors = Method::parse_list(&methods)?;
            let eps_list = parse_eps_list(&eps)?;
            let counts = epsilon_sweep(
                &input,
                &competitors,
                &eps_list,
                r,
                threads,
                &Default::default(),
                Some(&out),
            )?;
            for (eps, count) in &counts {
                println!("eps {eps}: best on {count} images");
            }
            println!("wrote {} rows to {}", counts.len(), out.display());
            Ok(())
        }
        Command::Bench { r, windows, out } => {
            let r_list = parse_usize_list(&r, "r")?;
            if let Some(bad) = r_list.iter().find(|r| **r < 2) {
                return Err(Error::invalid(format!("r must be >= 2, got {bad}")));
            }
            let reports = bench_windows(&r_list, windows, seed, out.as_deref())?;
            for rep in &reports {
                println!(
                    "r={} {}: {} windows in {} ns",
                    rep.r, rep.method, rep.windows_processed, rep.total_time_ns
                );
            }
            for (r, ratio) in speedups(&reports) {
                println!("r={r}: closed form is {ratio:.1}x faster than penalty");
            }
            Ok(())
        }
        Command::PoolGradCheck { trials, r, eps } => {
            let r_list = parse_usize_list(&r, "r")?;
            let eps_list = parse_eps_list(&eps)?;
            let report = pool_grad_check(trials, &r_list, &eps_list, seed)?;
            println!(
                "max relative error over {} trials: {:.3e}",
                report.trials, report.max_rel_err
            );
            if report.passed() {
                println!("PASS (tolerance {GRAD_TOLERANCE:.0e})");
                Ok(())
            } else {
                Err(Error::failed(format!(
                    "gradient check failed: {:.3e} >= {GRAD_TOLERANCE:.0e}",
                    report.max_rel_err
                )))
            }
        }
        Command::Decide {
            input,
            weights,
            eps,
            out,
        } => {
            if !eps.is_finite() || eps < 1.0 {
                return Err(Error::invalid(format!("eps must be >= 1, got {eps}")));
            }
            let output = run_decide(&input, weights.as_deref(), eps, out.as_deref())?;
            match &out {
                Some(path) => {
                    println!("ranking: {:?}", output.ranking);
                    println!("wrote {}", path.display());
                }
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&output).expect("serializable output")
                ),
            }
            Ok(())
        }
        Command::Selftest => run_selftest(seed),
    }
}

/// Quick end-to-end consistency suites; any failure is a runtime error.
fn run_selftest(seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SolverConfig::default();

    // closed form against the equation-solving route
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let len = rng.random_range(2..=16);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..=1.0)).collect();
        let weights: Vec<f64> = (0..len).map(|_| rng.random_range(0.1..=2.0)).collect();
        let eps = [1.0, 2.0, 4.0, 32.0][rng.random_range(0..4)];
        let spec = DeviationSpec::epsilon(eps)?;
        let closed = d_mean_epsilon_closed(&values, &weights, eps)?;
        let bisected = d_mean_bisect(&spec, &values, &weights, &cfg)?;
        worst = worst.max((closed - bisected).abs());
    }
    if worst >= 1e-7 {
        return Err(Error::failed(format!(
            "oracle equivalence: max |closed - bisect| = {worst:.3e}"
        )));
    }
    println!("PASS oracle equivalence (2000 cases, max diff {worst:.3e})");

    // idempotency and internality
    for _ in 0..500 {
        let len = rng.random_range(1..=9);
        let c = rng.random_range(0.0..=1.0);
        let constant = vec![c; len];
        let unit = vec![1.0; len];
        let eps = rng.random_range(1.0..=64.0);
        if d_mean_epsilon_closed(&constant, &unit, eps)? != c {
            return Err(Error::failed("idempotency (closed form)".to_string()));
        }
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..=1.0)).collect();
        let y = d_mean_epsilon_closed(&values, &unit, eps)?;
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if y < lo || y > hi {
            return Err(Error::failed("internality (closed form)".to_string()));
        }
    }
    println!("PASS idempotency and internality (500 cases each)");

    // exact two-point value
    if two_point_epsilon(0.0, 1.0, 1.0)? != 2.0 / 3.0 {
        return Err(Error::failed("two-point closed form".to_string()));
    }
    println!("PASS two-point closed form (2/3 exact)");

    // pooling agrees bitwise with block fusion at unit weights
    for _ in 0..20 {
        let data: Vec<f64> = (0..8 * 8 * 3)
            .map(|_| rng.random_range(0.0..=1.0))
            .collect();
        let t = devfuse_core::MultiMatrix::new(8, 8, 3, data)?;
        let eps = [1.0, 2.0, 32.0][rng.random_range(0..3)];
        let pooled = md_pool_forward(&t, &PoolParams::md(2, eps, 3)?)?;
        let fused = fuse(
            &t,
            2,
            &DeviationSpec::epsilon(eps)?,
            &WeightSpec::unit(3),
            &cfg,
        )?;
        if pooled.data() != fused.data() {
            return Err(Error::failed("pooling/fusion consistency".to_string()));
        }
    }
    println!("PASS pooling/fusion bitwise consistency (20 tensors)");

    // pooling gradients
    let report = pool_grad_check(50, &[2, 3], &[1.0, 2.0, 32.0], seed)?;
    if !report.passed() {
        return Err(Error::failed(format!(
            "gradient spot check: {:.3e}",
            report.max_rel_err
        )));
    }
    println!(
        "PASS gradient spot check (50 trials, max rel err {:.3e})",
        report.max_rel_err
    );

    println!("selftest: all suites passed");
    Ok(())
}
