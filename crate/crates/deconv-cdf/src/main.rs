use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use deconv_cdf::config::{Config, NoiseSpec, RuleName};
use deconv_cdf::io;
use deconv_cdf::rate::{rate_experiment, RateSetup};
use deconv_cdf::scenario::{problems_on_grid, run_config, Scenario};
use deconv_cdf::HarnessError;
use deconv_cdf_core::affine::{build_affine_estimator, solve_problem, NestedAffine};
use deconv_cdf_core::discretize::{bin_observations, lipschitz_class, ConvexClass, DiscreteProblem};
use deconv_cdf_core::fourier::{estimate_cdf_with, InversionKernel, SampleSet};
use deconv_cdf_core::lepski::run_lepski_with;
use deconv_cdf_core::noise::{default_omega_grid, log_grid, verify_assumptions};
use deconv_cdf_core::rates::{classify_zone, lambda_of, lower_bound_rate, rate_psi, irregular_zone_rate};

/// Distribution-function estimation from noisy observations.
#[derive(Debug, Parser)]
#[command(name = "deconv-cdf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline JSON noise specification, e.g. '{"kind":"laplace","loc":0,"scale":0.5}'.
    #[arg(long)]
    noise: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fourier-inversion estimate at fixed cut-off.
    EstimateCdf {
        #[command(flatten)]
        common: Common,
        /// Observations, one per line.
        #[arg(long)]
        data: PathBuf,
        /// Frequency cut-off.
        #[arg(long)]
        lambda: f64,
        /// Evaluation points, comma separated.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t0: Vec<f64>,
    },
    /// Adaptive cut-off selection; writes one row per candidate.
    Lepski {
        #[command(flatten)]
        common: Common,
        /// Observations, one per line.
        #[arg(long)]
        data: PathBuf,
        /// Evaluation point.
        #[arg(long, allow_hyphen_values = true)]
        t0: f64,
        /// Miss probability of the intervals; the configured value when absent.
        #[arg(long)]
        epsilon: Option<f64>,
        /// `theorem` or `empirical`.
        #[arg(long)]
        rule: Option<String>,
    },
    /// Minimax affine estimator for one class.
    Affine {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Lipschitz constant of the class; the whole simplex when absent.
        #[arg(long)]
        lipschitz: Option<f64>,
    },
    /// Nested adaptation over the configured Lipschitz classes.
    AffineAdapt {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        problem: ProblemArgs,
        /// Lipschitz constants, comma separated; the configured grid when absent.
        #[arg(long, value_delimiter = ',')]
        lipschitz: Vec<f64>,
    },
    /// Rate zone, bandwidth order and risk order for each sample size, or a
    /// Monte Carlo slope fit with `--experiment`.
    Rates {
        #[command(flatten)]
        common: Common,
        /// Smoothness of the target distribution.
        #[arg(long)]
        alpha: f64,
        /// Decay exponent of the noise characteristic function.
        #[arg(long)]
        beta: f64,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Risk level of the lower-bound column.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Run the Monte Carlo experiment with the configured noise and target.
        #[arg(long)]
        experiment: bool,
        /// Replications per sample size in the experiment.
        #[arg(long, default_value_t = 500)]
        reps: usize,
        /// Evaluation point of the experiment.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        /// Constant multiplying the cut-off order in the experiment.
        #[arg(long, default_value_t = 1.0)]
        lambda_scale: f64,
        /// Master seed of the experiment.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Monte Carlo risk of the configured estimators.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Summary statistics file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Checks the decay and origin constants against the characteristic function.
    VerifyNoise {
        #[command(flatten)]
        common: Common,
        /// Log-spaced frequency grid `lo:hi:count`.
        #[arg(long)]
        omega: Option<String>,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Problem bundle directory; built from the configuration when absent.
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Evaluation point when building from the configuration.
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    /// Observations to estimate from.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Writes the problem bundle here.
    #[arg(long)]
    write_bundle: Option<PathBuf>,
    /// Writes the estimator weights here.
    #[arg(long)]
    weights: Option<PathBuf>,
}

fn load_config(common: &Common) -> anyhow::Result<Config> {
    let inline = common
        .noise
        .as_deref()
        .map(|s| serde_json::from_str::<NoiseSpec>(s).map_err(HarnessError::from))
        .transpose()
        .context("parsing --noise")?;
    let mut cfg = match (&common.config, &inline) {
        (Some(path), _) => {
            Config::from_path(path).with_context(|| format!("reading configuration {}", path.display()))?
        }
        (None, Some(noise)) => Config::with_noise(noise.clone()),
        (None, None) => bail!("either --config or --noise is required"),
    };
    if let Some(noise) = inline {
        cfg.noise = noise;
    }
    Ok(cfg)
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn read_sample(path: &Path) -> anyhow::Result<SampleSet> {
    let y = io::read_observations_file(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SampleSet::new(y))
}

fn problem(cfg: &Config, args: &ProblemArgs) -> anyhow::Result<DiscreteProblem> {
    let p = match &args.bundle {
        Some(dir) => io::read_bundle(dir).with_context(|| format!("reading bundle {}", dir.display()))?,
        None => {
            let t0 = args.t0.ok_or_else(|| anyhow!("--t0 is required without --bundle"))?;
            let mut scenario = Scenario::from_config(cfg)?;
            scenario.t0_grid = vec![t0];
            problems_on_grid(&scenario, &cfg.affine)?.remove(0)
        }
    };
    if let Some(dir) = &args.write_bundle {
        io::write_bundle(dir, &p)?;
    }
    Ok(p)
}

fn empirical(p: &DiscreteProblem, cfg: &Config, data: Option<&Path>) -> anyhow::Result<Option<Vec<f64>>> {
    data.map(|path| {
        let sample = read_sample(path)?;
        Ok(bin_observations(&sample.y, &p.bins_j, cfg.affine.out_of_range.into())?.p)
    })
    .transpose()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::EstimateCdf {
            common,
            data,
            lambda,
            t0,
        } => {
            let cfg = load_config(&common)?;
            let noise = cfg.noise.build()?;
            let kernel = InversionKernel::for_noise(&noise, cfg.quadrature.build()?);
            let sample = read_sample(&data)?;
            let mut w = csv::Writer::from_writer(output(common.out.as_deref())?);
            w.write_record(["t0", "lambda", "n", "value_raw", "value_clipped"])?;
            for t in t0 {
                let r = estimate_cdf_with(&sample, &kernel, lambda, t, false)?;
                w.write_record([
                    t.to_string(),
                    lambda.to_string(),
                    sample.n().to_string(),
                    r.value_raw.to_string(),
                    r.value_clipped.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Command::Lepski {
            common,
            data,
            t0,
            epsilon,
            rule,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(e) = epsilon {
                cfg.lepski.epsilon = e;
            }
            if let Some(r) = rule {
                cfg.lepski.rule = serde_json::from_value::<RuleName>(serde_json::Value::String(r))
                    .map_err(HarnessError::from)
                    .context("--rule must be theorem or empirical")?;
            }
            let noise = cfg.noise.build()?;
            let sample = read_sample(&data)?;
            let lcfg = cfg.lepski.build(&noise, sample.n())?;
            let kernel = InversionKernel::for_noise(&noise, cfg.quadrature.build()?);
            let trace = run_lepski_with(&sample, &kernel, &lcfg, t0)?;
            io::write_lepski_trace(output(common.out.as_deref())?, &trace)?;
        }
        Command::Affine {
            common,
            problem: args,
            lipschitz,
        } => {
            let cfg = load_config(&common)?;
            let p = problem(&cfg, &args)?;
            let (class, label) = match lipschitz {
                Some(l) => (lipschitz_class(p.big_m(), l)?, format!("lipschitz_{l}")),
                None => (ConvexClass::simplex(p.big_m())?, "simplex".to_string()),
            };
            let report = solve_problem(&p, &class, &cfg.solver.build())?;
            let est = build_affine_estimator(&report, &p.a, &p.g, p.n, p.epsilon)?;
            let estimate = empirical(&p, &cfg, args.data.as_deref())?
                .map(|q| est.estimate(&q))
                .transpose()?;
            let labels = [label];
            let reports = [report];
            let ests = [est];
            io::write_affine_reports(
                output(common.out.as_deref())?,
                &labels,
                &reports,
                &ests,
                estimate.as_ref().map(std::slice::from_ref),
                None,
            )?;
            if let Some(path) = &args.weights {
                io::write_affine_weights(File::create(path)?, &labels, &reports, &ests)?;
            }
        }
        Command::AffineAdapt {
            common,
            problem: args,
            lipschitz,
        } => {
            let cfg = load_config(&common)?;
            let p = problem(&cfg, &args)?;
            let ls = if lipschitz.is_empty() {
                cfg.affine.lipschitz.values()?
            } else {
                lipschitz
            };
            let classes = ls
                .iter()
                .map(|&l| lipschitz_class(p.big_m(), l))
                .collect::<deconv_cdf_core::Result<Vec<_>>>()?;
            let nested = NestedAffine::build(&p, &classes, &cfg.solver.build())?;
            let labels: Vec<String> = ls.iter().map(|l| format!("lipschitz_{l}")).collect();
            let (estimates, selected) = match empirical(&p, &cfg, args.data.as_deref())? {
                Some(q) => {
                    let values = nested
                        .estimators
                        .iter()
                        .map(|e| e.estimate(&q))
                        .collect::<deconv_cdf_core::Result<Vec<_>>>()?;
                    let choice = nested.estimate(&q)?;
                    (Some(values), Some(choice.k_hat))
                }
                None => (None, None),
            };
            io::write_affine_reports(
                output(common.out.as_deref())?,
                &labels,
                &nested.reports,
                &nested.estimators,
                estimates.as_deref(),
                selected,
            )?;
            if let Some(path) = &args.weights {
                io::write_affine_weights(File::create(path)?, &labels, &nested.reports, &nested.estimators)?;
            }
        }
        Command::Rates {
            common,
            alpha,
            beta,
            n,
            epsilon,
            experiment,
            reps,
            t0,
            lambda_scale,
            seed,
        } => {
            if experiment {
                let cfg = load_config(&common)?;
                let scenario = Scenario::from_config(&cfg)?;
                let report = rate_experiment(&RateSetup {
                    target: scenario.target.law(),
                    noise: scenario.noise,
                    alpha,
                    beta,
                    lambda_scale,
                    n_list: n,
                    reps,
                    seed,
                    t0,
                    quadrature: cfg.quadrature.build()?,
                })?;
                io::write_rate_report(output(common.out.as_deref())?, &report)?;
                return Ok(());
            }
            let zone = classify_zone(alpha, beta)?;
            let mut w = csv::Writer::from_writer(output(common.out.as_deref())?);
            w.write_record(["n", "zone", "log_factor", "lambda", "rate", "lower_bound"])?;
            for size in n {
                let z = size as f64;
                let (lambda, rate) = if zone.is_regular() {
                    (lambda_of(z, alpha, beta)?, rate_psi(z, alpha, beta)?)
                } else {
                    let r = irregular_zone_rate(z, alpha, beta)?;
                    (r.lambda, r.phi)
                };
                let lower = lower_bound_rate(z, epsilon, alpha, beta)
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                w.write_record([
                    size.to_string(),
                    format!("{:?}", zone.kind),
                    zone.log_factor.to_string(),
                    lambda.to_string(),
                    rate.to_string(),
                    lower,
                ])?;
            }
            w.flush()?;
        }
        Command::Simulate { common, summary } => {
            let cfg = load_config(&common)?;
            let table = run_config(&cfg)?;
            io::write_risk_rows(output(common.out.as_deref())?, &table.rows)?;
            if let Some(path) = summary {
                io::write_risk_summary(File::create(&path)?, &table)?;
            }
        }
        Command::VerifyNoise { common, omega } => {
            let cfg = load_config(&common)?;
            let model = cfg.noise.build()?;
            let grid = match omega {
                None => default_omega_grid(),
                Some(spec) => {
                    let parts: Vec<&str> = spec.split(':').collect();
                    let bad = || anyhow!("--omega must be lo:hi:count");
                    if parts.len() != 3 {
                        return Err(bad());
                    }
                    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
                    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
                    let count: usize = parts[2].parse().map_err(|_| bad())?;
                    if !(lo > 0.0 && hi >= lo && count > 0) {
                        return Err(bad());
                    }
                    log_grid(lo, hi, count)
                }
            };
            let r = verify_assumptions(&model, &grid)?;
            let mut w = csv::Writer::from_writer(output(common.out.as_deref())?);
            w.write_record([
                "e1_pass",
                "e2_pass",
                "worst_ratio_low",
                "worst_ratio_high",
                "e2_worst_ratio",
                "grid_points",
            ])?;
            w.write_record([
                r.e1_pass.to_string(),
                r.e2_pass.to_string(),
                r.worst_ratio_low.to_string(),
                r.worst_ratio_high.to_string(),
                r.e2_worst_ratio.to_string(),
                r.grid.len().to_string(),
            ])?;
            w.flush()?;
        }
    }
    Ok(())
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_line("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<HarnessError>().map(HarnessError::kind))
                .or_else(|| {
                    e.chain()
                        .find_map(|c| c.downcast_ref::<deconv_cdf_core::Error>().map(|_| "numerical"))
                })
                .unwrap_or("runtime");
            eprintln!("{}", error_line(kind, &format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
