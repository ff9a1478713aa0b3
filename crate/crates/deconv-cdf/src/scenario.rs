//! Monte Carlo risk evaluation of several estimators on one scenario.

use deconv_cdf_core::affine::{build_affine_estimator, solve_problem, AffineEstimator, NestedAffine, SolveOptions};
use deconv_cdf_core::discretize::{bin_observations, build_g, lipschitz_class, BinGrid, DiscreteProblem, OutOfRange};
use deconv_cdf_core::fourier::{estimate_cdf_with, InversionKernel, SampleSet};
use deconv_cdf_core::lepski::{replicate_sample, run_lepski_with, LepskiConfig};
use deconv_cdf_core::noise::{Distribution, NoiseModel};
use deconv_cdf_core::quadrature::QuadratureConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AffineSpec, Config, EstimatorKind, EstimatorSpec, TargetSpec};
use crate::error::{HarnessError, Result};

/// Law of the unobserved signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    GammaMixture,
    LaplaceMixture,
    NormalMixture,
    Custom(Distribution),
}

impl Target {
    pub fn from_spec(spec: &TargetSpec) -> Result<Self> {
        Ok(match spec {
            TargetSpec::GammaMixture => Target::GammaMixture,
            TargetSpec::LaplaceMixture => Target::LaplaceMixture,
            TargetSpec::NormalMixture => Target::NormalMixture,
            TargetSpec::Custom { law } => Target::Custom(law.build()?),
        })
    }

    pub fn law(&self) -> Distribution {
        let mix = |parts: Vec<(f64, Distribution)>| Distribution::mixture(parts).expect("weights are valid");
        match self {
            Target::GammaMixture => mix(vec![
                (0.3, Distribution::Gamma { loc: 0.0, shape: 0.5, scale: 2.0 }),
                (0.7, Distribution::Gamma { loc: 5.0, shape: 0.5, scale: 2.0 }),
            ]),
            Target::LaplaceMixture => mix(vec![
                (0.3, Distribution::Laplace { loc: -1.5, scale: 0.5 }),
                (0.7, Distribution::Laplace { loc: 1.7, scale: 0.25 }),
            ]),
            Target::NormalMixture => mix(vec![
                (0.6, Distribution::Gaussian { mean: 0.15827, variance: 1.0 }),
                (0.4, Distribution::Gaussian { mean: 1.0, variance: 0.0150 }),
            ]),
            Target::Custom(d) => d.clone(),
        }
    }
}

/// `points` values spread uniformly over the central 99% of `law`.
pub fn central_grid(law: &Distribution, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(HarnessError::Config("the evaluation grid needs at least one point".into()));
    }
    let (lo, hi) = (law.quantile(0.005), law.quantile(0.995));
    if points == 1 {
        return Ok(vec![law.quantile(0.5)]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|k| lo + step * k as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub noise: NoiseModel,
    pub target: Target,
    pub n: usize,
    pub reps: usize,
    pub t0_grid: Vec<f64>,
    pub master_seed: u64,
}

impl Scenario {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let target = Target::from_spec(&cfg.target)?;
        let t0_grid = match &cfg.scenario.t0_values {
            Some(v) => v.clone(),
            None => central_grid(&target.law(), cfg.scenario.t0_points)?,
        };
        let s = Scenario {
            noise: cfg.noise.build()?,
            target,
            n: cfg.scenario.n,
            reps: cfg.scenario.reps,
            t0_grid,
            master_seed: cfg.scenario.master_seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(HarnessError::Config("reps must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(HarnessError::Config("n must be at least 1".into()));
        }
        if self.t0_grid.is_empty() || self.t0_grid.iter().any(|t| !t.is_finite()) {
            return Err(HarnessError::Config("t0_grid must be a nonempty list of finite values".into()));
        }
        Ok(())
    }

    /// Observations of replication `rep`.
    pub fn sample(&self, rep: usize) -> SampleSet {
        replicate_sample(&self.target.law(), &self.noise, self.n, self.master_seed, rep as u64)
    }
}

/// An estimator evaluated on one sample at every grid point.
pub trait ScenarioEstimator: Sync {
    fn id(&self) -> String;

    /// One entry per grid point; `Err` marks a failed evaluation.
    fn estimate(&self, sample: &SampleSet, t0_grid: &[f64]) -> Vec<std::result::Result<f64, String>>;
}

/// Numerical settings shared by the configured estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub affine: AffineSpec,
    pub quadrature: QuadratureConfig,
    pub solver: SolveOptions,
}

impl RunSettings {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        Ok(RunSettings {
            affine: cfg.affine.clone(),
            quadrature: cfg.quadrature.build()?,
            solver: cfg.solver.build(),
        })
    }
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            affine: AffineSpec::default(),
            quadrature: QuadratureConfig::default(),
            solver: SolveOptions::default(),
        }
    }
}

/// Signal and observation bins for the affine estimators of a scenario.
pub fn affine_bins(spec: &AffineSpec, noise: &NoiseModel, target: &Distribution) -> Result<(BinGrid, BinGrid)> {
    let [lo, hi] = spec
        .signal_range
        .unwrap_or([target.quantile(0.0005), target.quantile(0.9995)]);
    let bins_i = BinGrid::uniform(lo, hi, spec.signal_bins)?;
    let bins_j = match spec.observation_range {
        Some([a, b]) => BinGrid::uniform(a, b, spec.observation_bins)?,
        None => DiscreteProblem::default_observation_bins(noise, &bins_i, spec.observation_bins)?,
    };
    Ok((bins_i, bins_j))
}

/// One discretized problem per grid point, sharing the channel matrix.
pub fn problems_on_grid(scenario: &Scenario, spec: &AffineSpec) -> Result<Vec<DiscreteProblem>> {
    let (bins_i, bins_j) = affine_bins(spec, &scenario.noise, &scenario.target.law())?;
    let first = DiscreteProblem::new(&scenario.noise, bins_j, bins_i, scenario.t0_grid[0], scenario.n, spec.epsilon)?;
    Ok(scenario
        .t0_grid
        .iter()
        .map(|&t0| DiscreteProblem {
            g: build_g(&first.bins_i, t0),
            t0,
            ..first.clone()
        })
        .collect())
}

/// A solver failure at one `t0` only fails the rows at that point.
type PerPoint<T> = std::result::Result<T, String>;

enum Prepared {
    Edf,
    Fixed { kernel: InversionKernel, lambda: f64 },
    Lepski { kernel: InversionKernel, cfg: LepskiConfig },
    Affine { bins_j: BinGrid, policy: OutOfRange, per_t0: Vec<PerPoint<AffineEstimator>> },
    Nested { bins_j: BinGrid, policy: OutOfRange, per_t0: Vec<PerPoint<NestedAffine>> },
    Failed(String),
}

/// A configured estimator with its sample-independent parts precomputed.
pub struct PreparedEstimator {
    id: String,
    inner: Prepared,
}

impl PreparedEstimator {
    /// Preparation errors are kept and reported on every row.
    pub fn prepare(spec: &EstimatorSpec, scenario: &Scenario, settings: &RunSettings) -> Self {
        let inner = Self::build(spec, scenario, settings).unwrap_or_else(|e| Prepared::Failed(e.to_string()));
        PreparedEstimator { id: spec.label(), inner }
    }

    pub fn preparation_error(&self) -> Option<&str> {
        match &self.inner {
            Prepared::Failed(msg) => Some(msg),
            _ => None,
        }
    }

    fn build(spec: &EstimatorSpec, scenario: &Scenario, settings: &RunSettings) -> Result<Prepared> {
        let kernel = || InversionKernel::for_noise(&scenario.noise, settings.quadrature);
        let policy: OutOfRange = settings.affine.out_of_range.into();
        Ok(match &spec.kind {
            EstimatorKind::Edf => Prepared::Edf,
            EstimatorKind::FixedLambda { lambda } => Prepared::Fixed {
                kernel: kernel(),
                lambda: *lambda,
            },
            EstimatorKind::Lepski(l) => Prepared::Lepski {
                kernel: kernel(),
                cfg: l.build(&scenario.noise, scenario.n)?,
            },
            EstimatorKind::Affine { lipschitz } => {
                let problems = problems_on_grid(scenario, &settings.affine)?;
                let class = lipschitz_class(problems[0].big_m(), *lipschitz)?;
                let per_t0 = problems
                    .par_iter()
                    .map(|p| {
                        solve_problem(p, &class, &settings.solver)
                            .and_then(|r| build_affine_estimator(&r, &p.a, &p.g, p.n, p.epsilon))
                            .map_err(|e| e.to_string())
                    })
                    .collect();
                Prepared::Affine {
                    bins_j: problems[0].bins_j.clone(),
                    policy,
                    per_t0,
                }
            }
            EstimatorKind::AffineAdaptive => {
                let problems = problems_on_grid(scenario, &settings.affine)?;
                let classes = settings
                    .affine
                    .lipschitz
                    .values()?
                    .into_iter()
                    .map(|l| lipschitz_class(problems[0].big_m(), l))
                    .collect::<deconv_cdf_core::Result<Vec<_>>>()?;
                let per_t0 = problems
                    .par_iter()
                    .map(|p| NestedAffine::build(p, &classes, &settings.solver).map_err(|e| e.to_string()))
                    .collect();
                Prepared::Nested {
                    bins_j: problems[0].bins_j.clone(),
                    policy,
                    per_t0,
                }
            }
        })
    }
}

fn edf_at(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&y| y <= t) as f64 / sorted.len() as f64
}

impl ScenarioEstimator for PreparedEstimator {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn estimate(&self, sample: &SampleSet, t0_grid: &[f64]) -> Vec<std::result::Result<f64, String>> {
        let each = |f: &dyn Fn(f64) -> deconv_cdf_core::Result<f64>| {
            t0_grid.iter().map(|&t| f(t).map_err(|e| e.to_string())).collect()
        };
        match &self.inner {
            Prepared::Failed(msg) => t0_grid.iter().map(|_| Err(msg.clone())).collect(),
            Prepared::Edf => {
                let mut sorted = sample.y.clone();
                sorted.sort_by(f64::total_cmp);
                t0_grid.iter().map(|&t| Ok(edf_at(&sorted, t))).collect()
            }
            Prepared::Fixed { kernel, lambda } => {
                each(&|t| Ok(estimate_cdf_with(sample, kernel, *lambda, t, false)?.value_clipped))
            }
            Prepared::Lepski { kernel, cfg } => {
                each(&|t| Ok(run_lepski_with(sample, kernel, cfg, t)?.selected.value_clipped))
            }
            Prepared::Affine { bins_j, policy, per_t0 } => match bin_observations(&sample.y, bins_j, *policy) {
                Ok(emp) => per_t0
                    .iter()
                    .map(|est| {
                        let est = est.as_ref().map_err(Clone::clone)?;
                        est.estimate(&emp.p).map(|v| v.clamp(0.0, 1.0)).map_err(|e| e.to_string())
                    })
                    .collect(),
                Err(e) => t0_grid.iter().map(|_| Err(e.to_string())).collect(),
            },
            Prepared::Nested { bins_j, policy, per_t0 } => match bin_observations(&sample.y, bins_j, *policy) {
                Ok(emp) => per_t0
                    .iter()
                    .map(|est| {
                        let est = est.as_ref().map_err(Clone::clone)?;
                        est.estimate(&emp.p)
                            .map(|c| c.value.clamp(0.0, 1.0))
                            .map_err(|e| e.to_string())
                    })
                    .collect(),
                Err(e) => t0_grid.iter().map(|_| Err(e.to_string())).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub estimator_id: String,
    pub rep: usize,
    pub t0: f64,
    pub estimate: f64,
    pub truth: f64,
    pub error: f64,
    pub abs_error: f64,
    /// Empty on success, the failure message otherwise.
    pub status: String,
}

impl RiskRow {
    pub fn failed(&self) -> bool {
        !self.status.is_empty()
    }
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    /// `None` for empty input.
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(BoxStats {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator_id: String,
    pub failed_rows: usize,
    /// Maximum absolute error over the grid for each replication, failed points skipped.
    pub rep_max: Vec<f64>,
    /// Maximum absolute error over replications for each grid point.
    pub point_max: Vec<f64>,
    pub rep_max_stats: Option<BoxStats>,
    pub point_max_stats: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTable {
    pub rows: Vec<RiskRow>,
    pub summary: Vec<EstimatorSummary>,
}

impl RiskTable {
    pub fn summary_for(&self, id: &str) -> Option<&EstimatorSummary> {
        self.summary.iter().find(|s| s.estimator_id == id)
    }
}

/// Per-estimator statistics. The result does not depend on the row order.
pub fn summarize(rows: &[RiskRow], ids: &[String], reps: usize, t0_grid: &[f64]) -> Vec<EstimatorSummary> {
    ids.iter()
        .map(|id| {
            let mut rep_max = vec![f64::NAN; reps];
            let mut point_max = vec![f64::NAN; t0_grid.len()];
            let mut failed_rows = 0;
            for r in rows.iter().filter(|r| &r.estimator_id == id) {
                if r.failed() {
                    failed_rows += 1;
                    continue;
                }
                let k = t0_grid.iter().position(|&t| t == r.t0).expect("row t0 is on the grid");
                rep_max[r.rep] = rep_max[r.rep].max(r.abs_error);
                point_max[k] = point_max[k].max(r.abs_error);
            }
            EstimatorSummary {
                estimator_id: id.clone(),
                failed_rows,
                rep_max_stats: BoxStats::of(&rep_max),
                point_max_stats: BoxStats::of(&point_max),
                rep_max,
                point_max,
            }
        })
        .collect()
}

/// Runs every estimator on every replication. Replications run in
/// parallel and are folded in replication order.
pub fn run_estimators(scenario: &Scenario, estimators: &[&dyn ScenarioEstimator]) -> Result<RiskTable> {
    scenario.validate()?;
    let law = scenario.target.law();
    let truth: Vec<f64> = scenario.t0_grid.iter().map(|&t| law.cdf(t)).collect();
    let ids: Vec<String> = estimators.iter().map(|e| e.id()).collect();
    let per_rep: Vec<Vec<RiskRow>> = (0..scenario.reps)
        .into_par_iter()
        .map(|rep| {
            let sample = scenario.sample(rep);
            let mut rows = Vec::with_capacity(estimators.len() * scenario.t0_grid.len());
            for (est, id) in estimators.iter().zip(&ids) {
                let values = est.estimate(&sample, &scenario.t0_grid);
                for ((&t0, &f), v) in scenario.t0_grid.iter().zip(&truth).zip(values) {
                    rows.push(match v {
                        Ok(e) => RiskRow {
                            estimator_id: id.clone(),
                            rep,
                            t0,
                            estimate: e,
                            truth: f,
                            error: e - f,
                            abs_error: (e - f).abs(),
                            status: String::new(),
                        },
                        Err(msg) => RiskRow {
                            estimator_id: id.clone(),
                            rep,
                            t0,
                            estimate: f64::NAN,
                            truth: f,
                            error: f64::NAN,
                            abs_error: f64::NAN,
                            status: msg,
                        },
                    });
                }
            }
            rows
        })
        .collect();
    let rows: Vec<RiskRow> = per_rep.into_iter().flatten().collect();
    let summary = summarize(&rows, &ids, scenario.reps, &scenario.t0_grid);
    Ok(RiskTable { rows, summary })
}

/// Prepares the configured estimators and runs them.
pub fn run_scenario(scenario: &Scenario, estimators: &[EstimatorSpec], settings: &RunSettings) -> Result<RiskTable> {
    scenario.validate()?;
    if estimators.is_empty() {
        return Err(HarnessError::Config("no estimators configured".into()));
    }
    let prepared: Vec<PreparedEstimator> = estimators
        .iter()
        .map(|e| PreparedEstimator::prepare(e, scenario, settings))
        .collect();
    let refs: Vec<&dyn ScenarioEstimator> = prepared.iter().map(|p| p as &dyn ScenarioEstimator).collect();
    run_estimators(scenario, &refs)
}

/// Builds the scenario from a config file and runs its estimators.
pub fn run_config(cfg: &Config) -> Result<RiskTable> {
    let scenario = Scenario::from_config(cfg)?;
    run_scenario(&scenario, &cfg.estimators, &RunSettings::from_config(cfg)?)
}
