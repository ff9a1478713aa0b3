//! Experiment configuration.
//!
//! A single JSON document declares the noise law, the target law, the
//! scenario size, the estimators to compare and the numerical tolerances.
//! Every section except `noise` has defaults:
//!
//! ```json
//! {
//!   "noise": { "kind": "scenario_gamma" },
//!   "target": { "kind": "gamma_mixture" },
//!   "scenario": { "n": 2000, "reps": 100, "t0_points": 50, "master_seed": 1 },
//!   "estimators": [
//!     { "kind": "edf" },
//!     { "kind": "lepski", "grid": { "style": "arithmetic", "start": 0.01, "step": 0.05, "stop": 10.0 } },
//!     { "kind": "affine_adaptive" }
//!   ],
//!   "affine": { "signal_bins": 100, "observation_bins": 100, "epsilon": 0.05 },
//!   "quadrature": { "abs_tol": 1e-8, "rel_tol": 1e-6 },
//!   "solver": { "kind": "auto", "tol": 1e-7 }
//! }
//! ```

use deconv_cdf_core::affine::{SolveOptions, SolverKind};
use deconv_cdf_core::discretize::OutOfRange;
use deconv_cdf_core::lepski::{IntervalRule, LambdaGrid, LepskiConfig};
use deconv_cdf_core::noise::{Distribution, NoiseModel, E1, E2};
use deconv_cdf_core::quadrature::{PanelRule, QuadratureConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// A probability law built from the families the core crate supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Gamma { loc: f64, shape: f64, scale: f64 },
    Laplace { loc: f64, scale: f64 },
    /// The second parameter is a variance.
    Gaussian { mean: f64, variance: f64 },
    Mixture { components: Vec<ComponentSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub law: LawSpec,
}

impl LawSpec {
    pub fn build(&self) -> Result<Distribution> {
        Ok(match self {
            LawSpec::Gamma { loc, shape, scale } => Distribution::gamma(*loc, *shape, *scale)?,
            LawSpec::Laplace { loc, scale } => Distribution::laplace(*loc, *scale)?,
            LawSpec::Gaussian { mean, variance } => Distribution::gaussian(*mean, *variance)?,
            LawSpec::Mixture { components } => Distribution::mixture(
                components
                    .iter()
                    .map(|c| Ok((c.weight, c.law.build()?)))
                    .collect::<Result<Vec<_>>>()?,
            )?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E1Spec {
    pub beta: f64,
    pub c_lower: f64,
    pub c_upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct E2Spec {
    pub omega0: f64,
    pub b: f64,
    pub tau: f64,
}

/// Where the noise law comes from. Single-family laws get their analytic
/// decay constants attached; mixtures get none unless given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSource {
    Gamma { loc: f64, shape: f64, scale: f64 },
    Laplace { loc: f64, scale: f64 },
    Gaussian { mean: f64, variance: f64 },
    Mixture { components: Vec<ComponentSpec> },
    /// Gamma(0, 2, 1/(2√2)).
    ScenarioGamma,
    /// ½ Laplace(−1, ½) + ½ Laplace(1, ½).
    ScenarioLaplaceMixture,
    /// ½ N(0, ¼) + ½ N(2, ¼).
    ScenarioNormalMixture,
    /// Gamma(0, 0.3, 0.5), a noise with decay exponent below ½.
    Rough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub source: NoiseSource,
    /// Overrides the attached decay bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e1: Option<E1Spec>,
    /// Overrides the attached behaviour at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<E2Spec>,
}

impl NoiseSpec {
    pub fn from_source(source: NoiseSource) -> Self {
        NoiseSpec { source, e1: None, e2: None }
    }

    pub fn build(&self) -> Result<NoiseModel> {
        let mut model = match &self.source {
            NoiseSource::Gamma { loc, shape, scale } => NoiseModel::gamma_preset(*loc, *shape, *scale)?,
            NoiseSource::Laplace { loc, scale } => NoiseModel::laplace_preset(*loc, *scale)?,
            NoiseSource::Gaussian { mean, variance } => NoiseModel::gaussian_preset(*mean, *variance)?,
            NoiseSource::Mixture { components } => NoiseModel::new(
                LawSpec::Mixture {
                    components: components.clone(),
                }
                .build()?,
            ),
            NoiseSource::ScenarioGamma => NoiseModel::scenario_gamma(),
            NoiseSource::ScenarioLaplaceMixture => NoiseModel::scenario_laplace_mixture(),
            NoiseSource::ScenarioNormalMixture => NoiseModel::scenario_normal_mixture(),
            NoiseSource::Rough => NoiseModel::rough_preset(),
        };
        if let Some(e) = self.e1 {
            model = model.with_e1(E1 {
                beta: e.beta,
                c_lower: e.c_lower,
                c_upper: e.c_upper,
            });
        }
        if let Some(e) = self.e2 {
            model = model.with_e2(E2 {
                omega0: e.omega0,
                b: e.b,
                tau: e.tau,
            });
        }
        Ok(model)
    }
}

/// Law of the unobserved signal.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// 0.3 Gamma(0, 0.5, 2) + 0.7 Gamma(5, 0.5, 2).
    #[default]
    GammaMixture,
    /// 0.3 Laplace(−1.5, 0.5) + 0.7 Laplace(1.7, 0.25).
    LaplaceMixture,
    /// 0.6 N(0.15827, 1) + 0.4 N(1, 0.0150), variances as second parameters.
    NormalMixture,
    Custom { law: LawSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub reps: usize,
    /// Number of evaluation points spread over the central 99% of the target.
    pub t0_points: usize,
    /// Explicit evaluation points; overrides `t0_points`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0_values: Option<Vec<f64>>,
    pub master_seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            n: 2000,
            reps: 100,
            t0_points: 50,
            t0_values: None,
            master_seed: 1,
        }
    }
}

/// Candidate cut-off frequencies for the adaptive selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Halving from the largest admissible cut-off down to `floor`.
    Theorem { floor: f64 },
    Arithmetic { start: f64, step: f64, stop: f64 },
    /// `count` values `2^j · lambda_min`.
    Dyadic { lambda_min: f64, count: usize },
    Values { values: Vec<f64> },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Theorem { floor: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleName {
    #[default]
    Theorem,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LepskiSpec {
    pub grid: GridSpec,
    pub epsilon: f64,
    pub rule: RuleName,
    /// Interval multiplier for the empirical rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl Default for LepskiSpec {
    fn default() -> Self {
        LepskiSpec {
            grid: GridSpec::default(),
            epsilon: 0.05,
            rule: RuleName::Theorem,
            kappa: None,
        }
    }
}

impl LepskiSpec {
    pub fn build(&self, noise: &NoiseModel, n: usize) -> Result<LepskiConfig> {
        // the theorem grid needs the constants, so build with a placeholder first
        let placeholder = LambdaGrid::from_values(vec![1.0])?;
        let mut cfg = LepskiConfig::from_model(noise, placeholder, self.epsilon)?;
        cfg.grid = match &self.grid {
            GridSpec::Theorem { floor } => LambdaGrid::theorem_default(n, self.epsilon, cfg.m_bar(), *floor)?,
            GridSpec::Arithmetic { start, step, stop } => LambdaGrid::arithmetic(*start, *step, *stop)?,
            GridSpec::Dyadic { lambda_min, count } => LambdaGrid::dyadic(*lambda_min, *count)?,
            GridSpec::Values { values } => LambdaGrid::from_values(values.clone())?,
        };
        cfg.rule = match self.rule {
            RuleName::Theorem => IntervalRule::Theorem,
            RuleName::Empirical => IntervalRule::Empirical { kappa: self.kappa },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricSpec {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl Default for GeometricSpec {
    fn default() -> Self {
        GeometricSpec {
            from: 0.001,
            to: 1.0,
            count: 17,
        }
    }
}

impl GeometricSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.from > 0.0 && self.to >= self.from) || self.count == 0 {
            return Err(HarnessError::Config(
                "geometric grid needs 0 < from <= to and count >= 1".into(),
            ));
        }
        if self.count == 1 {
            return Ok(vec![self.from]);
        }
        let ratio = (self.to / self.from).ln() / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|k| self.from * (ratio * k as f64).exp())
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRangeName {
    #[default]
    Clamp,
    Drop,
}

impl From<OutOfRangeName> for OutOfRange {
    fn from(v: OutOfRangeName) -> Self {
        match v {
            OutOfRangeName::Clamp => OutOfRange::Clamp,
            OutOfRangeName::Drop => OutOfRange::Drop,
        }
    }
}

/// Binning and class settings for the affine estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineSpec {
    /// Signal range; defaults to the 0.05% and 99.95% target quantiles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_range: Option<[f64; 2]>,
    pub signal_bins: usize,
    /// Observation range; defaults to the signal range widened by the noise support.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation_range: Option<[f64; 2]>,
    pub observation_bins: usize,
    pub epsilon: f64,
    /// Lipschitz constants of the nested classes.
    pub lipschitz: GeometricSpec,
    pub out_of_range: OutOfRangeName,
}

impl Default for AffineSpec {
    fn default() -> Self {
        AffineSpec {
            signal_range: None,
            signal_bins: 100,
            observation_range: None,
            observation_bins: 100,
            epsilon: 0.05,
            lipschitz: GeometricSpec::default(),
            out_of_range: OutOfRangeName::Clamp,
        }
    }
}

/// One estimator to run in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Empirical distribution function of the noisy observations.
    Edf,
    FixedLambda { lambda: f64 },
    Lepski(LepskiSpec),
    /// Single affine estimator for the Lipschitz class with this constant.
    Affine { lipschitz: f64 },
    /// Nested adaptation over the `affine.lipschitz` classes.
    AffineAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    /// Label in the output; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(flatten)]
    pub kind: EstimatorKind,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorSpec { id: None, kind }
    }

    pub fn label(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        match &self.kind {
            EstimatorKind::Edf => "edf".into(),
            EstimatorKind::FixedLambda { lambda } => format!("fixed_lambda_{lambda}"),
            EstimatorKind::Lepski(_) => "lepski".into(),
            EstimatorKind::Affine { lipschitz } => format!("affine_{lipschitz}"),
            EstimatorKind::AffineAdaptive => "affine_adaptive".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelName {
    #[default]
    GaussKronrod15,
    SimpsonAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub panel_rule: PanelName,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        QuadratureSpec {
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
            panel_rule: PanelName::GaussKronrod15,
        }
    }
}

impl QuadratureSpec {
    pub fn build(&self) -> Result<QuadratureConfig> {
        let q = QuadratureConfig {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            panel_rule: match self.panel_rule {
                PanelName::GaussKronrod15 => PanelRule::GaussKronrod15,
                PanelName::SimpsonAdaptive => PanelRule::SimpsonAdaptive,
            },
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    #[default]
    Auto,
    InteriorPoint,
    LagrangianBisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: SolverName,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverSpec {
            kind: SolverName::Auto,
            tol: o.tol,
            max_iter: o.max_iter,
        }
    }
}

impl SolverSpec {
    pub fn build(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            kind: match self.kind {
                SolverName::Auto => SolverKind::Auto,
                SolverName::InteriorPoint => SolverKind::InteriorPoint,
                SolverName::LagrangianBisection => SolverKind::LagrangianBisection,
            },
            max_iter: self.max_iter,
        }
    }
}

/// The whole configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub noise: NoiseSpec,
    #[serde(default)]
    pub target: TargetSpec,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub estimators: Vec<EstimatorSpec>,
    /// Settings for the `lepski` subcommand.
    #[serde(default)]
    pub lepski: LepskiSpec,
    #[serde(default)]
    pub affine: AffineSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn with_noise(noise: NoiseSpec) -> Self {
        Config {
            noise,
            target: TargetSpec::default(),
            scenario: ScenarioSpec::default(),
            estimators: Vec::new(),
            lepski: LepskiSpec::default(),
            affine: AffineSpec::default(),
            quadrature: QuadratureSpec::default(),
            solver: SolverSpec::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = Config::from_json(r#"{ "noise": { "kind": "scenario_gamma" } }"#).unwrap();
        assert_eq!(c.scenario, ScenarioSpec::default());
        assert_eq!(c.target, TargetSpec::GammaMixture);
        assert_eq!(c.noise.build().unwrap(), NoiseModel::scenario_gamma());
        assert!(c.estimators.is_empty());
    }

    #[test]
    fn estimator_entries_parse_with_and_without_id() {
        let c = Config::from_json(
            r#"{
                "noise": { "kind": "laplace", "loc": 0.0, "scale": 0.5 },
                "estimators": [
                    { "kind": "edf" },
                    { "kind": "fixed_lambda", "lambda": 3.0, "id": "f3" },
                    { "kind": "lepski", "rule": "empirical", "grid": { "style": "dyadic", "lambda_min": 0.1, "count": 6 } },
                    { "kind": "affine", "lipschitz": 0.1 },
                    { "kind": "affine_adaptive" }
                ]
            }"#,
        )
        .unwrap();
        let labels: Vec<String> = c.estimators.iter().map(|e| e.label()).collect();
        assert_eq!(labels, ["edf", "f3", "lepski", "affine_0.1", "affine_adaptive"]);
        match &c.estimators[2].kind {
            EstimatorKind::Lepski(s) => {
                assert_eq!(s.rule, RuleName::Empirical);
                assert_eq!(s.epsilon, 0.05);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_json(r#"{ "noise": { "kind": "rough" }, "scenery": {} }"#).is_err());
        assert!(Config::from_json(r#"{ "noise": { "kind": "rough" }, "scenario": { "size": 3 } }"#).is_err());
    }

    #[test]
    fn overrides_replace_attached_constants() {
        let spec: NoiseSpec = serde_json::from_str(
            r#"{ "kind": "mixture",
                 "components": [ { "weight": 0.5, "law": { "kind": "laplace", "loc": -1.0, "scale": 0.5 } },
                                 { "weight": 0.5, "law": { "kind": "laplace", "loc": 1.0, "scale": 0.5 } } ],
                 "e2": { "omega0": 0.5, "b": 1.0, "tau": 2.0 } }"#,
        )
        .unwrap();
        let m = spec.build().unwrap();
        assert!(m.e1.is_none());
        assert_eq!(m.e2, Some(E2 { omega0: 0.5, b: 1.0, tau: 2.0 }));
    }

    #[test]
    fn geometric_grid_endpoints() {
        let v = GeometricSpec::default().values().unwrap();
        assert_eq!(v.len(), 17);
        assert_eq!(v[0], 0.001);
        assert!((v[16] - 1.0).abs() <= 1e-12);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(GeometricSpec { from: 0.0, to: 1.0, count: 3 }.values().is_err());
    }
}
