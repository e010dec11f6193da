//! The JSON run configuration. Every block rejects unknown keys.

use std::f64::consts::PI;
use std::path::Path;

use hestonreg::discretization::AssemblyFault;
use hestonreg::regularity_harness::FieldSpec;
use hestonreg::{
    Coefficients, EstimateKind, EstimateParams, EstimateRegions, HalfPlaneDomain, Point, RawCoefficients, SpaceTag,
    WeightSpec,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Validate,
    Solve,
    Norms,
    Commutators,
    Sweep,
    Convergence,
    Probe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub coefficients: RawCoefficients,
    #[serde(default = "default_domain")]
    pub domain: HalfPlaneDomain,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Overrides of the weight derived from the coefficients.
    #[serde(default)]
    pub weight: WeightOverrides,
    #[serde(default)]
    pub norms: NormsConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    #[serde(default)]
    pub commutators: CommutatorConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    /// Deliberate assembly defect, for negative controls.
    #[serde(default)]
    pub assembly_fault: Option<AssemblyFault>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
    /// Sampling seed; `--seed` takes precedence.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_domain() -> HalfPlaneDomain {
    HalfPlaneDomain {
        x_min: 0.0,
        x_max: PI,
        y_max: 1.0,
    }
}

fn default_seed() -> u64 {
    0x5EED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_cells")]
    pub nx: usize,
    #[serde(default = "default_cells")]
    pub ny: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
    /// Square grids `n x n` for the ladder commands.
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
}

fn default_cells() -> usize {
    32
}
fn default_grading() -> f64 {
    2.0
}
fn default_ladder() -> Vec<usize> {
    vec![32, 64, 128]
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: default_cells(),
            ny: default_cells(),
            grading: default_grading(),
            ladder: default_ladder(),
        }
    }
}

/// `{"manufactured": field}` solves with source `A u*` and Dirichlet trace of
/// `u*`; `{"source": field}` uses the field as `f` with zero Dirichlet data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Manufactured(FieldSpec),
    Source(FieldSpec),
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Manufactured(FieldSpec::SinXExpNegY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    hestonreg::discretization::DEFAULT_MAX_ITERATIONS
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightOverrides {
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub m: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    #[serde(default = "default_tags")]
    pub tags: Vec<SpaceTag>,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Evaluate a grid file instead of a fresh solution.
    #[serde(default)]
    pub input: Option<String>,
}

fn default_tags() -> Vec<SpaceTag> {
    vec![SpaceTag::Lp, SpaceTag::H1, SpaceTag::H2]
}
fn default_p() -> f64 {
    2.0
}
fn default_alpha() -> f64 {
    0.5
}

impl Default for NormsConfig {
    fn default() -> Self {
        Self {
            tags: default_tags(),
            k: 0,
            p: default_p(),
            alpha: default_alpha(),
            input: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<EstimateKind>,
    /// Regions for the half-ball kinds; centred on the axis midpoint by default.
    #[serde(default)]
    pub half_balls: Option<EstimateRegions>,
    /// Nested rectangles for `koch_gradient` and `ckalphas_domain`.
    #[serde(default)]
    pub subdomains: Option<EstimateRegions>,
    #[serde(default = "default_estimate_params")]
    pub params: EstimateParams,
    /// Relative growth tolerated between successive implied constants.
    #[serde(default = "default_band")]
    pub band: f64,
}

fn default_kinds() -> Vec<EstimateKind> {
    vec![
        EstimateKind::H2Interior,
        EstimateKind::Hk2Interior,
        EstimateKind::KochGradient,
        EstimateKind::Supremum,
    ]
}
fn default_estimate_params() -> EstimateParams {
    EstimateParams {
        k: 1,
        ..EstimateParams::default()
    }
}
fn default_band() -> f64 {
    0.05
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            kinds: default_kinds(),
            half_balls: None,
            subdomains: None,
            params: default_estimate_params(),
            band: default_band(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorConfig {
    /// Random points per field, drawn inside the domain.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_order")]
    pub max_k: usize,
    #[serde(default = "default_order")]
    pub max_m: usize,
    #[serde(default = "default_commutator_tol")]
    pub tol: f64,
}

fn default_points() -> usize {
    100
}
fn default_order() -> usize {
    3
}
fn default_commutator_tol() -> f64 {
    1e-10
}

impl Default for CommutatorConfig {
    fn default() -> Self {
        Self {
            points: default_points(),
            max_k: default_order(),
            max_m: default_order(),
            tol: default_commutator_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default = "default_order")]
    pub k: usize,
    /// Lower edge of the probe strip, as a fraction of the domain height.
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_height")]
    pub height: f64,
}

fn default_floor() -> f64 {
    1.0 / 16.0
}
fn default_height() -> f64 {
    0.25
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            k: default_order(),
            floor: default_floor(),
            height: default_height(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// When set, the last L² order must reach this value (exit 3 otherwise).
    #[serde(default)]
    pub min_l2_order: Option<f64>,
}

/// Configuration problems, reported with exit status 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    /// Fills region defaults from the domain so that the echoed config is complete.
    pub fn resolve(&mut self) {
        let d = self.domain;
        let mid = 0.5 * (d.x_min + d.x_max);
        let s = d.y_max.min(0.5 * (d.x_max - d.x_min));
        self.estimate.half_balls.get_or_insert(EstimateRegions::HalfBalls {
            z0: Point::new(mid, 0.0),
            r: 0.25 * s,
            r0: 0.5 * s,
        });
        self.estimate.subdomains.get_or_insert(EstimateRegions::Subdomains {
            inner: HalfPlaneDomain {
                x_min: mid - 0.5 * s,
                x_max: mid + 0.5 * s,
                y_max: 0.5 * s,
            },
            outer: HalfPlaneDomain {
                x_min: mid - 0.75 * s,
                x_max: mid + 0.75 * s,
                y_max: 0.75 * s,
            },
        });
    }

    pub fn coefficients(&self) -> hestonreg::Result<Coefficients> {
        hestonreg::validate_coefficients(&self.coefficients)
    }

    pub fn weight(&self, c: &Coefficients) -> WeightSpec {
        let base = WeightSpec::from_coefficients(c);
        let o = self.weight;
        WeightSpec {
            beta: o.beta.unwrap_or(base.beta),
            mu: o.mu.unwrap_or(base.mu),
            gamma: o.gamma.unwrap_or(base.gamma),
            m: o.m.unwrap_or(base.m),
        }
    }

    /// Regions for one estimate kind.
    pub fn regions_for(&self, kind: EstimateKind) -> EstimateRegions {
        let pick = match kind {
            EstimateKind::KochGradient | EstimateKind::CkalphasDomain => self.estimate.subdomains,
            _ => self.estimate.half_balls,
        };
        pick.expect("resolve() fills both region blocks")
    }
}
