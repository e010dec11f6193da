//! Numerical checks of the a priori estimates.
//!
//! Every estimate has the shape `left <= C right`. A report measures both
//! sides with the discrete norm evaluators and records `left / right`; the
//! checks here never assert a value for `C`, only that the measured ratio
//! stays bounded as the grid is refined.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{AnalyticField, ClosureField, Constant, Polynomial, Separable};
use crate::discretization::assembly::{assemble_system, AssemblyOptions, Source};
use crate::discretization::grid::{Grid, GridFunction};
use crate::discretization::quadrature::CellQuadrature;
use crate::discretization::solver::solve_system_with_stats;
use crate::error::{Error, Result};
use crate::geometry::{BallSpec, HalfPlaneDomain, Point, Region};
use crate::heston_operator::{Coefficients, OperatorImage};
use crate::weighted_spaces::{holder_norm, integrate_fields, sobolev_norm, NormRequest, SpaceTag, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// `‖u‖_{L∞(B_R^+)} <= C (‖f‖_{L^p(B_{R0}^+, y^{β-1})} + ‖u‖_{L^2(B_{R0}^+, y^{β-1})})`
    Supremum,
    /// `‖u‖_{C^α_s(B_R^+)} <= C (‖f‖_{L^p(B_{R0}^+, y^{β-1})} + ‖u‖_{L^2(B_{R0}^+)})`
    Holder,
    /// `‖u‖_{H^2(B_R^+, 𝔴)} <= C (‖f‖_{L^2(B_{R0}^+, 𝔴)} + ‖u‖_{L^2(B_{R0}^+, 𝔴)})`
    H2Interior,
    /// `‖u‖_{𝓗^{k+2}(B_R^+, 𝔴)} <= C (‖f‖_{W^{k,2}(B_{R0}^+, 𝔴)} + ‖u‖_{L^2(B_{R0}^+, 𝔴)})`
    Hk2Interior,
    /// `‖Du‖_{L^2(𝒪', 𝔴)} <= C (‖(1+y)^{1/2} f‖_{L^2(𝒪, 𝔴)} + ‖(1+y) u‖_{L^2(𝒪, 𝔴)})`
    KochGradient,
    /// `‖u‖_{C^{k,α}_s(𝒪')} <= C (‖f‖_{W^{2k+2,p}(𝒪'', y^{β-1})} + ‖u‖_{L^2(𝒪'', y^{β-1})})`
    CkalphasDomain,
}

impl EstimateKind {
    pub const ALL: [EstimateKind; 6] = [
        Self::Supremum,
        Self::Holder,
        Self::H2Interior,
        Self::Hk2Interior,
        Self::KochGradient,
        Self::CkalphasDomain,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Supremum => "supremum",
            Self::Holder => "holder",
            Self::H2Interior => "h2_interior",
            Self::Hk2Interior => "hk2_interior",
            Self::KochGradient => "koch_gradient",
            Self::CkalphasDomain => "ckalphas_domain",
        }
    }
}

impl std::str::FromStr for EstimateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnsupportedTag(s.to_string()))
    }
}

/// Where the two sides of an estimate are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateRegions {
    /// Left side on `B_R^+(z0)`, right side on `B_{R0}^+(z0)`.
    HalfBalls { z0: Point, r: f64, r0: f64 },
    /// Left side on `inner`, right side on `outer`.
    Subdomains { inner: HalfPlaneDomain, outer: HalfPlaneDomain },
}

impl EstimateRegions {
    fn regions(&self, domain: &HalfPlaneDomain) -> Result<(Region, Region)> {
        let (inner, outer) = match *self {
            EstimateRegions::HalfBalls { z0, r, r0 } => {
                if !(r < r0) {
                    return Err(Error::InvalidBall(format!("inner radius {r} must be below {r0}")));
                }
                (
                    Region::Ball(BallSpec::euclidean_half(z0, r)?),
                    Region::Ball(BallSpec::euclidean_half(z0, r0)?),
                )
            }
            EstimateRegions::Subdomains { inner, outer } => {
                inner.validate()?;
                outer.validate()?;
                if !Region::Rectangle(inner).inside(&outer) {
                    return Err(Error::RegionOutsideDomain(format!("{inner:?} is not inside {outer:?}")));
                }
                (Region::Rectangle(inner), Region::Rectangle(outer))
            }
        };
        if !outer.inside(domain) {
            return Err(Error::RegionOutsideDomain(format!("{outer:?} is not inside {domain:?}")));
        }
        Ok((inner, outer))
    }

    pub fn translated(&self, dx: f64) -> Self {
        match *self {
            EstimateRegions::HalfBalls { z0, r, r0 } => EstimateRegions::HalfBalls {
                z0: z0.translated(dx),
                r,
                r0,
            },
            EstimateRegions::Subdomains { inner, outer } => EstimateRegions::Subdomains {
                inner: inner.translated(dx),
                outer: outer.translated(dx),
            },
        }
    }
}

/// Order and exponents of an estimate; `p = None` selects `max{4, 2+β} + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateParams {
    #[serde(default)]
    pub k: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub p: Option<f64>,
}

fn default_alpha() -> f64 {
    0.5
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self {
            k: 0,
            alpha: default_alpha(),
            p: None,
        }
    }
}

pub fn default_exponent(beta: f64) -> f64 {
    4.0f64.max(2.0 + beta) + 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub kind: EstimateKind,
    pub regions: EstimateRegions,
    pub k: usize,
    pub alpha: f64,
    pub p: f64,
    pub left: f64,
    pub right: f64,
    pub implied_constant: f64,
    /// Both sides vanish.
    pub trivial: bool,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub runtime_ms: u128,
}

/// `‖g(y) u‖_{L^2(region, w)}` with `g` applied at the quadrature points.
fn l2_with_factor(u: &GridFunction, w: &WeightSpec, region: &Region, g: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
    let quad = CellQuadrature::new(u.grid(), w)?;
    let s = integrate_fields(u.grid(), &quad, region, &[u.values()], |qp, f| {
        let v = g(qp.y) * f[0];
        v * v
    })?;
    Ok(s.sqrt())
}

fn gradient_l2(u: &GridFunction, w: &WeightSpec, region: &Region) -> Result<f64> {
    let quad = CellQuadrature::new(u.grid(), w)?;
    let fields = [u.derivative(1, 0)?, u.derivative(0, 1)?];
    let s = integrate_fields(u.grid(), &quad, region, &fields, |_, f| f[0] * f[0] + f[1] * f[1])?;
    Ok(s.sqrt())
}

fn sup_over(u: &GridFunction, region: &Region) -> Result<f64> {
    let nodes = u.grid().nodes_in(region);
    if nodes.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(nodes.iter().map(|&n| u.values()[n].abs()).fold(0.0, f64::max))
}

/// Measures both sides of the estimate `kind` for a solution `u` of the
/// variational equation with nodal source `f`.
pub fn estimate_ratio(
    kind: EstimateKind,
    c: &Coefficients,
    u: &GridFunction,
    f: &GridFunction,
    regions: &EstimateRegions,
    params: &EstimateParams,
) -> Result<EstimateReport> {
    let start = Instant::now();
    if u.grid() != f.grid() && **u.grid() != **f.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid().clone();
    let (inner, outer) = regions.regions(grid.domain())?;
    let w = WeightSpec::from_coefficients(c);
    let power = WeightSpec::power(w.beta);
    let p = params.p.unwrap_or_else(|| default_exponent(w.beta));
    let k = params.k;
    let (left, right) = match kind {
        EstimateKind::Supremum => {
            let left = sup_over(u, &inner)?;
            let right = sobolev_norm(f, &NormRequest::new(SpaceTag::Lp, power).exponent(p).region(outer))?
                + sobolev_norm(u, &NormRequest::new(SpaceTag::Lp, power).region(outer))?;
            (left, right)
        }
        EstimateKind::Holder => {
            let left = holder_norm(u, &NormRequest::new(SpaceTag::Calphas, w).alpha(params.alpha).region(inner))?;
            let right = sobolev_norm(f, &NormRequest::new(SpaceTag::Lp, power).exponent(p).region(outer))?
                + sobolev_norm(u, &NormRequest::new(SpaceTag::Lp, WeightSpec::lebesgue()).region(outer))?;
            (left, right)
        }
        EstimateKind::H2Interior => {
            let ud = u.clone().with_derivatives(2)?;
            let left = sobolev_norm(&ud, &NormRequest::new(SpaceTag::H2, w).region(inner))?;
            let right = sobolev_norm(f, &NormRequest::new(SpaceTag::Lp, w).region(outer))?
                + sobolev_norm(u, &NormRequest::new(SpaceTag::Lp, w).region(outer))?;
            (left, right)
        }
        EstimateKind::Hk2Interior => {
            let ud = u.clone().with_derivatives(k + 2)?;
            let fd = f.clone().with_derivatives(k)?;
            let left = sobolev_norm(&ud, &NormRequest::new(SpaceTag::CalHk, w).order(k).region(inner))?;
            let right = sobolev_norm(&fd, &NormRequest::new(SpaceTag::Wkp, w).order(k).region(outer))?
                + sobolev_norm(u, &NormRequest::new(SpaceTag::Lp, w).region(outer))?;
            (left, right)
        }
        EstimateKind::KochGradient => {
            let ud = u.clone().with_derivatives(1)?;
            let left = gradient_l2(&ud, &w, &inner)?;
            let right = l2_with_factor(f, &w, &outer, |y| (1.0 + y).sqrt())?
                + l2_with_factor(u, &w, &outer, |y| 1.0 + y)?;
            (left, right)
        }
        EstimateKind::CkalphasDomain => {
            let ud = u.clone().with_derivatives(k)?;
            let fd = f.clone().with_derivatives(2 * k + 2)?;
            let left = holder_norm(
                &ud,
                &NormRequest::new(SpaceTag::Ckalphas, w).order(k).alpha(params.alpha).region(inner),
            )?;
            let right = sobolev_norm(
                &fd,
                &NormRequest::new(SpaceTag::Wkp, power).order(2 * k + 2).exponent(p).region(outer),
            )? + sobolev_norm(u, &NormRequest::new(SpaceTag::Lp, power).region(outer))?;
            (left, right)
        }
    };
    let (implied_constant, trivial) = if right > 0.0 {
        (left / right, false)
    } else if left == 0.0 {
        (0.0, true)
    } else {
        return Err(Error::ZeroData(left));
    };
    Ok(EstimateReport {
        kind,
        regions: *regions,
        k,
        alpha: params.alpha,
        p,
        left,
        right,
        implied_constant,
        trivial,
        grid_nx: grid.nx(),
        grid_ny: grid.ny(),
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// Whether no value exceeds its predecessor by more than the relative `band`.
pub fn non_increasing_within(values: &[f64], band: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + band))
}

/// Whether every successive ratio lies in `[lo, hi]`.
pub fn ratios_within(values: &[f64], lo: f64, hi: f64) -> bool {
    values.windows(2).all(|w| {
        let r = w[1] / w[0];
        (w[0] == 0.0 && w[1] == 0.0) || (r >= lo && r <= hi)
    })
}

/// Fields available by name in configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `sin(x) e^{-y}`.
    SinXExpNegY,
    Constant { value: f64 },
    /// `x y^p`.
    XTimesPowerY { power: f64 },
    /// `e^{a x} sin(b y)`.
    ExpXSinY { a: f64, b: f64 },
    /// `cos(a x) e^{b y}`.
    CosXExpY { a: f64, b: f64 },
    /// `Σ c x^i y^j` from `[i, j, c]` triples.
    Polynomial { terms: Vec<(usize, usize, f64)> },
    /// `|x - center|^exponent`, exponent 1 by default; values only.
    KinkX {
        center: f64,
        #[serde(default = "unit_exponent")]
        exponent: f64,
    },
}

impl FieldSpec {
    pub fn build(&self) -> Arc<dyn AnalyticField> {
        match self {
            FieldSpec::SinXExpNegY => Arc::new(Separable::sin_x_exp_neg_y()),
            FieldSpec::Constant { value } => Arc::new(Constant(*value)),
            FieldSpec::XTimesPowerY { power } => Arc::new(Separable::x_times_power_y(*power)),
            FieldSpec::ExpXSinY { a, b } => Arc::new(Separable::exp_x_sin_y(*a, *b)),
            FieldSpec::CosXExpY { a, b } => Arc::new(Separable::cos_x_exp_y(*a, *b)),
            FieldSpec::Polynomial { terms } => Arc::new(Polynomial::new(terms.clone())),
            FieldSpec::KinkX { center, exponent } => {
                let (c, e) = (*center, *exponent);
                Arc::new(ClosureField::new(0, move |a, b, x, _| {
                    if a == 0 && b == 0 {
                        (x - c).abs().powf(e)
                    } else {
                        0.0
                    }
                }))
            }
        }
    }
}

fn unit_exponent() -> f64 {
    1.0
}

/// Data of a boundary value problem.
#[derive(Clone)]
pub enum ProblemData {
    /// Source `A u*` with Dirichlet trace of `u*`.
    Manufactured(Arc<dyn AnalyticField>),
    /// Given source with zero Dirichlet data.
    Source(Arc<dyn AnalyticField>),
}

#[derive(Clone)]
pub struct Problem {
    pub coefficients: Coefficients,
    pub domain: HalfPlaneDomain,
    pub data: ProblemData,
    pub assembly: AssemblyOptions,
    pub tol: f64,
    pub max_iter: usize,
}

/// A discrete solution with its nodal source.
#[derive(Debug, Clone)]
pub struct Solved {
    pub u: GridFunction,
    pub f: GridFunction,
    pub iterations: usize,
}

impl Problem {
    pub fn new(coefficients: Coefficients, domain: HalfPlaneDomain, data: ProblemData) -> Self {
        Self {
            coefficients,
            domain,
            data,
            assembly: AssemblyOptions::default(),
            tol: crate::discretization::DEFAULT_TOLERANCE,
            max_iter: crate::discretization::DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn grid(&self, nx: usize, ny: usize, grading: f64) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(self.domain, nx, ny, grading)?))
    }

    pub fn solve(&self, grid: &Arc<Grid>) -> Result<Solved> {
        let c = &self.coefficients;
        let (u, f, iterations) = match &self.data {
            ProblemData::Manufactured(field) => {
                if field.max_order() < 2 {
                    return Err(Error::InsufficientJetOrder {
                        required: 2,
                        available: field.max_order(),
                    });
                }
                let image = OperatorImage::new(c, field.as_ref());
                let sys = assemble_system(
                    c,
                    grid,
                    &Source::Analytic(field.as_ref()),
                    &Source::Analytic(&image),
                    &self.assembly,
                )?;
                let (u, stats) = solve_system_with_stats(&sys, self.tol, self.max_iter)?;
                (u, GridFunction::from_field(grid.clone(), &image), stats.iterations)
            }
            ProblemData::Source(field) => {
                let sys = assemble_system(c, grid, &Source::Zero, &Source::Analytic(field.as_ref()), &self.assembly)?;
                let (u, stats) = solve_system_with_stats(&sys, self.tol, self.max_iter)?;
                (u, GridFunction::from_field(grid.clone(), field.as_ref()), stats.iterations)
            }
        };
        Ok(Solved { u, f, iterations })
    }
}

/// Errors of one grid in a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub ny: usize,
    pub l2: f64,
    pub h1: f64,
    pub sup: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub grading: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `log2` of successive error ratios.
    pub l2_orders: Vec<f64>,
    pub h1_orders: Vec<f64>,
    pub sup_orders: Vec<f64>,
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Weighted `L^2` and `H^1` errors of the bilinear interpolant of `u`
/// against `exact`, both evaluated at the quadrature points.
pub fn fe_errors(u: &GridFunction, exact: &dyn AnalyticField, w: &WeightSpec) -> Result<(f64, f64)> {
    let grid = u.grid();
    let quad = CellQuadrature::new(grid, w)?;
    let (xs, ys) = (grid.xs(), grid.ys());
    let rows: Vec<(f64, f64)> = (0..grid.ny())
        .into_par_iter()
        .map(|j| {
            let hy = ys[j + 1] - ys[j];
            let (mut l2, mut grad) = (0.0, 0.0);
            for i in 0..grid.nx() {
                let hx = xs[i + 1] - xs[i];
                let (v00, v10, v01, v11) = (u.value(i, j), u.value(i + 1, j), u.value(i, j + 1), u.value(i + 1, j + 1));
                quad.for_each_point(i, j, |qp| {
                    let (s, t) = (qp.s, qp.t);
                    let uh = u.interpolate(i, j, s, t);
                    let ux = ((1.0 - t) * (v10 - v00) + t * (v11 - v01)) / hx;
                    let uy = ((1.0 - s) * (v01 - v00) + s * (v11 - v10)) / hy;
                    let e = uh - exact.value(qp.x, qp.y);
                    let ex = ux - exact.partial(1, 0, qp.x, qp.y);
                    let ey = uy - exact.partial(0, 1, qp.x, qp.y);
                    l2 += qp.weight * e * e;
                    grad += qp.weight * (qp.y * (ex * ex + ey * ey) + (1.0 + qp.y) * e * e);
                });
            }
            (l2, grad)
        })
        .collect();
    let l2: f64 = rows.iter().map(|r| r.0).sum();
    let h1: f64 = rows.iter().map(|r| r.1).sum();
    Ok((l2.sqrt(), h1.sqrt()))
}

/// Solves the manufactured problem for `field` on each grid of the ladder and
/// tabulates the errors against the exact field.
pub fn convergence_study(
    field: Arc<dyn AnalyticField>,
    c: &Coefficients,
    domain: &HalfPlaneDomain,
    grids: &[(usize, usize)],
    grading: f64,
    interior: &Region,
) -> Result<ConvergenceTable> {
    let problem = Problem::new(*c, *domain, ProblemData::Manufactured(field.clone()));
    let w = WeightSpec::from_coefficients(c);
    let mut rows = Vec::with_capacity(grids.len());
    for &(nx, ny) in grids {
        let grid = problem.grid(nx, ny, grading)?;
        let solved = problem.solve(&grid)?;
        let (l2, h1) = fe_errors(&solved.u, field.as_ref(), &w)?;
        let nodes = grid.nodes_in(interior);
        if nodes.is_empty() {
            return Err(Error::EmptyMask);
        }
        let sup = nodes
            .iter()
            .map(|&n| {
                let (i, j) = grid.node(n);
                (solved.u.values()[n] - field.value(grid.xs()[i], grid.ys()[j])).abs()
            })
            .fold(0.0, f64::max);
        log::info!("convergence {nx}x{ny}: L2 {l2:e}, H1 {h1:e}, sup {sup:e}, {} iterations", solved.iterations);
        rows.push(ConvergenceRow {
            nx,
            ny,
            l2,
            h1,
            sup,
            iterations: solved.iterations,
        });
    }
    let pick = |f: fn(&ConvergenceRow) -> f64| orders(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(ConvergenceTable {
        grading,
        l2_orders: pick(|r| r.l2),
        h1_orders: pick(|r| r.h1),
        sup_orders: pick(|r| r.sup),
        rows,
    })
}

/// Band for ratios of successive probe maxima.
pub const PROBE_BAND: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub nx: usize,
    pub ny: usize,
    /// `max |D_x^a D_y^b u|` over the strip, keyed like `partials`.
    pub maxima: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub k: usize,
    /// `(a, b)` for every `D_x^a D_y^b` with `a + b <= k`.
    pub partials: Vec<(usize, usize)>,
    pub rows: Vec<ProbeRow>,
    /// Per partial, whether successive maxima stay within [`PROBE_BAND`].
    pub stable: Vec<bool>,
    pub passed: bool,
}

/// Maxima of the discrete derivatives `D^j u`, `j <= k`, over the nodes of
/// `strip` with `y > 0`, for each function of a refinement ladder.
///
/// The Galerkin error carries a term behaving like `h^2 log y` next to the
/// axis, so third differences within a few cells of `y = 0` grow like
/// `1/h` even for smooth data. Strips meant to probe the solution rather
/// than this layer should keep a fixed physical distance from the axis
/// (see [`probe_strip`]).
pub fn smoothness_probe(ladder: &[GridFunction], k: usize, strip: &Region) -> Result<ProbeReport> {
    let partials: Vec<(usize, usize)> = (0..=k).flat_map(crate::weighted_spaces::derivative_multi_indices).collect();
    let mut rows = Vec::with_capacity(ladder.len());
    for u in ladder {
        let grid = u.grid();
        let ud = u.clone().with_derivatives(k)?;
        let nodes: Vec<usize> = grid
            .nodes_in(strip)
            .into_iter()
            .filter(|&n| grid.node(n).1 > 0)
            .collect();
        if nodes.is_empty() {
            return Err(Error::EmptyMask);
        }
        let maxima = partials
            .iter()
            .map(|&(a, b)| {
                let d = ud.derivative(a, b)?;
                Ok(nodes.iter().map(|&n| d[n].abs()).fold(0.0, f64::max))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ProbeRow {
            nx: grid.nx(),
            ny: grid.ny(),
            maxima,
        });
    }
    let stable: Vec<bool> = (0..partials.len())
        .map(|p| {
            let series: Vec<f64> = rows.iter().map(|r| r.maxima[p]).collect();
            ratios_within(&series, PROBE_BAND.0, PROBE_BAND.1)
        })
        .collect();
    let passed = stable.iter().all(|&s| s);
    Ok(ProbeReport {
        k,
        partials,
        rows,
        stable,
        passed,
    })
}

/// The strip `{x_lo <= x <= x_hi, floor < y < height}` centred in the
/// domain and covering the middle half in `x`.
pub fn probe_strip(domain: &HalfPlaneDomain, floor: f64, height: f64) -> Region {
    let q = 0.25 * (domain.x_max - domain.x_min);
    Region::Strip {
        x_min: domain.x_min + q,
        x_max: domain.x_max - q,
        y_min: floor,
        y_max: height,
    }
}

/// One estimate evaluated on every grid of a ladder.
#[derive(Debug, Clone)]
pub struct SweepTask {
    pub kind: EstimateKind,
    pub regions: EstimateRegions,
    pub params: EstimateParams,
}

/// Solves `problem` on each grid and evaluates every task on each solution.
/// Reports are ordered by grid, then by task.
pub fn run_sweep(
    problem: &Problem,
    grids: &[(usize, usize)],
    grading: f64,
    tasks: &[SweepTask],
) -> Result<Vec<EstimateReport>> {
    let mut out = Vec::new();
    for &(nx, ny) in grids {
        let grid = problem.grid(nx, ny, grading)?;
        let solved = problem.solve(&grid)?;
        let reports: Vec<Result<EstimateReport>> = tasks
            .par_iter()
            .map(|t| estimate_ratio(t.kind, &problem.coefficients, &solved.u, &solved.f, &t.regions, &t.params))
            .collect();
        for r in reports {
            out.push(r?);
        }
    }
    Ok(out)
}

/// The largest `α` in `alphas` whose Hölder-kind constant stays
/// non-increasing within `band` across the ladder of solutions.
pub fn empirical_holder_exponent(
    c: &Coefficients,
    ladder: &[Solved],
    regions: &EstimateRegions,
    alphas: &[f64],
    band: f64,
) -> Result<Option<f64>> {
    let mut best = None;
    for &alpha in alphas {
        let params = EstimateParams {
            alpha,
            ..EstimateParams::default()
        };
        let ratios = ladder
            .iter()
            .map(|s| Ok(estimate_ratio(EstimateKind::Holder, c, &s.u, &s.f, regions, &params)?.implied_constant))
            .collect::<Result<Vec<_>>>()?;
        if non_increasing_within(&ratios, band) {
            best = Some(best.map_or(alpha, |b: f64| b.max(alpha)));
        }
    }
    Ok(best)
}

pub const CSV_HEADER: &str = "kind,grid_nx,grid_ny,R,R0,z0_x,z0_y,alpha,p,left,right,ratio,runtime_ms";

/// Writes reports as CSV. Region columns are empty for subdomain pairs;
/// `runtime_ms` is written as 0 unless `timing` is set, so that output is
/// reproducible byte for byte.
pub fn write_csv(reports: &[EstimateReport], mut out: impl Write, timing: bool) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        let (rr, r0, zx, zy) = match r.regions {
            EstimateRegions::HalfBalls { z0, r, r0 } => {
                (format!("{r:e}"), format!("{r0:e}"), format!("{:e}", z0.x), format!("{:e}", z0.y))
            }
            EstimateRegions::Subdomains { .. } => Default::default(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{}",
            r.kind.as_str(),
            r.grid_nx,
            r.grid_ny,
            rr,
            r0,
            zx,
            zy,
            r.alpha,
            r.p,
            r.left,
            r.right,
            r.implied_constant,
            if timing { r.runtime_ms } else { 0 }
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in EstimateKind::ALL {
            assert_eq!(k.as_str().parse::<EstimateKind>().unwrap(), k);
        }
        assert!("nope".parse::<EstimateKind>().is_err());
    }

    #[test]
    fn band_checks() {
        assert!(non_increasing_within(&[1.0, 1.04, 1.0, 0.5], 0.05));
        assert!(!non_increasing_within(&[1.0, 1.06], 0.05));
        assert!(ratios_within(&[1.0, 1.9, 1.0], 0.5, 2.0));
        assert!(!ratios_within(&[1.0, 2.1], 0.5, 2.0));
    }

    #[test]
    fn exponent_default() {
        assert_eq!(default_exponent(1.0), 5.0);
        assert_eq!(default_exponent(3.0), 6.0);
    }
}
