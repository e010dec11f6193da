//! The weight family `𝔴_m = y^{β+m-1} e^{-γ sqrt(1+x^2) - μ y}` and discrete
//! evaluators for the weighted Sobolev and cycloidal Hölder norms.
//!
//! Integrals use the per-cell rules of [`CellQuadrature`], with nodal
//! derivative fields interpolated bilinearly to the quadrature points. The
//! vector `D^j v` collects `D_x^{j-m} D_y^m v` for `m = 0..=j`, each mixed
//! partial counted once.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::grid::{Grid, GridFunction};
use crate::discretization::quadrature::{CellQuadrature, QuadPoint};
use crate::error::{Error, Result};
use crate::geometry::{koch_distance_unchecked, Point, Region};
use crate::heston_operator::Coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    #[serde(default)]
    pub m: u32,
}

impl WeightSpec {
    /// The weight `𝔴` attached to validated coefficients.
    pub fn from_coefficients(c: &Coefficients) -> Self {
        let d = c.derived();
        Self {
            beta: d.beta,
            mu: d.mu,
            gamma: c.gamma(),
            m: 0,
        }
    }

    /// Lebesgue measure.
    pub fn lebesgue() -> Self {
        Self {
            beta: 1.0,
            mu: 0.0,
            gamma: 0.0,
            m: 0,
        }
    }

    /// The pure power `y^{β-1}`.
    pub fn power(beta: f64) -> Self {
        Self {
            beta,
            mu: 0.0,
            gamma: 0.0,
            m: 0,
        }
    }

    /// `𝔴_{m + extra}`.
    pub fn shifted(&self, extra: u32) -> Self {
        Self {
            m: self.m + extra,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("mu", self.mu), ("gamma", self.gamma)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter(name));
            }
        }
        if self.beta <= 0.0 {
            return Err(Error::NonpositiveBeta(self.beta));
        }
        if self.gamma < 0.0 {
            return Err(Error::NegativeGamma(self.gamma));
        }
        if self.mu < 0.0 {
            return Err(Error::InvalidCoefficients(format!("weight rate mu = {} is negative", self.mu)));
        }
        Ok(())
    }
}

pub fn weight_value(w: &WeightSpec, p: &Point) -> Result<f64> {
    if !(p.y > 0.0) {
        return Err(Error::NonpositiveY(p.y));
    }
    Ok(p.y.powf(w.beta + w.m as f64 - 1.0) * (-w.gamma * (1.0 + p.x * p.x).sqrt() - w.mu * p.y).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceTag {
    Lp,
    H1,
    H2,
    /// `H^{k+2}`.
    Hk,
    /// `𝓗^{k+2}`, with the mixed `y`-derivatives carried by `𝔴_m`.
    #[serde(alias = "calHk")]
    CalHk,
    Wkp,
    Calphas,
    Ckalphas,
    /// `C^{k,2+α}_s`.
    Ck2alphas,
    C11s,
}

impl std::str::FromStr for SpaceTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Lp" => Self::Lp,
            "H1" => Self::H1,
            "H2" => Self::H2,
            "Hk" => Self::Hk,
            "calHk" | "CalHk" => Self::CalHk,
            "Wkp" => Self::Wkp,
            "Calphas" => Self::Calphas,
            "Ckalphas" => Self::Ckalphas,
            "Ck2alphas" => Self::Ck2alphas,
            "C11s" => Self::C11s,
            other => return Err(Error::UnsupportedTag(other.to_string())),
        })
    }
}

impl SpaceTag {
    pub const ALL: [SpaceTag; 10] = [
        Self::Lp,
        Self::H1,
        Self::H2,
        Self::Hk,
        Self::CalHk,
        Self::Wkp,
        Self::Calphas,
        Self::Ckalphas,
        Self::Ck2alphas,
        Self::C11s,
    ];

    /// Derivative order the evaluator reads for order parameter `k`.
    pub fn required_order(&self, k: usize) -> usize {
        match self {
            Self::Lp | Self::Calphas => 0,
            Self::H1 => 1,
            Self::H2 | Self::C11s => 2,
            Self::Hk | Self::CalHk | Self::Ck2alphas => k + 2,
            Self::Wkp | Self::Ckalphas => k,
        }
    }

    pub fn is_holder(&self) -> bool {
        matches!(self, Self::Calphas | Self::Ckalphas | Self::Ck2alphas)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRequest {
    pub tag: SpaceTag,
    pub k: usize,
    pub p: f64,
    pub alpha: f64,
    pub weight: WeightSpec,
    pub region: Region,
}

impl NormRequest {
    pub fn new(tag: SpaceTag, weight: WeightSpec) -> Self {
        Self {
            tag,
            k: 0,
            p: 2.0,
            alpha: 0.5,
            weight,
            region: Region::Whole,
        }
    }

    pub fn order(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn exponent(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        if !(self.p >= 1.0) {
            return Err(Error::InvalidExponent(self.p));
        }
        if self.tag.is_holder() && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        Ok(())
    }
}

/// Partials forming `D^j`.
pub fn derivative_multi_indices(j: usize) -> Vec<(usize, usize)> {
    (0..=j).map(|m| (j - m, m)).collect()
}

/// Sums `integrand(point, fields)` over the quadrature points of `region`.
/// `fields` holds the bilinear interpolants of the listed nodal arrays.
/// Rows are summed independently and combined in row order, so the result
/// does not depend on the thread count.
pub fn integrate_fields(
    grid: &Grid,
    quad: &CellQuadrature,
    region: &Region,
    fields: &[&[f64]],
    integrand: impl Fn(&QuadPoint, &[f64]) -> f64 + Sync,
) -> Result<f64> {
    let rows: Vec<(f64, bool)> = (0..grid.ny())
        .into_par_iter()
        .map(|j| {
            let mut buf = vec![0.0; fields.len()];
            let mut sum = 0.0;
            let mut hit = false;
            for i in 0..grid.nx() {
                quad.for_each_point(i, j, |qp| {
                    if !region.contains(&Point::new(qp.x, qp.y)) {
                        return;
                    }
                    hit = true;
                    for (b, f) in buf.iter_mut().zip(fields) {
                        *b = GridFunction::interpolate_field(grid, f, i, j, qp.s, qp.t);
                    }
                    sum += qp.weight * integrand(qp, &buf);
                });
            }
            (sum, hit)
        })
        .collect();
    if !rows.iter().any(|r| r.1) {
        return Err(Error::EmptyMask);
    }
    Ok(rows.iter().map(|r| r.0).sum())
}

pub fn weighted_lp_norm(u: &GridFunction, p: f64, w: &WeightSpec, region: &Region) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let quad = CellQuadrature::new(u.grid(), w)?;
    let s = integrate_fields(u.grid(), &quad, region, &[u.values()], |_, f| f[0].abs().powf(p))?;
    Ok(s.powf(1.0 / p))
}

/// Integral of `factor(y) y^shift |D^{...}|^2` over a list of partials.
struct Block {
    factor: fn(f64) -> f64,
    shift: u32,
    partials: Vec<(usize, usize)>,
}

fn y_sq(y: f64) -> f64 {
    y * y
}
fn y_lin(y: f64) -> f64 {
    y
}
fn one_plus_y_sq(y: f64) -> f64 {
    (1.0 + y) * (1.0 + y)
}
fn one_plus_y(y: f64) -> f64 {
    1.0 + y
}

fn lower_blocks_h(top: usize) -> Vec<Block> {
    // Σ_{j=1}^{top} (1+y)^2 |D^j v|^2 + (1+y) v^2
    let mut blocks: Vec<Block> = (1..=top)
        .map(|j| Block {
            factor: one_plus_y_sq,
            shift: 0,
            partials: derivative_multi_indices(j),
        })
        .collect();
    blocks.push(Block {
        factor: one_plus_y,
        shift: 0,
        partials: vec![(0, 0)],
    });
    blocks
}

fn blocks_for(tag: SpaceTag, k: usize) -> Vec<Block> {
    match tag {
        SpaceTag::H1 => vec![
            Block {
                factor: y_lin,
                shift: 0,
                partials: derivative_multi_indices(1),
            },
            Block {
                factor: one_plus_y,
                shift: 0,
                partials: vec![(0, 0)],
            },
        ],
        SpaceTag::H2 => blocks_for(SpaceTag::Hk, 0),
        SpaceTag::Hk => {
            let mut b = vec![Block {
                factor: y_sq,
                shift: 0,
                partials: derivative_multi_indices(k + 2),
            }];
            b.extend(lower_blocks_h(k + 1));
            b
        }
        SpaceTag::CalHk => {
            let mut b = vec![Block {
                factor: y_sq,
                shift: 0,
                partials: vec![(k + 2, 0), (k + 1, 1), (k, 2)],
            }];
            for m in 1..=k {
                b.push(Block {
                    factor: y_sq,
                    shift: m as u32,
                    partials: vec![(k - m, m + 2)],
                });
            }
            for j in 0..=k {
                b.push(Block {
                    factor: one_plus_y_sq,
                    shift: 0,
                    partials: vec![(j + 1, 0), (j, 1)],
                });
            }
            for j in 1..=k {
                for m in 1..=j {
                    b.push(Block {
                        factor: one_plus_y_sq,
                        shift: m as u32,
                        partials: vec![(j - m, m + 1)],
                    });
                }
            }
            b.push(Block {
                factor: one_plus_y,
                shift: 0,
                partials: vec![(0, 0)],
            });
            b
        }
        _ => unreachable!("not a quadratic Sobolev tag"),
    }
}

fn quadratic_norm(u: &GridFunction, req: &NormRequest, blocks: &[Block]) -> Result<f64> {
    let grid = u.grid();
    let mut keys: Vec<(usize, usize)> = blocks.iter().flat_map(|b| b.partials.iter().copied()).collect();
    keys.sort();
    keys.dedup();
    let fields: Vec<&[f64]> = keys.iter().map(|&(a, b)| u.derivative(a, b)).collect::<Result<_>>()?;
    let slots: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| b.partials.iter().map(|p| keys.binary_search(p).unwrap()).collect())
        .collect();
    let quad = CellQuadrature::new(grid, &req.weight)?;
    let total = integrate_fields(grid, &quad, &req.region, &fields, |qp, f| {
        blocks
            .iter()
            .zip(&slots)
            .map(|(b, s)| {
                let sq: f64 = s.iter().map(|&i| f[i] * f[i]).sum();
                (b.factor)(qp.y) * qp.y.powi(b.shift as i32) * sq
            })
            .sum()
    })?;
    Ok(total.sqrt())
}

fn wkp_norm(u: &GridFunction, req: &NormRequest) -> Result<f64> {
    let grid = u.grid();
    let levels: Vec<Vec<(usize, usize)>> = (0..=req.k).map(derivative_multi_indices).collect();
    let keys: Vec<(usize, usize)> = levels.iter().flatten().copied().collect();
    let fields: Vec<&[f64]> = keys.iter().map(|&(a, b)| u.derivative(a, b)).collect::<Result<_>>()?;
    let quad = CellQuadrature::new(grid, &req.weight)?;
    let p = req.p;
    let total = integrate_fields(grid, &quad, &req.region, &fields, |_, f| {
        let mut off = 0;
        let mut sum = 0.0;
        for lvl in &levels {
            let sq: f64 = f[off..off + lvl.len()].iter().map(|v| v * v).sum();
            sum += sq.powf(p / 2.0);
            off += lvl.len();
        }
        sum
    })?;
    Ok(total.powf(1.0 / p))
}

/// Node indices of `region`, optionally restricted to `y > 0`.
fn region_nodes(grid: &Grid, region: &Region, positive_only: bool) -> Result<Vec<usize>> {
    let nodes: Vec<usize> = grid
        .nodes_in(region)
        .into_iter()
        .filter(|&n| !positive_only || grid.node(n).1 > 0)
        .collect();
    if nodes.is_empty() {
        Err(Error::EmptyMask)
    } else {
        Ok(nodes)
    }
}

fn sup_of(nodes: &[usize], field: &dyn Fn(usize) -> f64) -> f64 {
    nodes.iter().map(|&n| field(n).abs()).fold(0.0, f64::max)
}

fn c11s_norm(u: &GridFunction, req: &NormRequest) -> Result<f64> {
    let grid = u.grid();
    let nodes = region_nodes(grid, &req.region, false)?;
    let d2: Vec<&[f64]> = derivative_multi_indices(2)
        .iter()
        .map(|&(a, b)| u.derivative(a, b))
        .collect::<Result<_>>()?;
    let d1: Vec<&[f64]> = derivative_multi_indices(1)
        .iter()
        .map(|&(a, b)| u.derivative(a, b))
        .collect::<Result<_>>()?;
    let ys = grid.ys();
    let y_of = |n: usize| ys[grid.node(n).1];
    let euclid = |fs: &[&[f64]], n: usize| fs.iter().map(|f| f[n] * f[n]).sum::<f64>().sqrt();
    let top = sup_of(&nodes, &|n| y_of(n) * euclid(&d2, n));
    let mid = sup_of(&nodes, &|n| euclid(&d1, n));
    let low = sup_of(&nodes, &|n| u.values()[n]);
    Ok(top + mid + low)
}

pub fn sobolev_norm(u: &GridFunction, req: &NormRequest) -> Result<f64> {
    req.validate()?;
    if req.tag.is_holder() {
        return Err(Error::UnsupportedTag(format!("{:?} is a Hoelder norm", req.tag)));
    }
    u.require_order(req.tag.required_order(req.k))?;
    match req.tag {
        SpaceTag::Lp => weighted_lp_norm(u, req.p, &req.weight, &req.region),
        SpaceTag::H1 | SpaceTag::H2 | SpaceTag::Hk => quadratic_norm(u, req, &blocks_for(req.tag, req.k)),
        SpaceTag::CalHk if req.k == 0 => quadratic_norm(u, req, &blocks_for(SpaceTag::H2, 0)),
        SpaceTag::CalHk => quadratic_norm(u, req, &blocks_for(SpaceTag::CalHk, req.k)),
        SpaceTag::Wkp => wkp_norm(u, req),
        SpaceTag::C11s => c11s_norm(u, req),
        _ => unreachable!(),
    }
}

/// Grids with at most this many nodes per side use every node pair.
const EXACT_PAIR_SIDE: usize = 65;
/// Random pairs drawn on larger grids, in addition to neighbouring pairs.
pub const SAMPLED_PAIRS: usize = 1_000_000;
const PAIR_SEED: u64 = 0x5EED_C0DE;

/// Node pairs over which the Hölder quotients are maximised.
fn holder_pairs(grid: &Grid, nodes: &[usize]) -> Vec<(usize, usize)> {
    let n = nodes.len();
    if grid.nx() < EXACT_PAIR_SIDE && grid.ny() < EXACT_PAIR_SIDE {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in (a + 1)..n {
                pairs.push((nodes[a], nodes[b]));
            }
        }
        return pairs;
    }
    let mut in_set = vec![false; grid.node_count()];
    for &v in nodes {
        in_set[v] = true;
    }
    let mut pairs = Vec::new();
    for &v in nodes {
        let (i, j) = grid.node(v);
        for (di, dj) in [(1usize, 0usize), (0, 1), (1, 1)] {
            if i + di <= grid.nx() && j + dj <= grid.ny() {
                let w = grid.index(i + di, j + dj);
                if in_set[w] {
                    pairs.push((v, w));
                }
            }
        }
        if i >= 1 && j < grid.ny() {
            let w = grid.index(i - 1, j + 1);
            if in_set[w] {
                pairs.push((v, w));
            }
        }
    }
    if n > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SEED);
        for _ in 0..SAMPLED_PAIRS {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            pairs.push((nodes[a], nodes[b]));
        }
    }
    pairs
}

/// `sup |f(z1) - f(z2)| / s(z1, z2)^α` for each field over the given pairs.
pub fn holder_seminorms(grid: &Grid, pairs: &[(usize, usize)], fields: &[Vec<f64>], alpha: f64) -> Vec<f64> {
    let pts: Vec<Point> = (0..grid.node_count())
        .map(|n| {
            let (i, j) = grid.node(n);
            grid.point(i, j)
        })
        .collect();
    pairs
        .par_chunks(8192)
        .map(|chunk| {
            let mut best = vec![0.0f64; fields.len()];
            for &(a, b) in chunk {
                let s = koch_distance_unchecked(&pts[a], &pts[b]);
                if s == 0.0 {
                    continue;
                }
                let inv = if alpha == 0.5 { 1.0 / s.sqrt() } else { s.powf(-alpha) };
                for (m, f) in best.iter_mut().zip(fields) {
                    *m = m.max((f[a] - f[b]).abs() * inv);
                }
            }
            best
        })
        .reduce(
            || vec![0.0; fields.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        )
}

/// `Σ_fields (sup |f| + [f]_α)` over `nodes`.
fn sum_of_holder_norms(grid: &Grid, nodes: &[usize], fields: &[Vec<f64>], alpha: f64) -> f64 {
    let pairs = holder_pairs(grid, nodes);
    let semi = holder_seminorms(grid, &pairs, fields, alpha);
    fields
        .iter()
        .zip(&semi)
        .map(|(f, s)| sup_of(nodes, &|n| f[n]) + s)
        .sum()
}

/// Nodal fields of `D^j u` for `j <= k`.
fn jet_fields(u: &GridFunction, k: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for j in 0..=k {
        for (a, b) in derivative_multi_indices(j) {
            out.push(u.derivative(a, b)?.to_vec());
        }
    }
    Ok(out)
}

/// Nodal fields of `D^j (y D^2 u)` for `j <= k` by the Leibniz rule
/// `D_x^a D_y^b (y w) = y D_x^a D_y^b w + b D_x^a D_y^{b-1} w`.
fn y_damped_fields(u: &GridFunction, k: usize) -> Result<Vec<Vec<f64>>> {
    let grid = u.grid();
    let ys = grid.ys();
    let mut out = Vec::new();
    for (c, d) in derivative_multi_indices(2) {
        for j in 0..=k {
            for (a, b) in derivative_multi_indices(j) {
                let main = u.derivative(a + c, b + d)?;
                let lower = if b > 0 { Some(u.derivative(a + c, b + d - 1)?) } else { None };
                let f = (0..grid.node_count())
                    .map(|n| {
                        let y = ys[grid.node(n).1];
                        y * main[n] + lower.map_or(0.0, |l| b as f64 * l[n])
                    })
                    .collect();
                out.push(f);
            }
        }
    }
    Ok(out)
}

pub fn holder_norm(u: &GridFunction, req: &NormRequest) -> Result<f64> {
    req.validate()?;
    let grid = u.grid();
    match req.tag {
        SpaceTag::Calphas => {
            let nodes = region_nodes(grid, &req.region, false)?;
            Ok(sum_of_holder_norms(grid, &nodes, &[u.values().to_vec()], req.alpha))
        }
        SpaceTag::Ckalphas => {
            u.require_order(req.k)?;
            let nodes = region_nodes(grid, &req.region, false)?;
            Ok(sum_of_holder_norms(grid, &nodes, &jet_fields(u, req.k)?, req.alpha))
        }
        SpaceTag::Ck2alphas => {
            u.require_order(req.k + 2)?;
            let nodes = region_nodes(grid, &req.region, true)?;
            let mut fields = jet_fields(u, req.k + 1)?;
            fields.extend(y_damped_fields(u, req.k)?);
            Ok(sum_of_holder_norms(grid, &nodes, &fields, req.alpha))
        }
        other => Err(Error::UnsupportedTag(format!("{other:?} is not a Hoelder norm"))),
    }
}

/// Any tag.
pub fn norm(u: &GridFunction, req: &NormRequest) -> Result<f64> {
    if req.tag.is_holder() {
        holder_norm(u, req)
    } else {
        sobolev_norm(u, req)
    }
}

/// Continuity of `y D^2 (D^k u)` up to `y = 0`: the value on the axis is
/// compared with the linear extrapolation of the first two rows above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryExtension {
    /// Largest deviation between axis values and extrapolated values.
    pub max_deviation: f64,
    /// Largest magnitude of the first interior row, for relative comparison.
    pub scale: f64,
}

impl BoundaryExtension {
    pub fn within(&self, rel_tol: f64) -> bool {
        self.max_deviation <= rel_tol * self.scale.max(f64::MIN_POSITIVE)
    }
}

pub fn y_damped_boundary_extension(u: &GridFunction, k: usize, region: &Region) -> Result<BoundaryExtension> {
    u.require_order(k + 2)?;
    let grid = u.grid();
    let fields = y_damped_fields(u, k)?;
    let ys = grid.ys();
    let (y1, y2) = (ys[1], ys[2]);
    let mut report = BoundaryExtension {
        max_deviation: 0.0,
        scale: 0.0,
    };
    let mut any = false;
    for i in 0..=grid.nx() {
        if !region.contains(&grid.point(i, 0)) {
            continue;
        }
        any = true;
        let (n0, n1, n2) = (grid.index(i, 0), grid.index(i, 1), grid.index(i, 2));
        for f in &fields {
            let extrapolated = f[n1] - y1 * (f[n2] - f[n1]) / (y2 - y1);
            report.max_deviation = report.max_deviation.max((f[n0] - extrapolated).abs());
            report.scale = report.scale.max(f[n1].abs());
        }
    }
    if any {
        Ok(report)
    } else {
        Err(Error::EmptyMask)
    }
}
