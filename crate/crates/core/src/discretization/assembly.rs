//! Galerkin assembly of
//!
//! ```text
//! a(u, v) = 1/2 ∫ (u_x v_x + ϱσ u_y v_x + ϱσ u_x v_y + σ^2 u_y v_y) y 𝔴
//!         - γ/2 ∫ (u_x + ϱσ u_y) v x/sqrt(1+x^2) y 𝔴
//!         - ∫ (a1 y + b1) u_x v 𝔴 + ∫ c0 u v 𝔴
//! ```
//!
//! with continuous bilinear elements. Dirichlet values are imposed on the
//! side and top edges only; nodes on `y = 0` stay unknowns.

use std::sync::Arc;

use rayon::prelude::*;

use crate::analytic::AnalyticField;
use crate::discretization::grid::{Grid, GridFunction};
use crate::discretization::quadrature::{CellQuadrature, QuadPoint};
use crate::error::{Error, Result};
use crate::heston_operator::Coefficients;
use crate::weighted_spaces::WeightSpec;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries in the order they appear in `triplets`.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let row = |r: usize| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>()
        };
        if self.nrows > 1 << 16 {
            y.par_iter_mut().enumerate().for_each(|(r, out)| *out = row(r));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = row(r);
            }
        }
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Removes every stored entry of row `r`.
    pub fn clear_row(&mut self, r: usize) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx.drain(a..b);
        self.values.drain(a..b);
        for p in &mut self.row_ptr[r + 1..] {
            *p -= b - a;
        }
    }

    /// `P A P^T` for the node relabelling `n -> perm[n]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                t.push((perm[r], perm[c], v));
            }
        }
        Self::from_triplets(self.nrows, self.ncols, t)
    }
}

/// Right-hand sides and boundary data.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    Zero,
    Nodal(&'a GridFunction),
    Analytic(&'a dyn AnalyticField),
}

impl Source<'_> {
    fn at_node(&self, grid: &Grid, i: usize, j: usize) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Nodal(g) => g.value(i, j),
            Source::Analytic(f) => f.value(grid.xs()[i], grid.ys()[j]),
        }
    }

    fn at_point(&self, i: usize, j: usize, qp: &QuadPoint) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Nodal(g) => g.interpolate(i, j, qp.s, qp.t),
            Source::Analytic(f) => f.value(qp.x, qp.y),
        }
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        match self {
            Source::Nodal(g) if **g.grid() != *grid => Err(Error::GridMismatch),
            _ => Ok(()),
        }
    }
}

/// Deliberate assembly defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyFault {
    /// Reverses the sign of the diffusion block.
    FlipDiffusionSign,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyOptions {
    pub fault: Option<AssemblyFault>,
}

/// Element matrices and load vectors for one cell; local nodes are ordered
/// `(i, j), (i+1, j), (i, j+1), (i+1, j+1)`.
fn element(
    c: &Coefficients,
    quad: &CellQuadrature,
    grid: &Grid,
    i: usize,
    j: usize,
    f: &Source,
    opts: &AssemblyOptions,
) -> ([[f64; 4]; 4], [f64; 4]) {
    let d = c.derived();
    let rs = c.rho() * c.sigma();
    let s2 = c.sigma() * c.sigma();
    let diff_sign = match opts.fault {
        Some(AssemblyFault::FlipDiffusionSign) => -1.0,
        None => 1.0,
    };
    let hx = grid.xs()[i + 1] - grid.xs()[i];
    let hy = grid.ys()[j + 1] - grid.ys()[j];
    let mut k = [[0.0; 4]; 4];
    let mut load = [0.0; 4];
    quad.for_each_point(i, j, |qp| {
        let (s, t) = (qp.s, qp.t);
        let phi = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
        let px = [-(1.0 - t) / hx, (1.0 - t) / hx, -t / hx, t / hx];
        let py = [-(1.0 - s) / hy, -s / hy, (1.0 - s) / hy, s / hy];
        let y = qp.y;
        let w = qp.weight;
        let drift_x = qp.x / (1.0 + qp.x * qp.x).sqrt();
        let first = d.a1 * y + d.b1;
        for (row, kr) in k.iter_mut().enumerate() {
            for (col, kv) in kr.iter_mut().enumerate() {
                let grad = 0.5
                    * (px[col] * px[row] + rs * py[col] * px[row] + rs * px[col] * py[row] + s2 * py[col] * py[row])
                    * y;
                let gamma_block = -0.5 * c.gamma() * (px[col] + rs * py[col]) * phi[row] * drift_x * y;
                let first_order = -first * px[col] * phi[row];
                let mass = c.c0() * phi[col] * phi[row];
                *kv += w * (diff_sign * grad + gamma_block + first_order + mass);
            }
        }
        let fv = f.at_point(i, j, qp);
        if fv != 0.0 {
            for (l, p) in load.iter_mut().zip(&phi) {
                *l += w * fv * p;
            }
        }
    });
    (k, load)
}

fn cell_nodes(grid: &Grid, i: usize, j: usize) -> [usize; 4] {
    [
        grid.index(i, j),
        grid.index(i + 1, j),
        grid.index(i, j + 1),
        grid.index(i + 1, j + 1),
    ]
}

/// The bilinear form on all nodes (row = test node, column = trial node) and
/// the load vector `(f, φ_n)_𝔴`, with node `n` stored at index `perm[n]`.
pub fn assemble_full(
    c: &Coefficients,
    grid: &Grid,
    f: &Source,
    opts: &AssemblyOptions,
    perm: Option<&[usize]>,
) -> Result<(CsrMatrix, Vec<f64>)> {
    f.check_grid(grid)?;
    let n = grid.node_count();
    if let Some(p) = perm {
        let mut seen = vec![false; n];
        if p.len() != n || p.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
            return Err(Error::InvalidGrid("node permutation is not a bijection".into()));
        }
    }
    let label = |v: usize| perm.map_or(v, |p| p[v]);
    let quad = CellQuadrature::new(grid, &WeightSpec::from_coefficients(c))?;
    let rows: Vec<(Vec<(usize, usize, f64)>, Vec<(usize, f64)>)> = (0..grid.ny())
        .into_par_iter()
        .map(|j| {
            let mut trip = Vec::with_capacity(16 * grid.nx());
            let mut loads = Vec::with_capacity(4 * grid.nx());
            for i in 0..grid.nx() {
                let (k, l) = element(c, &quad, grid, i, j, f, opts);
                let nodes = cell_nodes(grid, i, j);
                for r in 0..4 {
                    for col in 0..4 {
                        trip.push((label(nodes[r]), label(nodes[col]), k[r][col]));
                    }
                    loads.push((label(nodes[r]), l[r]));
                }
            }
            (trip, loads)
        })
        .collect();
    let mut triplets = Vec::with_capacity(16 * grid.nx() * grid.ny());
    let mut load = vec![0.0; n];
    for (t, l) in rows {
        triplets.extend(t);
        for (r, v) in l {
            load[r] += v;
        }
    }
    Ok((CsrMatrix::from_triplets(n, n, triplets), load))
}

/// The reduced system on the non-Dirichlet nodes.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Node index of each unknown.
    pub unknowns: Vec<usize>,
    /// Nodal vector carrying the Dirichlet values on the side and top edges.
    pub boundary_values: Vec<f64>,
    pub grid: Arc<Grid>,
    pub c0: f64,
}

impl LinearSystem {
    /// Inserts unknown values into the nodal vector with the boundary values.
    pub fn expand(&self, x: &[f64]) -> Result<GridFunction> {
        let mut v = self.boundary_values.clone();
        for (&n, &xi) in self.unknowns.iter().zip(x) {
            v[n] = xi;
        }
        GridFunction::new(self.grid.clone(), v)
    }

    /// Unknown index of each node, `None` for Dirichlet nodes.
    pub fn unknown_map(&self) -> Vec<Option<usize>> {
        let mut m = vec![None; self.grid.node_count()];
        for (k, &n) in self.unknowns.iter().enumerate() {
            m[n] = Some(k);
        }
        m
    }
}

pub fn assemble_system(
    c: &Coefficients,
    grid: &Arc<Grid>,
    dirichlet: &Source,
    f: &Source,
    opts: &AssemblyOptions,
) -> Result<LinearSystem> {
    if grid.nx() < 2 || grid.ny() < 2 {
        return Err(Error::GridTooCoarse("fewer than 3 nodes per direction".into()));
    }
    let beta = c.derived().beta;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidCoefficients(format!("weight exponent beta = {beta}")));
    }
    dirichlet.check_grid(grid)?;
    let (full, load) = assemble_full(c, grid, f, opts, None)?;
    let n = grid.node_count();
    let mut boundary_values = vec![0.0; n];
    let mut map = vec![None; n];
    let mut unknowns = Vec::new();
    for v in 0..n {
        let (i, j) = grid.node(v);
        if grid.is_dirichlet(i, j) {
            boundary_values[v] = dirichlet.at_node(grid, i, j);
        } else {
            map[v] = Some(unknowns.len());
            unknowns.push(v);
        }
    }
    let mut row_ptr = Vec::with_capacity(unknowns.len() + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::with_capacity(full.nnz());
    let mut values = Vec::with_capacity(full.nnz());
    let mut rhs = Vec::with_capacity(unknowns.len());
    for &v in &unknowns {
        let (cols, vals) = full.row(v);
        let mut b = load[v];
        for (&col, &a) in cols.iter().zip(vals) {
            match map[col] {
                Some(k) => {
                    col_idx.push(k);
                    values.push(a);
                }
                None => b -= a * boundary_values[col],
            }
        }
        if row_ptr.last() == Some(&col_idx.len()) {
            return Err(Error::SingularSystem(format!("row of node {v} is empty")));
        }
        row_ptr.push(col_idx.len());
        rhs.push(b);
    }
    let m = unknowns.len();
    Ok(LinearSystem {
        matrix: CsrMatrix {
            nrows: m,
            ncols: m,
            row_ptr,
            col_idx,
            values,
        },
        rhs,
        unknowns,
        boundary_values,
        grid: grid.clone(),
        c0: c.c0(),
    })
}
