//! Gauss rules and the per-cell quadrature used for every weighted integral.
//!
//! The weight `y^{β+m-1} e^{-γ sqrt(1+x^2) - μ y}` factors into an `x` part and a
//! `y` part, so each cell carries a tensor rule. Bottom cells (those touching
//! `y = 0`) integrate the singular factor `y^{β-1}` with a Gauss-Jacobi rule;
//! the remaining smooth factors are evaluated at the nodes.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::discretization::grid::Grid;
use crate::error::{Error, Result};
use crate::weighted_spaces::WeightSpec;

/// Points per direction in every cell rule.
pub const POINTS_PER_DIRECTION: usize = 4;

/// Nodes and weights of a one-dimensional rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Golub-Welsch for a monic three-term recurrence; returns nodes on the
/// reference interval and the squared first eigenvector components.
fn golub_welsch(diag: &[f64], offdiag_sq: &[f64]) -> Vec<(f64, f64)> {
    let n = diag.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            let b = offdiag_sq[i].sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Gauss-Jacobi rule for `∫_0^1 g(t) t^{p} dt`, `p > -1`.
pub fn gauss_jacobi_unit(n: usize, p: f64) -> Result<Rule1d> {
    if !(p > -1.0) {
        return Err(Error::NonpositiveBeta(p + 1.0));
    }
    // Jacobi weight (1-x)^a (1+x)^b on [-1, 1] with a = 0, b = p.
    let a = 0.0;
    let b = p;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let alpha = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        diag.push(alpha);
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let beta = if k == 0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
            } else {
                4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))
            };
            off.push(beta);
        }
    }
    let total = 1.0 / (p + 1.0);
    let pairs = golub_welsch(&diag, &off);
    Ok(Rule1d {
        nodes: pairs.iter().map(|&(x, _)| 0.5 * (1.0 + x)).collect(),
        weights: pairs.iter().map(|&(_, w)| w * total).collect(),
    })
}

/// Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Rule1d {
    gauss_jacobi_unit(n, 0.0).expect("exponent 0 is admissible")
}

/// An axis-aligned cell `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// `∫_0^h y^p e^{-μ y} dy` by the power series of the exponential.
fn bottom_moment(p: f64, mu: f64, h: f64) -> f64 {
    let mut sum = 0.0;
    let mut coeff = 1.0; // (-μ)^n / n!
    let hp = h.powf(p + 1.0);
    let mut hn = 1.0;
    for n in 0..200 {
        let term = coeff * hn / (p + 1.0 + n as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() && n > 2 {
            break;
        }
        coeff *= -mu / (n as f64 + 1.0);
        hn *= h;
    }
    sum * hp
}

/// `∫_cell y^{β+m-1+j} e^{-μ y} e^{-γ sqrt(1+x^2)} dx dy` for `j = 0..=max_power`.
///
/// Cells on the axis use exact power moments with a series for `e^{-μ y}`;
/// other cells use a 16-point Gauss-Legendre rule in `y`. The `x` factor is
/// integrated with 16 Gauss-Legendre points, which is exact when `γ = 0`.
pub fn cell_weight_moments(w: &WeightSpec, cell: &Cell, max_power: usize) -> Result<Vec<f64>> {
    if !(w.beta > 0.0) {
        return Err(Error::NonpositiveBeta(w.beta));
    }
    if cell.y0 < 0.0 || cell.y1 <= cell.y0 || cell.x1 <= cell.x0 {
        return Err(Error::InvalidGrid(format!("{cell:?} is not a cell of the closed half-plane")));
    }
    let gl = gauss_legendre_unit(16);
    let hx = cell.x1 - cell.x0;
    let x_factor: f64 = gl
        .nodes
        .iter()
        .zip(&gl.weights)
        .map(|(&t, &wt)| {
            let x = cell.x0 + hx * t;
            wt * hx * (-w.gamma * (1.0 + x * x).sqrt()).exp()
        })
        .sum();
    let base = w.beta + w.m as f64 - 1.0;
    let hy = cell.y1 - cell.y0;
    Ok((0..=max_power)
        .map(|j| {
            let p = base + j as f64;
            let y_factor = if cell.y0 == 0.0 {
                bottom_moment(p, w.mu, cell.y1)
            } else {
                gl.nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(&t, &wt)| {
                        let y = cell.y0 + hy * t;
                        wt * hy * y.powf(p) * (-w.mu * y).exp()
                    })
                    .sum()
            };
            x_factor * y_factor
        })
        .collect())
}

/// One point of a cell rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub x: f64,
    pub y: f64,
    /// Quadrature weight including the full weight function.
    pub weight: f64,
    /// Reference coordinates inside the cell.
    pub s: f64,
    pub t: f64,
}

/// Tensor rules for every cell of a grid, for one weight.
#[derive(Debug, Clone)]
pub struct CellQuadrature {
    /// Per cell column: `(x, s, weight)` with the `x` factor of the weight included.
    x_rules: Vec<Vec<(f64, f64, f64)>>,
    /// Per cell row: `(y, t, weight)` with the `y` factor of the weight included.
    y_rules: Vec<Vec<(f64, f64, f64)>>,
}

impl CellQuadrature {
    pub fn new(grid: &Grid, w: &WeightSpec) -> Result<Self> {
        Self::with_points(grid, w, POINTS_PER_DIRECTION)
    }

    pub fn with_points(grid: &Grid, w: &WeightSpec, n: usize) -> Result<Self> {
        w.validate()?;
        let gl = gauss_legendre_unit(n);
        let gj = gauss_jacobi_unit(n, w.beta - 1.0)?;
        let xs = grid.xs();
        let ys = grid.ys();
        let x_rules = xs
            .windows(2)
            .map(|c| {
                let h = c[1] - c[0];
                gl.nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(&s, &wt)| {
                        let x = c[0] + h * s;
                        (x, s, wt * h * (-w.gamma * (1.0 + x * x).sqrt()).exp())
                    })
                    .collect()
            })
            .collect();
        let m = w.m as i32;
        let y_rules = ys
            .windows(2)
            .map(|c| {
                let h = c[1] - c[0];
                if c[0] == 0.0 {
                    let scale = h.powf(w.beta);
                    gj.nodes
                        .iter()
                        .zip(&gj.weights)
                        .map(|(&t, &wt)| {
                            let y = h * t;
                            (y, t, wt * scale * (-w.mu * y).exp() * y.powi(m))
                        })
                        .collect()
                } else {
                    gl.nodes
                        .iter()
                        .zip(&gl.weights)
                        .map(|(&t, &wt)| {
                            let y = c[0] + h * t;
                            (y, t, wt * h * y.powf(w.beta - 1.0) * (-w.mu * y).exp() * y.powi(m))
                        })
                        .collect()
                }
            })
            .collect();
        Ok(Self { x_rules, y_rules })
    }

    /// Calls `f` for every quadrature point of cell `(i, j)`.
    pub fn for_each_point(&self, i: usize, j: usize, mut f: impl FnMut(&QuadPoint)) {
        for &(y, t, wy) in &self.y_rules[j] {
            for &(x, s, wx) in &self.x_rules[i] {
                f(&QuadPoint {
                    x,
                    y,
                    weight: wx * wy,
                    s,
                    t,
                });
            }
        }
    }

    pub fn cells_x(&self) -> usize {
        self.x_rules.len()
    }

    pub fn cells_y(&self) -> usize {
        self.y_rules.len()
    }
}
