//! Tensor grids on half-plane rectangles and nodal grid functions.
//!
//! Nodes are stored row by row starting at the bottom row `y = 0`; the node
//! `(i, j)` sits at `(x_i, y_j)` with index `j (nx + 1) + i`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::analytic::AnalyticField;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPart, HalfPlaneDomain, Point, Region};

/// Highest derivative order the stencils support.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: HalfPlaneDomain,
    nx: usize,
    ny: usize,
    grading: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Grid {
    /// `nx x ny` cells with `y_j = y_max (j / ny)^g`.
    pub fn new(domain: HalfPlaneDomain, nx: usize, ny: usize, grading: f64) -> Result<Self> {
        domain.validate()?;
        if nx < 2 || ny < 2 {
            return Err(Error::GridTooCoarse(format!(
                "{nx} x {ny} cells; at least 3 nodes per direction are required"
            )));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::InvalidGrid(format!("grading exponent {grading} must be >= 1")));
        }
        let hx = (domain.x_max - domain.x_min) / nx as f64;
        let mut xs: Vec<f64> = (0..=nx).map(|i| domain.x_min + i as f64 * hx).collect();
        xs[nx] = domain.x_max;
        let mut ys: Vec<f64> = (0..=ny)
            .map(|j| {
                let t = j as f64 / ny as f64;
                if grading == 1.0 {
                    domain.y_max * t
                } else {
                    domain.y_max * t.powf(grading)
                }
            })
            .collect();
        ys[0] = 0.0;
        ys[ny] = domain.y_max;
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("y-nodes are not strictly increasing".into()));
        }
        Ok(Self {
            domain,
            nx,
            ny,
            grading,
            xs,
            ys,
        })
    }

    pub fn uniform(domain: HalfPlaneDomain, nx: usize, ny: usize) -> Result<Self> {
        Self::new(domain, nx, ny, 1.0)
    }

    pub fn domain(&self) -> &HalfPlaneDomain {
        &self.domain
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn grading(&self) -> f64 {
        self.grading
    }
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
    /// Uniform spacing in `x`.
    pub fn hx(&self) -> f64 {
        (self.domain.x_max - self.domain.x_min) / self.nx as f64
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Inverse of [`Grid::index`].
    pub fn node(&self, n: usize) -> (usize, usize) {
        (n % (self.nx + 1), n / (self.nx + 1))
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.xs[i], self.ys[j])
    }

    pub fn classify_node(&self, i: usize, j: usize) -> BoundaryPart {
        if i == 0 || i == self.nx || j == self.ny {
            BoundaryPart::NonDegenerate
        } else if j == 0 {
            BoundaryPart::Degenerate
        } else {
            BoundaryPart::Interior
        }
    }

    pub fn is_dirichlet(&self, i: usize, j: usize) -> bool {
        self.classify_node(i, j) == BoundaryPart::NonDegenerate
    }

    /// Node indices whose points lie in `region`.
    pub fn nodes_in(&self, region: &Region) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&n| {
                let (i, j) = self.node(n);
                region.contains(&self.point(i, j))
            })
            .collect()
    }

    /// Same grid on a domain shifted by `dx` in `x`.
    pub fn translated(&self, dx: f64) -> Result<Self> {
        Self::new(self.domain.translated(dx), self.nx, self.ny, self.grading)
    }
}

/// Finite-difference weights for the `m`-th derivative at `z` on nodes `x`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len() - 1;
    let mut c = vec![vec![0.0; m + 1]; n + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..=n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Stencil for derivative order `d` at every node of a line.
#[derive(Debug, Clone)]
struct LineStencil {
    entries: Vec<(usize, Vec<f64>)>,
}

impl LineStencil {
    /// Centered stencils of width 3 (orders 1, 2) or 5 (orders 3, 4) where
    /// they fit, otherwise one-sided stencils with `d + 2` nodes; all are
    /// second-order accurate.
    fn new(nodes: &[f64], d: usize) -> Self {
        let n = nodes.len();
        let centered = 2 * d.div_ceil(2) + 1;
        let half = centered / 2;
        let one_sided = d + 2;
        let entries = (0..n)
            .map(|i| {
                let (start, len) = if i >= half && i + half < n {
                    (i - half, centered)
                } else if i < half {
                    (0, one_sided)
                } else {
                    (n - one_sided, one_sided)
                };
                let offsets: Vec<f64> = nodes[start..start + len].iter().map(|&v| v - nodes[i]).collect();
                (start, fornberg_weights(0.0, &offsets, d))
            })
            .collect();
        Self { entries }
    }
}

fn apply_x(grid: &Grid, st: &LineStencil, input: &[f64]) -> Vec<f64> {
    let w = grid.nx + 1;
    let mut out = vec![0.0; input.len()];
    for j in 0..=grid.ny {
        let row = &input[j * w..(j + 1) * w];
        for (i, (start, weights)) in st.entries.iter().enumerate() {
            out[j * w + i] = weights.iter().enumerate().map(|(k, c)| c * row[start + k]).sum();
        }
    }
    out
}

fn apply_y(grid: &Grid, st: &LineStencil, input: &[f64]) -> Vec<f64> {
    let w = grid.nx + 1;
    let mut out = vec![0.0; input.len()];
    for (j, (start, weights)) in st.entries.iter().enumerate() {
        for i in 0..w {
            out[j * w + i] = weights
                .iter()
                .enumerate()
                .map(|(k, c)| c * input[(start + k) * w + i])
                .sum();
        }
    }
    out
}

/// Derivative fields keyed by `(a, b)` for `D_x^a D_y^b`, including `(0, 0)`.
pub type DerivativeFields = BTreeMap<(usize, usize), Vec<f64>>;

/// All `D_x^a D_y^b u` with `a + b <= order`; mixed derivatives apply the
/// `x` stencil first and the `y` stencil to its result.
pub fn discrete_derivatives(u: &GridFunction, order: usize) -> Result<DerivativeFields> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::OrderTooHigh(order));
    }
    let g = &u.grid;
    let need = order + 2;
    if order > 0 && (g.nx + 1 < need || g.ny + 1 < need) {
        return Err(Error::GridTooCoarse(format!(
            "order {order} needs {need} nodes per direction, grid has {} x {}",
            g.nx + 1,
            g.ny + 1
        )));
    }
    let x_st: Vec<LineStencil> = (1..=order).map(|d| LineStencil::new(&g.xs, d)).collect();
    let y_st: Vec<LineStencil> = (1..=order).map(|d| LineStencil::new(&g.ys, d)).collect();
    let mut out = DerivativeFields::new();
    for a in 0..=order {
        let dx = if a == 0 {
            u.values.clone()
        } else {
            apply_x(g, &x_st[a - 1], &u.values)
        };
        for b in 1..=(order - a) {
            out.insert((a, b), apply_y(g, &y_st[b - 1], &dx));
        }
        out.insert((a, 0), dx);
    }
    Ok(out)
}

/// Nodal values on a grid with cached derivative fields.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    derivatives: Option<(usize, DerivativeFields)>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.values == other.values
    }
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self {
            grid,
            values,
            derivatives: None,
        })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.node_count();
        Self {
            grid,
            values: vec![0.0; n],
            derivatives: None,
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|n| {
                let (i, j) = grid.node(n);
                f(grid.xs[i], grid.ys[j])
            })
            .collect();
        Self {
            grid,
            values,
            derivatives: None,
        }
    }

    /// Nodal interpolant of an analytic field.
    pub fn from_field(grid: Arc<Grid>, field: &dyn AnalyticField) -> Self {
        Self::from_fn(grid, |x, y| field.value(x, y))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Computes and caches derivatives through `order`.
    pub fn with_derivatives(mut self, order: usize) -> Result<Self> {
        self.ensure_derivatives(order)?;
        Ok(self)
    }

    pub fn ensure_derivatives(&mut self, order: usize) -> Result<()> {
        if self.derivative_order().is_some_and(|o| o >= order) {
            return Ok(());
        }
        let d = discrete_derivatives(self, order)?;
        self.derivatives = Some((order, d));
        Ok(())
    }

    /// Highest cached derivative order.
    pub fn derivative_order(&self) -> Option<usize> {
        self.derivatives.as_ref().map(|(o, _)| *o)
    }

    /// Cached `D_x^a D_y^b u`; `(0, 0)` is always available.
    pub fn derivative(&self, a: usize, b: usize) -> Result<&[f64]> {
        if a == 0 && b == 0 {
            return Ok(&self.values);
        }
        match &self.derivatives {
            Some((o, d)) if a + b <= *o => Ok(&d[&(a, b)]),
            other => Err(Error::MissingDerivatives {
                required: a + b,
                available: other.as_ref().map_or(0, |(o, _)| *o),
            }),
        }
    }

    /// Fails unless derivatives through `order` are cached.
    pub fn require_order(&self, order: usize) -> Result<()> {
        if order == 0 {
            return Ok(());
        }
        match self.derivative_order() {
            Some(o) if o >= order => Ok(()),
            o => Err(Error::MissingDerivatives {
                required: order,
                available: o.unwrap_or(0),
            }),
        }
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `self + c other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            derivatives: None,
        }
    }

    /// Pointwise map `(x, y, u) -> f(x, y, u)` of the nodal values.
    pub fn map(&self, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let g = &self.grid;
        let values = (0..g.node_count())
            .map(|n| {
                let (i, j) = g.node(n);
                f(g.xs[i], g.ys[j], self.values[n])
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            derivatives: None,
        }
    }

    /// Bilinear interpolation of a nodal field inside cell `(i, j)` at
    /// reference coordinates `(s, t)`.
    pub fn interpolate_field(grid: &Grid, field: &[f64], i: usize, j: usize, s: f64, t: f64) -> f64 {
        let w = grid.nx + 1;
        let v00 = field[j * w + i];
        let v10 = field[j * w + i + 1];
        let v01 = field[(j + 1) * w + i];
        let v11 = field[(j + 1) * w + i + 1];
        (1.0 - t) * ((1.0 - s) * v00 + s * v10) + t * ((1.0 - s) * v01 + s * v11)
    }

    /// Bilinear interpolant of the values inside cell `(i, j)`.
    pub fn interpolate(&self, i: usize, j: usize, s: f64, t: f64) -> f64 {
        Self::interpolate_field(&self.grid, &self.values, i, j, s, t)
    }

    /// Plain-text form: header `nx ny x_min x_max y_max g`, then one line per
    /// row starting at `y = 0`, values at 17 significant digits.
    pub fn to_text(&self) -> String {
        let g = &*self.grid;
        let d = g.domain;
        let mut s = String::with_capacity(g.node_count() * 25 + 64);
        let _ = writeln!(s, "{} {} {:?} {:?} {:?} {:?}", g.nx, g.ny, d.x_min, d.x_max, d.y_max, g.grading);
        for j in 0..=g.ny {
            let row = &self.values[j * (g.nx + 1)..(j + 1) * (g.nx + 1)];
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 {
            return Err(Error::Parse(format!("header has {} fields, expected 6", h.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let (nx, ny) = (int(h[0])?, int(h[1])?);
        let domain = HalfPlaneDomain::new(real(h[2])?, real(h[3])?, real(h[4])?)?;
        let grid = Arc::new(Grid::new(domain, nx, ny, real(h[5])?)?);
        let mut values = Vec::with_capacity(grid.node_count());
        for (j, line) in lines.enumerate() {
            let row: Vec<f64> = line.split_whitespace().map(real).collect::<Result<_>>()?;
            if row.len() != nx + 1 {
                return Err(Error::Parse(format!("row {j} has {} values, expected {}", row.len(), nx + 1)));
            }
            values.extend(row);
        }
        if values.len() != grid.node_count() {
            return Err(Error::Parse(format!("{} rows, expected {}", values.len() / (nx + 1), ny + 1)));
        }
        Self::new(grid, values)
    }
}
