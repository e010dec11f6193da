//! Finite-difference quotients `δ_x^h v = (v(x + h) - v(x)) / h` and the
//! discrete integration-by-parts identity
//! `-(f, δ^{-h} v)_𝔴 = ((𝔴^h/𝔴) δ^h f, v)_𝔴 + ((δ^h 𝔴/𝔴) f, v)_𝔴`.

use crate::discretization::grid::GridFunction;
use crate::error::{Error, Result};
use crate::weighted_spaces::{weight_value, WeightSpec};

/// A grid function together with the nodes on which it is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGridFunction {
    /// Values; zero where undefined.
    pub function: GridFunction,
    pub defined: Vec<bool>,
}

/// Number of grid steps in `h`, or `HNotOnGrid`.
pub fn grid_steps(hx: f64, h: f64) -> Result<isize> {
    let r = h / hx;
    let s = r.round();
    if h == 0.0 || !h.is_finite() || s == 0.0 || (r - s).abs() > 1e-9 * r.abs().max(1.0) {
        return Err(Error::HNotOnGrid(h));
    }
    Ok(s as isize)
}

/// `δ_x^h u` on every node whose shifted point `x + h` is a node.
pub fn fd_quotient(u: &GridFunction, h: f64) -> Result<MaskedGridFunction> {
    let g = u.grid().clone();
    let s = grid_steps(g.hx(), h)?;
    let mut values = vec![0.0; g.node_count()];
    let mut defined = vec![false; g.node_count()];
    for j in 0..=g.ny() {
        for i in 0..=g.nx() {
            let t = i as isize + s;
            if t < 0 || t > g.nx() as isize {
                continue;
            }
            let n = g.index(i, j);
            values[n] = (u.value(t as usize, j) - u.value(i, j)) / h;
            defined[n] = true;
        }
    }
    if !defined.iter().any(|&d| d) {
        return Err(Error::EmptyResult);
    }
    Ok(MaskedGridFunction {
        function: GridFunction::new(g, values)?,
        defined,
    })
}

/// Residual of the finite-difference integration-by-parts identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpResidual {
    pub residual: f64,
    /// Sum of the magnitudes of all summands of both sides.
    pub scale: f64,
}

impl IbpResidual {
    pub fn within(&self, rel_tol: f64) -> bool {
        self.residual <= rel_tol * self.scale
    }
}

/// Evaluates both sides with the node-sum inner product
/// `(f, g)_𝔴 = Σ_{y_j > 0} f g 𝔴 h_x ȳ_j`, where `ȳ_j` is the dual cell height.
pub fn fd_integration_by_parts_check(
    f: &GridFunction,
    v: &GridFunction,
    h: f64,
    w: &WeightSpec,
) -> Result<IbpResidual> {
    if f.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    w.validate()?;
    let g = f.grid().clone();
    let s = grid_steps(g.hx(), h)?;
    let d = g.domain();
    let reach = 2.0 * h.abs();
    for u in [f, v] {
        for n in 0..g.node_count() {
            if u.values()[n] == 0.0 {
                continue;
            }
            let (i, j) = g.node(n);
            if d.distance_to_nondegenerate(&g.point(i, j)) <= reach {
                return Err(Error::SupportTooClose);
            }
        }
    }
    let ys = g.ys();
    let xs = g.xs();
    let hx = g.hx();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut scale = 0.0;
    // Shifted indices stay inside the grid: the supports keep 2|h| away from the sides.
    let shift = |i: usize, by: isize| (i as isize + by) as usize;
    for j in 1..g.ny() {
        let dual = 0.5 * (ys[j + 1] - ys[j - 1]) * hx;
        for i in 0..=g.nx() {
            let (fv, vv) = (f.value(i, j), v.value(i, j));
            if fv == 0.0 && vv == 0.0 {
                continue;
            }
            let wz = weight_value(w, &gp(xs[i], ys[j]))?;
            // -(f, δ^{-h} v): δ^{-h} v(x) = (v(x - h) - v(x)) / (-h)
            if fv != 0.0 {
                let vm = v.value(shift(i, -s), j);
                let term = -fv * (vm - vv) / (-h) * wz * dual;
                lhs += term;
                scale += term.abs();
            }
            if vv != 0.0 {
                let ip = shift(i, s);
                let wh = weight_value(w, &gp(xs[ip], ys[j]))?;
                let df = (f.value(ip, j) - fv) / h;
                let dw = (wh - wz) / h;
                let t1 = (wh / wz) * df * vv * wz * dual;
                let t2 = (dw / wz) * fv * vv * wz * dual;
                rhs += t1 + t2;
                scale += t1.abs() + t2.abs();
            }
        }
    }
    Ok(IbpResidual {
        residual: (lhs - rhs).abs(),
        scale,
    })
}

fn gp(x: f64, y: f64) -> crate::geometry::Point {
    crate::geometry::Point::new(x, y)
}
