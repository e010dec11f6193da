//! Restarted GMRES with right ILU(0) preconditioning.

use crate::discretization::assembly::{CsrMatrix, LinearSystem};
use crate::discretization::grid::GridFunction;
use crate::error::{Error, Result, SolveFailure};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
pub const RESTART: usize = 30;

/// Incomplete LU factorisation with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows;
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for p in lu.row_ptr[r]..lu.row_ptr[r + 1] {
                if lu.col_idx[p] == r {
                    diag[r] = p;
                }
            }
            if diag[r] == usize::MAX {
                return Err(Error::SingularSystem(format!("row {r} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                pos[lu.col_idx[p]] = p;
            }
            for p in start..end {
                let k = lu.col_idx[p];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(Error::SingularSystem(format!("zero pivot in row {k}")));
                }
                let lik = lu.values[p] / pivot;
                lu.values[p] = lik;
                for q in (diag[k] + 1)..lu.row_ptr[k + 1] {
                    let col = lu.col_idx[q];
                    let target = pos[col];
                    if target != usize::MAX {
                        lu.values[target] -= lik * lu.values[q];
                    }
                }
            }
            for p in start..end {
                pos[lu.col_idx[p]] = usize::MAX;
            }
            let d = lu.values[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::SingularSystem(format!("zero pivot in row {i}")));
            }
        }
        Ok(Self { lu, diag })
    }

    /// Solves `L U z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let lu = &self.lu;
        let n = lu.nrows;
        for i in 0..n {
            let mut s = z[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                s -= lu.values[p] * z[lu.col_idx[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in (self.diag[i] + 1)..lu.row_ptr[i + 1] {
                s -= lu.values[p] * z[lu.col_idx[p]];
            }
            z[i] = s / lu.values[self.diag[i]];
        }
    }
}

/// Iteration statistics of a successful solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub residual_history: Vec<f64>,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` to `‖b - A x‖ <= tol ‖b‖`.
pub fn gmres(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidCoefficients(format!("tolerance {tol} must be positive")));
    }
    let n = a.nrows;
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
                residual_history: history,
            },
        ));
    }
    let m = Ilu0::new(a)?;
    let mut best = (f64::INFINITY, x.clone());
    let mut iterations = 0;
    let mut ax = vec![0.0; n];
    loop {
        a.matvec_into(&x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        let rel = beta / bnorm;
        if !rel.is_finite() {
            return Err(Error::SingularSystem("residual is not finite".into()));
        }
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if rel <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations,
                    relative_residual: rel,
                    residual_history: history,
                },
            ));
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged {
                iterations,
                final_residual: best.0,
                failure: Box::new(SolveFailure {
                    best_iterate: best.1,
                    residual_history: history,
                }),
            });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(RESTART);
        let mut h = vec![vec![0.0; RESTART]; RESTART + 1];
        let (mut cs, mut sn) = (vec![0.0; RESTART], vec![0.0; RESTART]);
        let mut g = vec![0.0; RESTART + 1];
        g[0] = beta;
        let mut k = 0;
        while k < RESTART && iterations < max_iter {
            let mut zk = v[k].clone();
            m.apply(&mut zk);
            let mut w = a.matvec(&zk);
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                h[i][k] = dot(&w, vi);
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= h[i][k] * vj;
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                return Err(Error::SingularSystem("Krylov basis collapsed".into()));
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            let est = g[k].abs() / bnorm;
            history.push(est);
            if est <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|l| h[i][l] * y[l]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xj, zj) in x.iter_mut().zip(zi) {
                *xj += yi * zj;
            }
        }
    }
}

/// Solves the reduced system and expands the result to a nodal function.
pub fn solve_system(sys: &LinearSystem, tol: f64, max_iter: usize) -> Result<GridFunction> {
    solve_system_with_stats(sys, tol, max_iter).map(|(u, _)| u)
}

pub fn solve_system_with_stats(sys: &LinearSystem, tol: f64, max_iter: usize) -> Result<(GridFunction, SolveStats)> {
    if sys.c0 == 0.0 {
        log::warn!("c0 = 0: existence and uniqueness of the variational solution are not guaranteed");
    }
    let (x, stats) = gmres(&sys.matrix, &sys.rhs, tol, max_iter)?;
    Ok((sys.expand(&x)?, stats))
}
