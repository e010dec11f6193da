//! Analytic test fields with exact partial derivatives.
//!
//! A field is anything that can report `D_x^a D_y^b v(x, y)` exactly. These
//! back the commutator checks, the manufactured-solution studies and the
//! source terms handed to the solver.

use crate::heston_operator::JetPoint;

pub trait AnalyticField: Send + Sync {
    /// `D_x^a D_y^b` of the field at `(x, y)`.
    fn partial(&self, a: usize, b: usize, x: f64, y: f64) -> f64;

    /// Highest total derivative order the field can report.
    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn value(&self, x: f64, y: f64) -> f64 {
        self.partial(0, 0, x, y)
    }

    /// All partials of total order `<= order`, or `None` when the field
    /// cannot supply them.
    fn jet(&self, x: f64, y: f64, order: usize) -> Option<JetPoint> {
        if order > self.max_order() {
            return None;
        }
        Some(JetPoint::from_fn(x, y, order, |a, b| self.partial(a, b, x, y)))
    }
}

/// `sum c_ij x^i y^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    /// `(i, j, c_ij)` triples.
    terms: Vec<(usize, usize, f64)>,
}

/// `n!/(n-k)!`, zero when `k > n`.
fn falling(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    ((n - k + 1)..=n).map(|v| v as f64).product()
}

impl Polynomial {
    pub fn new(terms: Vec<(usize, usize, f64)>) -> Self {
        Self { terms }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|&(i, j, _)| i + j).max().unwrap_or(0)
    }
}

impl AnalyticField for Polynomial {
    fn partial(&self, a: usize, b: usize, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .filter(|&&(i, j, _)| i >= a && j >= b)
            .map(|&(i, j, c)| {
                c * falling(i, a) * falling(j, b) * x.powi((i - a) as i32) * y.powi((j - b) as i32)
            })
            .sum()
    }
}

type Derivative1d = Box<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// `g(x) h(y)` with closures for the n-th derivative of each factor.
pub struct Separable {
    fx: Derivative1d,
    fy: Derivative1d,
}

impl Separable {
    pub fn new(
        fx: impl Fn(usize, f64) -> f64 + Send + Sync + 'static,
        fy: impl Fn(usize, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            fx: Box::new(fx),
            fy: Box::new(fy),
        }
    }

    /// `sin(x) e^{-y}`, the standard manufactured solution.
    pub fn sin_x_exp_neg_y() -> Self {
        Self::new(|n, x| sin_derivative(n, 1.0, x), |n, y| exp_derivative(n, -1.0, y))
    }

    /// `e^{a x} sin(b y)`.
    pub fn exp_x_sin_y(a: f64, b: f64) -> Self {
        Self::new(move |n, x| exp_derivative(n, a, x), move |n, y| sin_derivative(n, b, y))
    }

    /// `cos(a x) e^{b y}`.
    pub fn cos_x_exp_y(a: f64, b: f64) -> Self {
        Self::new(move |n, x| cos_derivative(n, a, x), move |n, y| exp_derivative(n, b, y))
    }

    /// `x y^p` for real `p > 0`; smooth only where `y > 0` unless `p` is an integer.
    pub fn x_times_power_y(p: f64) -> Self {
        Self::new(
            |n, x| match n {
                0 => x,
                1 => 1.0,
                _ => 0.0,
            },
            move |n, y| {
                let coeff: f64 = (0..n).map(|k| p - k as f64).product();
                if coeff == 0.0 {
                    0.0
                } else {
                    coeff * y.powf(p - n as f64)
                }
            },
        )
    }
}

impl AnalyticField for Separable {
    fn partial(&self, a: usize, b: usize, x: f64, y: f64) -> f64 {
        (self.fx)(a, x) * (self.fy)(b, y)
    }
}

/// n-th derivative of `e^{k t}`.
pub fn exp_derivative(n: usize, k: f64, t: f64) -> f64 {
    k.powi(n as i32) * (k * t).exp()
}

/// n-th derivative of `sin(k t)`.
pub fn sin_derivative(n: usize, k: f64, t: f64) -> f64 {
    k.powi(n as i32) * (k * t + n as f64 * std::f64::consts::FRAC_PI_2).sin()
}

/// n-th derivative of `cos(k t)`.
pub fn cos_derivative(n: usize, k: f64, t: f64) -> f64 {
    k.powi(n as i32) * (k * t + n as f64 * std::f64::consts::FRAC_PI_2).cos()
}

/// Field defined by a closure `(a, b, x, y) -> D_x^a D_y^b v`.
pub struct ClosureField<F> {
    f: F,
    max_order: usize,
}

impl<F> ClosureField<F>
where
    F: Fn(usize, usize, f64, f64) -> f64 + Send + Sync,
{
    pub fn new(max_order: usize, f: F) -> Self {
        Self { f, max_order }
    }
}

impl<F> AnalyticField for ClosureField<F>
where
    F: Fn(usize, usize, f64, f64) -> f64 + Send + Sync,
{
    fn partial(&self, a: usize, b: usize, x: f64, y: f64) -> f64 {
        (self.f)(a, b, x, y)
    }

    fn max_order(&self) -> usize {
        self.max_order
    }
}

/// Constant field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl AnalyticField for Constant {
    fn partial(&self, a: usize, b: usize, _x: f64, _y: f64) -> f64 {
        if a == 0 && b == 0 {
            self.0
        } else {
            0.0
        }
    }
}

/// `s * v` for a scalar `s`.
pub struct Scaled<'a> {
    pub scale: f64,
    pub field: &'a dyn AnalyticField,
}

impl AnalyticField for Scaled<'_> {
    fn partial(&self, a: usize, b: usize, x: f64, y: f64) -> f64 {
        self.scale * self.field.partial(a, b, x, y)
    }

    fn max_order(&self) -> usize {
        self.field.max_order()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_partials() {
        // 3 x^2 y^3
        let p = Polynomial::new(vec![(2, 3, 3.0)]);
        assert_eq!(p.partial(0, 0, 2.0, 1.0), 12.0);
        assert_eq!(p.partial(1, 0, 2.0, 1.0), 12.0);
        assert_eq!(p.partial(2, 3, 2.0, 1.0), 3.0 * 2.0 * 6.0);
        assert_eq!(p.partial(3, 0, 2.0, 1.0), 0.0);
        assert_eq!(p.degree(), 5);
    }

    #[test]
    fn trig_derivatives_cycle() {
        let t = 0.3;
        assert!((sin_derivative(1, 2.0, t) - 2.0 * (2.0 * t).cos()).abs() < 1e-15);
        assert!((sin_derivative(4, 1.0, t) - t.sin()).abs() < 1e-15);
        assert!((cos_derivative(2, 3.0, t) + 9.0 * (3.0 * t).cos()).abs() < 1e-14);
    }

    #[test]
    fn power_field_matches_finite_difference() {
        let f = Separable::x_times_power_y(1.5);
        let (x, y, h) = (0.7, 0.4, 1e-6);
        let fd = (f.value(x, y + h) - f.value(x, y - h)) / (2.0 * h);
        assert!((f.partial(0, 1, x, y) - fd).abs() < 1e-8);
    }
}
