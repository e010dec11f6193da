//! The elliptic Heston operator
//!
//! ```text
//! A v = -(y/2)(v_xx + 2 rho sigma v_xy + sigma^2 v_yy) - (c0 - q - y/2) v_x - kappa (theta - y) v_y + c0 v
//! ```
//!
//! together with its derived constants, the shifted family `A_m` and the
//! commutator remainder `B v = -v_xx/2 + v_x/2`, which satisfy
//! `D_y^m A v = A_m D_y^m v + m B D_y^{m-1} v`.

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticField;
use crate::error::{Error, Result};

/// Unvalidated parameter record, as read from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCoefficients {
    pub sigma: f64,
    pub rho: f64,
    pub kappa: f64,
    pub theta: f64,
    pub c0: f64,
    pub q: f64,
    #[serde(default)]
    pub gamma: f64,
}

/// Validated operator coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    sigma: f64,
    rho: f64,
    kappa: f64,
    theta: f64,
    c0: f64,
    q: f64,
    gamma: f64,
}

pub fn validate_coefficients(raw: &RawCoefficients) -> Result<Coefficients> {
    let named = [
        ("sigma", raw.sigma),
        ("rho", raw.rho),
        ("kappa", raw.kappa),
        ("theta", raw.theta),
        ("c0", raw.c0),
        ("q", raw.q),
        ("gamma", raw.gamma),
    ];
    if let Some((name, _)) = named.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteParameter(name));
    }
    if raw.sigma == 0.0 {
        return Err(Error::SigmaZero);
    }
    if !(raw.rho > -1.0 && raw.rho < 1.0) {
        return Err(Error::RhoOutOfRange(raw.rho));
    }
    if raw.kappa <= 0.0 || raw.theta <= 0.0 {
        return Err(Error::NonpositiveKappaTheta {
            kappa: raw.kappa,
            theta: raw.theta,
        });
    }
    if raw.c0 < 0.0 {
        return Err(Error::NegativeC0(raw.c0));
    }
    if raw.gamma < 0.0 {
        return Err(Error::NegativeGamma(raw.gamma));
    }
    Ok(Coefficients {
        sigma: raw.sigma,
        rho: raw.rho,
        kappa: raw.kappa,
        theta: raw.theta,
        c0: raw.c0,
        q: raw.q,
        gamma: raw.gamma,
    })
}

impl Coefficients {
    pub fn new(sigma: f64, rho: f64, kappa: f64, theta: f64, c0: f64, q: f64, gamma: f64) -> Result<Self> {
        validate_coefficients(&RawCoefficients {
            sigma,
            rho,
            kappa,
            theta,
            c0,
            q,
            gamma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn raw(&self) -> RawCoefficients {
        RawCoefficients {
            sigma: self.sigma,
            rho: self.rho,
            kappa: self.kappa,
            theta: self.theta,
            c0: self.c0,
            q: self.q,
            gamma: self.gamma,
        }
    }

    pub fn derived(&self) -> DerivedConstants {
        derived_constants(self)
    }

    /// The symmetric matrix `((1, rho sigma), (rho sigma, sigma^2))` of the second-order part.
    pub fn diffusion_matrix(&self) -> [[f64; 2]; 2] {
        let off = self.rho * self.sigma;
        [[1.0, off], [off, self.sigma * self.sigma]]
    }

    /// Same coefficients with a different weight parameter `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        validate_coefficients(&RawCoefficients { gamma, ..self.raw() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Smaller eigenvalue of the diffusion matrix.
    pub nu0: f64,
    /// Sum of the absolute values of the coefficients, reading `r` as `c0`.
    pub lambda: f64,
    pub beta: f64,
    pub mu: f64,
    pub a1: f64,
    pub b1: f64,
    pub b1_is_zero: bool,
}

pub fn derived_constants(c: &Coefficients) -> DerivedConstants {
    let s2 = c.sigma * c.sigma;
    let rs = c.rho * c.sigma;
    // (1 - s2)^2 + 4 rho^2 s2 == 1 - 2 s2 + 4 rho^2 s2 + s2^2
    let disc = ((1.0 - s2) * (1.0 - s2) + 4.0 * rs * rs).sqrt();
    let largest = 0.5 * (1.0 + s2 + disc);
    // det / largest avoids the cancellation in (1 + s2 - disc) / 2.
    let nu0 = s2 * (1.0 - c.rho * c.rho) / largest;
    let lambda = 1.0 + 2.0 * rs.abs() + s2 + c.kappa * c.theta + (c.c0 - c.q).abs() + c.c0;
    let b1 = c.c0 - c.q - c.kappa * c.theta * c.rho / c.sigma;
    DerivedConstants {
        nu0,
        lambda,
        beta: 2.0 * c.kappa * c.theta / s2,
        mu: 2.0 * c.kappa / s2,
        a1: c.kappa * c.rho / c.sigma - 0.5,
        b1,
        b1_is_zero: b1 == 0.0,
    }
}

/// Coefficients of `A_m`: `theta + m sigma^2/(2 kappa)`, `q - m rho sigma`, `c0 + m kappa`.
///
/// Only the zeroth-order coefficient moves to `c0 + m kappa`; the `v_x`
/// coefficient of `A_m` is `-(c0 - q_m - y/2)`. The ordinary record returned by
/// [`ShiftedCoefficients::as_coefficients`] realises this with `q = q_m + m kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedCoefficients {
    base: Coefficients,
    order: u32,
    shifted: Coefficients,
}

pub fn shift_coefficients(c: &Coefficients, m: u32) -> ShiftedCoefficients {
    let mf = f64::from(m);
    let shifted = if m == 0 {
        *c
    } else {
        Coefficients {
            theta: c.theta + mf * c.sigma * c.sigma / (2.0 * c.kappa),
            q: c.q - mf * c.rho * c.sigma + mf * c.kappa,
            c0: c.c0 + mf * c.kappa,
            ..*c
        }
    };
    ShiftedCoefficients {
        base: *c,
        order: m,
        shifted,
    }
}

impl ShiftedCoefficients {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn base(&self) -> &Coefficients {
        &self.base
    }

    /// The coefficients of `A_m` as an ordinary coefficient record.
    pub fn as_coefficients(&self) -> &Coefficients {
        &self.shifted
    }

    pub fn theta_m(&self) -> f64 {
        self.shifted.theta
    }
    pub fn q_m(&self) -> f64 {
        self.base.q - f64::from(self.order) * self.base.rho * self.base.sigma
    }
    pub fn c0_m(&self) -> f64 {
        self.shifted.c0
    }

    /// `beta + m`, exactly.
    pub fn beta_m(&self) -> f64 {
        self.base.derived().beta + f64::from(self.order)
    }
}

impl From<Coefficients> for ShiftedCoefficients {
    fn from(c: Coefficients) -> Self {
        shift_coefficients(&c, 0)
    }
}

/// Partial derivatives of a scalar field at one point of the open half-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint {
    x: f64,
    y: f64,
    order: usize,
    /// Entry `D_x^a D_y^b` lives at `n(n+1)/2 + b` with `n = a + b`.
    values: Vec<f64>,
}

fn jet_index(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

impl JetPoint {
    pub fn from_fn(x: f64, y: f64, order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; jet_index(0, order) + 1];
        for n in 0..=order {
            for b in 0..=n {
                values[jet_index(n - b, b)] = f(n - b, b);
            }
        }
        Self { x, y, order, values }
    }

    /// Jet of order 2 from the six classical entries.
    #[allow(clippy::too_many_arguments)]
    pub fn second_order(x: f64, y: f64, v: f64, vx: f64, vy: f64, vxx: f64, vxy: f64, vyy: f64) -> Self {
        Self {
            x,
            y,
            order: 2,
            values: vec![v, vx, vy, vxx, vxy, vyy],
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, a: usize, b: usize) -> Result<f64> {
        if a + b > self.order {
            return Err(Error::MissingDerivative { a, b });
        }
        Ok(self.values[jet_index(a, b)])
    }

    /// Jet of `D_x^a D_y^b v`, of order `self.order - a - b`.
    pub fn differentiate(&self, a: usize, b: usize) -> Result<JetPoint> {
        if a + b > self.order {
            return Err(Error::MissingDerivative { a, b });
        }
        let order = self.order - a - b;
        Ok(JetPoint::from_fn(self.x, self.y, order, |i, j| {
            self.values[jet_index(i + a, j + b)]
        }))
    }
}

fn require_upper_half_plane(j: &JetPoint) -> Result<()> {
    if j.y > 0.0 {
        Ok(())
    } else {
        Err(Error::NonpositiveY(j.y))
    }
}

/// Value of `A_m v` together with the sum of the absolute values of its
/// summands, which sets the round-off scale of the evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub magnitude: f64,
}

fn sum_terms(terms: &[f64]) -> Evaluation {
    Evaluation {
        value: terms.iter().sum(),
        magnitude: terms.iter().map(|t| t.abs()).sum(),
    }
}

pub fn evaluate_operator(s: &ShiftedCoefficients, j: &JetPoint) -> Result<Evaluation> {
    require_upper_half_plane(j)?;
    let c = s.as_coefficients();
    let y = j.y;
    let rs = c.rho * c.sigma;
    let terms = [
        -0.5 * y * j.get(2, 0)?,
        -y * rs * j.get(1, 1)?,
        -0.5 * y * c.sigma * c.sigma * j.get(0, 2)?,
        -(c.c0 - c.q - 0.5 * y) * j.get(1, 0)?,
        -c.kappa * (c.theta - y) * j.get(0, 1)?,
        c.c0 * j.get(0, 0)?,
    ];
    Ok(sum_terms(&terms))
}

/// `A_m v` at the jet's point; `m = 0` is `A` itself.
pub fn apply_operator(s: &ShiftedCoefficients, j: &JetPoint) -> Result<f64> {
    evaluate_operator(s, j).map(|e| e.value)
}

pub fn evaluate_b(j: &JetPoint) -> Result<Evaluation> {
    Ok(sum_terms(&[-0.5 * j.get(2, 0)?, 0.5 * j.get(1, 0)?]))
}

/// `B v = -v_xx/2 + v_x/2`.
pub fn apply_b(j: &JetPoint) -> Result<f64> {
    evaluate_b(j).map(|e| e.value)
}

/// `[D_y, A] v = -(v_xx + 2 rho sigma v_xy + sigma^2 v_yy)/2 + v_x/2 + kappa v_y`.
pub fn simple_dy_commutator(c: &Coefficients, j: &JetPoint) -> Result<f64> {
    let rs = c.rho * c.sigma;
    Ok(-0.5 * (j.get(2, 0)? + 2.0 * rs * j.get(1, 1)? + c.sigma * c.sigma * j.get(0, 2)?)
        + 0.5 * j.get(1, 0)?
        + c.kappa * j.get(0, 1)?)
}

/// `D_x^a D_y^b (A v)` expanded by the Leibniz rule on the `y`-linear
/// coefficients of `A`; needs a jet of order `a + b + 2`.
///
/// This is the direct route, independent of the shifted-operator identity.
pub fn evaluate_operator_derivative(c: &Coefficients, a: usize, b: usize, j: &JetPoint) -> Result<Evaluation> {
    require_upper_half_plane(j)?;
    operator_derivative_terms(c, a, b, j)
}

/// Same expansion without the `y > 0` check; on the axis it gives the
/// continuous extension.
fn operator_derivative_terms(c: &Coefficients, a: usize, b: usize, j: &JetPoint) -> Result<Evaluation> {
    let y = j.y;
    let bf = b as f64;
    let rs = c.rho * c.sigma;
    let s2 = c.sigma * c.sigma;
    // D^{a,b}(y g) = y D^{a,b} g + b D^{a,b-1} g
    let lower = |i: usize, k: usize| -> Result<f64> {
        if b == 0 {
            Ok(0.0)
        } else {
            j.get(i, k - 1)
        }
    };
    let terms = [
        -0.5 * y * j.get(a + 2, b)?,
        -y * rs * j.get(a + 1, b + 1)?,
        -0.5 * y * s2 * j.get(a, b + 2)?,
        -0.5 * bf * lower(a + 2, b)?,
        -bf * rs * lower(a + 1, b + 1)?,
        -0.5 * bf * s2 * lower(a, b + 2)?,
        -(c.c0 - c.q) * j.get(a + 1, b)?,
        0.5 * y * j.get(a + 1, b)?,
        0.5 * bf * lower(a + 1, b)?,
        -c.kappa * c.theta * j.get(a, b + 1)?,
        c.kappa * y * j.get(a, b + 1)?,
        c.kappa * bf * lower(a, b + 1)?,
        c.c0 * j.get(a, b)?,
    ];
    Ok(sum_terms(&terms))
}

/// Outcome of one commutator identity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorResidual {
    /// `|D_x^k D_y^m (A v) - A_m D_x^k D_y^m v - m B D_x^k D_y^{m-1} v|`.
    pub residual: f64,
    /// Largest round-off scale among the compared terms.
    pub scale: f64,
}

impl CommutatorResidual {
    pub fn within(&self, rel_tol: f64) -> bool {
        self.residual <= rel_tol * self.scale.max(f64::MIN_POSITIVE)
    }
}

/// Checks `D_x^k D_y^m A v = A_m D_x^k D_y^m v + m B D_x^k D_y^{m-1} v` at a point.
///
/// `k` is the number of leading `x` derivatives and `m` the number of `y`
/// derivatives; `m = 0` checks `[D_x^k, A] = 0`.
pub fn commutator_residual(
    c: &Coefficients,
    field: &dyn AnalyticField,
    k: usize,
    m: usize,
    x: f64,
    y: f64,
) -> Result<CommutatorResidual> {
    let required = k + m + 2;
    if field.max_order() < required {
        return Err(Error::InsufficientJetOrder {
            required,
            available: field.max_order(),
        });
    }
    if y <= 0.0 {
        return Err(Error::NonpositiveY(y));
    }
    let jet = field.jet(x, y, required).ok_or(Error::InsufficientJetOrder {
        required,
        available: field.max_order(),
    })?;

    let direct = evaluate_operator_derivative(c, k, m, &jet)?;
    let shifted = shift_coefficients(c, m as u32);
    let am = evaluate_operator(&shifted, &jet.differentiate(k, m)?)?;
    let remainder = if m == 0 {
        Evaluation {
            value: 0.0,
            magnitude: 0.0,
        }
    } else {
        let bj = evaluate_b(&jet.differentiate(k, m - 1)?)?;
        Evaluation {
            value: m as f64 * bj.value,
            magnitude: m as f64 * bj.magnitude,
        }
    };
    Ok(CommutatorResidual {
        residual: (direct.value - am.value - remainder.value).abs(),
        scale: direct.magnitude.max(am.magnitude).max(remainder.magnitude),
    })
}

/// `A v` for an analytic field at `(x, y)`.
pub fn apply_to_field(s: &ShiftedCoefficients, field: &dyn AnalyticField, x: f64, y: f64) -> Result<f64> {
    let jet = field.jet(x, y, 2).ok_or(Error::InsufficientJetOrder {
        required: 2,
        available: field.max_order(),
    })?;
    apply_operator(s, &jet)
}

/// The analytic image `A u*` of a field, usable as a solver source.
pub struct OperatorImage<'a> {
    coefficients: ShiftedCoefficients,
    field: &'a dyn AnalyticField,
}

impl<'a> OperatorImage<'a> {
    pub fn new(c: &Coefficients, field: &'a dyn AnalyticField) -> Self {
        Self {
            coefficients: shift_coefficients(c, 0),
            field,
        }
    }
}

impl AnalyticField for OperatorImage<'_> {
    fn partial(&self, a: usize, b: usize, x: f64, y: f64) -> f64 {
        let jet = self
            .field
            .jet(x, y, a + b + 2)
            .expect("operator image requires derivatives of order a + b + 2");
        operator_derivative_terms(self.coefficients.as_coefficients(), a, b, &jet)
            .map(|e| e.value)
            .expect("jet order checked above")
    }

    fn max_order(&self) -> usize {
        self.field.max_order().saturating_sub(2)
    }
}
