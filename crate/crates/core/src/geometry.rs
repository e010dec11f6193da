//! Half-plane rectangles, Euclidean half-balls and the Koch (cycloidal) metric
//! `s(z, z0) = |z - z0| / sqrt(y + y0 + |z - z0|)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn translated(&self, dx: f64) -> Self {
        Self::new(self.x + dx, self.y)
    }
}

/// Which part of the boundary a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryPart {
    Interior,
    /// Open bottom edge on `y = 0`; carries no boundary condition.
    Degenerate,
    /// The side and top edges, including both bottom corners; carries Dirichlet data.
    NonDegenerate,
    Outside,
}

/// The open rectangle `(x_min, x_max) x (0, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfPlaneDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl HalfPlaneDomain {
    pub fn new(x_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let d = Self { x_min, x_max, y_max };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.y_max.is_finite()) {
            return Err(Error::InvalidDomain("bounds must be finite".into()));
        }
        if self.x_min >= self.x_max {
            return Err(Error::InvalidDomain(format!(
                "x_min = {} must be below x_max = {}",
                self.x_min, self.x_max
            )));
        }
        if self.y_max <= 0.0 {
            return Err(Error::InvalidDomain(format!("y_max = {} must be positive", self.y_max)));
        }
        Ok(())
    }

    /// Height of the domain.
    pub fn height(&self) -> f64 {
        self.y_max
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > 0.0 && p.y < self.y_max
    }

    /// Classifies a point of the closed rectangle.
    pub fn classify(&self, p: &Point) -> BoundaryPart {
        let inside_x = p.x >= self.x_min && p.x <= self.x_max;
        let inside_y = p.y >= 0.0 && p.y <= self.y_max;
        if !(inside_x && inside_y) {
            return BoundaryPart::Outside;
        }
        let on_side = p.x == self.x_min || p.x == self.x_max || p.y == self.y_max;
        if on_side {
            BoundaryPart::NonDegenerate
        } else if p.y == 0.0 {
            BoundaryPart::Degenerate
        } else {
            BoundaryPart::Interior
        }
    }

    pub fn translated(&self, dx: f64) -> Self {
        Self {
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            y_max: self.y_max,
        }
    }

    /// Distance from the set `{x = x_min} ∪ {x = x_max} ∪ {y = y_max}` to a point inside.
    pub fn distance_to_nondegenerate(&self, p: &Point) -> f64 {
        (p.x - self.x_min).min(self.x_max - p.x).min(self.y_max - p.y)
    }
}

fn check_closed_half_plane(p: &Point) -> Result<()> {
    if p.y < 0.0 || p.y.is_nan() {
        Err(Error::NegativeY { x: p.x, y: p.y })
    } else {
        Ok(())
    }
}

pub fn cycloidal_distance(z: &Point, z0: &Point) -> Result<f64> {
    check_closed_half_plane(z)?;
    check_closed_half_plane(z0)?;
    Ok(koch_distance_unchecked(z, z0))
}

/// Koch distance for points already known to lie in the closed half-plane.
pub(crate) fn koch_distance_unchecked(z: &Point, z0: &Point) -> f64 {
    let d = z.distance(z0);
    if d == 0.0 {
        0.0
    } else {
        d / (z.y + z0.y + d).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallKind {
    EuclideanHalf,
    Cycloidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub center: Point,
    pub radius: f64,
    pub kind: BallKind,
}

impl BallSpec {
    pub fn new(center: Point, radius: f64, kind: BallKind) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBall(format!("radius {radius} must be positive")));
        }
        if center.y < 0.0 {
            return Err(Error::InvalidBall(format!("center height {} is negative", center.y)));
        }
        Ok(Self { center, radius, kind })
    }

    pub fn euclidean_half(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, BallKind::EuclideanHalf)
    }

    pub fn cycloidal(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, BallKind::Cycloidal)
    }

    pub fn contains(&self, z: &Point) -> bool {
        ball_membership(self, z)
    }

    /// Radius of a Euclidean ball about the center containing this ball.
    pub fn euclidean_bound(&self) -> f64 {
        match self.kind {
            BallKind::EuclideanHalf => self.radius,
            BallKind::Cycloidal => {
                2.0 * self.radius * self.radius + self.radius * (2.0 * self.center.y).sqrt()
            }
        }
    }
}

/// Membership in `H ∩ B_r(z0)` or in the cycloidal ball `{s(z, z0) < r}`; both exclude `y <= 0`.
pub fn ball_membership(b: &BallSpec, z: &Point) -> bool {
    if z.y <= 0.0 {
        return false;
    }
    match b.kind {
        BallKind::EuclideanHalf => z.distance(&b.center) < b.radius,
        BallKind::Cycloidal => koch_distance_unchecked(z, &b.center) < b.radius,
    }
}

/// A point predicate selecting where a norm or estimate is evaluated.
///
/// Membership uses the closed half-plane `y >= 0` so that nodes on the
/// degenerate row enter sup-type evaluators; for integrals the axis has
/// measure zero and the distinction is immaterial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Whole,
    Ball(BallSpec),
    Rectangle(HalfPlaneDomain),
    /// `x_min <= x <= x_max`, `y_min < y < y_max`.
    Strip { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
}

impl Region {
    pub fn contains(&self, p: &Point) -> bool {
        if p.y < 0.0 {
            return false;
        }
        match self {
            Region::Whole => true,
            Region::Ball(b) => match b.kind {
                BallKind::EuclideanHalf => p.distance(&b.center) < b.radius,
                BallKind::Cycloidal => koch_distance_unchecked(p, &b.center) < b.radius,
            },
            Region::Rectangle(d) => p.x >= d.x_min && p.x <= d.x_max && p.y <= d.y_max,
            Region::Strip {
                x_min,
                x_max,
                y_min,
                y_max,
            } => p.x >= *x_min && p.x <= *x_max && p.y > *y_min && p.y < *y_max,
        }
    }

    /// Whether the region (for balls, its Euclidean bounding set) lies in the closed domain.
    pub fn inside(&self, d: &HalfPlaneDomain) -> bool {
        match self {
            Region::Whole => true,
            Region::Ball(b) => {
                let r = b.euclidean_bound();
                b.center.x - r >= d.x_min && b.center.x + r <= d.x_max && b.center.y + r <= d.y_max
            }
            Region::Rectangle(r) => r.x_min >= d.x_min && r.x_max <= d.x_max && r.y_max <= d.y_max,
            Region::Strip { x_min, x_max, y_max, .. } => {
                *x_min >= d.x_min && *x_max <= d.x_max && *y_max <= d.y_max
            }
        }
    }

    pub fn translated(&self, dx: f64) -> Self {
        match *self {
            Region::Whole => Region::Whole,
            Region::Ball(b) => Region::Ball(BallSpec {
                center: b.center.translated(dx),
                ..b
            }),
            Region::Rectangle(r) => Region::Rectangle(r.translated(dx)),
            Region::Strip {
                x_min,
                x_max,
                y_min,
                y_max,
            } => Region::Strip {
                x_min: x_min + dx,
                x_max: x_max + dx,
                y_min,
                y_max,
            },
        }
    }
}

/// Result of a Monte-Carlo check of
/// `H ∩ B_{r^2}(z0) ⊂ 𝓑_r(z0) ⊂ H ∩ B_{2r^2 + r sqrt(2 y0)}(z0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionReport {
    pub samples: usize,
    pub outer_radius: f64,
    /// Points of the small Euclidean ball that fall outside the cycloidal ball.
    pub inner_violations: Vec<Point>,
    /// Points of the cycloidal ball that fall outside the large Euclidean ball.
    pub outer_violations: Vec<Point>,
}

impl InclusionReport {
    pub fn passed(&self) -> bool {
        self.inner_violations.is_empty() && self.outer_violations.is_empty()
    }
}

pub fn ball_inclusion_check<R: Rng>(z0: &Point, r: f64, samples: usize, rng: &mut R) -> Result<InclusionReport> {
    check_closed_half_plane(z0)?;
    if !(r > 0.0) {
        return Err(Error::InvalidBall(format!("radius {r} must be positive")));
    }
    let outer_radius = 2.0 * r * r + r * (2.0 * z0.y).sqrt();
    // Sample a box slightly larger than both Euclidean balls so that violations,
    // if any, would be visible.
    let half = 1.25 * outer_radius.max(r * r);
    let mut report = InclusionReport {
        samples,
        outer_radius,
        inner_violations: Vec::new(),
        outer_violations: Vec::new(),
    };
    let y_lo = (z0.y - half).max(0.0);
    let y_hi = z0.y + half;
    for _ in 0..samples {
        let z = Point::new(rng.random_range(z0.x - half..=z0.x + half), rng.random_range(y_lo..=y_hi));
        if z.y <= 0.0 {
            continue;
        }
        let d = z.distance(z0);
        let s = koch_distance_unchecked(&z, z0);
        if d < r * r && s >= r {
            report.inner_violations.push(z);
        }
        if s < r && d >= outer_radius {
            report.outer_violations.push(z);
        }
    }
    Ok(report)
}
