//! Numerical toolkit for the degenerate elliptic Heston operator on
//! half-plane rectangles: coefficients and commutator identities, the
//! cycloidal geometry, weighted Sobolev and Hölder norms, a bilinear finite
//! element discretisation, and a harness that tests a priori estimates under
//! grid refinement.

pub mod analytic;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod heston_operator;
pub mod regularity_harness;
pub mod weighted_spaces;

pub use analytic::{AnalyticField, ClosureField, Constant, Polynomial, Separable};
pub use discretization::{Grid, GridFunction, LinearSystem, Source};
pub use error::{Error, Result, SolveFailure};
pub use geometry::{cycloidal_distance, BallKind, BallSpec, BoundaryPart, HalfPlaneDomain, Point, Region};
pub use heston_operator::{
    derived_constants, shift_coefficients, validate_coefficients, Coefficients, DerivedConstants, JetPoint,
    RawCoefficients, ShiftedCoefficients,
};
pub use weighted_spaces::{NormRequest, SpaceTag, WeightSpec};
pub use regularity_harness::{estimate_ratio, EstimateKind, EstimateParams, EstimateRegions, EstimateReport};
