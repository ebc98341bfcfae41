//! Numerical toolkit for the parabolic renormalization operator.
//!
//! The crate computes asymptotic Fatou coordinates of simple parabolic germs,
//! realizes the parabolic renormalization operator by contour sampling of the
//! horn map, iterates it to its fixed point, estimates the leading eigenvalue
//! of the derivative at the fixed point, and traces the boundary geometry of
//! the fixed point's maximal domain of analyticity.
//!
//! Entry points:
//! - [`series`]: truncated power-series arithmetic for germs fixing 0;
//! - [`fatou`]: asymptotic Fatou coordinates at infinity and their diagnostics;
//! - [`renorm`]: the renormalization operator and its log form;
//! - [`fixedpoint`]: fixed-point iteration, Jacobian, leading eigenvalue;
//! - [`geometry`]: domain boundary, tail of the domain, tiny-number tower;
//! - [`quadpuzzle`]: exactly solvable model maps and puzzle-piece checks;
//! - [`cli`]: command-line pipelines used by the `parafix` binary.

pub mod cli;
pub mod fatou;
pub mod fixedpoint;
pub mod geometry;
pub mod quadpuzzle;
pub mod renorm;
pub mod report;
pub mod series;

use num_complex::Complex64;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("evaluation point |z| = {modulus:.3e} outside trust radius {radius:.3e}")]
    OutsideTrustRadius { radius: f64, modulus: f64 },

    #[error("operation requires a germ with c_1 = 1")]
    NotTangentToIdentity,

    #[error("operation requires a normalized parabolic germ (c_1 = c_2 = 1)")]
    NotNormalizedParabolic,

    #[error("germ is not renormalizable: |second coefficient| ratio {ratio:.3e} below threshold")]
    NotRenormalizable { ratio: f64 },

    #[error("evaluation point w = {w} on the wrong side of the validity threshold M = {m}")]
    OutsideValidityRegion { w: Complex64, m: f64 },

    #[error("Newton iteration failed to converge after {steps} steps (residual {residual:.3e})")]
    NewtonDiverged { steps: usize, residual: f64 },

    #[error("branch-shift search failed for contour point {point}")]
    BranchSearchFailed { point: Complex64 },

    #[error("orbit left the strip |Im w| <= {bound:.1} during transit")]
    OrbitEscaped { bound: f64 },

    #[error("transit length N = {n} too short: Re F^N(w) = {reached:.2} < M = {m:.1}")]
    TransitTooShort { n: usize, reached: f64, m: f64 },

    #[error("fixed-point iteration did not reach tolerance {tol:.1e} in {max_iter} iterations (residual {residual:.3e})")]
    FixedPointNotConverged { tol: f64, max_iter: usize, residual: f64 },

    #[error("power iteration did not converge; Rayleigh candidates {first} and {second}")]
    PowerIterationStalled { first: Complex64, second: Complex64 },

    #[error("no repelling period-2 orbit found in the seeded annulus")]
    NoRepellingCycle,

    #[error("empty petal intersection: no boundary points reached the repelling petal")]
    EmptyPetalIntersection,

    #[error("tail functional-equation residual {residual:.3e} exceeds {bound:.1e} on the matching mesh")]
    TailResidualTooLarge { residual: f64, bound: f64 },

    #[error("tiny-number operation outside its regime: {reason}")]
    TinyOutOfRegime { reason: String },

    #[error("radius pair too close for a conditioned derivative extraction")]
    RadiusPairTooClose,

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("parse error: {reason}")]
    Parse { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit-code class: 2 input error, 3 numerical non-convergence,
    /// 4 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::InvalidConfig { .. } | Error::Io(_) => 2,
            Error::NewtonDiverged { .. }
            | Error::FixedPointNotConverged { .. }
            | Error::PowerIterationStalled { .. }
            | Error::NoRepellingCycle
            | Error::NotRenormalizable { .. }
            | Error::TransitTooShort { .. }
            | Error::EmptyPetalIntersection => 3,
            _ => 4,
        }
    }
}
