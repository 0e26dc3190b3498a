//! Progression-free subsets of F_p^n.
//!
//! The crate builds the known large line-free sets, verifies them, computes
//! exact maxima in small spaces by branch and bound, evaluates closed-form
//! bounds, and produces replayable counting certificates that rule out
//! line-free sets of a given size in F_p^3.

pub mod bounds;
pub mod certify;
pub mod constructions;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod pointset;
pub mod search;
pub mod verifier;

pub use error::{Error, Result};
pub use geometry::{Direction, Fp, Hyperplane, IncidenceIndex, Line, Point, SpaceSpec};
pub use grid::{parse_grid, render_grid, render_tikz, GridDocument};
pub use pointset::{AffineMap, PointSet};

/// Exact rational scalar used by every bound that feeds a certificate.
pub type Rational = num_rational::Ratio<i64>;
/// Arbitrary-precision rational scalar.
pub type BigRational = num_rational::BigRational;
/// Equality-form linear program over exact rationals.
pub type ExactLp = linalg::EqualityLp<Rational>;
/// Equality-form linear program over `f64`, for cross-checks only.
pub type FloatLp = linalg::EqualityLp<f64>;

/// Version string stamped into machine-readable output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
