//! Exact verification toolkit for torus-alphabet subshifts, the factorial
//! inverse-limit tower, free ℤ_p simplicial complexes, marker search on
//! finite systems and a bound calculus for mean dimension.
//!
//! The math is generic over an exact [`Scalar`]; the aliases below fix the
//! two shipped backends.

pub mod arith;
pub mod complex;
pub mod error;
pub mod finite;
pub mod meandim;
pub mod report;
pub mod scalar;
pub mod shift;
pub mod torus;
pub mod tower;

use num_rational::{BigRational, Ratio};

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Unbounded exact rationals; the default backend.
pub type Rational = BigRational;
/// Fixed-width rationals for hot loops with small denominators.
pub type Rational64 = Ratio<i64>;

pub type Torus = torus::TorusElem<Rational>;
pub type TorusPoint = torus::TorusVec<Rational>;
pub type Seq = shift::SeqPoint<Rational>;
pub type Subshift = shift::SubshiftSpec<Rational>;
pub type Tower = tower::TowerSpec<Rational>;
pub type System = finite::FiniteSystem<Rational>;
pub type Bound = meandim::MdimBound<Rational>;

pub type Torus64 = torus::TorusElem<Rational64>;
pub type TorusPoint64 = torus::TorusVec<Rational64>;
pub type Seq64 = shift::SeqPoint<Rational64>;
pub type Tower64 = tower::TowerSpec<Rational64>;
