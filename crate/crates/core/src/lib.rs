//! Remez (norming) constants of subsets of the unit ball, the smooth
//! rigidity bounds they imply, and desk-scale verification of the
//! topological Remez inequality and the level-set isotopy construction.
//!
//! Module map:
//!
//! * [`poly`]: dense multivariate polynomials, Chebyshev polynomials,
//!   certified sup-norms over the unit ball.
//! * [`lp`]: dense primal simplex for two-sided inequality systems.
//! * [`remez`]: finite, measure and topological Remez bounds.
//! * [`rigidity`]: rigidity lower bounds and divided differences.
//! * [`extrema`]: critical points and the Bezout count.
//! * [`levelset`]: zero sets in the plane, gradient flow, isotopy verdicts.
//! * [`gallery`]: the worked examples, measured against expected values.

pub mod error;
pub mod extrema;
pub mod gallery;
pub mod levelset;
pub mod linalg;
pub mod lp;
pub mod poly;
pub mod remez;
pub mod rigidity;
pub(crate) mod serde_ext;

pub use error::{Error, Result};
pub use poly::{chebyshev_t, markov_derivative_bound, sup_norm_ball, MultiPoly, SupNormEnclosure};
