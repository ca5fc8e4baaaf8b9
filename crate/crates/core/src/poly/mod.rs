//! Sparse multivariate polynomial arithmetic, monomial dictionaries, and
//! semialgebraic set descriptions.
//!
//! All types here are immutable after construction and safe to share across
//! threads; operations are pure functions.

mod dictionary;
mod monomial;
mod polynomial;
mod semialg;

pub use dictionary::{build_dictionary, linear_combination, Dictionary};
pub use monomial::Monomial;
pub use polynomial::Polynomial;
pub use semialg::SemialgebraicSet;

/// Coefficients with absolute value below this are dropped during
/// canonicalization. Below double-precision noise for desk-scale problems,
/// keeps term maps sparse.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Tolerance band for semialgebraic membership tests.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;
