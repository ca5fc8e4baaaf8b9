//! Sum-of-squares programming: polynomials with affine dependence on scalar
//! decision variables, constrained to admit a weighted SOS representation on
//! a semialgebraic set, compiled to a standard-form semidefinite program.
//!
//! A constraint states that
//!
//! ```text
//!   expression(x) + sum_j a_j(x) sigma_j(x) + sum_l b_l(x) rho_l(x)
//! ```
//!
//! equals a Gram form `v(x)^T P v(x)` with `P >= 0` and every `sigma_j` SOS,
//! where `{a_j >= 0, b_l = 0}` cut out the domain. Compilation generates one
//! affine equality per monomial of the expanded identity; feasible points of
//! the resulting SDP are exactly the coefficient assignments admitting such a
//! certificate at the chosen degrees.

mod certificate;
mod compile;
mod constraint;
mod decision;

pub use certificate::{
    extract_certificate, gram_polynomial, verify_certificate, CertificateReport,
    ConstraintCertificate, ConstraintCheck, RealizedConstraint, SigmaCertificate, SosCertificate,
};
pub use compile::{
    bound_objective, compile, l1_objective, realize_constraints, solve_sos, CompiledProgram,
    LinearConstraint, LinearKind, SosProgram, SosSolveOutput,
};
pub use constraint::{gram_basis_for, BasisPolicy, SosConstraint};
pub use decision::{DecisionId, DecisionPolynomial, DecisionSpace, VarKind};

/// Gram matrices pass verification when their minimum eigenvalue is at least
/// `-PSD_TOLERANCE`.
pub const PSD_TOLERANCE: f64 = 1e-7;

/// Maximum absolute coefficient residual allowed between the certificate
/// identity's two sides.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-6;
