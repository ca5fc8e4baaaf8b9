//! Data-driven synthesis of stabilizing polynomial state-feedback controllers.
//!
//! The pipeline: fit a control-affine Koopman model over polynomial lifting
//! dictionaries from snapshot data ([`edmd`]), form the data-driven Lie
//! derivative of a candidate control Lyapunov function, pose the controller
//! search as a sum-of-squares program ([`sos`]), compile it to a semidefinite
//! program and solve it with an embedded interior-point method ([`sdp`]),
//! then validate the synthesized controller in closed-loop simulation
//! ([`sim`]).
//!
//! The symbolic substrate (sparse multivariate polynomials, monomial
//! dictionaries, semialgebraic sets) lives in [`poly`]; the synthesis
//! orchestration in [`synth`]; file-level pipeline steps shared with the CLI
//! in [`pipeline`].

pub mod edmd;

pub mod error;
pub mod pipeline;
pub mod poly;
pub mod sdp;
pub mod sim;
pub mod sos;
pub mod synth;
mod util;

pub use error::{Error, Result};
pub use poly::{Dictionary, Monomial, Polynomial, SemialgebraicSet};
