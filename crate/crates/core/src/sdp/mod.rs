//! Standard-form semidefinite programming: problem representation, an
//! embedded primal-dual interior-point solver, and SDPA sparse-format
//! interchange.
//!
//! The standard form is
//!
//! ```text
//!   minimize    <c, x>
//!   subject to  <A_i, x> = b_i,  i = 1..m
//!               x in (PSD blocks) x (nonnegative orthant) x (free space)
//! ```
//!
//! Symmetric-matrix coefficients follow the SDPA convention: a stored value
//! `v` on an off-diagonal entry `(i, j)` with `i < j` denotes the symmetric
//! matrix with both `(i, j)` and `(j, i)` equal to `v`, so it contributes
//! `2 v X_ij` to the row functional.

mod sdpa;
mod solver;

pub use sdpa::{export_sdpa, import_sdpa};
pub use solver::solve;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Reference to one scalar variable of an [`SdpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarRef {
    /// Entry `(row, col)` with `row <= col` of a PSD matrix block.
    Psd { block: usize, row: usize, col: usize },
    /// A nonnegative scalar variable.
    Nonneg(usize),
    /// An unrestricted scalar variable.
    Free(usize),
}

/// One affine equality row `sum coeff * var = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualityRow {
    pub terms: Vec<(VarRef, f64)>,
    pub rhs: f64,
}

/// A self-describing standard-form conic program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    /// Sizes of the symmetric PSD matrix variables.
    pub psd_blocks: Vec<usize>,
    /// Number of nonnegative scalar variables.
    pub nonneg_vars: usize,
    /// Number of unrestricted scalar variables.
    pub free_vars: usize,
    /// Affine equality constraints over all variables.
    pub equalities: Vec<EqualityRow>,
    /// Sparse linear objective, minimized.
    pub objective: Vec<(VarRef, f64)>,
}

impl SdpProblem {
    /// Validate that every referenced variable is declared and block sizes
    /// are positive.
    pub fn validate(&self) -> crate::Result<()> {
        if self.psd_blocks.iter().any(|&n| n == 0) {
            return Err(crate::Error::InvalidInput(
                "PSD block sizes must be >= 1".into(),
            ));
        }
        let check = |v: &VarRef| -> crate::Result<()> {
            match *v {
                VarRef::Psd { block, row, col } => {
                    let n = *self.psd_blocks.get(block).ok_or_else(|| {
                        crate::Error::InvalidInput(format!("undeclared PSD block {block}"))
                    })?;
                    if row > col || col >= n {
                        return Err(crate::Error::InvalidInput(format!(
                            "PSD entry ({row},{col}) out of range for block of size {n}"
                        )));
                    }
                }
                VarRef::Nonneg(k) => {
                    if k >= self.nonneg_vars {
                        return Err(crate::Error::InvalidInput(format!(
                            "undeclared nonnegative variable {k}"
                        )));
                    }
                }
                VarRef::Free(k) => {
                    if k >= self.free_vars {
                        return Err(crate::Error::InvalidInput(format!(
                            "undeclared free variable {k}"
                        )));
                    }
                }
            }
            Ok(())
        };
        for row in &self.equalities {
            for (v, _) in &row.terms {
                check(v)?;
            }
        }
        for (v, _) in &self.objective {
            check(v)?;
        }
        Ok(())
    }

    /// Total dimension of the PSD cones (sum of block sizes).
    pub fn total_psd_dimension(&self) -> usize {
        self.psd_blocks.iter().sum()
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

/// KKT residuals of a returned solution.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub duality_gap: f64,
}

/// Per-iteration diagnostics, logged for determinism and duality checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterStats {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

/// Result of [`solve`].
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Primal PSD blocks (full symmetric matrices), in declaration order.
    pub psd_values: Vec<DMatrix<f64>>,
    pub nonneg_values: Vec<f64>,
    pub free_values: Vec<f64>,
    /// Dual multipliers, one per equality row.
    pub dual_values: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: Vec<IterStats>,
    /// Human-readable notes (dropped redundant rows, certificate info).
    pub notes: Vec<String>,
}

impl SdpSolution {
    /// Value of a variable in the returned primal point.
    pub fn value(&self, v: VarRef) -> f64 {
        match v {
            VarRef::Psd { block, row, col } => self.psd_values[block][(row, col)],
            VarRef::Nonneg(k) => self.nonneg_values[k],
            VarRef::Free(k) => self.free_values[k],
        }
    }
}

/// Solver options (tolerances and iteration caps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative duality-gap tolerance.
    pub tol_gap: f64,
    /// Primal/dual feasibility tolerance.
    pub tol_feasibility: f64,
    /// Infeasibility-certificate tolerance.
    pub tol_infeasibility: f64,
    pub max_iterations: usize,
    /// Fraction-to-boundary step damping.
    pub step_fraction: f64,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_gap: 1e-8,
            tol_feasibility: 1e-7,
            tol_infeasibility: 1e-8,
            max_iterations: 200,
            step_fraction: 0.99,
            verbose: false,
        }
    }
}
