//! Numeric SOS certificates: Gram matrices, multiplier polynomials, and the
//! a-posteriori verification of the certificate identity.

use super::compile::{CompiledProgram, SosProgram};
use super::decision::DecisionId;
use super::{PSD_TOLERANCE, RECONSTRUCTION_TOLERANCE};
use crate::error::{Error, Result};
use crate::poly::{Dictionary, Polynomial, SemialgebraicSet};
use crate::sdp::SdpSolution;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Row-major nested-array serialization for Gram matrices.
pub(crate) mod dmatrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

/// Gram certificate of one SOS multiplier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaCertificate {
    pub basis: Dictionary,
    #[serde(with = "dmatrix_rows")]
    pub gram: DMatrix<f64>,
}

/// Certificate data for one constraint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintCertificate {
    pub label: String,
    pub gram_basis: Dictionary,
    #[serde(with = "dmatrix_rows")]
    pub gram: DMatrix<f64>,
    pub sigma: Vec<SigmaCertificate>,
    pub rho: Vec<Polynomial>,
}

/// A full numeric certificate: the decision assignment plus per-constraint
/// Gram matrices and multipliers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SosCertificate {
    /// Decision values in declaration order, with their names.
    pub decision_names: Vec<String>,
    pub decision_values: Vec<f64>,
    pub constraints: Vec<ConstraintCertificate>,
}

impl SosCertificate {
    pub fn assignment_map(&self) -> BTreeMap<DecisionId, f64> {
        self.decision_values
            .iter()
            .enumerate()
            .map(|(i, &v)| (DecisionId(i), v))
            .collect()
    }

    pub fn value(&self, id: DecisionId) -> f64 {
        self.decision_values[id.index()]
    }
}

/// A constraint with the decision assignment substituted in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizedConstraint {
    pub expression: Polynomial,
    pub domain: SemialgebraicSet,
}

/// Pull Gram matrices, multipliers, and the decision assignment out of a
/// solved SDP.
pub fn extract_certificate(
    program: &SosProgram,
    compiled: &CompiledProgram,
    solution: &SdpSolution,
) -> SosCertificate {
    let decision_values: Vec<f64> = compiled
        .decision_refs
        .iter()
        .map(|&r| solution.value(r))
        .collect();
    let decision_names = program
        .decisions
        .ids()
        .map(|id| program.decisions.name(id).to_owned())
        .collect();

    let mut constraints = Vec::with_capacity(program.constraints.len());
    for (cidx, c) in program.constraints.iter().enumerate() {
        let gram = solution.psd_values[compiled.gram_blocks[cidx]].clone();
        let sigma = c
            .sigma_bases
            .iter()
            .zip(&compiled.sigma_blocks[cidx])
            .map(|(basis, &blk)| SigmaCertificate {
                basis: basis.clone(),
                gram: solution.psd_values[blk].clone(),
            })
            .collect();
        let rho = c
            .rho_bases
            .iter()
            .zip(&compiled.rho_ranges[cidx])
            .map(|(basis, &(start, len))| {
                let coeffs: Vec<f64> = (0..len).map(|k| solution.free_values[start + k]).collect();
                crate::poly::linear_combination(&coeffs, basis)
                    .expect("rho basis length matches its coefficient range")
            })
            .collect();
        constraints.push(ConstraintCertificate {
            label: c.label.clone(),
            gram_basis: c.gram_basis.clone(),
            gram,
            sigma,
            rho,
        });
    }

    SosCertificate {
        decision_names,
        decision_values,
        constraints,
    }
}

/// Expand `v(x)^T P v(x)` symbolically.
pub fn gram_polynomial(basis: &Dictionary, gram: &DMatrix<f64>) -> Polynomial {
    let n = basis.len();
    let mut terms = Vec::new();
    for s in 0..n {
        for t in s..n {
            let coeff = if s == t {
                gram[(s, s)]
            } else {
                gram[(s, t)] + gram[(t, s)]
            };
            terms.push((basis.entry(s).mul(basis.entry(t)), coeff));
        }
    }
    Polynomial::from_terms(basis.dimension(), terms)
}

/// Per-constraint verification outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub label: String,
    /// Smallest eigenvalue over the main Gram and all sigma Grams.
    pub min_eigenvalue: f64,
    /// Largest absolute coefficient of
    /// `expression + sum a_j sigma_j + sum b_l rho_l - v^T P v`.
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub checks: Vec<ConstraintCheck>,
    pub pass: bool,
}

impl CertificateReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{}: {} (min eigenvalue {:.3e}, identity residual {:.3e})\n",
                c.label,
                if c.pass { "pass" } else { "FAIL" },
                c.min_eigenvalue,
                c.max_residual,
            ));
        }
        out
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Check each certificate against its realized constraint: every Gram block
/// must be PSD to `PSD_TOLERANCE` and the certificate identity must hold
/// coefficient-wise to `RECONSTRUCTION_TOLERANCE`.
pub fn verify_certificate(
    certificate: &SosCertificate,
    realized: &[RealizedConstraint],
) -> Result<CertificateReport> {
    if certificate.constraints.len() != realized.len() {
        return Err(Error::LengthMismatch {
            expected: certificate.constraints.len(),
            got: realized.len(),
        });
    }
    let mut checks = Vec::with_capacity(realized.len());
    for (cert, real) in certificate.constraints.iter().zip(realized) {
        let nb = cert.gram_basis.len();
        if cert.gram.nrows() != nb.max(1) || cert.gram.ncols() != nb.max(1) {
            return Err(Error::InvalidInput(format!(
                "Gram matrix shape {}x{} does not match basis size {} in `{}`",
                cert.gram.nrows(),
                cert.gram.ncols(),
                nb,
                cert.label
            )));
        }
        if cert.sigma.len() != real.domain.inequalities().len()
            || cert.rho.len() != real.domain.equalities().len()
        {
            return Err(Error::InvalidInput(format!(
                "multiplier count does not match the domain of `{}`",
                cert.label
            )));
        }

        let mut min_eig = min_eigenvalue(&cert.gram);
        let mut lhs = real.expression.clone();
        for (a, sc) in real.domain.inequalities().iter().zip(&cert.sigma) {
            if sc.gram.nrows() != sc.basis.len().max(1) {
                return Err(Error::InvalidInput(format!(
                    "sigma Gram shape mismatch in `{}`",
                    cert.label
                )));
            }
            min_eig = min_eig.min(min_eigenvalue(&sc.gram));
            let sigma = gram_polynomial(&sc.basis, &sc.gram);
            lhs = lhs.add(&a.mul(&sigma)?)?;
        }
        for (b, rho) in real.domain.equalities().iter().zip(&cert.rho) {
            lhs = lhs.add(&b.mul(rho)?)?;
        }
        let rhs = gram_polynomial(&cert.gram_basis, &cert.gram);
        let residual = lhs.sub(&rhs)?.max_abs_coefficient();

        let pass = min_eig >= -PSD_TOLERANCE && residual <= RECONSTRUCTION_TOLERANCE;
        checks.push(ConstraintCheck {
            label: cert.label.clone(),
            min_eigenvalue: min_eig,
            max_residual: residual,
            pass,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(CertificateReport { checks, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    #[test]
    fn perfect_square_gram_passes_with_zero_residual() {
        // p = x^4 - 2x^2 + 1 = (x^2 - 1)^2 with v = [1, x, x^2] and
        // P = [[1,0,-1],[0,0,0],[-1,0,1]].
        let basis = crate::poly::build_dictionary(1, &[2], None);
        let gram = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0]);
        let p = Polynomial::from_terms(
            1,
            [
                (Monomial::new(vec![4]), 1.0),
                (Monomial::new(vec![2]), -2.0),
                (Monomial::new(vec![0]), 1.0),
            ],
        );
        let cert = SosCertificate {
            decision_names: vec![],
            decision_values: vec![],
            constraints: vec![ConstraintCertificate {
                label: "square".into(),
                gram_basis: basis,
                gram,
                sigma: vec![],
                rho: vec![],
            }],
        };
        let realized = vec![RealizedConstraint {
            expression: p,
            domain: SemialgebraicSet::whole_space(1),
        }];
        let report = verify_certificate(&cert, &realized).unwrap();
        assert!(report.pass);
        assert_eq!(report.checks[0].max_residual, 0.0);
        assert!(report.checks[0].min_eigenvalue >= -1e-12);
    }

    #[test]
    fn negative_eigenvalue_fails() {
        let basis = crate::poly::build_dictionary(1, &[0], None); // [1]
        let gram = DMatrix::from_element(1, 1, -1e-3);
        let cert = SosCertificate {
            decision_names: vec![],
            decision_values: vec![],
            constraints: vec![ConstraintCertificate {
                label: "bad".into(),
                gram_basis: basis,
                gram,
                sigma: vec![],
                rho: vec![],
            }],
        };
        let realized = vec![RealizedConstraint {
            expression: Polynomial::constant(1, -1e-3),
            domain: SemialgebraicSet::whole_space(1),
        }];
        let report = verify_certificate(&cert, &realized).unwrap();
        assert!(!report.pass);
        assert!((report.checks[0].min_eigenvalue + 1e-3).abs() < 1e-12);
    }

    #[test]
    fn small_perturbation_still_passes() {
        // Coefficient noise of 1e-9 stays well inside both tolerances.
        let basis = crate::poly::build_dictionary(1, &[2], None);
        let mut gram =
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0]);
        gram[(1, 1)] += 1e-9;
        let p = Polynomial::from_terms(
            1,
            [
                (Monomial::new(vec![4]), 1.0),
                (Monomial::new(vec![2]), -2.0),
                (Monomial::new(vec![0]), 1.0),
            ],
        );
        let cert = SosCertificate {
            decision_names: vec![],
            decision_values: vec![],
            constraints: vec![ConstraintCertificate {
                label: "square".into(),
                gram_basis: basis,
                gram,
                sigma: vec![],
                rho: vec![],
            }],
        };
        let realized = vec![RealizedConstraint {
            expression: p,
            domain: SemialgebraicSet::whole_space(1),
        }];
        let report = verify_certificate(&cert, &realized).unwrap();
        assert!(report.pass);
    }
}
