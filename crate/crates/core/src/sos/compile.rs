//! Compilation of SOS programs into standard-form semidefinite programs,
//! plus the stock objectives (L1 sparsity, actuator bound).

use super::certificate::{extract_certificate, verify_certificate, CertificateReport, SosCertificate};
use super::constraint::{BasisPolicy, SosConstraint};
use super::decision::{DecisionId, DecisionPolynomial, DecisionSpace, VarKind};
use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial, SemialgebraicSet};
use crate::sdp::{
    solve, EqualityRow, SdpProblem, SdpSolution, SolveOptions, SolveStatus, VarRef,
};
use std::collections::BTreeMap;

/// A scalar affine constraint over decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(DecisionId, f64)>,
    pub rhs: f64,
    pub kind: LinearKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    /// `sum terms = rhs`
    Equal,
    /// `sum terms >= rhs`
    GreaterEqual,
}

/// A complete SOS feasibility/optimization statement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SosProgram {
    pub decisions: DecisionSpace,
    pub constraints: Vec<SosConstraint>,
    pub linear_constraints: Vec<LinearConstraint>,
    /// Linear objective over decision variables, minimized. Empty for pure
    /// feasibility.
    pub objective: Vec<(DecisionId, f64)>,
}

/// Index maps from SOS entities into the compiled SDP's variables.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub problem: SdpProblem,
    /// Per constraint: PSD block index of the main Gram matrix.
    pub gram_blocks: Vec<usize>,
    /// Per constraint: PSD block index per sigma multiplier.
    pub sigma_blocks: Vec<Vec<usize>>,
    /// Per constraint: free-variable range (start, len) per rho multiplier.
    pub rho_ranges: Vec<Vec<(usize, usize)>>,
    /// Per decision variable: its location in the SDP.
    pub decision_refs: Vec<VarRef>,
}

/// Compile to a standard-form SDP. Deterministic: identical programs produce
/// identical problems, with variables and equality rows in a fixed order.
pub fn compile(program: &SosProgram) -> Result<CompiledProgram> {
    // Block allocation: per constraint the main Gram then its sigmas.
    let mut psd_blocks = Vec::new();
    let mut gram_blocks = Vec::new();
    let mut sigma_blocks = Vec::new();
    for c in &program.constraints {
        if c.gram_basis.dimension() != c.expression.dimension() {
            return Err(Error::DimensionMismatch {
                expected: c.expression.dimension(),
                got: c.gram_basis.dimension(),
            });
        }
        gram_blocks.push(psd_blocks.len());
        psd_blocks.push(c.gram_basis.len().max(1));
        let mut sblocks = Vec::new();
        for basis in &c.sigma_bases {
            sblocks.push(psd_blocks.len());
            psd_blocks.push(basis.len().max(1));
        }
        sigma_blocks.push(sblocks);
    }

    // Scalar variables: declared decisions first (free or nonneg), then
    // linear-constraint slacks (nonneg), then rho coefficients (free).
    let mut nonneg_count = 0usize;
    let mut free_count = 0usize;
    let mut decision_refs = Vec::with_capacity(program.decisions.len());
    for id in program.decisions.ids() {
        match program.decisions.kind(id) {
            VarKind::Nonneg => {
                decision_refs.push(VarRef::Nonneg(nonneg_count));
                nonneg_count += 1;
            }
            VarKind::Free => {
                decision_refs.push(VarRef::Free(free_count));
                free_count += 1;
            }
        }
    }
    let slack_base = nonneg_count;
    let n_slacks = program
        .linear_constraints
        .iter()
        .filter(|lc| lc.kind == LinearKind::GreaterEqual)
        .count();
    nonneg_count += n_slacks;

    let mut rho_ranges = Vec::with_capacity(program.constraints.len());
    for c in &program.constraints {
        let mut ranges = Vec::new();
        for basis in &c.rho_bases {
            ranges.push((free_count, basis.len()));
            free_count += basis.len();
        }
        rho_ranges.push(ranges);
    }

    // Equality rows: coefficient matching per constraint, then the scalar
    // linear constraints.
    let mut equalities = Vec::new();
    for (cidx, c) in program.constraints.iter().enumerate() {
        let capacity = c.gram_capacity();
        // The degree precondition applies to the multiplier products; the
        // expression itself may exceed the Gram capacity, which simply makes
        // the compiled program infeasible.
        for (j, (a, basis)) in c
            .domain
            .inequalities()
            .iter()
            .zip(&c.sigma_bases)
            .enumerate()
        {
            let product_degree = a.degree() + 2 * basis.max_degree();
            if product_degree > capacity {
                return Err(Error::DegreeOverflow {
                    constraint: c.label.clone(),
                    term: format!("a_{}(x) * sigma_{}(x)", j + 1, j + 1),
                    degree: product_degree as usize,
                    capacity: capacity as usize,
                });
            }
        }
        for (l, (b, basis)) in c.domain.equalities().iter().zip(&c.rho_bases).enumerate() {
            let product_degree = b.degree() + basis.max_degree();
            if product_degree > capacity {
                return Err(Error::DegreeOverflow {
                    constraint: c.label.clone(),
                    term: format!("b_{}(x) * rho_{}(x)", l + 1, l + 1),
                    degree: product_degree as usize,
                    capacity: capacity as usize,
                });
            }
        }

        // Accumulate the identity
        //   expression + sum a_j sigma_j + sum b_l rho_l - v^T P v = 0
        // coefficient by coefficient over its union support.
        let mut rows: BTreeMap<Monomial, (Vec<(VarRef, f64)>, f64)> = BTreeMap::new();
        let mut push = |m: Monomial, v: VarRef, coeff: f64| {
            if coeff != 0.0 {
                rows.entry(m).or_default().0.push((v, coeff));
            }
        };

        // -(v^T P v)
        let block = gram_blocks[cidx];
        let vb = c.gram_basis.entries();
        for s in 0..vb.len() {
            for t in s..vb.len() {
                push(
                    vb[s].mul(&vb[t]),
                    VarRef::Psd {
                        block,
                        row: s,
                        col: t,
                    },
                    -1.0,
                );
            }
        }
        // + a_j sigma_j
        for (j, (a, basis)) in c
            .domain
            .inequalities()
            .iter()
            .zip(&c.sigma_bases)
            .enumerate()
        {
            let sblock = sigma_blocks[cidx][j];
            let wb = basis.entries();
            for s in 0..wb.len() {
                for t in s..wb.len() {
                    let pair = wb[s].mul(&wb[t]);
                    for (nu, coeff) in a.terms() {
                        push(
                            pair.mul(nu),
                            VarRef::Psd {
                                block: sblock,
                                row: s,
                                col: t,
                            },
                            coeff,
                        );
                    }
                }
            }
        }
        // + b_l rho_l
        for (l, (b, basis)) in c.domain.equalities().iter().zip(&c.rho_bases).enumerate() {
            let (start, _) = rho_ranges[cidx][l];
            for (k, rmono) in basis.entries().iter().enumerate() {
                for (nu, coeff) in b.terms() {
                    push(rmono.mul(nu), VarRef::Free(start + k), coeff);
                }
            }
        }
        // + decision terms of the expression
        for (id, coeff_poly) in c.expression.terms() {
            let vref = decision_refs[id.index()];
            for (m, coeff) in coeff_poly.terms() {
                push(m.clone(), vref, coeff);
            }
        }
        // constant part moves to the right-hand side
        for (m, coeff) in c.expression.constant_part().terms() {
            rows.entry(m.clone()).or_default().1 -= coeff;
        }

        for (_, (terms, rhs)) in rows {
            if terms.is_empty() && rhs.abs() < 1e-300 {
                continue;
            }
            equalities.push(EqualityRow { terms, rhs });
        }
    }

    // Scalar linear constraints, with slacks for inequalities.
    let mut slack = slack_base;
    for lc in &program.linear_constraints {
        let mut terms: Vec<(VarRef, f64)> = lc
            .terms
            .iter()
            .map(|(id, v)| (decision_refs[id.index()], *v))
            .collect();
        if lc.kind == LinearKind::GreaterEqual {
            terms.push((VarRef::Nonneg(slack), -1.0));
            slack += 1;
        }
        equalities.push(EqualityRow {
            terms,
            rhs: lc.rhs,
        });
    }

    let objective = program
        .objective
        .iter()
        .map(|(id, v)| (decision_refs[id.index()], *v))
        .collect();

    let problem = SdpProblem {
        psd_blocks,
        nonneg_vars: nonneg_count,
        free_vars: free_count,
        equalities,
        objective,
    };
    problem.validate()?;

    Ok(CompiledProgram {
        problem,
        gram_blocks,
        sigma_blocks,
        rho_ranges,
        decision_refs,
    })
}

/// L1 sparsity objective: one nonnegative epigraph variable `t_k` per listed
/// decision variable with `-t_k <= theta_k <= t_k`, minimizing `sum t_k`.
pub fn l1_objective(
    space: &mut DecisionSpace,
    ids: &[DecisionId],
) -> (Vec<(DecisionId, f64)>, Vec<LinearConstraint>) {
    let mut objective = Vec::with_capacity(ids.len());
    let mut constraints = Vec::with_capacity(2 * ids.len());
    for &id in ids {
        let name = format!("|{}|", space.name(id));
        let t = space.declare_nonneg(name);
        objective.push((t, 1.0));
        constraints.push(LinearConstraint {
            terms: vec![(id, 1.0), (t, 1.0)],
            rhs: 0.0,
            kind: LinearKind::GreaterEqual,
        });
        constraints.push(LinearConstraint {
            terms: vec![(t, 1.0), (id, -1.0)],
            rhs: 0.0,
            kind: LinearKind::GreaterEqual,
        });
    }
    (objective, constraints)
}

/// Actuator-bound objective: a fresh scalar `M` with `M - u_i` and `u_i + M`
/// each certified nonnegative on the domain, minimizing `M`. Any feasible `M`
/// bounds every `|u_i|` on the domain from above.
///
/// The bound constraints carry the domain with its inequalities reflected
/// (`a_j -> -a_j`): in the shared certificate identity
/// `expr + sum a_j sigma_j + ... = v^T P v` this realizes the classical
/// subtracted S-procedure `expr >= sigma_j a_j >= 0` on the original domain,
/// which is what makes `M` a genuine upper bound for `|u_i|` there.
#[allow(clippy::type_complexity)]
pub fn bound_objective(
    space: &mut DecisionSpace,
    controller_components: &[DecisionPolynomial],
    domain: &SemialgebraicSet,
    policy: &BasisPolicy,
    sigma_degrees: Option<Vec<u32>>,
    rho_degrees: Option<Vec<u32>>,
) -> Result<(Vec<(DecisionId, f64)>, Vec<SosConstraint>, DecisionId)> {
    let m_id = space.declare("M");
    let dim = domain.dimension();
    let reflected = SemialgebraicSet::new(
        dim,
        domain
            .inequalities()
            .iter()
            .map(|a| a.scale(-1.0))
            .collect(),
        domain.equalities().to_vec(),
    )?;
    let m_term = DecisionPolynomial::decision_term(m_id, Polynomial::constant(dim, 1.0));
    let mut constraints = Vec::with_capacity(2 * controller_components.len());
    for (i, u) in controller_components.iter().enumerate() {
        let upper = m_term.sub(u)?;
        let lower = m_term.add(u)?;
        constraints.push(SosConstraint::putinar(
            format!("bound_upper_u{}", i + 1),
            upper,
            reflected.clone(),
            policy,
            sigma_degrees.clone(),
            rho_degrees.clone(),
            None,
        )?);
        constraints.push(SosConstraint::putinar(
            format!("bound_lower_u{}", i + 1),
            lower,
            reflected.clone(),
            policy,
            sigma_degrees.clone(),
            rho_degrees.clone(),
            None,
        )?);
    }
    Ok((vec![(m_id, 1.0)], constraints, m_id))
}

/// Compile, solve, extract and verify in one call.
#[derive(Debug, Clone)]
pub struct SosSolveOutput {
    pub solution: SdpSolution,
    pub certificate: SosCertificate,
    pub report: CertificateReport,
}

pub fn solve_sos(program: &SosProgram, options: &SolveOptions) -> Result<SosSolveOutput> {
    let compiled = compile(program)?;
    let solution = solve(&compiled.problem, options)?;
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(Error::Infeasible(
                "the SOS program admits no certificate at the chosen degrees".into(),
            ))
        }
        SolveStatus::Unbounded => {
            return Err(Error::Unbounded(
                "the SOS program's objective is unbounded below".into(),
            ))
        }
        SolveStatus::MaxIterations => {
            return Err(Error::NumericalFailure(
                "interior-point iteration cap reached before convergence".into(),
            ))
        }
        SolveStatus::NumericalFailure => {
            return Err(Error::NumericalFailure(format!(
                "interior-point breakdown: {}",
                solution.notes.join("; ")
            )))
        }
    }
    let certificate = extract_certificate(program, &compiled, &solution);
    let report = verify_certificate(&certificate, &realize_constraints(program, &certificate)?)?;
    Ok(SosSolveOutput {
        solution,
        certificate,
        report,
    })
}

/// Substitute the certificate's decision assignment into every constraint.
pub fn realize_constraints(
    program: &SosProgram,
    certificate: &SosCertificate,
) -> Result<Vec<super::certificate::RealizedConstraint>> {
    let assignment = certificate.assignment_map();
    program
        .constraints
        .iter()
        .map(|c| {
            Ok(super::certificate::RealizedConstraint {
                expression: c.expression.evaluate(&assignment)?,
                domain: c.domain.clone(),
            })
        })
        .collect()
}
