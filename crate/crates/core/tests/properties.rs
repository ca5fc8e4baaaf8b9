//! Property tests for the algebraic substrate and the conic solver.

use koopsyn::poly::{build_dictionary, linear_combination, Monomial, Polynomial};
use koopsyn::sdp::{solve, EqualityRow, SdpProblem, SolveOptions, SolveStatus, VarRef};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Polynomial ring laws (exact for integer coefficients)
// ---------------------------------------------------------------------------

fn small_poly(dimension: usize) -> impl Strategy<Value = Polynomial> {
    let term = (
        proptest::collection::vec(0u32..3, dimension),
        -5i32..=5,
    );
    proptest::collection::vec(term, 0..6).prop_map(move |terms| {
        Polynomial::from_terms(
            dimension,
            terms
                .into_iter()
                .map(|(e, c)| (Monomial::new(e), f64::from(c))),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn add_commutes(a in small_poly(2), b in small_poly(2)) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
    }

    #[test]
    fn add_associates(a in small_poly(2), b in small_poly(2), c in small_poly(2)) {
        let left = a.add(&b).unwrap().add(&c).unwrap();
        let right = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn mul_commutes(a in small_poly(2), b in small_poly(2)) {
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
    }

    #[test]
    fn mul_associates(a in small_poly(2), b in small_poly(2), c in small_poly(2)) {
        let left = a.mul(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn mul_distributes_over_add(a in small_poly(2), b in small_poly(2), c in small_poly(2)) {
        let left = a.mul(&b.add(&c).unwrap()).unwrap();
        let right = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn add_zero_is_identity(a in small_poly(3)) {
        prop_assert_eq!(a.add(&Polynomial::zero(3)).unwrap(), a);
    }

    #[test]
    fn canonical_threshold_holds_after_operations(a in small_poly(2), b in small_poly(2)) {
        let sum = a.add(&b).unwrap();
        let prod = a.mul(&b).unwrap();
        for p in [sum, prod] {
            for (_, c) in p.terms() {
                prop_assert!(c.abs() >= 1e-12);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient versus central finite differences
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_finite_differences(
        p in small_poly(2),
        x0 in -1.5f64..1.5,
        x1 in -1.5f64..1.5,
    ) {
        let x = [x0, x1];
        let grad = p.gradient();
        let h = 1e-5;
        for i in 0..2 {
            let mut plus = x;
            let mut minus = x;
            plus[i] += h;
            minus[i] -= h;
            let fd = (p.eval(&plus).unwrap() - p.eval(&minus).unwrap()) / (2.0 * h);
            let exact = grad[i].eval(&x).unwrap();
            let tol = 1e-6 * (1.0 + fd.abs().max(exact.abs()));
            prop_assert!((fd - exact).abs() <= tol, "component {i}: fd {fd} vs {exact}");
        }
    }

    #[test]
    fn linear_combination_duality(
        coeffs in proptest::collection::vec(-3.0f64..3.0, 6),
        x0 in -2.0f64..2.0,
        x1 in -2.0f64..2.0,
    ) {
        // <c, dict(x)> equals the evaluated linear combination.
        let dict = build_dictionary(2, &[2, 2], Some(2));
        prop_assert_eq!(dict.len(), 6);
        let p = linear_combination(&coeffs, &dict).unwrap();
        let direct = p.eval(&[x0, x1]).unwrap();
        let lifted = dict.eval(&[x0, x1]).unwrap();
        let paired: f64 = coeffs.iter().zip(&lifted).map(|(c, v)| c * v).sum();
        prop_assert!((direct - paired).abs() <= 1e-12 * (1.0 + paired.abs()));
    }
}

// ---------------------------------------------------------------------------
// Solver-level invariants
// ---------------------------------------------------------------------------

fn trace_fixture() -> SdpProblem {
    SdpProblem {
        psd_blocks: vec![3],
        nonneg_vars: 1,
        free_vars: 0,
        equalities: vec![
            EqualityRow {
                terms: vec![
                    (
                        VarRef::Psd {
                            block: 0,
                            row: 0,
                            col: 0,
                        },
                        1.0,
                    ),
                    (VarRef::Nonneg(0), 1.0),
                ],
                rhs: 2.0,
            },
            EqualityRow {
                terms: vec![(
                    VarRef::Psd {
                        block: 0,
                        row: 0,
                        col: 1,
                    },
                    1.0,
                )],
                rhs: 0.4,
            },
        ],
        objective: vec![
            (
                VarRef::Psd {
                    block: 0,
                    row: 0,
                    col: 0,
                },
                1.0,
            ),
            (
                VarRef::Psd {
                    block: 0,
                    row: 1,
                    col: 1,
                },
                2.0,
            ),
            (
                VarRef::Psd {
                    block: 0,
                    row: 2,
                    col: 2,
                },
                1.0,
            ),
            (VarRef::Nonneg(0), 0.5),
        ],
    }
}

/// Weak duality with a residual-driven tolerance holds at every logged
/// iterate of the homogeneous embedding.
#[test]
fn weak_duality_at_every_iterate() {
    let sol = solve(&trace_fixture(), &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    for it in &sol.iterations {
        let residual_slack =
            10.0 * (it.primal_residual + it.dual_residual) * (1.0 + it.primal_objective.abs())
                + it.gap.abs()
                + 1e-9;
        assert!(
            it.primal_objective >= it.dual_objective - residual_slack,
            "iterate {}: pobj {} < dobj {} - slack {residual_slack}",
            it.iteration,
            it.primal_objective,
            it.dual_objective
        );
    }
}

/// Complementary slackness at the returned solution: trace of the product of
/// the primal block with the reconstructed dual slack stays below 1e-6.
#[test]
fn complementary_slackness_at_solution() {
    let problem = trace_fixture();
    let sol = solve(&problem, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);

    // s = c - A^T y, assembled blockwise.
    let n = 3;
    let mut s_mat = nalgebra::DMatrix::zeros(n, n);
    let mut s_nonneg = 0.0f64;
    let mut add = |v: &VarRef, coeff: f64| match *v {
        VarRef::Psd { row, col, .. } => {
            s_mat[(row, col)] += coeff;
            if row != col {
                s_mat[(col, row)] += coeff;
            }
        }
        VarRef::Nonneg(_) => s_nonneg += coeff,
        VarRef::Free(_) => unreachable!(),
    };
    for (v, coeff) in &problem.objective {
        add(v, *coeff);
    }
    for (k, row) in problem.equalities.iter().enumerate() {
        for (v, coeff) in &row.terms {
            add(v, -coeff * sol.dual_values[k]);
        }
    }
    let comp = (&sol.psd_values[0] * &s_mat).trace() + sol.nonneg_values[0] * s_nonneg;
    assert!(
        comp.abs() <= 1e-6,
        "complementary slackness residual {comp}"
    );
}

/// Raising multiplier degrees never turns a feasible program infeasible.
#[test]
fn degree_monotonicity_on_scalar_fixture() {
    use koopsyn::poly::SemialgebraicSet;
    use koopsyn::sos::{solve_sos, BasisPolicy, DecisionPolynomial, DecisionSpace, SosConstraint, SosProgram};

    let interval = SemialgebraicSet::new(
        1,
        vec![Polynomial::from_terms(
            1,
            [(Monomial::one(1), 1.0), (Monomial::new(vec![2]), -1.0)],
        )],
        vec![],
    )
    .unwrap();
    // -2(1 + C)x^2 with C fixed at -2: certifiably nonnegative.
    let expr = Polynomial::from_terms(1, [(Monomial::new(vec![2]), 2.0)]);
    for sigma_degree in [0u32, 2, 4] {
        let constraint = SosConstraint::putinar(
            format!("sigma_{sigma_degree}"),
            DecisionPolynomial::from_constant(expr.clone()),
            interval.clone(),
            &BasisPolicy::default(),
            Some(vec![sigma_degree]),
            None,
            None,
        )
        .unwrap();
        let program = SosProgram {
            decisions: DecisionSpace::new(),
            constraints: vec![constraint],
            linear_constraints: vec![],
            objective: vec![],
        };
        let out = solve_sos(&program, &SolveOptions::default())
            .unwrap_or_else(|e| panic!("sigma degree {sigma_degree} should stay feasible: {e}"));
        assert!(out.report.pass);
    }
}
