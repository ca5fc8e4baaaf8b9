//! SOS constraints with their multiplier structure and Gram bases.

use super::decision::DecisionPolynomial;
use crate::error::{Error, Result};
use crate::poly::{build_dictionary, Dictionary, Monomial, SemialgebraicSet};

/// Policy for Gram-basis monomials: optional per-variable exponent caps
/// (e.g. degree at most one in a variable made redundant by an algebraic
/// relation of the domain) and optional Newton-polytope interval pruning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BasisPolicy {
    /// Per-variable exponent caps for Gram-basis monomials.
    pub caps: Option<Vec<u32>>,
    /// Prune basis monomials provably unusable for a fixed target support
    /// (applied only when the expression has no decision variables and no
    /// multipliers; conservative interval bounds on the half polytope).
    pub newton_prune: bool,
}

/// All monomials of total degree at most `ceil(expr_degree / 2)` respecting
/// the per-variable caps from the policy, in graded-lex order.
pub fn gram_basis_for(
    expr_degree: u32,
    domain: &SemialgebraicSet,
    policy: &BasisPolicy,
) -> Dictionary {
    let d = domain.dimension();
    let half = expr_degree.div_ceil(2);
    let caps: Vec<u32> = match &policy.caps {
        Some(c) => {
            assert_eq!(c.len(), d, "one cap per variable");
            c.iter().map(|&ci| ci.min(half)).collect()
        }
        None => vec![half; d],
    };
    build_dictionary(d, &caps, Some(half))
}

/// Conservative Newton-polytope pruning: keep only basis monomials whose
/// exponents fit the per-variable and total-degree intervals of half the
/// target support. Valid when the target polynomial is fixed (Reznick's
/// half-polytope support theorem, relaxed to coordinate boxes).
pub fn newton_interval_prune(basis: &Dictionary, target_support: &[Monomial]) -> Dictionary {
    if target_support.is_empty() {
        return basis.filter(|_| false);
    }
    let d = basis.dimension();
    let mut min_e = vec![u32::MAX; d];
    let mut max_e = vec![0u32; d];
    let mut min_deg = u32::MAX;
    let mut max_deg = 0u32;
    for m in target_support {
        for i in 0..d {
            min_e[i] = min_e[i].min(m.exponent(i));
            max_e[i] = max_e[i].max(m.exponent(i));
        }
        min_deg = min_deg.min(m.degree());
        max_deg = max_deg.max(m.degree());
    }
    basis.filter(|m| {
        (0..d).all(|i| {
            let e = m.exponent(i);
            e >= min_e[i].div_ceil(2) && e <= max_e[i] / 2
        }) && m.degree() >= min_deg.div_ceil(2)
            && m.degree() <= max_deg / 2
    })
}

fn floor_even(v: u32) -> u32 {
    v - v % 2
}

/// One SOS constraint: an affine-in-decisions expression required to admit
/// a weighted SOS certificate over a semialgebraic domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SosConstraint {
    pub label: String,
    pub expression: DecisionPolynomial,
    pub domain: SemialgebraicSet,
    /// Degree of each inequality multiplier sigma_j.
    pub sigma_degrees: Vec<u32>,
    /// Degree of each equality multiplier rho_l.
    pub rho_degrees: Vec<u32>,
    /// Monomial basis v(x) of the main Gram form.
    pub gram_basis: Dictionary,
    /// Gram basis of each sigma_j.
    pub sigma_bases: Vec<Dictionary>,
    /// Coefficient basis of each rho_l (free polynomials, degree-capped
    /// only).
    pub rho_bases: Vec<Dictionary>,
}

impl SosConstraint {
    /// Build a constraint with the default degree policy: multiplier degrees
    /// are chosen so that `deg(a_j sigma_j)` and `deg(b_l rho_l)` equal the
    /// expression degree rounded up to even. Explicit `sigma_degrees` /
    /// `rho_degrees` override the defaults; `gram_degree` overrides the main
    /// basis half-degree.
    pub fn putinar(
        label: impl Into<String>,
        expression: DecisionPolynomial,
        domain: SemialgebraicSet,
        policy: &BasisPolicy,
        sigma_degrees: Option<Vec<u32>>,
        rho_degrees: Option<Vec<u32>>,
        gram_degree: Option<u32>,
    ) -> Result<Self> {
        if expression.dimension() != domain.dimension() {
            return Err(Error::DimensionMismatch {
                expected: domain.dimension(),
                got: expression.dimension(),
            });
        }
        let expr_degree = expression.degree();
        let target = expr_degree + expr_degree % 2;

        let sigma_degrees = match sigma_degrees {
            Some(v) => {
                if v.len() != domain.inequalities().len() {
                    return Err(Error::LengthMismatch {
                        expected: domain.inequalities().len(),
                        got: v.len(),
                    });
                }
                v
            }
            None => domain
                .inequalities()
                .iter()
                .map(|a| floor_even(target.saturating_sub(a.degree())))
                .collect(),
        };
        let rho_degrees = match rho_degrees {
            Some(v) => {
                if v.len() != domain.equalities().len() {
                    return Err(Error::LengthMismatch {
                        expected: domain.equalities().len(),
                        got: v.len(),
                    });
                }
                v
            }
            None => domain
                .equalities()
                .iter()
                .map(|b| target.saturating_sub(b.degree()))
                .collect(),
        };

        // The default Gram form is sized to hold the expression and every
        // multiplier product; an explicit gram_degree that is too small
        // surfaces later as a degree-overflow error.
        let needed = {
            let mut t = target;
            for (a, &sd) in domain.inequalities().iter().zip(&sigma_degrees) {
                let p = a.degree() + sd;
                t = t.max(p + p % 2);
            }
            for (b, &rd) in domain.equalities().iter().zip(&rho_degrees) {
                let p = b.degree() + rd;
                t = t.max(p + p % 2);
            }
            t
        };
        let mut gram_basis = match gram_degree {
            Some(g) => gram_basis_for(2 * g, &domain, policy),
            None => gram_basis_for(needed, &domain, policy),
        };
        if policy.newton_prune
            && expression.terms().next().is_none()
            && domain.inequalities().is_empty()
            && domain.equalities().is_empty()
        {
            gram_basis = newton_interval_prune(&gram_basis, &expression.support());
        }

        let sigma_bases = sigma_degrees
            .iter()
            .map(|&deg| gram_basis_for(deg, &domain, policy))
            .collect();
        // Equality multipliers are fully free polynomials; their basis is
        // capped by total degree only.
        let d = domain.dimension();
        let rho_bases = rho_degrees
            .iter()
            .map(|&deg| build_dictionary(d, &vec![deg; d], Some(deg)))
            .collect();

        Ok(Self {
            label: label.into(),
            expression,
            domain,
            sigma_degrees,
            rho_degrees,
            gram_basis,
            sigma_bases,
            rho_bases,
        })
    }

    /// Largest total degree the Gram form can represent.
    pub fn gram_capacity(&self) -> u32 {
        2 * self.gram_basis.max_degree()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    #[test]
    fn gram_basis_degree_two_univariate() {
        let dom = SemialgebraicSet::whole_space(1);
        let b = gram_basis_for(2, &dom, &BasisPolicy::default());
        assert_eq!(b.len(), 2); // [1, x]
    }

    #[test]
    fn gram_basis_degree_four_univariate() {
        let dom = SemialgebraicSet::whole_space(1);
        let b = gram_basis_for(4, &dom, &BasisPolicy::default());
        assert_eq!(b.len(), 3); // [1, x, x^2]
    }

    #[test]
    fn gram_basis_with_variable_cap() {
        // degree 4, 3 variables, x2 capped at 1: graded-lex list without any
        // x2^2 multiples.
        let dom = SemialgebraicSet::whole_space(3);
        let policy = BasisPolicy {
            caps: Some(vec![u32::MAX, 1, u32::MAX]),
            newton_prune: false,
        };
        let b = gram_basis_for(4, &dom, &policy);
        assert!(b.entries().iter().all(|m| m.exponent(1) <= 1));
        assert!(b.entries().iter().all(|m| m.degree() <= 2));
        // enumerate by hand: deg<=2 monomials in 3 vars: 10, minus x2^2: 9.
        assert_eq!(b.len(), 9);
    }

    #[test]
    fn default_multiplier_degrees_round_to_even() {
        // Expression of degree 2 over {1 - x^2 >= 0}: sigma degree 0.
        let a = Polynomial::from_terms(
            1,
            [
                (crate::poly::Monomial::one(1), 1.0),
                (crate::poly::Monomial::new(vec![2]), -1.0),
            ],
        );
        let dom = SemialgebraicSet::new(1, vec![a], vec![]).unwrap();
        let expr = DecisionPolynomial::from_constant(Polynomial::from_terms(
            1,
            [(crate::poly::Monomial::new(vec![2]), -2.0)],
        ));
        let c = SosConstraint::putinar(
            "t",
            expr,
            dom,
            &BasisPolicy::default(),
            None,
            None,
            None,
        )
        .unwrap();
        assert_eq!(c.sigma_degrees, vec![0]);
        assert_eq!(c.gram_basis.len(), 2);
        assert_eq!(c.sigma_bases[0].len(), 1);
    }

    #[test]
    fn newton_prune_pure_power() {
        let dom = SemialgebraicSet::whole_space(1);
        let basis = gram_basis_for(4, &dom, &BasisPolicy::default());
        let pruned = newton_interval_prune(&basis, &[crate::poly::Monomial::new(vec![4])]);
        assert_eq!(pruned.len(), 1);
        assert_eq!(pruned.entry(0).exponents(), &[2]);
    }
}
