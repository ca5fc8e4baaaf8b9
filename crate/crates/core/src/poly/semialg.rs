//! Semialgebraic sets: finitely many polynomial inequalities and equalities.

use super::polynomial::Polynomial;
use super::MEMBERSHIP_TOLERANCE;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The set `{x : a_j(x) >= 0 for all j, b_l(x) = 0 for all l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemialgebraicSet {
    dimension: usize,
    inequalities: Vec<Polynomial>,
    equalities: Vec<Polynomial>,
}

impl SemialgebraicSet {
    pub fn new(
        dimension: usize,
        inequalities: Vec<Polynomial>,
        equalities: Vec<Polynomial>,
    ) -> Result<Self> {
        for p in inequalities.iter().chain(&equalities) {
            if p.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: p.dimension(),
                });
            }
        }
        Ok(Self {
            dimension,
            inequalities,
            equalities,
        })
    }

    /// All of R^d.
    pub fn whole_space(dimension: usize) -> Self {
        Self {
            dimension,
            inequalities: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn inequalities(&self) -> &[Polynomial] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Polynomial] {
        &self.equalities
    }

    /// Membership test with the canonical tolerance band: every
    /// `a_j(x) >= -tol` and every `|b_l(x)| <= tol`.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.contains_with_tolerance(x, MEMBERSHIP_TOLERANCE)
    }

    pub fn contains_with_tolerance(&self, x: &[f64], tol: f64) -> Result<bool> {
        for a in &self.inequalities {
            if a.eval(x)? < -tol {
                return Ok(false);
            }
        }
        for b in &self.equalities {
            if b.eval(x)?.abs() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    fn unit_disk() -> SemialgebraicSet {
        // 1 - x1^2 - x2^2 >= 0
        let a = Polynomial::from_terms(
            2,
            [
                (Monomial::one(2), 1.0),
                (Monomial::new(vec![2, 0]), -1.0),
                (Monomial::new(vec![0, 2]), -1.0),
            ],
        );
        SemialgebraicSet::new(2, vec![a], vec![]).unwrap()
    }

    #[test]
    fn membership_band() {
        let d = unit_disk();
        assert!(d.contains(&[0.5, 0.5]).unwrap());
        assert!(d.contains(&[1.0, 0.0]).unwrap());
        assert!(!d.contains(&[1.1, 0.0]).unwrap());
    }

    #[test]
    fn equality_band() {
        // circle 1 - x1^2 - x2^2 = 0
        let b = Polynomial::from_terms(
            2,
            [
                (Monomial::one(2), 1.0),
                (Monomial::new(vec![2, 0]), -1.0),
                (Monomial::new(vec![0, 2]), -1.0),
            ],
        );
        let s = SemialgebraicSet::new(2, vec![], vec![b]).unwrap();
        assert!(s.contains(&[1.0, 0.0]).unwrap());
        assert!(!s.contains(&[0.5, 0.5]).unwrap());
    }

    #[test]
    fn dimension_checked() {
        assert!(unit_disk().contains(&[0.0]).is_err());
    }
}
