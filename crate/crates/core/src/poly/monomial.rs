//! Monomials as exponent vectors with a graded-lexicographic order.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// A monomial `x_1^{e_1} ... x_d^{e_d}` over an ambient dimension `d` given
/// by the length of its exponent vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    /// Monomial from an exponent vector. The vector length is the ambient
    /// dimension.
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    /// The constant monomial `1` in dimension `d`.
    pub fn one(dimension: usize) -> Self {
        Self {
            exponents: vec![0; dimension],
        }
    }

    /// The variable `x_i` (0-based index) in dimension `d`.
    pub fn variable(dimension: usize, index: usize) -> Self {
        assert!(index < dimension, "variable index out of range");
        let mut exponents = vec![0; dimension];
        exponents[index] = 1;
        Self { exponents }
    }

    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn exponent(&self, index: usize) -> u32 {
        self.exponents[index]
    }

    /// Total degree: the sum of all exponents.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// Product of two monomials (exponent-wise sum). Dimensions must match.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dimension(), other.dimension());
        Self {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Exponent-wise difference `self / other` when `other` divides `self`.
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        if self.dimension() != other.dimension() {
            return None;
        }
        let mut exponents = Vec::with_capacity(self.dimension());
        for (a, b) in self.exponents.iter().zip(&other.exponents) {
            exponents.push(a.checked_sub(*b)?);
        }
        Some(Self { exponents })
    }

    /// Numeric value at a point, `prod x_i^{e_i}`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension());
        self.exponents
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }

    /// `(e_i, x_1^{e_1} ... x_i^{e_i - 1} ... )`: the factor and monomial of
    /// the partial derivative with respect to `x_i`. `None` when `e_i = 0`.
    pub fn derivative(&self, index: usize) -> Option<(u32, Self)> {
        let e = self.exponents[index];
        if e == 0 {
            return None;
        }
        let mut exponents = self.exponents.clone();
        exponents[index] = e - 1;
        Some((e, Self { exponents }))
    }
}

/// Graded lexicographic order: compare total degree first; ties are broken
/// lexicographically on the exponent vector with `x_1` most significant and
/// higher exponents ordered first, so within one degree `x_1 < x_1 x_2 < ...`
/// reads in the conventional way: `[1, x1, x2, x3, x1^2, x1 x2, ...]` when
/// listed ascending.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        debug_assert_eq!(self.dimension(), other.dimension());
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}
