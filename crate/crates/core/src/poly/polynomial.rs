//! Sparse multivariate polynomials with real coefficients.

use super::monomial::Monomial;
use super::ZERO_THRESHOLD;
use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

/// A sparse multivariate polynomial: a canonicalized map from monomials to
/// coefficients. Stored coefficients never have absolute value below
/// [`ZERO_THRESHOLD`]; equality is equality of the canonical term maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dimension: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    /// The zero polynomial in dimension `d`.
    pub fn zero(dimension: usize) -> Self {
        assert!(dimension >= 1, "ambient dimension must be positive");
        Self {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    /// A constant polynomial.
    pub fn constant(dimension: usize, value: f64) -> Self {
        let mut p = Self::zero(dimension);
        p.add_term(Monomial::one(dimension), value);
        p
    }

    /// The coordinate polynomial `x_i` (0-based).
    pub fn variable(dimension: usize, index: usize) -> Self {
        let mut p = Self::zero(dimension);
        p.add_term(Monomial::variable(dimension, index), 1.0);
        p
    }

    /// Build from (monomial, coefficient) pairs; duplicates are summed and
    /// the result canonicalized.
    pub fn from_terms(dimension: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Self {
        let mut p = Self::zero(dimension);
        for (m, c) in terms {
            assert_eq!(m.dimension(), dimension, "monomial dimension mismatch");
            p.add_term(m, c);
        }
        p
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a monomial (zero when absent).
    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest absolute coefficient; zero for the zero polynomial.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                let v = e.get_mut();
                *v += c;
                if v.abs() < ZERO_THRESHOLD {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if c.abs() >= ZERO_THRESHOLD {
                    e.insert(c);
                }
            }
        }
    }

    fn check_dimension(&self, other: &Self) -> Result<()> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        Ok(())
    }

    /// Coefficient-wise sum, canonicalized.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dimension(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    /// Coefficient-wise difference, canonicalized.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Distributive product, canonicalized.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dimension(other)?;
        let mut out = Self::zero(self.dimension);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    /// Scalar multiple, canonicalized.
    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dimension);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Product with a single monomial.
    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        let mut out = Self::zero(self.dimension);
        for (mm, &c) in &self.terms {
            out.add_term(mm.mul(m), c);
        }
        out
    }

    /// Numeric value at a point.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum())
    }

    /// Partial derivative with respect to `x_i`.
    pub fn partial(&self, index: usize) -> Self {
        let mut out = Self::zero(self.dimension);
        for (m, &c) in &self.terms {
            if let Some((e, dm)) = m.derivative(index) {
                out.add_term(dm, c * f64::from(e));
            }
        }
        out
    }

    /// Gradient: component `i` is `d/dx_i` of `self`.
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dimension).map(|i| self.partial(i)).collect()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, &c) in &self.terms {
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, " {} ", sign)?;
            }
            if m.is_constant() {
                write!(f, "{mag}")?;
            } else if (mag - 1.0).abs() < ZERO_THRESHOLD {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Serialized form: `{"dimension": d, "terms": [{"exponents": [...], "coefficient": c}, ...]}`
/// with terms in graded-lex order so identical polynomials serialize to
/// identical bytes.
#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponents: Vec<u32>,
    coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    dimension: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = PolynomialRepr {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(m, &c)| TermRepr {
                    exponents: m.exponents().to_vec(),
                    coefficient: c,
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PolynomialRepr::deserialize(deserializer)?;
        if repr.dimension == 0 {
            return Err(D::Error::custom("polynomial dimension must be positive"));
        }
        let mut p = Polynomial::zero(repr.dimension);
        for t in repr.terms {
            if t.exponents.len() != repr.dimension {
                return Err(D::Error::custom(format!(
                    "term exponent length {} does not match dimension {}",
                    t.exponents.len(),
                    repr.dimension
                )));
            }
            p.add_term(Monomial::new(t.exponents), t.coefficient);
        }
        Ok(p)
    }
}
