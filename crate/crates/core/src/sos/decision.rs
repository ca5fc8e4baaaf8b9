//! Scalar decision variables and polynomials affine in them.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Identifier of a scalar decision variable, assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DecisionId(pub(crate) usize);

impl DecisionId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Free,
    Nonneg,
}

/// Registry of scalar decision variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecisionSpace {
    vars: Vec<(String, VarKind)>,
}

impl DecisionSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<String>) -> DecisionId {
        self.vars.push((name.into(), VarKind::Free));
        DecisionId(self.vars.len() - 1)
    }

    pub fn declare_nonneg(&mut self, name: impl Into<String>) -> DecisionId {
        self.vars.push((name.into(), VarKind::Nonneg));
        DecisionId(self.vars.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn name(&self, id: DecisionId) -> &str {
        &self.vars[id.0].0
    }

    pub fn kind(&self, id: DecisionId) -> VarKind {
        self.vars[id.0].1
    }

    pub fn ids(&self) -> impl Iterator<Item = DecisionId> {
        (0..self.vars.len()).map(DecisionId)
    }
}

/// A polynomial with coefficients affine in the decision variables:
/// `constant(x) + sum_k theta_k * term_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPolynomial {
    dimension: usize,
    constant: Polynomial,
    terms: BTreeMap<DecisionId, Polynomial>,
}

impl DecisionPolynomial {
    pub fn from_constant(constant: Polynomial) -> Self {
        Self {
            dimension: constant.dimension(),
            constant,
            terms: BTreeMap::new(),
        }
    }

    pub fn zero(dimension: usize) -> Self {
        Self::from_constant(Polynomial::zero(dimension))
    }

    /// The expression `coefficient(x) * theta` for one decision variable.
    pub fn decision_term(id: DecisionId, coefficient: Polynomial) -> Self {
        let dimension = coefficient.dimension();
        let mut terms = BTreeMap::new();
        if !coefficient.is_zero() {
            terms.insert(id, coefficient);
        }
        Self {
            dimension,
            constant: Polynomial::zero(dimension),
            terms,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn constant_part(&self) -> &Polynomial {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (DecisionId, &Polynomial)> {
        self.terms.iter().map(|(&id, p)| (id, p))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: other.dimension,
            });
        }
        let mut out = self.clone();
        out.constant = out.constant.add(&other.constant)?;
        for (&id, p) in &other.terms {
            let entry = out
                .terms
                .entry(id)
                .or_insert_with(|| Polynomial::zero(self.dimension));
            *entry = entry.add(p)?;
        }
        out.terms.retain(|_, p| !p.is_zero());
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dimension: self.dimension,
            constant: self.constant.scale(s),
            terms: self
                .terms
                .iter()
                .map(|(&id, p)| (id, p.scale(s)))
                .collect(),
        }
    }

    /// Multiply every part by a plain polynomial (keeps affinity in the
    /// decision variables).
    pub fn mul_poly(&self, p: &Polynomial) -> Result<Self> {
        Ok(Self {
            dimension: self.dimension,
            constant: self.constant.mul(p)?,
            terms: self
                .terms
                .iter()
                .map(|(&id, t)| Ok((id, t.mul(p)?)))
                .collect::<Result<_>>()?,
        })
    }

    /// Substitute a numeric decision assignment, yielding a plain polynomial.
    pub fn evaluate(&self, assignment: &BTreeMap<DecisionId, f64>) -> Result<Polynomial> {
        let mut out = self.constant.clone();
        for (&id, p) in &self.terms {
            let theta = assignment.get(&id).copied().ok_or_else(|| {
                Error::InvalidInput(format!("missing assignment for decision variable {}", id.0))
            })?;
            out = out.add(&p.scale(theta))?;
        }
        Ok(out)
    }

    /// Maximum total degree over the constant and all coefficient
    /// polynomials.
    pub fn degree(&self) -> u32 {
        self.terms
            .values()
            .map(Polynomial::degree)
            .fold(self.constant.degree(), u32::max)
    }

    /// Union of the supports of all parts, in graded-lex order.
    pub fn support(&self) -> Vec<crate::poly::Monomial> {
        let mut set: std::collections::BTreeSet<crate::poly::Monomial> = self
            .constant
            .terms()
            .map(|(m, _)| m.clone())
            .collect();
        for p in self.terms.values() {
            set.extend(p.terms().map(|(m, _)| m.clone()));
        }
        set.into_iter().collect()
    }
}
