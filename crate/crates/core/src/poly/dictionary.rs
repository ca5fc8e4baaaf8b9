//! Ordered monomial dictionaries: the lifting coordinates.

use super::monomial::Monomial;
use super::polynomial::Polynomial;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An ordered list of pairwise-distinct monomials in graded-lex order.
/// Indices into a dictionary are reproducible across runs and platforms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    dimension: usize,
    entries: Vec<Monomial>,
}

impl Dictionary {
    /// Build from explicit monomials; they are sorted into graded-lex order
    /// and must be pairwise distinct.
    pub fn new(dimension: usize, mut entries: Vec<Monomial>) -> Result<Self> {
        assert!(dimension >= 1, "ambient dimension must be positive");
        for m in &entries {
            if m.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: m.dimension(),
                });
            }
        }
        entries.sort();
        if entries.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(
                "dictionary entries must be pairwise distinct".into(),
            ));
        }
        Ok(Self { dimension, entries })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> &Monomial {
        &self.entries[index]
    }

    /// Index of a monomial, if present (entries are sorted).
    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.entries.binary_search(m).ok()
    }

    /// Maximum total degree over all entries; zero when empty.
    pub fn max_degree(&self) -> u32 {
        self.entries.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Evaluate all entries at a point, in dictionary order.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(self.entries.iter().map(|m| m.eval(x)).collect())
    }

    /// Whether every entry of `other` also appears in `self`.
    pub fn contains_all(&self, other: &Dictionary) -> bool {
        other.entries.iter().all(|m| self.position(m).is_some())
    }

    /// Keep only the entries satisfying the predicate.
    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        Self {
            dimension: self.dimension,
            entries: self.entries.iter().filter(|m| keep(m)).cloned().collect(),
        }
    }
}

/// All monomials with `exponent_i <= caps_i` (and total degree `<= total_cap`
/// when given), in graded-lex order. The constant monomial is always included
/// since every cap admits the zero exponent.
pub fn build_dictionary(dimension: usize, caps: &[u32], total_cap: Option<u32>) -> Dictionary {
    assert_eq!(caps.len(), dimension, "one exponent cap per variable");
    let mut entries = Vec::new();
    let mut current = vec![0u32; dimension];
    enumerate_exponents(caps, total_cap, 0, &mut current, &mut entries);
    entries.sort();
    Dictionary {
        dimension,
        entries,
    }
}

fn enumerate_exponents(
    caps: &[u32],
    total_cap: Option<u32>,
    index: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if index == caps.len() {
        out.push(Monomial::new(current.clone()));
        return;
    }
    let used: u32 = current[..index].iter().sum();
    let mut max_e = caps[index];
    if let Some(cap) = total_cap {
        max_e = max_e.min(cap.saturating_sub(used));
    }
    for e in 0..=max_e {
        current[index] = e;
        enumerate_exponents(caps, total_cap, index + 1, current, out);
    }
    current[index] = 0;
}

/// `sum_i c_i * D_i` as a canonical polynomial.
pub fn linear_combination(coefficients: &[f64], dictionary: &Dictionary) -> Result<Polynomial> {
    if coefficients.len() != dictionary.len() {
        return Err(Error::LengthMismatch {
            expected: dictionary.len(),
            got: coefficients.len(),
        });
    }
    Ok(Polynomial::from_terms(
        dictionary.dimension(),
        dictionary
            .entries()
            .iter()
            .zip(coefficients)
            .map(|(m, &c)| (m.clone(), c)),
    ))
}

/// Serialized form: `{"dimension": d, "entries": [[e...], ...]}` in
/// dictionary order.
#[derive(Serialize, Deserialize)]
struct DictionaryRepr {
    dimension: usize,
    entries: Vec<Vec<u32>>,
}

impl Serialize for Dictionary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DictionaryRepr {
            dimension: self.dimension,
            entries: self.entries.iter().map(|m| m.exponents().to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dictionary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DictionaryRepr::deserialize(d)?;
        Dictionary::new(
            repr.dimension,
            repr.entries.into_iter().map(Monomial::new).collect(),
        )
        .map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_cap() {
        let d = build_dictionary(1, &[2], None);
        assert_eq!(d.len(), 3);
        assert_eq!(d.entry(0).exponents(), &[0]);
        assert_eq!(d.entry(1).exponents(), &[1]);
        assert_eq!(d.entry(2).exponents(), &[2]);
    }

    #[test]
    fn lifted_dictionary_sizes() {
        // caps (3,1,3) -> 4*2*4 = 32 entries; caps (4,1,4) -> 5*2*5 = 50.
        assert_eq!(build_dictionary(3, &[3, 1, 3], None).len(), 32);
        assert_eq!(build_dictionary(3, &[4, 1, 4], None).len(), 50);
    }

    #[test]
    fn eval_order_and_values() {
        let d = build_dictionary(1, &[2], None);
        assert_eq!(d.eval(&[2.0]).unwrap(), vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn eval_at_origin_is_constant_indicator() {
        let d = build_dictionary(3, &[2, 1, 2], None);
        let v = d.eval(&[0.0, 0.0, 0.0]).unwrap();
        for (i, m) in d.entries().iter().enumerate() {
            assert_eq!(v[i], if m.is_constant() { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn eval_at_unit_x1_indicates_pure_x1_powers() {
        // At (1,0,0) every monomial x1^a evaluates to 1 and anything with an
        // x2 or x3 factor evaluates to 0.
        let d = build_dictionary(3, &[3, 1, 3], None);
        let v = d.eval(&[1.0, 0.0, 0.0]).unwrap();
        for (i, m) in d.entries().iter().enumerate() {
            let pure_x1 = m.exponent(1) == 0 && m.exponent(2) == 0;
            assert_eq!(v[i], if pure_x1 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn determinism() {
        let a = build_dictionary(3, &[4, 1, 4], None);
        let b = build_dictionary(3, &[4, 1, 4], None);
        assert_eq!(a, b);
    }

    #[test]
    fn total_cap_restricts_degree() {
        let d = build_dictionary(2, &[3, 3], Some(2));
        assert!(d.entries().iter().all(|m| m.degree() <= 2));
        assert_eq!(d.len(), 6); // 1, x1, x2, x1^2, x1 x2, x2^2
    }

    #[test]
    fn linear_combination_basis_vectors() {
        let d = build_dictionary(1, &[2], None);
        let mut c = vec![0.0; 3];
        c[1] = 1.0;
        let p = linear_combination(&c, &d).unwrap();
        assert_eq!(p, Polynomial::variable(1, 0));
        let z = linear_combination(&[0.0; 3], &d).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn linear_combination_reproduces_lifted_lyapunov() {
        let alpha = 100.0;
        let phi = build_dictionary(3, &[3, 1, 3], None);
        let mut c = vec![0.0; phi.len()];
        c[phi.position(&Monomial::one(3)).unwrap()] = 1.0 + alpha;
        c[phi.position(&Monomial::new(vec![1, 0, 0])).unwrap()] = -1.0;
        c[phi.position(&Monomial::new(vec![3, 0, 0])).unwrap()] = -alpha;
        c[phi.position(&Monomial::new(vec![0, 0, 2])).unwrap()] = 0.5;
        let v = linear_combination(&c, &phi).unwrap();
        assert_eq!(v.num_terms(), 4);
        assert_eq!(v.coefficient(&Monomial::new(vec![0, 0, 2])), 0.5);
        assert_eq!(v.coefficient(&Monomial::new(vec![3, 0, 0])), -alpha);
    }

    #[test]
    fn rejects_duplicates() {
        let m = Monomial::new(vec![1]);
        assert!(Dictionary::new(1, vec![m.clone(), m]).is_err());
    }
}
