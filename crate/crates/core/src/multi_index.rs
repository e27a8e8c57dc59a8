//! Multi-indices and their graded-lexicographic enumeration.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A multi-index `k = (k_1, ..., k_d)` of non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// Unit index `e_axis` in dimension `d`.
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut v = vec![0; d];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k| = k_1 + ... + k_d`.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> usize {
        self.0[axis]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn with_incremented(&self, axis: usize) -> Self {
        let mut v = self.0.clone();
        v[axis] += 1;
        MultiIndex(v)
    }

    pub fn with_decremented(&self, axis: usize) -> Option<Self> {
        if self.0[axis] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[axis] -= 1;
        Some(MultiIndex(v))
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Component-wise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `k! = k_1! ... k_d!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&k| (1..=k).map(|j| j as f64).product::<f64>())
            .product()
    }

    /// `(-1)^{|k|}`.
    pub fn parity_sign(&self) -> f64 {
        if self.total() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `x^k`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product()
    }

    /// The axes of `self` listed with multiplicity, e.g. (2, 0, 1) -> [0, 0, 2].
    pub fn axis_sequence(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for (axis, &k) in self.0.iter().enumerate() {
            out.extend(std::iter::repeat_n(axis, k));
        }
        out
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// All multi-indices of dimension `d` with `|k| = grade`, in ascending
/// lexicographic order.
pub fn indices_of_grade(d: usize, grade: usize) -> Vec<MultiIndex> {
    fn rec(d: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == d {
            prefix.push(remaining);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            rec(d, remaining - first, prefix, out);
            prefix.pop();
        }
    }
    assert!(d >= 1, "dimension must be at least 1");
    let mut out = Vec::new();
    rec(d, grade, &mut Vec::with_capacity(d), &mut out);
    out
}

/// All multi-indices with `|k| <= max_grade` in graded-lexicographic order.
pub fn graded_indices(d: usize, max_grade: usize) -> Vec<MultiIndex> {
    (0..=max_grade).flat_map(|g| indices_of_grade(d, g)).collect()
}

/// Number of multi-indices of dimension `d` with `|k| <= n`, i.e. C(n + d, d).
pub fn count_up_to(d: usize, n: usize) -> usize {
    let mut c: usize = 1;
    for i in 1..=d {
        c = c * (n + i) / i;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_order_is_grade_then_lex() {
        let idx = graded_indices(2, 2);
        let raw: Vec<Vec<usize>> = idx.iter().map(|k| k.entries().to_vec()).collect();
        assert_eq!(
            raw,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
    }

    #[test]
    fn counts_match_binomial() {
        for d in 1..=3 {
            for n in 0..6 {
                assert_eq!(graded_indices(d, n).len(), count_up_to(d, n));
            }
        }
    }

    #[test]
    fn axis_sequence_and_factorial() {
        let k = MultiIndex::new(vec![2, 0, 1]);
        assert_eq!(k.axis_sequence(), vec![0, 0, 2]);
        assert_eq!(k.factorial(), 2.0);
        assert_eq!(k.parity_sign(), -1.0);
    }
}
