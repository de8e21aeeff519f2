//! Majorization order on coherence vectors.
//!
//! `p` majorizes `q` when every prefix sum of `p` sorted in descending order
//! dominates the matching prefix sum of `q`. A pure state converts into
//! another under incoherent operations exactly when the target's coherence
//! vector majorizes the source's.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::CoherenceVector;

/// Slack on prefix-sum comparisons.
pub const PREFIX_TOL: f64 = 1e-12;

/// A probability vector in non-increasing order with its prefix sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SortedVector {
    values: Vec<f64>,
    prefix_sums: Vec<f64>,
}

impl SortedVector {
    /// Builds from values already in non-increasing order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::NotProbabilityVector {
                reason: format!("entry {} is smaller than entry {}", i, i + 1),
            });
        }
        let cv = CoherenceVector::new(values)?;
        Ok(Self::build(cv.probs().to_vec()))
    }

    fn build(values: Vec<f64>) -> Self {
        let prefix_sums = values
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        SortedVector { values, prefix_sums }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix_sums
    }

    pub fn to_coherence_vector(&self) -> CoherenceVector {
        CoherenceVector::from_raw(self.values.clone())
    }
}

/// Descending sort; ties keep their original order.
pub fn sort_desc(mu: &CoherenceVector) -> SortedVector {
    let mut v = mu.probs().to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    SortedVector::build(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    PMajorizesQ,
    QMajorizesP,
    Equal,
    Incomparable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorizationVerdict {
    pub relation: Relation,
    /// First prefix index at which `p ≽ q` fails, if it does.
    pub witness_index: Option<usize>,
    /// First prefix index at which `q ≽ p` fails, if it does.
    pub reverse_witness_index: Option<usize>,
}

/// First index `l` with `a[0..=l]` summing to less than `b[0..=l]` (minus slack).
pub fn first_prefix_failure(a: &[f64], b: &[f64]) -> Option<usize> {
    let (mut sa, mut sb) = (0.0, 0.0);
    for (l, (x, y)) in a.iter().zip(b).enumerate() {
        sa += x;
        sb += y;
        if sa < sb - PREFIX_TOL {
            return Some(l);
        }
    }
    None
}

impl TryFrom<Vec<f64>> for SortedVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        SortedVector::from_sorted(values)
    }
}

impl From<SortedVector> for Vec<f64> {
    fn from(s: SortedVector) -> Self {
        s.values
    }
}

/// Relation between two vectors that are already sorted in descending order.
pub fn relation_of_sorted(p: &[f64], q: &[f64]) -> Relation {
    verdict(p, q).relation
}

pub fn compare_sorted(p: &SortedVector, q: &SortedVector) -> Result<MajorizationVerdict> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(verdict(&p.values, &q.values))
}

fn verdict(p: &[f64], q: &[f64]) -> MajorizationVerdict {
    let forward = first_prefix_failure(p, q);
    let reverse = first_prefix_failure(q, p);
    let relation = match (forward, reverse) {
        (None, None) => Relation::Equal,
        (None, Some(_)) => Relation::PMajorizesQ,
        (Some(_), None) => Relation::QMajorizesP,
        (Some(_), Some(_)) => Relation::Incomparable,
    };
    MajorizationVerdict {
        relation,
        witness_index: forward,
        reverse_witness_index: reverse,
    }
}

pub fn compare(p: &CoherenceVector, q: &CoherenceVector) -> Result<MajorizationVerdict> {
    compare_sorted(&sort_desc(p), &sort_desc(q))
}

/// Whether a pure state with populations `source` can be turned into one with
/// populations `target` by an incoherent operation: `target ≽ source`.
pub fn io_transformable(source: &CoherenceVector, target: &CoherenceVector) -> Result<bool> {
    let v = compare(target, source)?;
    Ok(matches!(v.relation, Relation::PMajorizesQ | Relation::Equal))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalSet {
    /// Candidates not strictly majorized by any other, ascending.
    pub indices: Vec<usize>,
    /// A maximal element that majorizes every candidate, if one exists.
    pub supremum: Option<usize>,
}

impl MaximalSet {
    pub fn is_supremum(&self, index: usize) -> bool {
        self.supremum == Some(index)
    }
}

pub fn maximal_elements(candidates: &[CoherenceVector]) -> Result<MaximalSet> {
    let sorted: Vec<SortedVector> = candidates.iter().map(sort_desc).collect();
    maximal_elements_sorted(&sorted)
}

/// Pairwise O(n^2) scan.
pub fn maximal_elements_sorted(candidates: &[SortedVector]) -> Result<MaximalSet> {
    let first = candidates.first().ok_or(Error::EmptyCandidates)?;
    if let Some(c) = candidates.iter().find(|c| c.dim() != first.dim()) {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            found: c.dim(),
        });
    }
    let n = candidates.len();
    let strictly_below = |i: usize| {
        (0..n).any(|j| j != i && verdict(&candidates[j].values, &candidates[i].values).relation == Relation::PMajorizesQ)
    };
    let indices: Vec<usize> = (0..n).filter(|&i| !strictly_below(i)).collect();
    let supremum = indices.iter().copied().find(|&i| {
        (0..n).all(|j| first_prefix_failure(&candidates[i].values, &candidates[j].values).is_none())
    });
    Ok(MaximalSet { indices, supremum })
}
