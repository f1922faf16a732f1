use std::collections::BTreeMap;

use crate::text::{fnv1a, tokens};

/// Sparse feature vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        SparseVec {
            dim,
            ..Default::default()
        }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] = v;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// `[self; other]` with `other`'s indices shifted by `self.dim`.
    pub fn concat(&self, other: &SparseVec) -> SparseVec {
        let mut indices = self.indices.clone();
        indices.extend(other.indices.iter().map(|i| i + self.dim));
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        SparseVec {
            dim: self.dim + other.dim,
            indices,
            values,
        }
    }
}

/// Hashed bag of words: lowercase, split on non-alphanumerics, count tokens
/// into `dim` buckets, L2-normalise unless empty.
pub fn encode(dim: usize, text: &str) -> SparseVec {
    assert!(dim > 0, "hash dimension must be positive");
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for tok in tokens(text) {
        let bucket = (fnv1a(tok.as_bytes()) % dim as u64) as usize;
        *counts.entry(bucket).or_default() += 1.0;
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    let (indices, values) = if norm > 0.0 {
        counts.into_iter().map(|(i, c)| (i, c / norm)).unzip()
    } else {
        (Vec::new(), Vec::new())
    };
    SparseVec { dim, indices, values }
}
