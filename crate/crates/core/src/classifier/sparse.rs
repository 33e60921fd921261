use serde::{Deserialize, Serialize};

/// Sparse feature vector with sorted, unique indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    pub dim: usize,
    pub idx: Vec<u32>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> Self {
        SparseVec {
            dim,
            idx: Vec::new(),
            val: Vec::new(),
        }
    }

    pub fn dense(values: &[f64]) -> Self {
        SparseVec {
            dim: values.len(),
            idx: (0..values.len() as u32).collect(),
            val: values.to_vec(),
        }
    }

    /// From `(index, value)` pairs in any order; duplicate indices are summed
    /// and exact zeros dropped.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut idx: Vec<u32> = Vec::with_capacity(pairs.len());
        let mut val: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if idx.last() == Some(&i) {
                *val.last_mut().unwrap() += v;
            } else {
                idx.push(i);
                val.push(v);
            }
        }
        let (idx, val) = idx.into_iter().zip(val).filter(|(_, v)| *v != 0.0).unzip();
        SparseVec { dim, idx, val }
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &v)| dense[i as usize] * v)
            .sum()
    }

    pub fn get(&self, i: usize) -> f64 {
        match self.idx.binary_search(&(i as u32)) {
            Ok(p) => self.val[p],
            Err(_) => 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.idx.iter().zip(&self.val) {
            out[i as usize] = v;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().map(|&i| i as usize).zip(self.val.iter().copied())
    }
}

/// Column-wise mean of a set of vectors.
pub fn mean_vector(rows: &[SparseVec], dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    if rows.is_empty() {
        return mean;
    }
    for r in rows {
        for (i, v) in r.iter() {
            mean[i] += v;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}
