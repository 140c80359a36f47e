//! k-nearest-neighbour prediction over a stored training set.

use serde::{Deserialize, Serialize};

use crate::matrix::{sq_dist, Matrix};

/// Indices of the `k` training rows closest to `query` (Euclidean), nearest
/// first; equal distances keep the lower training index first.
pub fn nearest(train: &Matrix, query: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = train
        .iter_rows()
        .enumerate()
        .map(|(i, r)| (sq_dist(r, query), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, i)| i).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborStore {
    pub x: Matrix,
    /// Class indices for classification, raw targets for regression.
    pub y: Vec<f64>,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
}

impl NeighborStore {
    fn k_eff(&self) -> usize {
        self.k.min(self.x.rows())
    }

    /// Fraction of the `k` neighbours in each class.
    pub fn votes(&self, row: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.n_classes.unwrap_or(0)];
        let nn = nearest(&self.x, row, self.k_eff());
        for &i in &nn {
            v[self.y[i] as usize] += 1.0;
        }
        v.iter_mut().for_each(|c| *c /= nn.len() as f64);
        v
    }

    /// Majority class index (vote ties to the smallest class) or neighbour mean.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.n_classes {
            Some(_) => super::tree::argmax(&self.votes(row)) as f64,
            None => {
                let nn = nearest(&self.x, row, self.k_eff());
                nn.iter().map(|&i| self.y[i]).sum::<f64>() / nn.len() as f64
            }
        }
    }
}

/// One-shot k-NN: classification votes over the raw label values (ties to
/// the smallest value) or regression means.
pub fn knn_fit_predict(
    train: &Matrix,
    targets: &[f64],
    k: usize,
    classification: bool,
    query: &Matrix,
) -> Vec<f64> {
    let k = k.min(train.rows());
    query
        .iter_rows()
        .map(|q| {
            let nn = nearest(train, q, k);
            if classification {
                let mut vals: Vec<f64> = nn.iter().map(|&i| targets[i]).collect();
                vals.sort_by(f64::total_cmp);
                let mut best = (vals[0], 0usize);
                let mut i = 0;
                while i < vals.len() {
                    let j = vals[i..].iter().take_while(|v| **v == vals[i]).count();
                    if j > best.1 {
                        best = (vals[i], j);
                    }
                    i += j;
                }
                best.0
            } else {
                nn.iter().map(|&i| targets[i]).sum::<f64>() / nn.len() as f64
            }
        })
        .collect()
}
