//! SMOTE oversampling of minority classes up to the majority count.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            seed: 0,
        }
    }
}

/// The `k` nearest other members of `members` to `members[i]` (positions into
/// `members`), distance ties broken by lower row index.
fn same_class_neighbors(x: &Matrix, members: &[usize], i: usize, k: usize) -> Vec<usize> {
    let base = x.row(members[i]);
    let mut cand: Vec<(f64, usize)> = members
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, &r)| (sq_dist(base, x.row(r)), j))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(members[a.1].cmp(&members[b.1])));
    cand.truncate(k);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Returns the original rows followed by synthetic rows so that every class
/// reaches the majority count. Each synthetic row is `x + λ (x_nn − x)` with
/// `x` drawn uniformly from its class, `x_nn` one of its `k` nearest
/// same-class neighbours and `λ ~ U[0, 1)`, all from a stream derived from
/// (seed, class rank, synthetic index).
pub fn smote_balance(x: &Matrix, y: &[f64], cfg: &SmoteConfig) -> Result<(Matrix, Vec<f64>)> {
    if x.rows() != y.len() {
        return Err(Error::data(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if cfg.k_neighbors == 0 {
        return Err(Error::field("smote.k_neighbors", "must be positive"));
    }
    let mut classes = y.to_vec();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::data("SMOTE needs at least two classes"));
    }
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..y.len()).filter(|&i| y[i] == c).collect())
        .collect();
    let majority = members.iter().map(Vec::len).max().unwrap();

    let mut out_x = x.clone();
    let mut out_y = y.to_vec();
    for (rank, (class, m)) in classes.iter().zip(&members).enumerate() {
        let need = majority - m.len();
        if need == 0 {
            continue;
        }
        if m.len() < 2 {
            return Err(Error::data(format!(
                "class {class} has a single sample; SMOTE needs a neighbour to interpolate"
            )));
        }
        let k = if cfg.k_neighbors >= m.len() {
            log::info!(
                target: "resample",
                "k_neighbors={} clamped to {} for class {class} of size {}",
                cfg.k_neighbors,
                m.len() - 1,
                m.len()
            );
            m.len() - 1
        } else {
            cfg.k_neighbors
        };
        let neighbors: Vec<Vec<usize>> = (0..m.len()).map(|i| same_class_neighbors(x, m, i, k)).collect();
        for s in 0..need {
            let mut rng = derived_rng(cfg.seed, &[rank as u64, s as u64]);
            let i = rng.gen_range(0..m.len());
            let nn = neighbors[i][rng.gen_range(0..k)];
            let lambda: f64 = rng.gen();
            let base = x.row(m[i]);
            let other = x.row(m[nn]);
            let row: Vec<f64> = base
                .iter()
                .zip(other)
                .map(|(a, b)| a + lambda * (b - a))
                .collect();
            out_x.push_row(&row);
            out_y.push(*class);
        }
    }
    Ok((out_x, out_y))
}
