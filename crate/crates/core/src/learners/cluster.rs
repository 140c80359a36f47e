//! K-means (k-means++ seeding, Lloyd iterations, best of several restarts),
//! agglomerative clustering via Lance-Williams updates, and DBSCAN.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dist, sq_dist, Matrix};
use crate::rng::{derived_rng, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOptions {
    pub n_clusters: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Matrix,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step, one sequence per restart.
    pub inertia_history: Vec<Vec<f64>>,
}

/// Nearest centroid (ties to the lowest index) and its squared distance.
pub fn nearest_centroid(centroids: &Matrix, row: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cr) in centroids.iter_rows().enumerate() {
        let d = sq_dist(cr, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_plus_plus(x: &Matrix, k: usize, rng: &mut Rng) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(0, x.cols());
    centroids.push_row(x.row(rng.gen_range(0..n)));
    let mut d2: Vec<f64> = x.iter_rows().map(|r| sq_dist(r, centroids.row(0))).collect();
    while centroids.rows() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&d| d > 0.0).unwrap();
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.push_row(x.row(pick));
        let c = centroids.rows() - 1;
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn assign(x: &Matrix, centroids: &Matrix, labels: &mut [usize], d2: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for (i, row) in x.iter_rows().enumerate() {
        let (c, d) = nearest_centroid(centroids, row);
        labels[i] = c;
        d2[i] = d;
        inertia += d;
    }
    inertia
}

struct Restart {
    centroids: Matrix,
    labels: Vec<usize>,
    inertia: f64,
    history: Vec<f64>,
}

fn lloyd(x: &Matrix, opts: &KMeansOptions, restart: usize) -> Restart {
    let (n, p, k) = (x.rows(), x.cols(), opts.n_clusters);
    let mut rng = derived_rng(opts.seed, &[restart as u64]);
    let mut centroids = kmeans_plus_plus(x, k, &mut rng);
    let mut labels = vec![0; n];
    let mut d2 = vec![0.0; n];
    let mut history = Vec::new();
    let mut inertia = assign(x, &centroids, &mut labels, &mut d2);
    history.push(inertia);
    for _ in 0..opts.max_iter {
        let mut sums = Matrix::zeros(k, p);
        let mut counts = vec![0usize; k];
        for (i, row) in x.iter_rows().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut next = Matrix::zeros(k, p);
        for c in 0..k {
            if counts[c] > 0 {
                for (nv, s) in next.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *nv = s / counts[c] as f64;
                }
            } else {
                // re-seed at the point farthest from its own centroid
                let far = (0..n)
                    .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)))
                    .unwrap();
                next.row_mut(c).copy_from_slice(x.row(far));
                d2[far] = 0.0;
            }
        }
        let shift: f64 = (0..k).map(|c| sq_dist(centroids.row(c), next.row(c))).sum();
        centroids = next;
        inertia = assign(x, &centroids, &mut labels, &mut d2);
        history.push(inertia);
        if shift <= opts.tol {
            break;
        }
    }
    Restart {
        centroids,
        labels,
        inertia,
        history,
    }
}

/// Runs `n_init` seeded restarts and keeps the one with the lowest final
/// inertia (first on ties).
pub fn kmeans_fit(x: &Matrix, opts: &KMeansOptions) -> Result<KMeansFit> {
    if opts.n_clusters == 0 || opts.n_clusters > x.rows() {
        return Err(Error::model(format!(
            "k-means needs 1 <= n_clusters <= n_rows (got {} clusters, {} rows)",
            opts.n_clusters,
            x.rows()
        )));
    }
    let runs: Vec<Restart> = (0..opts.n_init.max(1))
        .into_par_iter()
        .map(|r| lloyd(x, opts, r))
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.inertia < runs[best].inertia {
            best = i;
        }
    }
    let inertia_history = runs.iter().map(|r| r.history.clone()).collect();
    let chosen = runs.into_iter().nth(best).unwrap();
    Ok(KMeansFit {
        centroids: chosen.centroids,
        labels: chosen.labels,
        inertia: chosen.inertia,
        inertia_history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

/// One merge: the two cluster slots (lower slot survives) and their distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub keep: usize,
    pub absorb: usize,
    pub distance: f64,
}

/// Greedy bottom-up merging until `n_clusters` remain. A cluster is
/// identified by its lowest member index; among equal linkage distances the
/// lexicographically smallest pair merges first.
pub fn agglomerative_merges(x: &Matrix, n_clusters: usize, linkage: Linkage) -> Vec<Merge> {
    let n = x.rows();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = dist(x.row(i), x.row(j));
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut merges = Vec::new();
    while active.len() > n_clusters.max(1) {
        let mut best = (f64::INFINITY, 0, 0);
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                if d[i][j] < best.0 {
                    best = (d[i][j], i, j);
                }
            }
        }
        let (dij, i, j) = best;
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let v = match linkage {
                Linkage::Single => d[i][k].min(d[j][k]),
                Linkage::Complete => d[i][k].max(d[j][k]),
                Linkage::Average => {
                    (size[i] as f64 * d[i][k] + size[j] as f64 * d[j][k])
                        / (size[i] + size[j]) as f64
                }
            };
            d[i][k] = v;
            d[k][i] = v;
        }
        size[i] += size[j];
        active.retain(|&a| a != j);
        merges.push(Merge {
            keep: i,
            absorb: j,
            distance: dij,
        });
    }
    merges
}

/// Cluster labels `0..n_clusters`, numbered by each cluster's lowest member.
pub fn agglomerative_fit(x: &Matrix, n_clusters: usize, linkage: Linkage) -> Result<Vec<usize>> {
    let n = x.rows();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::model(format!(
            "agglomerative clustering needs 1 <= n_clusters <= n_rows (got {n_clusters}, {n} rows)"
        )));
    }
    let mut owner: Vec<usize> = (0..n).collect();
    for m in agglomerative_merges(x, n_clusters, linkage) {
        for o in owner.iter_mut() {
            if *o == m.absorb {
                *o = m.keep;
            }
        }
    }
    Ok(canonical_labels(&owner))
}

/// Renumbers arbitrary cluster ids in order of first appearance.
pub(crate) fn canonical_labels(ids: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    ids.iter()
        .map(|id| match seen.iter().position(|s| s == id) {
            Some(p) => p,
            None => {
                seen.push(*id);
                seen.len() - 1
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbscanFit {
    /// Cluster ids in discovery order; `-1` marks noise.
    pub labels: Vec<i64>,
    pub core: Vec<bool>,
}

/// Density clustering. Neighbourhoods are closed balls of radius `eps` that
/// include the point itself; points are visited in index order, and a border
/// point stays with the first cluster that reaches it.
pub fn dbscan_fit(x: &Matrix, eps: f64, min_samples: usize) -> DbscanFit {
    let n = x.rows();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist(x.row(i), x.row(j)) <= eps).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_samples).collect();
    let mut labels = vec![-1i64; n];
    let mut next = 0i64;
    for start in 0..n {
        if labels[start] != -1 || !core[start] {
            continue;
        }
        labels[start] = next;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            if !core[p] {
                continue;
            }
            for &q in &neighbours[p] {
                if labels[q] == -1 {
                    labels[q] = next;
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
        next += 1;
    }
    DbscanFit { labels, core }
}
