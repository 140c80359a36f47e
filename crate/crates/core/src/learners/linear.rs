//! Linear models: elastic net by cyclic coordinate descent, and per-sample
//! (sub)gradient descent for logistic, hinge, squared and epsilon-insensitive
//! losses.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::rng::derived_rng;

/// Soft-thresholding operator `sign(z) * max(|z| - gamma, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticNetFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
}

/// Minimizes `(1/(2n))‖y − Xβ − b‖² + alpha·(l1_ratio‖β‖₁ + (1−l1_ratio)/2·‖β‖²)`
/// by cyclic coordinate descent. The intercept is refreshed exactly after
/// every sweep. Stops once the largest coordinate change of a sweep is
/// below `tol`.
pub fn elastic_net_fit(
    x: &Matrix,
    y: &[f64],
    alpha: f64,
    l1_ratio: f64,
    max_iter: usize,
    tol: f64,
) -> Result<ElasticNetFit> {
    let (n, p) = (x.rows(), x.cols());
    if n == 0 || y.len() != n {
        return Err(Error::model("elastic net needs matching, non-empty X and y"));
    }
    if !x.all_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::model("elastic net input contains non-finite values"));
    }
    if alpha < 0.0 || !(0.0..=1.0).contains(&l1_ratio) {
        return Err(Error::model("elastic net needs alpha >= 0 and l1_ratio in [0, 1]"));
    }
    let nf = n as f64;
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.col_values(j)).collect();
    let z: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let l1 = alpha * l1_ratio;
    let l2 = alpha * (1.0 - l1_ratio);

    let mut beta = vec![0.0; p];
    let mut b = y.iter().sum::<f64>() / nf;
    let mut r: Vec<f64> = y.iter().map(|v| v - b).collect();
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let denom = z[j] + l2;
            let old = beta[j];
            let new = if denom > 0.0 {
                let rho = dot(&cols[j], &r) / nf + z[j] * old;
                soft_threshold(rho, l1) / denom
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                for (ri, xi) in r.iter_mut().zip(&cols[j]) {
                    *ri -= xi * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let db = r.iter().sum::<f64>() / nf;
        if db != 0.0 {
            b += db;
            r.iter_mut().for_each(|ri| *ri -= db);
            max_change = max_change.max(db.abs());
        }
        if max_change < tol {
            break;
        }
    }
    Ok(ElasticNetFit {
        weights: beta,
        intercept: b,
        iterations,
    })
}

/// The elastic-net objective minimized by [`elastic_net_fit`].
pub fn elastic_net_objective(
    x: &Matrix,
    y: &[f64],
    weights: &[f64],
    intercept: f64,
    alpha: f64,
    l1_ratio: f64,
) -> f64 {
    let n = x.rows() as f64;
    let rss: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(row, yi)| {
            let e = yi - dot(row, weights) - intercept;
            e * e
        })
        .sum();
    let l1: f64 = weights.iter().map(|w| w.abs()).sum();
    let l2: f64 = weights.iter().map(|w| w * w).sum();
    rss / (2.0 * n) + alpha * (l1_ratio * l1 + (1.0 - l1_ratio) / 2.0 * l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    Log,
    Hinge,
    Squared,
    EpsilonInsensitive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdOptions {
    pub loss: LinearLoss,
    pub l2: f64,
    pub epochs: usize,
    pub eta0: f64,
    /// Half-width of the insensitive tube for `EpsilonInsensitive`.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SgdOptions {
    fn default() -> Self {
        SgdOptions {
            loss: LinearLoss::Log,
            l2: 1e-4,
            epochs: 100,
            eta0: 0.1,
            epsilon: 0.1,
            seed: 0,
        }
    }
}

/// Per-sample derivative of the loss with respect to the score.
fn loss_slope(loss: LinearLoss, score: f64, y: f64, epsilon: f64) -> f64 {
    match loss {
        LinearLoss::Log => sigmoid(score) - y,
        LinearLoss::Hinge => {
            let s = if y > 0.0 { 1.0 } else { -1.0 };
            if s * score < 1.0 {
                -s
            } else {
                0.0
            }
        }
        LinearLoss::Squared => score - y,
        LinearLoss::EpsilonInsensitive => {
            let r = score - y;
            if r > epsilon {
                1.0
            } else if r < -epsilon {
                -1.0
            } else {
                0.0
            }
        }
    }
}

/// Single-output stochastic (sub)gradient descent with L2 penalty.
///
/// Targets are `{0, 1}` for the log and hinge losses and real values
/// otherwise. The step at update `t` is `eta0 / (1 + eta0·l2·t)`; rows are
/// reshuffled every epoch from a stream derived from `seed`.
pub fn sgd_linear_fit(x: &Matrix, y: &[f64], opts: &SgdOptions) -> Result<(Vec<f64>, f64)> {
    let mut trace = |_: usize, _: &[f64], _: f64| {};
    sgd_linear_fit_traced(x, y, opts, &mut trace)
}

/// As [`sgd_linear_fit`], calling `on_epoch(epoch, weights, intercept)` after
/// every epoch.
pub fn sgd_linear_fit_traced(
    x: &Matrix,
    y: &[f64],
    opts: &SgdOptions,
    on_epoch: &mut dyn FnMut(usize, &[f64], f64),
) -> Result<(Vec<f64>, f64)> {
    let (n, p) = (x.rows(), x.cols());
    if n == 0 || y.len() != n {
        return Err(Error::model("sgd needs matching, non-empty X and y"));
    }
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for epoch in 0..opts.epochs {
        order.sort_unstable();
        order.shuffle(&mut derived_rng(opts.seed, &[epoch as u64]));
        for &i in &order {
            let row = x.row(i);
            let eta = opts.eta0 / (1.0 + opts.eta0 * opts.l2 * t as f64);
            let g = loss_slope(opts.loss, dot(row, &w) + b, y[i], opts.epsilon);
            for (wj, xj) in w.iter_mut().zip(row) {
                *wj -= eta * (g * xj + opts.l2 * *wj);
            }
            b -= eta * g;
            t += 1;
        }
        on_epoch(epoch, &w, b);
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::model("sgd diverged to non-finite weights"));
    }
    Ok((w, b))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Fitted linear scorer: one weight row per output. A binary or regression
/// model has one output; a one-vs-rest multiclass model has one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub loss: LinearLoss,
    pub weights: Matrix,
    pub intercepts: Vec<f64>,
}

impl LinearModel {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter_rows()
            .zip(&self.intercepts)
            .map(|(w, b)| dot(w, row) + b)
            .collect()
    }

    /// `|w|` for one output, column-wise L2 norm across outputs otherwise.
    pub fn importances(&self) -> Vec<f64> {
        (0..self.weights.cols())
            .map(|j| {
                let col = self.weights.col_values(j);
                if col.len() == 1 {
                    col[0].abs()
                } else {
                    col.iter().map(|v| v * v).sum::<f64>().sqrt()
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (Matrix, Vec<f64>) {
        (Matrix::column(&[1.0, -1.0]), vec![2.0, -2.0])
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(-5.0, 2.0), -3.0);
        assert_eq!(soft_threshold(1.0, 2.0), 0.0);
        assert_eq!(soft_threshold(2.0, 2.0), 0.0);
    }

    #[test]
    fn elastic_net_one_feature_fixtures() {
        let (x, y) = line();
        for (alpha, expect) in [(0.0, 2.0), (1.0, 1.0), (2.0, 0.0)] {
            let fit = elastic_net_fit(&x, &y, alpha, 1.0, 1000, 1e-12).unwrap();
            assert!((fit.weights[0] - expect).abs() < 1e-12, "alpha {alpha}: {:?}", fit);
            assert!(fit.intercept.abs() < 1e-12);
        }
    }

    #[test]
    fn elastic_net_rejects_non_finite() {
        let x = Matrix::column(&[1.0, f64::NAN]);
        assert!(elastic_net_fit(&x, &[1.0, 2.0], 1.0, 0.5, 10, 1e-6).is_err());
    }

    #[test]
    fn sgd_log_separates_two_points() {
        let x = Matrix::column(&[-1.0, 1.0]);
        let (w, b) = sgd_linear_fit(&x, &[0.0, 1.0], &SgdOptions::default()).unwrap();
        assert!(w[0] > 0.0);
        assert!(dot(x.row(0), &w) + b < 0.0 && dot(x.row(1), &w) + b > 0.0);
    }

    #[test]
    fn sgd_hinge_separates_two_points() {
        let x = Matrix::column(&[-1.0, 1.0]);
        let opts = SgdOptions {
            loss: LinearLoss::Hinge,
            ..Default::default()
        };
        let (w, b) = sgd_linear_fit(&x, &[0.0, 1.0], &opts).unwrap();
        assert!(dot(x.row(0), &w) + b < 0.0 && dot(x.row(1), &w) + b > 0.0);
    }

    #[test]
    fn zero_epochs_gives_zero_model() {
        let x = Matrix::column(&[-1.0, 1.0]);
        let opts = SgdOptions {
            epochs: 0,
            ..Default::default()
        };
        assert_eq!(sgd_linear_fit(&x, &[0.0, 1.0], &opts).unwrap(), (vec![0.0], 0.0));
    }

    #[test]
    fn importances_of_linear_weights() {
        let m = LinearModel {
            loss: LinearLoss::Squared,
            weights: Matrix::from_rows(&[[0.1, -5.0, 0.2]]).unwrap(),
            intercepts: vec![0.0],
        };
        assert_eq!(m.importances(), vec![0.1, 5.0, 0.2]);
        let multi = LinearModel {
            loss: LinearLoss::Log,
            weights: Matrix::from_rows(&[[3.0, 0.0], [4.0, -1.0]]).unwrap(),
            intercepts: vec![0.0, 0.0],
        };
        assert_eq!(multi.importances(), vec![5.0, 1.0]);
    }
}
