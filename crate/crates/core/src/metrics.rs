//! Classification, regression and clustering evaluation metrics.
//!
//! Zero denominators yield 0 and put the metric name in
//! [`MetricSet::degenerate`] so result files stay numeric. Binary asymmetric
//! metrics treat the greater label value as positive.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::matrix::{dist, Matrix};

/// Named metric values in emission order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSet {
    pub values: Vec<(String, f64)>,
    pub degenerate: Vec<String>,
}

impl MetricSet {
    fn push(&mut self, name: &str, value: f64) {
        self.values.push((name.to_string(), value));
    }

    /// Ratio with the zero-denominator convention.
    fn ratio(&mut self, name: &str, num: f64, den: f64) -> f64 {
        if den == 0.0 {
            self.flag(name);
            0.0
        } else {
            num / den
        }
    }

    fn flag(&mut self, name: &str) {
        if !self.degenerate.iter().any(|d| d == name) {
            self.degenerate.push(name.to_string());
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(
            self.values
                .iter()
                .map(|(k, v)| (k.clone(), Value::from(*v)))
                .collect::<Map<_, _>>(),
        )
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Metric(format!("length mismatch: {a} true vs {b} predicted")));
    }
    if a == 0 {
        return Err(Error::Metric("no samples to evaluate".into()));
    }
    Ok(())
}

fn sorted_union(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).copied().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Binary confusion counts with the greater class as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_labels(y_true: &[f64], y_pred: &[f64], positive: f64) -> Self {
        let mut c = ConfusionCounts { tp: 0, fp: 0, tn: 0, fn_: 0 };
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == positive, p == positive) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    /// Label vectors realizing these counts (negative 0, positive 1).
    pub fn to_labels(&self) -> (Vec<f64>, Vec<f64>) {
        let mut t = Vec::new();
        let mut p = Vec::new();
        for (n, tv, pv) in [(self.tp, 1.0, 1.0), (self.fn_, 1.0, 0.0), (self.fp, 0.0, 1.0), (self.tn, 0.0, 0.0)] {
            for _ in 0..n {
                t.push(tv);
                p.push(pv);
            }
        }
        (t, p)
    }
}

/// Accuracy, precision, recall, F1, HSS (Cohen's kappa) and MCC for any
/// number of classes; FAR, POD and TSS for binary problems; cross-entropy
/// when class probabilities (columns ordered as `proba_classes`) are given.
pub fn classification_metrics(
    y_true: &[f64],
    y_pred: &[f64],
    proba: Option<(&Matrix, &[f64])>,
) -> Result<MetricSet> {
    check_len(y_true.len(), y_pred.len())?;
    // classes seen in the labels; probability columns only feed cross-entropy
    let classes = sorted_union(y_true, y_pred);
    if let Some((p, pc)) = proba {
        if p.rows() != y_true.len() || p.cols() != pc.len() {
            return Err(Error::Metric("probability matrix shape does not match".into()));
        }
    }
    let k = classes.len();
    let idx = |v: f64| classes.iter().position(|&c| c == v).unwrap();
    let n = y_true.len() as f64;
    let mut cm = vec![vec![0f64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        cm[idx(t)][idx(p)] += 1.0;
    }
    let correct: f64 = (0..k).map(|i| cm[i][i]).sum();
    let row: Vec<f64> = (0..k).map(|i| cm[i].iter().sum()).collect();
    let col: Vec<f64> = (0..k).map(|j| (0..k).map(|i| cm[i][j]).sum()).collect();

    let mut m = MetricSet::default();
    m.push("accuracy", correct / n);

    if k <= 2 {
        let pos = k - 1;
        let tp = cm[pos][pos];
        let (fp, fn_, tn) = if k == 2 {
            (cm[0][1], cm[1][0], cm[0][0])
        } else {
            (0.0, 0.0, 0.0)
        };
        let precision = m.ratio("precision", tp, tp + fp);
        m.push("precision", precision);
        let recall = m.ratio("recall", tp, tp + fn_);
        m.push("recall", recall);
        let far = m.ratio("false_alarm_ratio", fp, tp + fp);
        m.push("false_alarm_ratio", far);
        let pod = m.ratio("probability_of_detection", tp, tp + fn_);
        m.push("probability_of_detection", pod);
        let tnr = m.ratio("tss", tn, tn + fp);
        let tpr = m.ratio("tss", tp, tp + fn_);
        m.push("tss", tpr + tnr - 1.0);
        let f1 = m.ratio("f1", 2.0 * tp, 2.0 * tp + fp + fn_);
        m.push("f1", f1);
    } else {
        let mut p_sum = 0.0;
        let mut r_sum = 0.0;
        let mut f_sum = 0.0;
        for c in 0..k {
            let tp = cm[c][c];
            p_sum += m.ratio("precision", tp, col[c]);
            r_sum += m.ratio("recall", tp, row[c]);
            f_sum += m.ratio("f1", 2.0 * tp, row[c] + col[c]);
        }
        let kf = k as f64;
        m.push("precision", p_sum / kf);
        m.push("recall", r_sum / kf);
        m.push("f1", f_sum / kf);
    }

    let po = correct / n;
    let pe: f64 = (0..k).map(|i| row[i] * col[i]).sum::<f64>() / (n * n);
    let hss = m.ratio("hss", po - pe, 1.0 - pe);
    m.push("hss", hss);

    let s = n;
    let cov_tp = correct * s - (0..k).map(|i| row[i] * col[i]).sum::<f64>();
    let cov_pp = s * s - col.iter().map(|v| v * v).sum::<f64>();
    let cov_tt = s * s - row.iter().map(|v| v * v).sum::<f64>();
    let mcc = m.ratio("mcc", cov_tp, (cov_pp * cov_tt).sqrt());
    m.push("mcc", mcc);

    if let Some((p, pc)) = proba {
        let eps = 1e-15;
        let total: f64 = y_true
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let q = pc.iter().position(|&c| c == t).map_or(0.0, |j| p.get(i, j));
                -q.clamp(eps, 1.0 - eps).ln()
            })
            .sum();
        m.push("cross_entropy", total / n);
    }
    Ok(m)
}

/// MSE, RMSE, MAE and R². A constant truth gives R² = 0, flagged degenerate.
pub fn regression_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<MetricSet> {
    check_len(y_true.len(), y_pred.len())?;
    let n = y_true.len() as f64;
    let mse = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).powi(2)).sum::<f64>() / n;
    let mae = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).abs()).sum::<f64>() / n;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    let mut m = MetricSet::default();
    m.push("mse", mse);
    m.push("rmse", mse.sqrt());
    m.push("mae", mae);
    let r2 = if ss_tot == 0.0 {
        m.flag("r2");
        0.0
    } else {
        1.0 - mse * n / ss_tot
    };
    m.push("r2", r2);
    Ok(m)
}

/// Contingency table between two labelings (rows: first, columns: second).
fn contingency(a: &[i64], b: &[i64]) -> Vec<Vec<f64>> {
    let ia: BTreeMap<i64, usize> = {
        let mut m = BTreeMap::new();
        for &v in a {
            let next = m.len();
            m.entry(v).or_insert(next);
        }
        m
    };
    let ib: BTreeMap<i64, usize> = {
        let mut m = BTreeMap::new();
        for &v in b {
            let next = m.len();
            m.entry(v).or_insert(next);
        }
        m
    };
    let mut t = vec![vec![0.0; ib.len()]; ia.len()];
    for (x, y) in a.iter().zip(b) {
        t[ia[x]][ib[y]] += 1.0;
    }
    t
}

/// True when `b` is a renaming of `a`.
fn same_partition(a: &[i64], b: &[i64]) -> bool {
    let t = contingency(a, b);
    t.iter().all(|r| r.iter().filter(|&&v| v > 0.0).count() == 1)
        && (0..t[0].len()).all(|j| t.iter().filter(|r| r[j] > 0.0).count() == 1)
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).ln())
        .sum()
}

fn mutual_info(t: &[Vec<f64>], a: &[f64], b: &[f64], n: f64) -> f64 {
    let mut mi = 0.0;
    for (i, r) in t.iter().enumerate() {
        for (j, &nij) in r.iter().enumerate() {
            if nij > 0.0 {
                mi += nij / n * (n * nij / (a[i] * b[j])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Expected mutual information under the hypergeometric model of random
/// labelings with the given marginals.
fn expected_mutual_info(a: &[f64], b: &[f64], n: usize) -> f64 {
    let mut lf = vec![0.0f64; n + 1];
    for i in 1..=n {
        lf[i] = lf[i - 1] + (i as f64).ln();
    }
    let nf = n as f64;
    let mut emi = 0.0;
    for &ai in a {
        for &bj in b {
            let (ai_u, bj_u) = (ai as usize, bj as usize);
            let lo = (ai_u + bj_u).saturating_sub(n).max(1);
            let hi = ai_u.min(bj_u);
            for nij in lo..=hi {
                let x = nij as f64;
                let term = x / nf * (nf * x / (ai * bj)).ln();
                let log_p = lf[ai_u] + lf[bj_u] + lf[n - ai_u] + lf[n - bj_u]
                    - lf[n]
                    - lf[nij]
                    - lf[ai_u - nij]
                    - lf[bj_u - nij]
                    - lf[n + nij - ai_u - bj_u];
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

pub fn adjusted_rand_index(a: &[i64], b: &[i64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if same_partition(a, b) {
        return Ok(1.0);
    }
    let t = contingency(a, b);
    let n = a.len() as f64;
    let sum_ij: f64 = t.iter().flatten().map(|&v| comb2(v)).sum();
    let sum_a: f64 = t.iter().map(|r| comb2(r.iter().sum())).sum();
    let sum_b: f64 = (0..t[0].len())
        .map(|j| comb2(t.iter().map(|r| r[j]).sum()))
        .sum();
    let expected = sum_a * sum_b / comb2(n);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return Ok(0.0);
    }
    Ok((sum_ij - expected) / (max - expected))
}

/// Adjusted mutual information with arithmetic-mean normalization.
pub fn adjusted_mutual_info(a: &[i64], b: &[i64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if same_partition(a, b) {
        return Ok(1.0);
    }
    let t = contingency(a, b);
    if t.len() == 1 || t[0].len() == 1 {
        return Ok(0.0);
    }
    let n = a.len();
    let nf = n as f64;
    let ra: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let rb: Vec<f64> = (0..t[0].len()).map(|j| t.iter().map(|r| r[j]).sum()).collect();
    let mi = mutual_info(&t, &ra, &rb, nf);
    let emi = expected_mutual_info(&ra, &rb, n);
    let mean_h = (entropy(&ra, nf) + entropy(&rb, nf)) / 2.0;
    let mut den = mean_h - emi;
    if den.abs() < f64::EPSILON {
        den = if den < 0.0 { -f64::EPSILON } else { f64::EPSILON };
    }
    Ok((mi - emi) / den)
}

/// Homogeneity, completeness and their harmonic mean (V-measure) of
/// `pred` against `truth`.
pub fn v_measure(truth: &[i64], pred: &[i64]) -> Result<(f64, f64, f64)> {
    check_len(truth.len(), pred.len())?;
    if same_partition(truth, pred) {
        return Ok((1.0, 1.0, 1.0));
    }
    let t = contingency(truth, pred);
    let n = truth.len() as f64;
    let rc: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let rk: Vec<f64> = (0..t[0].len()).map(|j| t.iter().map(|r| r[j]).sum()).collect();
    let h_c = entropy(&rc, n);
    let h_k = entropy(&rk, n);
    let mi = mutual_info(&t, &rc, &rk, n);
    let homogeneity = if h_c == 0.0 { 1.0 } else { mi / h_c };
    let completeness = if h_k == 0.0 { 1.0 } else { mi / h_k };
    let v = if homogeneity + completeness == 0.0 {
        0.0
    } else {
        2.0 * homogeneity * completeness / (homogeneity + completeness)
    };
    Ok((homogeneity, completeness, v))
}

/// ARI, AMI and v-score keyed as in the result files.
pub fn clustering_external_metrics(truth: &[i64], pred: &[i64]) -> Result<MetricSet> {
    let mut m = MetricSet::default();
    m.push("ARI", adjusted_rand_index(truth, pred)?);
    m.push("AMI", adjusted_mutual_info(truth, pred)?);
    m.push("v-score", v_measure(truth, pred)?.2);
    Ok(m)
}

/// Mean silhouette over non-noise points. Singleton clusters contribute 0.
pub fn silhouette_score(x: &Matrix, labels: &[i64]) -> Result<f64> {
    if x.rows() != labels.len() {
        return Err(Error::Metric(format!(
            "length mismatch: {} rows vs {} labels",
            x.rows(),
            labels.len()
        )));
    }
    let points: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != -1).collect();
    let mut clusters: Vec<i64> = points.iter().map(|&i| labels[i]).collect();
    clusters.sort_unstable();
    clusters.dedup();
    if clusters.len() < 2 {
        return Err(Error::Metric(format!(
            "silhouette undefined: {} cluster(s) among non-noise points",
            clusters.len()
        )));
    }
    let scores: Vec<f64> = points
        .par_iter()
        .map(|&i| {
            let mut sum = vec![0.0; clusters.len()];
            let mut cnt = vec![0usize; clusters.len()];
            for &j in &points {
                if j == i {
                    continue;
                }
                let c = clusters.binary_search(&labels[j]).unwrap();
                sum[c] += dist(x.row(i), x.row(j));
                cnt[c] += 1;
            }
            let own = clusters.binary_search(&labels[i]).unwrap();
            if cnt[own] == 0 {
                return 0.0;
            }
            let a = sum[own] / cnt[own] as f64;
            let b = (0..clusters.len())
                .filter(|&c| c != own && cnt[c] > 0)
                .map(|c| sum[c] / cnt[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
