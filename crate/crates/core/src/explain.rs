//! Shapley-value attributions for supervised models, exact by coalition
//! enumeration or by the kernel weighted-least-squares estimator.
//!
//! The value of a coalition S is the mean model output over background rows
//! with the features in S replaced by those of the explained row.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ShapMode;
use crate::error::{Error, Result};
use crate::learners::FittedModel;
use crate::matrix::{solve_linear, Matrix};
use crate::rng::{derived_rng, seeded_permutation};

/// Largest feature count accepted by [`shapley_exact`].
pub const EXACT_MAX_FEATURES: usize = 12;
/// Background rows drawn from the training matrix.
pub const BACKGROUND_ROWS: usize = 50;
const KERNEL_BUDGET: usize = 2048;

/// A vector-valued model: `n x p` inputs to `n x m` outputs.
pub type OutputFn<'a> = dyn Fn(&Matrix) -> Result<Matrix> + Sync + 'a;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// Per output: value of the empty coalition.
    pub base_value: Vec<f64>,
    /// Per output, per feature.
    pub phi: Vec<Vec<f64>>,
    /// Per output: model output at the explained row.
    pub explained_output: Vec<f64>,
}

/// Up to [`BACKGROUND_ROWS`] rows chosen by a seeded shuffle, kept in
/// their original order.
pub fn select_background(x: &Matrix, seed: u64) -> Matrix {
    let mut idx = seeded_permutation(x.rows(), seed);
    idx.truncate(BACKGROUND_ROWS);
    idx.sort_unstable();
    x.select_rows(&idx)
}

/// Mean output for each coalition mask, evaluated in parallel per mask.
fn coalition_values(f: &OutputFn<'_>, x: &[f64], background: &Matrix, masks: &[u64]) -> Result<Vec<Vec<f64>>> {
    masks
        .par_iter()
        .map(|&mask| {
            let mut m = background.clone();
            for r in 0..m.rows() {
                let row = m.row_mut(r);
                for (j, v) in row.iter_mut().enumerate() {
                    if mask >> j & 1 == 1 {
                        *v = x[j];
                    }
                }
            }
            let out = f(&m)?;
            let nb = out.rows() as f64;
            Ok((0..out.cols())
                .map(|c| out.col_values(c).iter().sum::<f64>() / nb)
                .collect())
        })
        .collect()
}

fn check_inputs(x: &[f64], background: &Matrix) -> Result<()> {
    if background.is_empty() {
        return Err(Error::model("background set is empty"));
    }
    if x.len() != background.cols() {
        return Err(Error::model(format!(
            "explained row has {} features, background {}",
            x.len(),
            background.cols()
        )));
    }
    if x.is_empty() {
        return Err(Error::model("nothing to explain: zero features"));
    }
    Ok(())
}

/// Exact Shapley values of an arbitrary output function.
pub fn shapley_exact_fn(f: &OutputFn<'_>, x: &[f64], background: &Matrix) -> Result<Attribution> {
    check_inputs(x, background)?;
    let p = x.len();
    if p > EXACT_MAX_FEATURES {
        return Err(Error::model(format!(
            "exact Shapley values need p <= {EXACT_MAX_FEATURES} features (got {p}); use kernel mode"
        )));
    }
    let masks: Vec<u64> = (0..1u64 << p).collect();
    let v = coalition_values(f, x, background, &masks)?;
    let outputs = v[0].len();
    // weight(s) = s! (p - s - 1)! / p!
    let mut fact = vec![1.0f64; p + 1];
    for i in 1..=p {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..p).map(|s| fact[s] * fact[p - s - 1] / fact[p]).collect();
    let mut phi = vec![vec![0.0; p]; outputs];
    for (o, row) in phi.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            let bit = 1u64 << i;
            let mut acc = 0.0;
            for &s in masks.iter().filter(|&&s| s & bit == 0) {
                acc += weight[s.count_ones() as usize] * (v[(s | bit) as usize][o] - v[s as usize][o]);
            }
            *slot = acc;
        }
    }
    let full = (1usize << p) - 1;
    Ok(Attribution {
        base_value: v[0].clone(),
        phi,
        explained_output: v[full].clone(),
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of a coalition of size `s` among `p` features.
pub fn kernel_weight(p: usize, s: usize) -> f64 {
    (p - 1) as f64 / (binomial(p, s) * s as f64 * (p - s) as f64)
}

/// Kernel estimator with local accuracy imposed as a constraint. All
/// coalitions are used when `2^p <= n_coalitions`; otherwise sizes are drawn
/// in proportion to their total kernel weight and members uniformly.
pub fn shapley_kernel_fn(
    f: &OutputFn<'_>,
    x: &[f64],
    background: &Matrix,
    n_coalitions: usize,
    seed: u64,
) -> Result<Attribution> {
    check_inputs(x, background)?;
    let p = x.len();
    if p > 63 {
        return Err(Error::model("kernel mode supports at most 63 features"));
    }
    let full_mask = (1u64 << p) - 1;
    let ends = coalition_values(f, x, background, &[0, full_mask])?;
    let (base, top) = (ends[0].clone(), ends[1].clone());
    let outputs = base.len();
    if p == 1 {
        return Ok(Attribution {
            phi: (0..outputs).map(|o| vec![top[o] - base[o]]).collect(),
            base_value: base,
            explained_output: top,
        });
    }

    let enumerate = (1u64 << p) <= n_coalitions as u64;
    let (masks, weights): (Vec<u64>, Vec<f64>) = if enumerate {
        (1..full_mask)
            .map(|m| (m, kernel_weight(p, m.count_ones() as usize)))
            .unzip()
    } else {
        let size_w: Vec<f64> = (1..p).map(|s| (p - 1) as f64 / (s as f64 * (p - s) as f64)).collect();
        let total: f64 = size_w.iter().sum();
        let mut rng = derived_rng(seed, &[0]);
        (0..n_coalitions.max(p))
            .map(|_| {
                let mut u = rng.gen::<f64>() * total;
                let mut s = p - 1;
                for (i, w) in size_w.iter().enumerate() {
                    if u < *w {
                        s = i + 1;
                        break;
                    }
                    u -= w;
                }
                let members = sample(&mut rng, p, s);
                (members.iter().fold(0u64, |m, j| m | 1 << j), 1.0)
            })
            .unzip()
    };
    let v = coalition_values(f, x, background, &masks)?;

    // eliminate phi_{p-1} = delta - sum of the others and solve the
    // (p-1)-dimensional weighted normal equations
    let q = p - 1;
    let mut phi = Vec::with_capacity(outputs);
    for o in 0..outputs {
        let delta = top[o] - base[o];
        let mut a = vec![vec![0.0; q]; q];
        let mut b = vec![0.0; q];
        for ((&m, &w), vals) in masks.iter().zip(&weights).zip(&v) {
            let last = (m >> q & 1) as f64;
            let z: Vec<f64> = (0..q).map(|j| (m >> j & 1) as f64 - last).collect();
            let t = vals[o] - base[o] - last * delta;
            for i in 0..q {
                b[i] += w * z[i] * t;
                for j in 0..q {
                    a[i][j] += w * z[i] * z[j];
                }
            }
        }
        let sol = solve_linear(a, b).ok_or_else(|| {
            Error::model("kernel estimator is singular; increase the coalition budget")
        })?;
        let rest: f64 = sol.iter().sum();
        let mut row = sol;
        row.push(delta - rest);
        phi.push(row);
    }
    Ok(Attribution {
        base_value: base,
        phi,
        explained_output: top,
    })
}

fn model_fn(m: &FittedModel) -> impl Fn(&Matrix) -> Result<Matrix> + Sync + '_ {
    move |x: &Matrix| m.explained_outputs(x).map(|(_, out)| out)
}

pub fn shapley_exact(m: &FittedModel, x: &[f64], background: &Matrix) -> Result<Attribution> {
    shapley_exact_fn(&model_fn(m), x, background)
}

pub fn shapley_kernel(
    m: &FittedModel,
    x: &[f64],
    background: &Matrix,
    n_coalitions: usize,
    seed: u64,
) -> Result<Attribution> {
    shapley_kernel_fn(&model_fn(m), x, background, n_coalitions, seed)
}

/// Mode actually used for `p` features: auto resolves to exact up to
/// [`EXACT_MAX_FEATURES`], kernel beyond.
pub fn resolve_mode(mode: ShapMode, p: usize) -> ShapMode {
    match mode {
        ShapMode::Auto if p <= EXACT_MAX_FEATURES => ShapMode::Exact,
        ShapMode::Auto => ShapMode::Kernel,
        m => m,
    }
}

/// Explains every row of `rows` under the configured mode.
pub fn explain_rows(
    m: &FittedModel,
    rows: &Matrix,
    background: &Matrix,
    mode: ShapMode,
    seed: u64,
) -> Result<Vec<Attribution>> {
    let p = rows.cols();
    let budget = if p < 11 { 1 << p } else { KERNEL_BUDGET };
    (0..rows.rows())
        .map(|i| match resolve_mode(mode, p) {
            ShapMode::Exact => shapley_exact(m, rows.row(i), background),
            _ => shapley_kernel(m, rows.row(i), background, budget, seed.wrapping_add(i as u64)),
        })
        .collect()
}
