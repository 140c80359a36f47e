//! CART trees, random forests and gradient boosting on regression trees.
//!
//! Split search is exhaustive over midpoints between consecutive distinct
//! values. Among equal gains the lowest feature index wins, then the lowest
//! threshold; an impure node is split even when the best gain is zero so that
//! distinct points can always be separated.

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::sigmoid;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derived_rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A binary tree stored as a node arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Targets are class indices `0..n_classes`.
    Gini { n_classes: usize },
    Variance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartOptions {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines all.
    pub max_features: Option<usize>,
    pub criterion: Criterion,
}

/// Weighted impurity (`n · impurity`) of a set of targets.
struct Stats {
    counts: Vec<f64>,
    sum: f64,
    sumsq: f64,
    n: f64,
}

impl Stats {
    fn new(criterion: Criterion) -> Self {
        let k = match criterion {
            Criterion::Gini { n_classes } => n_classes,
            Criterion::Variance => 0,
        };
        Stats {
            counts: vec![0.0; k],
            sum: 0.0,
            sumsq: 0.0,
            n: 0.0,
        }
    }

    fn add(&mut self, y: f64, sign: f64) {
        if self.counts.is_empty() {
            self.sum += sign * y;
            self.sumsq += sign * y * y;
        } else {
            self.counts[y as usize] += sign;
        }
        self.n += sign;
    }

    fn weighted_impurity(&self) -> f64 {
        if self.n <= 0.0 {
            return 0.0;
        }
        if self.counts.is_empty() {
            (self.sumsq - self.sum * self.sum / self.n).max(0.0)
        } else {
            self.n - self.counts.iter().map(|c| c * c).sum::<f64>() / self.n
        }
    }
}

fn leaf_value(y: &[f64], rows: &[usize], criterion: Criterion) -> f64 {
    match criterion {
        Criterion::Gini { n_classes } => {
            let mut counts = vec![0usize; n_classes];
            for &r in rows {
                counts[y[r] as usize] += 1;
            }
            // first maximum = lowest class index on ties
            let mut best = 0;
            for (c, &n) in counts.iter().enumerate() {
                if n > counts[best] {
                    best = c;
                }
            }
            best as f64
        }
        Criterion::Variance => rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64,
    }
}

fn is_pure(y: &[f64], rows: &[usize]) -> bool {
    rows.iter().all(|&r| y[r] == y[rows[0]])
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split_on(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    criterion: Criterion,
    parent: f64,
) -> Option<SplitChoice> {
    let mut best: Option<SplitChoice> = None;
    let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for &f in features {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = Stats::new(criterion);
        let mut right = Stats::new(criterion);
        for &(_, t) in &sorted {
            right.add(t, 1.0);
        }
        for i in 0..sorted.len() - 1 {
            left.add(sorted[i].1, 1.0);
            right.add(sorted[i].1, -1.0);
            let (v, next) = (sorted[i].0, sorted[i + 1].0);
            if v == next {
                continue;
            }
            let gain = parent - left.weighted_impurity() - right.weighted_impurity();
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: v + (next - v) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

/// Grows one tree on `rows` (duplicates allowed, as produced by bootstrap).
/// Returns the tree and the total weighted impurity decrease per feature.
pub fn cart_fit_rows(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    opts: &CartOptions,
    rng: &mut Rng,
) -> (Tree, Vec<f64>) {
    let p = x.cols();
    let mut importances = vec![0.0; p];
    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, rows, depth)
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, rows.to_vec(), 0)];
    nodes.push(Node::Leaf { value: 0.0 });
    while let Some((slot, rows, depth)) = stack.pop() {
        let can_split = rows.len() >= 2
            && opts.max_depth.is_none_or(|m| depth < m)
            && !is_pure(y, &rows);
        let mut choice = None;
        if can_split {
            let mut parent = Stats::new(opts.criterion);
            for &r in &rows {
                parent.add(y[r], 1.0);
            }
            let parent = parent.weighted_impurity();
            let (mut tried, mut rest): (Vec<usize>, Vec<usize>) = match opts.max_features {
                Some(m) if m < p => {
                    let mut picked = sample(rng, p, m.max(1)).into_vec();
                    picked.sort_unstable();
                    let rest = (0..p).filter(|f| !picked.contains(f)).collect();
                    (picked, rest)
                }
                _ => ((0..p).collect(), Vec::new()),
            };
            choice = best_split_on(x, y, &rows, &tried, opts.criterion, parent);
            // all sampled features constant here: fall back to the others
            if choice.is_none() && !rest.is_empty() {
                tried = std::mem::take(&mut rest);
                choice = best_split_on(x, y, &rows, &tried, opts.criterion, parent);
            }
        }
        match choice {
            Some(c) => {
                importances[c.feature] += c.gain.max(0.0);
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x.get(i, c.feature) <= c.threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[slot] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
            None => {
                nodes[slot] = Node::Leaf {
                    value: leaf_value(y, &rows, opts.criterion),
                };
            }
        }
    }
    (Tree { nodes }, importances)
}

/// Grows one tree on all rows.
pub fn cart_fit(x: &Matrix, y: &[f64], opts: &CartOptions, seed: u64) -> (Tree, Vec<f64>) {
    let rows: Vec<usize> = (0..x.rows()).collect();
    cart_fit_rows(x, y, &rows, opts, &mut derived_rng(seed, &[]))
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestOptions {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Class count for classification forests; `None` for regression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    /// Impurity decrease per feature, normalized to sum to one.
    pub importances: Vec<f64>,
}

impl Forest {
    /// Vote fraction per class.
    pub fn votes(&self, row: &[f64]) -> Vec<f64> {
        let k = self.n_classes.unwrap_or(0);
        let mut v = vec![0.0; k];
        for t in &self.trees {
            v[t.predict_row(row) as usize] += 1.0;
        }
        let n = self.trees.len() as f64;
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Majority class index (ties to the lowest) or mean of tree outputs.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.n_classes {
            Some(_) => argmax(&self.votes(row)) as f64,
            None => {
                self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
                    / self.trees.len() as f64
            }
        }
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Bagged CART ensemble. Each tree draws its bootstrap sample and feature
/// subsets from its own stream derived from `(seed, tree index)`.
pub fn random_forest_fit(
    x: &Matrix,
    y: &[f64],
    criterion: Criterion,
    opts: &ForestOptions,
) -> Result<Forest> {
    let n = x.rows();
    if n == 0 || opts.n_estimators == 0 {
        return Err(Error::model("random forest needs rows and at least one tree"));
    }
    let cart = CartOptions {
        max_depth: opts.max_depth,
        max_features: opts.max_features,
        criterion,
    };
    let grown: Vec<(Tree, Vec<f64>)> = (0..opts.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = derived_rng(opts.seed, &[t as u64]);
            let rows: Vec<usize> = if opts.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            cart_fit_rows(x, y, &rows, &cart, &mut rng)
        })
        .collect();
    let mut importances = vec![0.0; x.cols()];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, imp) in grown {
        importances.iter_mut().zip(&imp).for_each(|(a, b)| *a += b);
        trees.push(tree);
    }
    normalize(&mut importances);
    Ok(Forest {
        trees,
        n_classes: match criterion {
            Criterion::Gini { n_classes } => Some(n_classes),
            Criterion::Variance => None,
        },
        importances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostLoss {
    Squared,
    /// Binary log loss on `{0, 1}` targets.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostOptions {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

/// One boosted score function: `init + learning_rate · Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub loss: BoostLoss,
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl Boosted {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.init
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict_row(row))
                .sum::<f64>()
    }

    /// Scores after 0, 1, …, n stages.
    pub fn staged_scores(&self, x: &Matrix) -> Vec<Vec<f64>> {
        let mut current = vec![self.init; x.rows()];
        let mut out = vec![current.clone()];
        for t in &self.trees {
            for (i, c) in current.iter_mut().enumerate() {
                *c += self.learning_rate * t.predict_row(x.row(i));
            }
            out.push(current.clone());
        }
        out
    }
}

/// Stagewise additive regression trees on the negative gradient: residuals
/// for squared loss, `y − sigmoid(score)` for log loss. Returns the model and
/// raw per-feature impurity decrease.
pub fn gradient_boosting_fit(
    x: &Matrix,
    y: &[f64],
    loss: BoostLoss,
    opts: &BoostOptions,
) -> Result<(Boosted, Vec<f64>)> {
    let n = x.rows();
    if n == 0 || y.len() != n {
        return Err(Error::model("gradient boosting needs matching, non-empty X and y"));
    }
    let init = match loss {
        BoostLoss::Squared => y.iter().sum::<f64>() / n as f64,
        BoostLoss::Log => {
            let p = (y.iter().sum::<f64>() / n as f64).clamp(1e-15, 1.0 - 1e-15);
            (p / (1.0 - p)).ln()
        }
    };
    let cart = CartOptions {
        max_depth: Some(opts.max_depth),
        max_features: None,
        criterion: Criterion::Variance,
    };
    let rows: Vec<usize> = (0..n).collect();
    let mut rng = derived_rng(0, &[]);
    let mut score = vec![init; n];
    let mut trees = Vec::with_capacity(opts.n_estimators);
    let mut importances = vec![0.0; x.cols()];
    for _ in 0..opts.n_estimators {
        let residual: Vec<f64> = match loss {
            BoostLoss::Squared => y.iter().zip(&score).map(|(t, s)| t - s).collect(),
            BoostLoss::Log => y.iter().zip(&score).map(|(t, s)| t - sigmoid(*s)).collect(),
        };
        let (tree, imp) = cart_fit_rows(x, &residual, &rows, &cart, &mut rng);
        importances.iter_mut().zip(&imp).for_each(|(a, b)| *a += b);
        for (i, s) in score.iter_mut().enumerate() {
            *s += opts.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    Ok((
        Boosted {
            loss,
            init,
            learning_rate: opts.learning_rate,
            trees,
        },
        importances,
    ))
}

pub(crate) fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    normalize(&mut v);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four() -> (Matrix, Vec<f64>) {
        (Matrix::column(&[0.0, 1.0, 2.0, 3.0]), vec![0.0, 0.0, 1.0, 1.0])
    }

    fn gini(k: usize) -> Criterion {
        Criterion::Gini { n_classes: k }
    }

    #[test]
    fn stump_splits_at_midpoint() {
        let (x, y) = four();
        let opts = CartOptions {
            max_depth: Some(1),
            max_features: None,
            criterion: gini(2),
        };
        let (tree, _) = cart_fit(&x, &y, &opts, 0);
        match &tree.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            n => panic!("expected split, got {n:?}"),
        }
        for i in 0..4 {
            assert_eq!(tree.predict_row(x.row(i)), y[i]);
        }
    }

    #[test]
    fn pure_node_is_leaf() {
        let x = Matrix::column(&[0.0, 1.0, 2.0]);
        let opts = CartOptions {
            max_depth: None,
            max_features: None,
            criterion: gini(2),
        };
        let (tree, imp) = cart_fit(&x, &[1.0, 1.0, 1.0], &opts, 0);
        assert_eq!(tree.nodes, vec![Node::Leaf { value: 1.0 }]);
        assert_eq!(imp, vec![0.0]);
    }

    #[test]
    fn constant_feature_never_selected() {
        let x = Matrix::from_rows(&[[5.0, 0.0], [5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]).unwrap();
        let opts = CartOptions {
            max_depth: None,
            max_features: None,
            criterion: gini(2),
        };
        let (tree, imp) = cart_fit(&x, &[0.0, 0.0, 1.0, 1.0], &opts, 0);
        assert!(tree
            .nodes
            .iter()
            .all(|n| !matches!(n, Node::Split { feature: 0, .. })));
        assert_eq!(imp[0], 0.0);
    }

    #[test]
    fn xor_is_fully_separated() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0.0, 1.0, 1.0, 0.0];
        let opts = CartOptions {
            max_depth: None,
            max_features: None,
            criterion: gini(2),
        };
        let (tree, _) = cart_fit(&x, &y, &opts, 0);
        for i in 0..4 {
            assert_eq!(tree.predict_row(x.row(i)), y[i]);
        }
    }

    #[test]
    fn single_tree_forest_equals_cart() {
        let (x, y) = four();
        let opts = ForestOptions {
            n_estimators: 1,
            max_depth: None,
            max_features: Some(1),
            bootstrap: false,
            seed: 9,
        };
        let forest = random_forest_fit(&x, &y, gini(2), &opts).unwrap();
        let cart = CartOptions {
            max_depth: None,
            max_features: None,
            criterion: gini(2),
        };
        assert_eq!(forest.trees[0], cart_fit(&x, &y, &cart, 0).0);
    }

    #[test]
    fn forest_fits_separable_set_and_is_deterministic() {
        let (x, y) = four();
        let opts = ForestOptions {
            n_estimators: 10,
            max_depth: None,
            max_features: Some(1),
            bootstrap: true,
            seed: 3,
        };
        let a = random_forest_fit(&x, &y, gini(2), &opts).unwrap();
        let b = random_forest_fit(&x, &y, gini(2), &opts).unwrap();
        assert_eq!(a, b);
        for i in 0..4 {
            assert_eq!(a.predict_row(x.row(i)), y[i]);
        }
    }

    #[test]
    fn boosting_single_stump_interpolates() {
        let (x, y) = four();
        let opts = BoostOptions {
            n_estimators: 1,
            learning_rate: 1.0,
            max_depth: 1,
        };
        let (m, _) = gradient_boosting_fit(&x, &y, BoostLoss::Squared, &opts).unwrap();
        assert_eq!(m.init, 0.5);
        for i in 0..4 {
            assert!((m.score(x.row(i)) - y[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_learning_rate_keeps_initial_constant() {
        let (x, y) = four();
        let opts = BoostOptions {
            n_estimators: 5,
            learning_rate: 0.0,
            max_depth: 2,
        };
        let (m, _) = gradient_boosting_fit(&x, &y, BoostLoss::Squared, &opts).unwrap();
        assert!((0..4).all(|i| m.score(x.row(i)) == 0.5));
    }

    #[test]
    fn only_split_feature_gets_importance() {
        let x = Matrix::from_rows(&[[0.0, 7.0], [1.0, 7.0], [2.0, 7.0], [3.0, 7.0]]).unwrap();
        let opts = ForestOptions {
            n_estimators: 5,
            max_depth: None,
            max_features: None,
            bootstrap: true,
            seed: 1,
        };
        let f = random_forest_fit(&x, &[0.0, 0.0, 1.0, 1.0], gini(2), &opts).unwrap();
        assert_eq!(f.importances, vec![1.0, 0.0]);
    }
}
