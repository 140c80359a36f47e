//! Recursive feature elimination and grid-search cross-validation.
//!
//! When both are enabled grid search is the outer loop and RFE runs inside
//! every fold's fit. SMOTE, when enabled, only ever sees a fold's training
//! part.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::learners::{fit, FittedModel, ModelSpec, Task};
use crate::matrix::Matrix;
use crate::metrics::{classification_metrics, regression_metrics};
use crate::resample::{smote_balance, SmoteConfig};
use crate::rng::{derive_seed, seeded_permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    F1,
    Accuracy,
    NegMse,
}

impl Scoring {
    /// F1 for binary problems, accuracy for multiclass, negated MSE for regression.
    pub fn default_for(task: Task, y: &[f64]) -> Result<Scoring> {
        match task {
            Task::Regression => Ok(Scoring::NegMse),
            Task::Classification => {
                let mut c = y.to_vec();
                c.sort_by(f64::total_cmp);
                c.dedup();
                Ok(if c.len() <= 2 { Scoring::F1 } else { Scoring::Accuracy })
            }
            Task::Clustering => Err(Error::model("cross-validation needs a supervised task")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scoring::F1 => "f1",
            Scoring::Accuracy => "accuracy",
            Scoring::NegMse => "neg_mse",
        }
    }

    /// Higher is better.
    pub fn score(self, y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
        Ok(match self {
            Scoring::F1 => classification_metrics(y_true, y_pred, None)?.get("f1").unwrap(),
            Scoring::Accuracy => classification_metrics(y_true, y_pred, None)?.get("accuracy").unwrap(),
            Scoring::NegMse => -regression_metrics(y_true, y_pred)?.get("mse").unwrap(),
        })
    }
}

/// Seeded shuffle cut into `k` contiguous chunks whose sizes differ by at
/// most one (larger chunks first). Each fold is returned sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::field("cv_folds", "must be at least 2"));
    }
    if k > n {
        return Err(Error::data(format!("{k} folds requested for {n} rows")));
    }
    let perm = seeded_permutation(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

/// (training rows, validation rows) per fold.
pub fn fold_plan(n: usize, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let folds = kfold_split(n, k, seed)?;
    Ok(folds
        .iter()
        .map(|valid| {
            let mut mask = vec![false; n];
            valid.iter().for_each(|&i| mask[i] = true);
            ((0..n).filter(|&i| !mask[i]).collect(), valid.clone())
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    /// Per feature: 1 for retained, larger for earlier elimination.
    pub ranking: Vec<usize>,
    pub retained: Vec<String>,
    pub retained_indices: Vec<usize>,
    pub elimination_order: Vec<String>,
    /// Importances of each fit, `null` for features already eliminated.
    pub importance_trace: Vec<Vec<Option<f64>>>,
}

/// Fits, drops the least important feature (ties: highest index first) and
/// repeats until `n_select` features remain; the last fit is returned.
pub fn rfe(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[f64],
    names: &[String],
    n_select: usize,
) -> Result<(RfeResult, FittedModel)> {
    if !spec.family.has_feature_weights() {
        return Err(Error::model(format!(
            "recursive feature elimination needs feature weights, which {} does not expose",
            spec.family.name()
        )));
    }
    let p = x.cols();
    if n_select == 0 || n_select > p {
        return Err(Error::field(
            "rfe.n_features_to_select",
            format!("must lie in 1..={p}, got {n_select}"),
        ));
    }
    let mut surviving: Vec<usize> = (0..p).collect();
    let mut ranking = vec![1usize; p];
    let mut order = Vec::new();
    let mut trace = Vec::new();
    loop {
        let model = fit(spec, &x.select_cols(&surviving), Some(y))?;
        let imp = model.feature_weights().expect("family exposes weights");
        let mut row = vec![None; p];
        for (&f, &w) in surviving.iter().zip(&imp) {
            row[f] = Some(w);
        }
        trace.push(row);
        if surviving.len() == n_select {
            let result = RfeResult {
                ranking,
                retained: surviving.iter().map(|&f| names[f].clone()).collect(),
                retained_indices: surviving,
                elimination_order: order.iter().map(|&f: &usize| names[f].clone()).collect(),
                importance_trace: trace,
            };
            return Ok((result, model));
        }
        let mut worst = 0;
        for (pos, &w) in imp.iter().enumerate() {
            if w <= imp[worst] {
                worst = pos;
            }
        }
        let f = surviving.remove(worst);
        ranking[f] = p - n_select + 1 - order.len();
        order.push(f);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: Map<String, Value>,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub scoring: Scoring,
    pub folds: usize,
    pub points: Vec<GridPoint>,
    pub best_index: usize,
    pub best_params: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions {
    pub folds: usize,
    pub scoring: Option<Scoring>,
    pub seed: u64,
    pub smote: Option<SmoteConfig>,
    /// Number of features RFE keeps, when enabled.
    pub rfe: Option<usize>,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            folds: 5,
            scoring: None,
            seed: 0,
            smote: None,
            rfe: None,
        }
    }
}

/// A fitted model together with the feature subset it consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub model: FittedModel,
    /// Column indices of the input matrix the model was trained on.
    pub features: Vec<usize>,
    pub rfe: Option<RfeResult>,
    pub cv: Option<CvReport>,
}

/// Cartesian product of the axes, last axis varying fastest.
pub fn grid_points(base: &Map<String, Value>, axes: &[(String, Vec<Value>)]) -> Vec<Map<String, Value>> {
    let mut points = vec![base.clone()];
    for (name, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    points
}

/// SMOTE (if configured) then RFE or a plain fit.
fn fit_once(
    spec: &ModelSpec,
    x: &Matrix,
    y: &[f64],
    names: &[String],
    smote: Option<SmoteConfig>,
    rfe_keep: Option<usize>,
) -> Result<Selected> {
    let (x, y) = match smote {
        Some(cfg) => smote_balance(x, y, &cfg)?,
        None => (x.clone(), y.to_vec()),
    };
    match rfe_keep {
        Some(k) => {
            let (r, model) = rfe(spec, &x, &y, names, k)?;
            Ok(Selected {
                model,
                features: r.retained_indices.clone(),
                rfe: Some(r),
                cv: None,
            })
        }
        None => Ok(Selected {
            model: fit(spec, &x, Some(&y))?,
            features: (0..x.cols()).collect(),
            rfe: None,
            cv: None,
        }),
    }
}

/// Scores every grid point by k-fold cross-validation and refits the best
/// point on all rows. Mean-score ties go to the earlier point.
pub fn grid_search(
    template: &ModelSpec,
    axes: &[(String, Vec<Value>)],
    x: &Matrix,
    y: &[f64],
    names: &[String],
    opts: &SelectionOptions,
) -> Result<Selected> {
    if template.task == Task::Clustering {
        return Err(Error::model("grid search needs a supervised task"));
    }
    let scoring = match opts.scoring {
        Some(s) => s,
        None => Scoring::default_for(template.task, y)?,
    };
    let points = grid_points(&template.params, axes);
    let plan = fold_plan(x.rows(), opts.folds, opts.seed)?;

    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..plan.len()).map(move |f| (p, f)))
        .collect();
    let scores: Vec<f64> = tasks
        .par_iter()
        .map(|&(p, f)| -> Result<f64> {
            let (train, valid) = &plan[f];
            let spec = ModelSpec {
                params: points[p].clone(),
                ..template.clone()
            };
            let smote = opts.smote.map(|c| SmoteConfig {
                seed: derive_seed(c.seed, &[f as u64]),
                ..c
            });
            let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let sel = fit_once(&spec, &x.select_rows(train), &ty, names, smote, opts.rfe)?;
            let vx = x.select_rows(valid).select_cols(&sel.features);
            let vy: Vec<f64> = valid.iter().map(|&i| y[i]).collect();
            scoring.score(&vy, &sel.model.predict(&vx)?)
        })
        .collect::<Result<_>>()?;

    let k = plan.len();
    let mut report_points: Vec<GridPoint> = Vec::with_capacity(points.len());
    let mut best = 0;
    for (p, params) in points.iter().enumerate() {
        let fold_scores = scores[p * k..(p + 1) * k].to_vec();
        let mean = fold_scores.iter().sum::<f64>() / k as f64;
        let std = (fold_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k as f64).sqrt();
        if p > 0 && mean > report_points[best].mean {
            best = p;
        }
        report_points.push(GridPoint {
            params: params.clone(),
            fold_scores,
            mean,
            std,
        });
    }
    let best_params = points[best].clone();
    let spec = ModelSpec {
        params: best_params.clone(),
        ..template.clone()
    };
    let mut sel = fit_once(&spec, x, y, names, opts.smote, opts.rfe)?;
    sel.cv = Some(CvReport {
        scoring,
        folds: k,
        points: report_points,
        best_index: best,
        best_params,
    });
    Ok(sel)
}

/// Entry point used by the engine: grid search when axes are declared,
/// otherwise a single fit with optional SMOTE and RFE.
pub fn select_and_fit(
    template: &ModelSpec,
    axes: &[(String, Vec<Value>)],
    x: &Matrix,
    y: Option<&[f64]>,
    names: &[String],
    opts: &SelectionOptions,
) -> Result<Selected> {
    match (template.task, y) {
        (Task::Clustering, _) => {
            if !axes.is_empty() {
                return Err(Error::Validation(vec![
                    "grid axes are not supported for clustering (no cross-validation target)".into(),
                ]));
            }
            Ok(Selected {
                model: fit(template, x, None)?,
                features: (0..x.cols()).collect(),
                rfe: None,
                cv: None,
            })
        }
        (_, None) => Err(Error::model("supervised fit requires targets")),
        (_, Some(y)) if !axes.is_empty() => grid_search(template, axes, x, y, names, opts),
        (_, Some(y)) => fit_once(template, x, y, names, opts.smote, opts.rfe),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Family;
    use serde_json::json;

    #[test]
    fn fold_sizes() {
        let f = kfold_split(6, 3, 0).unwrap();
        assert!(f.iter().all(|v| v.len() == 2));
        let f = kfold_split(7, 3, 0).unwrap();
        assert_eq!(f.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 2, 2]);
        let mut all: Vec<usize> = f.concat();
        all.sort();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert_eq!(kfold_split(7, 3, 0).unwrap(), f);
        assert!(kfold_split(2, 3, 0).is_err());
    }

    #[test]
    fn grid_product_order() {
        let axes = vec![
            ("a".to_string(), vec![json!(1), json!(2)]),
            ("b".to_string(), vec![json!("x"), json!("y")]),
        ];
        let pts = grid_points(&Map::new(), &axes);
        let pairs: Vec<(i64, String)> = pts
            .iter()
            .map(|p| (p["a"].as_i64().unwrap(), p["b"].as_str().unwrap().to_string()))
            .collect();
        assert_eq!(pairs, vec![(1, "x".into()), (1, "y".into()), (2, "x".into()), (2, "y".into())]);
        assert_eq!(grid_points(&Map::new(), &[]).len(), 1);
    }

    fn noisy_line(n: usize) -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 * 4.0 - 2.0).collect();
        let y = xs
            .iter()
            .enumerate()
            .map(|(i, x)| x + 0.01 * (((i * 7919) % 13) as f64 / 13.0 - 0.5))
            .collect();
        (Matrix::column(&xs), y)
    }

    #[test]
    fn smaller_penalty_wins() {
        let (x, y) = noisy_line(60);
        let spec = ModelSpec::new(Family::ElasticNet, Task::Regression);
        let axes = vec![("alpha".to_string(), vec![json!(0.1), json!(10.0)])];
        let sel = grid_search(&spec, &axes, &x, &y, &["x".into()], &SelectionOptions::default()).unwrap();
        let cv = sel.cv.unwrap();
        assert_eq!(cv.best_params["alpha"], json!(0.1));
        assert_eq!(cv.scoring, Scoring::NegMse);
        assert!(cv.points.iter().all(|p| p.mean <= cv.points[cv.best_index].mean));
    }

    #[test]
    fn ties_go_to_first_point() {
        let (x, y) = noisy_line(20);
        let spec = ModelSpec::new(Family::Knn, Task::Regression);
        let axes = vec![("k".to_string(), vec![json!(3), json!(3)])];
        let sel = grid_search(&spec, &axes, &x, &y, &["x".into()], &SelectionOptions::default()).unwrap();
        assert_eq!(sel.cv.unwrap().best_index, 0);
    }

    #[test]
    fn single_point_refit_equals_plain_fit() {
        let (x, y) = noisy_line(20);
        let spec = ModelSpec::new(Family::ElasticNet, Task::Regression).with_param("alpha", json!(0.1));
        let sel = grid_search(&spec, &[], &x, &y, &["x".into()], &SelectionOptions::default()).unwrap();
        assert_eq!(sel.cv.as_ref().unwrap().points.len(), 1);
        assert_eq!(sel.model, fit(&spec, &x, Some(&y)).unwrap());
    }

    #[test]
    fn rfe_elimination_order() {
        // three features whose linear importances are (0.1, 5, 0.2) whatever the subset
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 10.0;
                vec![t.sin(), t.cos(), (2.0 * t).sin()]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 0.1 * r[0] - 5.0 * r[1] + 0.2 * r[2]).collect();
        let spec = ModelSpec::new(Family::ElasticNet, Task::Regression)
            .with_param("alpha", json!(0.0))
            .with_param("tol", json!(1e-12))
            .with_param("max_iter", json!(100000));
        let names: Vec<String> = ["f0", "f1", "f2"].iter().map(|s| s.to_string()).collect();
        let (r, model) = rfe(&spec, &x, &y, &names, 1).unwrap();
        assert_eq!(r.elimination_order, vec!["f0", "f2"]);
        assert_eq!(r.retained, vec!["f1"]);
        assert_eq!(r.ranking, vec![3, 1, 2]);
        assert_eq!(model.n_features, 1);

        let (all, _) = rfe(&spec, &x, &y, &names, 3).unwrap();
        assert_eq!(all.ranking, vec![1, 1, 1]);
        assert!(all.elimination_order.is_empty());
    }

    #[test]
    fn rfe_needs_weights() {
        let spec = ModelSpec::new(Family::Knn, Task::Regression);
        let err = rfe(&spec, &Matrix::column(&[0.0, 1.0]), &[0.0, 1.0], &["a".into()], 1).unwrap_err();
        assert!(err.to_string().contains("feature weights"));
    }

    #[test]
    fn rfe_tie_removes_highest_index() {
        let spec = ModelSpec::new(Family::ElasticNet, Task::Regression).with_param("alpha", json!(100.0));
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]]).unwrap();
        let (r, _) = rfe(&spec, &x, &[1.0, 1.0, 1.0], &["a".into(), "b".into()], 1).unwrap();
        assert_eq!(r.elimination_order, vec!["b"]);
    }

    #[test]
    fn folds_never_validate_on_training_rows() {
        for (train, valid) in fold_plan(23, 4, 11).unwrap() {
            assert!(valid.iter().all(|v| !train.contains(v)));
            assert_eq!(train.len() + valid.len(), 23);
        }
    }
}
