//! Imputation, standardization and min-max scaling fitted on training rows
//! and replayed identically on any other rows.
//!
//! Order at apply time: drop, impute, transform. Categorical features are
//! emitted one-hot in category-index order; scaling touches numeric features
//! only.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::config::{AlgoConfig, CategoricalImpute, ImputationConfig, NumericImpute, PreprocessingFlags};
use crate::error::{Error, Result};
use crate::learners::Task;
use crate::matrix::{solve_linear, Matrix};
use crate::rng::derived_rng;
use crate::tabular::{Cell, ColumnKind, ColumnRole, TabularDataset};

/// An affine map fitted on training values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scaling {
    Standardize { mean: f64, std: f64 },
    MinMax { min: f64, max: f64 },
}

impl Scaling {
    fn standardize(values: &[f64]) -> Scaling {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var > 0.0 {
            Scaling::Standardize { mean, std: var.sqrt() }
        } else {
            Scaling::Standardize { mean: 0.0, std: 1.0 }
        }
    }

    fn min_max(values: &[f64]) -> Scaling {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max > min {
            Scaling::MinMax { min, max }
        } else {
            Scaling::MinMax { min: 0.0, max: 1.0 }
        }
    }

    pub fn forward(&self, v: f64) -> f64 {
        match *self {
            Scaling::Standardize { mean, std } => (v - mean) / std,
            Scaling::MinMax { min, max } => (v - min) / (max - min),
        }
    }

    pub fn inverse(&self, v: f64) -> f64 {
        match *self {
            Scaling::Standardize { mean, std } => v * std + mean,
            Scaling::MinMax { min, max } => v * (max - min) + min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NumericFill {
    Constant {
        value: f64,
    },
    /// Linear regression on other numeric features, each mean-imputed first.
    Regression {
        intercept: f64,
        predictors: Vec<String>,
        coefficients: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CategoricalFill {
    Mode { index: usize },
    /// Cumulative train frequencies of each category.
    Sample { cumulative: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeaturePlan {
    Numeric {
        name: String,
        /// Train mean, used for predictors and for cells missing only at predict time.
        mean: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        impute: Option<NumericFill>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transform: Option<Scaling>,
    },
    Categorical {
        name: String,
        categories: Vec<String>,
        /// Most frequent train category, used for cells missing only at predict time.
        mode: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        impute: Option<CategoricalFill>,
    },
}

impl FeaturePlan {
    pub fn name(&self) -> &str {
        match self {
            FeaturePlan::Numeric { name, .. } | FeaturePlan::Categorical { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPlan {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Scaling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessState {
    pub task: Task,
    pub perc_nan_to_drop: f64,
    pub seed: u64,
    pub dropped_columns: Vec<String>,
    pub features: Vec<FeaturePlan>,
    /// Training target of supervised tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelPlan>,
}

/// Output of [`apply_preprocess`]: the encoded feature matrix plus the raw
/// label columns of the same rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Processed {
    pub x: Matrix,
    pub feature_names: Vec<String>,
    pub rows: Vec<usize>,
    pub labels: Vec<(String, Vec<Option<f64>>)>,
}

impl Processed {
    pub fn label(&self, name: &str) -> Option<&[Option<f64>]> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len().is_multiple_of(2) {
        (s[m - 1] + s[m]) / 2.0
    } else {
        s[m]
    }
}

pub fn fit_preprocess(ds: &TabularDataset, ac: &AlgoConfig, seed: u64) -> Result<PreprocessState> {
    fit_preprocess_with(ds, &ac.preprocessing, &ac.imputation, ac.task, seed)
}

/// Fits on `ds.train_rows` only.
pub fn fit_preprocess_with(
    ds: &TabularDataset,
    flags: &PreprocessingFlags,
    imputation: &ImputationConfig,
    task: Task,
    seed: u64,
) -> Result<PreprocessState> {
    let rows = &ds.train_rows;
    if rows.is_empty() {
        return Err(Error::data("no training rows to fit preprocessing on"));
    }
    let n = rows.len() as f64;
    let feature_cols = ds.columns_with_role(ColumnRole::Feature);
    if feature_cols.is_empty() {
        return Err(Error::data("dataset has no feature columns"));
    }

    let mut dropped = Vec::new();
    let mut kept = Vec::new();
    for &c in &feature_cols {
        let observed = rows.iter().filter(|&&r| !ds.values[r][c].is_missing()).count();
        let frac = 1.0 - observed as f64 / n;
        if observed == 0 || frac > imputation.perc_nan_to_drop {
            log::info!(
                target: "preprocess",
                "dropping column {} ({:.1}% missing in training rows, threshold {:.1}%)",
                ds.schemas[c].name,
                frac * 100.0,
                imputation.perc_nan_to_drop * 100.0
            );
            dropped.push(ds.schemas[c].name.clone());
        } else {
            kept.push(c);
        }
    }
    if kept.is_empty() {
        return Err(Error::data("every feature column was dropped by the missing-value threshold"));
    }

    let observed = |c: usize| -> Vec<f64> {
        rows.iter().filter_map(|&r| ds.values[r][c].value()).collect()
    };
    let numeric: Vec<usize> = kept
        .iter()
        .copied()
        .filter(|&c| ds.schemas[c].kind == ColumnKind::Numeric)
        .collect();
    let means: Vec<f64> = numeric.iter().map(|&c| mean(&observed(c))).collect();

    let mut features = Vec::with_capacity(kept.len());
    for &c in &kept {
        let schema = &ds.schemas[c];
        let has_missing = rows.iter().any(|&r| ds.values[r][c].is_missing());
        match schema.kind {
            ColumnKind::Numeric => {
                let obs = observed(c);
                let col_mean = mean(&obs);
                let impute = has_missing.then(|| match imputation.not_categorical {
                    NumericImpute::Mean => NumericFill::Constant { value: col_mean },
                    NumericImpute::Median => NumericFill::Constant { value: median(&obs) },
                    NumericImpute::Regression => {
                        fit_regression_fill(ds, rows, c, &numeric, &means).unwrap_or_else(|| {
                            log::info!(
                                target: "preprocess",
                                "regression imputation for {} has no usable predictors; using the mean",
                                schema.name
                            );
                            NumericFill::Constant { value: col_mean }
                        })
                    }
                });
                // imputed values are in raw units, so transforms see the imputed column
                let transform = if flags.standardization_feature || flags.scaling_feature {
                    let filled: Vec<f64> = rows
                        .iter()
                        .map(|&r| match ds.values[r][c] {
                            Cell::Missing => fill_numeric(impute.as_ref(), col_mean, ds, r, &numeric, &means),
                            cell => cell.value().unwrap(),
                        })
                        .collect();
                    Some(if flags.standardization_feature {
                        Scaling::standardize(&filled)
                    } else {
                        Scaling::min_max(&filled)
                    })
                } else {
                    None
                };
                features.push(FeaturePlan::Numeric {
                    name: schema.name.clone(),
                    mean: col_mean,
                    impute,
                    transform,
                });
            }
            ColumnKind::Categorical => {
                let mut counts = vec![0usize; schema.categories.len()];
                for &r in rows {
                    if let Cell::Cat(i) = ds.values[r][c] {
                        counts[i] += 1;
                    }
                }
                // ties go to the lowest category index
                let mode = counts
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &k)| if k > counts[best] { i } else { best });
                let impute = has_missing.then(|| match imputation.categorical {
                    CategoricalImpute::MostFrequent => CategoricalFill::Mode { index: mode },
                    CategoricalImpute::Random => {
                        let total: usize = counts.iter().sum();
                        let mut acc = 0usize;
                        CategoricalFill::Sample {
                            cumulative: counts
                                .iter()
                                .map(|&k| {
                                    acc += k;
                                    acc as f64 / total as f64
                                })
                                .collect(),
                        }
                    }
                });
                features.push(FeaturePlan::Categorical {
                    name: schema.name.clone(),
                    categories: schema.categories.clone(),
                    mode,
                    impute,
                });
            }
        }
    }

    let label = match task {
        Task::Clustering => None,
        _ => {
            let labels = ds.columns_with_role(ColumnRole::Label);
            let &c = labels
                .first()
                .ok_or_else(|| Error::data(format!("task {} needs a label column", task.name())))?;
            let transform = if task == Task::Regression {
                if ds.schemas[c].kind != ColumnKind::Numeric {
                    return Err(Error::data(format!(
                        "regression label {} is not numeric",
                        ds.schemas[c].name
                    )));
                }
                let obs = observed(c);
                if obs.is_empty() {
                    return Err(Error::data("regression label has no observed training values"));
                }
                if flags.standardization_label {
                    Some(Scaling::standardize(&obs))
                } else if flags.scaling_label {
                    Some(Scaling::min_max(&obs))
                } else {
                    None
                }
            } else {
                if flags.standardization_label || flags.scaling_label {
                    log::info!(target: "preprocess", "label transforms apply to regression only; ignored for classification");
                }
                None
            };
            Some(LabelPlan {
                name: ds.schemas[c].name.clone(),
                transform,
            })
        }
    };

    Ok(PreprocessState {
        task,
        perc_nan_to_drop: imputation.perc_nan_to_drop,
        seed,
        dropped_columns: dropped,
        features,
        label,
    })
}

fn fit_regression_fill(
    ds: &TabularDataset,
    rows: &[usize],
    target: usize,
    numeric: &[usize],
    means: &[f64],
) -> Option<NumericFill> {
    let preds: Vec<(usize, f64)> = numeric
        .iter()
        .zip(means)
        .filter(|(&c, _)| c != target)
        .map(|(&c, &m)| (c, m))
        .collect();
    if preds.is_empty() {
        return None;
    }
    let q = preds.len() + 1;
    let mut a = vec![vec![0.0; q]; q];
    let mut b = vec![0.0; q];
    let mut used = 0usize;
    for &r in rows {
        let Some(y) = ds.values[r][target].value() else {
            continue;
        };
        used += 1;
        let mut z = Vec::with_capacity(q);
        z.push(1.0);
        z.extend(preds.iter().map(|&(c, m)| ds.values[r][c].value().unwrap_or(m)));
        for i in 0..q {
            b[i] += z[i] * y;
            for j in 0..q {
                a[i][j] += z[i] * z[j];
            }
        }
    }
    if used <= q {
        return None;
    }
    let beta = solve_linear(a, b)?;
    Some(NumericFill::Regression {
        intercept: beta[0],
        predictors: preds.iter().map(|&(c, _)| ds.schemas[c].name.clone()).collect(),
        coefficients: beta[1..].to_vec(),
    })
}

/// Fit-time fill, using column indices of the training dataset.
fn fill_numeric(
    fill: Option<&NumericFill>,
    fallback: f64,
    ds: &TabularDataset,
    r: usize,
    numeric: &[usize],
    means: &[f64],
) -> f64 {
    match fill {
        None => fallback,
        Some(NumericFill::Constant { value }) => *value,
        Some(NumericFill::Regression {
            intercept,
            predictors,
            coefficients,
        }) => {
            let mut v = *intercept;
            for (name, w) in predictors.iter().zip(coefficients) {
                let k = numeric
                    .iter()
                    .position(|&c| ds.schemas[c].name == *name)
                    .unwrap();
                v += w * ds.values[r][numeric[k]].value().unwrap_or(means[k]);
            }
            v
        }
    }
}

impl PreprocessState {
    /// Names of the encoded feature columns, one-hot levels as `name=level`.
    pub fn feature_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.features {
            match f {
                FeaturePlan::Numeric { name, .. } => out.push(name.clone()),
                FeaturePlan::Categorical { name, categories, .. } => {
                    out.extend(categories.iter().map(|c| format!("{name}={c}")))
                }
            }
        }
        out
    }

    /// Applies the label transform fitted for regression (identity otherwise).
    pub fn transform_labels(&self, y: &[f64]) -> Vec<f64> {
        match self.label.as_ref().and_then(|l| l.transform) {
            Some(t) => y.iter().map(|&v| t.forward(v)).collect(),
            None => y.to_vec(),
        }
    }

    /// Maps model-space regression predictions back to label units.
    pub fn invert_label_transform(&self, predictions: &[f64]) -> Result<Vec<f64>> {
        if self.task != Task::Regression {
            return Err(Error::data(format!(
                "label transforms are defined for regression only, not {}",
                self.task.name()
            )));
        }
        Ok(match self.label.as_ref().and_then(|l| l.transform) {
            Some(t) => predictions.iter().map(|&v| t.inverse(v)).collect(),
            None => predictions.to_vec(),
        })
    }
}

/// Encodes the given rows of `ds` with the fitted state. Columns are looked up
/// by name, so a predict-time dataset with its own column order works too.
pub fn apply_preprocess(state: &PreprocessState, ds: &TabularDataset, rows: &[usize]) -> Result<Processed> {
    let col = |name: &str| -> Result<usize> {
        ds.column_index(name)
            .ok_or_else(|| Error::data(format!("feature column \"{name}\" not present")))
    };
    let cols: Vec<usize> = state
        .features
        .iter()
        .map(|f| col(f.name()))
        .collect::<Result<_>>()?;
    let mean_of = |name: &str| -> Option<f64> {
        state.features.iter().find_map(|f| match f {
            FeaturePlan::Numeric { name: n, mean, .. } if n == name => Some(*mean),
            _ => None,
        })
    };
    // predictor columns of regression fills, resolved once
    let mut predictor_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(state.features.len());
    for f in &state.features {
        let mut v = Vec::new();
        if let FeaturePlan::Numeric {
            impute: Some(NumericFill::Regression { predictors, .. }),
            ..
        } = f
        {
            for p in predictors {
                let m = mean_of(p).ok_or_else(|| Error::data(format!("predictor {p} not in state")))?;
                v.push((col(p)?, m));
            }
        }
        predictor_cols.push(v);
    }

    let names = state.feature_names();
    let width = names.len();
    let mut x = Matrix::zeros(rows.len(), width);
    for (i, &r) in rows.iter().enumerate() {
        let out = x.row_mut(i);
        let mut k = 0;
        for (fi, (f, &c)) in state.features.iter().zip(&cols).enumerate() {
            let cell = ds.values[r][c];
            match f {
                FeaturePlan::Numeric {
                    mean,
                    impute,
                    transform,
                    ..
                } => {
                    let raw = match cell {
                        Cell::Missing => match impute {
                            None => *mean,
                            Some(NumericFill::Constant { value }) => *value,
                            Some(NumericFill::Regression {
                                intercept,
                                coefficients,
                                ..
                            }) => {
                                let mut v = *intercept;
                                for (&(pc, pm), w) in predictor_cols[fi].iter().zip(coefficients) {
                                    v += w * ds.values[r][pc].value().unwrap_or(pm);
                                }
                                v
                            }
                        },
                        Cell::Num(v) => v,
                        Cell::Cat(_) => {
                            return Err(Error::data(format!(
                                "column {} is numeric in the state but categorical in the data",
                                f.name()
                            )))
                        }
                    };
                    out[k] = transform.map_or(raw, |t| t.forward(raw));
                    k += 1;
                }
                FeaturePlan::Categorical {
                    categories,
                    mode,
                    impute,
                    ..
                } => {
                    let level = match cell {
                        Cell::Cat(j) if j < categories.len() => j,
                        Cell::Cat(_) | Cell::Num(_) => {
                            return Err(Error::data(format!(
                                "column {} does not hold trained categories",
                                f.name()
                            )))
                        }
                        Cell::Missing => match impute {
                            None => *mode,
                            Some(CategoricalFill::Mode { index }) => *index,
                            Some(CategoricalFill::Sample { cumulative }) => {
                                let u: f64 = derived_rng(state.seed, &[fi as u64, r as u64]).gen();
                                cumulative
                                    .iter()
                                    .position(|&c| u < c)
                                    .unwrap_or(categories.len() - 1)
                            }
                        },
                    };
                    out[k + level] = 1.0;
                    k += categories.len();
                }
            }
        }
    }

    let labels = ds
        .columns_with_role(ColumnRole::Label)
        .into_iter()
        .map(|c| (ds.schemas[c].name.clone(), ds.column_values(c, rows)))
        .collect();
    Ok(Processed {
        x,
        feature_names: names,
        rows: rows.to_vec(),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::ColumnSchema;

    fn numeric_ds(columns: &[(&str, Vec<Option<f64>>)], train: usize) -> TabularDataset {
        let n = columns[0].1.len();
        TabularDataset {
            schemas: columns
                .iter()
                .map(|(name, _)| ColumnSchema {
                    name: name.to_string(),
                    kind: ColumnKind::Numeric,
                    role: if *name == "y" {
                        ColumnRole::Label
                    } else {
                        ColumnRole::Feature
                    },
                    categories: vec![],
                })
                .collect(),
            values: (0..n)
                .map(|r| {
                    columns
                        .iter()
                        .map(|(_, v)| v[r].map_or(Cell::Missing, Cell::Num))
                        .collect()
                })
                .collect(),
            ids: vec![String::new(); n],
            train_rows: (0..train).collect(),
            test_rows: (train..n).collect(),
        }
    }

    fn flags(std: bool, scale: bool) -> PreprocessingFlags {
        PreprocessingFlags {
            standardization_feature: std,
            scaling_feature: scale,
            ..Default::default()
        }
    }

    #[test]
    fn mean_imputation() {
        let ds = numeric_ds(&[("a", vec![Some(1.0), Some(2.0), None, Some(3.0)])], 4);
        let st = fit_preprocess_with(&ds, &flags(false, false), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        assert_eq!(
            st.features[0],
            FeaturePlan::Numeric {
                name: "a".into(),
                mean: 2.0,
                impute: Some(NumericFill::Constant { value: 2.0 }),
                transform: None
            }
        );
        let p = apply_preprocess(&st, &ds, &[0, 1, 2, 3]).unwrap();
        assert_eq!(p.x.col_values(0), vec![1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn drop_above_threshold() {
        let ds = numeric_ds(
            &[
                ("a", vec![None, None, None, Some(1.0)]),
                ("b", vec![Some(1.0), None, Some(2.0), Some(3.0)]),
            ],
            4,
        );
        let st = fit_preprocess_with(&ds, &flags(false, false), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        assert_eq!(st.dropped_columns, vec!["a"]);
        assert_eq!(st.feature_names(), vec!["b"]);
    }

    #[test]
    fn complete_column_untouched() {
        let ds = numeric_ds(&[("a", vec![Some(4.0), Some(-1.0)])], 2);
        let st = fit_preprocess_with(&ds, &flags(false, false), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        let p = apply_preprocess(&st, &ds, &[0, 1]).unwrap();
        assert_eq!(p.x.col_values(0), vec![4.0, -1.0]);
        assert!(matches!(&st.features[0], FeaturePlan::Numeric { impute: None, .. }));
    }

    #[test]
    fn standardize_and_scale() {
        let ds = numeric_ds(&[("a", vec![Some(0.0), Some(2.0), Some(4.0)])], 2);
        let st = fit_preprocess_with(&ds, &flags(true, false), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        let p = apply_preprocess(&st, &ds, &[0, 1]).unwrap();
        assert_eq!(p.x.col_values(0), vec![-1.0, 1.0]);

        let st = fit_preprocess_with(&ds, &flags(false, true), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        let p = apply_preprocess(&st, &ds, &[2]).unwrap();
        assert_eq!(p.x.col_values(0), vec![2.0]);
    }

    #[test]
    fn constant_column_passes_through() {
        let ds = numeric_ds(&[("a", vec![Some(3.0), Some(3.0)])], 2);
        for f in [flags(true, false), flags(false, true)] {
            let st = fit_preprocess_with(&ds, &f, &ImputationConfig::default(), Task::Clustering, 0).unwrap();
            let p = apply_preprocess(&st, &ds, &[0, 1]).unwrap();
            assert_eq!(p.x.col_values(0), vec![3.0, 3.0]);
        }
    }

    #[test]
    fn label_inverse() {
        let ds = numeric_ds(&[("a", vec![Some(0.0), Some(1.0)]), ("y", vec![Some(8.0), Some(12.0)])], 2);
        let f = PreprocessingFlags {
            standardization_label: true,
            ..Default::default()
        };
        let st = fit_preprocess_with(&ds, &f, &ImputationConfig::default(), Task::Regression, 0).unwrap();
        assert_eq!(
            st.label.as_ref().unwrap().transform,
            Some(Scaling::Standardize { mean: 10.0, std: 2.0 })
        );
        assert_eq!(st.invert_label_transform(&[1.5]).unwrap(), vec![13.0]);
        let fwd = st.transform_labels(&[3.7]);
        assert!((st.invert_label_transform(&fwd).unwrap()[0] - 3.7).abs() <= 1e-12);

        let plain = fit_preprocess_with(&ds, &flags(false, false), &ImputationConfig::default(), Task::Regression, 0).unwrap();
        assert_eq!(plain.invert_label_transform(&[2.5]).unwrap(), vec![2.5]);
        let cl = fit_preprocess_with(&ds, &flags(false, false), &ImputationConfig::default(), Task::Classification, 0).unwrap();
        assert!(cl.invert_label_transform(&[1.0]).is_err());
    }

    #[test]
    fn regression_imputation_recovers_linear_relation() {
        let ds = numeric_ds(
            &[
                ("a", vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0), Some(5.0)]),
                ("b", vec![Some(3.0), Some(5.0), None, Some(9.0), Some(11.0)]),
            ],
            5,
        );
        let imp = ImputationConfig {
            not_categorical: NumericImpute::Regression,
            ..Default::default()
        };
        let st = fit_preprocess_with(&ds, &flags(false, false), &imp, Task::Clustering, 0).unwrap();
        let p = apply_preprocess(&st, &ds, &[2]).unwrap();
        assert!((p.x.get(0, 1) - 7.0).abs() < 1e-9);
    }

    fn categorical_ds() -> TabularDataset {
        TabularDataset {
            schemas: vec![ColumnSchema {
                name: "c".into(),
                kind: ColumnKind::Categorical,
                role: ColumnRole::Feature,
                categories: vec!["u".into(), "v".into(), "w".into()],
            }],
            values: [Cell::Cat(1), Cell::Cat(0), Cell::Cat(1), Cell::Missing, Cell::Cat(2), Cell::Missing]
                .into_iter()
                .map(|c| vec![c])
                .collect(),
            ids: vec![String::new(); 6],
            train_rows: (0..5).collect(),
            test_rows: vec![5],
        }
    }

    #[test]
    fn one_hot_with_mode() {
        let ds = categorical_ds();
        let st = fit_preprocess_with(&ds, &flags(true, false), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        assert_eq!(st.feature_names(), vec!["c=u", "c=v", "c=w"]);
        let p = apply_preprocess(&st, &ds, &[0, 3]).unwrap();
        assert_eq!(p.x.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(p.x.row(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn random_categorical_is_reproducible() {
        let ds = categorical_ds();
        let imp = ImputationConfig {
            categorical: CategoricalImpute::Random,
            ..Default::default()
        };
        let st = fit_preprocess_with(&ds, &flags(false, false), &imp, Task::Clustering, 9).unwrap();
        let a = apply_preprocess(&st, &ds, &[3, 5]).unwrap();
        let b = apply_preprocess(&st, &ds, &[5, 3]).unwrap();
        assert_eq!(a.x.row(0), b.x.row(1));
        assert_eq!(a.x.row(1), b.x.row(0));
        for r in a.x.iter_rows() {
            assert_eq!(r.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn test_rows_do_not_affect_state() {
        let mut ds = numeric_ds(&[("a", vec![Some(1.0), None, Some(3.0), Some(100.0)])], 3);
        let st = fit_preprocess_with(&ds, &flags(true, false), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        ds.values[3][0] = Cell::Num(-5e6);
        let again = fit_preprocess_with(&ds, &flags(true, false), &ImputationConfig::default(), Task::Clustering, 0).unwrap();
        assert_eq!(st, again);
    }
}
