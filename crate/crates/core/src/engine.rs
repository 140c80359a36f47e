//! Training and pre-trained prediction workflows, model bundles and result
//! files.
//!
//! File names for a run with `log_prefix` P and `run_id` R:
//!
//! | file                   | written by            |
//! |------------------------|-----------------------|
//! | `P_R_training.json`    | training              |
//! | `P_R_model.json`       | training (the bundle) |
//! | `P_R_predict.json`     | prediction            |
//! | `P_R_predictions.csv`  | prediction            |
//! | `P_R.log`              | both (prediction appends) |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::Level;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{AlgoConfig, DataConfig, DataPhase, PredictConfig};
use crate::error::{Error, Result};
use crate::explain::{explain_rows, resolve_mode, select_background};
use crate::learners::{fmt_class, FittedModel, ModelSpec, Task};
use crate::logging;
use crate::matrix::Matrix;
use crate::metrics::{classification_metrics, clustering_external_metrics, regression_metrics, silhouette_score, MetricSet};
use crate::model_select::{select_and_fit, CvReport, RfeResult, SelectionOptions};
use crate::preprocess::{apply_preprocess, fit_preprocess, PreprocessState, Processed};
use crate::resample::SmoteConfig;
use crate::rng::derive_seed;
use crate::tabular::{read_csv_dataset, read_predict_data, split_dataset, ColumnKind, ColumnRole, ColumnSchema, TabularDataset};

pub const SCHEMA_VERSION: u32 = 1;

// stream identifiers mixed into the run seed
const SMOTE_STREAM: u64 = 1;
const CV_STREAM: u64 = 2;
const SHAP_STREAM: u64 = 3;

/// Self-describing persisted model: configuration echo, preprocessing state
/// and learned parameters, enough to reproduce predictions exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_version: u32,
    pub description: String,
    pub log_prefix: String,
    pub run_id: u64,
    pub seed: u64,
    pub data_config: Value,
    pub algo_config: Value,
    /// Parameters of the final model with defaults filled in.
    pub resolved_params: Map<String, Value>,
    pub schemas: Vec<ColumnSchema>,
    /// Encoded columns produced by preprocessing.
    pub encoded_features: Vec<String>,
    /// Positions in `encoded_features` the model consumes.
    pub selected_features: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub preprocess: PreprocessState,
    pub model: FittedModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rfe: Option<RfeResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvReport>,
    pub metrics_training: Value,
    pub training_rows: Vec<usize>,
    pub training_predictions: Vec<f64>,
}

/// Predictions for a set of rows in label units, with class probabilities
/// when the model provides them.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub rows: Vec<usize>,
    pub values: Vec<f64>,
    pub proba: Option<Matrix>,
    pub encoded: Processed,
}

impl ModelBundle {
    pub fn feature_order(&self) -> &[String] {
        &self.model.feature_order
    }

    pub fn task(&self) -> Task {
        self.model.task()
    }

    /// Preprocesses `rows` of `ds` and predicts them.
    pub fn predict_rows(&self, ds: &TabularDataset, rows: &[usize]) -> Result<Predictions> {
        let encoded = apply_preprocess(&self.preprocess, ds, rows)?;
        let x = encoded.x.select_cols(&self.selected_features);
        let raw = self.model.predict(&x)?;
        let values = match self.task() {
            Task::Regression => self.preprocess.invert_label_transform(&raw)?,
            _ => raw,
        };
        let proba = match self.task() {
            Task::Classification => self.model.predict_proba(&x)?,
            _ => None,
        };
        Ok(Predictions {
            rows: rows.to_vec(),
            values,
            proba,
            encoded,
        })
    }

    /// Text of a predicted value: category names for categorical labels.
    pub fn prediction_text(&self, v: f64) -> String {
        let label_schema = self
            .label
            .as_ref()
            .and_then(|l| self.schemas.iter().find(|s| &s.name == l));
        match label_schema {
            Some(s) if s.kind == ColumnKind::Categorical && v >= 0.0 => s
                .categories
                .get(v as usize)
                .cloned()
                .unwrap_or_else(|| fmt_class(v)),
            _ => fmt_class(v),
        }
    }
}

pub fn bundle_to_string(b: &ModelBundle) -> Result<String> {
    b.model.ensure_finite()?;
    let mut s = serde_json::to_string_pretty(b).map_err(|e| Error::model(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if path.exists() {
        logging::record(Level::Info, "write", &format!("overwriting {}", path.display()));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_file(dir: &Path, prefix: &str, run_id: u64, suffix: &str) -> PathBuf {
    dir.join(format!("{prefix}_{run_id}{suffix}"))
}

/// Writes `<log_prefix>_<run_id>_model.json` into `dir`.
pub fn save_bundle(b: &ModelBundle, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = run_file(dir, &b.log_prefix, b.run_id, "_model.json");
    write_file(&path, &bundle_to_string(b)?)?;
    Ok(path)
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bundle_err = |message: String| Error::Bundle {
        path: path.to_path_buf(),
        message,
    };
    let value: Value = serde_json::from_str(&text).map_err(|e| bundle_err(format!("not valid JSON: {e}")))?;
    match value.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(bundle_err(format!(
                "unsupported schema_version {v} (this build reads {SCHEMA_VERSION})"
            )))
        }
        None => return Err(bundle_err("missing schema_version".into())),
    }
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de)
        .map_err(|e| bundle_err(format!("at {}: {}", e.path(), e.inner())))
}

/// Finds the bundle in `dir` whose description matches; the highest run_id
/// wins when several do.
pub fn resolve_bundle(dir: impl AsRef<Path>, description: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    let mut available = Vec::new();
    let mut matches: Vec<(u64, PathBuf)> = Vec::new();
    for p in entries {
        let Ok(text) = fs::read_to_string(&p) else { continue };
        let Ok(v) = serde_json::from_str::<Value>(&text) else { continue };
        if v.get("schema_version").is_none() {
            continue;
        }
        let Some(desc) = v.get("description").and_then(Value::as_str) else { continue };
        if desc == description {
            matches.push((v.get("run_id").and_then(Value::as_u64).unwrap_or(0), p));
        } else {
            available.push(desc.to_string());
        }
    }
    if matches.is_empty() {
        available.sort();
        available.dedup();
        return Err(Error::Bundle {
            path: dir.to_path_buf(),
            message: format!(
                "no bundle with description \"{description}\"; available: {}",
                if available.is_empty() { "none".to_string() } else { available.join(", ") }
            ),
        });
    }
    let best = matches
        .iter()
        .enumerate()
        .max_by_key(|(i, (run, _))| (*run, *i))
        .map(|(_, m)| m.1.clone())
        .unwrap();
    if matches.len() > 1 {
        logging::record(
            Level::Info,
            "resolve",
            &format!(
                "{} bundles match \"{description}\"; using {} (highest run_id)",
                matches.len(),
                best.display()
            ),
        );
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunPhase {
    Training,
    Predict,
}

/// Result document of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub phase: RunPhase,
    pub description: String,
    /// Training-row metrics keyed by label column (or `internal`).
    pub metrics_training: Option<Map<String, Value>>,
    pub testing_set: Option<Map<String, Value>>,
    pub feature_importances: Option<Map<String, Value>>,
    pub shap_values: Option<Value>,
    pub cv_report: Option<Value>,
    pub rfe: Option<Value>,
    pub diagnostics: Map<String, Value>,
}

impl RunResult {
    fn new(phase: RunPhase, description: &str) -> Self {
        RunResult {
            phase,
            description: description.to_string(),
            metrics_training: None,
            testing_set: None,
            feature_importances: None,
            shap_values: None,
            cv_report: None,
            rfe: None,
            diagnostics: Map::new(),
        }
    }

    /// The result file layout: training metrics under
    /// `config_data.metrics_training`, held-out metrics under a top-level
    /// `testing_set`. Prediction results carry only `testing_set` (when labels
    /// were present) and diagnostics.
    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        if self.phase == RunPhase::Training {
            out.insert(
                "config_data".into(),
                json!({ "metrics_training": self.metrics_training.clone().unwrap_or_default() }),
            );
            out.insert("description".into(), json!(self.description));
            if let Some(t) = &self.testing_set {
                out.insert("testing_set".into(), Value::Object(t.clone()));
            }
        } else {
            if let Some(t) = &self.testing_set {
                out.insert("testing_set".into(), Value::Object(t.clone()));
            }
        }
        if let Some(v) = &self.feature_importances {
            out.insert("feature_importances".into(), Value::Object(v.clone()));
        }
        if let Some(v) = &self.cv_report {
            out.insert("cv_report".into(), v.clone());
        }
        if let Some(v) = &self.rfe {
            out.insert("rfe".into(), v.clone());
        }
        if let Some(v) = &self.shap_values {
            out.insert("shap_values".into(), v.clone());
        }
        if !self.diagnostics.is_empty() {
            out.insert("diagnostics".into(), Value::Object(self.diagnostics.clone()));
        }
        Value::Object(out)
    }

    fn note_degenerate(&mut self, block: &str, m: &MetricSet) {
        if m.degenerate.is_empty() {
            return;
        }
        let entry = self
            .diagnostics
            .entry("degenerate_metrics")
            .or_insert_with(|| json!({}));
        entry
            .as_object_mut()
            .unwrap()
            .insert(block.to_string(), json!(m.degenerate));
    }
}

/// Writes `<log_prefix>_<run_id>_training.json` or `_predict.json`.
pub fn write_results(r: &RunResult, log_prefix: &str, run_id: u64, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let suffix = match r.phase {
        RunPhase::Training => "_training.json",
        RunPhase::Predict => "_predict.json",
    };
    let path = run_file(dir, log_prefix, run_id, suffix);
    let mut text = serde_json::to_string_pretty(&r.to_json()).map_err(|e| Error::model(e.to_string()))?;
    text.push('\n');
    write_file(&path, &text)?;
    Ok(path)
}

fn stage<T>(name: &'static str, run_id: u64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    logging::record(Level::Debug, name, "start");
    f().map_err(|e| {
        logging::record(Level::Error, name, &format!("run {run_id} failed: {e}"));
        Error::Stage {
            stage: name,
            run_id,
            source: Box::new(e),
        }
    })
}

/// Dense cluster ids for arbitrary label values (rank among distinct values).
fn rank_ids(values: &[f64]) -> Vec<i64> {
    let mut d = values.to_vec();
    d.sort_by(f64::total_cmp);
    d.dedup();
    values
        .iter()
        .map(|v| d.iter().position(|x| x == v).unwrap() as i64)
        .collect()
}

/// Metric blocks for one set of rows. Supervised: one block under the target
/// name. Clustering: ARI/AMI/v-score/Silhouette per label column present,
/// or Silhouette alone under `internal`.
fn evaluate(
    task: Task,
    target: Option<&str>,
    x: &Matrix,
    encoded: &Processed,
    predicted: &[f64],
    proba: Option<(&Matrix, &[f64])>,
    block_prefix: &str,
    result: &mut RunResult,
) -> Result<Option<Map<String, Value>>> {
    let mut blocks = Map::new();
    match task {
        Task::Clustering => {
            let ids: Vec<i64> = predicted.iter().map(|&v| v as i64).collect();
            let mut sil_set = MetricSet::default();
            let silhouette = match silhouette_score(x, &ids) {
                Ok(s) => s,
                Err(e) => {
                    logging::record(Level::Warn, "metrics", &e.to_string());
                    sil_set.degenerate.push("Silhouette".into());
                    0.0
                }
            };
            if encoded.labels.is_empty() {
                sil_set.values.push(("Silhouette".into(), silhouette));
                result.note_degenerate(&format!("{block_prefix}.internal"), &sil_set);
                blocks.insert("internal".into(), sil_set.to_json());
            }
            for (name, values) in &encoded.labels {
                let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
                if keep.is_empty() {
                    continue;
                }
                let truth = rank_ids(&keep.iter().map(|&i| values[i].unwrap()).collect::<Vec<_>>());
                let pred: Vec<i64> = keep.iter().map(|&i| ids[i]).collect();
                let mut m = clustering_external_metrics(&truth, &pred)?;
                m.values.push(("Silhouette".into(), silhouette));
                m.degenerate.extend(sil_set.degenerate.iter().cloned());
                result.note_degenerate(&format!("{block_prefix}.{name}"), &m);
                blocks.insert(name.clone(), m.to_json());
            }
        }
        _ => {
            let target = target.expect("supervised target");
            let Some(values) = encoded.label(target) else {
                return Ok(None);
            };
            let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
            if keep.is_empty() {
                return Ok(None);
            }
            let truth: Vec<f64> = keep.iter().map(|&i| values[i].unwrap()).collect();
            let pred: Vec<f64> = keep.iter().map(|&i| predicted[i]).collect();
            let m = if task == Task::Classification {
                let sub = proba.map(|(p, c)| (p.select_rows(&keep), c));
                classification_metrics(&truth, &pred, sub.as_ref().map(|(p, c)| (p, *c)))?
            } else {
                regression_metrics(&truth, &pred)?
            };
            result.note_degenerate(&format!("{block_prefix}.{target}"), &m);
            blocks.insert(target.to_string(), m.to_json());
        }
    }
    Ok(if blocks.is_empty() { None } else { Some(blocks) })
}

/// Outcome of [`run_training`].
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub bundle: ModelBundle,
    pub result: RunResult,
    /// Lines logged during the run.
    pub log: Vec<String>,
}

/// Load, split, preprocess, resample, select and fit, evaluate, explain.
pub fn run_training(dc: &DataConfig, ac: &AlgoConfig, data: impl AsRef<Path>) -> Result<TrainingRun> {
    logging::init();
    let cap = logging::capture();
    let out = training_inner(dc, ac, data.as_ref());
    let log = cap.finish();
    out.map(|(bundle, result)| TrainingRun { bundle, result, log })
}

fn training_inner(dc: &DataConfig, ac: &AlgoConfig, data: &Path) -> Result<(ModelBundle, RunResult)> {
    let run = dc.run_id;
    let seed = dc.seed;
    logging::record(
        Level::Info,
        "run",
        &format!(
            "training run {run}: {} ({}) on {}",
            ac.algorithm.name(),
            ac.task.name(),
            data.display()
        ),
    );
    stage("validate", run, || crate::config::validate_cross(dc, ac).map(|_| ()))?;
    let ds = stage("load", run, || read_csv_dataset(data, dc))?;
    logging::record(Level::Info, "load", &format!("{} rows, {} columns", ds.n_rows(), ds.schemas.len()));
    let mut ds = match dc.phase {
        DataPhase::TrainingPredict => stage("split", run, || split_dataset(ds, dc))?,
        DataPhase::Training => ds,
    };
    // categorical levels come from training rows only
    let train_for_levels = ds.train_rows.clone();
    let unseen = ds.restrict_categories(&train_for_levels);
    if unseen > 0 {
        logging::record(
            Level::Info,
            "split",
            &format!("{unseen} test cells hold levels absent from training rows; treated as missing"),
        );
    }
    logging::record(
        Level::Info,
        "split",
        &format!("{} training rows, {} test rows", ds.train_rows.len(), ds.test_rows.len()),
    );
    let state = stage("preprocess", run, || fit_preprocess(&ds, ac, seed))?;
    let target = state.label.as_ref().map(|l| l.name.clone());

    // supervised training drops rows whose target is missing
    let train_rows: Vec<usize> = match &target {
        Some(t) => {
            let c = ds.column_index(t).unwrap();
            let kept: Vec<usize> = ds.train_rows.iter().copied().filter(|&r| !ds.values[r][c].is_missing()).collect();
            if kept.len() < ds.train_rows.len() {
                logging::record(
                    Level::Info,
                    "preprocess",
                    &format!("{} training rows without a {t} value excluded", ds.train_rows.len() - kept.len()),
                );
            }
            kept
        }
        None => ds.train_rows.clone(),
    };
    let train = stage("preprocess", run, || apply_preprocess(&state, &ds, &train_rows))?;
    let y_train: Option<Vec<f64>> = target.as_ref().map(|t| {
        let raw: Vec<f64> = train.label(t).unwrap().iter().map(|v| v.unwrap()).collect();
        state.transform_labels(&raw)
    });

    let template = ModelSpec {
        family: ac.algorithm,
        task: ac.task,
        params: ac.fixed_params(),
        seed,
    };
    let opts = SelectionOptions {
        folds: ac.cv_folds,
        scoring: None,
        seed: derive_seed(seed, &[CV_STREAM]),
        smote: ac.smote.enabled.then(|| SmoteConfig {
            k_neighbors: ac.smote.k_neighbors,
            seed: derive_seed(seed, &[SMOTE_STREAM]),
        }),
        rfe: ac.rfe.enabled.then_some(ac.rfe.n_features_to_select),
    };
    let axes = ac.grid_axes();
    let selected = stage("fit", run, || {
        select_and_fit(&template, &axes, &train.x, y_train.as_deref(), &train.feature_names, &opts)
    })?;
    let mut model = selected.model;
    model.feature_order = selected.features.iter().map(|&i| train.feature_names[i].clone()).collect();
    logging::record(
        Level::Info,
        "fit",
        &format!("model fitted on {} rows x {} features", train.x.rows(), model.n_features),
    );

    let mut result = RunResult::new(RunPhase::Training, &ac.description);
    let x_train = train.x.select_cols(&selected.features);

    let mut bundle = ModelBundle {
        schema_version: SCHEMA_VERSION,
        description: ac.description.clone(),
        log_prefix: dc.log_prefix.clone(),
        run_id: run,
        seed,
        data_config: dc.to_json(),
        algo_config: ac.to_json(),
        resolved_params: model.spec.resolved_params()?,
        schemas: ds.schemas.clone(),
        encoded_features: train.feature_names.clone(),
        selected_features: selected.features.clone(),
        label: target.clone(),
        preprocess: state,
        model,
        rfe: selected.rfe,
        cv: selected.cv,
        metrics_training: Value::Null,
        training_rows: train_rows.clone(),
        training_predictions: Vec::new(),
    };

    let train_pred = stage("evaluate", run, || bundle.predict_rows(&ds, &train_rows))?;
    let classes = bundle.model.classes.clone();
    let assignments: Vec<f64> = match bundle.model.training_clusters() {
        Some(l) => l.iter().map(|&v| v as f64).collect(),
        None => train_pred.values.clone(),
    };
    let metrics_training = stage("evaluate", run, || {
        evaluate(
            ac.task,
            target.as_deref(),
            &x_train,
            &train,
            &assignments,
            train_pred.proba.as_ref().map(|p| (p, classes.as_slice())),
            "metrics_training",
            &mut result,
        )
    })?;
    result.metrics_training = Some(metrics_training.unwrap_or_default());

    if !ds.test_rows.is_empty() {
        let test_pred = stage("evaluate", run, || bundle.predict_rows(&ds, &ds.test_rows))?;
        let x_test = test_pred.encoded.x.select_cols(&bundle.selected_features);
        result.testing_set = stage("evaluate", run, || {
            evaluate(
                ac.task,
                target.as_deref(),
                &x_test,
                &test_pred.encoded,
                &test_pred.values,
                test_pred.proba.as_ref().map(|p| (p, classes.as_slice())),
                "testing_set",
                &mut result,
            )
        })?
        .or_else(|| Some(Map::new()));
    }

    if ac.task == Task::Classification && classes.len() == 2 {
        result
            .diagnostics
            .insert("positive_class".into(), json!(bundle.prediction_text(classes[1])));
    }
    if let Some(w) = bundle.model.feature_weights() {
        result.feature_importances = Some(
            bundle
                .model
                .feature_order
                .iter()
                .zip(w)
                .map(|(n, v)| (n.clone(), json!(v)))
                .collect(),
        );
    }
    if let Some(cv) = &bundle.cv {
        result.cv_report = Some(serde_json::to_value(cv).map_err(|e| Error::model(e.to_string()))?);
    }
    if let Some(r) = &bundle.rfe {
        result.rfe = Some(serde_json::to_value(r).map_err(|e| Error::model(e.to_string()))?);
    }

    if ac.shap.enabled {
        if ac.task == Task::Clustering {
            logging::record(Level::Warn, "explain", "Shapley values are not defined for clustering; skipped");
        } else {
            let shap = stage("explain", run, || {
                let background = select_background(&x_train, derive_seed(seed, &[SHAP_STREAM]));
                let (rows, x_explain) = if ds.test_rows.is_empty() {
                    (train_rows.clone(), x_train.clone())
                } else {
                    let enc = apply_preprocess(&bundle.preprocess, &ds, &ds.test_rows)?;
                    (ds.test_rows.clone(), enc.x.select_cols(&bundle.selected_features))
                };
                let mode = resolve_mode(ac.shap.mode, x_explain.cols());
                let attributions = explain_rows(
                    &bundle.model,
                    &x_explain,
                    &background,
                    mode,
                    derive_seed(seed, &[SHAP_STREAM, 1]),
                )?;
                let (outputs, _) = bundle.model.explained_outputs(&x_explain.select_rows(&[0]))?;
                Ok(json!({
                    "mode": if mode == crate::config::ShapMode::Exact { "exact" } else { "kernel" },
                    "features": bundle.model.feature_order,
                    "outputs": outputs,
                    "background_rows": background.rows(),
                    "base_values": attributions.first().map(|a| a.base_value.clone()),
                    "rows": rows.iter().zip(&attributions).map(|(&r, a)| json!({
                        "row": r,
                        "id": ds.ids[r],
                        "values": a.phi,
                    })).collect::<Vec<_>>(),
                }))
            })?;
            result.shap_values = Some(shap);
        }
    }

    bundle.metrics_training = Value::Object(result.metrics_training.clone().unwrap_or_default());
    bundle.training_predictions = train_pred.values;
    logging::record(Level::Info, "run", "training finished");
    Ok((bundle, result))
}

/// Runs training and writes the result file, the bundle and the run log into
/// `out`. The log is written even when the run fails.
pub fn train_to_dir(
    dc: &DataConfig,
    ac: &AlgoConfig,
    data: impl AsRef<Path>,
    out: impl AsRef<Path>,
) -> Result<(TrainingRun, Vec<PathBuf>)> {
    logging::init();
    let out = out.as_ref();
    let cap = logging::capture();
    let outcome = fs::create_dir_all(out)
        .map_err(|e| Error::io(out, e))
        .and_then(|_| training_inner(dc, ac, data.as_ref()))
        .and_then(|(bundle, result)| {
            let a = write_results(&result, &dc.log_prefix, dc.run_id, out)?;
            let b = save_bundle(&bundle, out)?;
            logging::record(Level::Info, "write", &format!("wrote {} and {}", a.display(), b.display()));
            Ok((bundle, result, vec![a, b]))
        });
    let log = cap.finish();
    let log_path = run_file(out, &dc.log_prefix, dc.run_id, ".log");
    if out.is_dir() {
        fs::write(&log_path, join_lines(&log)).map_err(|e| Error::io(&log_path, e))?;
    }
    let (bundle, result, mut files) = outcome?;
    files.push(log_path);
    Ok((TrainingRun { bundle, result, log }, files))
}

fn join_lines(lines: &[String]) -> String {
    let mut s = lines.join("\n");
    if !s.is_empty() {
        s.push('\n');
    }
    s
}

/// Outcome of [`run_predict_pretrained`].
#[derive(Debug, Clone)]
pub struct PredictRun {
    pub bundle_path: PathBuf,
    pub bundle: ModelBundle,
    pub result: RunResult,
    pub ids: Vec<String>,
    pub predictions: Vec<f64>,
    pub log: Vec<String>,
}

impl PredictRun {
    /// CSV text: the patient-id column (or `row`) and the prediction.
    pub fn predictions_csv(&self) -> Result<String> {
        let id_name = self
            .bundle
            .schemas
            .iter()
            .find(|s| s.role == ColumnRole::Id)
            .map_or("row".to_string(), |s| s.name.clone());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([id_name.as_str(), "prediction"])?;
        for (i, (id, v)) in self.ids.iter().zip(&self.predictions).enumerate() {
            let id = if id.is_empty() { i.to_string() } else { id.clone() };
            w.write_record([id, self.bundle.prediction_text(*v)])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Resolves the bundle named by `pc.description` in `bundle_dir`, applies it to
/// `data`, and evaluates when label columns are present.
pub fn run_predict_pretrained(
    pc: &PredictConfig,
    data: impl AsRef<Path>,
    bundle_dir: impl AsRef<Path>,
) -> Result<PredictRun> {
    logging::init();
    let cap = logging::capture();
    let out = predict_inner(pc, data.as_ref(), bundle_dir.as_ref());
    let log = cap.finish();
    out.map(|mut r| {
        r.log = log;
        r
    })
}

fn predict_inner(pc: &PredictConfig, data: &Path, bundle_dir: &Path) -> Result<PredictRun> {
    let run = pc.run_id;
    logging::record(
        Level::Info,
        "run",
        &format!("predict run {run}: \"{}\" on {}", pc.description, data.display()),
    );
    let bundle_path = stage("resolve", run, || resolve_bundle(bundle_dir, &pc.description))?;
    let bundle = stage("resolve", run, || load_bundle(&bundle_path))?;
    let ds = stage("load", run, || read_predict_data(data, &bundle.schemas, &pc.dataset_format))?;
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let pred = stage("predict", run, || bundle.predict_rows(&ds, &rows))?;
    let mut result = RunResult::new(RunPhase::Predict, &pc.description);
    let x = pred.encoded.x.select_cols(&bundle.selected_features);
    let classes = bundle.model.classes.clone();
    result.testing_set = stage("evaluate", run, || {
        evaluate(
            bundle.task(),
            bundle.label.as_deref(),
            &x,
            &pred.encoded,
            &pred.values,
            pred.proba.as_ref().map(|p| (p, classes.as_slice())),
            "testing_set",
            &mut result,
        )
    })?;
    if result.testing_set.is_none() {
        logging::record(Level::Info, "evaluate", "no label values in the data; metrics omitted");
    }
    if bundle.task() == Task::Classification && classes.len() == 2 {
        result
            .diagnostics
            .insert("positive_class".into(), json!(bundle.prediction_text(classes[1])));
    }
    logging::record(Level::Info, "run", &format!("{} predictions", pred.values.len()));
    Ok(PredictRun {
        bundle_path,
        bundle,
        result,
        ids: ds.ids,
        predictions: pred.values,
        log: Vec::new(),
    })
}

/// Runs prediction and writes `_predict.json` and `_predictions.csv` into
/// `out`, appending to the run log.
pub fn predict_to_dir(
    pc: &PredictConfig,
    data: impl AsRef<Path>,
    bundle_dir: impl AsRef<Path>,
    out: impl AsRef<Path>,
) -> Result<(PredictRun, Vec<PathBuf>)> {
    logging::init();
    let out = out.as_ref();
    let cap = logging::capture();
    let outcome = fs::create_dir_all(out)
        .map_err(|e| Error::io(out, e))
        .and_then(|_| predict_inner(pc, data.as_ref(), bundle_dir.as_ref()))
        .and_then(|run| {
            let csv_path = run_file(out, &pc.log_prefix, pc.run_id, "_predictions.csv");
            write_file(&csv_path, &run.predictions_csv()?)?;
            let json_path = write_results(&run.result, &pc.log_prefix, pc.run_id, out)?;
            Ok((run, vec![json_path, csv_path]))
        });
    let log = cap.finish();
    let log_path = run_file(out, &pc.log_prefix, pc.run_id, ".log");
    if out.is_dir() {
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| Error::io(&log_path, e))?;
        f.write_all(join_lines(&log).as_bytes())
            .map_err(|e| Error::io(&log_path, e))?;
    }
    let (mut run, mut files) = outcome?;
    run.log = log;
    files.push(log_path);
    Ok((run, files))
}

/// Human-readable summary of a bundle.
pub fn describe_bundle(b: &ModelBundle) -> String {
    let mut s = String::new();
    let m = &b.model;
    s.push_str(&format!("description:   {}\n", b.description));
    s.push_str(&format!("schema:        v{}\n", b.schema_version));
    s.push_str(&format!("run:           {}_{} (seed {})\n", b.log_prefix, b.run_id, b.seed));
    s.push_str(&format!("algorithm:     {} ({})\n", m.family().name(), m.task().name()));
    s.push_str("parameters:\n");
    for (k, v) in &b.resolved_params {
        s.push_str(&format!("  {k} = {v}\n"));
    }
    if let Some(l) = &b.label {
        s.push_str(&format!("label:         {l}\n"));
    }
    if !m.classes.is_empty() {
        let names: Vec<String> = m.classes.iter().map(|&c| b.prediction_text(c)).collect();
        s.push_str(&format!("classes:       {}\n", names.join(", ")));
    }
    s.push_str(&format!("features ({}):\n", m.feature_order.len()));
    for f in &m.feature_order {
        s.push_str(&format!("  {f}\n"));
    }
    if !b.preprocess.dropped_columns.is_empty() {
        s.push_str(&format!("dropped:       {}\n", b.preprocess.dropped_columns.join(", ")));
    }
    s.push_str("training metrics:\n");
    if let Value::Object(blocks) = &b.metrics_training {
        for (block, values) in blocks {
            s.push_str(&format!("  {block}:\n"));
            if let Value::Object(vals) = values {
                for (k, v) in vals {
                    s.push_str(&format!("    {k}: {v}\n"));
                }
            }
        }
    }
    s
}
