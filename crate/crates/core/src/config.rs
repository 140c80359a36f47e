//! The three JSON configuration documents: data reading, algorithm training,
//! and reuse of a pre-trained model.
//!
//! Field names follow the documents users already write, including the
//! `data_inputation` block spelling and `PatientID` capitalization. Keys that
//! start with `_comment`, and any key this module does not know, are ignored.
//! Trailing commas before a closing brace or bracket are tolerated.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::learners::{Family, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetType {
    PointInTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Xlsx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataPhase {
    Training,
    TrainingPredict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitType {
    Random,
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub log_prefix: String,
    pub run_id: u64,
    pub dataset_name: String,
    pub dataset_type: DatasetType,
    pub dataset_format: DatasetFormat,
    /// Stratification column for random splits when it names a label.
    pub group: String,
    pub patient_id: String,
    pub labels: Vec<String>,
    /// Recorded only; point-in-time data has no time axis.
    pub time: String,
    pub features2drop: Vec<String>,
    pub phase: DataPhase,
    pub categorical_features: Vec<String>,
    /// Percentage of rows used for training; present iff phase is `training_predict`.
    pub split_percentage: Option<u32>,
    pub split_type: SplitType,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PreprocessingFlags {
    pub standardization_feature: bool,
    pub standardization_label: bool,
    pub scaling_feature: bool,
    pub scaling_label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoricalImpute {
    Random,
    MostFrequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericImpute {
    Mean,
    Median,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputationConfig {
    pub perc_nan_to_drop: f64,
    pub categorical: CategoricalImpute,
    pub not_categorical: NumericImpute,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            perc_nan_to_drop: 0.5,
            categorical: CategoricalImpute::MostFrequent,
            not_categorical: NumericImpute::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfeSettings {
    pub enabled: bool,
    pub n_features_to_select: usize,
}

impl Default for RfeSettings {
    fn default() -> Self {
        RfeSettings {
            enabled: false,
            n_features_to_select: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteSettings {
    pub enabled: bool,
    pub k_neighbors: usize,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        SmoteSettings {
            enabled: false,
            k_neighbors: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapMode {
    Exact,
    Kernel,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapSettings {
    pub enabled: bool,
    pub mode: ShapMode,
}

impl Default for ShapSettings {
    fn default() -> Self {
        ShapSettings {
            enabled: false,
            mode: ShapMode::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoConfig {
    pub config_name: String,
    /// Key under which the trained bundle is later looked up.
    pub description: String,
    pub task: Task,
    pub preprocessing: PreprocessingFlags,
    pub imputation: ImputationConfig,
    pub algorithm: Family,
    /// Raw parameter block. An array value declares a grid-search axis.
    pub algorithm_params: Map<String, Value>,
    pub rfe: RfeSettings,
    pub smote: SmoteSettings,
    pub shap: ShapSettings,
    pub cv_folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictConfig {
    pub log_prefix: String,
    pub run_id: u64,
    pub dataset_name: String,
    pub dataset_type: String,
    pub dataset_format: String,
    pub description: String,
}

/// Outcome of checking a data configuration against an algorithm configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    /// Clustering runs with label columns also report ARI/AMI/v-score.
    pub external_cluster_metrics: bool,
}

const RESERVED_PARAM_KEYS: [&str; 6] = [
    "preprocessing",
    "data_inputation",
    "rfe",
    "smote",
    "shap",
    "cv_folds",
];

// ---------------------------------------------------------------------------
// JSON reading helpers
// ---------------------------------------------------------------------------

/// Parses JSON text, tolerating trailing commas and reporting byte offsets.
pub(crate) fn parse_json(text: &str) -> Result<Value> {
    let cleaned = blank_trailing_commas(text);
    serde_json::from_str(&cleaned).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        Error::Json {
            offset: byte_offset(text, line, column),
            line,
            column,
            message: e.to_string(),
        }
    })
}

/// Replaces each comma that is followed only by whitespace and a closing
/// `}` or `]` with a space, leaving byte offsets unchanged.
fn blank_trailing_commas(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = bytes.to_vec();
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b',' => {
                let next = bytes[i + 1..].iter().find(|c| !c.is_ascii_whitespace());
                if matches!(next, Some(b'}') | Some(b']')) {
                    out[i] = b' ';
                }
            }
            _ => {}
        }
    }
    // Only ASCII commas were replaced by ASCII spaces.
    String::from_utf8(out).expect("utf-8 preserved")
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return text.len();
    }
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

struct Obj<'a> {
    map: &'a Map<String, Value>,
    prefix: String,
}

impl<'a> Obj<'a> {
    fn root(v: &'a Value, what: &str) -> Result<Self> {
        match v {
            Value::Object(map) => Ok(Obj {
                map,
                prefix: String::new(),
            }),
            _ => Err(Error::field(what, "expected a JSON object")),
        }
    }

    fn name(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key)
    }

    fn child(&self, key: &str) -> Result<Option<Obj<'a>>> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Object(map)) => Ok(Some(Obj {
                map,
                prefix: self.name(key),
            })),
            Some(_) => Err(Error::field(self.name(key), "expected an object")),
        }
    }

    fn require_child(&self, key: &str) -> Result<Obj<'a>> {
        self.child(key)?
            .ok_or_else(|| Error::MissingField(self.name(key)))
    }

    fn opt_str(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(Error::field(self.name(key), "expected a string")),
        }
    }

    fn str(&self, key: &str) -> Result<String> {
        self.opt_str(key)?
            .ok_or_else(|| Error::MissingField(self.name(key)))
    }

    fn opt_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Number(n)) => n.as_u64().map(Some).ok_or_else(|| {
                Error::field(self.name(key), "expected a non-negative integer")
            }),
            Some(_) => Err(Error::field(
                self.name(key),
                "expected a non-negative integer",
            )),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(_) => Err(Error::field(self.name(key), "expected a number")),
        }
    }

    fn opt_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(Error::field(self.name(key), "expected true or false")),
        }
    }

    fn str_list(&self, key: &str) -> Result<Option<Vec<String>>> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(Error::field(self.name(key), "expected a list of strings")),
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(Error::field(self.name(key), "expected a list of strings")),
        }
    }

    fn enum_of<T: Copy>(&self, key: &str, choices: &[(&str, T)]) -> Result<Option<T>> {
        let Some(raw) = self.opt_str(key)? else {
            return Ok(None);
        };
        choices
            .iter()
            .find(|(name, _)| *name == raw)
            .map(|(_, v)| Some(*v))
            .ok_or_else(|| Error::InvalidEnum {
                field: self.name(key),
                value: format!("\"{raw}\""),
                allowed: choices.iter().map(|(n, _)| n.to_string()).collect(),
            })
    }
}

const DATASET_TYPES: [(&str, DatasetType); 1] = [("point-in-time", DatasetType::PointInTime)];
const DATASET_FORMATS: [(&str, DatasetFormat); 2] =
    [("csv", DatasetFormat::Csv), ("xlsx", DatasetFormat::Xlsx)];
const DATA_PHASES: [(&str, DataPhase); 2] = [
    ("training", DataPhase::Training),
    ("training_predict", DataPhase::TrainingPredict),
];
const SPLIT_TYPES: [(&str, SplitType); 2] =
    [("random", SplitType::Random), ("sequential", SplitType::Sequential)];
const TASKS: [(&str, Task); 3] = [
    ("classification", Task::Classification),
    ("regression", Task::Regression),
    ("clustering", Task::Clustering),
];
const CATEGORICAL_IMPUTE: [(&str, CategoricalImpute); 2] = [
    ("random", CategoricalImpute::Random),
    ("most_frequent", CategoricalImpute::MostFrequent),
];
const NUMERIC_IMPUTE: [(&str, NumericImpute); 3] = [
    ("mean", NumericImpute::Mean),
    ("median", NumericImpute::Median),
    ("regression", NumericImpute::Regression),
];
const SHAP_MODES: [(&str, ShapMode); 3] = [
    ("exact", ShapMode::Exact),
    ("kernel", ShapMode::Kernel),
    ("auto", ShapMode::Auto),
];

fn name_of<T: Copy + PartialEq>(choices: &[(&'static str, T)], v: T) -> &'static str {
    choices.iter().find(|(_, c)| *c == v).map(|(n, _)| *n).unwrap()
}

// ---------------------------------------------------------------------------
// Data configuration
// ---------------------------------------------------------------------------

pub fn parse_data_config(document: &str) -> Result<DataConfig> {
    let root = parse_json(document)?;
    let top = Obj::root(&root, "data configuration")?;
    let services = top.require_child("services")?;
    let runtime = top.require_child("runtime")?;
    let dataset = top.require_child("dataset")?;

    let phase = top
        .enum_of("phase", &DATA_PHASES)?
        .ok_or_else(|| Error::MissingField("phase".into()))?;
    let split_percentage = match top.opt_u64("split_percentage")? {
        Some(p) if p == 0 || p >= 100 => {
            return Err(Error::field(
                "split_percentage",
                format!("{p} is outside the open interval (0, 100)"),
            ))
        }
        Some(p) => Some(p as u32),
        None => None,
    };
    if phase == DataPhase::TrainingPredict && split_percentage.is_none() {
        return Err(Error::MissingField("split_percentage".into()));
    }

    let dc = DataConfig {
        log_prefix: services.str("log_prefix")?,
        run_id: runtime
            .opt_u64("run_id")?
            .ok_or_else(|| Error::MissingField("runtime.run_id".into()))?,
        dataset_name: dataset.str("name")?,
        dataset_type: dataset
            .enum_of("type", &DATASET_TYPES)?
            .ok_or_else(|| Error::MissingField("dataset.type".into()))?,
        dataset_format: dataset
            .enum_of("format", &DATASET_FORMATS)?
            .ok_or_else(|| Error::MissingField("dataset.format".into()))?,
        group: top.opt_str("group")?.unwrap_or_default(),
        patient_id: top.str("PatientID")?,
        labels: top
            .str_list("labels")?
            .ok_or_else(|| Error::MissingField("labels".into()))?,
        time: top.opt_str("time")?.unwrap_or_default(),
        features2drop: top.str_list("features2drop")?.unwrap_or_default(),
        phase,
        categorical_features: top.str_list("categorical_features")?.unwrap_or_default(),
        split_percentage: if phase == DataPhase::TrainingPredict {
            split_percentage
        } else {
            None
        },
        split_type: top
            .enum_of("split_type", &SPLIT_TYPES)?
            .unwrap_or(SplitType::Random),
        seed: top.opt_u64("seed")?.unwrap_or(0),
    };

    let mut problems = Vec::new();
    for label in &dc.labels {
        if dc.features2drop.contains(label) {
            problems.push(format!("label \"{label}\" also listed in features2drop"));
        }
    }
    if dc.labels.contains(&dc.patient_id) {
        problems.push(format!(
            "PatientID column \"{}\" is also declared as a label",
            dc.patient_id
        ));
    }
    if problems.is_empty() {
        Ok(dc)
    } else {
        Err(Error::Validation(problems))
    }
}

impl DataConfig {
    /// Serializes back to the document layout accepted by [`parse_data_config`].
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "services": { "log_prefix": self.log_prefix },
            "runtime": { "run_id": self.run_id },
            "dataset": {
                "name": self.dataset_name,
                "type": name_of(&DATASET_TYPES, self.dataset_type),
                "format": name_of(&DATASET_FORMATS, self.dataset_format),
            },
            "group": self.group,
            "PatientID": self.patient_id,
            "labels": self.labels,
            "time": self.time,
            "features2drop": self.features2drop,
            "phase": name_of(&DATA_PHASES, self.phase),
            "categorical_features": self.categorical_features,
        });
        let obj = v.as_object_mut().unwrap();
        if let Some(p) = self.split_percentage {
            obj.insert("split_percentage".into(), json!(p));
        }
        obj.insert(
            "split_type".into(),
            json!(name_of(&SPLIT_TYPES, self.split_type)),
        );
        obj.insert("seed".into(), json!(self.seed));
        v
    }
}

// ---------------------------------------------------------------------------
// Algorithm configuration
// ---------------------------------------------------------------------------

pub fn parse_algo_config(document: &str) -> Result<AlgoConfig> {
    let root = parse_json(document)?;
    let top = Obj::root(&root, "algorithm configuration")?;
    let algo = top.require_child("algorithm")?;

    match algo.opt_str("phase")? {
        Some(p) if p != "training" => {
            return Err(Error::InvalidEnum {
                field: "algorithm.phase".into(),
                value: format!("\"{p}\""),
                allowed: vec!["training".into()],
            })
        }
        _ => {}
    }
    let task = algo
        .enum_of("type", &TASKS)?
        .ok_or_else(|| Error::MissingField("algorithm.type".into()))?;
    let params = algo.require_child("parameters")?;

    let preprocessing = match params.child("preprocessing")? {
        Some(p) => PreprocessingFlags {
            standardization_feature: p.opt_bool("standardization_feature")?.unwrap_or(false),
            standardization_label: p.opt_bool("standardization_label")?.unwrap_or(false),
            scaling_feature: p.opt_bool("scaling_feature")?.unwrap_or(false),
            scaling_label: p.opt_bool("scaling_label")?.unwrap_or(false),
        },
        None => PreprocessingFlags::default(),
    };

    let mut imputation = ImputationConfig::default();
    if let Some(d) = params.child("data_inputation")? {
        if let Some(p) = d.opt_f64("perc_nan_to_drop")? {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::field(
                    "algorithm.parameters.data_inputation.perc_nan_to_drop",
                    format!("{p} is outside [0, 1]"),
                ));
            }
            imputation.perc_nan_to_drop = p;
        }
        if let Some(c) = d.enum_of("categorical", &CATEGORICAL_IMPUTE)? {
            imputation.categorical = c;
        }
        if let Some(n) = d.enum_of("not_categorical", &NUMERIC_IMPUTE)? {
            imputation.not_categorical = n;
        }
    }

    let candidates: Vec<&String> = params
        .map
        .keys()
        .filter(|k| !k.starts_with("_comment") && !RESERVED_PARAM_KEYS.contains(&k.as_str()))
        .collect();
    let algo_key = match candidates.as_slice() {
        [one] => (*one).clone(),
        [] => {
            return Err(Error::field(
                "algorithm.parameters",
                "no algorithm block found (expected exactly one algorithm key)",
            ))
        }
        many => {
            return Err(Error::field(
                "algorithm.parameters",
                format!(
                    "ambiguous algorithm: several candidate keys {}",
                    many.iter()
                        .map(|k| format!("\"{k}\""))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            ))
        }
    };
    let algorithm = Family::from_name(&algo_key).ok_or_else(|| Error::InvalidEnum {
        field: "algorithm.parameters".into(),
        value: format!("\"{algo_key}\""),
        allowed: Family::ALL.iter().map(|f| f.name().to_string()).collect(),
    })?;
    let algorithm_params = match params.get(&algo_key) {
        Some(Value::Object(m)) => m
            .iter()
            .filter(|(k, _)| !k.starts_with("_comment"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect(),
        Some(Value::Null) => Map::new(),
        _ => {
            return Err(Error::field(
                format!("algorithm.parameters.{algo_key}"),
                "expected an object of parameters",
            ))
        }
    };
    for (k, v) in &algorithm_params {
        let ok = match v {
            Value::Array(items) => {
                !items.is_empty() && items.iter().all(|i| !matches!(i, Value::Object(_)))
            }
            Value::Object(_) => false,
            _ => true,
        };
        if !ok {
            return Err(Error::field(
                format!("algorithm.parameters.{algo_key}.{k}"),
                "expected a scalar or a non-empty list of scalars",
            ));
        }
    }

    let rfe = match params.child("rfe")? {
        Some(r) => {
            let enabled = r.opt_bool("enabled")?.unwrap_or(false);
            let n = r.opt_u64("n_features_to_select")?;
            if enabled && n.is_none() {
                return Err(Error::MissingField(
                    "algorithm.parameters.rfe.n_features_to_select".into(),
                ));
            }
            if n == Some(0) {
                return Err(Error::field(
                    "algorithm.parameters.rfe.n_features_to_select",
                    "must be a positive integer",
                ));
            }
            RfeSettings {
                enabled,
                n_features_to_select: n.unwrap_or(1) as usize,
            }
        }
        None => RfeSettings::default(),
    };
    let smote = match params.child("smote")? {
        Some(s) => {
            let k = s.opt_u64("k_neighbors")?.unwrap_or(5);
            if k == 0 {
                return Err(Error::field(
                    "algorithm.parameters.smote.k_neighbors",
                    "must be a positive integer",
                ));
            }
            SmoteSettings {
                enabled: s.opt_bool("enabled")?.unwrap_or(false),
                k_neighbors: k as usize,
            }
        }
        None => SmoteSettings::default(),
    };
    let shap = match params.child("shap")? {
        Some(s) => ShapSettings {
            enabled: s.opt_bool("enabled")?.unwrap_or(false),
            mode: s.enum_of("mode", &SHAP_MODES)?.unwrap_or(ShapMode::Auto),
        },
        None => ShapSettings::default(),
    };
    let cv_folds = params.opt_u64("cv_folds")?.unwrap_or(5);
    if cv_folds < 2 {
        return Err(Error::field(
            "algorithm.parameters.cv_folds",
            "must be an integer >= 2",
        ));
    }

    let ac = AlgoConfig {
        config_name: algo.opt_str("config_name")?.unwrap_or_default(),
        description: algo.str("description")?,
        task,
        preprocessing,
        imputation,
        algorithm,
        algorithm_params,
        rfe,
        smote,
        shap,
        cv_folds: cv_folds as usize,
    };
    ac.check()?;
    Ok(ac)
}

impl AlgoConfig {
    fn check(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.description.trim().is_empty() {
            problems.push("algorithm.description must not be empty".to_string());
        }
        if !self.algorithm.supports(self.task) {
            problems.push(format!(
                "algorithm {} does not support task {} (supported: {})",
                self.algorithm.name(),
                self.task.name(),
                self.algorithm
                    .tasks()
                    .iter()
                    .map(|t| t.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        let p = &self.preprocessing;
        if p.standardization_feature && p.scaling_feature {
            problems.push("standardization_feature and scaling_feature are both enabled".into());
        }
        if p.standardization_label && p.scaling_label {
            problems.push("standardization_label and scaling_label are both enabled".into());
        }
        if self.rfe.enabled && !self.algorithm.has_feature_weights() {
            problems.push(format!(
                "rfe requires feature weights, which {} does not expose",
                self.algorithm.name()
            ));
        }
        if self.smote.enabled && self.task != Task::Classification {
            problems.push("smote is only available for classification".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Parameters declared with a single value.
    pub fn fixed_params(&self) -> Map<String, Value> {
        self.algorithm_params
            .iter()
            .filter(|(_, v)| !v.is_array())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// Grid-search axes in declaration order: every parameter given as a list.
    pub fn grid_axes(&self) -> Vec<(String, Vec<Value>)> {
        self.algorithm_params
            .iter()
            .filter_map(|(k, v)| v.as_array().map(|a| (k.clone(), a.clone())))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let mut parameters = Map::new();
        let p = &self.preprocessing;
        parameters.insert(
            "preprocessing".into(),
            json!({
                "standardization_feature": p.standardization_feature,
                "standardization_label": p.standardization_label,
                "scaling_feature": p.scaling_feature,
                "scaling_label": p.scaling_label,
            }),
        );
        let i = &self.imputation;
        parameters.insert(
            "data_inputation".into(),
            json!({
                "perc_nan_to_drop": i.perc_nan_to_drop,
                "categorical": name_of(&CATEGORICAL_IMPUTE, i.categorical),
                "not_categorical": name_of(&NUMERIC_IMPUTE, i.not_categorical),
            }),
        );
        parameters.insert(
            self.algorithm.name().into(),
            Value::Object(self.algorithm_params.clone()),
        );
        parameters.insert(
            "rfe".into(),
            json!({
                "enabled": self.rfe.enabled,
                "n_features_to_select": self.rfe.n_features_to_select,
            }),
        );
        parameters.insert(
            "smote".into(),
            json!({ "enabled": self.smote.enabled, "k_neighbors": self.smote.k_neighbors }),
        );
        parameters.insert(
            "shap".into(),
            json!({ "enabled": self.shap.enabled, "mode": name_of(&SHAP_MODES, self.shap.mode) }),
        );
        parameters.insert("cv_folds".into(), json!(self.cv_folds));
        json!({
            "algorithm": {
                "phase": "training",
                "config_name": self.config_name,
                "description": self.description,
                "type": self.task.name(),
                "parameters": parameters,
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Pre-trained reuse configuration
// ---------------------------------------------------------------------------

pub fn parse_predict_config(document: &str) -> Result<PredictConfig> {
    let root = parse_json(document)?;
    let top = Obj::root(&root, "predict configuration")?;
    let services = top.child("services")?;
    let runtime = top.child("runtime")?;
    let dataset = top.child("dataset")?;

    let description = top.str("description")?;
    if description.trim().is_empty() {
        return Err(Error::field("description", "must not be empty"));
    }
    let opt = |o: &Option<Obj<'_>>, key: &str| -> Result<Option<String>> {
        match o {
            Some(o) => o.opt_str(key),
            None => Ok(None),
        }
    };
    Ok(PredictConfig {
        log_prefix: opt(&services, "log_prefix")?.unwrap_or_else(|| "log".into()),
        run_id: match &runtime {
            Some(r) => r.opt_u64("run_id")?.unwrap_or(0),
            None => 0,
        },
        dataset_name: opt(&dataset, "name")?.unwrap_or_default(),
        dataset_type: opt(&dataset, "type")?.unwrap_or_else(|| "point-in-time".into()),
        dataset_format: opt(&dataset, "format")?.unwrap_or_else(|| "csv".into()),
        description,
    })
}

impl PredictConfig {
    pub fn to_json(&self) -> Value {
        json!({
            "services": { "log_prefix": self.log_prefix },
            "runtime": { "run_id": self.run_id },
            "dataset": {
                "name": self.dataset_name,
                "type": self.dataset_type,
                "format": self.dataset_format,
            },
            "description": self.description,
        })
    }
}

// ---------------------------------------------------------------------------
// Cross validation of the pair
// ---------------------------------------------------------------------------

/// Checks a data configuration against an algorithm configuration and reports
/// every violation at once.
pub fn validate_cross(dc: &DataConfig, ac: &AlgoConfig) -> Result<CrossCheck> {
    let mut problems = Vec::new();
    let supervised = ac.task != Task::Clustering;
    if supervised && dc.labels.is_empty() {
        problems.push(format!(
            "task {} requires at least one label column",
            ac.task.name()
        ));
    }
    if supervised && dc.labels.len() > 1 {
        problems.push(format!(
            "task {} trains a single target but {} labels were declared",
            ac.task.name(),
            dc.labels.len()
        ));
    }
    if ac.rfe.enabled && ac.rfe.n_features_to_select == 0 {
        problems.push("rfe.n_features_to_select must be positive".into());
    }
    if problems.is_empty() {
        Ok(CrossCheck {
            external_cluster_metrics: !supervised && !dc.labels.is_empty(),
        })
    } else {
        Err(Error::Validation(problems))
    }
}
