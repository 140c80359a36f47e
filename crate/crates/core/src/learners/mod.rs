//! The ten algorithm families behind one contract: fit, predict, optional
//! class probabilities and optional feature weights.
//!
//! | family           | classification | regression | clustering |
//! |------------------|:--------------:|:----------:|:----------:|
//! | SGDClassifier    | x              |            |            |
//! | ElasticNet       |                | x          |            |
//! | GradientBoosting | x              | x          |            |
//! | RandomForest     | x              | x          |            |
//! | MLP              | x              | x          |            |
//! | SVM              | x              | x          |            |
//! | KNN              | x              | x          |            |
//! | KMeans           |                |            | x          |
//! | AggClustering    |                |            | x          |
//! | DBSCAN           |                |            | x          |
//!
//! Classification models map the sorted distinct target values to class
//! indices internally and report predictions in the original values.
//! Binary linear and boosted models keep one score (positive = larger class
//! value); multiclass ones train one-vs-rest.

pub mod cluster;
pub mod linear;
pub mod mlp;
pub mod neighbors;
pub(crate) mod params;
pub mod tree;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};
use cluster::{agglomerative_fit, dbscan_fit, kmeans_fit, nearest_centroid, KMeansOptions, Linkage};
use linear::{elastic_net_fit, sgd_linear_fit, sigmoid, softmax, LinearLoss, LinearModel, SgdOptions};
use mlp::{mlp_fit, Activation, MlpOptions, Network};
use neighbors::{nearest, NeighborStore};
use params::{hidden_layers, opt_json, ParamReader};
use tree::{
    argmax, gradient_boosting_fit, normalized, random_forest_fit, BoostLoss, BoostOptions, Boosted,
    Criterion, Forest, ForestOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
    Clustering,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
            Task::Clustering => "clustering",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "SGDClassifier")]
    SgdClassifier,
    ElasticNet,
    GradientBoosting,
    RandomForest,
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "KNN")]
    Knn,
    KMeans,
    AggClustering,
    #[serde(rename = "DBSCAN")]
    Dbscan,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::SgdClassifier,
        Family::ElasticNet,
        Family::GradientBoosting,
        Family::RandomForest,
        Family::Mlp,
        Family::Svm,
        Family::Knn,
        Family::KMeans,
        Family::AggClustering,
        Family::Dbscan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::SgdClassifier => "SGDClassifier",
            Family::ElasticNet => "ElasticNet",
            Family::GradientBoosting => "GradientBoosting",
            Family::RandomForest => "RandomForest",
            Family::Mlp => "MLP",
            Family::Svm => "SVM",
            Family::Knn => "KNN",
            Family::KMeans => "KMeans",
            Family::AggClustering => "AggClustering",
            Family::Dbscan => "DBSCAN",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn tasks(self) -> &'static [Task] {
        use Task::*;
        match self {
            Family::SgdClassifier => &[Classification],
            Family::ElasticNet => &[Regression],
            Family::GradientBoosting
            | Family::RandomForest
            | Family::Mlp
            | Family::Svm
            | Family::Knn => &[Classification, Regression],
            Family::KMeans | Family::AggClustering | Family::Dbscan => &[Clustering],
        }
    }

    pub fn supports(self, task: Task) -> bool {
        self.tasks().contains(&task)
    }

    /// Whether fitted models expose [`FittedModel::feature_weights`].
    pub fn has_feature_weights(self) -> bool {
        matches!(
            self,
            Family::SgdClassifier
                | Family::ElasticNet
                | Family::Svm
                | Family::GradientBoosting
                | Family::RandomForest
        )
    }
}

/// What to fit: family, task, raw parameters (defaults fill the gaps) and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub task: Task,
    pub params: Map<String, Value>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MaxFeatures {
    Sqrt,
    Third,
    All,
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Hyper {
    Sgd {
        loss: LinearLoss,
        l2: f64,
        epochs: usize,
        eta0: f64,
    },
    Svm {
        c: f64,
        epochs: usize,
        eta0: f64,
        epsilon: f64,
    },
    ElasticNet {
        alpha: f64,
        l1_ratio: f64,
        max_iter: usize,
        tol: f64,
    },
    Boosting {
        n_estimators: usize,
        learning_rate: f64,
        max_depth: usize,
    },
    Forest {
        n_estimators: usize,
        max_depth: Option<usize>,
        max_features: MaxFeatures,
        bootstrap: bool,
    },
    Mlp {
        hidden: Vec<usize>,
        activation: Activation,
        lr: f64,
        epochs: usize,
        batch: usize,
    },
    Knn {
        k: usize,
    },
    KMeans {
        n_clusters: usize,
        n_init: usize,
        max_iter: usize,
        tol: f64,
    },
    Agg {
        n_clusters: usize,
        linkage: Linkage,
    },
    Dbscan {
        eps: f64,
        min_samples: usize,
    },
}

const ACTIVATIONS: [(&str, Activation); 4] = [
    ("relu", Activation::Relu),
    ("tanh", Activation::Tanh),
    ("logistic", Activation::Logistic),
    ("identity", Activation::Identity),
];
const LINKAGES: [(&str, Linkage); 3] = [
    ("average", Linkage::Average),
    ("single", Linkage::Single),
    ("complete", Linkage::Complete),
];

impl ModelSpec {
    pub fn new(family: Family, task: Task) -> Self {
        ModelSpec {
            family,
            task,
            params: Map::new(),
            seed: 0,
        }
    }

    pub fn with_param(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn resolve(&self) -> Result<Hyper> {
        let f = self.family;
        let p = &self.params;
        Ok(match f {
            Family::SgdClassifier => {
                let r = ParamReader::new(f, p, &["loss", "l2", "epochs", "eta0"])?;
                Hyper::Sgd {
                    loss: r.choice(
                        "loss",
                        LinearLoss::Log,
                        &[("log", LinearLoss::Log), ("hinge", LinearLoss::Hinge)],
                    )?,
                    l2: r.non_negative_f64("l2", 1e-4)?,
                    epochs: r.usize("epochs", 100)?,
                    eta0: r.positive_f64("eta0", 0.1)?,
                }
            }
            Family::Svm => {
                let r = ParamReader::new(f, p, &["C", "epochs", "eta0", "epsilon"])?;
                Hyper::Svm {
                    c: r.positive_f64("C", 1.0)?,
                    epochs: r.usize("epochs", 200)?,
                    eta0: r.positive_f64("eta0", 0.1)?,
                    epsilon: r.non_negative_f64("epsilon", 0.1)?,
                }
            }
            Family::ElasticNet => {
                let r = ParamReader::new(f, p, &["alpha", "l1_ratio", "max_iter", "tol"])?;
                let l1_ratio = r.f64("l1_ratio", 0.5)?;
                if !(0.0..=1.0).contains(&l1_ratio) {
                    return Err(Error::field("ElasticNet.l1_ratio", "must lie in [0, 1]"));
                }
                Hyper::ElasticNet {
                    alpha: r.non_negative_f64("alpha", 1.0)?,
                    l1_ratio,
                    max_iter: r.usize("max_iter", 1000)?,
                    tol: r.positive_f64("tol", 1e-6)?,
                }
            }
            Family::GradientBoosting => {
                let r = ParamReader::new(f, p, &["n_estimators", "learning_rate", "max_depth"])?;
                Hyper::Boosting {
                    n_estimators: r.usize("n_estimators", 100)?,
                    learning_rate: r.non_negative_f64("learning_rate", 0.1)?,
                    max_depth: r.usize("max_depth", 3)?,
                }
            }
            Family::RandomForest => {
                let r = ParamReader::new(
                    f,
                    p,
                    &["n_estimators", "max_depth", "max_features", "bootstrap"],
                )?;
                let max_features = match r.raw("max_features") {
                    None => match self.task {
                        Task::Regression => MaxFeatures::Third,
                        _ => MaxFeatures::Sqrt,
                    },
                    Some(Value::String(_)) => r.choice(
                        "max_features",
                        MaxFeatures::Sqrt,
                        &[
                            ("sqrt", MaxFeatures::Sqrt),
                            ("third", MaxFeatures::Third),
                            ("all", MaxFeatures::All),
                        ],
                    )?,
                    Some(_) => match r.usize("max_features", 1)? {
                        0 => return Err(Error::field("RandomForest.max_features", "must be positive")),
                        n => MaxFeatures::Count(n),
                    },
                };
                let n_estimators = r.usize("n_estimators", 100)?;
                if n_estimators == 0 {
                    return Err(Error::field("RandomForest.n_estimators", "must be positive"));
                }
                Hyper::Forest {
                    n_estimators,
                    max_depth: r.opt_usize("max_depth")?,
                    max_features,
                    bootstrap: r.bool("bootstrap", true)?,
                }
            }
            Family::Mlp => {
                let r = ParamReader::new(f, p, &["hidden", "activation", "lr", "epochs", "batch"])?;
                let batch = r.usize("batch", 32)?;
                if batch == 0 {
                    return Err(Error::field("MLP.batch", "must be positive"));
                }
                Hyper::Mlp {
                    hidden: hidden_layers(&r, &[64])?,
                    activation: r.choice("activation", Activation::Relu, &ACTIVATIONS)?,
                    lr: r.positive_f64("lr", 1e-3)?,
                    epochs: r.usize("epochs", 200)?,
                    batch,
                }
            }
            Family::Knn => {
                let r = ParamReader::new(f, p, &["k"])?;
                let k = r.usize("k", 5)?;
                if k == 0 {
                    return Err(Error::field("KNN.k", "must be positive"));
                }
                Hyper::Knn { k }
            }
            Family::KMeans => {
                let r = ParamReader::new(f, p, &["n_clusters", "n_init", "max_iter", "tol"])?;
                Hyper::KMeans {
                    n_clusters: r.required_usize("n_clusters")?,
                    n_init: r.usize("n_init", 10)?.max(1),
                    max_iter: r.usize("max_iter", 300)?,
                    tol: r.non_negative_f64("tol", 1e-6)?,
                }
            }
            Family::AggClustering => {
                let r = ParamReader::new(f, p, &["n_clusters", "linkage"])?;
                Hyper::Agg {
                    n_clusters: r.required_usize("n_clusters")?,
                    linkage: r.choice("linkage", Linkage::Average, &LINKAGES)?,
                }
            }
            Family::Dbscan => {
                let r = ParamReader::new(f, p, &["eps", "min_samples"])?;
                let eps = r.required_f64("eps")?;
                if eps <= 0.0 {
                    return Err(Error::field("DBSCAN.eps", "must be positive"));
                }
                Hyper::Dbscan {
                    eps,
                    min_samples: r.usize("min_samples", 5)?.max(1),
                }
            }
        })
    }

    /// Every parameter of the family with defaults filled in.
    pub fn resolved_params(&self) -> Result<Map<String, Value>> {
        fn name_in<T: PartialEq + Copy>(table: &[(&'static str, T)], v: T) -> &'static str {
            table.iter().find(|(_, x)| *x == v).map(|(n, _)| *n).unwrap()
        }
        let v = match self.resolve()? {
            Hyper::Sgd { loss, l2, epochs, eta0 } => json!({
                "loss": if loss == LinearLoss::Log { "log" } else { "hinge" },
                "l2": l2, "epochs": epochs, "eta0": eta0,
                "learning_rate": "eta0 / (1 + eta0 * l2 * t)",
            }),
            Hyper::Svm { c, epochs, eta0, epsilon } => json!({
                "C": c, "epochs": epochs, "eta0": eta0, "epsilon": epsilon,
                "kernel": "linear",
            }),
            Hyper::ElasticNet { alpha, l1_ratio, max_iter, tol } => json!({
                "alpha": alpha, "l1_ratio": l1_ratio, "max_iter": max_iter, "tol": tol,
            }),
            Hyper::Boosting { n_estimators, learning_rate, max_depth } => json!({
                "n_estimators": n_estimators, "learning_rate": learning_rate, "max_depth": max_depth,
            }),
            Hyper::Forest { n_estimators, max_depth, max_features, bootstrap } => json!({
                "n_estimators": n_estimators,
                "max_depth": opt_json(max_depth),
                "max_features": match max_features {
                    MaxFeatures::Sqrt => json!("sqrt"),
                    MaxFeatures::Third => json!("third"),
                    MaxFeatures::All => json!("all"),
                    MaxFeatures::Count(n) => json!(n),
                },
                "bootstrap": bootstrap,
            }),
            Hyper::Mlp { hidden, activation, lr, epochs, batch } => json!({
                "hidden": hidden, "activation": name_in(&ACTIVATIONS, activation),
                "lr": lr, "epochs": epochs, "batch": batch, "optimizer": "sgd",
            }),
            Hyper::Knn { k } => json!({ "k": k }),
            Hyper::KMeans { n_clusters, n_init, max_iter, tol } => json!({
                "n_clusters": n_clusters, "n_init": n_init, "max_iter": max_iter, "tol": tol,
                "init": "k-means++",
            }),
            Hyper::Agg { n_clusters, linkage } => json!({
                "n_clusters": n_clusters, "linkage": name_in(&LINKAGES, linkage),
            }),
            Hyper::Dbscan { eps, min_samples } => json!({ "eps": eps, "min_samples": min_samples }),
        };
        Ok(match v {
            Value::Object(m) => m,
            _ => unreachable!(),
        })
    }
}

/// Family-specific learned parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    Linear(LinearModel),
    Forest(Forest),
    Boosting {
        outputs: Vec<Boosted>,
        importances: Vec<f64>,
    },
    Network(Network),
    Neighbors(NeighborStore),
    KMeans {
        centroids: Matrix,
        inertia: f64,
        labels: Vec<i64>,
    },
    Agglomerative {
        x: Matrix,
        labels: Vec<i64>,
    },
    Dbscan {
        x: Matrix,
        eps: f64,
        labels: Vec<i64>,
        core: Vec<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub n_features: usize,
    pub feature_order: Vec<String>,
    /// Sorted distinct target values (classification only).
    pub classes: Vec<f64>,
    pub learned: Learned,
}

fn class_index(classes: &[f64], v: f64) -> usize {
    classes.iter().position(|&c| c == v).expect("class value seen in training")
}

/// Trains the model described by `spec`. Targets are required for supervised
/// tasks and ignored for clustering.
pub fn fit(spec: &ModelSpec, x: &Matrix, y: Option<&[f64]>) -> Result<FittedModel> {
    if !spec.family.supports(spec.task) {
        return Err(Error::model(format!(
            "{} does not support {} (supported: {})",
            spec.family.name(),
            spec.task.name(),
            spec.family
                .tasks()
                .iter()
                .map(|t| t.name())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    if x.is_empty() || x.cols() == 0 {
        return Err(Error::model("cannot fit on an empty feature matrix"));
    }
    if !x.all_finite() {
        return Err(Error::model("feature matrix contains non-finite values"));
    }
    let hyper = spec.resolve()?;
    let n = x.rows();
    let p = x.cols();

    let (targets, classes): (Vec<f64>, Vec<f64>) = match spec.task {
        Task::Clustering => (Vec::new(), Vec::new()),
        _ => {
            let y = y.ok_or_else(|| Error::model("supervised fit requires targets"))?;
            if y.len() != n {
                return Err(Error::model(format!(
                    "{} targets for {n} rows",
                    y.len()
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::model("targets contain non-finite values"));
            }
            if spec.task == Task::Classification {
                let mut classes = y.to_vec();
                classes.sort_by(f64::total_cmp);
                classes.dedup();
                if classes.len() < 2 {
                    return Err(Error::model("classification needs at least two classes"));
                }
                let idx = y.iter().map(|&v| class_index(&classes, v) as f64).collect();
                (idx, classes)
            } else {
                (y.to_vec(), Vec::new())
            }
        }
    };
    let k = classes.len();
    let classify = spec.task == Task::Classification;

    // one-vs-rest targets: a single {0,1} column for binary problems
    let ovr = |positive: usize| -> Vec<f64> {
        targets.iter().map(|&t| if t as usize == positive { 1.0 } else { 0.0 }).collect()
    };
    let ovr_columns: Vec<Vec<f64>> = if k == 2 {
        vec![targets.clone()]
    } else {
        (0..k).map(ovr).collect()
    };

    let learned = match hyper {
        Hyper::Sgd { loss, l2, epochs, eta0 } => {
            let opts = |c: usize| SgdOptions {
                loss,
                l2,
                epochs,
                eta0,
                epsilon: 0.0,
                seed: crate::rng::derive_seed(spec.seed, &[c as u64]),
            };
            linear_ovr(x, &ovr_columns, loss, opts)?
        }
        Hyper::Svm { c, epochs, eta0, epsilon } => {
            let l2 = 1.0 / (c * n as f64);
            let loss = if classify {
                LinearLoss::Hinge
            } else {
                LinearLoss::EpsilonInsensitive
            };
            let opts = |col: usize| SgdOptions {
                loss,
                l2,
                epochs,
                eta0,
                epsilon,
                seed: crate::rng::derive_seed(spec.seed, &[col as u64]),
            };
            if classify {
                linear_ovr(x, &ovr_columns, loss, opts)?
            } else {
                linear_ovr(x, std::slice::from_ref(&targets), loss, opts)?
            }
        }
        Hyper::ElasticNet { alpha, l1_ratio, max_iter, tol } => {
            let fit = elastic_net_fit(x, &targets, alpha, l1_ratio, max_iter, tol)?;
            Learned::Linear(LinearModel {
                loss: LinearLoss::Squared,
                weights: Matrix::from_vec(1, p, fit.weights)?,
                intercepts: vec![fit.intercept],
            })
        }
        Hyper::Boosting { n_estimators, learning_rate, max_depth } => {
            let opts = BoostOptions {
                n_estimators,
                learning_rate,
                max_depth,
            };
            let columns: Vec<(BoostLoss, &[f64])> = if classify {
                ovr_columns.iter().map(|c| (BoostLoss::Log, c.as_slice())).collect()
            } else {
                vec![(BoostLoss::Squared, targets.as_slice())]
            };
            let mut outputs = Vec::with_capacity(columns.len());
            let mut importances = vec![0.0; p];
            for (loss, col) in columns {
                let (b, imp) = gradient_boosting_fit(x, col, loss, &opts)?;
                importances.iter_mut().zip(&imp).for_each(|(a, v)| *a += v);
                outputs.push(b);
            }
            Learned::Boosting {
                outputs,
                importances: normalized(importances),
            }
        }
        Hyper::Forest { n_estimators, max_depth, max_features, bootstrap } => {
            let m = match max_features {
                MaxFeatures::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
                MaxFeatures::Third => (p / 3).max(1),
                MaxFeatures::All => p,
                MaxFeatures::Count(c) => c.min(p),
            };
            let criterion = if classify {
                Criterion::Gini { n_classes: k }
            } else {
                Criterion::Variance
            };
            let opts = ForestOptions {
                n_estimators,
                max_depth,
                max_features: Some(m),
                bootstrap,
                seed: spec.seed,
            };
            Learned::Forest(random_forest_fit(x, &targets, criterion, &opts)?)
        }
        Hyper::Mlp { hidden, activation, lr, epochs, batch } => {
            let opts = MlpOptions {
                hidden,
                activation,
                lr,
                epochs,
                batch,
                seed: spec.seed,
            };
            Learned::Network(mlp_fit(x, &targets, classify.then_some(k), &opts)?)
        }
        Hyper::Knn { k: neighbours } => {
            if neighbours > n {
                log::warn!(target: "learners", "KNN k={neighbours} exceeds {n} training rows; using all rows");
            }
            Learned::Neighbors(NeighborStore {
                x: x.clone(),
                y: targets.clone(),
                k: neighbours,
                n_classes: classify.then_some(k),
            })
        }
        Hyper::KMeans { n_clusters, n_init, max_iter, tol } => {
            let fit = kmeans_fit(
                x,
                &KMeansOptions {
                    n_clusters,
                    n_init,
                    max_iter,
                    tol,
                    seed: spec.seed,
                },
            )?;
            Learned::KMeans {
                centroids: fit.centroids,
                inertia: fit.inertia,
                labels: fit.labels.iter().map(|&l| l as i64).collect(),
            }
        }
        Hyper::Agg { n_clusters, linkage } => Learned::Agglomerative {
            x: x.clone(),
            labels: agglomerative_fit(x, n_clusters, linkage)?
                .into_iter()
                .map(|l| l as i64)
                .collect(),
        },
        Hyper::Dbscan { eps, min_samples } => {
            let fit = dbscan_fit(x, eps, min_samples);
            Learned::Dbscan {
                x: x.clone(),
                eps,
                labels: fit.labels,
                core: fit.core,
            }
        }
    };
    Ok(FittedModel {
        spec: spec.clone(),
        n_features: p,
        feature_order: (0..p).map(|j| format!("x{j}")).collect(),
        classes,
        learned,
    })
}

fn linear_ovr(
    x: &Matrix,
    columns: &[Vec<f64>],
    loss: LinearLoss,
    opts: impl Fn(usize) -> SgdOptions,
) -> Result<Learned> {
    let mut weights = Matrix::zeros(0, x.cols());
    let mut intercepts = Vec::with_capacity(columns.len());
    for (c, col) in columns.iter().enumerate() {
        let (w, b) = sgd_linear_fit(x, col, &opts(c))?;
        weights.push_row(&w);
        intercepts.push(b);
    }
    Ok(Learned::Linear(LinearModel {
        loss,
        weights,
        intercepts,
    }))
}

impl FittedModel {
    pub fn task(&self) -> Task {
        self.spec.task
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    fn check_cols(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.n_features {
            return Err(Error::model(format!(
                "model expects {} feature columns, got {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok(())
    }

    /// Per-output raw scores for the linear and boosted classifiers.
    fn class_scores(&self, row: &[f64]) -> Option<Vec<f64>> {
        match &self.learned {
            Learned::Linear(m) => Some(m.scores(row)),
            Learned::Boosting { outputs, .. } => Some(outputs.iter().map(|b| b.score(row)).collect()),
            _ => None,
        }
    }

    fn class_index_row(&self, row: &[f64]) -> usize {
        match &self.learned {
            Learned::Forest(f) => f.predict_row(row) as usize,
            Learned::Network(net) => argmax(&net.forward(row)),
            Learned::Neighbors(s) => s.predict_row(row) as usize,
            _ => {
                let s = self.class_scores(row).expect("scored classifier");
                if s.len() == 1 {
                    usize::from(s[0] > 0.0)
                } else {
                    argmax(&s)
                }
            }
        }
    }

    /// Class values, real values, or cluster ids (`-1` for DBSCAN noise).
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_cols(x)?;
        Ok(x.iter_rows().map(|row| self.predict_row(row)).collect())
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self.spec.task {
            Task::Classification => self.classes[self.class_index_row(row)],
            Task::Regression => match &self.learned {
                Learned::Linear(m) => m.scores(row)[0],
                Learned::Boosting { outputs, .. } => outputs[0].score(row),
                Learned::Forest(f) => f.predict_row(row),
                Learned::Network(net) => net.forward(row)[0],
                Learned::Neighbors(s) => s.predict_row(row),
                _ => unreachable!("regression payload"),
            },
            Task::Clustering => match &self.learned {
                Learned::KMeans { centroids, .. } => nearest_centroid(centroids, row).0 as f64,
                Learned::Agglomerative { x, labels } => labels[nearest(x, row, 1)[0]] as f64,
                Learned::Dbscan { x, eps, labels, core } => {
                    let mut best: Option<(f64, usize)> = None;
                    for (i, r) in x.iter_rows().enumerate() {
                        if !core[i] {
                            continue;
                        }
                        let d = sq_dist(r, row);
                        if d <= eps * eps && best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, i));
                        }
                    }
                    best.map_or(-1.0, |(_, i)| labels[i] as f64)
                }
                _ => unreachable!("clustering payload"),
            },
        }
    }

    /// Per-class probabilities in `classes` order, or `None` for models
    /// without a probabilistic output (hinge-loss linear models).
    pub fn predict_proba(&self, x: &Matrix) -> Result<Option<Matrix>> {
        if self.spec.task != Task::Classification {
            return Err(Error::model(format!(
                "predict_proba is only defined for classification, not {}",
                self.spec.task.name()
            )));
        }
        self.check_cols(x)?;
        if let Learned::Linear(m) = &self.learned {
            if m.loss == LinearLoss::Hinge {
                return Ok(None);
            }
        }
        let k = self.classes.len();
        let mut out = Matrix::zeros(x.rows(), k);
        for (i, row) in x.iter_rows().enumerate() {
            let p = match &self.learned {
                Learned::Forest(f) => f.votes(row),
                Learned::Network(net) => net.forward(row),
                Learned::Neighbors(s) => s.votes(row),
                Learned::Linear(_) => {
                    let s = self.class_scores(row).unwrap();
                    if s.len() == 1 {
                        let q = sigmoid(s[0]);
                        vec![1.0 - q, q]
                    } else {
                        softmax(&s)
                    }
                }
                Learned::Boosting { .. } => {
                    let s = self.class_scores(row).unwrap();
                    if s.len() == 1 {
                        let q = sigmoid(s[0]);
                        vec![1.0 - q, q]
                    } else {
                        let sig: Vec<f64> = s.iter().map(|&v| sigmoid(v)).collect();
                        let total: f64 = sig.iter().sum();
                        sig.into_iter().map(|v| v / total).collect()
                    }
                }
                _ => unreachable!("classification payload"),
            };
            out.row_mut(i).copy_from_slice(&p);
        }
        Ok(Some(out))
    }

    /// Raw decision scores of hinge-loss classifiers: one column for binary
    /// problems, one per class otherwise.
    pub fn decision_function(&self, x: &Matrix) -> Result<Matrix> {
        self.check_cols(x)?;
        match (&self.learned, self.spec.task) {
            (Learned::Linear(m), Task::Classification) => {
                let rows: Vec<Vec<f64>> = x.iter_rows().map(|r| m.scores(r)).collect();
                Matrix::from_rows(&rows)
            }
            _ => Err(Error::model("decision_function is defined for linear classifiers only")),
        }
    }

    /// Non-negative importance per feature, or `None` for families without
    /// feature weights (MLP, KNN, clustering).
    pub fn feature_weights(&self) -> Option<Vec<f64>> {
        match &self.learned {
            Learned::Linear(m) => Some(m.importances()),
            Learned::Forest(f) => Some(f.importances.clone()),
            Learned::Boosting { importances, .. } => Some(importances.clone()),
            _ => None,
        }
    }

    /// Cluster assignment of each training row as produced by the fit.
    pub fn training_clusters(&self) -> Option<Vec<i64>> {
        match &self.learned {
            Learned::KMeans { labels, .. }
            | Learned::Agglomerative { labels, .. }
            | Learned::Dbscan { labels, .. } => Some(labels.clone()),
            _ => None,
        }
    }

    /// Model outputs explained by Shapley attribution: the predicted value
    /// for regression; for classification the positive-class probability
    /// (binary) or every class probability, falling back to decision scores
    /// for hinge-loss models.
    pub fn explained_outputs(&self, x: &Matrix) -> Result<(Vec<String>, Matrix)> {
        match self.spec.task {
            Task::Regression => Ok((vec!["prediction".into()], Matrix::column(&self.predict(x)?))),
            Task::Clustering => Err(Error::model("Shapley values are not defined for clustering")),
            Task::Classification => {
                let (prefix, m) = match self.predict_proba(x)? {
                    Some(p) => ("p", p),
                    None => ("score", self.decision_function(x)?),
                };
                let names: Vec<String> = if m.cols() == self.classes.len() && self.classes.len() == 2 {
                    vec![format!("{prefix}({})", fmt_class(self.classes[1]))]
                } else {
                    self.classes.iter().map(|c| format!("{prefix}({})", fmt_class(*c))).collect()
                };
                if m.cols() == 2 && names.len() == 1 {
                    Ok((names, m.select_cols(&[1])))
                } else {
                    Ok((names, m))
                }
            }
        }
    }

    /// Refuses payloads with non-finite numbers, which cannot be persisted.
    pub(crate) fn ensure_finite(&self) -> Result<()> {
        let v = serde_json::to_value(&self.learned).map_err(|e| Error::model(e.to_string()))?;
        fn has_null(v: &Value) -> bool {
            match v {
                Value::Null => true,
                Value::Array(a) => a.iter().any(has_null),
                Value::Object(o) => o.values().any(has_null),
                _ => false,
            }
        }
        if has_null(&v) {
            return Err(Error::model("fitted parameters contain non-finite values"));
        }
        Ok(())
    }
}

pub(crate) fn fmt_class(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
