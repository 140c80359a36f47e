mod common;

use proptest::prelude::*;
use riskpipe::config::{
    parse_algo_config, parse_data_config, parse_predict_config, DataConfig, DataPhase, DatasetFormat, DatasetType,
    SplitType,
};
use riskpipe::learners::{Family, Task};
use riskpipe::matrix::Matrix;
use riskpipe::metrics::{adjusted_mutual_info, adjusted_rand_index, regression_metrics, v_measure};
use riskpipe::rng::seeded_permutation;
use riskpipe::tabular::{split_dataset, Cell, ColumnKind, ColumnRole, ColumnSchema, TabularDataset};
use serde_json::json;

fn name() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9_]{0,8}"
}

prop_compose! {
    fn data_config()(
        log_prefix in name(),
        run_id in any::<u32>(),
        dataset_name in name(),
        xlsx in any::<bool>(),
        patient_id in name(),
        labels in prop::collection::vec(name(), 0..3),
        drop in prop::collection::vec(name(), 0..3),
        categorical in prop::collection::vec(name(), 0..3),
        split in prop::option::of(1u32..100),
        sequential in any::<bool>(),
        seed in any::<u64>(),
    ) -> DataConfig {
        let labels: Vec<String> = labels.into_iter().filter(|l| *l != patient_id).collect();
        let drop = drop.into_iter().filter(|d| !labels.contains(d)).collect();
        DataConfig {
            log_prefix,
            run_id: run_id as u64,
            dataset_name,
            dataset_type: DatasetType::PointInTime,
            dataset_format: if xlsx { DatasetFormat::Xlsx } else { DatasetFormat::Csv },
            group: labels.first().cloned().unwrap_or_default(),
            patient_id,
            labels,
            time: String::new(),
            features2drop: drop,
            phase: if split.is_some() { DataPhase::TrainingPredict } else { DataPhase::Training },
            categorical_features: categorical,
            split_percentage: split,
            split_type: if sequential { SplitType::Sequential } else { SplitType::Random },
            seed,
        }
    }
}

proptest! {
    #[test]
    fn data_config_round_trips(dc in data_config()) {
        let back = parse_data_config(&dc.to_json().to_string()).unwrap();
        prop_assert_eq!(back, dc);
    }

    #[test]
    fn config_parsers_are_total(doc in ".{0,200}") {
        let _ = parse_data_config(&doc);
        let _ = parse_algo_config(&doc);
        let _ = parse_predict_config(&doc);
    }

    #[test]
    fn config_parsers_are_total_on_json_like_input(
        keys in prop::collection::vec(prop::sample::select(vec![
            "\"algorithm\"", "\"parameters\"", "\"type\"", "\"labels\"", "\"phase\"", "\"services\"",
            "{", "}", "[", "]", ":", ",", "1", "\"x\"", "null", "true", "-0.5e3",
        ]), 0..40)
    ) {
        let doc = keys.join("");
        let _ = parse_data_config(&doc);
        let _ = parse_algo_config(&doc);
        let _ = parse_predict_config(&doc);
    }

    #[test]
    fn algo_config_echo_reparses(
        family in prop::sample::select(Family::ALL.to_vec()),
        folds in 2u64..10,
        k in 1u64..8,
        feature_prep in 0u8..3,
        label_prep in 0u8..3,
    ) {
        let task = family.tasks()[0];
        let params = common::quick_params(family);
        let doc = json!({"algorithm": {"description": "d", "type": task.name(), "parameters": {
            "preprocessing": {
                "standardization_feature": feature_prep == 1,
                "standardization_label": label_prep == 1,
                "scaling_feature": feature_prep == 2,
                "scaling_label": label_prep == 2,
            },
            "smote": {"enabled": task == Task::Classification, "k_neighbors": k},
            "cv_folds": folds,
            family.name(): params,
        }}});
        let ac = parse_algo_config(&doc.to_string()).unwrap();
        let again = parse_algo_config(&ac.to_json().to_string()).unwrap();
        prop_assert_eq!(again, ac);
    }

    #[test]
    fn external_indices_are_symmetric(
        pairs in prop::collection::vec((0i64..4, 0i64..4), 2..25)
    ) {
        let (a, b): (Vec<i64>, Vec<i64>) = pairs.into_iter().unzip();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
        prop_assert!(close(adjusted_rand_index(&a, &b).unwrap(), adjusted_rand_index(&b, &a).unwrap()));
        prop_assert!(close(adjusted_mutual_info(&a, &b).unwrap(), adjusted_mutual_info(&b, &a).unwrap()));
        prop_assert!(close(v_measure(&a, &b).unwrap().2, v_measure(&b, &a).unwrap().2));
    }

    #[test]
    fn rmse_squared_is_mse(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..30)) {
        let (t, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = regression_metrics(&t, &p).unwrap();
        let (mse, rmse) = (m.get("mse").unwrap(), m.get("rmse").unwrap());
        prop_assert!((rmse * rmse - mse).abs() <= 1e-12 * mse.max(1.0));
    }

    #[test]
    fn seeded_permutations_are_permutations(n in 0usize..200, seed in any::<u64>()) {
        let mut p = seeded_permutation(n, seed);
        prop_assert_eq!(&p, &seeded_permutation(n, seed));
        p.sort_unstable();
        prop_assert_eq!(p, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn splits_partition_rows(
        classes in prop::collection::vec(0usize..3, 4..60),
        pct in 10u32..90,
        stratified in any::<bool>(),
        sequential in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let n = classes.len();
        let n_train = n * pct as usize / 100;
        prop_assume!(n_train > 0 && n_train < n);
        let ds = TabularDataset {
            schemas: vec![
                ColumnSchema { name: "y".into(), kind: ColumnKind::Numeric, role: ColumnRole::Label, categories: vec![] },
                ColumnSchema { name: "x".into(), kind: ColumnKind::Numeric, role: ColumnRole::Feature, categories: vec![] },
            ],
            values: classes.iter().enumerate().map(|(i, &c)| vec![Cell::Num(c as f64), Cell::Num(i as f64)]).collect(),
            ids: vec![String::new(); n],
            train_rows: (0..n).collect(),
            test_rows: vec![],
        };
        let mut dc = parse_data_config(&common::data_config_json(&common::DataSpec {
            labels: &["y"],
            group: if stratified { "y" } else { "" },
            drop: &[],
            categorical: &[],
            split: Some(pct),
            seed,
        }).to_string()).unwrap();
        dc.split_type = if sequential { SplitType::Sequential } else { SplitType::Random };
        let split = split_dataset(ds, &dc).unwrap();
        prop_assert_eq!(split.train_rows.len(), n_train);
        let mut all: Vec<usize> = split.train_rows.iter().chain(&split.test_rows).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        if sequential {
            prop_assert_eq!(split.train_rows, (0..n_train).collect::<Vec<_>>());
        }
    }

    #[test]
    fn matrix_selection_composes(rows in 1usize..8, cols in 1usize..8, seed in any::<u64>()) {
        let m = Matrix::from_vec(rows, cols, (0..rows * cols).map(|v| v as f64).collect()).unwrap();
        let r = seeded_permutation(rows, seed);
        let c = seeded_permutation(cols, seed ^ 1);
        let a = m.select_rows(&r).select_cols(&c);
        let b = m.select_cols(&c).select_rows(&r);
        prop_assert_eq!(a, b);
    }
}
