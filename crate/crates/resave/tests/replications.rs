use std::path::Path;

use resave::core::models::Model;
use resave::harness::{run_replications, run_timing, Estimator, ExperimentConfig, StandardizeMode};
use resave::ingestion::{
    holdout_eval, load_csv, reference_direction, ColumnSelector, HoldoutOptions, HoldoutStandardize,
};

#[test]
fn model_one_batch_table_value() {
    let r = run_replications(Model::One, 100, 400, 200, Estimator::SaveNr, 7, &ExperimentConfig::default()).unwrap();
    assert!(r.r2.mean >= 0.99, "{}", r.r2.mean);
}

#[test]
fn model_two_recursive_table_value() {
    let r = run_replications(Model::Two, 100, 400, 200, Estimator::SaveR, 7, &ExperimentConfig::default()).unwrap();
    assert!(r.r2.mean >= 0.99, "{}", r.r2.mean);
    assert!(r.records.iter().all(|x| (0.0..=1.0).contains(&x.r2)));
}

#[test]
fn sample_standardization_still_recovers_direction() {
    let config = ExperimentConfig { standardize: StandardizeMode::Sample, ..ExperimentConfig::default() };
    let r = run_replications(Model::One, 100, 400, 40, Estimator::SaveNr, 3, &config).unwrap();
    assert!(r.r2.mean > 0.95, "{}", r.r2.mean);
}

#[test]
fn aggregation_is_order_independent() {
    let r = run_replications(Model::Two, 80, 40, 30, Estimator::SaveR, 5, &ExperimentConfig::default()).unwrap();
    let mut values = r.r2_values();
    values.reverse();
    let reversed = resave::harness::Summary::of(&values);
    assert!((reversed.mean - r.r2.mean).abs() < 1e-12);
    assert!((reversed.std - r.r2.std).abs() < 1e-12);
}

#[test]
fn recursive_updates_beat_refits_at_one_hundred_points() {
    let rows = run_timing(Model::One, 100, &[100], 2, 1, &ExperimentConfig::default()).unwrap();
    assert!(rows[0].save_r.mean < rows[0].save_nr.mean, "{:?}", rows[0]);
}

fn fixture() -> resave::ingestion::Dataset {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/diabetes_like.csv");
    let predictors = ColumnSelector::parse_list("BMI,Pregnancies,DPF,Age,Insulin,BP");
    let report = load_csv(path, &ColumnSelector::parse("Glucose"), &predictors).unwrap();
    assert_eq!(report.rejected.len(), 7);
    report.dataset
}

#[test]
fn fixture_loads_with_named_columns() {
    let data = fixture();
    assert_eq!(data.len(), 1993);
    assert_eq!(data.response_name(), "Glucose");
    assert_eq!(data.predictor_names(), vec!["BMI", "Pregnancies", "DPF", "Age", "Insulin", "BP"]);
}

#[test]
fn holdout_is_deterministic_and_uses_remaining_rows() {
    let data = fixture();
    let options = HoldoutOptions { shuffle_seed: Some(4), ..HoldoutOptions::default() };
    let a = holdout_eval(&data, 100, 400, Estimator::SaveR, &options).unwrap();
    let b = holdout_eval(&data, 100, 400, Estimator::SaveR, &options).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.r2.count + a.skipped, data.len() - 500);
    assert!((0.0..=1.0).contains(&a.r2.mean));
}

#[test]
fn holdout_against_itself_is_perfect() {
    let data = fixture();
    let first = holdout_eval(&data, 100, 400, Estimator::SaveNr, &HoldoutOptions::default()).unwrap();
    let options = HoldoutOptions { reference: Some(first.beta_hat.clone()), ..HoldoutOptions::default() };
    let again = holdout_eval(&data, 100, 400, Estimator::SaveNr, &options).unwrap();
    assert!((again.r2.mean - 1.0).abs() < 1e-12);
    assert_eq!(again.r2.std, 0.0);
}

#[test]
fn holdout_options_change_the_fit() {
    let data = fixture();
    let training = holdout_eval(&data, 100, 400, Estimator::SaveR, &HoldoutOptions::default()).unwrap();
    let initial = HoldoutOptions { standardize: HoldoutStandardize::Initial, ..HoldoutOptions::default() };
    let initial = holdout_eval(&data, 100, 400, Estimator::SaveR, &initial).unwrap();
    assert_ne!(training.beta_hat, initial.beta_hat);
    assert_eq!(training.reference, initial.reference);
    assert_eq!(training.reference, reference_direction(&data, &ExperimentConfig::default()).unwrap());
}

#[test]
fn holdout_needs_rows_to_evaluate() {
    let data = fixture();
    assert!(holdout_eval(&data, 1000, 993, Estimator::SaveR, &HoldoutOptions::default()).is_err());
    let bad = HoldoutOptions { reference: Some(vec![1.0, 0.0]), ..HoldoutOptions::default() };
    assert!(holdout_eval(&data, 100, 100, Estimator::SaveR, &bad).is_err());
}
