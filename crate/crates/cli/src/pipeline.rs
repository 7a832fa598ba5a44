//! Load, split, tune, fit and evaluate every configured model.

use std::path::Path;
use std::time::Instant;

use iotids_core::data::{load_csv, split_train_test, stratified_subsample, SplitSpec};
use iotids_core::rng::derive_seed;
use iotids_core::select::{make_folds, search_grid, FoldPlan, GridSearchResult};
use iotids_core::{DataTable, FittedModel};

use crate::config::{ModelPlan, PipelineConfig, FOLD_STREAM, SUBSAMPLE_STREAM};
use crate::error::{CliError, CliResult};
use crate::persist::ModelFile;
use crate::report::{
    ensure_dir, evaluate, write_file, write_report, DatasetSummary, ModelReport, ModelStatus, RunReport, Timings,
    ARTIFACT_VERSION, SCHEMA_VERSION,
};

/// The dataset after loading and the single train/test split.
pub struct Prepared {
    pub train: DataTable,
    pub test: DataTable,
    pub summary: DatasetSummary,
    pub load_seconds: f64,
}

pub fn prepare(config: &PipelineConfig) -> CliResult<Prepared> {
    let start = Instant::now();
    let table = load_csv(&config.dataset, &config.label())?;
    let load_seconds = start.elapsed().as_secs_f64();
    let spec = SplitSpec {
        test_fraction: config.split.test_fraction,
        seed: config.seed,
        stratified: config.split.stratified,
    };
    let (train, test) = split_train_test(&table, &spec)?;
    let summary = DatasetSummary {
        rows: table.n_rows(),
        features: table.n_features(),
        class_counts: table.class_counts(),
        train_rows: train.n_rows(),
        test_rows: test.n_rows(),
        train_class_counts: train.class_counts(),
        test_class_counts: test.class_counts(),
    };
    Ok(Prepared {
        train,
        test,
        summary,
        load_seconds,
    })
}

fn fold_plan(config: &PipelineConfig, train: &DataTable) -> iotids_core::Result<FoldPlan> {
    make_folds(
        train,
        config.folds,
        derive_seed(config.seed, FOLD_STREAM),
        config.stratified_folds,
    )
}

/// A model fitted on the training partition, tuned first when it has a grid.
pub struct Trained {
    pub spec: iotids_core::ModelSpec,
    pub search: Option<GridSearchResult>,
    pub model: FittedModel,
    pub tune_seconds: Option<f64>,
    pub fit_seconds: f64,
}

fn train_one(config: &PipelineConfig, plan: &ModelPlan, train: &DataTable) -> iotids_core::Result<Trained> {
    let (spec, search, tune_seconds) = match &plan.grid {
        Some(grid) => {
            let start = Instant::now();
            let folds = fold_plan(config, train)?;
            let result = search_grid(train, grid, &folds, plan.scaling, config.selection_metric)?;
            (
                result.best_params.clone(),
                Some(result),
                Some(start.elapsed().as_secs_f64()),
            )
        }
        None => (plan.spec.clone(), None, None),
    };
    let start = Instant::now();
    let model = FittedModel::fit(&spec, plan.scaling, train)?;
    Ok(Trained {
        spec,
        search,
        model,
        tune_seconds,
        fit_seconds: start.elapsed().as_secs_f64(),
    })
}

fn run_model(config: &PipelineConfig, plan: &ModelPlan, data: &Prepared) -> (ModelReport, Option<FittedModel>) {
    let mut report = ModelReport {
        name: plan.name.clone(),
        kind: plan.spec.kind(),
        status: ModelStatus::Failed,
        error: None,
        scaling: plan.scaling,
        hyperparameters: plan.spec.clone(),
        search: None,
        evaluation: None,
        timings: Timings::default(),
    };
    let trained = match train_one(config, plan, &data.train) {
        Ok(t) => t,
        Err(e) => {
            report.error = Some(e.to_string());
            return (report, None);
        }
    };
    report.hyperparameters = trained.spec;
    report.search = trained.search;
    report.timings.tune = trained.tune_seconds;
    report.timings.fit = Some(trained.fit_seconds);

    let start = Instant::now();
    let evaluation = match plan.test_subsample.filter(|&f| f < 1.0) {
        Some(f) => stratified_subsample(&data.test, f, derive_seed(config.seed, SUBSAMPLE_STREAM))
            .and_then(|t| evaluate(&trained.model, &t)),
        None => evaluate(&trained.model, &data.test),
    };
    report.timings.predict = Some(start.elapsed().as_secs_f64());
    match evaluation {
        Ok(e) => {
            report.evaluation = Some(e);
            report.status = ModelStatus::Ok;
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    (report, Some(trained.model))
}

/// Runs every model on one shared split and writes the report and plots.
///
/// Models that fail are recorded in the report; the call fails only when
/// none succeeds.
pub fn run_pipeline(config: &PipelineConfig) -> CliResult<RunReport> {
    config.validate()?;
    let plans = config.plans()?;
    let data = prepare(config)?;
    let out = &config.output_dir;
    ensure_dir(out)?;

    let mut models = Vec::with_capacity(plans.len());
    for plan in &plans {
        eprintln!("[{}] training", plan.name);
        let (report, fitted) = run_model(config, plan, &data);
        match (&report.error, &report.evaluation) {
            (Some(e), _) => eprintln!("[{}] failed: {e}", plan.name),
            (None, Some(e)) => eprintln!("[{}] test accuracy {:.4}", plan.name, e.metrics.accuracy),
            _ => {}
        }
        if let (true, Some(model)) = (config.save_models, fitted) {
            save_model(out, &plan.name, config, &data.train, &report.hyperparameters, model)?;
        }
        models.push(report);
    }

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION.to_string(),
        config: config.clone(),
        dataset: data.summary,
        timings: Timings {
            load: Some(data.load_seconds),
            ..Timings::default()
        },
        models,
    };
    write_report(&report, out)?;
    if report.models.iter().all(|m| m.status == ModelStatus::Failed) {
        let first = report.models.iter().find_map(|m| m.error.clone()).unwrap_or_default();
        return Err(CliError::AllModelsFailed(first));
    }
    Ok(report)
}

fn save_model(
    dir: &Path,
    name: &str,
    config: &PipelineConfig,
    train: &DataTable,
    spec: &iotids_core::ModelSpec,
    model: FittedModel,
) -> CliResult<()> {
    let file = ModelFile::new(name, train.feature_names(), &config.label_column, spec.clone(), model);
    file.save(&dir.join(format!("{name}.model.json")))
}

/// Grid search only, on the training partition; writes `grid_search.json`.
pub fn run_grid_search(config: &PipelineConfig) -> CliResult<Vec<(String, GridSearchResult)>> {
    config.validate()?;
    let plans = config.plans()?;
    if plans.iter().all(|p| p.grid.is_none()) {
        return Err(CliError::config("no model entry has a grid"));
    }
    let data = prepare(config)?;
    let folds = fold_plan(config, &data.train)?;
    let mut results = Vec::new();
    for plan in plans {
        let Some(grid) = &plan.grid else { continue };
        eprintln!("[{}] searching {} combinations", plan.name, grid.len());
        match search_grid(&data.train, grid, &folds, plan.scaling, config.selection_metric) {
            Ok(r) => results.push((plan.name, r)),
            Err(e) => eprintln!("[{}] failed: {e}", plan.name),
        }
    }
    if results.is_empty() {
        return Err(CliError::AllModelsFailed("every grid search failed".into()));
    }
    ensure_dir(&config.output_dir)?;
    let map: serde_json::Map<String, serde_json::Value> = results
        .iter()
        .map(|(n, r)| (n.clone(), serde_json::to_value(r).expect("results serialize")))
        .collect();
    let json = serde_json::to_string_pretty(&map).expect("results serialize");
    write_file(config.output_dir.join("grid_search.json"), &json)?;
    Ok(results)
}

/// Fits every model (tuning where configured) and writes one model file each.
///
/// With `all_rows` the split is skipped and models see the whole dataset.
pub fn run_train(config: &PipelineConfig, all_rows: bool) -> CliResult<Vec<String>> {
    config.validate()?;
    let plans = config.plans()?;
    let train = if all_rows {
        load_csv(&config.dataset, &config.label())?
    } else {
        prepare(config)?.train
    };
    ensure_dir(&config.output_dir)?;
    let mut written = Vec::new();
    let mut first_error = None;
    for plan in &plans {
        eprintln!("[{}] training", plan.name);
        match train_one(config, plan, &train) {
            Ok(t) => {
                save_model(&config.output_dir, &plan.name, config, &train, &t.spec, t.model)?;
                written.push(plan.name.clone());
            }
            Err(e) => {
                eprintln!("[{}] failed: {e}", plan.name);
                first_error.get_or_insert(e.to_string());
            }
        }
    }
    if written.is_empty() {
        return Err(CliError::AllModelsFailed(first_error.unwrap_or_default()));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    use iotids_core::eval::metrics;
    use serde_json::json;

    fn write_csv(dir: &Path, rows: &[(Vec<f64>, u8)]) -> std::path::PathBuf {
        let d = rows[0].0.len();
        let mut s = (0..d).map(|i| format!("f{i}")).collect::<Vec<_>>().join(",");
        s.push_str(",label\n");
        for (x, y) in rows {
            let cells: Vec<String> = x.iter().map(f64::to_string).collect();
            s.push_str(&format!("{},{y}\n", cells.join(",")));
        }
        let path = dir.join("data.csv");
        fs::write(&path, s).unwrap();
        path
    }

    fn config(dir: &Path, data: &Path, models: serde_json::Value) -> PipelineConfig {
        let mut c =
            PipelineConfig::from_json(&json!({"dataset": data, "models": models, "seed": 3}).to_string()).unwrap();
        c.output_dir = dir.join("out");
        c
    }

    #[test]
    fn majority_on_sixty_forty_table() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<(Vec<f64>, u8)> = (0..100).map(|i| (vec![f64::from(i)], u8::from(i >= 60))).collect();
        let data = write_csv(dir.path(), &rows);
        let c = config(dir.path(), &data, json!([{"kind": "majority"}]));
        let report = run_pipeline(&c).unwrap();
        let e = report.models[0].evaluation.as_ref().unwrap();
        assert_eq!(report.dataset.test_class_counts, [12, 8]);
        assert_eq!(e.metrics.accuracy, 0.6);
        assert_eq!(e.confusion.tp, 0);
        assert!(c.output_dir.join("report.json").exists());
        assert!(c.output_dir.join("majority_confusion.csv").exists());
        assert!(c.output_dir.join("majority_roc.svg").exists());
    }

    #[test]
    fn metrics_recompute_from_confusion() {
        let dir = tempfile::tempdir().unwrap();
        let t = iotids_core::synth::gaussian_blobs(200, 2, 1.0, 4);
        let rows: Vec<(Vec<f64>, u8)> = t.rows().map(|r| r.to_vec()).zip(t.labels().iter().copied()).collect();
        let data = write_csv(dir.path(), &rows);
        let models = json!([
            {"kind": "decision_tree", "grid": {"max_depth": [1, 3]}},
            {"kind": "knn", "test_subsample": 0.5},
            {"kind": "adaboost", "params": {"n_estimators": 10}}
        ]);
        let report = run_pipeline(&config(dir.path(), &data, models)).unwrap();
        for m in &report.models {
            let e = m.evaluation.as_ref().unwrap();
            assert_eq!(metrics(&e.confusion).unwrap(), e.metrics);
            assert_eq!(e.confusion.total() as usize, e.rows);
        }
        assert_eq!(report.models[1].evaluation.as_ref().unwrap().rows, 20);
        let search = report.models[0].search.as_ref().unwrap();
        assert_eq!(search.combinations.len(), 2);
        assert_eq!(report.models[0].hyperparameters, search.best_params);
        let back = RunReport::from_json(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn failures_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<(Vec<f64>, u8)> = (0..30).map(|i| (vec![f64::from(i)], u8::from(i % 2 == 0))).collect();
        let data = write_csv(dir.path(), &rows);
        let one_bad = json!([{"kind": "knn", "params": {"n_neighbors": 50}}, {"kind": "majority"}]);
        let report = run_pipeline(&config(dir.path(), &data, one_bad)).unwrap();
        assert_eq!(report.models[0].status, ModelStatus::Failed);
        assert!(report.models[0].error.as_ref().unwrap().contains("n_neighbors"));
        assert_eq!(report.models[1].status, ModelStatus::Ok);

        let all_bad = json!([{"kind": "knn", "params": {"n_neighbors": 50}}]);
        let err = run_pipeline(&config(dir.path(), &data, all_bad)).unwrap_err();
        assert_eq!(err.exit_code(), 4);

        let mut missing = config(dir.path(), &data, json!([{"kind": "majority"}]));
        missing.dataset = dir.path().join("nope.csv");
        assert_eq!(run_pipeline(&missing).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn train_and_grid_search_write_files() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<(Vec<f64>, u8)> = (0..60)
            .map(|i| {
                (
                    vec![f64::from(if i >= 30 { i + 100 } else { i }), 1.0],
                    u8::from(i >= 30),
                )
            })
            .collect();
        let data = write_csv(dir.path(), &rows);
        let c = config(
            dir.path(),
            &data,
            json!([{"name": "tree", "kind": "decision_tree", "grid": {"max_depth": [1, 2]}}, {"kind": "majority"}]),
        );
        let results = run_grid_search(&c).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].1.best_mean, 1.0);
        assert!(c.output_dir.join("grid_search.json").exists());
        let written = run_train(&c, true).unwrap();
        assert_eq!(written, ["tree", "majority"]);
        let file = ModelFile::load(&c.output_dir.join("tree.model.json")).unwrap();
        assert_eq!(file.feature_names, ["f0", "f1"]);
        assert_eq!(file.label_column, "last");
    }
}
