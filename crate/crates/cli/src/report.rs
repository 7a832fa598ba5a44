//! Run reports, the comparison table and on-disk artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use iotids_core::eval::{confusion, metrics, roc_curve, round_to};
use iotids_core::select::GridSearchResult;
use iotids_core::{Classifier, ConfusionMatrix, DataTable, FittedModel, MetricsReport, ModelKind, ModelSpec, RocCurve};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::svg::render_roc_svg;

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub load: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tune: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predict: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub features: usize,
    /// `[normal, attack]` row counts.
    pub class_counts: [usize; 2],
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_class_counts: [usize; 2],
    pub test_class_counts: [usize; 2],
}

/// Test-set results of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub rows: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// Absent when the evaluated rows hold a single class.
    pub roc: Option<RocCurve>,
}

impl Evaluation {
    pub fn auc(&self) -> Option<f64> {
        self.roc.as_ref().map(|r| r.auc)
    }
}

/// Scores `table` with `model` and collects confusion, metrics and ROC.
pub fn evaluate(model: &FittedModel, table: &DataTable) -> iotids_core::Result<Evaluation> {
    let (scores, predictions): (Vec<[f64; 2]>, Vec<u8>) = model.predict_scored_all(table)?.into_iter().unzip();
    let cm = confusion(table.labels(), &predictions)?;
    let positive: Vec<f64> = scores.iter().map(|s| s[1]).collect();
    let counts = table.class_counts();
    let roc = if counts[0] > 0 && counts[1] > 0 {
        Some(roc_curve(table.labels(), &positive)?)
    } else {
        None
    };
    Ok(Evaluation {
        rows: table.n_rows(),
        confusion: cm,
        metrics: metrics(&cm)?,
        roc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub kind: ModelKind,
    pub status: ModelStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub scaling: iotids_core::ScalerKind,
    /// Settings of the fitted model (the grid winner when searched).
    pub hyperparameters: ModelSpec,
    pub search: Option<GridSearchResult>,
    pub evaluation: Option<Evaluation>,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub artifact_version: String,
    pub config: PipelineConfig,
    pub dataset: DatasetSummary,
    pub timings: Timings,
    pub models: Vec<ModelReport>,
}

impl RunReport {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let report = RunReport::deserialize(&mut de).map_err(CliError::config)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "report schema_version {} is not supported (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

/// Removes every `timings` member so reports can be compared byte for byte.
pub fn strip_timings(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("timings");
            map.values_mut().for_each(strip_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

/// One row of the comparison table; accuracy in percent to 2 decimals, the
/// rest to 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub accuracy_pct: f64,
    pub auc: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Evaluated models ordered by accuracy, highest first; ties keep config order.
pub fn summarize_comparison(models: &[ModelReport]) -> Vec<ComparisonRow> {
    let mut evaluated: Vec<(&ModelReport, &Evaluation)> = models
        .iter()
        .filter_map(|m| m.evaluation.as_ref().map(|e| (m, e)))
        .collect();
    evaluated.sort_by(|a, b| b.1.metrics.accuracy.total_cmp(&a.1.metrics.accuracy));
    evaluated
        .into_iter()
        .map(|(m, e)| ComparisonRow {
            model: m.name.clone(),
            accuracy_pct: round_to(100.0 * e.metrics.accuracy, 2),
            auc: e.auc().map(|a| round_to(a, 3)),
            precision: round_to(e.metrics.precision, 3),
            recall: round_to(e.metrics.recall, 3),
            f1: round_to(e.metrics.f1, 3),
        })
        .collect()
}

pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let width = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let mut out = format!(
        "{:<width$}  {:>10}  {:>6}  {:>9}  {:>6}  {:>6}\n",
        "model", "accuracy %", "AUC", "precision", "recall", "F1"
    );
    for r in rows {
        let auc = r.auc.map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.2}  {:>6}  {:>9.3}  {:>6.3}  {:>6.3}",
            r.model, r.accuracy_pct, auc, r.precision, r.recall, r.f1
        );
    }
    out
}

pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    format!(
        "actual,predicted_normal,predicted_attack\nnormal,{},{}\nattack,{},{}\n",
        cm.tn, cm.fp, cm.fn_, cm.tp
    )
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in &curve.points {
        let t = p.threshold.map_or_else(String::new, |t| t.to_string());
        let _ = writeln!(out, "{},{},{}", p.fpr, p.tpr, t);
    }
    out
}

pub(crate) fn write_file(path: PathBuf, contents: &str) -> CliResult<()> {
    fs::write(&path, contents).map_err(|source| CliError::Output { path, source })
}

pub(crate) fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes per-model confusion CSV, ROC CSV and SVG.
pub fn write_evaluation_files(dir: &Path, name: &str, evaluation: &Evaluation) -> CliResult<()> {
    write_file(
        dir.join(format!("{name}_confusion.csv")),
        &confusion_csv(&evaluation.confusion),
    )?;
    if let Some(roc) = &evaluation.roc {
        write_file(dir.join(format!("{name}_roc.csv")), &roc_csv(roc))?;
        let title = format!("ROC curve: {name}");
        write_file(dir.join(format!("{name}_roc.svg")), &render_roc_svg(roc, &title))?;
    }
    Ok(())
}

/// Writes everything derived from a report: comparison table (text and
/// JSON) plus per-model evaluation files. `report.json` itself is not touched.
pub fn render_artifacts(report: &RunReport, dir: &Path) -> CliResult<Vec<ComparisonRow>> {
    ensure_dir(dir)?;
    let rows = summarize_comparison(&report.models);
    write_file(dir.join("comparison.txt"), &comparison_text(&rows))?;
    let json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    write_file(dir.join("comparison.json"), &json)?;
    for m in &report.models {
        if let Some(e) = &m.evaluation {
            write_evaluation_files(dir, &m.name, e)?;
        }
    }
    Ok(rows)
}

pub fn write_report(report: &RunReport, dir: &Path) -> CliResult<Vec<ComparisonRow>> {
    ensure_dir(dir)?;
    write_file(dir.join("report.json"), &report.to_json())?;
    render_artifacts(report, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn model(name: &str, accuracy: f64) -> ModelReport {
        let cm = ConfusionMatrix::new(1, 0, 1, 0);
        ModelReport {
            name: name.into(),
            kind: ModelKind::Majority,
            status: ModelStatus::Ok,
            error: None,
            scaling: Default::default(),
            hyperparameters: ModelSpec::Majority,
            search: None,
            evaluation: Some(Evaluation {
                rows: 2,
                confusion: cm,
                metrics: MetricsReport {
                    accuracy,
                    ..metrics(&cm).unwrap()
                },
                roc: None,
            }),
            timings: Timings::default(),
        }
    }

    #[test]
    fn comparison_sorts_by_accuracy() {
        let rows = summarize_comparison(&[model("b", 0.95), model("a", 0.99), model("c", 0.95)]);
        let names: Vec<&str> = rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(rows[0].accuracy_pct, 99.0);
        assert_eq!(summarize_comparison(&[model("solo", 0.5)]).len(), 1);
        let mut failed = model("x", 1.0);
        failed.evaluation = None;
        assert!(summarize_comparison(&[failed]).is_empty());
    }

    #[test]
    fn text_matches_rounded_rows() {
        let cm = ConfusionMatrix::new(55401, 1880, 61368, 4477);
        let mut m = model("knn", 0.0);
        m.evaluation = Some(Evaluation {
            rows: cm.total() as usize,
            confusion: cm,
            metrics: metrics(&cm).unwrap(),
            roc: Some(roc_curve(&[0, 1, 1], &[0.2, 0.1, 0.9]).unwrap()),
        });
        let rows = summarize_comparison(&[m]);
        let r = &rows[0];
        assert_eq!(
            (r.precision, r.recall, r.f1, r.accuracy_pct),
            (0.967, 0.925, 0.946, 94.84)
        );
        let text = comparison_text(&rows);
        let line = text.lines().nth(1).unwrap();
        let cells: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cells, ["knn", "94.84", "0.500", "0.967", "0.925", "0.946"]);
    }

    #[test]
    fn strip_removes_nested_timings() {
        let mut v = json!({"timings": {"load": 1.0}, "models": [{"a": 1, "timings": {}}]});
        strip_timings(&mut v);
        assert_eq!(v, json!({"models": [{"a": 1}]}));
    }

    #[test]
    fn csv_layouts() {
        let cm = ConfusionMatrix::new(4, 3, 2, 1);
        assert_eq!(
            confusion_csv(&cm),
            "actual,predicted_normal,predicted_attack\nnormal,2,3\nattack,1,4\n"
        );
        let roc = roc_curve(&[0, 1], &[0.25, 0.75]).unwrap();
        assert_eq!(roc_csv(&roc), "fpr,tpr,threshold\n0,0,\n0,1,0.75\n1,1,0.25\n");
    }

    #[test]
    fn report_rejects_other_schema() {
        let config = PipelineConfig::standard("x.csv".into());
        let report = RunReport {
            schema_version: SCHEMA_VERSION + 1,
            artifact_version: ARTIFACT_VERSION.into(),
            config,
            dataset: DatasetSummary {
                rows: 0,
                features: 0,
                class_counts: [0, 0],
                train_rows: 0,
                test_rows: 0,
                train_class_counts: [0, 0],
                test_class_counts: [0, 0],
            },
            timings: Timings::default(),
            models: vec![],
        };
        assert!(RunReport::from_json(&report.to_json()).is_err());
        let ok = RunReport {
            schema_version: SCHEMA_VERSION,
            ..report
        };
        assert_eq!(RunReport::from_json(&ok.to_json()).unwrap(), ok);
    }
}
