//! JSON pipeline configuration.
//!
//! ```json
//! {
//!   "dataset": "data/botnet.csv",
//!   "label_column": "label",
//!   "split": { "test_fraction": 0.2, "stratified": true },
//!   "folds": 5,
//!   "seed": 42,
//!   "output_dir": "out",
//!   "models": [
//!     { "kind": "random_forest" },
//!     { "kind": "knn", "params": { "n_neighbors": 5 }, "test_subsample": 0.1 },
//!     { "kind": "decision_tree", "grid": { "max_depth": [10, 30] } },
//!     { "kind": "adaboost", "grid": "default" }
//!   ]
//! }
//! ```
//!
//! A model starts from its tuned hyperparameters, takes a seed derived from
//! the master seed and its position in `models`, then applies `params`.
//! A relative `dataset` or `output_dir` is resolved against the config
//! file's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use iotids_core::data::{LabelColumn, ScalerKind};
use iotids_core::rng::derive_seed;
use iotids_core::select::{default_grid, ParamGrid, SelectionMetric};
use iotids_core::{ModelKind, ModelSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Stream index for the fold plan seed.
pub const FOLD_STREAM: u64 = 1;
/// Stream index for per-model test subsampling.
pub const SUBSAMPLE_STREAM: u64 = 2;
const MODEL_STREAM_BASE: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "yes")]
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: default_test_fraction(),
            stratified: true,
        }
    }
}

/// `"default"` selects the shipped grid for the model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Named(String),
    Axes(Map<String, Value>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    /// Report and file name; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalerKind>,
    /// Evaluate on a stratified fraction of the test partition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_subsample: Option<f64>,
    /// Seed stream pinned when entries are filtered out ahead of this one.
    #[serde(skip)]
    pub stream: Option<u64>,
}

impl ModelEntry {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    #[serde(default = "default_label")]
    pub label_column: String,
    #[serde(default)]
    pub split: SplitConfig,
    /// Scaling for entries without their own; unset uses the per-kind default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalerKind>,
    pub models: Vec<ModelEntry>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "yes")]
    pub stratified_folds: bool,
    #[serde(default)]
    pub selection_metric: SelectionMetric,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Also write each fitted model as a JSON file.
    #[serde(default)]
    pub save_models: bool,
}

fn default_test_fraction() -> f64 {
    0.2
}
fn yes() -> bool {
    true
}
fn default_label() -> String {
    "last".into()
}
fn default_folds() -> usize {
    5
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub label_column: Option<String>,
    /// Keep only entries whose name or kind is listed.
    pub models: Option<Vec<String>>,
    pub no_grid: bool,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(CliError::config)
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.dataset, &mut config.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    /// Applies overrides; model filtering keeps each survivor's seed stream.
    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(d) = &o.dataset {
            self.dataset = d.clone();
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(l) = &o.label_column {
            self.label_column = l.clone();
        }
        if o.no_grid {
            for m in &mut self.models {
                m.grid = None;
            }
        }
        if let Some(wanted) = &o.models {
            let hit = |m: &ModelEntry, w: &String| {
                m.display_name() == *w || w.parse::<ModelKind>().is_ok_and(|k| k == m.kind)
            };
            if let Some(w) = wanted.iter().find(|w| !self.models.iter().any(|m| hit(m, w))) {
                return Err(CliError::config(format!("--models: no configured model matches {w:?}")));
            }
            let matches = |m: &ModelEntry| wanted.iter().any(|w| hit(m, w));
            self.models = std::mem::take(&mut self.models)
                .into_iter()
                .enumerate()
                .filter(|(_, m)| matches(m))
                .map(|(i, mut m)| {
                    m.stream.get_or_insert(i as u64);
                    m
                })
                .collect();
        }
        Ok(())
    }

    fn resolved_seeds(&self) -> Vec<u64> {
        self.models
            .iter()
            .enumerate()
            .map(|(i, m)| derive_seed(self.seed, MODEL_STREAM_BASE + m.stream.unwrap_or(i as u64)))
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.models.is_empty() {
            return Err(CliError::config("at least one model entry is required"));
        }
        let f = self.split.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::config("split.test_fraction must be in (0, 1)"));
        }
        if self.models.iter().any(|m| m.grid.is_some()) && self.folds < 2 {
            return Err(CliError::config("folds must be >= 2 when a grid is present"));
        }
        let mut names = HashSet::new();
        for m in &self.models {
            let name = m.display_name();
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(CliError::config(format!("invalid model name {name:?}")));
            }
            if !names.insert(name.clone()) {
                return Err(CliError::config(format!("duplicate model name {name:?}")));
            }
            if let Some(s) = m.test_subsample {
                if !(s > 0.0 && s <= 1.0) {
                    return Err(CliError::config(format!("{name}: test_subsample must be in (0, 1]")));
                }
            }
            if let Some(GridConfig::Named(g)) = &m.grid {
                if g != "default" {
                    return Err(CliError::config(format!("{name}: unknown grid {g:?}")));
                }
            }
        }
        for plan in self.plans()? {
            plan.spec
                .validate()
                .map_err(|e| CliError::config(format!("{}: {e}", plan.name)))?;
        }
        Ok(())
    }

    pub fn label(&self) -> LabelColumn {
        LabelColumn::parse(&self.label_column)
    }

    /// Resolved spec, scaling and grid per model entry.
    pub fn plans(&self) -> CliResult<Vec<ModelPlan>> {
        self.models
            .iter()
            .zip(self.resolved_seeds())
            .map(|(m, seed)| {
                let name = m.display_name();
                let spec = m
                    .kind
                    .tuned_spec()
                    .with_seed(seed)
                    .with_params(&m.params)
                    .map_err(|e| CliError::config(format!("{name}: {e}")))?;
                let grid = match &m.grid {
                    None => None,
                    Some(GridConfig::Named(_)) => Some(ParamGrid {
                        base: spec.clone(),
                        axes: default_grid(m.kind).axes,
                    }),
                    Some(GridConfig::Axes(axes)) => Some(
                        ParamGrid::from_map(spec.clone(), axes)
                            .map_err(|e| CliError::config(format!("{name}: {e}")))?,
                    ),
                };
                Ok(ModelPlan {
                    name,
                    spec,
                    scaling: m.scaling.or(self.scaling).unwrap_or(m.kind.default_scaling()),
                    grid,
                    test_subsample: m.test_subsample,
                })
            })
            .collect()
    }

    /// Config with the five standard models at their tuned settings.
    pub fn standard(dataset: PathBuf) -> Self {
        let models = ModelKind::STANDARD
            .iter()
            .map(|&kind| ModelEntry {
                name: None,
                kind,
                params: Map::new(),
                grid: None,
                scaling: None,
                test_subsample: None,
                stream: None,
            })
            .collect();
        Self {
            dataset,
            label_column: default_label(),
            split: SplitConfig::default(),
            scaling: None,
            models,
            folds: default_folds(),
            stratified_folds: true,
            selection_metric: SelectionMetric::default(),
            output_dir: default_output(),
            seed: 0,
            save_models: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelPlan {
    pub name: String,
    pub spec: ModelSpec,
    pub scaling: ScalerKind,
    pub grid: Option<ParamGrid>,
    pub test_subsample: Option<f64>,
}
