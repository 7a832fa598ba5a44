//! Uniform fit/predict surface over every classifier in the crate.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::data::{apply_scaler, fit_scaler, DataTable, ScalerKind, ScalerParams};
use crate::ensemble::{
    fit_adaboost, fit_forest, fit_gradient_boost, AdaBoostConfig, AdaBoostModel, ForestConfig, ForestModel,
    GradientBoostConfig, GradientBoostModel,
};
use crate::error::{Error, Result};
use crate::knn::{fit_knn, KnnConfig, KnnModel};
use crate::tree::{fit_tree, DecisionTreeModel, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    DecisionTree,
    GradientBoosting,
    Adaboost,
    Knn,
    /// Predicts the training prior; a baseline, not one of the five models.
    Majority,
}

impl ModelKind {
    /// The five standard classifiers, in reporting order.
    pub const STANDARD: [ModelKind; 5] = [
        ModelKind::RandomForest,
        ModelKind::DecisionTree,
        ModelKind::GradientBoosting,
        ModelKind::Adaboost,
        ModelKind::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "random_forest",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::Adaboost => "adaboost",
            ModelKind::Knn => "knn",
            ModelKind::Majority => "majority",
        }
    }

    /// Tuned hyperparameters for each model.
    pub fn tuned_spec(self) -> ModelSpec {
        match self {
            ModelKind::RandomForest => ModelSpec::RandomForest(ForestConfig::tuned()),
            ModelKind::DecisionTree => ModelSpec::DecisionTree(TreeConfig::tuned()),
            ModelKind::GradientBoosting => ModelSpec::GradientBoosting(GradientBoostConfig::tuned()),
            ModelKind::Adaboost => ModelSpec::Adaboost(AdaBoostConfig::tuned()),
            ModelKind::Knn => ModelSpec::Knn(KnnConfig::tuned()),
            ModelKind::Majority => ModelSpec::Majority,
        }
    }

    /// Scaling applied when a configuration does not choose one.
    pub fn default_scaling(self) -> ScalerKind {
        match self {
            ModelKind::Knn => ScalerKind::MinMax,
            _ => ScalerKind::None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "random_forest" | "rf" => ModelKind::RandomForest,
            "decision_tree" | "dt" => ModelKind::DecisionTree,
            "gradient_boosting" | "gb" => ModelKind::GradientBoosting,
            "adaboost" | "ada" => ModelKind::Adaboost,
            "knn" => ModelKind::Knn,
            "majority" => ModelKind::Majority,
            other => return Err(Error::InvalidParameter(format!("unknown model kind {other:?}"))),
        };
        Ok(kind)
    }
}

/// A model kind together with its full hyperparameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(ForestConfig),
    DecisionTree(TreeConfig),
    GradientBoosting(GradientBoostConfig),
    Adaboost(AdaBoostConfig),
    Knn(KnnConfig),
    Majority,
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::RandomForest(_) => ModelKind::RandomForest,
            ModelSpec::DecisionTree(_) => ModelKind::DecisionTree,
            ModelSpec::GradientBoosting(_) => ModelKind::GradientBoosting,
            ModelSpec::Adaboost(_) => ModelKind::Adaboost,
            ModelSpec::Knn(_) => ModelKind::Knn,
            ModelSpec::Majority => ModelKind::Majority,
        }
    }

    /// Hyperparameters as a JSON object (without the `kind` tag).
    pub fn params(&self) -> Map<String, Value> {
        let mut value = serde_json::to_value(self).expect("model specs always serialize");
        let map = value.as_object_mut().expect("model specs serialize as objects");
        map.remove("kind");
        std::mem::take(map)
    }

    /// Copy with named hyperparameters replaced.
    ///
    /// A name is looked up among the top-level fields first, then inside
    /// nested groups (so `max_depth` reaches a forest's tree settings).
    pub fn with_params(&self, overrides: &Map<String, Value>) -> Result<ModelSpec> {
        let mut value = serde_json::to_value(self)?;
        let root = value.as_object_mut().expect("model specs serialize as objects");
        for (name, v) in overrides {
            if name == "kind" {
                return Err(Error::InvalidParameter("`kind` cannot be overridden".into()));
            }
            if root.contains_key(name) {
                root.insert(name.clone(), v.clone());
                continue;
            }
            let nested = root
                .values_mut()
                .filter_map(Value::as_object_mut)
                .find(|group| group.contains_key(name));
            match nested {
                Some(group) => {
                    group.insert(name.clone(), v.clone());
                }
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "{} has no hyperparameter {name:?}",
                        self.kind()
                    )))
                }
            }
        }
        let spec: ModelSpec =
            serde_json::from_value(value).map_err(|e| Error::InvalidParameter(format!("{}: {e}", self.kind())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ModelSpec::RandomForest(c) => Some(c.seed),
            ModelSpec::DecisionTree(c) => Some(c.seed),
            ModelSpec::GradientBoosting(c) => Some(c.seed),
            ModelSpec::Adaboost(c) => Some(c.seed),
            ModelSpec::Knn(_) | ModelSpec::Majority => None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> ModelSpec {
        match &mut self {
            ModelSpec::RandomForest(c) => c.seed = seed,
            ModelSpec::DecisionTree(c) => c.seed = seed,
            ModelSpec::GradientBoosting(c) => c.seed = seed,
            ModelSpec::Adaboost(c) => c.seed = seed,
            ModelSpec::Knn(_) | ModelSpec::Majority => {}
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::RandomForest(c) => c.validate(),
            ModelSpec::DecisionTree(c) => c.validate(),
            ModelSpec::GradientBoosting(c) => c.validate(),
            ModelSpec::Adaboost(c) => c.validate(),
            ModelSpec::Knn(c) => c.validate(),
            ModelSpec::Majority => Ok(()),
        }
    }

    pub fn fit(&self, table: &DataTable) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::RandomForest(c) => TrainedModel::RandomForest(fit_forest(table, c)?),
            ModelSpec::DecisionTree(c) => TrainedModel::DecisionTree(fit_tree(table, c)?),
            ModelSpec::GradientBoosting(c) => TrainedModel::GradientBoosting(fit_gradient_boost(table, c)?),
            ModelSpec::Adaboost(c) => TrainedModel::Adaboost(fit_adaboost(table, c)?),
            ModelSpec::Knn(c) => TrainedModel::Knn(fit_knn(table, c)?),
            ModelSpec::Majority => TrainedModel::Majority(MajorityModel::fit(table)?),
        })
    }
}

/// Always scores the training class frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub class_counts: [usize; 2],
    pub n_features: usize,
}

impl MajorityModel {
    pub fn fit(table: &DataTable) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::EmptyTable);
        }
        Ok(Self {
            class_counts: table.class_counts(),
            n_features: table.n_features(),
        })
    }

    pub fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]> {
        crate::ensemble::check_width(self.n_features, row)?;
        let n = (self.class_counts[0] + self.class_counts[1]) as f64;
        Ok([self.class_counts[0] as f64 / n, self.class_counts[1] as f64 / n])
    }
}

pub trait Classifier: Sync {
    /// `[p(normal), p(attack)]`.
    fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]>;

    /// Class 1 only when its score strictly exceeds class 0's.
    fn predict(&self, row: &[f64]) -> Result<u8> {
        let s = self.predict_score(row)?;
        Ok(u8::from(s[1] > s[0]))
    }

    fn predict_scores(&self, table: &DataTable) -> Result<Vec<[f64; 2]>> {
        (0..table.n_rows())
            .into_par_iter()
            .map(|i| self.predict_score(table.row(i)))
            .collect()
    }

    fn predict_all(&self, table: &DataTable) -> Result<Vec<u8>> {
        (0..table.n_rows())
            .into_par_iter()
            .map(|i| self.predict(table.row(i)))
            .collect()
    }

    /// Score and class from one evaluation; the class agrees with `predict`.
    fn predict_scored(&self, row: &[f64]) -> Result<([f64; 2], u8)> {
        let s = self.predict_score(row)?;
        Ok((s, u8::from(s[1] > s[0])))
    }

    fn predict_scored_all(&self, table: &DataTable) -> Result<Vec<([f64; 2], u8)>> {
        (0..table.n_rows())
            .into_par_iter()
            .map(|i| self.predict_scored(table.row(i)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    RandomForest(ForestModel),
    DecisionTree(DecisionTreeModel),
    GradientBoosting(GradientBoostModel),
    Adaboost(AdaBoostModel),
    Knn(KnnModel),
    Majority(MajorityModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::RandomForest(_) => ModelKind::RandomForest,
            TrainedModel::DecisionTree(_) => ModelKind::DecisionTree,
            TrainedModel::GradientBoosting(_) => ModelKind::GradientBoosting,
            TrainedModel::Adaboost(_) => ModelKind::Adaboost,
            TrainedModel::Knn(_) => ModelKind::Knn,
            TrainedModel::Majority(_) => ModelKind::Majority,
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]> {
        match self {
            TrainedModel::RandomForest(m) => m.predict_score(row),
            TrainedModel::DecisionTree(m) => m.predict_proba(row),
            TrainedModel::GradientBoosting(m) => m.predict_score(row),
            TrainedModel::Adaboost(m) => m.predict_score(row),
            TrainedModel::Knn(m) => m.predict_score(row),
            TrainedModel::Majority(m) => m.predict_score(row),
        }
    }

    fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(self.predict_scored(row)?.1)
    }

    fn predict_scored(&self, row: &[f64]) -> Result<([f64; 2], u8)> {
        match self {
            // sign of the summed contributions, exact even where sigma rounds to 0.5
            TrainedModel::Adaboost(m) => {
                let (s, d) = m.score_and_decision(row)?;
                Ok((s, u8::from(d > 0.0)))
            }
            _ => {
                let s = self.predict_score(row)?;
                Ok((s, u8::from(s[1] > s[0])))
            }
        }
    }
}

/// A trained model together with the feature scaling fitted on its training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub scaler: ScalerParams,
    pub model: TrainedModel,
}

impl FittedModel {
    pub fn fit(spec: &ModelSpec, scaling: ScalerKind, table: &DataTable) -> Result<FittedModel> {
        let scaler = fit_scaler(table, scaling)?;
        let scaled;
        let input = if scaling == ScalerKind::None {
            table
        } else {
            scaled = apply_scaler(table, &scaler)?;
            &scaled
        };
        Ok(FittedModel {
            scaler,
            model: spec.fit(input)?,
        })
    }
}

impl Classifier for FittedModel {
    fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]> {
        if self.scaler.kind == ScalerKind::None {
            self.model.predict_score(row)
        } else {
            self.model.predict_score(&self.scaler.transform_row(row)?)
        }
    }

    fn predict(&self, row: &[f64]) -> Result<u8> {
        Ok(self.predict_scored(row)?.1)
    }

    fn predict_scored(&self, row: &[f64]) -> Result<([f64; 2], u8)> {
        if self.scaler.kind == ScalerKind::None {
            self.model.predict_scored(row)
        } else {
            self.model.predict_scored(&self.scaler.transform_row(row)?)
        }
    }
}
