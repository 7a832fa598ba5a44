use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_width;
use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::tree::{fit_tree_on, Criterion, DecisionTreeModel, MaxFeatures, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// Per-member tree settings; `tree.seed` is replaced by [`member_seed`].
    pub tree: TreeConfig,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            tree: TreeConfig {
                max_features: MaxFeatures::Sqrt,
                ..TreeConfig::default()
            },
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// Tuned forest: 200 gini trees of depth 8 with sqrt feature sampling.
    pub fn tuned() -> Self {
        Self {
            n_estimators: 200,
            tree: TreeConfig {
                criterion: Criterion::Gini,
                max_depth: Some(8),
                max_features: MaxFeatures::Sqrt,
                ..TreeConfig::default()
            },
            bootstrap: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be >= 1".into()));
        }
        self.tree.validate()
    }
}

/// Seed of member `index`: its bootstrap draw and feature sampling both
/// come from this stream.
pub fn member_seed(forest_seed: u64, index: usize) -> u64 {
    derive_seed(forest_seed, index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub members: Vec<DecisionTreeModel>,
    pub config: ForestConfig,
    pub n_features: usize,
}

pub fn fit_forest(table: &DataTable, config: &ForestConfig) -> Result<ForestModel> {
    config.validate()?;
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n = table.n_rows();
    let members = (0..config.n_estimators)
        .into_par_iter()
        .map(|i| {
            let seed = member_seed(config.seed, i);
            let samples = if config.bootstrap {
                let mut rng = seeded(derive_seed(seed, u64::MAX));
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let tree = TreeConfig { seed, ..config.tree };
            fit_tree_on(table, samples, None, &tree)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        members,
        config: *config,
        n_features: table.n_features(),
    })
}

impl ForestModel {
    /// Mean of member leaf distributions (soft vote).
    pub fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]> {
        check_width(self.n_features, row)?;
        if self.members.is_empty() {
            return Ok([0.5, 0.5]);
        }
        let mut sum = [0.0; 2];
        for tree in &self.members {
            let p = tree.root.leaf(row).proba();
            sum[0] += p[0];
            sum[1] += p[1];
        }
        let k = self.members.len() as f64;
        Ok([sum[0] / k, sum[1] / k])
    }
}

pub fn forest_predict_score(model: &ForestModel, row: &[f64]) -> Result<[f64; 2]> {
    model.predict_score(row)
}
