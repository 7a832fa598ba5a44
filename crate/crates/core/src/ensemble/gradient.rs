use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{check_width, sigmoid};
use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::tree::{grow, GrowParams, MaxFeatures, Objective, TreeNode};

/// Lower bound on the summed hessian in a leaf's Newton step.
pub const NEWTON_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradientBoostConfig {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    /// Fraction of rows drawn without replacement for each round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GradientBoostConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_depth: 3,
            n_estimators: 100,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GradientBoostConfig {
    /// Tuned boosting: 500 rounds of depth-4 trees, shrinkage 0.01, 80% rows.
    pub fn tuned() -> Self {
        Self {
            learning_rate: 0.01,
            max_depth: 4,
            n_estimators: 500,
            subsample: 0.8,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be finite and >= 0".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::InvalidParameter("subsample must lie in (0, 1]".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter("max_depth must be positive".into()));
        }
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionLeaf {
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostModel {
    /// Prior log-odds `ln(p1 / p0)` of the training labels.
    pub init_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode<RegressionLeaf>>,
    pub n_features: usize,
    pub config: GradientBoostConfig,
}

#[derive(Clone, Copy)]
struct GradStats {
    sum_r: f64,
    sum_r2: f64,
    sum_h: f64,
    n: usize,
}

/// Squared-error fit to residuals; hessians only feed the leaf values.
struct Residuals<'a> {
    residuals: &'a [f64],
    hessians: &'a [f64],
}

impl Objective for Residuals<'_> {
    type Stats = GradStats;

    fn empty(&self) -> GradStats {
        GradStats {
            sum_r: 0.0,
            sum_r2: 0.0,
            sum_h: 0.0,
            n: 0,
        }
    }

    #[inline]
    fn add(&self, s: &mut GradStats, sample: usize) {
        let r = self.residuals[sample];
        s.sum_r += r;
        s.sum_r2 += r * r;
        s.sum_h += self.hessians[sample];
        s.n += 1;
    }

    fn difference(&self, whole: &GradStats, part: &GradStats) -> GradStats {
        GradStats {
            sum_r: whole.sum_r - part.sum_r,
            sum_r2: (whole.sum_r2 - part.sum_r2).max(0.0),
            sum_h: (whole.sum_h - part.sum_h).max(0.0),
            n: whole.n - part.n,
        }
    }

    fn weight(&self, s: &GradStats) -> f64 {
        s.n as f64
    }

    #[inline]
    fn impurity(&self, s: &GradStats) -> f64 {
        if s.n == 0 {
            return 0.0;
        }
        let n = s.n as f64;
        let mean = s.sum_r / n;
        (s.sum_r2 / n - mean * mean).max(0.0)
    }

    fn is_pure(&self, s: &GradStats) -> bool {
        s.n == 0 || self.impurity(s) <= 1e-12 * (s.sum_r2 / s.n as f64)
    }
}

/// Mean binary cross-entropy of labels given raw log-odds.
pub fn log_loss(labels: &[u8], raw: &[f64]) -> f64 {
    let total: f64 = labels
        .iter()
        .zip(raw)
        .map(|(&y, &f)| {
            // softplus(f) - y f, stable for large |f|
            let softplus = if f > 0.0 {
                f + (-f).exp().ln_1p()
            } else {
                f.exp().ln_1p()
            };
            softplus - f64::from(y) * f
        })
        .sum();
    total / labels.len() as f64
}

pub fn fit_gradient_boost(table: &DataTable, config: &GradientBoostConfig) -> Result<GradientBoostModel> {
    fit_gradient_boost_with(table, config, |_, _| {})
}

/// Logistic gradient boosting; `on_round(m, loss)` reports the full
/// training-set log-loss after round `m`.
pub fn fit_gradient_boost_with(
    table: &DataTable,
    config: &GradientBoostConfig,
    mut on_round: impl FnMut(usize, f64),
) -> Result<GradientBoostModel> {
    config.validate()?;
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let counts = table.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass("gradient boosting needs both classes"));
    }
    let n = table.n_rows();
    let init_score = (counts[1] as f64 / counts[0] as f64).ln();
    let mut raw = vec![init_score; n];
    let mut residuals = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_estimators);
    let n_sub = ((n as f64 * config.subsample).floor() as usize).clamp(1, n);

    for round in 0..config.n_estimators {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            residuals[i] = f64::from(table.label(i)) - p;
            hessians[i] = p * (1.0 - p);
        }
        let round_seed = derive_seed(config.seed, round as u64);
        let samples: Vec<usize> = if n_sub < n {
            let mut s = index::sample(&mut seeded(round_seed), n, n_sub).into_vec();
            s.sort_unstable();
            s
        } else {
            (0..n).collect()
        };
        let objective = Residuals {
            residuals: &residuals,
            hessians: &hessians,
        };
        let params = GrowParams {
            max_depth: Some(config.max_depth),
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            seed: round_seed,
        };
        let tree = grow(table, &objective, samples, &params).map(&|s: GradStats| RegressionLeaf {
            score: s.sum_r / s.sum_h.max(NEWTON_FLOOR),
        });
        for (i, f) in raw.iter_mut().enumerate() {
            *f += config.learning_rate * tree.leaf(table.row(i)).score;
        }
        on_round(round, log_loss(table.labels(), &raw));
        trees.push(tree);
    }
    Ok(GradientBoostModel {
        init_score,
        learning_rate: config.learning_rate,
        trees,
        n_features: table.n_features(),
        config: *config,
    })
}

impl GradientBoostModel {
    pub fn raw_score(&self, row: &[f64]) -> Result<f64> {
        check_width(self.n_features, row)?;
        let boost: f64 = self.trees.iter().map(|t| t.leaf(row).score).sum();
        Ok(self.init_score + self.learning_rate * boost)
    }

    pub fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]> {
        let p1 = sigmoid(self.raw_score(row)?);
        Ok([1.0 - p1, p1])
    }
}

pub fn gradient_boost_predict_score(model: &GradientBoostModel, row: &[f64]) -> Result<[f64; 2]> {
    model.predict_score(row)
}
