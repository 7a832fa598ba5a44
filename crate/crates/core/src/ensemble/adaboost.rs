use serde::{Deserialize, Serialize};

use super::{check_width, sigmoid};
use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::tree::{fit_tree_on, Criterion, DecisionTreeModel, MaxFeatures, TreeConfig, TreeNode};

/// Leaf probabilities are clipped to `[PROBA_CLIP, 1 - PROBA_CLIP]` before logs.
pub const PROBA_CLIP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AdaBoostVariant {
    #[default]
    #[serde(rename = "SAMME.R")]
    SammeR,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaBoostConfig {
    #[serde(rename = "algorithm")]
    pub variant: AdaBoostVariant,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub base_depth: usize,
    pub seed: u64,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self {
            variant: AdaBoostVariant::SammeR,
            learning_rate: 1.0,
            n_estimators: 50,
            base_depth: 1,
            seed: 0,
        }
    }
}

impl AdaBoostConfig {
    /// Tuned AdaBoost: SAMME.R, learning rate 0.1, 100 stumps.
    pub fn tuned() -> Self {
        Self {
            learning_rate: 0.1,
            n_estimators: 100,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be finite and > 0".into()));
        }
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be >= 1".into()));
        }
        if self.base_depth == 0 {
            return Err(Error::InvalidParameter("base_depth must be positive".into()));
        }
        Ok(())
    }
}

/// One boosting round: a weighted tree whose leaves vote with half log-odds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostMember {
    pub tree: DecisionTreeModel,
}

impl AdaBoostMember {
    /// `h(x) = 0.5 * (ln p1 - ln p0)` on clipped leaf probabilities.
    pub fn contribution(&self, row: &[f64]) -> f64 {
        let p = self.tree.root.leaf(row).proba();
        let p0 = p[0].clamp(PROBA_CLIP, 1.0 - PROBA_CLIP);
        let p1 = p[1].clamp(PROBA_CLIP, 1.0 - PROBA_CLIP);
        0.5 * (p1.ln() - p0.ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub members: Vec<AdaBoostMember>,
    pub n_features: usize,
    pub config: AdaBoostConfig,
}

pub fn fit_adaboost(table: &DataTable, config: &AdaBoostConfig) -> Result<AdaBoostModel> {
    fit_adaboost_with(table, config, |_, _| {})
}

/// Real AdaBoost for two classes. `on_round(m, weights)` sees the
/// normalized sample weights after round `m`'s update.
///
/// Stops early when a round's tree cannot split (every feature constant
/// under the current weights); that tree is discarded.
pub fn fit_adaboost_with(
    table: &DataTable,
    config: &AdaBoostConfig,
    mut on_round: impl FnMut(usize, &[f64]),
) -> Result<AdaBoostModel> {
    config.validate()?;
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let counts = table.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::SingleClass("AdaBoost needs both classes"));
    }
    let n = table.n_rows();
    let mut weights = vec![1.0 / n as f64; n];
    let mut members = Vec::with_capacity(config.n_estimators);
    for round in 0..config.n_estimators {
        let tree_config = TreeConfig {
            criterion: Criterion::Gini,
            max_depth: Some(config.base_depth),
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            seed: derive_seed(config.seed, round as u64),
        };
        let tree = fit_tree_on(table, (0..n).collect(), Some(&weights), &tree_config)?;
        if matches!(tree.root, TreeNode::Leaf { .. }) {
            break;
        }
        let member = AdaBoostMember { tree };
        for (i, w) in weights.iter_mut().enumerate() {
            let signed = if table.label(i) == 1 { 1.0 } else { -1.0 };
            *w *= (-config.learning_rate * signed * member.contribution(table.row(i))).exp();
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter(
                "sample weights degenerated; lower the learning rate".into(),
            ));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        on_round(round, &weights);
        members.push(member);
    }
    Ok(AdaBoostModel {
        members,
        n_features: table.n_features(),
        config: *config,
    })
}

impl AdaBoostModel {
    /// Summed member contributions; positive favours class 1.
    pub fn decision(&self, row: &[f64]) -> Result<f64> {
        check_width(self.n_features, row)?;
        Ok(self.members.iter().map(|m| m.contribution(row)).sum())
    }

    pub fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]> {
        Ok(self.score_and_decision(row)?.0)
    }

    /// `(score, S)` where the score is `sigma(2S)` for class 1.
    pub fn score_and_decision(&self, row: &[f64]) -> Result<([f64; 2], f64)> {
        let d = self.decision(row)?;
        let p1 = sigmoid(2.0 * d);
        Ok(([1.0 - p1, p1], d))
    }
}

pub fn adaboost_predict_score(model: &AdaBoostModel, row: &[f64]) -> Result<[f64; 2]> {
    model.predict_score(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gaussian_blobs;
    use crate::tree::ClassLeaf;

    fn member(counts: [f64; 2]) -> AdaBoostMember {
        AdaBoostMember {
            tree: DecisionTreeModel {
                root: TreeNode::Leaf {
                    value: ClassLeaf { counts, samples: 1 },
                },
                config: TreeConfig::default(),
                n_features: 1,
            },
        }
    }

    fn model(members: Vec<AdaBoostMember>) -> AdaBoostModel {
        AdaBoostModel {
            members,
            n_features: 1,
            config: AdaBoostConfig::default(),
        }
    }

    #[test]
    fn separable_single_round() {
        let t = DataTable::from_unnamed_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 1]).unwrap();
        let cfg = AdaBoostConfig {
            n_estimators: 1,
            ..AdaBoostConfig::tuned()
        };
        let m = fit_adaboost(&t, &cfg).unwrap();
        assert_eq!(m.members.len(), 1);
        for (r, &y) in t.rows().zip(t.labels()) {
            let s = m.decision(r).unwrap();
            assert_eq!(u8::from(s > 0.0), y);
        }
    }

    #[test]
    fn weights_normalized_and_positive() {
        let t = gaussian_blobs(150, 2, 1.5, 7);
        let mut rounds = 0;
        fit_adaboost_with(&t, &AdaBoostConfig::tuned(), |_, w| {
            rounds += 1;
            assert!(w.iter().all(|&x| x > 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        })
        .unwrap();
        assert!(rounds > 0);
    }

    #[test]
    fn misclassified_point_gains_weight() {
        // labels 0,0,1,0,0 on a line: no stump isolates sample 2, which ends
        // up in a leaf dominated by class 0
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![f64::from(i)]).collect();
        let t = DataTable::from_unnamed_rows(&rows, vec![0, 0, 1, 0, 0]).unwrap();
        let cfg = AdaBoostConfig {
            n_estimators: 1,
            learning_rate: 0.5,
            ..AdaBoostConfig::default()
        };
        let mut after = Vec::new();
        let m = fit_adaboost_with(&t, &cfg, |_, w| after = w.to_vec()).unwrap();
        let preds: Vec<u8> = t.rows().map(|r| u8::from(m.decision(r).unwrap() > 0.0)).collect();
        let wrong: Vec<usize> = (0..5).filter(|&i| preds[i] != t.label(i)).collect();
        assert_eq!(wrong.len(), 1);
        let bad = wrong[0];
        for good in (0..5).filter(|&i| i != bad) {
            // initial weights are equal, so the ratio started at 1
            assert!(after[bad] / after[good] > 1.0);
        }
    }

    #[test]
    fn hand_built_decisions() {
        assert_eq!(model(vec![]).predict_score(&[0.0]).unwrap(), [0.5, 0.5]);

        let pure = model(vec![member([0.0, 4.0])]);
        let d = pure.decision(&[0.0]).unwrap();
        assert!((d - 0.5 * ((1.0 - PROBA_CLIP).ln() - PROBA_CLIP.ln())).abs() < 1e-9);
        assert!(pure.predict_score(&[0.0]).unwrap()[1] > 0.5);

        let cancel = model(vec![member([1.0, 3.0]), member([3.0, 1.0])]);
        assert_eq!(cancel.decision(&[0.0]).unwrap(), 0.0);
        assert_eq!(cancel.predict_score(&[0.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn early_stop_on_constant_features() {
        let t = DataTable::from_unnamed_rows(&[vec![1.0], vec![1.0], vec![1.0]], vec![0, 1, 1]).unwrap();
        let m = fit_adaboost(&t, &AdaBoostConfig::default()).unwrap();
        assert!(m.members.is_empty());
    }

    #[test]
    fn config_serde_uses_algorithm_key() {
        let json = serde_json::to_value(AdaBoostConfig::tuned()).unwrap();
        assert_eq!(json["algorithm"], "SAMME.R");
        let back: AdaBoostConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, AdaBoostConfig::tuned());
    }
}
