//! Tree ensembles: bagged random forests, logistic gradient boosting and
//! real-valued (SAMME.R) AdaBoost.

mod adaboost;
mod forest;
mod gradient;

pub use adaboost::{
    adaboost_predict_score, fit_adaboost, fit_adaboost_with, AdaBoostConfig, AdaBoostMember, AdaBoostModel,
    AdaBoostVariant, PROBA_CLIP,
};
pub use forest::{fit_forest, forest_predict_score, member_seed, ForestConfig, ForestModel};
pub use gradient::{
    fit_gradient_boost, fit_gradient_boost_with, gradient_boost_predict_score, log_loss, GradientBoostConfig,
    GradientBoostModel, RegressionLeaf, NEWTON_FLOOR,
};

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_width(expected: usize, row: &[f64]) -> crate::Result<()> {
    if row.len() != expected {
        return Err(crate::Error::DimensionMismatch {
            expected,
            found: row.len(),
        });
    }
    Ok(())
}
