//! Classifiers, model selection and evaluation for binary intrusion detection.
//!
//! Everything here is implemented from scratch: CART trees, random forests,
//! logistic gradient boosting, real-valued AdaBoost, weighted k-nearest
//! neighbours, stratified k-fold grid search and the usual binary metrics
//! (confusion matrix, precision, recall, F1, accuracy, ROC/AUC).
//!
//! The positive class is always `1` (attack); `0` means normal traffic.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod knn;
pub mod model;
pub mod rng;
pub mod select;
pub mod synth;
pub mod tree;

pub use data::{DataTable, LabelColumn, ScalerKind, ScalerParams, SplitSpec};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, MetricsReport, RocCurve};
pub use model::{Classifier, FittedModel, ModelKind, ModelSpec, TrainedModel};
