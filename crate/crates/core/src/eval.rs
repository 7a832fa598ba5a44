//! Binary evaluation: confusion matrix, precision/recall/F1/accuracy and ROC.
//!
//! The positive class is `1` (attack).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }
}

fn check_binary(values: &[u8]) -> Result<()> {
    match values.iter().position(|&v| v > 1) {
        Some(index) => Err(Error::NonBinary {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

pub fn confusion(truth: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    if truth.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predictions.len(),
        });
    }
    check_binary(truth)?;
    check_binary(predictions)?;
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in truth.iter().zip(predictions) {
        match (y, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Precision, recall, F1 and accuracy of a confusion matrix.
///
/// An undefined ratio (zero denominator) is reported as 0 with its
/// `*_defined` flag cleared; F1 is undefined when either input is, or when
/// both are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
}

impl MetricsReport {
    /// Same report with every value rounded to `decimals` places.
    pub fn rounded(&self, decimals: i32) -> MetricsReport {
        let r = |v: f64| round_to(v, decimals);
        MetricsReport {
            precision: r(self.precision),
            recall: r(self.recall),
            f1: r(self.f1),
            accuracy: r(self.accuracy),
            ..*self
        }
    }
}

pub fn round_to(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (value * scale).round() / scale
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyTable);
    }
    let ratio = |num: u64, den: u64| if den == 0 { None } else { Some(num as f64 / den as f64) };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport {
        precision: precision.unwrap_or(0.0),
        recall: recall.unwrap_or(0.0),
        f1: f1.unwrap_or(0.0),
        accuracy: cm.correct() as f64 / total as f64,
        precision_defined: precision.is_some(),
        recall_defined: recall.is_some(),
        f1_defined: f1.is_some(),
    })
}

pub fn accuracy(truth: &[u8], predictions: &[u8]) -> Result<f64> {
    Ok(metrics(&confusion(truth, predictions)?)?.accuracy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score cut producing this point; `None` for the (0,0) anchor.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve over all distinct scores, predicting 1 when `score >= threshold`.
///
/// Tied scores move both rates at once, giving a diagonal segment. AUC is the
/// trapezoidal area under the points.
pub fn roc_curve(truth: &[u8], scores: &[f64]) -> Result<RocCurve> {
    if truth.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: scores.len(),
        });
    }
    check_binary(truth)?;
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let positives = truth.iter().filter(|&&y| y == 1).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass("ROC needs both classes in the truth vector"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
            threshold: Some(threshold),
        });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}
