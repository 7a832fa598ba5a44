//! Exact k-nearest-neighbour classification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    Manhattan,
    Minkowski,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnConfig {
    #[serde(rename = "n_neighbors")]
    pub k: usize,
    #[serde(rename = "weights")]
    pub weighting: Weighting,
    pub metric: MetricKind,
    /// Minkowski exponent; `manhattan` ignores it (it is `p = 1`).
    pub p: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 5,
            weighting: Weighting::Uniform,
            metric: MetricKind::Minkowski,
            p: 2.0,
        }
    }
}

impl KnnConfig {
    /// Tuned k-NN: 5 neighbours, inverse-distance weights, Manhattan metric.
    pub fn tuned() -> Self {
        Self {
            k: 5,
            weighting: Weighting::Distance,
            metric: MetricKind::Manhattan,
            p: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("n_neighbors must be >= 1".into()));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter("p must be finite and >= 1".into()));
        }
        Ok(())
    }

    fn exponent(&self) -> f64 {
        match self.metric {
            MetricKind::Manhattan => 1.0,
            MetricKind::Minkowski => self.p,
        }
    }
}

/// Minkowski distance of order `p` (`p = 1` is Manhattan).
pub fn distance(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(minkowski(a, b, p))
}

#[inline]
fn minkowski(a: &[f64], b: &[f64], p: f64) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p == 1.0 {
        diffs.sum()
    } else if p == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else {
        diffs.map(|d| d.powf(p)).sum::<f64>().powf(p.recip())
    }
}

/// Stored training set plus settings; prediction scans every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub train: DataTable,
    pub config: KnnConfig,
}

pub fn fit_knn(table: &DataTable, config: &KnnConfig) -> Result<KnnModel> {
    config.validate()?;
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if config.k > table.n_rows() {
        return Err(Error::InvalidParameter(format!(
            "n_neighbors = {} exceeds {} training rows",
            config.k,
            table.n_rows()
        )));
    }
    Ok(KnnModel {
        train: table.clone(),
        config: *config,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl KnnModel {
    fn check(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.train.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.train.n_features(),
                found: row.len(),
            });
        }
        Ok(())
    }

    /// The `k` closest training rows ordered by (distance, row index).
    ///
    /// Ties at the k-th distance keep the lowest row indices.
    pub fn neighbors(&self, row: &[f64]) -> Result<Vec<Neighbor>> {
        self.check(row)?;
        let p = self.config.exponent();
        let mut all: Vec<Neighbor> = self
            .train
            .rows()
            .enumerate()
            .map(|(index, r)| Neighbor {
                index,
                distance: minkowski(row, r, p),
            })
            .collect();
        let order = |a: &Neighbor, b: &Neighbor| a.distance.total_cmp(&b.distance).then(a.index.cmp(&b.index));
        let k = self.config.k.min(all.len());
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, order);
            all.truncate(k);
        }
        all.sort_unstable_by(order);
        Ok(all)
    }

    pub fn predict_score(&self, row: &[f64]) -> Result<[f64; 2]> {
        let neighbors = self.neighbors(row)?;
        let mut mass = [0.0f64; 2];
        let exact: Vec<&Neighbor> = neighbors.iter().filter(|n| n.distance == 0.0).collect();
        match self.config.weighting {
            Weighting::Distance if !exact.is_empty() => {
                for n in exact {
                    mass[self.train.label(n.index) as usize] += 1.0;
                }
            }
            Weighting::Distance => {
                for n in &neighbors {
                    mass[self.train.label(n.index) as usize] += n.distance.recip();
                }
            }
            Weighting::Uniform => {
                for n in &neighbors {
                    mass[self.train.label(n.index) as usize] += 1.0;
                }
            }
        }
        let total = mass[0] + mass[1];
        Ok([mass[0] / total, mass[1] / total])
    }

    pub fn predict(&self, row: &[f64]) -> Result<u8> {
        let s = self.predict_score(row)?;
        Ok(u8::from(s[1] > s[0]))
    }

    /// Scores for every row of `queries`, computed in parallel.
    pub fn predict_score_batch(&self, queries: &DataTable) -> Result<Vec<[f64; 2]>> {
        (0..queries.n_rows())
            .into_par_iter()
            .map(|i| self.predict_score(queries.row(i)))
            .collect()
    }
}

pub fn knn_predict_score(model: &KnnModel, row: &[f64]) -> Result<[f64; 2]> {
    model.predict_score(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_points() -> DataTable {
        DataTable::from_unnamed_rows(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 5.0], vec![6.0, 5.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn distances() {
        assert_eq!(distance(&[1.0, 2.0], &[1.0, 2.0], 1.0).unwrap(), 0.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], 1.0).unwrap(), 7.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], 2.0).unwrap(), 5.0);
        assert!((distance(&[0.0, 0.0], &[3.0, 4.0], 3.0).unwrap() - 91f64.cbrt()).abs() < 1e-12);
        assert!(distance(&[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn exact_match_dominates() {
        let m = fit_knn(
            &four_points(),
            &KnnConfig {
                k: 3,
                ..KnnConfig::tuned()
            },
        )
        .unwrap();
        assert_eq!(m.predict_score(&[5.0, 5.0]).unwrap(), [0.0, 1.0]);
        assert_eq!(m.predict(&[5.0, 5.0]).unwrap(), 1);
    }

    #[test]
    fn weighted_vote_example() {
        let cfg = KnnConfig {
            k: 3,
            ..KnnConfig::tuned()
        };
        let m = fit_knn(&four_points(), &cfg).unwrap();
        let n = m.neighbors(&[0.5, 0.0]).unwrap();
        let d: Vec<f64> = n.iter().map(|n| n.distance).collect();
        assert_eq!(d, vec![0.5, 0.5, 9.5]);
        let s = m.predict_score(&[0.5, 0.0]).unwrap();
        let want0 = 4.0 / (4.0 + 1.0 / 9.5);
        assert!((s[0] - want0).abs() < 1e-12);
        assert_eq!(m.predict(&[0.5, 0.0]).unwrap(), 0);
    }

    #[test]
    fn all_neighbors_uniform_gives_prior() {
        let t = DataTable::from_unnamed_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![0, 1, 1, 0, 1],
        )
        .unwrap();
        let cfg = KnnConfig {
            k: 5,
            weighting: Weighting::Uniform,
            ..KnnConfig::default()
        };
        let m = fit_knn(&t, &cfg).unwrap();
        for q in [-10.0, 2.5, 99.0] {
            let s = m.predict_score(&[q]).unwrap();
            assert!((s[1] - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn kth_tie_keeps_lowest_index() {
        let t = DataTable::from_unnamed_rows(&[vec![1.0], vec![-1.0], vec![1.0]], vec![1, 0, 1]).unwrap();
        let cfg = KnnConfig {
            k: 1,
            ..KnnConfig::tuned()
        };
        let m = fit_knn(&t, &cfg).unwrap();
        let n = m.neighbors(&[0.0]).unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].index, 0);
    }

    #[test]
    fn tie_vote_goes_to_normal() {
        let t = DataTable::from_unnamed_rows(&[vec![1.0], vec![-1.0]], vec![1, 0]).unwrap();
        let cfg = KnnConfig {
            k: 2,
            ..KnnConfig::tuned()
        };
        assert_eq!(fit_knn(&t, &cfg).unwrap().predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn invalid_configs() {
        let t = four_points();
        assert!(fit_knn(
            &t,
            &KnnConfig {
                k: 5,
                ..KnnConfig::tuned()
            }
        )
        .is_err());
        assert!(fit_knn(
            &t,
            &KnnConfig {
                k: 0,
                ..KnnConfig::tuned()
            }
        )
        .is_err());
        let bad_p = KnnConfig {
            metric: MetricKind::Minkowski,
            p: 0.5,
            ..KnnConfig::tuned()
        };
        assert!(fit_knn(&t, &bad_p).is_err());
        let m = fit_knn(
            &t,
            &KnnConfig {
                k: 1,
                ..KnnConfig::tuned()
            },
        )
        .unwrap();
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn batch_matches_single() {
        let t = four_points();
        let m = fit_knn(
            &t,
            &KnnConfig {
                k: 3,
                ..KnnConfig::tuned()
            },
        )
        .unwrap();
        let batch = m.predict_score_batch(&t).unwrap();
        for (i, s) in batch.iter().enumerate() {
            assert_eq!(*s, m.predict_score(t.row(i)).unwrap());
        }
    }
}
