//! Synthetic two-class data for smoke tests and demos.

use rand::Rng;

use crate::data::DataTable;
use crate::rng::seeded;

fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Two isotropic unit-variance Gaussian blobs in `n_features` dimensions.
///
/// Class 0 is centred at `-separation / 2` on every axis and class 1 at
/// `+separation / 2`; labels alternate 0, 1, 0, ... so classes are balanced.
pub fn gaussian_blobs(n: usize, n_features: usize, separation: f64, seed: u64) -> DataTable {
    let mut rng = seeded(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as u8;
        let centre = if y == 1 { separation / 2.0 } else { -separation / 2.0 };
        rows.push((0..n_features).map(|_| centre + standard_normal(&mut rng)).collect());
        labels.push(y);
    }
    DataTable::from_unnamed_rows(&rows, labels).expect("generated table is well formed")
}

/// One-feature table with a given class-1 share; the last rows are class 1
/// and sit `n` units further along the axis, leaving a wide margin.
pub fn imbalanced_line(n: usize, positive_share: f64) -> DataTable {
    let positives = (n as f64 * positive_share).round() as usize;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![if i >= n - positives { (i + n) as f64 } else { i as f64 }])
        .collect();
    let labels = (0..n).map(|i| u8::from(i >= n - positives)).collect();
    DataTable::from_unnamed_rows(&rows, labels).expect("generated table is well formed")
}
