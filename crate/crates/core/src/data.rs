//! Dataset ingestion, seeded train/test splitting and feature scaling.

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Feature matrix (row-major) with binary labels.
///
/// Labels are `0` (normal) or `1` (attack). Construction validates shape,
/// label range and finiteness, so every `DataTable` in circulation is sound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct DataTable {
    feature_names: Vec<String>,
    features: Vec<f64>,
    labels: Vec<u8>,
}

#[derive(Deserialize)]
struct RawTable {
    feature_names: Vec<String>,
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl TryFrom<RawTable> for DataTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        DataTable::from_flat(raw.feature_names, raw.features, raw.labels)
    }
}

impl DataTable {
    pub fn from_flat(feature_names: Vec<String>, features: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let width = feature_names.len();
        if width == 0 {
            return Err(Error::InvalidTable("no feature columns".into()));
        }
        if features.len() != width * labels.len() {
            return Err(Error::InvalidTable(format!(
                "{} values do not fill {} rows of {} features",
                features.len(),
                labels.len(),
                width
            )));
        }
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::NonBinary { index, value });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTable(format!(
                "non-finite value at row {}, column {}",
                pos / width,
                pos % width
            )));
        }
        Ok(Self {
            feature_names,
            features,
            labels,
        })
    }

    pub fn from_rows(feature_names: Vec<String>, rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let width = feature_names.len();
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: bad.len(),
            });
        }
        Self::from_flat(feature_names, rows.concat(), labels)
    }

    /// Table with generated column names `f0..f{d-1}`.
    pub fn from_unnamed_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        let names = (0..width).map(|i| format!("f{i}")).collect();
        Self::from_rows(names, rows, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> u8 {
        self.labels[row]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let d = self.n_features();
        &self.features[row * d..(row + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features())
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.n_features() + feature]
    }

    /// `[normal, attack]` row counts.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// New table holding the given rows in the given order (duplicates allowed).
    pub fn subset(&self, indices: &[usize]) -> DataTable {
        let d = self.n_features();
        let mut features = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        DataTable {
            feature_names: self.feature_names.clone(),
            features,
            labels,
        }
    }

    pub(crate) fn map_features(&self, f: impl Fn(usize, f64) -> f64) -> DataTable {
        let d = self.n_features();
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(pos, &v)| f(pos % d, v))
            .collect();
        DataTable {
            feature_names: self.feature_names.clone(),
            features,
            labels: self.labels.clone(),
        }
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    #[default]
    Last,
    Named(String),
}

impl LabelColumn {
    /// `"last"` selects the final column, anything else is a header name.
    pub fn parse(spec: &str) -> Self {
        if spec == "last" {
            LabelColumn::Last
        } else {
            LabelColumn::Named(spec.to_string())
        }
    }
}

/// Strict numeric literal: optional sign, digits with optional fraction,
/// optional exponent. Rejects `inf`, `nan`, hex and empty cells.
fn parse_number(cell: &str) -> Option<f64> {
    let s = cell.trim();
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], Some(&body[pos + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !digits(int_part) || !digits(frac_part) {
        return None;
    }
    if let Some(exp) = exponent {
        let exp = exp.strip_prefix(['+', '-']).unwrap_or(exp);
        if exp.is_empty() || !digits(exp) {
            return None;
        }
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a comma-delimited CSV with a header row into a [`DataTable`].
///
/// The label column is removed from the features; every other cell must be a
/// finite numeric literal. Errors carry the 1-based file line of the
/// offending record.
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<DataTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label_column)
}

pub fn read_csv(reader: impl std::io::Read, label_column: &LabelColumn) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::MissingHeader);
    }
    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateHeader(name.clone()));
        }
    }
    let label_idx = match label_column {
        LabelColumn::Last => header.len() - 1,
        LabelColumn::Named(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownLabelColumn(name.clone()))?,
    };
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                let label = match parse_number(cell) {
                    Some(0.0) => 0,
                    Some(1.0) => 1,
                    _ => {
                        return Err(Error::InvalidLabel {
                            line,
                            value: cell.to_string(),
                        })
                    }
                };
                labels.push(label);
            } else {
                let value = parse_number(cell).ok_or_else(|| Error::ParseCell {
                    line,
                    column: header[i].clone(),
                    value: cell.to_string(),
                })?;
                features.push(value);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyTable);
    }
    DataTable::from_flat(feature_names, features, labels)
}

/// Parameters of a seeded train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Row indices of a split: `(train, test)`, each sorted ascending.
///
/// Rows are shuffled with a seeded Fisher-Yates pass and the first
/// `floor(n * test_fraction)` become the test set. In stratified mode each
/// class is shuffled and cut separately (class 0 first, then class 1 from the
/// same generator); remainders go to train.
pub fn split_indices(table: &DataTable, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut rng = seeded(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let groups: Vec<Vec<usize>> = if spec.stratified {
        let counts = table.class_counts();
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::SingleClass("stratified split needs both classes"));
        }
        (0..2u8)
            .map(|c| (0..table.n_rows()).filter(|&i| table.label(i) == c).collect())
            .collect()
    } else {
        vec![(0..table.n_rows()).collect()]
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let n_test = (group.len() as f64 * spec.test_fraction).floor() as usize;
        test.extend_from_slice(&group[..n_test]);
        train.extend_from_slice(&group[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(table: &DataTable, spec: &SplitSpec) -> Result<(DataTable, DataTable)> {
    let (train, test) = split_indices(table, spec)?;
    Ok((table.subset(&train), table.subset(&test)))
}

/// Stratified random subsample keeping `floor(class_count * fraction)` rows
/// per class (at least one per present class).
pub fn stratified_subsample(table: &DataTable, fraction: f64, seed: u64) -> Result<DataTable> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "subsample fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let mut rng = seeded(seed);
    let mut keep = Vec::new();
    for c in 0..2u8 {
        let mut group: Vec<usize> = (0..table.n_rows()).filter(|&i| table.label(i) == c).collect();
        if group.is_empty() {
            continue;
        }
        group.shuffle(&mut rng);
        let n = ((group.len() as f64 * fraction).floor() as usize).max(1);
        keep.extend_from_slice(&group[..n]);
    }
    keep.sort_unstable();
    Ok(table.subset(&keep))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerKind {
    #[default]
    None,
    MinMax,
    ZScore,
}

/// Per-column affine transform `x' = (x - offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub kind: ScalerKind,
    /// `(offset, scale)` per feature; empty for [`ScalerKind::None`].
    pub per_column_stats: Vec<(f64, f64)>,
}

impl ScalerParams {
    pub fn identity() -> Self {
        Self {
            kind: ScalerKind::None,
            per_column_stats: Vec::new(),
        }
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if self.kind != ScalerKind::None && self.per_column_stats.len() != width {
            return Err(Error::DimensionMismatch {
                expected: self.per_column_stats.len(),
                found: width,
            });
        }
        Ok(())
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_width(row.len())?;
        if self.kind == ScalerKind::None {
            return Ok(row.to_vec());
        }
        Ok(row
            .iter()
            .zip(&self.per_column_stats)
            .map(|(&x, &(offset, scale))| (x - offset) / scale)
            .collect())
    }
}

/// Column statistics for `kind`. Constant columns get scale 1 so they map to 0.
pub fn fit_scaler(table: &DataTable, kind: ScalerKind) -> Result<ScalerParams> {
    if kind == ScalerKind::None {
        return Ok(ScalerParams::identity());
    }
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n = table.n_rows() as f64;
    let stats = (0..table.n_features())
        .map(|j| {
            let column = (0..table.n_rows()).map(|i| table.value(i, j));
            let (offset, spread) = match kind {
                ScalerKind::MinMax => {
                    let (lo, hi) =
                        column.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    (lo, hi - lo)
                }
                ScalerKind::ZScore => {
                    let mean = column.clone().sum::<f64>() / n;
                    let var = column.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
                ScalerKind::None => unreachable!(),
            };
            let scale = if spread > 0.0 && spread.is_finite() {
                spread
            } else {
                1.0
            };
            (offset, scale)
        })
        .collect();
    Ok(ScalerParams {
        kind,
        per_column_stats: stats,
    })
}

pub fn apply_scaler(table: &DataTable, params: &ScalerParams) -> Result<DataTable> {
    params.check_width(table.n_features())?;
    if params.kind == ScalerKind::None {
        return Ok(table.clone());
    }
    let stats = &params.per_column_stats;
    let scaled = table.map_features(|j, x| (x - stats[j].0) / stats[j].1);
    if scaled.features.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidTable("scaling produced a non-finite value".into()));
    }
    Ok(scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(rows: &[Vec<f64>], labels: &[u8]) -> DataTable {
        DataTable::from_unnamed_rows(rows, labels.to_vec()).unwrap()
    }

    fn csv_table(text: &str, label: &LabelColumn) -> Result<DataTable> {
        read_csv(text.as_bytes(), label)
    }

    #[test]
    fn loads_small_csv() {
        let text = "a,b,c,class3\n1,2,3,0\n4,5,6,1\n7,8,9,0\n1.5,-2e3,0.25,1\n0,0,0,1\n";
        let t = csv_table(text, &LabelColumn::Named("class3".into())).unwrap();
        assert_eq!(t.n_rows(), 5);
        assert_eq!(t.n_features(), 3);
        assert_eq!(t.labels(), &[0, 1, 0, 1, 1]);
        assert_eq!(t.row(3), &[1.5, -2000.0, 0.25]);
        assert_eq!(t.feature_names(), &["a", "b", "c"]);
    }

    #[test]
    fn label_column_in_the_middle() {
        let text = "x,label,y\n1,1,2\n3,0,4\n";
        let t = csv_table(text, &LabelColumn::parse("label")).unwrap();
        assert_eq!(t.feature_names(), &["x", "y"]);
        assert_eq!(t.row(1), &[3.0, 4.0]);
        assert_eq!(t.labels(), &[1, 0]);
    }

    #[test]
    fn rejects_label_two_with_line() {
        let text = "a,y\n1,0\n2,2\n";
        match csv_table(text, &LabelColumn::Last) {
            Err(Error::InvalidLabel { line, value }) => {
                assert_eq!(line, 3);
                assert_eq!(value, "2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_cells() {
        for bad in ["abc", "nan", "inf", "", "1.2.3", "0x10", "1e", "--1"] {
            let text = format!("a,y\n{bad},0\n");
            let err = csv_table(&text, &LabelColumn::Last).unwrap_err();
            assert!(matches!(err, Error::ParseCell { line: 2, .. }), "{bad}: {err:?}");
        }
    }

    #[test]
    fn accepts_numeric_forms() {
        for (cell, want) in [
            ("3", 3.0),
            ("-0.5", -0.5),
            (".5", 0.5),
            ("5.", 5.0),
            ("1E-2", 0.01),
            ("+2e+1", 20.0),
        ] {
            assert_eq!(parse_number(cell), Some(want), "{cell}");
        }
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            csv_table("a,a,y\n1,2,0\n", &LabelColumn::Last),
            Err(Error::DuplicateHeader(_))
        ));
        assert!(matches!(
            csv_table("a,y\n1,0\n", &LabelColumn::Named("class".into())),
            Err(Error::UnknownLabelColumn(_))
        ));
        assert!(matches!(
            csv_table("a,y\n1,0,3\n", &LabelColumn::Last),
            Err(Error::RaggedRow { .. })
        ));
    }

    #[test]
    fn missing_file() {
        let err = load_csv("/definitely/not/here.csv", &LabelColumn::Last).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn split_ten_rows() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let t = table(&rows, &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        for seed in 0..5 {
            let spec = SplitSpec {
                test_fraction: 0.2,
                seed,
                stratified: false,
            };
            let (train, test) = split_indices(&t, &spec).unwrap();
            assert_eq!(train.len(), 8);
            assert_eq!(test.len(), 2);
            assert!(test.iter().all(|i| !train.contains(i)));
            assert_eq!(split_indices(&t, &spec).unwrap(), (train, test));
        }
    }

    #[test]
    fn stratified_split_counts() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let t = table(&rows, &labels);
        let spec = SplitSpec {
            test_fraction: 0.2,
            seed: 3,
            stratified: true,
        };
        let (_, test) = split_train_test(&t, &spec).unwrap();
        assert_eq!(test.class_counts(), [10, 10]);
    }

    #[test]
    fn stratified_needs_both_classes() {
        let t = table(&[vec![1.0], vec![2.0]], &[1, 1]);
        assert!(matches!(
            split_indices(&t, &SplitSpec::default()),
            Err(Error::SingleClass(_))
        ));
        let bad = SplitSpec {
            test_fraction: 1.0,
            ..SplitSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn min_max_column() {
        let t = table(&[vec![0.0, 7.0], vec![5.0, 7.0], vec![10.0, 7.0]], &[0, 1, 0]);
        let p = fit_scaler(&t, ScalerKind::MinMax).unwrap();
        let s = apply_scaler(&t, &p).unwrap();
        let col: Vec<f64> = s.rows().map(|r| r[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
        // constant column maps to zero
        assert!(s.rows().all(|r| r[1] == 0.0));
    }

    #[test]
    fn z_score_column() {
        let t = table(&[vec![2.0], vec![4.0]], &[0, 1]);
        let p = fit_scaler(&t, ScalerKind::ZScore).unwrap();
        let s = apply_scaler(&t, &p).unwrap();
        assert_eq!(s.row(0), &[-1.0]);
        assert_eq!(s.row(1), &[1.0]);
        assert_eq!(p.transform_row(&[3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn scaler_width_mismatch() {
        let t = table(&[vec![1.0, 2.0]], &[0]);
        let p = ScalerParams {
            kind: ScalerKind::MinMax,
            per_column_stats: vec![(0.0, 1.0)],
        };
        assert!(matches!(apply_scaler(&t, &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn table_serde_validates() {
        let bad = r#"{"feature_names":["a"],"features":[1.0,2.0],"labels":[0]}"#;
        assert!(serde_json::from_str::<DataTable>(bad).is_err());
        let t = table(&[vec![1.0], vec![2.0]], &[0, 1]);
        let back: DataTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    fn arb_table() -> impl Strategy<Value = DataTable> {
        (1usize..40, 1usize..4).prop_flat_map(|(n, d)| {
            (
                proptest::collection::vec(-100.0f64..100.0, n * d),
                proptest::collection::vec(0u8..2, n),
            )
                .prop_map(move |(f, l)| DataTable::from_flat((0..d).map(|i| format!("c{i}")).collect(), f, l).unwrap())
        })
    }

    proptest! {
        #[test]
        fn split_is_a_partition(t in arb_table(), seed in any::<u64>(), frac in 0.05f64..0.95) {
            let spec = SplitSpec { test_fraction: frac, seed, stratified: false };
            let (train, test) = split_indices(&t, &spec).unwrap();
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..t.n_rows()).collect::<Vec<_>>());
            prop_assert_eq!(test.len(), (t.n_rows() as f64 * frac).floor() as usize);
            prop_assert_eq!(split_indices(&t, &spec).unwrap(), (train, test));
        }

        #[test]
        fn stratified_per_class_floor(t in arb_table(), seed in any::<u64>(), frac in 0.05f64..0.95) {
            let counts = t.class_counts();
            prop_assume!(counts[0] > 0 && counts[1] > 0);
            let spec = SplitSpec { test_fraction: frac, seed, stratified: true };
            let (_, test) = split_train_test(&t, &spec).unwrap();
            let got = test.class_counts();
            for c in 0..2 {
                prop_assert_eq!(got[c], (counts[c] as f64 * frac).floor() as usize);
            }
        }

        #[test]
        fn none_scaler_is_identity(t in arb_table()) {
            let p = fit_scaler(&t, ScalerKind::None).unwrap();
            prop_assert_eq!(apply_scaler(&t, &p).unwrap(), t);
        }
    }
}
