//! K-fold cross-validation and exhaustive grid search.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::data::{DataTable, ScalerKind};
use crate::error::{Error, Result};
use crate::eval::{confusion, metrics};
use crate::model::{Classifier, FittedModel, ModelKind, ModelSpec};
use crate::rng::seeded;

/// Row-to-fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    pub stratified: bool,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// `(training rows, validation rows)` for fold `fold`, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded shuffle followed by round-robin dealing into `n_folds` folds.
///
/// Stratified plans shuffle each class separately and keep dealing from
/// where the previous class stopped, so per-class and overall fold sizes
/// both differ by at most one.
pub fn make_folds(table: &DataTable, n_folds: usize, seed: u64, stratified: bool) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    let n = table.n_rows();
    let groups: Vec<Vec<usize>> = if stratified {
        (0..2u8)
            .map(|c| (0..n).filter(|&i| table.label(i) == c).collect::<Vec<_>>())
            .filter(|g| !g.is_empty())
            .collect()
    } else {
        vec![(0..n).collect()]
    };
    if let Some(small) = groups.iter().map(Vec::len).min().filter(|&m| m < n_folds) {
        return Err(Error::TooFewRows {
            rows: small,
            folds: n_folds,
        });
    }
    if n < n_folds {
        return Err(Error::TooFewRows {
            rows: n,
            folds: n_folds,
        });
    }
    let mut rng = seeded(seed);
    let mut assignments = vec![0; n];
    let mut next = 0;
    for mut group in groups {
        group.shuffle(&mut rng);
        for row in group {
            assignments[row] = next % n_folds;
            next += 1;
        }
    }
    Ok(FoldPlan {
        n_folds,
        seed,
        stratified,
        assignments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Accuracy,
    F1,
}

impl SelectionMetric {
    pub fn score(self, truth: &[u8], predictions: &[u8]) -> Result<f64> {
        let m = metrics(&confusion(truth, predictions)?)?;
        Ok(match self {
            SelectionMetric::Accuracy => m.accuracy,
            SelectionMetric::F1 => m.f1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub metric: SelectionMetric,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

/// Cross-validates an arbitrary fit function over `plan`.
///
/// Folds run in parallel; scores land in fold order.
pub fn cross_validate_with<M, F>(
    table: &DataTable,
    plan: &FoldPlan,
    metric: SelectionMetric,
    fit: F,
) -> Result<CvResult>
where
    M: Classifier,
    F: Fn(&DataTable) -> Result<M> + Sync,
{
    if plan.assignments.len() != table.n_rows() {
        return Err(Error::LengthMismatch {
            left: plan.assignments.len(),
            right: table.n_rows(),
        });
    }
    let fold_scores = (0..plan.n_folds)
        .into_par_iter()
        .map(|fold| {
            let (train_idx, valid_idx) = plan.split(fold);
            let model = fit(&table.subset(&train_idx))?;
            let valid = table.subset(&valid_idx);
            let predictions = model.predict_all(&valid)?;
            metric.score(valid.labels(), &predictions)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
    Ok(CvResult {
        metric,
        fold_scores,
        mean,
    })
}

pub fn cross_validate(
    table: &DataTable,
    spec: &ModelSpec,
    scaling: ScalerKind,
    plan: &FoldPlan,
    metric: SelectionMetric,
) -> Result<CvResult> {
    cross_validate_with(table, plan, metric, |train| FittedModel::fit(spec, scaling, train))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<Value>,
}

/// A base specification plus named axes of candidate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub base: ModelSpec,
    pub axes: Vec<GridAxis>,
}

impl ParamGrid {
    pub fn new(base: ModelSpec) -> Self {
        Self { base, axes: Vec::new() }
    }

    pub fn axis(mut self, name: &str, values: Vec<Value>) -> Self {
        self.axes.push(GridAxis {
            name: name.to_string(),
            values,
        });
        self
    }

    /// Builds axes from a JSON object, keeping key order.
    pub fn from_map(base: ModelSpec, axes: &Map<String, Value>) -> Result<Self> {
        let mut grid = ParamGrid::new(base);
        for (name, values) in axes {
            let values = values
                .as_array()
                .ok_or_else(|| Error::InvalidParameter(format!("grid axis {name:?} must be a list")))?;
            grid = grid.axis(name, values.clone());
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every combination, first axis slowest, as override maps.
    pub fn combinations(&self) -> Vec<Map<String, Value>> {
        let mut out = vec![Map::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |v| {
                        let mut m = prefix.clone();
                        m.insert(axis.name.clone(), v.clone());
                        m
                    })
                })
                .collect();
        }
        out
    }
}

/// Search space shipped for each model; every axis contains the tuned value.
pub fn default_grid(kind: ModelKind) -> ParamGrid {
    let base = kind.tuned_spec();
    match kind {
        ModelKind::RandomForest => ParamGrid::new(base)
            .axis("n_estimators", vec![json!(100), json!(200), json!(300)])
            .axis("max_depth", vec![json!(4), json!(8), json!(16)]),
        ModelKind::DecisionTree => ParamGrid::new(base)
            .axis("criterion", vec![json!("gini"), json!("entropy")])
            .axis("max_depth", vec![json!(10), json!(30)])
            .axis("min_samples_leaf", vec![json!(1), json!(5)]),
        ModelKind::GradientBoosting => ParamGrid::new(base)
            .axis("learning_rate", vec![json!(0.01), json!(0.1)])
            .axis("max_depth", vec![json!(3), json!(4)])
            .axis("subsample", vec![json!(0.8), json!(1.0)]),
        ModelKind::Adaboost => ParamGrid::new(base)
            .axis("learning_rate", vec![json!(0.1), json!(0.5), json!(1.0)])
            .axis("n_estimators", vec![json!(50), json!(100)]),
        ModelKind::Knn => ParamGrid::new(base)
            .axis("n_neighbors", vec![json!(3), json!(5), json!(7)])
            .axis("weights", vec![json!("uniform"), json!("distance")]),
        ModelKind::Majority => ParamGrid::new(base),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboResult {
    pub params: Map<String, Value>,
    pub fold_scores: Vec<f64>,
    pub mean: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub metric: SelectionMetric,
    pub n_folds: usize,
    pub combinations: Vec<ComboResult>,
    pub best_index: usize,
    pub best_params: ModelSpec,
    pub best_mean: f64,
}

/// Cross-validates every grid combination and refits the winner on `table`.
pub fn grid_search(
    table: &DataTable,
    grid: &ParamGrid,
    plan: &FoldPlan,
    scaling: ScalerKind,
    metric: SelectionMetric,
) -> Result<(GridSearchResult, FittedModel)> {
    let result = search_grid(table, grid, plan, scaling, metric)?;
    let model = FittedModel::fit(&result.best_params, scaling, table)?;
    Ok((result, model))
}

/// Cross-validates every grid combination without refitting.
///
/// The winner has the highest mean score; ties keep the earliest
/// combination. Combinations whose spec or fit fails are recorded with their
/// error and skipped; if all fail the search fails.
pub fn search_grid(
    table: &DataTable,
    grid: &ParamGrid,
    plan: &FoldPlan,
    scaling: ScalerKind,
    metric: SelectionMetric,
) -> Result<GridSearchResult> {
    let combos = grid.combinations();
    if combos.is_empty() {
        return Err(Error::InvalidParameter("grid has an empty axis".into()));
    }
    let evaluated: Vec<(ComboResult, Option<ModelSpec>)> = combos
        .into_par_iter()
        .map(|params| {
            let outcome = grid
                .base
                .with_params(&params)
                .and_then(|spec| cross_validate(table, &spec, scaling, plan, metric).map(|cv| (spec, cv)));
            match outcome {
                Ok((spec, cv)) => (
                    ComboResult {
                        params,
                        fold_scores: cv.fold_scores,
                        mean: Some(cv.mean),
                        error: None,
                    },
                    Some(spec),
                ),
                Err(e) => (
                    ComboResult {
                        params,
                        fold_scores: Vec::new(),
                        mean: None,
                        error: Some(e.to_string()),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, (combo, _)) in evaluated.iter().enumerate() {
        if let Some(mean) = combo.mean {
            if best.is_none_or(|(_, b)| mean > b) {
                best = Some((i, mean));
            }
        }
    }
    let Some((best_index, best_mean)) = best else {
        let first = evaluated.iter().find_map(|(c, _)| c.error.clone()).unwrap_or_default();
        return Err(Error::GridFailed(first));
    };
    let best_params = evaluated[best_index].1.clone().expect("scored combos carry a spec");
    Ok(GridSearchResult {
        metric,
        n_folds: plan.n_folds,
        combinations: evaluated.into_iter().map(|(c, _)| c).collect(),
        best_index,
        best_params,
        best_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::imbalanced_line;
    use crate::tree::TreeConfig;

    fn line(n: usize) -> DataTable {
        imbalanced_line(n, 0.5)
    }

    #[test]
    fn fold_sizes() {
        let plan = make_folds(&line(10), 5, 1, false).unwrap();
        assert_eq!(plan.fold_sizes(), vec![2; 5]);
        let mut sizes = make_folds(&line(11), 5, 1, false).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);
    }

    #[test]
    fn stratified_fold_counts() {
        let t = line(100);
        let plan = make_folds(&t, 5, 9, true).unwrap();
        for f in 0..5 {
            let (_, valid) = plan.split(f);
            let ones = valid.iter().filter(|&&i| t.label(i) == 1).count();
            assert_eq!((valid.len() - ones, ones), (10, 10));
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            make_folds(&line(4), 5, 0, false),
            Err(Error::TooFewRows { .. })
        ));
        let t = imbalanced_line(20, 0.15);
        assert!(matches!(
            make_folds(&t, 5, 0, true),
            Err(Error::TooFewRows { rows: 3, .. })
        ));
        assert!(make_folds(&line(10), 1, 0, false).is_err());
    }

    #[test]
    fn majority_cv_is_class_share() {
        let t = imbalanced_line(50, 0.4);
        let plan = make_folds(&t, 5, 3, true).unwrap();
        let cv = cross_validate(
            &t,
            &ModelSpec::Majority,
            ScalerKind::None,
            &plan,
            SelectionMetric::Accuracy,
        )
        .unwrap();
        // every stratified fold holds 6 normal and 4 attack rows
        for s in &cv.fold_scores {
            assert!((s - 0.6).abs() < 1e-12);
        }
        assert!((cv.mean - 0.6).abs() < 1e-12);
        let again = cross_validate(
            &t,
            &ModelSpec::Majority,
            ScalerKind::None,
            &plan,
            SelectionMetric::Accuracy,
        )
        .unwrap();
        assert_eq!(cv, again);
    }

    #[test]
    fn separable_tree_cv_is_perfect() {
        let t = line(40);
        let plan = make_folds(&t, 5, 3, true).unwrap();
        let spec = ModelSpec::DecisionTree(TreeConfig::default());
        let cv = cross_validate(&t, &spec, ScalerKind::None, &plan, SelectionMetric::Accuracy).unwrap();
        assert_eq!(cv.mean, 1.0);
    }

    #[test]
    fn grid_iteration_order() {
        let g = ParamGrid::new(ModelSpec::Majority)
            .axis("a", vec![json!(1), json!(2)])
            .axis("b", vec![json!("x"), json!("y"), json!("z")]);
        let combos = g.combinations();
        assert_eq!(g.len(), 6);
        assert_eq!(combos[0]["a"], 1);
        assert_eq!(combos[0]["b"], "x");
        assert_eq!(combos[1]["b"], "y");
        assert_eq!(combos[3]["a"], 2);
        assert_eq!(combos[3]["b"], "x");
    }

    #[test]
    fn stump_beats_majority_baseline() {
        // min_samples_split above the fold size makes the first entry a lone leaf
        let t = line(40);
        let plan = make_folds(&t, 5, 2, true).unwrap();
        let grid = ParamGrid::new(ModelSpec::DecisionTree(TreeConfig {
            max_depth: Some(1),
            ..TreeConfig::default()
        }))
        .axis("min_samples_split", vec![json!(1000), json!(2)]);
        let (res, model) = grid_search(&t, &grid, &plan, ScalerKind::None, SelectionMetric::Accuracy).unwrap();
        assert_eq!(res.combinations[0].mean, Some(0.5));
        assert_eq!(res.combinations[1].mean, Some(1.0));
        assert_eq!(res.best_index, 1);
        assert_eq!(res.best_mean, 1.0);
        assert_eq!(model.predict_all(&t).unwrap(), t.labels());
    }

    #[test]
    fn duplicate_combos_first_wins() {
        let t = line(20);
        let plan = make_folds(&t, 4, 2, true).unwrap();
        let grid =
            ParamGrid::new(ModelSpec::DecisionTree(TreeConfig::default())).axis("max_depth", vec![json!(2), json!(2)]);
        let (res, _) = grid_search(&t, &grid, &plan, ScalerKind::None, SelectionMetric::Accuracy).unwrap();
        assert_eq!(res.best_index, 0);
    }

    #[test]
    fn failed_combos_are_recorded() {
        let t = line(20);
        let plan = make_folds(&t, 4, 2, true).unwrap();
        let grid =
            ParamGrid::new(ModelSpec::DecisionTree(TreeConfig::default())).axis("max_depth", vec![json!(0), json!(3)]);
        let (res, _) = grid_search(&t, &grid, &plan, ScalerKind::None, SelectionMetric::Accuracy).unwrap();
        assert!(res.combinations[0].error.is_some());
        assert_eq!(res.best_index, 1);

        let all_bad = ParamGrid::new(ModelSpec::DecisionTree(TreeConfig::default())).axis("max_depth", vec![json!(0)]);
        assert!(matches!(
            grid_search(&t, &all_bad, &plan, ScalerKind::None, SelectionMetric::Accuracy),
            Err(Error::GridFailed(_))
        ));
    }

    #[test]
    fn default_grids_contain_tuned_values() {
        for kind in ModelKind::STANDARD {
            let grid = default_grid(kind);
            let tuned = kind.tuned_spec().params();
            for axis in &grid.axes {
                let flat = match tuned.get(&axis.name) {
                    Some(v) => v.clone(),
                    None => tuned["tree"][&axis.name].clone(),
                };
                assert!(axis.values.contains(&flat), "{kind} {}", axis.name);
            }
            for combo in grid.combinations() {
                grid.base.with_params(&combo).unwrap();
            }
        }
    }
}
