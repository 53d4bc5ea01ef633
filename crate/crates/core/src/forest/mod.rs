//! Random-forest regression with impurity-based feature importance.
//!
//! Doubles as the feature-selection mechanism (top-k by mean importance
//! over repeated runs) and as a baseline regressor for the evaluation
//! harness.

pub mod tree;

pub use tree::{fit_tree, ForestParams, Node, RegressionTree};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("need at least two samples to fit")]
    EmptyData,
    #[error("feature vector has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k = {k} exceeds the {available} available features")]
    KTooLarge { k: usize, available: usize },
}

/// A trained forest plus everything needed to refit it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
    pub tree_seeds: Vec<u64>,
    pub params: ForestParams,
}

const TREE_TAG: u64 = 0x54524545; // "TREE"

/// Fit `params.n_trees` trees, each on its own bootstrap resample.
///
/// Per-tree RNG streams are derived from the seed, so parallel and serial
/// training produce identical forests.
pub fn fit_forest(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
    master_seed: u64,
) -> Result<Forest, ForestError> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(ForestError::EmptyData);
    }
    let n = x.len();
    let tree_seeds: Vec<u64> =
        (0..params.n_trees).map(|t| seed::derive(master_seed, &[TREE_TAG, t as u64])).collect();
    let trees: Vec<RegressionTree> = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree(x, y, &idx, params, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    Ok(Forest { trees, tree_seeds, params: params.clone() })
}

use rand_chacha::rand_core::SeedableRng;

impl Forest {
    /// Mean prediction over all trees.
    pub fn predict(&self, x: &[f64]) -> Result<f64, ForestError> {
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict(x)?;
        }
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, ForestError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }
}

/// Importance of every feature from one trained forest.
#[derive(Clone, Debug, PartialEq)]
pub struct RunImportance {
    /// Normalized to unit sum, or all zero when the run is degenerate.
    pub values: Vec<f64>,
    /// True when no split reduced impurity (e.g. constant target).
    pub degenerate: bool,
}

/// Mean decrease in impurity: `I_j = (1/N_T) * sum_t sum_{n in N_t^j} p(n) * delta_n`,
/// normalized to unit sum. Features never split on get zero.
pub fn forest_importance(forest: &Forest) -> RunImportance {
    let p = forest.trees.first().map_or(0, |t| t.n_features);
    let mut values = vec![0.0; p];
    for tree in &forest.trees {
        tree.accumulate_importance(&mut values);
    }
    for v in &mut values {
        *v /= forest.trees.len() as f64;
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return RunImportance { values: vec![0.0; p], degenerate: true };
    }
    for v in &mut values {
        *v /= total;
    }
    RunImportance { values, degenerate: false }
}

/// Importances averaged over repeated runs plus the selected feature list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub mean: Vec<f64>,
    /// Sample standard deviation over runs (zero when runs == 1).
    pub std: Vec<f64>,
    pub runs: usize,
    pub degenerate_runs: usize,
    /// Top-k feature indices, sorted by mean importance descending;
    /// ties break toward the lower column index.
    pub selected: Vec<usize>,
}

const RUN_TAG: u64 = 0x53454c; // "SEL"

/// Fit `runs` forests on distinct derived seeds, average the importances,
/// and keep the top `k` features.
pub fn select_features(
    x: &[Vec<f64>],
    y: &[f64],
    k: usize,
    runs: usize,
    params: &ForestParams,
    master_seed: u64,
) -> Result<ImportanceReport, ForestError> {
    if x.is_empty() {
        return Err(ForestError::EmptyData);
    }
    let p = x[0].len();
    if k == 0 || k > p {
        return Err(ForestError::KTooLarge { k, available: p });
    }
    let per_run: Vec<RunImportance> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let forest = fit_forest(x, y, params, seed::derive(master_seed, &[RUN_TAG, run as u64]))?;
            Ok(forest_importance(&forest))
        })
        .collect::<Result<_, ForestError>>()?;

    let degenerate_runs = per_run.iter().filter(|r| r.degenerate).count();
    let mut mean = vec![0.0; p];
    for run in &per_run {
        for (m, v) in mean.iter_mut().zip(&run.values) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= runs as f64;
    }
    let mut std = vec![0.0; p];
    if runs > 1 {
        for run in &per_run {
            for (s, (v, m)) in std.iter_mut().zip(run.values.iter().zip(&mean)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut std {
            *s = (*s / (runs as f64 - 1.0)).sqrt();
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| mean[b].partial_cmp(&mean[a]).unwrap().then(a.cmp(&b)));
    order.truncate(k);
    Ok(ImportanceReport { mean, std, runs, degenerate_runs, selected: order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic_linear(n: usize, p: usize, noise: f64, seed_val: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = seed::rng(seed_val, &[1]);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| {
                let e: f64 = StandardNormal.sample(&mut rng);
                3.0 * r[0] - 2.0 * r[1] + 0.5 * r[2] + noise * e
            })
            .collect();
        (x, y)
    }

    #[test]
    fn single_tree_forest_equals_fit_tree() {
        let (x, y) = synthetic_linear(40, 3, 0.0, 5);
        let params = ForestParams { n_trees: 1, bootstrap: false, ..ForestParams::default() };
        let forest = fit_forest(&x, &y, &params, 77).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(forest.tree_seeds[0]);
        let idx: Vec<usize> = (0..x.len()).collect();
        let tree = fit_tree(&x, &y, &idx, &params, &mut rng).unwrap();
        assert_eq!(forest.trees[0], tree);
    }

    #[test]
    fn forest_of_identical_trees_equals_single_tree() {
        let (x, y) = synthetic_linear(30, 3, 0.0, 19);
        let params = ForestParams { n_trees: 1, bootstrap: false, ..ForestParams::default() };
        let single = fit_forest(&x, &y, &params, 44).unwrap();
        let tripled = Forest {
            trees: vec![single.trees[0].clone(); 3],
            tree_seeds: vec![single.tree_seeds[0]; 3],
            params,
        };
        for row in &x {
            let a = single.predict(row).unwrap();
            let b = tripled.predict(row).unwrap();
            // summing v three times and dividing by 3 costs at most an ulp
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn same_seed_gives_identical_forests() {
        let (x, y) = synthetic_linear(60, 4, 0.1, 6);
        let params = ForestParams { n_trees: 16, ..ForestParams::default() };
        let a = fit_forest(&x, &y, &params, 123).unwrap();
        let b = fit_forest(&x, &y, &params, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overfit_forest_reproduces_training_targets() {
        let (x, y) = synthetic_linear(50, 3, 0.2, 7);
        let params = ForestParams {
            n_trees: 3,
            min_samples_leaf: 1,
            features_per_split: Some(3),
            bootstrap: false,
            ..ForestParams::default()
        };
        let forest = fit_forest(&x, &y, &params, 9).unwrap();
        for (row, want) in x.iter().zip(&y) {
            let got = forest.predict(row).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn held_out_r2_on_linear_target() {
        let (x, y) = synthetic_linear(500, 6, 0.3, 8);
        let (x_train, x_test) = x.split_at(375);
        let (y_train, y_test) = y.split_at(375);
        let params = ForestParams { n_trees: 100, ..ForestParams::default() };
        let forest = fit_forest(x_train, y_train, &params, 10).unwrap();
        let preds = forest.predict_batch(x_test).unwrap();
        let mean = y_test.iter().sum::<f64>() / y_test.len() as f64;
        let ss_res: f64 = preds.iter().zip(y_test).map(|(p, t)| (p - t).powi(2)).sum();
        let ss_tot: f64 = y_test.iter().map(|t| (t - mean).powi(2)).sum();
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(r2 > 0.7, "r2 = {r2}");
    }

    #[test]
    fn planted_feature_dominates_importance() {
        let mut rng = seed::rng(11, &[2]);
        let n = 300;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 5.0 * r[3]).collect();
        // Scan all features per split: with the informative feature always
        // in view, noise splits cannot accumulate importance.
        let params =
            ForestParams { n_trees: 50, features_per_split: Some(10), ..ForestParams::default() };
        let forest = fit_forest(&x, &y, &params, 3).unwrap();
        let imp = forest_importance(&forest);
        assert!(!imp.degenerate);
        assert!(imp.values[3] > 0.9, "planted importance {}", imp.values[3]);
        let total: f64 = imp.values.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_target_flags_degenerate() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, -(i as f64)]).collect();
        let y = vec![2.5; 20];
        let forest = fit_forest(&x, &y, &ForestParams::default(), 4).unwrap();
        let imp = forest_importance(&forest);
        assert!(imp.degenerate);
        assert!(imp.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_built_tree_importance_matches_arithmetic() {
        // Root (8 samples, fraction 1, decrease 2.0) splits on feature 1;
        // its left child (4 samples, fraction 0.5, decrease 0.8) splits on
        // feature 0. Raw importances: f0 = 0.4, f1 = 2.0; normalized
        // f0 = 0.4/2.4, f1 = 2.0/2.4.
        let tree = RegressionTree {
            nodes: vec![
                Node::Split {
                    feature: 1,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                    sample_fraction: 1.0,
                    impurity_decrease: 2.0,
                },
                Node::Split {
                    feature: 0,
                    threshold: 0.0,
                    left: 3,
                    right: 4,
                    sample_fraction: 0.5,
                    impurity_decrease: 0.8,
                },
                Node::Leaf { value: 1.0 },
                Node::Leaf { value: 2.0 },
                Node::Leaf { value: 3.0 },
            ],
            n_features: 2,
        };
        let forest = Forest {
            trees: vec![tree],
            tree_seeds: vec![0],
            params: ForestParams { n_trees: 1, ..ForestParams::default() },
        };
        let imp = forest_importance(&forest);
        assert!((imp.values[0] - 0.4 / 2.4).abs() < 1e-12);
        assert!((imp.values[1] - 2.0 / 2.4).abs() < 1e-12);
    }

    #[test]
    fn select_all_features_orders_by_importance() {
        let (x, y) = synthetic_linear(200, 5, 0.1, 12);
        let params = ForestParams { n_trees: 40, ..ForestParams::default() };
        let report = select_features(&x, &y, 5, 3, &params, 5).unwrap();
        assert_eq!(report.selected.len(), 5);
        for w in report.selected.windows(2) {
            assert!(report.mean[w[0]] >= report.mean[w[1]]);
        }
        // Strongest linear coefficient should rank first.
        assert_eq!(report.selected[0], 0);
    }

    #[test]
    fn k_too_large_is_rejected() {
        let (x, y) = synthetic_linear(30, 3, 0.1, 13);
        let err = select_features(&x, &y, 4, 2, &ForestParams::default(), 5).unwrap_err();
        assert!(matches!(err, ForestError::KTooLarge { k: 4, available: 3 }));
    }

    #[test]
    fn importance_is_label_equivariant_under_column_permutation() {
        // Large leaves keep split nodes big; at big nodes two features
        // essentially never induce the same partition, so no exact gain
        // ties arise and the index-based tie-break stays out of play.
        let (x, y) = synthetic_linear(200, 4, 0.1, 14);
        let params = ForestParams {
            n_trees: 30,
            features_per_split: Some(4),
            min_samples_leaf: 12,
            ..ForestParams::default()
        };
        let report = select_features(&x, &y, 4, 2, &params, 21).unwrap();
        // Swap columns 0 and 2 everywhere. With all features scanned per
        // split the same trees are learned up to relabeling.
        let swapped: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut s = r.clone();
                s.swap(0, 2);
                s
            })
            .collect();
        let report_swapped = select_features(&swapped, &y, 4, 2, &params, 21).unwrap();
        assert!((report.mean[0] - report_swapped.mean[2]).abs() < 1e-12);
        assert!((report.mean[2] - report_swapped.mean[0]).abs() < 1e-12);
        assert!((report.mean[1] - report_swapped.mean[1]).abs() < 1e-12);
    }

    #[test]
    fn monotone_feature_rescale_preserves_structure_and_predictions() {
        let (x, y) = synthetic_linear(80, 3, 0.2, 15);
        let params = ForestParams { n_trees: 8, ..ForestParams::default() };
        let forest_a = fit_forest(&x, &y, &params, 31).unwrap();
        let rescaled: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![r[0].exp(), r[1], r[2]])
            .collect();
        let forest_b = fit_forest(&rescaled, &y, &params, 31).unwrap();
        for (ta, tb) in forest_a.trees.iter().zip(&forest_b.trees) {
            for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
                match (na, nb) {
                    (Node::Split { feature: fa, .. }, Node::Split { feature: fb, .. }) => {
                        assert_eq!(fa, fb)
                    }
                    (Node::Leaf { value: va }, Node::Leaf { value: vb }) => assert_eq!(va, vb),
                    other => panic!("structural mismatch: {other:?}"),
                }
            }
        }
        for (a, b) in x.iter().zip(&rescaled) {
            assert_eq!(forest_a.predict(a).unwrap(), forest_b.predict(b).unwrap());
        }
    }

    #[test]
    fn training_mse_non_increasing_in_depth() {
        let (x, y) = synthetic_linear(120, 4, 0.5, 16);
        let mse_at = |depth: usize| {
            let params = ForestParams {
                n_trees: 1,
                max_depth: Some(depth),
                min_samples_leaf: 1,
                bootstrap: false,
                features_per_split: Some(4),
            };
            let forest = fit_forest(&x, &y, &params, 8).unwrap();
            let preds = forest.predict_batch(&x).unwrap();
            preds.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64
        };
        let mut prev = f64::INFINITY;
        for depth in [1, 2, 4, 8, 16] {
            let mse = mse_at(depth);
            assert!(mse <= prev + 1e-12, "depth {depth}: {mse} > {prev}");
            prev = mse;
        }
    }
}
