//! Greedy best-split regression trees with variance impurity.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ForestError;

/// Training controls shared by single trees and forests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features scanned per split; `None` means `ceil(p / 3)`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: None,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Fraction of root samples reaching this node.
        sample_fraction: f64,
        /// Variance reduction achieved by the split.
        impurity_decrease: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

/// Mean and biased variance of the targets selected by `idx`.
fn target_stats(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let var = idx.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum::<f64>() / n;
    (mean, var.max(0.0))
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Scan candidate features for the split with the largest variance
/// reduction. Features are visited in ascending index order and thresholds
/// in ascending value order, with strict improvement required, so numeric
/// ties resolve to the lowest feature index, then the lowest threshold.
fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
    parent_var: f64,
) -> Option<BestSplit> {
    let n = idx.len();
    let mut best: Option<BestSplit> = None;
    let mut order: Vec<usize> = Vec::with_capacity(n);

    for &feature in features {
        order.clear();
        order.extend_from_slice(idx);
        order.sort_by(|&a, &b| x[a][feature].partial_cmp(&x[b][feature]).unwrap());

        // Prefix sums over the sorted targets drive each candidate's child
        // variances in O(1).
        let mut sum_left = 0.0;
        let mut sumsq_left = 0.0;
        let total_sum: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sumsq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();

        for split_at in 1..n {
            let prev = order[split_at - 1];
            sum_left += y[prev];
            sumsq_left += y[prev] * y[prev];
            let (v_prev, v_here) = (x[prev][feature], x[order[split_at]][feature]);
            if v_prev == v_here {
                continue; // not a boundary between distinct values
            }
            let nl = split_at;
            let nr = n - split_at;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let mean_l = sum_left / nl as f64;
            let var_l = (sumsq_left / nl as f64 - mean_l * mean_l).max(0.0);
            let sum_r = total_sum - sum_left;
            let mean_r = sum_r / nr as f64;
            let var_r = ((total_sumsq - sumsq_left) / nr as f64 - mean_r * mean_r).max(0.0);
            let weighted = (nl as f64 * var_l + nr as f64 * var_r) / n as f64;
            let gain = parent_var - weighted;
            if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                best = Some(BestSplit { feature, threshold: 0.5 * (v_prev + v_here), gain });
            }
        }
    }
    best
}

/// Fit one tree on the samples selected by `idx`.
///
/// Consumes the RNG for per-split feature subsets; a fixed RNG state gives
/// a bit-identical tree.
pub fn fit_tree(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> Result<RegressionTree, ForestError> {
    if idx.len() < 2 || x.is_empty() {
        return Err(ForestError::EmptyData);
    }
    let n_features = x[0].len();
    let m_try = params
        .features_per_split
        .unwrap_or_else(|| n_features.div_ceil(3))
        .clamp(1, n_features);
    let mut nodes = Vec::new();
    let root_count = idx.len();
    grow(x, y, idx, params, rng, &mut nodes, 0, root_count, m_try, n_features);
    Ok(RegressionTree { nodes, n_features })
}

#[allow(clippy::too_many_arguments)]
fn grow(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<Node>,
    depth: usize,
    root_count: usize,
    m_try: usize,
    n_features: usize,
) -> usize {
    let (mean, var) = target_stats(y, idx);
    let at_depth_limit = params.max_depth.is_some_and(|d| depth >= d);
    let too_small = idx.len() < 2 * params.min_samples_leaf || idx.len() < 2;
    if at_depth_limit || too_small || var == 0.0 {
        nodes.push(Node::Leaf { value: mean });
        return nodes.len() - 1;
    }

    // Sorted so that tie-breaking is by feature index, independent of the
    // sampling order.
    let mut features: Vec<usize> = sample(rng, n_features, m_try).into_iter().collect();
    features.sort_unstable();

    let Some(split) = best_split(x, y, idx, &features, params.min_samples_leaf, var) else {
        nodes.push(Node::Leaf { value: mean });
        return nodes.len() - 1;
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x[i][split.feature] <= split.threshold);

    let slot = nodes.len();
    nodes.push(Node::Leaf { value: mean }); // placeholder until children exist
    let left = grow(x, y, &left_idx, params, rng, nodes, depth + 1, root_count, m_try, n_features);
    let right = grow(x, y, &right_idx, params, rng, nodes, depth + 1, root_count, m_try, n_features);
    nodes[slot] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
        sample_fraction: idx.len() as f64 / root_count as f64,
        impurity_decrease: split.gain,
    };
    slot
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> Result<f64, ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Leaf { value } => return Ok(*value),
                Node::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Accumulate `p(n) * delta_n` per split feature into `out`.
    pub(crate) fn accumulate_importance(&self, out: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, sample_fraction, impurity_decrease, .. } = node {
                out[*feature] += sample_fraction * impurity_decrease;
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
