//! Residual multilayer perceptron, written from scratch.
//!
//! Each hidden block runs linear -> batch norm -> leaky ReLU -> dropout,
//! with an identity skip added after the block whenever the source
//! activation has the same width. A linear head maps the last hidden
//! activation to one scalar.

pub mod loss;
pub mod matrix;
pub mod optim;
pub mod sched;
pub mod train;

pub use loss::composite_loss;
pub use matrix::Matrix;
pub use optim::{clip_gradients, AdamWConfig, AdamWState};
pub use sched::PlateauScheduler;
pub use train::{train_model, EpochStats, TrainConfig, TrainedModel};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("training batch has {got} samples; batch statistics need at least 2")]
    BatchTooSmall { got: usize },
    #[error("batch width {got} does not match network input width {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("prediction and target vectors are empty")]
    EmptyBatch,
    #[error("cache does not match this network and batch")]
    StaleCache,
    #[error("validation split is empty")]
    NoValidationData,
}

/// Shape and regularization hyperparameters of one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_width: usize,
    pub hidden_widths: Vec<usize>,
    /// Probability of dropping a unit during training, in [0, 1).
    pub dropout: f64,
    /// Negative-side slope of the activation, > 0.
    pub leaky_slope: f64,
    /// How many blocks an identity skip spans; 0 disables skips.
    pub residual_span: usize,
}

impl Architecture {
    pub fn new(input_width: usize, hidden_widths: Vec<usize>) -> Self {
        Architecture {
            input_width,
            hidden_widths,
            dropout: 0.2,
            leaky_slope: 0.01,
            residual_span: 1,
        }
    }

    /// Width of activation level `l` (0 = input, `l >= 1` = block output).
    fn level_width(&self, level: usize) -> usize {
        if level == 0 {
            self.input_width
        } else {
            self.hidden_widths[level - 1]
        }
    }

    /// Skip source level for the output of block `l`, if widths match.
    fn skip_source(&self, block: usize) -> Option<usize> {
        if self.residual_span == 0 {
            return None;
        }
        let out_level = block + 1;
        let src = out_level.checked_sub(self.residual_span)?;
        (self.level_width(src) == self.level_width(out_level)).then_some(src)
    }
}

/// One hidden block's parameters and batch-norm running statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub weight: Matrix, // input width x output width
    pub bias: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub arch: Architecture,
    pub blocks: Vec<Block>,
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
}

/// Whether batch statistics and dropout are live.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// He-style initialization: weights ~ N(0, 2 / fan_in), biases zero,
/// batch-norm scale 1 / shift 0, running stats (0, 1).
pub fn init_network(arch: &Architecture, rng: &mut ChaCha8Rng) -> Network {
    assert!(!arch.hidden_widths.is_empty(), "need at least one hidden layer");
    let mut blocks = Vec::with_capacity(arch.hidden_widths.len());
    let mut fan_in = arch.input_width;
    for &width in &arch.hidden_widths {
        let std = (2.0 / fan_in as f64).sqrt();
        let mut weight = Matrix::zeros(fan_in, width);
        for w in &mut weight.data {
            let z: f64 = StandardNormal.sample(rng);
            *w = std * z;
        }
        blocks.push(Block {
            weight,
            bias: vec![0.0; width],
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        });
        fan_in = width;
    }
    let std = (2.0 / fan_in as f64).sqrt();
    let head_weight = (0..fan_in)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        })
        .collect();
    Network { arch: arch.clone(), blocks, head_weight, head_bias: 0.0 }
}

/// Leaky rectifier value and derivative; the derivative at exactly 0 is 1.
pub fn leaky_relu(x: f64, slope: f64) -> (f64, f64) {
    if x >= 0.0 {
        (x, 1.0)
    } else {
        (slope * x, slope)
    }
}

/// Per-unit intermediates needed by the batch-norm backward pass.
#[derive(Clone, Debug)]
pub struct BatchNormCache {
    pub xhat: Matrix,
    pub inv_std: Vec<f64>,
}

/// Training-mode batch norm: normalize by batch statistics (biased
/// variance), update running statistics (unbiased variance) with momentum.
pub fn batch_norm_train(
    z: &Matrix,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &mut [f64],
    running_var: &mut [f64],
    momentum: f64,
) -> Result<(Matrix, BatchNormCache), NnError> {
    let m = z.rows;
    if m < 2 {
        return Err(NnError::BatchTooSmall { got: m });
    }
    let w = z.cols;
    let mut out = Matrix::zeros(m, w);
    let mut xhat = Matrix::zeros(m, w);
    let mut inv_std = vec![0.0; w];
    for j in 0..w {
        let mut mean = 0.0;
        for i in 0..m {
            mean += z.at(i, j);
        }
        mean /= m as f64;
        let mut var = 0.0;
        for i in 0..m {
            let d = z.at(i, j) - mean;
            var += d * d;
        }
        let biased = var / m as f64;
        let unbiased = var / (m as f64 - 1.0);
        let is = 1.0 / (biased + BN_EPS).sqrt();
        inv_std[j] = is;
        for i in 0..m {
            let xh = (z.at(i, j) - mean) * is;
            xhat.data[i * w + j] = xh;
            out.data[i * w + j] = gamma[j] * xh + beta[j];
        }
        running_mean[j] = momentum * running_mean[j] + (1.0 - momentum) * mean;
        running_var[j] = momentum * running_var[j] + (1.0 - momentum) * unbiased;
    }
    Ok((out, BatchNormCache { xhat, inv_std }))
}

/// Evaluation-mode batch norm: normalize by the running statistics.
pub fn batch_norm_eval(
    z: &Matrix,
    gamma: &[f64],
    beta: &[f64],
    running_mean: &[f64],
    running_var: &[f64],
) -> Matrix {
    let (m, w) = (z.rows, z.cols);
    let mut out = Matrix::zeros(m, w);
    for j in 0..w {
        let is = 1.0 / (running_var[j] + BN_EPS).sqrt();
        for i in 0..m {
            out.data[i * w + j] = gamma[j] * (z.at(i, j) - running_mean[j]) * is + beta[j];
        }
    }
    out
}

/// Batch-norm backward through the batch-statistic path.
///
/// Returns (dz, dgamma, dbeta).
pub fn batch_norm_backward(
    grad_out: &Matrix,
    cache: &BatchNormCache,
    gamma: &[f64],
) -> (Matrix, Vec<f64>, Vec<f64>) {
    let (m, w) = (grad_out.rows, grad_out.cols);
    let mut dgamma = vec![0.0; w];
    let mut dbeta = vec![0.0; w];
    for i in 0..m {
        for j in 0..w {
            let g = grad_out.at(i, j);
            dbeta[j] += g;
            dgamma[j] += g * cache.xhat.at(i, j);
        }
    }
    let mut dz = Matrix::zeros(m, w);
    let mf = m as f64;
    for i in 0..m {
        for j in 0..w {
            let g = grad_out.at(i, j);
            dz.data[i * w + j] = gamma[j] * cache.inv_std[j] / mf
                * (mf * g - dbeta[j] - cache.xhat.at(i, j) * dgamma[j]);
        }
    }
    (dz, dgamma, dbeta)
}

/// Everything the backward pass needs from one training forward.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Activation levels 0..=L; level 0 is the input batch.
    activations: Vec<Matrix>,
    blocks: Vec<BlockCache>,
    batch_rows: usize,
}

#[derive(Clone, Debug)]
struct BlockCache {
    bn: BatchNormCache,
    /// Pre-activation input to the rectifier (batch-norm output).
    act_in: Matrix,
    /// Inverted-dropout scale per unit (0 or 1/(1-p)); None when inactive.
    mask: Option<Matrix>,
    skip_source: Option<usize>,
}

/// Gradients for every trainable parameter, mirroring [`Network`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGrads {
    pub blocks: Vec<BlockGrads>,
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockGrads {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Network {
    /// Training forward pass: batch statistics, live dropout, full cache.
    ///
    /// Updates the batch-norm running statistics as a side effect. The RNG
    /// is consumed only when the dropout rate is nonzero.
    pub fn forward_train(
        &mut self,
        batch: &Matrix,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<f64>, ForwardCache), NnError> {
        if batch.cols != self.arch.input_width {
            return Err(NnError::DimensionMismatch { expected: self.arch.input_width, got: batch.cols });
        }
        if batch.rows < 2 {
            return Err(NnError::BatchTooSmall { got: batch.rows });
        }
        let m = batch.rows;
        let rate = self.arch.dropout;
        let slope = self.arch.leaky_slope;
        let mut activations = vec![batch.clone()];
        let mut block_caches = Vec::with_capacity(self.blocks.len());

        for (l, block) in self.blocks.iter_mut().enumerate() {
            let h = activations.last().unwrap();
            let mut z = h.matmul(&block.weight);
            for i in 0..m {
                for (j, &b) in block.bias.iter().enumerate() {
                    z.data[i * z.cols + j] += b;
                }
            }
            let (bn_out, bn_cache) = batch_norm_train(
                &z,
                &block.gamma,
                &block.beta,
                &mut block.running_mean,
                &mut block.running_var,
                BN_MOMENTUM,
            )?;
            let mut out = Matrix::zeros(m, bn_out.cols);
            for (o, &x) in out.data.iter_mut().zip(&bn_out.data) {
                *o = leaky_relu(x, slope).0;
            }
            let mask = if rate > 0.0 {
                let keep = 1.0 - rate;
                let mut mask = Matrix::zeros(m, out.cols);
                for (mv, o) in mask.data.iter_mut().zip(out.data.iter_mut()) {
                    let keep_unit = rng.random::<f64>() >= rate;
                    *mv = if keep_unit { 1.0 / keep } else { 0.0 };
                    *o *= *mv;
                }
                Some(mask)
            } else {
                None
            };
            let skip_source = self.arch.skip_source(l);
            if let Some(src) = skip_source {
                let skip = &activations[src];
                for (o, &s) in out.data.iter_mut().zip(&skip.data) {
                    *o += s;
                }
            }
            block_caches.push(BlockCache { bn: bn_cache, act_in: bn_out, mask, skip_source });
            activations.push(out);
        }

        let last = activations.last().unwrap();
        let preds = (0..m)
            .map(|i| {
                let row = last.row(i);
                row.iter().zip(&self.head_weight).map(|(&h, &w)| h * w).sum::<f64>() + self.head_bias
            })
            .collect();
        Ok((preds, ForwardCache { activations, blocks: block_caches, batch_rows: m }))
    }

    /// Evaluation forward pass: running statistics, no dropout, no cache.
    /// A pure function of (parameters, input).
    pub fn forward_eval(&self, batch: &Matrix) -> Result<Vec<f64>, NnError> {
        if batch.cols != self.arch.input_width {
            return Err(NnError::DimensionMismatch { expected: self.arch.input_width, got: batch.cols });
        }
        let m = batch.rows;
        let slope = self.arch.leaky_slope;
        let mut activations = vec![batch.clone()];
        for (l, block) in self.blocks.iter().enumerate() {
            let h = activations.last().unwrap();
            let mut z = h.matmul(&block.weight);
            for i in 0..m {
                for (j, &b) in block.bias.iter().enumerate() {
                    z.data[i * z.cols + j] += b;
                }
            }
            let bn_out =
                batch_norm_eval(&z, &block.gamma, &block.beta, &block.running_mean, &block.running_var);
            let mut out = Matrix::zeros(m, bn_out.cols);
            for (o, &x) in out.data.iter_mut().zip(&bn_out.data) {
                *o = leaky_relu(x, slope).0;
            }
            if let Some(src) = self.arch.skip_source(l) {
                let skip = &activations[src];
                for (o, &s) in out.data.iter_mut().zip(&skip.data) {
                    *o += s;
                }
            }
            activations.push(out);
        }
        let last = activations.last().unwrap();
        Ok((0..m)
            .map(|i| {
                let row = last.row(i);
                row.iter().zip(&self.head_weight).map(|(&h, &w)| h * w).sum::<f64>() + self.head_bias
            })
            .collect())
    }

    /// Exact reverse-mode gradients of a scalar loss, given dLoss/dPred.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        pred_grad: &[f64],
    ) -> Result<NetworkGrads, NnError> {
        if cache.blocks.len() != self.blocks.len()
            || pred_grad.len() != cache.batch_rows
            || cache.activations.first().map(|a| a.cols) != Some(self.arch.input_width)
        {
            return Err(NnError::StaleCache);
        }
        let m = cache.batch_rows;
        let num_levels = cache.activations.len();
        let slope = self.arch.leaky_slope;

        // Gradient accumulator per activation level; skips add into
        // earlier levels directly.
        let mut level_grads: Vec<Matrix> = cache
            .activations
            .iter()
            .map(|a| Matrix::zeros(a.rows, a.cols))
            .collect();

        // Head: pred_i = h_L[i] . w + b
        let last = &cache.activations[num_levels - 1];
        let mut head_weight = vec![0.0; self.head_weight.len()];
        let mut head_bias = 0.0;
        for (i, &g) in pred_grad.iter().enumerate() {
            head_bias += g;
            let row = last.row(i);
            for (hw, &h) in head_weight.iter_mut().zip(row) {
                *hw += g * h;
            }
            let out = &mut level_grads[num_levels - 1];
            for (j, &w) in self.head_weight.iter().enumerate() {
                out.data[i * out.cols + j] += g * w;
            }
        }

        let mut block_grads: Vec<Option<BlockGrads>> = vec![None; self.blocks.len()];
        for l in (0..self.blocks.len()).rev() {
            let bc = &cache.blocks[l];
            let g_out = std::mem::replace(&mut level_grads[l + 1], Matrix::zeros(0, 0));
            if let Some(src) = bc.skip_source {
                let dst = &mut level_grads[src];
                for (d, &g) in dst.data.iter_mut().zip(&g_out.data) {
                    *d += g;
                }
            }
            // Dropout then rectifier.
            let mut g_act = g_out;
            if let Some(mask) = &bc.mask {
                for (g, &mv) in g_act.data.iter_mut().zip(&mask.data) {
                    *g *= mv;
                }
            }
            for (g, &x) in g_act.data.iter_mut().zip(&bc.act_in.data) {
                *g *= leaky_relu(x, slope).1;
            }
            let block = &self.blocks[l];
            let (dz, dgamma, dbeta) = batch_norm_backward(&g_act, &bc.bn, &block.gamma);
            let input = &cache.activations[l];
            let weight = input.matmul_at_b(&dz);
            let mut bias = vec![0.0; dz.cols];
            for i in 0..m {
                for (b, &d) in bias.iter_mut().zip(dz.row(i)) {
                    *b += d;
                }
            }
            let g_in = dz.matmul_a_bt(&block.weight);
            let dst = &mut level_grads[l];
            for (d, &g) in dst.data.iter_mut().zip(&g_in.data) {
                *d += g;
            }
            block_grads[l] = Some(BlockGrads { weight, bias, gamma: dgamma, beta: dbeta });
        }

        Ok(NetworkGrads {
            blocks: block_grads.into_iter().map(Option::unwrap).collect(),
            head_weight,
            head_bias,
        })
    }

    /// All trainable parameters flattened in a fixed order. Running
    /// statistics are not trainable and are excluded.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend_from_slice(&b.weight.data);
            out.extend_from_slice(&b.bias);
            out.extend_from_slice(&b.gamma);
            out.extend_from_slice(&b.beta);
        }
        out.extend_from_slice(&self.head_weight);
        out.push(self.head_bias);
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut at = 0usize;
        let mut take = |n: usize| {
            let s = &flat[at..at + n];
            at += n;
            s
        };
        for b in &mut self.blocks {
            let n = b.weight.data.len();
            b.weight.data.copy_from_slice(take(n));
            let n = b.bias.len();
            b.bias.copy_from_slice(take(n));
            let n = b.gamma.len();
            b.gamma.copy_from_slice(take(n));
            let n = b.beta.len();
            b.beta.copy_from_slice(take(n));
        }
        let n = self.head_weight.len();
        self.head_weight.copy_from_slice(take(n));
        self.head_bias = take(1)[0];
        debug_assert_eq!(at, flat.len());
    }
}

impl NetworkGrads {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend_from_slice(&b.weight.data);
            out.extend_from_slice(&b.bias);
            out.extend_from_slice(&b.gamma);
            out.extend_from_slice(&b.beta);
        }
        out.extend_from_slice(&self.head_weight);
        out.push(self.head_bias);
        out
    }
}


#[cfg(test)]
mod gradcheck {
    use super::*;
    use crate::seed;
    use rand::Rng;

    pub(crate) fn loss_at(
        template: &Network,
        flat: &[f64],
        batch: &Matrix,
        targets: &[f64],
        alpha: f64,
        delta: f64,
    ) -> f64 {
        let mut net = template.clone();
        net.set_flat_params(flat);
        let mut rng = seed::rng(0, &[0]); // untouched at dropout 0
        let (preds, _) = net.forward_train(batch, &mut rng).unwrap();
        composite_loss(&preds, targets, alpha, delta).unwrap().0
    }

    /// Analytic gradients vs central finite differences for every
    /// parameter of one network.
    pub(crate) fn check_network(net: &mut Network, batch: &Matrix, targets: &[f64]) -> (f64, usize) {
        let (alpha, delta) = (0.5, 1.0);
        let frozen = net.clone(); // running stats fixed for all FD evals
        let mut rng = seed::rng(0, &[0]);
        let (preds, cache) = net.forward_train(batch, &mut rng).unwrap();
        let (_, pred_grad) = composite_loss(&preds, targets, alpha, delta).unwrap();
        let analytic = net.backward(&cache, &pred_grad).unwrap().flat();
        let base = frozen.flat_params();
        let mut worst = 0.0f64;
        let mut worst_idx = 0;
        let eps = 1e-5;
        for i in 0..base.len() {
            let mut up = base.clone();
            up[i] += eps;
            let mut dn = base.clone();
            dn[i] -= eps;
            let fd = (loss_at(&frozen, &up, batch, targets, alpha, delta)
                - loss_at(&frozen, &dn, batch, targets, alpha, delta))
                / (2.0 * eps);
            let denom = analytic[i].abs().max(fd.abs()).max(1e-6 / 1e-4);
            let rel = (analytic[i] - fd).abs() / denom;
            if rel > worst {
                worst = rel;
                worst_idx = i;
            }
        }
        (worst, worst_idx)
    }

    fn random_net(trial: u64) -> (Network, Matrix, Vec<f64>) {
        let mut rng = seed::rng(90, &[trial]);
        let input = rng.random_range(2..=6);
        let depth = rng.random_range(1..=4);
        let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(3..=8)).collect();
        let span = rng.random_range(0..=2);
        let arch = Architecture {
            input_width: input,
            hidden_widths: widths,
            dropout: 0.0,
            leaky_slope: 0.01,
            residual_span: span,
        };
        let net = init_network(&arch, &mut seed::rng(91, &[trial]));
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..input).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let targets: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        (net, Matrix::from_rows(&rows), targets)
    }

    #[test]
    fn gradients_match_finite_differences() {
        for trial in 0..5 {
            let (mut net, batch, targets) = random_net(trial);
            let (worst, idx) = check_network(&mut net, &batch, &targets);
            assert!(worst < 1e-4, "trial {trial}: worst rel err {worst} at flat index {idx}");
        }
    }

    #[test]
    fn zero_loss_gradient_gives_zero_parameter_gradients() {
        let (mut net, batch, targets) = random_net(99);
        let mut rng = seed::rng(0, &[0]);
        let (_, cache) = net.forward_train(&batch, &mut rng).unwrap();
        let grads = net.backward(&cache, &vec![0.0; targets.len()]).unwrap();
        assert!(grads.flat().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn skip_changes_gradients_below_it() {
        // Same parameters, same batch; with the skip enabled the identity
        // path routes extra gradient into the earlier block.
        let arch_skip = Architecture {
            input_width: 3,
            hidden_widths: vec![4, 4],
            dropout: 0.0,
            leaky_slope: 0.01,
            residual_span: 1,
        };
        let arch_plain = Architecture { residual_span: 0, ..arch_skip.clone() };
        let with_skip = init_network(&arch_skip, &mut seed::rng(92, &[0]));
        let mut plain = with_skip.clone();
        plain.arch = arch_plain;

        let batch = Matrix::from_rows(&[
            vec![0.4, -0.9, 1.3],
            vec![-1.2, 0.8, 0.2],
            vec![0.1, 0.5, -0.7],
            vec![1.0, -0.3, 0.6],
        ]);
        let targets = vec![0.5, -0.25, 1.5, 0.0];

        // Both configurations pass the finite-difference check...
        let (worst_a, _) = check_network(&mut with_skip.clone(), &batch, &targets);
        let (worst_b, _) = check_network(&mut plain.clone(), &batch, &targets);
        assert!(worst_a < 1e-4 && worst_b < 1e-4);

        // ...and the first block's weight gradients differ between them.
        let grads_of = |net: &Network| {
            let mut n = net.clone();
            let mut rng = seed::rng(0, &[0]);
            let (preds, cache) = n.forward_train(&batch, &mut rng).unwrap();
            let (_, pg) = composite_loss(&preds, &targets, 0.5, 1.0).unwrap();
            n.backward(&cache, &pg).unwrap()
        };
        let ga = grads_of(&with_skip);
        let gb = grads_of(&plain);
        let diff: f64 = ga.blocks[0]
            .weight
            .data
            .iter()
            .zip(&gb.blocks[0].weight.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff > 1e-8, "skip should alter gradient flow below it (diff {diff})");
    }
}
