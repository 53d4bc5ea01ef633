//! Mini-batch training with early stopping and a best-snapshot contract.

use serde::{Deserialize, Serialize};

use super::{
    clip_gradients, composite_loss, init_network, AdamWConfig, AdamWState, Architecture, Matrix,
    Network, NnError, PlateauScheduler,
};
use crate::seed;

/// Same comparison slack as the scheduler: smaller improvements neither
/// reset early stopping nor update the best snapshot.
const IMPROVEMENT_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    /// MSE weight in the composite loss; the Huber term gets `1 - alpha`.
    pub alpha: f64,
    /// Huber transition point, on the standardized target scale.
    pub huber_delta: f64,
    pub clip_norm: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub scheduler_patience: usize,
    pub scheduler_factor: f64,
    pub early_stop_patience: usize,
    /// Fraction of the training portion carved off as validation by
    /// callers that split internally.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 500,
            batch_size: 16,
            alpha: 0.5,
            huber_delta: 1.0,
            clip_norm: 1.0,
            lr: 1e-3,
            weight_decay: 1e-4,
            scheduler_patience: 10,
            scheduler_factor: 0.5,
            early_stop_patience: 25,
            val_fraction: 0.15,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

/// A trained network frozen at its best validation epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub network: Network,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainedModel {
    pub fn predict(&self, batch: &Matrix) -> Result<Vec<f64>, NnError> {
        self.network.forward_eval(batch)
    }
}

fn gather_rows(x: &Matrix, idx: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(idx.len() * x.cols);
    for &i in idx {
        data.extend_from_slice(x.row(i));
    }
    Matrix { rows: idx.len(), cols: x.cols, data }
}

/// Train on shuffled mini-batches; per epoch, evaluate the validation loss
/// in eval mode, feed the plateau scheduler, and early-stop on stagnation.
/// Returns the parameter snapshot with the best validation loss.
pub fn train_model(
    x_train: &Matrix,
    y_train: &[f64],
    x_val: &Matrix,
    y_val: &[f64],
    arch: &Architecture,
    config: &TrainConfig,
    master_seed: u64,
) -> Result<TrainedModel, NnError> {
    if x_val.rows == 0 {
        return Err(NnError::NoValidationData);
    }
    if x_train.rows < 2 {
        return Err(NnError::BatchTooSmall { got: x_train.rows });
    }

    let mut net = init_network(arch, &mut seed::rng(master_seed, &[0x494e4954])); // "INIT"
    let mut adam = AdamWState::new(
        net.flat_params().len(),
        AdamWConfig { lr: config.lr, weight_decay: config.weight_decay, ..AdamWConfig::default() },
    );
    let mut scheduler =
        PlateauScheduler::new(config.lr, config.scheduler_patience, config.scheduler_factor);
    let mut dropout_rng = seed::rng(master_seed, &[0x44524f50]); // "DROP"

    let mut history = Vec::new();
    let mut best_state: (f64, usize, Option<Network>) = (f64::INFINITY, 0, None);
    let mut stagnant = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut order: Vec<usize> = (0..x_train.rows).collect();
        shuffle(&mut order, &mut seed::rng(master_seed, &[0x53485546, epoch as u64])); // "SHUF"

        let mut train_loss_sum = 0.0;
        let mut trained_samples = 0usize;
        for chunk in order.chunks(config.batch_size.max(2)) {
            if chunk.len() < 2 {
                continue; // batch statistics need two samples
            }
            let batch = gather_rows(x_train, chunk);
            let targets: Vec<f64> = chunk.iter().map(|&i| y_train[i]).collect();
            let (preds, cache) = net.forward_train(&batch, &mut dropout_rng)?;
            let (loss, pred_grad) = composite_loss(&preds, &targets, config.alpha, config.huber_delta)?;
            let grads = net.backward(&cache, &pred_grad)?;
            let mut flat_grads = grads.flat();
            clip_gradients(&mut flat_grads, config.clip_norm);
            let mut flat_params = net.flat_params();
            adam.step(&mut flat_params, &flat_grads);
            net.set_flat_params(&flat_params);
            train_loss_sum += loss * chunk.len() as f64;
            trained_samples += chunk.len();
        }
        let train_loss =
            if trained_samples > 0 { train_loss_sum / trained_samples as f64 } else { f64::NAN };

        let val_preds = net.forward_eval(x_val)?;
        let (val_loss, _) = composite_loss(&val_preds, y_val, config.alpha, config.huber_delta)?;
        let lr = scheduler.step(val_loss);
        adam.config.lr = lr;
        history.push(EpochStats { epoch, train_loss, val_loss, lr });

        if val_loss < best_state.0 - IMPROVEMENT_THRESHOLD {
            best_state = (val_loss, epoch, Some(net.clone()));
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= config.early_stop_patience {
                break;
            }
        }
    }

    let (best_val_loss, best_epoch, snapshot) = best_state;
    Ok(TrainedModel {
        network: snapshot.unwrap_or(net),
        history,
        best_epoch,
        best_val_loss,
    })
}

/// Fisher-Yates shuffle driven by the derived stream.
fn shuffle(order: &mut [usize], rng: &mut rand_chacha::ChaCha8Rng) {
    use rand::Rng;
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}
