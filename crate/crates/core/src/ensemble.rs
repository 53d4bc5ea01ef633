//! Diversified network ensemble over the full prediction pipeline:
//! feature selection -> power transform -> member networks -> averaged
//! prediction on the original degree scale.
//!
//! Members differ in learning rate (a geometric ladder around the base),
//! scheduler patience (cycled from a list), and derived seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::forest::{select_features, ForestError, ForestParams};
use crate::nn::{train_model, Architecture, Matrix, NnError, TrainConfig, TrainedModel};
use crate::preprocess::{fit_transformer, TransformError, TransformParams};
use crate::seed;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("prediction table does not provide the model's feature columns: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Network(#[from] NnError),
}

/// Target z-scoring fitted on training targets only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaler {
    pub fn fit(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        TargetScaler { mean, std: if std > 0.0 { std } else { 1.0 } }
    }

    pub fn to_z(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn from_z(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Member count N.
    pub members: usize,
    pub base_lr: f64,
    /// Ratio between adjacent member learning rates.
    pub lr_spread: f64,
    /// Scheduler patiences, cycled across members.
    pub patiences: Vec<usize>,
    pub hidden_widths: Vec<usize>,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub residual_span: usize,
    pub train: TrainConfig,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            members: 5,
            base_lr: 1e-3,
            lr_spread: 1.5,
            patiences: vec![6, 10, 14],
            hidden_widths: vec![64, 64, 64],
            dropout: 0.2,
            leaky_slope: 0.01,
            residual_span: 1,
            train: TrainConfig::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn architecture(&self, input_width: usize) -> Architecture {
        Architecture {
            input_width,
            hidden_widths: self.hidden_widths.clone(),
            dropout: self.dropout,
            leaky_slope: self.leaky_slope,
            residual_span: self.residual_span,
        }
    }
}

/// Resolved per-member settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberConfig {
    pub index: usize,
    pub lr: f64,
    pub scheduler_patience: usize,
    pub seed: u64,
}

const MEMBER_TAG: u64 = 0x4d454d42; // "MEMB"

/// Member i trains at `base * spread^(i - (N-1)/2)` — a geometric ladder
/// centered on the base rate — with its cycled patience and derived seed.
pub fn make_member_configs(cfg: &EnsembleConfig, master_seed: u64) -> Vec<MemberConfig> {
    let n = cfg.members;
    (0..n)
        .map(|i| {
            let exponent = i as f64 - (n as f64 - 1.0) / 2.0;
            MemberConfig {
                index: i,
                lr: cfg.base_lr * cfg.lr_spread.powf(exponent),
                scheduler_patience: cfg.patiences[i % cfg.patiences.len()],
                seed: seed::derive(master_seed, &[MEMBER_TAG, i as u64]),
            }
        })
        .collect()
}

/// Train every member on the same split; any member failure fails the
/// build. Members are independent, so training runs in parallel with
/// per-member derived seeds keeping the result order-independent.
pub fn train_ensemble(
    x_train: &Matrix,
    y_train: &[f64],
    x_val: &Matrix,
    y_val: &[f64],
    arch: &Architecture,
    cfg: &EnsembleConfig,
    master_seed: u64,
) -> Result<(Vec<TrainedModel>, Vec<MemberConfig>), EnsembleError> {
    let configs = make_member_configs(cfg, master_seed);
    let members: Vec<TrainedModel> = configs
        .par_iter()
        .map(|mc| {
            let train_cfg = TrainConfig {
                lr: mc.lr,
                scheduler_patience: mc.scheduler_patience,
                ..cfg.train.clone()
            };
            train_model(x_train, y_train, x_val, y_val, arch, &train_cfg, mc.seed)
        })
        .collect::<Result<_, NnError>>()?;
    Ok((members, configs))
}

/// The deployable model: selected features, fitted transform, target
/// scaler, and the trained members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub members: Vec<TrainedModel>,
    pub member_configs: Vec<MemberConfig>,
    pub transform: TransformParams,
    pub selected: Vec<String>,
    pub target: TargetScaler,
}

impl Ensemble {
    /// Columns of the incoming table projected down to the model schema.
    fn project(
        &self,
        columns: &[String],
        rows: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>, EnsembleError> {
        let idx: Result<Vec<usize>, _> = self
            .selected
            .iter()
            .map(|name| {
                columns
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| EnsembleError::SchemaMismatch(name.clone()))
            })
            .collect();
        let idx = idx?;
        Ok(rows.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect())
    }

    /// Per-member predictions in degrees.
    pub fn predict_members(
        &self,
        columns: &[String],
        rows: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>, EnsembleError> {
        let projected = self.project(columns, rows)?;
        let transformed = self.transform.apply(&self.selected, &projected)?;
        let batch = Matrix::from_rows(&transformed);
        let mut out = Vec::with_capacity(self.members.len());
        for member in &self.members {
            let z = member.predict(&batch)?;
            out.push(z.into_iter().map(|v| self.target.from_z(v)).collect());
        }
        Ok(out)
    }

    /// Ensemble prediction: mean of member outputs on the standardized
    /// scale, then inverse target scaling. Member outputs are summed in
    /// value order, so the result does not depend on member ordering.
    /// Values outside the physical [0, 180] degree range are returned
    /// unclamped; see [`physical_range_violations`].
    pub fn predict(&self, columns: &[String], rows: &[Vec<f64>]) -> Result<Vec<f64>, EnsembleError> {
        let projected = self.project(columns, rows)?;
        let transformed = self.transform.apply(&self.selected, &projected)?;
        let batch = Matrix::from_rows(&transformed);
        let member_z: Vec<Vec<f64>> =
            self.members.iter().map(|m| m.predict(&batch)).collect::<Result<_, _>>()?;
        let n = rows.len();
        let mut preds = Vec::with_capacity(n);
        let mut sample = vec![0.0; self.members.len()];
        for i in 0..n {
            for (s, mz) in sample.iter_mut().zip(&member_z) {
                *s = mz[i];
            }
            sample.sort_by(f64::total_cmp);
            let mean = sample.iter().sum::<f64>() / sample.len() as f64;
            preds.push(self.target.from_z(mean));
        }
        Ok(preds)
    }
}

/// Indices of predictions outside the physical contact-angle range.
pub fn physical_range_violations(preds: &[f64]) -> Vec<usize> {
    preds
        .iter()
        .enumerate()
        .filter(|(_, &p)| !(0.0..=180.0).contains(&p))
        .map(|(i, _)| i)
        .collect()
}

/// Feature-selection stage settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSettings {
    pub k: usize,
    pub runs: usize,
    pub forest: ForestParams,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        SelectionSettings { k: 20, runs: 10, forest: ForestParams::default() }
    }
}

/// Pipeline-level settings: optional selection plus the ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub selection: Option<SelectionSettings>,
    pub ensemble: EnsembleConfig,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings { selection: Some(SelectionSettings::default()), ensemble: EnsembleConfig::default() }
    }
}

const SELECT_TAG: u64 = 0x53454c46; // "SELF"
const SPLIT_TAG: u64 = 0x53504c54; // "SPLT"

/// Fit the full pipeline on a training dataset: feature selection on raw
/// features, power transform on the selected columns, target z-scoring,
/// an internal train/validation split, then the member networks.
pub fn fit_pipeline(
    ds: &Dataset,
    settings: &PipelineSettings,
    master_seed: u64,
) -> Result<Ensemble, EnsembleError> {
    let selected: Vec<String> = match &settings.selection {
        Some(sel) => {
            let report = select_features(
                &ds.rows,
                &ds.target,
                sel.k.min(ds.n_features()),
                sel.runs,
                &sel.forest,
                seed::derive(master_seed, &[SELECT_TAG]),
            )?;
            report.selected.iter().map(|&j| ds.columns[j].clone()).collect()
        }
        None => ds.columns.clone(),
    };
    let projected = ds.project(&selected).expect("selected columns come from the dataset");

    let transform = fit_transformer(&selected, &projected.rows)?;
    let transformed = transform.apply(&selected, &projected.rows)?;
    let scaler = TargetScaler::fit(&ds.target);
    let z_target: Vec<f64> = ds.target.iter().map(|&t| scaler.to_z(t)).collect();

    // Internal validation split for early stopping and scheduling.
    let n = ds.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    {
        use rand::Rng;
        let mut rng = seed::rng(master_seed, &[SPLIT_TAG]);
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
    }
    let val_len = ((n as f64 * settings.ensemble.train.val_fraction).round() as usize).clamp(1, n - 1);
    let (val_idx, train_idx) = order.split_at(val_len);

    let gather = |idx: &[usize]| -> (Matrix, Vec<f64>) {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| transformed[i].clone()).collect();
        let y: Vec<f64> = idx.iter().map(|&i| z_target[i]).collect();
        (Matrix::from_rows(&rows), y)
    };
    let (x_train, y_train) = gather(train_idx);
    let (x_val, y_val) = gather(val_idx);

    let arch = settings.ensemble.architecture(selected.len());
    let (members, member_configs) =
        train_ensemble(&x_train, &y_train, &x_val, &y_val, &arch, &settings.ensemble, master_seed)?;

    Ok(Ensemble { members, member_configs, transform, selected, target: scaler })
}
