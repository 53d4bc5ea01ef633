//! Repeated k-fold evaluation with RMSE and R-squared, plus the
//! three-model comparison (ensemble, single network, random forest).
//!
//! Everything inside a fold — power transform, feature selection, member
//! training — is fitted on the fold's training portion only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::ensemble::{fit_pipeline, EnsembleError, PipelineSettings, SelectionSettings};
use crate::forest::{fit_forest, select_features, ForestError, ForestParams};
use crate::preprocess::{fit_transformer, TransformError};
use crate::seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metric on empty vectors")]
    EmptyVector,
    #[error("R^2 is undefined for a constant target")]
    ConstantTarget,
    #[error("{n} samples cannot fill {folds} folds")]
    TooFewSamples { n: usize, folds: usize },
    #[error(transparent)]
    Pipeline(#[from] EnsembleError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Root mean squared error, in target units.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(EvalError::EmptyVector);
    }
    let mse = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    if y.is_empty() || y.len() != yhat.len() {
        return Err(EvalError::EmptyVector);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::ConstantTarget);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Which regressor a cross-validation run trains per fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    /// Full pipeline with N member networks.
    Ensemble(PipelineSettings),
    /// Same pipeline restricted to one member.
    SingleNetwork(PipelineSettings),
    /// Forest regressor behind the same selection + transform stages.
    RandomForest { selection: Option<SelectionSettings>, params: ForestParams },
}

impl ModelSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Ensemble(_) => "ensemble",
            ModelSpec::SingleNetwork(_) => "single-nn",
            ModelSpec::RandomForest { .. } => "random-forest",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub rmse: f64,
    /// None when the held-out fold has a constant target (undefined).
    pub r2: Option<f64>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Ensemble runs record, per fold, the averaged prediction's MSE and
    /// every member's MSE (degrees squared) for the variance-reduction
    /// bound `mse_ensemble <= mean(member_mses)`.
    pub ensemble_mse: Option<f64>,
    pub member_mses: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub model: String,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub results: Vec<FoldResult>,
    pub rmse_mean: f64,
    /// Sample standard deviation (n-1) over all fold values.
    pub rmse_std: f64,
    pub r2_mean: f64,
    pub r2_std: f64,
}

const FOLD_TAG: u64 = 0x464f4c44; // "FOLD"

/// Deterministic fold assignment: a seeded shuffle per repeat, split into
/// near-equal contiguous chunks. Depends only on `(seed, n, folds, repeats)`.
pub fn fold_assignments(n: usize, folds: usize, repeats: usize, master_seed: u64) -> Vec<Vec<Vec<usize>>> {
    use rand::Rng;
    let mut out = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = seed::rng(master_seed, &[FOLD_TAG, r as u64]);
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let base = n / folds;
        let extra = n % folds;
        let mut chunks = Vec::with_capacity(folds);
        let mut at = 0;
        for f in 0..folds {
            let len = base + usize::from(f < extra);
            chunks.push(order[at..at + len].to_vec());
            at += len;
        }
        out.push(chunks);
    }
    out
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() as f64 - 1.0)).sqrt()
}

fn mse(y: &[f64], yhat: &[f64]) -> f64 {
    y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

fn run_fold(
    ds: &Dataset,
    spec: &ModelSpec,
    repeat: usize,
    fold: usize,
    train_idx: &[usize],
    test_idx: &[usize],
    master_seed: u64,
) -> Result<FoldResult, EvalError> {
    let train = ds.subset(train_idx);
    let test = ds.subset(test_idx);
    let fold_seed = seed::derive(master_seed, &[FOLD_TAG, repeat as u64, fold as u64]);

    let (preds, ensemble_mse, member_mses) = match spec {
        ModelSpec::Ensemble(settings) => {
            let model = fit_pipeline(&train, settings, fold_seed)?;
            let preds = model.predict(&test.columns, &test.rows)?;
            let members = model.predict_members(&test.columns, &test.rows)?;
            let member_mses: Vec<f64> = members.iter().map(|m| mse(&test.target, m)).collect();
            let e_mse = mse(&test.target, &preds);
            (preds, Some(e_mse), Some(member_mses))
        }
        ModelSpec::SingleNetwork(settings) => {
            let mut single = settings.clone();
            single.ensemble.members = 1;
            let model = fit_pipeline(&train, &single, fold_seed)?;
            (model.predict(&test.columns, &test.rows)?, None, None)
        }
        ModelSpec::RandomForest { selection, params } => {
            let selected: Vec<String> = match selection {
                Some(sel) => {
                    let report = select_features(
                        &train.rows,
                        &train.target,
                        sel.k.min(train.n_features()),
                        sel.runs,
                        &sel.forest,
                        seed::derive(fold_seed, &[1]),
                    )?;
                    report.selected.iter().map(|&j| train.columns[j].clone()).collect()
                }
                None => train.columns.clone(),
            };
            let train_proj = train.project(&selected).expect("columns exist");
            let test_proj = test.project(&selected).expect("columns exist");
            let transform = fit_transformer(&selected, &train_proj.rows)?;
            let x_train = transform.apply(&selected, &train_proj.rows)?;
            let x_test = transform.apply(&selected, &test_proj.rows)?;
            let forest = fit_forest(&x_train, &train.target, params, seed::derive(fold_seed, &[2]))?;
            (forest.predict_batch(&x_test)?, None, None)
        }
    };

    let fold_rmse = rmse(&test.target, &preds)?;
    let fold_r2 = match r2(&test.target, &preds) {
        Ok(v) => Some(v),
        Err(EvalError::ConstantTarget) => None,
        Err(e) => return Err(e),
    };
    Ok(FoldResult {
        repeat,
        fold,
        rmse: fold_rmse,
        r2: fold_r2,
        train_indices: train_idx.to_vec(),
        test_indices: test_idx.to_vec(),
        ensemble_mse,
        member_mses,
    })
}

/// Repeated k-fold cross validation under the given model spec.
pub fn cross_validate(
    ds: &Dataset,
    folds: usize,
    repeats: usize,
    spec: &ModelSpec,
    master_seed: u64,
) -> Result<CVReport, EvalError> {
    let n = ds.n_rows();
    if n < folds || folds < 2 {
        return Err(EvalError::TooFewSamples { n, folds });
    }
    let assignments = fold_assignments(n, folds, repeats, master_seed);
    let tasks: Vec<(usize, usize, Vec<usize>, Vec<usize>)> = assignments
        .iter()
        .enumerate()
        .flat_map(|(r, chunks)| {
            chunks.iter().enumerate().map(move |(f, test_idx)| {
                let train_idx: Vec<usize> = chunks
                    .iter()
                    .enumerate()
                    .filter(|&(g, _)| g != f)
                    .flat_map(|(_, c)| c.iter().copied())
                    .collect();
                (r, f, train_idx, test_idx.clone())
            })
        })
        .collect();

    let results: Vec<FoldResult> = tasks
        .par_iter()
        .map(|(r, f, train_idx, test_idx)| run_fold(ds, spec, *r, *f, train_idx, test_idx, master_seed))
        .collect::<Result<_, _>>()?;

    let rmses: Vec<f64> = results.iter().map(|x| x.rmse).collect();
    let r2s: Vec<f64> = results.iter().filter_map(|x| x.r2).collect();
    let rmse_mean = rmses.iter().sum::<f64>() / rmses.len() as f64;
    let r2_mean = if r2s.is_empty() { f64::NAN } else { r2s.iter().sum::<f64>() / r2s.len() as f64 };
    Ok(CVReport {
        model: spec.label().to_string(),
        folds,
        repeats,
        seed: master_seed,
        rmse_std: sample_std(&rmses, rmse_mean),
        r2_std: sample_std(&r2s, r2_mean),
        rmse_mean,
        r2_mean,
        results,
    })
}

/// Run the same protocol (identical fold assignments) for the ensemble,
/// a single network, and the forest baseline.
pub fn compare_models(
    ds: &Dataset,
    folds: usize,
    repeats: usize,
    settings: &PipelineSettings,
    forest_params: &ForestParams,
    master_seed: u64,
) -> Result<Vec<CVReport>, EvalError> {
    let specs = [
        ModelSpec::Ensemble(settings.clone()),
        ModelSpec::SingleNetwork(settings.clone()),
        ModelSpec::RandomForest { selection: settings.selection.clone(), params: forest_params.clone() },
    ];
    specs.iter().map(|spec| cross_validate(ds, folds, repeats, spec, master_seed)).collect()
}

impl CVReport {
    /// One row per fold: model, repeat, fold, rmse, r2, test indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,repeat,fold,rmse,r2,test_indices\n");
        for r in &self.results {
            let r2_cell = r.r2.map(|v| format!("{v}")).unwrap_or_default();
            let idx: Vec<String> = r.test_indices.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.model,
                r.repeat,
                r.fold,
                r.rmse,
                r2_cell,
                idx.join(";")
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {}-fold x {} repeats ({} folds) | RMSE {:.3} +/- {:.3} deg | R2 {:.3} +/- {:.3}",
            self.model,
            self.folds,
            self.repeats,
            self.results.len(),
            self.rmse_mean,
            self.rmse_std,
            self.r2_mean,
            self.r2_std
        )
    }
}

/// Chart-ready comparison table: one line per model with error bars.
pub fn comparison_chart(reports: &[CVReport]) -> String {
    let mut out = String::from("model rmse_mean rmse_std r2_mean r2_std\n");
    for r in reports {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            r.model, r.rmse_mean, r.rmse_std, r.r2_mean, r.r2_std
        ));
    }
    out
}
