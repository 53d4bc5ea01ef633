//! Key-value config files for training settings.
//!
//! Format: one `key = value` per line, `#` comments, lists comma-separated.
//! Every key has a CLI override; precedence is CLI > file > default.

use std::collections::BTreeMap;
use std::path::Path;

use crate::ensemble::{PipelineSettings, SelectionSettings};
use crate::forest::ForestParams;

/// Parse a config file into a key/value map.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{path:?} line {}: expected `key = value`", i + 1));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("config key {key:?}: cannot parse {value:?}"))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|v| parse(key, v.trim()))
        .collect::<Result<Vec<T>, String>>()
        .and_then(|v| if v.is_empty() { Err(format!("config key {key:?}: empty list")) } else { Ok(v) })
}

/// Apply a config map over the defaults. Unknown keys are errors so typos
/// do not silently fall back to defaults.
pub fn settings_from_map(map: &BTreeMap<String, String>) -> Result<PipelineSettings, String> {
    let mut s = PipelineSettings::default();
    let mut selection_enabled = true;
    let mut sel = SelectionSettings::default();
    for (key, value) in map {
        let e = &mut s.ensemble;
        match key.as_str() {
            "members" => e.members = parse(key, value)?,
            "base_lr" => e.base_lr = parse(key, value)?,
            "lr_spread" => e.lr_spread = parse(key, value)?,
            "patiences" => e.patiences = parse_list(key, value)?,
            "hidden_widths" => e.hidden_widths = parse_list(key, value)?,
            "dropout" => e.dropout = parse(key, value)?,
            "leaky_slope" => e.leaky_slope = parse(key, value)?,
            "residual_span" => e.residual_span = parse(key, value)?,
            "max_epochs" => e.train.max_epochs = parse(key, value)?,
            "batch_size" => e.train.batch_size = parse(key, value)?,
            "alpha" => e.train.alpha = parse(key, value)?,
            "huber_delta" => e.train.huber_delta = parse(key, value)?,
            "clip_norm" => e.train.clip_norm = parse(key, value)?,
            "weight_decay" => e.train.weight_decay = parse(key, value)?,
            "scheduler_patience" => e.train.scheduler_patience = parse(key, value)?,
            "scheduler_factor" => e.train.scheduler_factor = parse(key, value)?,
            "early_stop_patience" => e.train.early_stop_patience = parse(key, value)?,
            "val_fraction" => e.train.val_fraction = parse(key, value)?,
            "selection" => {
                selection_enabled = match value.as_str() {
                    "on" => true,
                    "off" => false,
                    other => return Err(format!("config key \"selection\": expected on/off, got {other:?}")),
                }
            }
            "select_k" => sel.k = parse(key, value)?,
            "select_runs" => sel.runs = parse(key, value)?,
            "select_trees" => sel.forest.n_trees = parse(key, value)?,
            "select_min_leaf" => sel.forest.min_samples_leaf = parse(key, value)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
    }
    // The base learning rate feeds the shared TrainConfig too, so a single
    // network trains at exactly the base rate.
    s.ensemble.train.lr = s.ensemble.base_lr;
    s.selection = selection_enabled.then_some(sel);
    Ok(s)
}

/// Forest baseline parameters for the comparison run, from the same map.
pub fn forest_params_from_map(map: &BTreeMap<String, String>) -> Result<ForestParams, String> {
    let mut params = ForestParams::default();
    if let Some(v) = map.get("forest_trees") {
        params.n_trees = parse("forest_trees", v)?;
    }
    if let Some(v) = map.get("forest_min_leaf") {
        params.min_samples_leaf = parse("forest_min_leaf", v)?;
    }
    Ok(params)
}
