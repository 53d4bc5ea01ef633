//! Otsu thresholding over real-valued energy maps.

use super::{EnergyMap, TextureError};

/// Between-class variance of a cut, from exact integer class statistics.
///
/// Levels are bin indices. Written as one fixed expression so that any
/// scan producing the same integer inputs reproduces the same f64 value.
pub(crate) fn between_class_variance(w0: u64, sum0: u64, w1: u64, sum1: u64) -> f64 {
    debug_assert!(w0 > 0 && w1 > 0);
    let mu0 = sum0 as f64 / w0 as f64;
    let mu1 = sum1 as f64 / w1 as f64;
    let d = mu0 - mu1;
    (w0 as f64) * (w1 as f64) * d * d
}

/// Quantize `v` into one of `bins` linear bins over `[min, max]`.
pub(crate) fn bin_index(v: f64, min: f64, max: f64, bins: usize) -> usize {
    let t = (v - min) / (max - min);
    ((t * bins as f64) as usize).min(bins - 1)
}

/// Threshold maximizing between-class variance over `bins` linear bins.
///
/// Returns the upper boundary of the best low-class bin; ties resolve to
/// the lowest threshold. A constant map has a single class and is rejected.
pub fn otsu_threshold(energy: &EnergyMap, bins: usize) -> Result<f64, TextureError> {
    assert!(bins >= 2, "need at least two bins");
    assert!(!energy.values.is_empty(), "empty energy map");
    let min = energy.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = energy.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(TextureError::DegenerateMap);
    }

    let mut hist = vec![0u64; bins];
    for &v in &energy.values {
        hist[bin_index(v, min, max, bins)] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(i, &h)| i as u64 * h).sum();

    let mut best: Option<(usize, f64)> = None;
    let mut w0 = 0u64;
    let mut sum0 = 0u64;
    for (cut, &h) in hist.iter().enumerate().take(bins - 1) {
        w0 += h;
        sum0 += cut as u64 * h;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let sigma = between_class_variance(w0, sum0, w1, total_sum - sum0);
        // Strict > keeps the lowest cut on ties.
        if best.is_none_or(|(_, s)| sigma > s) {
            best = Some((cut, sigma));
        }
    }

    let (cut, _) = best.ok_or(TextureError::DegenerateMap)?;
    Ok(min + (max - min) * (cut as f64 + 1.0) / bins as f64)
}
