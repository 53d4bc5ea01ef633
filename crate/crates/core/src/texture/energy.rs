//! Texture energy: windowed sums of absolute filter responses.

use super::{EnergyMap, FilteredMap};

/// Sum `|F|` over a `(2*half_window+1)`-square neighborhood of every pixel.
///
/// Windows are clipped to the map at the borders; no padding enters the sum.
/// Runs as two separable sliding passes (rows then columns).
pub fn energy_map(filtered: &FilteredMap, half_window: usize) -> EnergyMap {
    let (w, h) = (filtered.width, filtered.height);
    let hw = half_window as isize;
    let abs: Vec<f64> = filtered.values.iter().map(|v| v.abs()).collect();

    // Row pass: clipped horizontal sums.
    let mut rows = vec![0.0f64; w * h];
    for r in 0..h {
        let base = r * w;
        let mut acc = 0.0;
        for c in 0..(hw as usize + 1).min(w) {
            acc += abs[base + c];
        }
        rows[base] = acc;
        for c in 1..w {
            let add = c as isize + hw;
            if add < w as isize {
                acc += abs[base + add as usize];
            }
            let drop = c as isize - hw - 1;
            if drop >= 0 {
                acc -= abs[base + drop as usize];
            }
            rows[base + c] = acc;
        }
    }

    // Column pass over the row sums.
    let mut values = vec![0.0f64; w * h];
    for c in 0..w {
        let mut acc = 0.0;
        for r in 0..(hw as usize + 1).min(h) {
            acc += rows[r * w + c];
        }
        values[c] = acc.max(0.0);
        for r in 1..h {
            let add = r as isize + hw;
            if add < h as isize {
                acc += rows[add as usize * w + c];
            }
            let drop = r as isize - hw - 1;
            if drop >= 0 {
                acc -= rows[drop as usize * w + c];
            }
            values[r * w + c] = acc.max(0.0);
        }
    }

    EnergyMap { width: w, height: h, values }
}
