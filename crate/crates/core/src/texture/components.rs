//! Connected-component labeling for binary masks.

use super::BinaryMask;

/// Pixel adjacency used when grouping foreground pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

/// Partition of foreground pixels into maximal connected components.
///
/// `labels` is 0 for background and `1..=areas.len()` for foreground;
/// `areas[k]` is the pixel count of component `k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentSet {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub areas: Vec<usize>,
}

impl ComponentSet {
    pub fn count(&self) -> usize {
        self.areas.len()
    }

    pub fn total_area(&self) -> usize {
        self.areas.iter().sum()
    }
}

/// Label connected foreground components with an iterative flood fill.
///
/// Labels are assigned in raster-scan order of each component's first
/// pixel, so the partition is independent of traversal details.
pub fn label_components(mask: &BinaryMask, connectivity: Connectivity) -> ComponentSet {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; w * h];
    let mut areas = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if !mask.bits[start] || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        let mut area = 0usize;
        stack.push(start);
        labels[start] = label;
        while let Some(idx) = stack.pop() {
            area += 1;
            let (r, c) = ((idx / w) as isize, (idx % w) as isize);
            for &(dr, dc) in connectivity.offsets() {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let nidx = nr as usize * w + nc as usize;
                if mask.bits[nidx] && labels[nidx] == 0 {
                    labels[nidx] = label;
                    stack.push(nidx);
                }
            }
        }
        areas.push(area);
    }

    ComponentSet { width: w, height: h, labels, areas }
}
