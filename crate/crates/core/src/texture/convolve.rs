//! 5x5 convolution with configurable border handling.

use super::masks::Kernel2D;
use super::{FilteredMap, GrayImage, TextureError};

/// How pixels outside the image are treated during convolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BorderPolicy {
    /// Mirror across the edge with the edge pixel repeated:
    /// index -1 maps to 0, -2 to 1, `n` to `n-1`, `n+1` to `n-2`.
    #[default]
    Reflect,
    /// Out-of-range pixels read as zero.
    Zero,
}

/// Map a possibly out-of-range coordinate to a valid one under reflection.
fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Convolve a grayscale image with a 5x5 kernel.
///
/// True convolution: the kernel is flipped relative to a sliding dot
/// product, so a unit impulse reproduces the kernel values as written.
pub fn convolve(img: &GrayImage, kernel: &Kernel2D, border: BorderPolicy) -> Result<FilteredMap, TextureError> {
    if img.width() < 5 || img.height() < 5 {
        return Err(TextureError::ImageTooSmall { width: img.width(), height: img.height() });
    }
    let raster: Vec<f64> = img.pixels().iter().map(|&p| p as f64).collect();
    Ok(convolve_raster(&raster, img.width(), img.height(), kernel, border))
}

/// Convolution over an already-converted real-valued raster.
///
/// `sample(r + 2 - i, c + 2 - j)` with `kernel[i][j]` implements
/// `out = raster * kernel` in the convolution sense.
pub(crate) fn convolve_raster(
    raster: &[f64],
    width: usize,
    height: usize,
    kernel: &Kernel2D,
    border: BorderPolicy,
) -> FilteredMap {
    debug_assert_eq!(raster.len(), width * height);
    let mut values = vec![0.0f64; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (i, row) in kernel.values.iter().enumerate() {
                let sr = r as isize + 2 - i as isize;
                for (j, &k) in row.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let sc = c as isize + 2 - j as isize;
                    let v = match border {
                        BorderPolicy::Reflect => {
                            raster[reflect(sr, height) * width + reflect(sc, width)]
                        }
                        BorderPolicy::Zero => {
                            if sr < 0 || sc < 0 || sr >= height as isize || sc >= width as isize {
                                0.0
                            } else {
                                raster[sr as usize * width + sc as usize]
                            }
                        }
                    };
                    acc += k as f64 * v;
                }
            }
            values[r * width + c] = acc;
        }
    }
    FilteredMap { width, height, values }
}
