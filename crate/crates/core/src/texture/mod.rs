//! Nanoscale texture descriptors from grayscale images.
//!
//! The pipeline per mask: outer-product kernel -> convolution -> windowed
//! absolute-energy map -> Otsu threshold -> binary segmentation ->
//! connected components -> per-mask statistics.

pub mod components;
pub mod convolve;
pub mod energy;
pub mod masks;
pub mod otsu;

pub use components::{label_components, ComponentSet, Connectivity};
pub use convolve::{convolve, BorderPolicy};
pub use energy::energy_map;
pub use masks::{build_kernel, Kernel2D, MaskBank, MaskName, MaskVector};
pub use otsu::otsu_threshold;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextureError {
    #[error("image is {width}x{height}; both dimensions must be at least 5")]
    ImageTooSmall { width: usize, height: usize },
    #[error("energy map is constant; no threshold separates two classes")]
    DegenerateMap,
    #[error("pixel buffer length {got} does not match {width}x{height}")]
    PixelCountMismatch { width: usize, height: usize, got: usize },
    #[error("image must have at least one pixel")]
    EmptyImage,
}

/// 8-bit grayscale raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, TextureError> {
        if width == 0 || height == 0 {
            return Err(TextureError::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(TextureError::PixelCountMismatch { width, height, got: pixels.len() });
        }
        Ok(GrayImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Signed filter response map, same dimensions as the source image.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl FilteredMap {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Non-negative windowed energy map.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl EnergyMap {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Foreground/background segmentation of an energy map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Mark every pixel whose energy strictly exceeds the threshold.
pub fn segment(energy: &EnergyMap, threshold: f64) -> BinaryMask {
    BinaryMask {
        width: energy.width,
        height: energy.height,
        bits: energy.values.iter().map(|&v| v > threshold).collect(),
    }
}

/// Per-mask texture statistics.
///
/// `texture_count` is the foreground pixel count, `mean_area` the average
/// connected-component size, `mean_energy` the average energy over
/// foreground pixels. All zero when the mask selects nothing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskFeatures {
    pub mask: MaskName,
    pub texture_count: f64,
    pub mean_area: f64,
    pub mean_energy: f64,
}

impl MaskFeatures {
    pub fn zeroed(mask: MaskName) -> Self {
        MaskFeatures { mask, texture_count: 0.0, mean_area: 0.0, mean_energy: 0.0 }
    }
}

/// One `MaskFeatures` entry per mask in the bank, in bank order.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureFeatureVector {
    pub features: Vec<MaskFeatures>,
}

impl TextureFeatureVector {
    pub fn get(&self, mask: MaskName) -> Option<&MaskFeatures> {
        self.features.iter().find(|f| f.mask == mask)
    }

    /// Column labels in emission order: `<prefix> TC|MA|ME` per mask.
    pub fn column_names(&self) -> Vec<String> {
        self.features
            .iter()
            .flat_map(|f| {
                let p = f.mask.column_prefix();
                [format!("{p} TC"), format!("{p} MA"), format!("{p} ME")]
            })
            .collect()
    }

    pub fn column_values(&self) -> Vec<f64> {
        self.features
            .iter()
            .flat_map(|f| [f.texture_count, f.mean_area, f.mean_energy])
            .collect()
    }
}

/// Compute texture statistics from a consistent energy/mask/component triple.
pub fn texture_features(
    energy: &EnergyMap,
    mask: &BinaryMask,
    comps: &ComponentSet,
    name: MaskName,
) -> MaskFeatures {
    debug_assert_eq!(energy.values.len(), mask.bits.len());
    let count = mask.foreground_count();
    if count == 0 {
        return MaskFeatures::zeroed(name);
    }
    let energy_sum: f64 = energy
        .values
        .iter()
        .zip(&mask.bits)
        .filter(|(_, &b)| b)
        .map(|(&e, _)| e)
        .sum();
    let mean_area = if comps.count() == 0 { 0.0 } else { count as f64 / comps.count() as f64 };
    MaskFeatures {
        mask: name,
        texture_count: count as f64,
        mean_area,
        mean_energy: energy_sum / count as f64,
    }
}

/// Options for the full extraction pipeline.
#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions {
    pub border: BorderPolicy,
    pub connectivity: Connectivity,
    /// Half-width of the energy window; the window spans `2*half_window+1`.
    pub half_window: usize,
    /// Number of linear quantization bins for thresholding.
    pub bins: usize,
    /// Subtract the local mean (same window as the energy sum) before
    /// filtering. Off by default.
    pub normalize_contrast: bool,
    /// Physical area per pixel; multiplies `mean_area`. Defaults to 1
    /// (areas reported in pixels).
    pub area_scale: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            border: BorderPolicy::Reflect,
            connectivity: Connectivity::Eight,
            half_window: 7,
            bins: 256,
            normalize_contrast: false,
            area_scale: 1.0,
        }
    }
}

/// Run the whole texture pipeline for every mask in the bank.
///
/// A degenerate (constant) energy map yields zeroed features for that mask
/// rather than an error.
pub fn extract_all(
    img: &GrayImage,
    bank: &MaskBank,
    opts: &ExtractOptions,
) -> Result<TextureFeatureVector, TextureError> {
    if img.width() < 5 || img.height() < 5 {
        return Err(TextureError::ImageTooSmall { width: img.width(), height: img.height() });
    }
    let mut raster: Vec<f64> = img.pixels().iter().map(|&p| p as f64).collect();
    if opts.normalize_contrast {
        subtract_local_mean(&mut raster, img.width(), img.height(), opts.half_window);
    }

    let mut features = Vec::with_capacity(bank.masks.len());
    for mask in &bank.masks {
        let kernel = build_kernel(mask, mask);
        let filtered = convolve::convolve_raster(&raster, img.width(), img.height(), &kernel, opts.border);
        let energy = energy_map(&filtered, opts.half_window);
        let feat = match otsu_threshold(&energy, opts.bins) {
            Ok(t) => {
                let seg = segment(&energy, t);
                let comps = label_components(&seg, opts.connectivity);
                let mut f = texture_features(&energy, &seg, &comps, mask.name);
                f.mean_area *= opts.area_scale;
                f
            }
            Err(TextureError::DegenerateMap) => MaskFeatures::zeroed(mask.name),
            Err(e) => return Err(e),
        };
        features.push(feat);
    }
    Ok(TextureFeatureVector { features })
}

/// In-place subtraction of the clipped-window local mean.
fn subtract_local_mean(raster: &mut [f64], width: usize, height: usize, half_window: usize) {
    let src = raster.to_vec();
    let hw = half_window as isize;
    for r in 0..height as isize {
        for c in 0..width as isize {
            let mut sum = 0.0;
            let mut n = 0usize;
            for i in (r - hw).max(0)..=(r + hw).min(height as isize - 1) {
                for j in (c - hw).max(0)..=(c + hw).min(width as isize - 1) {
                    sum += src[(i * width as isize + j) as usize];
                    n += 1;
                }
            }
            raster[(r * width as isize + c) as usize] -= sum / n as f64;
        }
    }
}
