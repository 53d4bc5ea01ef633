//! Texture measurement vectors and their separable 5x5 kernels.

use serde::{Deserialize, Serialize};

/// The five texture feature families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskName {
    Level,
    Edge,
    Spot,
    Wave,
    Ripple,
}

impl MaskName {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskName::Level => "Level",
            MaskName::Edge => "Edge",
            MaskName::Spot => "Spot",
            MaskName::Wave => "Wave",
            MaskName::Ripple => "Ripple",
        }
    }

    /// Column-label prefix used in feature CSVs, e.g. `Spots S5S5`.
    pub fn column_prefix(self) -> &'static str {
        match self {
            MaskName::Level => "Levels L5L5",
            MaskName::Edge => "Edges E5E5",
            MaskName::Spot => "Spots S5S5",
            MaskName::Wave => "Waves W5W5",
            MaskName::Ripple => "Ripples R5R5",
        }
    }
}

/// A 1-D measurement vector of 5 signed coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskVector {
    pub name: MaskName,
    pub coeffs: [i32; 5],
}

pub const L5: [i32; 5] = [1, 4, 6, 4, 1];
/// Edge vector as configured by default. Not zero-sum, so edge responses
/// retain a DC component; see [`E5_CLASSIC`] for the zero-sum variant.
pub const E5: [i32; 5] = [-1, -2, 0, 3, 1];
/// The classical zero-sum edge vector.
pub const E5_CLASSIC: [i32; 5] = [-1, -2, 0, 2, 1];
pub const S5: [i32; 5] = [-1, 0, 2, 0, -1];
pub const W5: [i32; 5] = [-1, 2, 0, -2, 1];
pub const R5: [i32; 5] = [1, -4, 6, -4, 1];

/// An ordered bank of measurement vectors; each produces one 2-D kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskBank {
    pub masks: Vec<MaskVector>,
}

impl MaskBank {
    /// Default bank: Level, Edge, Spot, Wave, Ripple with the configured E5.
    pub fn standard() -> Self {
        Self::with_edge(E5)
    }

    /// Bank using the classical zero-sum edge vector.
    pub fn classic_laws() -> Self {
        Self::with_edge(E5_CLASSIC)
    }

    fn with_edge(edge: [i32; 5]) -> Self {
        MaskBank {
            masks: vec![
                MaskVector { name: MaskName::Level, coeffs: L5 },
                MaskVector { name: MaskName::Edge, coeffs: edge },
                MaskVector { name: MaskName::Spot, coeffs: S5 },
                MaskVector { name: MaskName::Wave, coeffs: W5 },
                MaskVector { name: MaskName::Ripple, coeffs: R5 },
            ],
        }
    }
}

impl Default for MaskBank {
    fn default() -> Self {
        Self::standard()
    }
}

/// A 5x5 kernel formed as the outer product of two measurement vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Kernel2D {
    pub values: [[i32; 5]; 5],
}

/// Outer product `a (x) b`: `values[i][j] = a[i] * b[j]`.
pub fn build_kernel(a: &MaskVector, b: &MaskVector) -> Kernel2D {
    let mut values = [[0i32; 5]; 5];
    for (i, row) in values.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a.coeffs[i] * b.coeffs[j];
        }
    }
    Kernel2D { values }
}

impl Kernel2D {
    pub fn sum(&self) -> i64 {
        self.values.iter().flatten().map(|&v| v as i64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(name: MaskName, coeffs: [i32; 5]) -> MaskVector {
        MaskVector { name, coeffs }
    }

    #[test]
    fn level_kernel_center_and_sum() {
        let l5 = vector(MaskName::Level, L5);
        let k = build_kernel(&l5, &l5);
        assert_eq!(k.values[2][2], 36); // 6 * 6
        assert_eq!(k.sum(), 256); // 16 * 16
    }

    #[test]
    fn ripple_kernel_is_zero_sum() {
        let r5 = vector(MaskName::Ripple, R5);
        let k = build_kernel(&r5, &r5);
        assert_eq!(k.sum(), 0); // (1 - 4 + 6 - 4 + 1)^2
    }

    #[test]
    fn default_edge_vector_matches_configuration() {
        let bank = MaskBank::standard();
        let edge = bank.masks.iter().find(|m| m.name == MaskName::Edge).unwrap();
        assert_eq!(edge.coeffs, [-1, -2, 0, 3, 1]);
        let classic = MaskBank::classic_laws();
        let edge = classic.masks.iter().find(|m| m.name == MaskName::Edge).unwrap();
        assert_eq!(edge.coeffs, [-1, -2, 0, 2, 1]);
    }

    #[test]
    fn outer_product_is_elementwise() {
        let a = vector(MaskName::Wave, W5);
        let b = vector(MaskName::Spot, S5);
        let k = build_kernel(&a, &b);
        for (i, &wi) in W5.iter().enumerate() {
            for (j, &sj) in S5.iter().enumerate() {
                assert_eq!(k.values[i][j], wi * sj);
            }
        }
    }
}
