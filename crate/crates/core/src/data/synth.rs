//! Seeded synthetic surface dataset.
//!
//! Mimics the production schema — per-mask texture statistics, profilometry
//! roughness, and XPS-style chemistry descriptors for the CH2/CF2/CF3/CN
//! functional groups — with a documented contact-angle oracle so tests can
//! recompute ground truth independently of any model.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::seed;
use crate::texture::MaskName;

/// The 36-column synthetic schema, fixed order.
pub fn synthetic_columns() -> Vec<String> {
    let mut cols = Vec::with_capacity(36);
    for mask in [MaskName::Level, MaskName::Edge, MaskName::Spot, MaskName::Wave, MaskName::Ripple] {
        let p = mask.column_prefix();
        cols.push(format!("{p} TC"));
        cols.push(format!("{p} MA"));
        cols.push(format!("{p} ME"));
    }
    cols.push("Roughness nm".into());
    for group in ["CH2", "CF2", "CF3", "CN"] {
        cols.push(format!("{group} Area"));
        cols.push(format!("{group} Area Fraction"));
        cols.push(format!("Polarity of {group}"));
        cols.push(format!("Volume of {group}"));
    }
    cols.push("CF2 Chain Count".into());
    cols.push("Dipole Moment".into());
    cols.push("Molecular Volume".into());
    cols.push("Total F Area Fraction".into());
    cols
}

/// Noise-free contact angle as a function of four schema columns.
///
/// Strictly decreasing in the CN area fraction, strictly increasing in the
/// CF2 chain count, and modulated by roughness: rough surfaces push the
/// angle further from 90 degrees in whichever direction the chemistry
/// points. Output is clamped to the physical range.
pub fn contact_angle_oracle(cn_fraction: f64, cf2_fraction: f64, chain_count: f64, roughness_nm: f64) -> f64 {
    let drive =
        2.8 * cf2_fraction + 0.10 * chain_count + 0.06 * cf2_fraction * chain_count - 3.4 * cn_fraction - 0.12;
    let gain = 70.0 * drive.tanh();
    let rough_mod = 1.0 + 0.28 * ((roughness_nm - 800.0) / 180.0).tanh();
    (90.0 + gain * rough_mod).clamp(0.0, 180.0)
}

/// Column indices consumed by [`contact_angle_oracle`], in argument order.
pub fn oracle_inputs(columns: &[String]) -> [usize; 4] {
    let find = |name: &str| columns.iter().position(|c| c == name).unwrap();
    [find("CN Area Fraction"), find("CF2 Area Fraction"), find("CF2 Chain Count"), find("Roughness nm")]
}

/// Generate `n` samples with target noise `sigma` (degrees).
///
/// A pure function of `(n, sigma, seed)`.
pub fn generate_synthetic(n: usize, sigma: f64, master_seed: u64) -> Dataset {
    assert!(n >= 1);
    assert!(sigma >= 0.0);
    let mut rng = seed::rng(master_seed, &[0x53594e54]); // "SYNT"
    let columns = synthetic_columns();
    let mut rows = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);

    // Per-mask texture response scales; level/edge masks respond weakly to
    // nanotexture, spot/wave/ripple strongly.
    let tc_base = [900.0, 2200.0, 3100.0, 2800.0, 3400.0];
    let ma_base = [45.0, 14.0, 9.0, 11.0, 8.0];
    let me_base = [130.0, 60.0, 48.0, 52.0, 44.0];

    fn noise(rng: &mut rand_chacha::ChaCha8Rng, s: f64) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        s * z
    }

    for i in 0..n {
        // Latent process settings.
        let power: f64 = rng.random_range(0.1..8.4);
        let hydrophobic = rng.random::<f64>() < 0.5;
        let coverage: f64 = rng.random_range(0.0..1.0);
        let develop = 1.0 - (-0.7 * power).exp(); // texture development, saturating

        let roughness = (500.0 + 620.0 * develop + noise(&mut rng, 30.0)).clamp(420.0, 1250.0);

        // Chemistry fractions; the CH2 backbone is present either way.
        let (cn_frac, cf2_frac, cf3_frac, ch2_frac, chain);
        if hydrophobic {
            cf2_frac = (0.28 + 0.30 * coverage + noise(&mut rng, 0.02)).clamp(0.05, 0.75);
            cf3_frac = (0.35 * cf2_frac + noise(&mut rng, 0.01)).clamp(0.0, 0.4);
            cn_frac = (0.012 + noise(&mut rng, 0.004)).clamp(0.0, 0.05);
            ch2_frac = (0.16 + 0.10 * (1.0 - coverage) + noise(&mut rng, 0.015)).clamp(0.02, 0.5);
            chain = *[5.0, 7.0, 9.0].get(rng.random_range(0..3)).unwrap();
        } else {
            cn_frac = (0.30 + 0.32 * coverage + noise(&mut rng, 0.02)).clamp(0.05, 0.8);
            cf2_frac = (0.010 + noise(&mut rng, 0.003)).clamp(0.0, 0.04);
            cf3_frac = (0.004 + noise(&mut rng, 0.002)).clamp(0.0, 0.02);
            ch2_frac = (0.22 + 0.10 * (1.0 - coverage) + noise(&mut rng, 0.015)).clamp(0.02, 0.5);
            chain = 0.0;
        }
        let total_area = rng.random_range(800.0..1200.0);

        // Nominal group properties with per-sample measurement jitter.
        let polarity = [0.30, 1.90, 2.30, 3.90];
        let volume = [23.0, 38.0, 52.0, 33.0];
        let fracs = [ch2_frac, cf2_frac, cf3_frac, cn_frac];

        let mut row = Vec::with_capacity(36);
        for m in 0..5 {
            let tc = tc_base[m] * (0.15 + 0.85 * develop) * (1.0 + noise(&mut rng, 0.10));
            let ma = ma_base[m] * (1.3 - 0.5 * develop) * (1.0 + noise(&mut rng, 0.08));
            let me = me_base[m] * (0.4 + 0.6 * develop) * (1.0 + noise(&mut rng, 0.08));
            row.push(tc.max(1.0));
            row.push(ma.max(0.5));
            row.push(me.max(0.5));
        }
        row.push(roughness);
        for g in 0..4 {
            row.push((fracs[g] * total_area * (1.0 + noise(&mut rng, 0.03))).max(0.0));
            row.push(fracs[g]);
            row.push(polarity[g] + noise(&mut rng, 0.05));
            row.push((volume[g] + noise(&mut rng, 1.0)).max(1.0));
        }
        row.push(chain);
        let dominant = if hydrophobic { 1 } else { 3 };
        row.push(polarity[dominant] + noise(&mut rng, 0.05));
        row.push((volume[dominant] + noise(&mut rng, 1.0)).max(1.0));
        row.push((cf2_frac + cf3_frac).clamp(0.0, 1.0));

        let clean = contact_angle_oracle(cn_frac, cf2_frac, chain, roughness);
        let angle = (clean + noise(&mut rng, sigma)).clamp(0.0, 180.0);

        rows.push(row);
        target.push(angle);
        ids.push(format!("synth-{i:05}"));
    }

    Dataset { columns, rows, target, ids }
}
