use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::rng::{rng_from, streams};

/// The four standard strengths: σ² for noise, erased fraction for erasure.
pub const STANDARD_LEVELS: [f64; 4] = [0.1, 0.2, 1.0 / 3.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StressKind {
    /// Unperturbed reference.
    Clean,
    Noise,
    Erase,
    Both,
}

impl StressKind {
    pub const PERTURBING: [StressKind; 3] = [StressKind::Noise, StressKind::Erase, StressKind::Both];

    pub fn name(self) -> &'static str {
        match self {
            StressKind::Clean => "clean",
            StressKind::Noise => "noise",
            StressKind::Erase => "erase",
            StressKind::Both => "both",
        }
    }
}

impl fmt::Display for StressKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StressKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clean" => Ok(StressKind::Clean),
            "noise" => Ok(StressKind::Noise),
            "erase" => Ok(StressKind::Erase),
            "both" => Ok(StressKind::Both),
            other => Err(Error::invalid(format!(
                "unknown stress kind {other:?}; expected noise, erase or both"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressSpec {
    pub kind: StressKind,
    pub strength: f64,
    pub seed: u64,
}

impl StressSpec {
    /// Accepts 0 or one of [`STANDARD_LEVELS`]; values within 5e-4 of a
    /// standard level snap to it, so `0.3333` means exactly one third.
    pub fn new(kind: StressKind, strength: f64, seed: u64) -> Result<Self> {
        let snapped = std::iter::once(0.0)
            .chain(STANDARD_LEVELS)
            .find(|l| (strength - l).abs() < 5e-4)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "strength {strength} is not 0 or a standard level (0.1, 0.2, 1/3, 0.5); use a free strength to override"
                ))
            })?;
        Self::free(kind, snapped, seed)
    }

    /// Any strength in `[0, 1]`.
    pub fn free(kind: StressKind, strength: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(Error::invalid(format!("strength must lie in [0, 1], got {strength}")));
        }
        if kind == StressKind::Clean && strength != 0.0 {
            return Err(Error::invalid("the clean reference has strength 0"));
        }
        Ok(Self { kind, strength, seed })
    }

    /// Perturbs a normalized test matrix.
    pub fn apply(&self, x: &Matrix, stats: &NormStats) -> Result<Matrix> {
        match self.kind {
            StressKind::Clean => Ok(x.clone()),
            StressKind::Noise => apply_noise(x, self.strength, self.seed),
            StressKind::Erase => apply_erasure(x, self.strength, stats, self.seed),
            StressKind::Both => apply_both(x, self.strength, stats, self.seed),
        }
    }
}

/// Adds an independent `N(0, variance)` draw to every entry. No clipping.
pub fn apply_noise(x: &Matrix, variance: f64, seed: u64) -> Result<Matrix> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::invalid(format!(
            "noise variance must be non-negative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(x.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng_from(seed, streams::NOISE);
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}

/// Row-major flat positions erased from an `rows × cols` matrix: exactly
/// `round(fraction · rows · cols)` distinct positions, ascending.
pub fn erasure_positions(rows: usize, cols: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!(
            "erased fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let total = rows * cols;
    let count = (fraction * total as f64).round() as usize;
    let mut rng = rng_from(seed, streams::ERASE);
    let mut positions = sample(&mut rng, total, count).into_vec();
    positions.sort_unstable();
    Ok(positions)
}

/// Replaces the selected entries with their column's normalized missing code.
pub fn apply_erasure(x: &Matrix, fraction: f64, stats: &NormStats, seed: u64) -> Result<Matrix> {
    if stats.len() != x.cols() {
        return Err(Error::Shape {
            op: "apply_erasure",
            left: x.shape(),
            right: (1, stats.len()),
        });
    }
    let mut out = x.clone();
    let cols = x.cols();
    for p in erasure_positions(x.rows(), cols, fraction, seed)? {
        out.as_mut_slice()[p] = stats.missing_code(p % cols);
    }
    Ok(out)
}

/// Erasure followed by noise at the same strength; erased cells also receive
/// noise. The two steps draw from separate streams of `seed`.
pub fn apply_both(x: &Matrix, strength: f64, stats: &NormStats, seed: u64) -> Result<Matrix> {
    apply_noise(&apply_erasure(x, strength, stats, seed)?, strength, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::test_support::random_matrix;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(rows: usize, cols: usize) -> (Matrix, NormStats) {
        let mut rng = ChaCha8Rng::seed_from_u64(rows as u64);
        let raw = random_matrix(&mut rng, rows, cols).scale(3.0);
        let stats = NormStats::fit(&raw).unwrap();
        (stats.apply(&raw).unwrap(), stats)
    }

    #[test]
    fn zero_strength_is_identity() {
        let (x, stats) = setup(6, 4);
        for kind in StressKind::PERTURBING {
            assert_eq!(StressSpec::new(kind, 0.0, 3).unwrap().apply(&x, &stats).unwrap(), x);
        }
    }

    #[test]
    fn strength_validation() {
        assert_eq!(
            StressSpec::new(StressKind::Noise, 0.3333, 0).unwrap().strength,
            1.0 / 3.0
        );
        assert!(StressSpec::new(StressKind::Noise, 0.25, 0).is_err());
        assert!(StressSpec::free(StressKind::Noise, 0.25, 0).is_ok());
        assert!(StressSpec::free(StressKind::Erase, 1.5, 0).is_err());
        assert!(apply_noise(&Matrix::zeros(2, 2), -0.1, 0).is_err());
        assert!("gauss".parse::<StressKind>().is_err());
        assert_eq!(" Both".parse::<StressKind>().unwrap(), StressKind::Both);
    }

    #[test]
    fn noise_mean_within_clt_bound() {
        let x = Matrix::zeros(100, 100);
        let y = apply_noise(&x, 0.2, 17).unwrap();
        let mean = y.sum() / 1e4;
        assert!(mean.abs() < 3.0 * (0.2f64 / 1e4).sqrt(), "{mean}");
        let var = y.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (1e4 - 1.0);
        assert!((var - 0.2).abs() < 0.02, "{var}");
        assert_eq!(y, apply_noise(&x, 0.2, 17).unwrap());
        assert_ne!(y, apply_noise(&x, 0.2, 18).unwrap());
    }

    #[test]
    fn noise_is_not_clipped() {
        let y = apply_noise(&Matrix::filled(50, 20, 0.5), 0.5, 1).unwrap();
        assert!(y.as_slice().iter().any(|&v| v > 1.0));
        assert!(y.as_slice().iter().any(|&v| v < 0.0));
    }

    #[test]
    fn half_erasure_of_10_by_31() {
        let (x, stats) = setup(10, 31);
        let y = apply_erasure(&x, 0.5, &stats, 4).unwrap();
        let positions = erasure_positions(10, 31, 0.5, 4).unwrap();
        assert_eq!(positions.len(), 155);
        for p in positions {
            let j = p % 31;
            let code = (-1.0 - stats.min[j]) / (stats.max[j] - stats.min[j]);
            assert!((y.as_slice()[p] - code).abs() < 1e-12);
        }
    }

    #[test]
    fn both_is_erase_then_noise() {
        let (x, stats) = setup(8, 5);
        let both = apply_both(&x, 0.1, &stats, 9).unwrap();
        let composed = apply_noise(&apply_erasure(&x, 0.1, &stats, 9).unwrap(), 0.1, 9).unwrap();
        assert_eq!(both, composed);
        // with noise removed, exactly the erased cells differ from the input
        let erased_only = apply_erasure(&x, 0.1, &stats, 9).unwrap();
        let changed = x
            .as_slice()
            .iter()
            .zip(erased_only.as_slice())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, erasure_positions(8, 5, 0.1, 9).unwrap().len());
        assert_eq!(changed, 4);
    }

    proptest! {
        #[test]
        fn erasure_count_is_exact(rows in 1usize..30, cols in 1usize..12, fraction in 0.0f64..=1.0, seed in any::<u64>()) {
            let p = erasure_positions(rows, cols, fraction, seed).unwrap();
            prop_assert_eq!(p.len(), (fraction * (rows * cols) as f64).round() as usize);
            prop_assert!(p.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(p.iter().all(|&i| i < rows * cols));
        }
    }
}
