//! Error Level Analysis: recompress as JPEG, difference, amplify.

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureVector};
use crate::imaging::{self, JpegQuality, RasterImage};

/// How the raw recompression difference is scaled into the heatmap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gain {
    /// Stretch so the largest sample becomes 255.
    AutoMax,
    /// Multiply by a fixed factor in `(0, 64]`, saturating at 255.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElaConfig {
    pub quality: JpegQuality,
    pub gain: Gain,
    /// Side length of the square grid the heatmap is resampled to for features.
    pub feature_grid: usize,
}

impl Default for ElaConfig {
    fn default() -> Self {
        Self {
            quality: JpegQuality::default(),
            gain: Gain::AutoMax,
            feature_grid: 32,
        }
    }
}

impl ElaConfig {
    /// Defaults used for classifier features: fixed gain 10 keeps magnitudes
    /// comparable between images.
    pub fn for_features() -> Self {
        Self {
            gain: Gain::Fixed(10.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Gain::Fixed(g) = self.gain {
            if !(g > 0.0 && g <= 64.0) {
                return Err(Error::InvalidParam(format!("fixed ELA gain {g} not in (0, 64]")));
            }
        }
        if self.feature_grid == 0 {
            return Err(Error::InvalidParam("ELA feature grid must be >= 1".into()));
        }
        Ok(())
    }
}

/// ELA heatmap with the same shape as `img`.
pub fn compute_ela(img: &RasterImage, cfg: &ElaConfig) -> Result<RasterImage> {
    cfg.validate()?;
    let recompressed = imaging::jpeg_roundtrip(img, cfg.quality)?;
    let diff = imaging::abs_diff(img, &recompressed)?;
    let (w, h, c) = (diff.width(), diff.height(), diff.channels());
    let data = match cfg.gain {
        Gain::AutoMax => {
            let max = diff.data().iter().copied().max().unwrap_or(0);
            if max == 0 {
                return Ok(diff);
            }
            let scale = 255.0 / max as f64;
            diff.data()
                .iter()
                .map(|&v| imaging::round_u8(v as f64 * scale))
                .collect()
        }
        Gain::Fixed(g) => diff
            .data()
            .iter()
            .map(|&v| imaging::round_u8(v as f64 * g))
            .collect(),
    };
    RasterImage::new(w, h, c, data)
}

/// Grayscale heatmap resampled to `feature_grid`² and scaled into `[0, 1]`.
pub fn ela_feature_vector(img: &RasterImage, cfg: &ElaConfig) -> Result<FeatureVector> {
    let heat = imaging::to_grayscale(&compute_ela(img, cfg)?);
    let grid = imaging::resize_bilinear(&heat, cfg.feature_grid, cfg.feature_grid)?;
    let values = grid.data().iter().map(|&v| v as f64 / 255.0).collect();
    Ok(FeatureVector::new(values, FeatureKind::Ela))
}
