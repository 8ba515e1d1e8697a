//! DCT-over-LBP features and 0-1 feature scaling.
//!
//! The image is reduced to one channel, resampled to a square canvas and
//! turned into a Local Binary Pattern map. The LBP map is cut into
//! non-overlapping tiles, each tile goes through an orthonormal 2D DCT-II, and
//! the feature for coefficient `(u, v)` is the population standard deviation
//! of that coefficient across all tiles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::{self, RasterImage};

/// Which extractor produced a feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Ela,
    DctLbp,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Ela => "ela",
            FeatureKind::DctLbp => "dctlbp",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ela" => Ok(FeatureKind::Ela),
            "dctlbp" => Ok(FeatureKind::DctLbp),
            other => Err(Error::InvalidParam(format!("unknown feature kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    kind: FeatureKind,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, kind: FeatureKind) -> Self {
        Self { values, kind }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Luminance,
    ChromaRed,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Luminance => "luminance",
            Channel::ChromaRed => "chroma-red",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "luminance" => Ok(Channel::Luminance),
            "chroma-red" => Ok(Channel::ChromaRed),
            other => Err(Error::InvalidParam(format!("unknown channel {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DctLbpConfig {
    pub canvas: usize,
    pub block: usize,
    pub channel: Channel,
}

impl Default for DctLbpConfig {
    fn default() -> Self {
        Self {
            canvas: 128,
            block: 16,
            channel: Channel::Luminance,
        }
    }
}

impl DctLbpConfig {
    pub fn validate(&self) -> Result<()> {
        if ![8, 16, 32].contains(&self.block) {
            return Err(Error::InvalidParam(format!(
                "block {} not in {{8, 16, 32}}",
                self.block
            )));
        }
        if self.canvas == 0 || !self.canvas.is_multiple_of(self.block) {
            return Err(Error::InvalidParam(format!(
                "block {} does not divide canvas {}",
                self.block, self.canvas
            )));
        }
        Ok(())
    }
}

/// LBP code of a 3×3 window (row-major).
///
/// Neighbors are visited clockwise from the top-left, which is the most
/// significant bit; a bit is set when the neighbor is `>=` the center.
pub fn lbp_code(window: &[[u8; 3]; 3]) -> u8 {
    const ORDER: [(usize, usize); 8] = [
        (0, 0),
        (0, 1),
        (0, 2),
        (1, 2),
        (2, 2),
        (2, 1),
        (2, 0),
        (1, 0),
    ];
    let center = window[1][1];
    ORDER
        .iter()
        .fold(0u8, |code, &(r, c)| (code << 1) | u8::from(window[r][c] >= center))
}

/// Per-pixel LBP codes with clamp-to-edge padding; output has the input's size.
pub fn lbp_map(gray: &RasterImage) -> Result<RasterImage> {
    if gray.channels() != 1 {
        return Err(Error::ShapeMismatch("lbp_map expects a 1-channel image".into()));
    }
    let (w, h) = (gray.width(), gray.height());
    if w < 3 || h < 3 {
        return Err(Error::TooSmall(format!("LBP needs at least 3x3, got {w}x{h}")));
    }
    let mut out = Vec::with_capacity(w * h);
    let mut window = [[0u8; 3]; 3];
    for y in 0..h {
        for x in 0..w {
            for (r, row) in window.iter_mut().enumerate() {
                let sy = (y + r).saturating_sub(1).min(h - 1);
                for (c, v) in row.iter_mut().enumerate() {
                    let sx = (x + c).saturating_sub(1).min(w - 1);
                    *v = gray.get(sx, sy, 0);
                }
            }
            out.push(lbp_code(&window));
        }
    }
    RasterImage::new(w, h, 1, out)
}

/// Precomputed orthonormal DCT-II basis for `n`×`n` blocks.
#[derive(Clone, Debug)]
pub struct Dct2d {
    n: usize,
    // basis[k * n + i] = c(k) cos(pi (2i + 1) k / 2n)
    basis: Vec<f64>,
}

impl Dct2d {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "DCT size must be >= 1");
        let nf = n as f64;
        let mut basis = Vec::with_capacity(n * n);
        for k in 0..n {
            let ck = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            for i in 0..n {
                basis.push(
                    ck * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos(),
                );
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Row-major `n`×`n` forward transform.
    pub fn forward(&self, block: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(block.len(), n * n, "block must be {n}x{n}");
        // rows: tmp[r][k] = sum_i basis[k][i] * x[r][i]
        let mut tmp = vec![0.0; n * n];
        for r in 0..n {
            for k in 0..n {
                tmp[r * n + k] = (0..n).map(|i| self.basis[k * n + i] * block[r * n + i]).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for c in 0..n {
                out[k * n + c] = (0..n).map(|r| self.basis[k * n + r] * tmp[r * n + c]).sum();
            }
        }
        out
    }

    /// Row-major `n`×`n` inverse transform.
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(coeffs.len(), n * n, "block must be {n}x{n}");
        let mut tmp = vec![0.0; n * n];
        for u in 0..n {
            for i in 0..n {
                tmp[u * n + i] = (0..n).map(|v| self.basis[v * n + i] * coeffs[u * n + v]).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = (0..n).map(|u| self.basis[u * n + r] * tmp[u * n + c]).sum();
            }
        }
        out
    }
}

/// Orthonormal 2D DCT-II of a row-major `n`×`n` block.
pub fn dct2(block: &[f64], n: usize) -> Vec<f64> {
    Dct2d::new(n).forward(block)
}

/// Inverse of [`dct2`].
pub fn idct2(coeffs: &[f64], n: usize) -> Vec<f64> {
    Dct2d::new(n).inverse(coeffs)
}

/// Selects the analysis channel for the DCT-LBP pipeline.
pub fn select_channel(img: &RasterImage, channel: Channel) -> RasterImage {
    match channel {
        Channel::Luminance => imaging::to_grayscale(img),
        Channel::ChromaRed => imaging::to_chroma_red(img),
    }
}

/// Unscaled DCT-LBP feature vector of length `block`².
pub fn dct_lbp_features(img: &RasterImage, cfg: &DctLbpConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let plane = select_channel(img, cfg.channel);
    let canvas = imaging::resize_bilinear(&plane, cfg.canvas, cfg.canvas)?;
    let lbp = lbp_map(&canvas)?;
    let b = cfg.block;
    let tiles_per_side = cfg.canvas / b;
    let dct = Dct2d::new(b);

    let mut sum = vec![0.0; b * b];
    let mut sum_sq = vec![0.0; b * b];
    let mut tile = vec![0.0; b * b];
    for ty in 0..tiles_per_side {
        for tx in 0..tiles_per_side {
            for r in 0..b {
                for c in 0..b {
                    tile[r * b + c] = lbp.get(tx * b + c, ty * b + r, 0) as f64;
                }
            }
            for (i, v) in dct.forward(&tile).into_iter().enumerate() {
                sum[i] += v;
                sum_sq[i] += v * v;
            }
        }
    }
    let count = (tiles_per_side * tiles_per_side) as f64;
    let values = sum
        .iter()
        .zip(&sum_sq)
        .map(|(&s, &sq)| {
            let mean = s / count;
            (sq / count - mean * mean).max(0.0).sqrt()
        })
        .collect();
    Ok(FeatureVector::new(values, FeatureKind::DctLbp))
}

/// Componentwise min/max fitted on training vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }
}

pub fn fit_scaling<'a, I>(train: I) -> Result<ScalingParams>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = train.into_iter();
    let first = iter.next().ok_or(Error::EmptySet)?;
    let mut min = first.to_vec();
    let mut max = first.to_vec();
    for v in iter {
        if v.len() != min.len() {
            return Err(Error::LengthMismatch {
                expected: min.len(),
                actual: v.len(),
            });
        }
        for (i, &x) in v.iter().enumerate() {
            min[i] = min[i].min(x);
            max[i] = max[i].max(x);
        }
    }
    Ok(ScalingParams { min, max })
}

/// Maps each component into `[0, 1]` using fitted bounds, clamping out-of-range values.
/// Components with `max == min` map to 0.
pub fn apply_scaling(v: &[f64], p: &ScalingParams) -> Result<Vec<f64>> {
    if v.len() != p.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            actual: v.len(),
        });
    }
    Ok(v.iter()
        .zip(p.min.iter().zip(&p.max))
        .map(|(&x, (&lo, &hi))| {
            if hi > lo {
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect())
}
