//! Tamper-mask prediction from the ELA heatmap, and mask overlap metrics.
//!
//! The predictor is a fixed, non-learned chain: ELA (auto-max gain) →
//! grayscale → 128×128 → threshold → open → close → small-component removal.

use std::collections::VecDeque;
use std::path::Path;

use crate::ela::{self, ElaConfig, Gain};
use crate::error::{Error, Result};
use crate::imaging::{self, JpegQuality, RasterImage};

/// Canonical mask canvas side.
pub const MASK_SIDE: usize = 128;

/// Binary mask; `true` marks a tampered pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TamperMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl TamperMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// 0/255 grayscale raster.
    pub fn to_raster(&self) -> RasterImage {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        RasterImage::new(self.width, self.height, 1, data).expect("mask dimensions are >= 1")
    }

    /// Binarizes a raster at half intensity (any channel count is reduced to luma first).
    pub fn from_raster(img: &RasterImage) -> Self {
        let gray = imaging::to_grayscale(img);
        Self {
            width: gray.width(),
            height: gray.height(),
            bits: gray.data().iter().map(|&v| v >= 128).collect(),
        }
    }

    /// Bilinear resample of the 0/255 raster, re-binarized at 0.5.
    pub fn resized(&self, width: usize, height: usize) -> Result<Self> {
        Ok(Self::from_raster(&imaging::resize_bilinear(
            &self.to_raster(),
            width,
            height,
        )?))
    }

    /// Writes a 1-bit grayscale PNG (black = authentic, white = tampered).
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc = png::Encoder::new(std::io::BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::EncodeFailure(e.to_string()))?;
        let stride = self.width.div_ceil(8);
        let mut packed = vec![0u8; stride * self.height];
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    packed[y * stride + x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        writer
            .write_image_data(&packed)
            .and_then(|_| writer.finish())
            .map_err(|e| Error::EncodeFailure(e.to_string()))
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        Ok(Self::from_raster(&imaging::read_image(path)?))
    }
}

/// Threshold policy for the heatmap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threshold {
    Otsu,
    Fixed(u8),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizeConfig {
    pub ela_quality: JpegQuality,
    pub threshold: Threshold,
    pub morph_radius: usize,
    pub min_component_area: usize,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        Self {
            ela_quality: JpegQuality::default(),
            threshold: Threshold::Otsu,
            morph_radius: 1,
            min_component_area: 16,
        }
    }
}

/// Otsu threshold over the 256-bin histogram of a 1-channel image.
///
/// Pixels `> t` are foreground. Ties in between-class variance resolve to the
/// smallest `t`; an image with a single occupied bin returns that value, so
/// its foreground is empty.
pub fn otsu_threshold(gray: &RasterImage) -> u8 {
    let mut hist = [0u64; 256];
    for &v in gray.data() {
        hist[v as usize] += 1;
    }
    let occupied: Vec<usize> = (0..256).filter(|&i| hist[i] > 0).collect();
    if occupied.len() <= 1 {
        return occupied.first().copied().unwrap_or(0) as u8;
    }
    // between-class variance ∝ d² / (n0·n1) with d = N·S0 − n0·S; compared
    // exactly while the cross products fit in u128
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(i, &n)| i as u64 * n).sum();
    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best: Option<(u8, u128, u128)> = None;
    for (t, &count) in hist.iter().enumerate() {
        n0 += count;
        s0 += t as u64 * count;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (total as i128 * s0 as i128 - n0 as i128 * total_sum as i128).unsigned_abs();
        let (num, den) = (d * d, n0 as u128 * n1 as u128);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => match (num.checked_mul(bd), bn.checked_mul(den)) {
                (Some(a), Some(b)) => a > b,
                _ => num as f64 / den as f64 > bn as f64 / bd as f64,
            },
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t).unwrap_or(0)
}

fn morph(mask: &TamperMask, radius: usize, dilate: bool) -> TamperMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width as isize, mask.height as isize);
    let r = radius as isize;
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            // out-of-bounds neighbors are ignored, which keeps open/close idempotent
            let mut hit = !dilate;
            'window: for dy in -r..=r {
                let sy = y + dy;
                if sy < 0 || sy >= h {
                    continue;
                }
                for dx in -r..=r {
                    let sx = x + dx;
                    if sx < 0 || sx >= w {
                        continue;
                    }
                    let v = mask.get(sx as usize, sy as usize);
                    if dilate && v {
                        hit = true;
                        break 'window;
                    }
                    if !dilate && !v {
                        hit = false;
                        break 'window;
                    }
                }
            }
            out.set(x as usize, y as usize, hit);
        }
    }
    out
}

pub fn erode(mask: &TamperMask, radius: usize) -> TamperMask {
    morph(mask, radius, false)
}

pub fn dilate(mask: &TamperMask, radius: usize) -> TamperMask {
    morph(mask, radius, true)
}

/// Erosion followed by dilation with a `(2r+1)`-square element.
pub fn open(mask: &TamperMask, radius: usize) -> TamperMask {
    dilate(&erode(mask, radius), radius)
}

/// Dilation followed by erosion with a `(2r+1)`-square element.
pub fn close(mask: &TamperMask, radius: usize) -> TamperMask {
    erode(&dilate(mask, radius), radius)
}

/// 8-connected components as lists of pixel indices, in scan order of their first pixel.
pub fn connected_components(mask: &TamperMask) -> Vec<Vec<usize>> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(p) = queue.pop_front() {
            comp.push(p);
            let (px, py) = ((p % w) as isize, (p / w) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (px + dx, py + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let q = ny as usize * w + nx as usize;
                    if mask.bits[q] && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Removes 8-connected components with fewer than `min_area` pixels.
pub fn remove_small_components(mask: &TamperMask, min_area: usize) -> TamperMask {
    let mut out = TamperMask::empty(mask.width, mask.height);
    for comp in connected_components(mask) {
        if comp.len() >= min_area {
            for p in comp {
                out.bits[p] = true;
            }
        }
    }
    out
}

/// Predicted tamper mask on the canonical 128×128 canvas.
pub fn predict_mask(img: &RasterImage, cfg: &LocalizeConfig) -> Result<TamperMask> {
    let ela_cfg = ElaConfig {
        quality: cfg.ela_quality,
        gain: Gain::AutoMax,
        ..ElaConfig::default()
    };
    let heat = imaging::to_grayscale(&ela::compute_ela(img, &ela_cfg)?);
    let heat = imaging::resize_bilinear(&heat, MASK_SIDE, MASK_SIDE)?;
    if heat.data().iter().all(|&v| v == 0) {
        return Ok(TamperMask::empty(MASK_SIDE, MASK_SIDE));
    }
    let t = match cfg.threshold {
        Threshold::Otsu => otsu_threshold(&heat),
        Threshold::Fixed(t) => t,
    };
    let raw = TamperMask {
        width: MASK_SIDE,
        height: MASK_SIDE,
        bits: heat.data().iter().map(|&v| v > t).collect(),
    };
    let cleaned = close(&open(&raw, cfg.morph_radius), cfg.morph_radius);
    Ok(remove_small_components(&cleaned, cfg.min_component_area))
}

fn overlap(pred: &TamperMask, gt: &TamperMask) -> Result<(usize, usize, usize)> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::ShapeMismatch(format!(
            "mask {}x{} vs ground truth {}x{}",
            pred.width, pred.height, gt.width, gt.height
        )));
    }
    let inter = pred.bits.iter().zip(&gt.bits).filter(|(&a, &b)| a && b).count();
    Ok((inter, pred.count(), gt.count()))
}

/// Intersection over union; 1.0 when both masks are empty.
pub fn mask_iou(pred: &TamperMask, gt: &TamperMask) -> Result<f64> {
    let (inter, p, g) = overlap(pred, gt)?;
    let union = p + g - inter;
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Pixel F1 `2|P∧G| / (|P| + |G|)`; 1.0 when both masks are empty.
pub fn mask_pixel_f1(pred: &TamperMask, gt: &TamperMask) -> Result<f64> {
    let (inter, p, g) = overlap(pred, gt)?;
    Ok(if p + g == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (p + g) as f64
    })
}

/// Fixed centered square mask, the reference predictor for localization checks.
pub fn centered_square_mask(side: usize, width: usize, height: usize) -> TamperMask {
    let mut m = TamperMask::empty(width, height);
    let x0 = width.saturating_sub(side) / 2;
    let y0 = height.saturating_sub(side) / 2;
    for y in y0..(y0 + side).min(height) {
        for x in x0..(x0 + side).min(width) {
            m.set(x, y, true);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rect_mask(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> TamperMask {
        let mut m = TamperMask::empty(w, h);
        for y in y0..y1 {
            for x in x0..x1 {
                m.set(x, y, true);
            }
        }
        m
    }

    // Exhaustive oracle straight from the definition on raw pixels.
    fn otsu_oracle(img: &RasterImage) -> u8 {
        let px: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
        let n = px.len() as f64;
        let distinct: std::collections::BTreeSet<u8> = img.data().iter().copied().collect();
        if distinct.len() == 1 {
            return img.data()[0];
        }
        let mut best = (f64::NEG_INFINITY, 0u8);
        for t in 0..=255u8 {
            let lo: Vec<f64> = px.iter().copied().filter(|&v| v <= t as f64).collect();
            let hi: Vec<f64> = px.iter().copied().filter(|&v| v > t as f64).collect();
            let var = if lo.is_empty() || hi.is_empty() {
                0.0
            } else {
                let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
                let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
                (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2)
            };
            if var > best.0 {
                best = (var, t);
            }
        }
        best.1
    }

    #[test]
    fn otsu_two_spikes_and_constant() {
        let img = RasterImage::from_fn(8, 8, 1, |x, _, _| if x < 4 { 0 } else { 255 }).unwrap();
        assert_eq!(otsu_threshold(&img), 0);
        let c = RasterImage::filled(5, 5, 1, 77).unwrap();
        let t = otsu_threshold(&c);
        assert_eq!(t, 77);
        assert!(c.data().iter().all(|&v| v <= t));
    }

    #[test]
    fn otsu_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let img = RasterImage::from_fn(16, 16, 1, |_, _, _| rng.random()).unwrap();
            assert_eq!(otsu_threshold(&img), otsu_oracle(&img));
        }
    }

    #[test]
    fn iou_and_f1_examples() {
        let a = rect_mask(8, 8, 1, 1, 4, 4);
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_pixel_f1(&a, &a).unwrap(), 1.0);
        let b = rect_mask(8, 8, 5, 5, 8, 8);
        assert_eq!(mask_iou(&a, &b).unwrap(), 0.0);

        let full = rect_mask(8, 8, 0, 0, 8, 8);
        let half = rect_mask(8, 8, 0, 0, 8, 4);
        assert_eq!(mask_iou(&full, &half).unwrap(), 0.5);

        let empty = TamperMask::empty(8, 8);
        assert_eq!(mask_pixel_f1(&empty, &a).unwrap(), 0.0);
        assert_eq!(mask_iou(&empty, &empty).unwrap(), 1.0);
        assert_eq!(mask_pixel_f1(&empty, &empty).unwrap(), 1.0);

        // gt area 16 plus an equal-area false region
        let gt = rect_mask(8, 8, 0, 0, 4, 4);
        let pred = rect_mask(8, 8, 0, 0, 8, 4);
        assert!((mask_pixel_f1(&pred, &gt).unwrap() - 2.0 / 3.0).abs() < 1e-12);

        let other = TamperMask::empty(4, 8);
        assert!(matches!(mask_iou(&a, &other), Err(Error::ShapeMismatch(_))));
        assert!(matches!(mask_pixel_f1(&a, &other), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn constant_image_predicts_empty_mask() {
        let img = RasterImage::filled(96, 80, 3, 128).unwrap();
        let m = predict_mask(&img, &LocalizeConfig::default()).unwrap();
        assert_eq!((m.width(), m.height()), (128, 128));
        assert!(m.is_empty());
    }

    #[test]
    fn small_components_removed_with_8_connectivity() {
        let mut m = TamperMask::empty(10, 10);
        // diagonal chain of 4 pixels is one component under 8-connectivity
        for i in 0..4 {
            m.set(i, i, true);
        }
        m.set(8, 1, true);
        assert_eq!(connected_components(&m).len(), 2);
        let kept = remove_small_components(&m, 4);
        assert_eq!(kept.count(), 4);
        assert!(!kept.get(8, 1));
    }

    #[test]
    fn opening_removes_specks_closing_fills_holes() {
        let mut m = rect_mask(16, 16, 2, 2, 10, 10);
        m.set(14, 14, true);
        m.set(5, 5, false);
        let opened = open(&m, 1);
        assert!(!opened.get(14, 14));
        let closed = close(&m, 1);
        assert!(closed.get(5, 5));
    }

    #[test]
    fn one_bit_png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = rect_mask(13, 7, 2, 1, 9, 5);
        m.write_png(&path).unwrap();
        let raster = imaging::read_image(&path).unwrap();
        assert!(raster.data().iter().all(|&v| v == 0 || v == 255));
        assert_eq!(TamperMask::read_png(&path).unwrap(), m);
    }

    fn arb_mask() -> impl Strategy<Value = TamperMask> {
        proptest::collection::vec(proptest::bool::weighted(0.4), 144)
            .prop_map(|bits| TamperMask::from_bits(12, 12, bits).unwrap())
    }

    proptest! {
        #[test]
        fn metrics_symmetric_bounded(a in arb_mask(), b in arb_mask()) {
            let iou = mask_iou(&a, &b).unwrap();
            let f1 = mask_pixel_f1(&a, &b).unwrap();
            prop_assert_eq!(iou, mask_iou(&b, &a).unwrap());
            prop_assert_eq!(f1, mask_pixel_f1(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&iou) && (0.0..=1.0).contains(&f1));
            prop_assert_eq!(iou == 1.0, a == b);
            prop_assert_eq!(f1 == 1.0, a == b);
        }

        #[test]
        fn open_close_idempotent(a in arb_mask(), r in 0usize..3) {
            let o = open(&a, r);
            prop_assert_eq!(open(&o, r), o);
            let c = close(&a, r);
            prop_assert_eq!(close(&c, r), c);
        }
    }
}
