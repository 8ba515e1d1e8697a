//! Raster primitives, geometric/photometric transforms and the codec boundary.
//!
//! Every operation here is a pure function of its inputs. Real-valued
//! intermediate results are converted back to 8 bits with round-half-up.

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};

/// Decoded 8-bit raster, row-major and channel-interleaved.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions {width}x{height} must be >= 1"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!(
                "channel count {channels} not in {{1, 3}}"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::InvalidRaster(format!(
                "data length {} != {width}*{height}*{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image by evaluating `f(x, y, channel)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        let idx = (y * self.width + x) * self.channels + c;
        self.data[idx] = v;
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Copies the `w`×`h` rectangle whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<RasterImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::ShapeMismatch(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        RasterImage::new(w, h, self.channels, data)
    }

    /// Converts a 1-channel image to 3 channels by replication; 3-channel input is cloned.
    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }
}

/// JPEG quality factor in `[1, 100]`; 100 means the least quantization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JpegQuality(u8);

impl JpegQuality {
    pub fn new(value: i64) -> Result<Self> {
        if (1..=100).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(Error::InvalidQuality(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl Default for JpegQuality {
    fn default() -> Self {
        Self(90)
    }
}

/// Round-half-up of a non-negative real, saturated to 8 bits.
#[inline]
pub(crate) fn round_u8(v: f64) -> u8 {
    let r = (v + 0.5).floor();
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// Decodes a JPEG, PNG, TIFF or BMP stream into an 8-bit raster.
///
/// Sources without color information decode to one channel, everything else
/// to three (alpha is dropped).
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    let format = image::guess_format(bytes).map_err(|_| Error::UnsupportedFormat)?;
    if !matches!(
        format,
        ImageFormat::Jpeg | ImageFormat::Png | ImageFormat::Tiff | ImageFormat::Bmp
    ) {
        return Err(Error::UnsupportedFormat);
    }
    let dynamic = image::load_from_memory_with_format(bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(_) => Error::UnsupportedFormat,
        other => Error::CorruptStream(other.to_string()),
    })?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    if dynamic.color().has_color() {
        RasterImage::new(w, h, 3, dynamic.into_rgb8().into_raw())
    } else {
        RasterImage::new(w, h, 1, dynamic.into_luma8().into_raw())
    }
}

fn color_type(img: &RasterImage) -> ExtendedColorType {
    if img.channels == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    }
}

fn check_encodable(img: &RasterImage) -> Result<(u32, u32)> {
    if img.width > u16::MAX as usize || img.height > u16::MAX as usize {
        return Err(Error::EncodeFailure(format!(
            "{}x{} exceeds the 65535 pixel limit",
            img.width, img.height
        )));
    }
    Ok((img.width as u32, img.height as u32))
}

/// Baseline JPEG with the standard quality-scaled quantization tables and no
/// chroma subsampling.
pub fn encode_jpeg(img: &RasterImage, quality: JpegQuality) -> Result<Vec<u8>> {
    let (w, h) = check_encodable(img)?;
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality.value())
        .write_image(&img.data, w, h, color_type(img))
        .map_err(|e| Error::EncodeFailure(e.to_string()))?;
    Ok(out)
}

/// Lossless 8-bit PNG.
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>> {
    let (w, h) = check_encodable(img)?;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(Cursor::new(&mut out))
        .write_image(&img.data, w, h, color_type(img))
        .map_err(|e| Error::EncodeFailure(e.to_string()))?;
    Ok(out)
}

/// JPEG encode followed by decode.
pub fn jpeg_roundtrip(img: &RasterImage, quality: JpegQuality) -> Result<RasterImage> {
    let decoded = decode_image(&encode_jpeg(img, quality)?)?;
    // Grayscale JPEGs always decode to one channel, RGB ones to three.
    debug_assert_eq!(decoded.channels, img.channels);
    Ok(decoded)
}

pub fn read_image(path: &std::path::Path) -> Result<RasterImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Writes `img` as PNG, or as JPEG when the extension is `.jpg`/`.jpeg`
/// (quality 95).
pub fn write_image(path: &std::path::Path, img: &RasterImage) -> Result<()> {
    let is_jpeg = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("jpg") || e.eq_ignore_ascii_case("jpeg"))
        .unwrap_or(false);
    let bytes = if is_jpeg {
        encode_jpeg(img, JpegQuality(95))?
    } else {
        encode_png(img)?
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Rec.601 luma, `round(0.299R + 0.587G + 0.114B)`. One-channel input is returned unchanged.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    if img.channels == 1 {
        return img.clone();
    }
    let data = img
        .data
        .chunks_exact(3)
        .map(|p| round_u8(0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64))
        .collect();
    RasterImage {
        width: img.width,
        height: img.height,
        channels: 1,
        data,
    }
}

/// Chroma-red plane, `128 + 0.5R - 0.418688G - 0.081312B` (JFIF). One-channel input
/// has no chroma and maps to a constant 128 plane.
pub fn to_chroma_red(img: &RasterImage) -> RasterImage {
    let data = if img.channels == 1 {
        vec![128; img.width * img.height]
    } else {
        img.data
            .chunks_exact(3)
            .map(|p| {
                round_u8(
                    128.0 + 0.5 * p[0] as f64 - 0.418688 * p[1] as f64 - 0.081312 * p[2] as f64,
                )
            })
            .collect()
    };
    RasterImage {
        width: img.width,
        height: img.height,
        channels: 1,
        data,
    }
}

/// Box (uniform mean) blur over a `k`×`k` window with clamp-to-edge borders.
pub fn box_blur(img: &RasterImage, k: usize) -> Result<RasterImage> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidKernel(k));
    }
    let r = (k / 2) as isize;
    let (w, h, ch) = (img.width as isize, img.height as isize, img.channels);
    let area = (k * k) as u32;
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut sum = 0u32;
                for dy in -r..=r {
                    let sy = (y + dy).clamp(0, h - 1) as usize;
                    for dx in -r..=r {
                        let sx = (x + dx).clamp(0, w - 1) as usize;
                        sum += img.get(sx, sy, c) as u32;
                    }
                }
                // round-half-up of sum / area in integer arithmetic
                out.set(x as usize, y as usize, c, ((2 * sum + area) / (2 * area)) as u8);
            }
        }
    }
    Ok(out)
}

/// Bilinear sample at a real coordinate already known to be inside the image.
#[inline]
fn bilinear(img: &RasterImage, sx: f64, sy: f64, c: usize) -> f64 {
    let x0 = sx.floor() as usize;
    let y0 = sy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = sx - x0 as f64;
    let fy = sy - y0 as f64;
    let top = img.get(x0, y0, c) as f64 * (1.0 - fx) + img.get(x1, y0, c) as f64 * fx;
    let bottom = img.get(x0, y1, c) as f64 * (1.0 - fx) + img.get(x1, y1, c) as f64 * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Rotation (degrees, counter-clockwise in image coordinates) composed with a
/// horizontal shear, about the image center.
///
/// Output pixels are inverse-mapped and bilinearly resampled. Source
/// coordinates outside the image fill with 0; output dimensions equal input.
pub fn affine_warp(img: &RasterImage, rotation_deg: f64, shear_x: f64) -> RasterImage {
    if rotation_deg == 0.0 && shear_x == 0.0 {
        return img.clone();
    }
    // forward: A = R(theta) * S, S = [[1, shear], [0, 1]]
    let theta = rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let a = [[cos, cos * shear_x - sin], [sin, sin * shear_x + cos]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let inv = [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ];
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let max_x = img.width as f64 - 1.0;
    let max_y = img.height as f64 - 1.0;
    const SNAP: f64 = 1e-9;

    let mut out = RasterImage {
        width: img.width,
        height: img.height,
        channels: img.channels,
        data: vec![0; img.data.len()],
    };
    for y in 0..img.height {
        for x in 0..img.width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let mut sx = inv[0][0] * dx + inv[0][1] * dy + cx;
            let mut sy = inv[1][0] * dx + inv[1][1] * dy + cy;
            if sx < -SNAP || sy < -SNAP || sx > max_x + SNAP || sy > max_y + SNAP {
                continue;
            }
            sx = sx.clamp(0.0, max_x);
            sy = sy.clamp(0.0, max_y);
            // snap floating noise onto the grid so exact-grid warps stay exact
            if (sx - sx.round()).abs() < SNAP {
                sx = sx.round();
            }
            if (sy - sy.round()).abs() < SNAP {
                sy = sy.round();
            }
            for c in 0..img.channels {
                out.set(x, y, c, round_u8(bilinear(img, sx, sy, c)));
            }
        }
    }
    out
}

/// Bilinear resize with corner-aligned sampling (output corners map onto input corners).
pub fn resize_bilinear(img: &RasterImage, w: usize, h: usize) -> Result<RasterImage> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidParam(format!("resize target {w}x{h}")));
    }
    if w == img.width && h == img.height {
        return Ok(img.clone());
    }
    let scale = |out_len: usize, in_len: usize| {
        if out_len > 1 {
            (in_len as f64 - 1.0) / (out_len as f64 - 1.0)
        } else {
            0.0
        }
    };
    let sxs = scale(w, img.width);
    let sys = scale(h, img.height);
    let center = |out_len: usize, in_len: usize| {
        if out_len == 1 {
            (in_len as f64 - 1.0) / 2.0
        } else {
            0.0
        }
    };
    let ox = center(w, img.width);
    let oy = center(h, img.height);
    let mut data = Vec::with_capacity(w * h * img.channels);
    for y in 0..h {
        let sy = (oy + y as f64 * sys).min(img.height as f64 - 1.0);
        for x in 0..w {
            let sx = (ox + x as f64 * sxs).min(img.width as f64 - 1.0);
            for c in 0..img.channels {
                data.push(round_u8(bilinear(img, sx, sy, c)));
            }
        }
    }
    RasterImage::new(w, h, img.channels, data)
}

/// Per-sample absolute difference.
pub fn abs_diff(a: &RasterImage, b: &RasterImage) -> Result<RasterImage> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&p, &q)| p.abs_diff(q))
        .collect();
    Ok(RasterImage {
        width: a.width,
        height: a.height,
        channels: a.channels,
        data,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlipAxis {
    /// Mirror left-right.
    Horizontal,
    /// Mirror top-bottom.
    Vertical,
}

pub fn flip(img: &RasterImage, axis: FlipAxis) -> RasterImage {
    let (w, h) = (img.width, img.height);
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = match axis {
                FlipAxis::Horizontal => (w - 1 - x, y),
                FlipAxis::Vertical => (x, h - 1 - y),
            };
            for c in 0..img.channels {
                out.set(x, y, c, img.get(sx, sy, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, data: &[u8]) -> RasterImage {
        RasterImage::new(w, h, 1, data.to_vec()).unwrap()
    }

    #[test]
    fn raster_rejects_bad_length_and_channels() {
        assert!(RasterImage::new(2, 2, 3, vec![0; 11]).is_err());
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(0, 2, 1, vec![]).is_err());
    }

    #[test]
    fn png_roundtrip_white_rgb_and_black_gray() {
        let white = RasterImage::filled(2, 2, 3, 255).unwrap();
        assert_eq!(decode_image(&encode_png(&white).unwrap()).unwrap(), white);
        let black = RasterImage::filled(1, 1, 1, 0).unwrap();
        let back = decode_image(&encode_png(&black).unwrap()).unwrap();
        assert_eq!(back.channels(), 1);
        assert_eq!(back.data(), &[0]);
    }

    #[test]
    fn decode_rejects_garbage_and_truncation() {
        assert!(matches!(
            decode_image(b"not an image at all"),
            Err(Error::UnsupportedFormat)
        ));
        let img = RasterImage::from_fn(16, 16, 3, |x, y, c| (x * 7 + y * 3 + c * 50) as u8).unwrap();
        let png = encode_png(&img).unwrap();
        assert!(matches!(
            decode_image(&png[..png.len() / 2]),
            Err(Error::CorruptStream(_))
        ));
    }

    #[test]
    fn jpeg_constant_128_is_exact() {
        for q in [50, 75, 90, 95, 100] {
            let img = RasterImage::filled(8, 8, 3, 128).unwrap();
            let back = jpeg_roundtrip(&img, JpegQuality::new(q).unwrap()).unwrap();
            assert_eq!(back, img, "8x8 q={q}");
            let img = RasterImage::filled(64, 64, 3, 128).unwrap();
            let back = jpeg_roundtrip(&img, JpegQuality::new(q).unwrap()).unwrap();
            assert_eq!(back, img, "64x64 q={q}");
        }
        let g = RasterImage::filled(8, 8, 1, 128).unwrap();
        assert_eq!(jpeg_roundtrip(&g, JpegQuality::new(90).unwrap()).unwrap(), g);
    }

    #[test]
    fn jpeg_q100_gradient_error_bound() {
        // Linear gradient; max per-sample error measured at 1 with this codec, bound frozen at 3.
        let img = RasterImage::from_fn(64, 64, 3, |x, y, c| (x * 2 + y + c * 10) as u8).unwrap();
        let back = jpeg_roundtrip(&img, JpegQuality::new(100).unwrap()).unwrap();
        assert!(back.same_shape(&img));
        let max = abs_diff(&img, &back).unwrap().data().iter().copied().max().unwrap();
        assert!(max <= 3, "max roundtrip error {max}");
    }

    #[test]
    fn jpeg_quality_range() {
        assert!(matches!(JpegQuality::new(0), Err(Error::InvalidQuality(0))));
        assert!(JpegQuality::new(101).is_err());
        assert_eq!(JpegQuality::new(100).unwrap().value(), 100);
    }

    #[test]
    fn grayscale_weights() {
        let red = RasterImage::new(1, 1, 3, vec![255, 0, 0]).unwrap();
        assert_eq!(to_grayscale(&red).data(), &[76]);
        let white = RasterImage::filled(1, 1, 3, 255).unwrap();
        assert_eq!(to_grayscale(&white).data(), &[255]);
        let g = gray(2, 1, &[3, 9]);
        assert_eq!(to_grayscale(&g), g);
    }

    #[test]
    fn box_blur_cases() {
        let c = RasterImage::filled(5, 4, 3, 77).unwrap();
        assert_eq!(box_blur(&c, 5).unwrap(), c);
        let mut center = vec![0u8; 9];
        center[4] = 255;
        let out = box_blur(&gray(3, 3, &center), 3).unwrap();
        assert_eq!(out.get(1, 1, 0), 28);
        let one = gray(1, 1, &[200]);
        assert_eq!(box_blur(&one, 3).unwrap(), one);
        assert!(matches!(box_blur(&one, 4), Err(Error::InvalidKernel(4))));
        assert!(matches!(box_blur(&one, 1), Err(Error::InvalidKernel(1))));
    }

    #[test]
    fn affine_identity_and_full_turn() {
        let img = RasterImage::from_fn(17, 12, 3, |x, y, c| ((x * 31 + y * 17 + c * 5) % 256) as u8)
            .unwrap();
        assert_eq!(affine_warp(&img, 0.0, 0.0), img);
        let turned = affine_warp(&img, 360.0, 0.0);
        let max = abs_diff(&img, &turned).unwrap().data().iter().copied().max().unwrap();
        assert!(max <= 1, "360 degree error {max}");
    }

    #[test]
    fn affine_constant_image_zero_fills_corners() {
        let img = RasterImage::filled(32, 32, 1, 90).unwrap();
        let out = affine_warp(&img, 30.0, 0.2);
        assert!(out.data().iter().all(|&v| v == 90 || v == 0));
        assert_eq!(out.get(16, 16, 0), 90);
        assert_eq!(out.get(0, 0, 0), 0);
    }

    #[test]
    fn resize_golden_and_identity() {
        let img = gray(2, 1, &[0, 255]);
        assert_eq!(resize_bilinear(&img, 3, 1).unwrap().data(), &[0, 128, 255]);
        let big = RasterImage::from_fn(128, 128, 1, |x, y, _| (x ^ y) as u8).unwrap();
        assert_eq!(resize_bilinear(&big, 128, 128).unwrap(), big);
        let c = RasterImage::filled(7, 5, 3, 42).unwrap();
        let r = resize_bilinear(&c, 13, 2).unwrap();
        assert!(r.data().iter().all(|&v| v == 42));
        assert!(resize_bilinear(&c, 0, 2).is_err());
    }

    #[test]
    fn abs_diff_cases() {
        let a = RasterImage::filled(3, 3, 1, 0).unwrap();
        let b = RasterImage::filled(3, 3, 1, 255).unwrap();
        assert!(abs_diff(&a, &b).unwrap().data().iter().all(|&v| v == 255));
        assert!(abs_diff(&a, &a).unwrap().data().iter().all(|&v| v == 0));
        let c = RasterImage::filled(3, 3, 3, 0).unwrap();
        assert!(matches!(abs_diff(&a, &c), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn flip_cases() {
        let img = gray(2, 1, &[10, 20]);
        assert_eq!(flip(&img, FlipAxis::Horizontal).data(), &[20, 10]);
        assert_eq!(flip(&img, FlipAxis::Vertical), img);
    }

    #[test]
    fn crop_bounds() {
        let img = RasterImage::from_fn(4, 4, 1, |x, y, _| (y * 4 + x) as u8).unwrap();
        assert_eq!(img.crop(1, 2, 2, 2).unwrap().data(), &[9, 10, 13, 14]);
        assert!(img.crop(3, 3, 2, 1).is_err());
    }

    fn arb_image() -> impl Strategy<Value = RasterImage> {
        (1usize..12, 1usize..12, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(
            |(w, h, c)| {
                proptest::collection::vec(any::<u8>(), w * h * c)
                    .prop_map(move |d| RasterImage::new(w, h, c, d).unwrap())
            },
        )
    }

    proptest! {
        #[test]
        fn abs_diff_commutes(a in arb_image(), seed in any::<u8>()) {
            let b = RasterImage::new(
                a.width(), a.height(), a.channels(),
                a.data().iter().map(|v| v.wrapping_mul(seed).wrapping_add(13)).collect(),
            ).unwrap();
            prop_assert_eq!(abs_diff(&a, &b).unwrap(), abs_diff(&b, &a).unwrap());
            prop_assert!(abs_diff(&a, &a).unwrap().data().iter().all(|&v| v == 0));
        }

        #[test]
        fn flip_is_involution(a in arb_image()) {
            for axis in [FlipAxis::Horizontal, FlipAxis::Vertical] {
                prop_assert_eq!(flip(&flip(&a, axis), axis), a.clone());
            }
        }

        #[test]
        fn constant_images_stay_constant(w in 1usize..20, h in 1usize..20, v in any::<u8>(), k in 1usize..4) {
            let img = RasterImage::filled(w, h, 3, v).unwrap();
            prop_assert_eq!(box_blur(&img, 2 * k + 1).unwrap(), img.clone());
            prop_assert_eq!(flip(&img, FlipAxis::Vertical), img.clone());
            let r = resize_bilinear(&img, h + 3, w + 1).unwrap();
            prop_assert!(r.data().iter().all(|&s| s == v));
        }

        #[test]
        fn transforms_preserve_shape(a in arb_image(), rot in -30.0f64..30.0, sh in -0.3f64..0.3) {
            let warped = affine_warp(&a, rot, sh);
            prop_assert!(warped.same_shape(&a));
            let blurred = box_blur(&a, 3).unwrap();
            prop_assert!(blurred.same_shape(&a));
        }
    }
}
