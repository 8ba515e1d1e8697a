//! Seeded procedural scenes used as forgery sources when no photographs are
//! available (tests, demos, the acceptance corpus).
//!
//! Scenes mimic camera output: piecewise-smooth content with a few shapes and
//! textured regions, sensor noise, and optionally an in-camera JPEG pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::imaging::{self, round_u8, JpegQuality, RasterImage};

/// Bilinearly interpolated lattice noise in `[0, 1]`.
struct ValueNoise {
    cells: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(cells: usize, rng: &mut ChaCha8Rng) -> Self {
        let n = cells + 2;
        Self {
            cells,
            lattice: (0..n * n).map(|_| rng.random::<f64>()).collect(),
        }
    }

    /// `u, v` in `[0, 1]`.
    fn at(&self, u: f64, v: f64) -> f64 {
        let n = self.cells + 2;
        let fx = u * self.cells as f64;
        let fy = v * self.cells as f64;
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        // smoothstep
        let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
        let l = |x: usize, y: usize| self.lattice[y.min(n - 1) * n + x.min(n - 1)];
        let top = l(x0, y0) * (1.0 - sx) + l(x0 + 1, y0) * sx;
        let bottom = l(x0, y0 + 1) * (1.0 - sx) + l(x0 + 1, y0 + 1) * sx;
        top * (1.0 - sy) + bottom * sy
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.random_range(30.0..225.0),
        rng.random_range(30.0..225.0),
        rng.random_range(30.0..225.0),
    ]
}

fn render(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<RasterImage> {
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            data.extend(f(x, y).iter().map(|&v| round_u8(v.clamp(0.0, 255.0))));
        }
    }
    RasterImage::new(w, h, 3, data)
}

/// Low-frequency gradient with soft blobs and faint noise.
pub fn smooth_scene(w: usize, h: usize, seed: u64) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_color(&mut rng);
    let b = random_color(&mut rng);
    let noise = ValueNoise::new(3, &mut rng);
    let sigma = 1.0;
    let mut nrng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    render(w, h, |x, y| {
        let u = x as f64 / w as f64;
        let v = y as f64 / h as f64;
        let t = 0.6 * v + 0.4 * noise.at(u, v);
        let n = sigma * gaussian(&mut nrng);
        [
            a[0] * (1.0 - t) + b[0] * t + n,
            a[1] * (1.0 - t) + b[1] * t + n,
            a[2] * (1.0 - t) + b[2] * t + n,
        ]
    })
}

/// Multi-octave high-detail texture.
pub fn textured_scene(w: usize, h: usize, seed: u64) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = random_color(&mut rng);
    let octaves: Vec<ValueNoise> = [4, 9, 21, 45]
        .iter()
        .map(|&c| ValueNoise::new(c, &mut rng))
        .collect();
    let mut nrng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e47);
    render(w, h, |x, y| {
        let u = x as f64 / w as f64;
        let v = y as f64 / h as f64;
        let detail: f64 = octaves
            .iter()
            .enumerate()
            .map(|(i, o)| (o.at(u, v) - 0.5) * 120.0 / (1 << i) as f64 * 1.6)
            .sum();
        let n = 6.0 * gaussian(&mut nrng);
        [base[0] + detail + n, base[1] + detail * 0.9 + n, base[2] + detail * 0.8 + n]
    })
}

/// Parameters of a camera-like scene.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    /// Standard deviation of additive sensor noise, in 8-bit units.
    pub noise_sigma: f64,
    /// Number of flat shapes drawn over the background.
    pub shapes: usize,
    /// In-camera JPEG pass; `None` leaves the raster uncompressed.
    pub camera_quality: Option<JpegQuality>,
    /// Smooth sky above a wavy horizon; without it the texture fills the frame.
    pub sky: bool,
    /// Allow axis-aligned rectangles among the shapes (otherwise ellipses only).
    pub rectangles: bool,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 384,
            height: 256,
            noise_sigma: 2.0,
            shapes: 6,
            camera_quality: Some(JpegQuality::new(75).expect("75 is a valid quality")),
            sky: true,
            rectangles: true,
        }
    }
}

/// Camera-like scene: smooth sky, a textured ground band, flat shapes, noise
/// and an optional in-camera JPEG pass.
pub fn camera_scene(params: &SceneParams, seed: u64) -> Result<RasterImage> {
    let (w, h) = (params.width, params.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sky_top = random_color(&mut rng);
    let sky_bottom = random_color(&mut rng);
    let ground = random_color(&mut rng);
    let horizon = if params.sky { rng.random_range(0.35..0.7) } else { 0.0 };
    let sky_noise = ValueNoise::new(2, &mut rng);
    let ground_noise = [
        ValueNoise::new(6, &mut rng),
        ValueNoise::new(17, &mut rng),
        ValueNoise::new(41, &mut rng),
    ];
    let horizon_noise = ValueNoise::new(5, &mut rng);
    let texture_gain = rng.random_range(40.0..110.0);

    struct Shape {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
        ellipse: bool,
        color: [f64; 3],
    }
    let shapes: Vec<Shape> = (0..params.shapes)
        .map(|_| Shape {
            cx: rng.random_range(0.0..1.0),
            cy: rng.random_range(0.0..1.0),
            rx: rng.random_range(0.03..0.15),
            ry: rng.random_range(0.03..0.15),
            ellipse: rng.random_bool(0.5) || !params.rectangles,
            color: random_color(&mut rng),
        })
        .collect();

    let mut nrng = ChaCha8Rng::seed_from_u64(seed ^ 0xca3e7a);
    let img = render(w, h, |x, y| {
        let u = x as f64 / w as f64;
        let v = y as f64 / h as f64;
        let edge = horizon + 0.12 * (horizon_noise.at(u, 0.5) - 0.5);
        let mut px = if v < edge {
            let t = (v / edge) * 0.8 + 0.2 * sky_noise.at(u, v);
            [0, 1, 2].map(|c| sky_top[c] * (1.0 - t) + sky_bottom[c] * t)
        } else {
            let d: f64 = ground_noise
                .iter()
                .enumerate()
                .map(|(i, o)| (o.at(u, v) - 0.5) * texture_gain / (1 << i) as f64)
                .sum();
            [0, 1, 2].map(|c| ground[c] + d * (1.0 - 0.1 * c as f64))
        };
        for s in &shapes {
            let (dx, dy) = ((u - s.cx) / s.rx, (v - s.cy) / s.ry);
            let inside = if s.ellipse {
                dx * dx + dy * dy <= 1.0
            } else {
                dx.abs() <= 1.0 && dy.abs() <= 1.0
            };
            if inside {
                px = s.color;
            }
        }
        let n = params.noise_sigma * gaussian(&mut nrng);
        px.map(|p| p + n)
    })?;
    match params.camera_quality {
        Some(q) => imaging::jpeg_roundtrip(&img, q),
        None => Ok(img),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_and_sized() {
        let p = SceneParams {
            width: 96,
            height: 64,
            ..SceneParams::default()
        };
        let a = camera_scene(&p, 4).unwrap();
        assert_eq!((a.width(), a.height(), a.channels()), (96, 64, 3));
        assert_eq!(a, camera_scene(&p, 4).unwrap());
        assert_ne!(a, camera_scene(&p, 5).unwrap());
        assert_eq!(smooth_scene(20, 10, 1).unwrap(), smooth_scene(20, 10, 1).unwrap());
        assert_eq!(textured_scene(20, 10, 1).unwrap(), textured_scene(20, 10, 1).unwrap());
    }
}
