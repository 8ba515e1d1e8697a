//! Corpus layout, synthetic forgeries, augmentation/ablation and splitting.
//!
//! Directory convention (CASIA2 style):
//!
//! ```text
//! root/Au/<name>.<ext>        authentic, label 0
//! root/Tp/<name>.<ext>        tampered, label 1
//! root/masks/<name>_gt.png    ground truth for Tp/<name>.<ext>
//! ```
//!
//! Records are always ordered lexicographically by image path. Augmented and
//! ablated records reference the original file and carry the transforms to
//! apply when loading, so nothing is materialized on disk.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{self, FlipAxis, JpegQuality, RasterImage};
use crate::localize::{TamperMask, MASK_SIDE};

pub const AUTHENTIC: u8 = 0;
pub const TAMPERED: u8 = 1;

const IMAGE_EXTENSIONS: [&str; 6] = ["jpg", "jpeg", "png", "tif", "tiff", "bmp"];

/// Image transform attached to a record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    FlipH,
    FlipV,
    /// Degrees.
    Rotate(f64),
    /// Horizontal shear ratio.
    Shear(f64),
    /// Box blur window side.
    Blur(usize),
    Grayscale,
}

impl Transform {
    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            Transform::FlipH | Transform::FlipV | Transform::Rotate(_) | Transform::Shear(_)
        )
    }

    pub fn apply(&self, img: &RasterImage) -> Result<RasterImage> {
        Ok(match *self {
            Transform::FlipH => imaging::flip(img, FlipAxis::Horizontal),
            Transform::FlipV => imaging::flip(img, FlipAxis::Vertical),
            Transform::Rotate(deg) => imaging::affine_warp(img, deg, 0.0),
            Transform::Shear(s) => imaging::affine_warp(img, 0.0, s),
            Transform::Blur(k) => imaging::box_blur(img, k)?,
            Transform::Grayscale => imaging::to_grayscale(img),
        })
    }

    /// Geometric transforms warp the mask (re-binarized at 0.5); photometric ones leave it alone.
    pub fn apply_mask(&self, mask: &TamperMask) -> Result<TamperMask> {
        if !self.is_geometric() {
            return Ok(mask.clone());
        }
        Ok(TamperMask::from_raster(&self.apply(&mask.to_raster())?))
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::FlipH => write!(f, "flip_h"),
            Transform::FlipV => write!(f, "flip_v"),
            Transform::Rotate(d) => write!(f, "rotate({d})"),
            Transform::Shear(s) => write!(f, "shear({s})"),
            Transform::Blur(k) => write!(f, "blur({k})"),
            Transform::Grayscale => write!(f, "grayscale"),
        }
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParam(format!("unknown transform {s:?}"));
        let arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(bad)
        };
        match s {
            "flip_h" => Ok(Transform::FlipH),
            "flip_v" => Ok(Transform::FlipV),
            "grayscale" => Ok(Transform::Grayscale),
            _ if s.starts_with("rotate(") => arg("rotate(")?.parse().map(Transform::Rotate).map_err(|_| bad()),
            _ if s.starts_with("shear(") => arg("shear(")?.parse().map(Transform::Shear).map_err(|_| bad()),
            _ if s.starts_with("blur(") => arg("blur(")?.parse().map(Transform::Blur).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Real,
    SynthCopyMove,
    SynthSplice,
    Augmented(Transform),
    Ablated(Transform),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Real => write!(f, "real"),
            Provenance::SynthCopyMove => write!(f, "synth-copy-move"),
            Provenance::SynthSplice => write!(f, "synth-splice"),
            Provenance::Augmented(t) => write!(f, "augmented({t})"),
            Provenance::Ablated(t) => write!(f, "ablated({t})"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
        match s {
            "real" => Ok(Provenance::Real),
            "synth-copy-move" => Ok(Provenance::SynthCopyMove),
            "synth-splice" => Ok(Provenance::SynthSplice),
            _ => {
                if let Some(t) = inner("augmented(") {
                    Ok(Provenance::Augmented(t.parse()?))
                } else if let Some(t) = inner("ablated(") {
                    Ok(Provenance::Ablated(t.parse()?))
                } else {
                    Err(Error::InvalidParam(format!("unknown provenance {s:?}")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub image_path: PathBuf,
    pub label: u8,
    pub mask_path: Option<PathBuf>,
    pub provenance: Provenance,
    /// Applied in order when the sample is loaded.
    pub transforms: Vec<Transform>,
}

impl SampleRecord {
    pub fn new(image_path: PathBuf, label: u8, mask_path: Option<PathBuf>, provenance: Provenance) -> Self {
        let transforms = match &provenance {
            Provenance::Augmented(t) | Provenance::Ablated(t) => vec![*t],
            _ => vec![],
        };
        Self {
            image_path,
            label,
            mask_path,
            provenance,
            transforms,
        }
    }

    /// Decoded image with every attached transform applied.
    pub fn load_image(&self) -> Result<RasterImage> {
        let mut img = imaging::read_image(&self.image_path)?;
        for t in &self.transforms {
            img = t.apply(&img)?;
        }
        Ok(img)
    }

    /// Ground-truth mask on the 128×128 canvas. Authentic samples always get
    /// the empty mask; tampered samples without a resolved mask yield `None`.
    pub fn effective_mask(&self) -> Result<Option<TamperMask>> {
        if self.label == AUTHENTIC {
            return Ok(Some(empty_mask(MASK_SIDE, MASK_SIDE)));
        }
        let Some(path) = &self.mask_path else {
            return Ok(None);
        };
        let mut mask = TamperMask::read_png(path)?;
        for t in &self.transforms {
            mask = t.apply_mask(&mask)?;
        }
        Ok(Some(mask.resized(MASK_SIDE, MASK_SIDE)?))
    }

    fn sort_key(&self) -> (PathBuf, String) {
        (self.image_path.clone(), self.provenance.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CorpusIndex {
    pub root: PathBuf,
    pub records: Vec<SampleRecord>,
}

impl CorpusIndex {
    pub fn new(root: PathBuf, mut records: Vec<SampleRecord>) -> Self {
        records.sort_by_key(SampleRecord::sort_key);
        Self { root, records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }

    /// Tampered records whose ground-truth mask could not be resolved.
    pub fn missing_masks(&self) -> Vec<&SampleRecord> {
        self.records
            .iter()
            .filter(|r| r.label == TAMPERED && r.mask_path.is_none())
            .collect()
    }

    /// Writes `image_path,label,mask_path,provenance`, paths relative to `root` when possible.
    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["image_path", "label", "mask_path", "provenance"])?;
        let rel = |p: &Path| {
            p.strip_prefix(&self.root)
                .unwrap_or(p)
                .to_string_lossy()
                .replace('\\', "/")
        };
        for r in &self.records {
            w.write_record([
                rel(&r.image_path),
                r.label.to_string(),
                r.mask_path.as_deref().map(rel).unwrap_or_default(),
                r.provenance.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest; relative paths resolve against the manifest's directory.
    pub fn read_manifest(path: &Path) -> Result<CorpusIndex> {
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut rdr = csv::Reader::from_path(path)?;
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let field = |i: usize| row.get(i).unwrap_or_default();
            let label: u8 = field(1)
                .parse()
                .map_err(|_| Error::InvalidParam(format!("bad label {:?}", field(1))))?;
            let mask = match field(2) {
                "" => None,
                m => Some(root.join(m)),
            };
            records.push(SampleRecord::new(root.join(field(0)), label, mask, field(3).parse()?));
        }
        Ok(CorpusIndex::new(root, records))
    }
}

fn is_image_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false)
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if is_image_file(&path) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Scans `root/Au`, `root/Tp` and resolves masks in `root/masks`.
pub fn scan_corpus(root: &Path) -> Result<CorpusIndex> {
    scan_corpus_with_masks(root, &root.join("masks"))
}

/// Like [`scan_corpus`] with an explicit ground-truth directory.
pub fn scan_corpus_with_masks(root: &Path, masks_dir: &Path) -> Result<CorpusIndex> {
    if !root.is_dir() {
        return Err(Error::MissingRoot(root.to_path_buf()));
    }
    let mut records = Vec::new();
    for path in list_images(&root.join("Au"))? {
        records.push(SampleRecord::new(path, AUTHENTIC, None, Provenance::Real));
    }
    for path in list_images(&root.join("Tp"))? {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let mask = masks_dir.join(format!("{stem}_gt.png"));
        let mask = mask.is_file().then_some(mask);
        records.push(SampleRecord::new(path, TAMPERED, mask, Provenance::Real));
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    Ok(CorpusIndex::new(root.to_path_buf(), records))
}

/// All-zero mask, the ground truth of every authentic image.
pub fn empty_mask(width: usize, height: usize) -> TamperMask {
    TamperMask::empty(width, height)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForgeryParams {
    pub patch_min: usize,
    pub patch_max: usize,
    /// Box-blur window applied to the 2-pixel band just inside the pasted rect.
    pub seam_blur: Option<usize>,
    pub seed: u64,
}

impl Default for ForgeryParams {
    fn default() -> Self {
        Self {
            patch_min: 16,
            patch_max: 48,
            seam_blur: None,
            seed: 0,
        }
    }
}

impl ForgeryParams {
    fn check(&self, images: &[&RasterImage]) -> Result<()> {
        let dims: Vec<(usize, usize)> = images.iter().map(|i| (i.width(), i.height())).collect();
        self.check_dims(&dims)
    }

    fn check_dims(&self, dims: &[(usize, usize)]) -> Result<()> {
        if self.patch_min < 4 || self.patch_min > self.patch_max {
            return Err(Error::InvalidParam(format!(
                "patch sizes {}..{} must satisfy 4 <= min <= max",
                self.patch_min, self.patch_max
            )));
        }
        if let Some(k) = self.seam_blur {
            if k < 3 || k % 2 == 0 {
                return Err(Error::InvalidKernel(k));
            }
        }
        for &(w, h) in dims {
            let limit = w.min(h) / 2;
            if self.patch_max > limit {
                return Err(Error::ImageTooSmall(format!(
                    "{w}x{h} image allows patches up to {limit}, need {}",
                    self.patch_max
                )));
            }
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x < o.x + o.w && o.x < self.x + self.w && self.y < o.y + o.h && o.y < self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

/// A synthesized forgery with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Forgery {
    pub image: RasterImage,
    /// Destination rect rescaled to the 128×128 canvas.
    pub mask: TamperMask,
    /// Destination rect at full resolution.
    pub rect: Rect,
    /// Where the patch came from (in the donor for splices).
    pub source: Rect,
}

fn random_rect(rng: &mut ChaCha8Rng, side: usize, img: &RasterImage) -> Rect {
    Rect {
        x: rng.random_range(0..=img.width() - side),
        y: rng.random_range(0..=img.height() - side),
        w: side,
        h: side,
    }
}

fn paste(dst: &mut RasterImage, src: &RasterImage, from: Rect, to: Rect) {
    let same_channels = src.channels() == dst.channels();
    for dy in 0..to.h {
        for dx in 0..to.w {
            for c in 0..dst.channels() {
                let sc = if same_channels { c } else { 0 };
                let v = src.get(from.x + dx, from.y + dy, sc);
                dst.set(to.x + dx, to.y + dy, c, v);
            }
        }
    }
}

fn blur_seam(img: &mut RasterImage, rect: Rect, k: usize) -> Result<()> {
    let blurred = imaging::box_blur(img, k)?;
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            let band = x - rect.x < 2 || rect.x + rect.w - 1 - x < 2 || y - rect.y < 2 || rect.y + rect.h - 1 - y < 2;
            if band {
                for c in 0..img.channels() {
                    img.set(x, y, c, blurred.get(x, y, c));
                }
            }
        }
    }
    Ok(())
}

fn rect_mask(rect: Rect, width: usize, height: usize) -> Result<TamperMask> {
    let mut m = TamperMask::empty(width, height);
    for y in rect.y..rect.y + rect.h {
        for x in rect.x..rect.x + rect.w {
            m.set(x, y, true);
        }
    }
    m.resized(MASK_SIDE, MASK_SIDE)
}

fn finish(mut image: RasterImage, rect: Rect, source: Rect, p: &ForgeryParams) -> Result<Forgery> {
    if let Some(k) = p.seam_blur {
        blur_seam(&mut image, rect, k)?;
    }
    let mask = rect_mask(rect, image.width(), image.height())?;
    Ok(Forgery {
        image,
        mask,
        rect,
        source,
    })
}

/// Copies a seeded square patch to a non-overlapping seeded location in the same image.
pub fn synth_copy_move(img: &RasterImage, p: &ForgeryParams) -> Result<Forgery> {
    p.check(&[img])?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let side = rng.random_range(p.patch_min..=p.patch_max);
    let mut pair = None;
    for _ in 0..256 {
        let source = random_rect(&mut rng, side, img);
        let dest = random_rect(&mut rng, side, img);
        if !dest.overlaps(&source) {
            pair = Some((source, dest));
            break;
        }
    }
    // side <= min(w, h) / 2, so opposite corners never overlap
    let (source, dest) = pair.unwrap_or((
        Rect { x: 0, y: 0, w: side, h: side },
        Rect { x: img.width() - side, y: img.height() - side, w: side, h: side },
    ));
    let mut out = img.clone();
    paste(&mut out, img, source, dest);
    finish(out, dest, source, p)
}

/// Pastes a seeded square patch cropped from `donor` into `base`.
pub fn synth_splice(base: &RasterImage, donor: &RasterImage, p: &ForgeryParams) -> Result<Forgery> {
    p.check(&[base, donor])?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let side = rng.random_range(p.patch_min..=p.patch_max);
    let source = random_rect(&mut rng, side, donor);
    let dest = random_rect(&mut rng, side, base);
    let mut out = base.clone();
    paste(&mut out, donor, source, dest);
    finish(out, dest, source, p)
}

/// Stratified split: each class is shuffled and its first `ceil(n * val_fraction)`
/// records go to validation.
pub fn split(corpus: &CorpusIndex, val_fraction: f64, seed: u64) -> Result<(CorpusIndex, CorpusIndex)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "validation fraction {val_fraction} not in (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for label in [AUTHENTIC, TAMPERED] {
        let mut members: Vec<&SampleRecord> =
            corpus.records.iter().filter(|r| r.label == label).collect();
        let n_val = (members.len() as f64 * val_fraction).ceil() as usize;
        if members.len() <= n_val {
            return Err(Error::DegenerateSplit(format!(
                "class {label} has {} records, leaving no training samples",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        val.extend(members[..n_val].iter().map(|r| (*r).clone()));
        train.extend(members[n_val..].iter().map(|r| (*r).clone()));
    }
    Ok((
        CorpusIndex::new(corpus.root.clone(), train),
        CorpusIndex::new(corpus.root.clone(), val),
    ))
}

/// Augmentation operations. Rotation and shear signs are drawn per sample from the seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AugmentOp {
    FlipH,
    FlipV,
    /// ±15 degrees.
    Rotate,
    /// ±0.2 horizontal shear.
    Shear,
}

impl FromStr for AugmentOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flip_h" => Ok(AugmentOp::FlipH),
            "flip_v" => Ok(AugmentOp::FlipV),
            "rotate" => Ok(AugmentOp::Rotate),
            "shear" => Ok(AugmentOp::Shear),
            other => Err(Error::InvalidParam(format!("unknown augmentation {other:?}"))),
        }
    }
}

/// Adds one transformed copy of every record per op; originals are kept.
pub fn augment(corpus: &CorpusIndex, ops: &[AugmentOp], seed: u64) -> Result<CorpusIndex> {
    if ops.is_empty() {
        return Err(Error::InvalidParam("augment needs at least one op".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = corpus.records.clone();
    for r in &corpus.records {
        for op in ops {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let t = match op {
                AugmentOp::FlipH => Transform::FlipH,
                AugmentOp::FlipV => Transform::FlipV,
                AugmentOp::Rotate => Transform::Rotate(15.0 * sign),
                AugmentOp::Shear => Transform::Shear(0.2 * sign),
            };
            let mut rec = r.clone();
            rec.transforms.push(t);
            rec.provenance = Provenance::Augmented(t);
            records.push(rec);
        }
    }
    Ok(CorpusIndex::new(corpus.root.clone(), records))
}

/// Ablation applied in place to every record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ablation {
    Blur(usize),
    Grayscale,
}

impl Ablation {
    pub fn transform(&self) -> Transform {
        match *self {
            Ablation::Blur(k) => Transform::Blur(k),
            Ablation::Grayscale => Transform::Grayscale,
        }
    }
}

/// Replaces every image by its ablated version; labels and masks are unchanged.
pub fn ablate(corpus: &CorpusIndex, op: Ablation) -> Result<CorpusIndex> {
    if let Ablation::Blur(k) = op {
        if k < 3 || k % 2 == 0 {
            return Err(Error::InvalidKernel(k));
        }
    }
    let t = op.transform();
    let records = corpus
        .records
        .iter()
        .map(|r| {
            let mut rec = r.clone();
            rec.transforms.push(t);
            rec.provenance = Provenance::Ablated(t);
            rec
        })
        .collect();
    Ok(CorpusIndex::new(corpus.root.clone(), records))
}

/// Output layout of [`synthesize_corpus`].
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// Number of authentic crops, and separately of tampered images.
    pub count: usize,
    /// Side of the square crops taken from the sources.
    pub crop: usize,
    /// Crop offsets of authentic and host images are multiples of this, so
    /// they keep the source's JPEG block-grid phase (8) or not (1). Donor
    /// crops are always unaligned.
    pub align: usize,
    pub forgery: ForgeryParams,
    /// `None` writes PNG; otherwise JPEG at this quality.
    pub save_quality: Option<JpegQuality>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 20,
            crop: 128,
            align: 8,
            forgery: ForgeryParams::default(),
            save_quality: None,
        }
    }
}

fn sub_seed(seed: u64, stream: u64, i: usize) -> u64 {
    // splitmix64 finalizer over (seed, stream, index)
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add((i as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Writes `count` authentic crops and `count` forgeries (alternating copy-move
/// and splice; copy-move only with a single source) plus `manifest.csv`.
pub fn synthesize_corpus(sources: &[RasterImage], cfg: &SynthConfig, out: &Path) -> Result<CorpusIndex> {
    let usable: Vec<&RasterImage> = sources
        .iter()
        .filter(|s| s.width() >= cfg.crop && s.height() >= cfg.crop)
        .collect();
    if usable.is_empty() {
        return Err(Error::ImageTooSmall(format!(
            "no source is at least {0}x{0}",
            cfg.crop
        )));
    }
    if cfg.align == 0 {
        return Err(Error::InvalidParam("crop alignment must be at least 1".into()));
    }
    // validate everything before the first write
    cfg.forgery.check_dims(&[(cfg.crop, cfg.crop)])?;
    let ext = if cfg.save_quality.is_some() { "jpg" } else { "png" };
    for dir in ["Au", "Tp", "masks"] {
        let d = out.join(dir);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let save = |path: &Path, img: &RasterImage| -> Result<()> {
        let bytes = match cfg.save_quality {
            Some(q) => imaging::encode_jpeg(img, q)?,
            None => imaging::encode_png(img)?,
        };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    };
    let crop = |rng: &mut ChaCha8Rng, src: &RasterImage, align: usize| -> Result<RasterImage> {
        let x = rng.random_range(0..=(src.width() - cfg.crop) / align) * align;
        let y = rng.random_range(0..=(src.height() - cfg.crop) / align) * align;
        src.crop(x, y, cfg.crop, cfg.crop)
    };

    let mut records = Vec::with_capacity(cfg.count * 2);
    for i in 0..cfg.count {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.forgery.seed, 1, i));
        let src = usable[i % usable.len()];
        let au = crop(&mut rng, src, cfg.align)?;
        let au_path = out.join("Au").join(format!("au_{i:05}.{ext}"));
        save(&au_path, &au)?;
        records.push(SampleRecord::new(au_path, AUTHENTIC, None, Provenance::Real));

        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.forgery.seed, 2, i));
        let base = crop(&mut rng, src, cfg.align)?;
        let params = ForgeryParams {
            seed: sub_seed(cfg.forgery.seed, 3, i),
            ..cfg.forgery.clone()
        };
        let splice = i % 2 == 1 && usable.len() >= 2;
        let (forgery, provenance) = if splice {
            let offset = 1 + rng.random_range(0..usable.len() - 1);
            let donor = crop(&mut rng, usable[(i + offset) % usable.len()], 1)?;
            (synth_splice(&base, &donor, &params)?, Provenance::SynthSplice)
        } else {
            (synth_copy_move(&base, &params)?, Provenance::SynthCopyMove)
        };
        let name = format!("tp_{i:05}");
        let tp_path = out.join("Tp").join(format!("{name}.{ext}"));
        let mask_path = out.join("masks").join(format!("{name}_gt.png"));
        save(&tp_path, &forgery.image)?;
        forgery.mask.write_png(&mask_path)?;
        records.push(SampleRecord::new(tp_path, TAMPERED, Some(mask_path), provenance));
    }
    let index = CorpusIndex::new(out.to_path_buf(), records);
    index.write_manifest(&out.join("manifest.csv"))?;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localize::mask_iou;
    use crate::scenes;

    fn noise_image(w: usize, h: usize, seed: u64) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RasterImage::from_fn(w, h, 3, |_, _, _| rng.random()).unwrap()
    }

    fn params(seed: u64) -> ForgeryParams {
        ForgeryParams {
            seed,
            ..ForgeryParams::default()
        }
    }

    #[test]
    fn copy_move_is_deterministic_and_confined_to_rect() {
        let img = noise_image(256, 256, 1);
        let a = synth_copy_move(&img, &params(42)).unwrap();
        assert_eq!(a, synth_copy_move(&img, &params(42)).unwrap());
        assert!(!a.rect.overlaps(&a.source));
        assert!((16..=48).contains(&a.rect.w));
        let mut full_res = 0;
        for y in 0..256 {
            for x in 0..256 {
                let differs = (0..3).any(|c| a.image.get(x, y, c) != img.get(x, y, c));
                assert_eq!(differs, a.rect.contains(x, y), "pixel ({x}, {y})");
                full_res += usize::from(a.rect.contains(x, y));
            }
        }
        assert_eq!(full_res, a.rect.w * a.rect.w);
        assert_eq!((a.mask.width(), a.mask.height()), (128, 128));
        let expected = a.rect.area() as f64 / 4.0;
        assert!((a.mask.count() as f64 - expected).abs() <= 2.0 * a.rect.w as f64);
    }

    #[test]
    fn seam_blur_stays_inside_rect() {
        let img = noise_image(128, 128, 2);
        let p = ForgeryParams {
            seam_blur: Some(3),
            ..params(7)
        };
        let f = synth_copy_move(&img, &p).unwrap();
        for y in 0..128 {
            for x in 0..128 {
                if !f.rect.contains(x, y) {
                    assert_eq!(f.image.get(x, y, 0), img.get(x, y, 0));
                }
            }
        }
    }

    #[test]
    fn splice_with_self_donor_matches_copy_move_mechanics() {
        let img = noise_image(128, 96, 3);
        let f = synth_splice(&img, &img, &params(9)).unwrap();
        assert_eq!(f, synth_splice(&img, &img, &params(9)).unwrap());
        for dy in 0..f.rect.h {
            for dx in 0..f.rect.w {
                assert_eq!(
                    f.image.get(f.rect.x + dx, f.rect.y + dy, 1),
                    img.get(f.source.x + dx, f.source.y + dy, 1)
                );
            }
        }
    }

    #[test]
    fn forgery_rejects_small_images() {
        let img = noise_image(64, 64, 4);
        assert!(matches!(
            synth_copy_move(&img, &params(1)),
            Err(Error::ImageTooSmall(_))
        ));
        let bad = ForgeryParams {
            patch_min: 3,
            ..params(1)
        };
        assert!(synth_copy_move(&noise_image(256, 256, 1), &bad).is_err());
    }

    fn fake_corpus(n_au: usize, n_tp: usize) -> CorpusIndex {
        let mut records = vec![];
        for i in 0..n_au {
            records.push(SampleRecord::new(PathBuf::from(format!("Au/a{i:03}.png")), 0, None, Provenance::Real));
        }
        for i in 0..n_tp {
            records.push(SampleRecord::new(PathBuf::from(format!("Tp/t{i:03}.png")), 1, None, Provenance::Real));
        }
        CorpusIndex::new(PathBuf::new(), records)
    }

    #[test]
    fn split_is_stratified_partition() {
        let c = fake_corpus(10, 10);
        let (train, val) = split(&c, 0.2, 5).unwrap();
        assert_eq!((val.count_label(0), val.count_label(1)), (2, 2));
        assert_eq!((train.count_label(0), train.count_label(1)), (8, 8));
        assert_eq!(split(&c, 0.2, 5).unwrap(), (train.clone(), val.clone()));
        let mut all: Vec<_> = train.records.iter().chain(&val.records).map(|r| r.image_path.clone()).collect();
        all.sort();
        let expected: Vec<_> = c.records.iter().map(|r| r.image_path.clone()).collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn split_degenerate_cases() {
        assert!(matches!(split(&fake_corpus(10, 0), 0.2, 1), Err(Error::DegenerateSplit(_))));
        assert!(matches!(split(&fake_corpus(1, 5), 0.2, 1), Err(Error::DegenerateSplit(_))));
        assert!(split(&fake_corpus(5, 5), 1.0, 1).is_err());
    }

    #[test]
    fn augment_and_ablate_counts() {
        let c = fake_corpus(3, 2);
        let a = augment(&c, &[AugmentOp::FlipH], 1).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a.records.iter().filter(|r| matches!(r.provenance, Provenance::Augmented(_))).count(), 5);
        let a = augment(&c, &[AugmentOp::Rotate, AugmentOp::Shear], 1).unwrap();
        assert_eq!(a.len(), 15);
        assert!(augment(&c, &[], 1).is_err());
        let b = ablate(&c, Ablation::Blur(3)).unwrap();
        assert_eq!(b.len(), c.len());
        assert!(b.records.iter().all(|r| r.provenance == Provenance::Ablated(Transform::Blur(3))));
        assert!(ablate(&c, Ablation::Blur(2)).is_err());
    }

    #[test]
    fn transform_and_provenance_tags_roundtrip() {
        for t in [
            Transform::FlipH,
            Transform::FlipV,
            Transform::Rotate(-15.0),
            Transform::Shear(0.2),
            Transform::Blur(3),
            Transform::Grayscale,
        ] {
            assert_eq!(t.to_string().parse::<Transform>().unwrap(), t);
            for p in [Provenance::Augmented(t), Provenance::Ablated(t)] {
                assert_eq!(p.to_string().parse::<Provenance>().unwrap(), p);
            }
        }
        assert!("twirl".parse::<Transform>().is_err());
    }

    #[test]
    fn scan_layout_and_missing_masks() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        assert!(matches!(scan_corpus(&root.join("nope")), Err(Error::MissingRoot(_))));
        assert!(matches!(scan_corpus(root), Err(Error::EmptyCorpus(_))));
        for d in ["Au", "Tp", "masks"] {
            std::fs::create_dir(root.join(d)).unwrap();
        }
        let img = RasterImage::filled(8, 8, 3, 100).unwrap();
        std::fs::write(root.join("Au/a.jpg"), imaging::encode_jpeg(&img, JpegQuality::default()).unwrap()).unwrap();
        std::fs::write(root.join("Tp/t.tif"), b"placeholder").unwrap();
        std::fs::write(root.join("Tp/u.png"), imaging::encode_png(&img).unwrap()).unwrap();
        std::fs::write(root.join("Tp/notes.txt"), b"ignored").unwrap();
        empty_mask(8, 8).write_png(&root.join("masks/t_gt.png")).unwrap();
        let c = scan_corpus(root).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.records.iter().map(|r| r.label).collect::<Vec<_>>(), vec![0, 1, 1]);
        assert_eq!(c.records[1].mask_path, Some(root.join("masks/t_gt.png")));
        assert_eq!(c.missing_masks().len(), 1);
        assert_eq!(c.missing_masks()[0].image_path, root.join("Tp/u.png"));
    }

    #[test]
    fn authentic_mask_is_empty() {
        let r = SampleRecord::new(PathBuf::from("Au/x.png"), AUTHENTIC, None, Provenance::Real);
        let m = r.effective_mask().unwrap().unwrap();
        assert_eq!(m.count(), 0);
        assert_eq!(m.bits().len(), 16384);
        assert_eq!(mask_iou(&m, &empty_mask(128, 128)).unwrap(), 1.0);
    }

    #[test]
    fn rotated_mask_follows_image_warp() {
        let dir = tempfile::tempdir().unwrap();
        let img = scenes::smooth_scene(128, 128, 1).unwrap();
        let f = synth_copy_move(&img, &params(3)).unwrap();
        let ip = dir.path().join("t.png");
        let mp = dir.path().join("t_gt.png");
        imaging::write_image(&ip, &f.image).unwrap();
        f.mask.write_png(&mp).unwrap();
        let mut r = SampleRecord::new(ip, TAMPERED, Some(mp), Provenance::Real);
        r.transforms.push(Transform::Rotate(15.0));
        let got = r.effective_mask().unwrap().unwrap();
        let expected = TamperMask::from_raster(&imaging::affine_warp(&f.mask.to_raster(), 15.0, 0.0));
        assert_eq!(got, expected);
        assert_eq!(r.load_image().unwrap(), imaging::affine_warp(&f.image, 15.0, 0.0));
    }

    #[test]
    fn synthesize_corpus_layout_and_determinism() {
        let sources: Vec<RasterImage> = (0..3)
            .map(|s| {
                scenes::camera_scene(
                    &scenes::SceneParams {
                        width: 160,
                        height: 144,
                        ..scenes::SceneParams::default()
                    },
                    s,
                )
                .unwrap()
            })
            .collect();
        let cfg = SynthConfig {
            count: 4,
            ..SynthConfig::default()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let a = synthesize_corpus(&sources, &cfg, d1.path()).unwrap();
        synthesize_corpus(&sources, &cfg, d2.path()).unwrap();
        assert_eq!((a.count_label(0), a.count_label(1)), (4, 4));
        let m1 = std::fs::read(d1.path().join("manifest.csv")).unwrap();
        let m2 = std::fs::read(d2.path().join("manifest.csv")).unwrap();
        assert_eq!(m1, m2);
        for r in &a.records {
            let rel = r.image_path.strip_prefix(d1.path()).unwrap();
            assert_eq!(std::fs::read(&r.image_path).unwrap(), std::fs::read(d2.path().join(rel)).unwrap());
        }
        let back = CorpusIndex::read_manifest(&d1.path().join("manifest.csv")).unwrap();
        assert_eq!(back, a);
        let scanned = scan_corpus(d1.path()).unwrap();
        assert_eq!(scanned.len(), 8);
        assert!(scanned.missing_masks().is_empty());

        let tiny = vec![RasterImage::filled(50, 50, 3, 1).unwrap()];
        assert!(matches!(
            synthesize_corpus(&tiny, &cfg, d1.path()),
            Err(Error::ImageTooSmall(_))
        ));
    }
}
