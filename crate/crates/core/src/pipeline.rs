//! End-to-end detection pipelines: feature extraction → scaling → classifier.
//!
//! Training and evaluation share [`extract_corpus`] and [`evaluate_saved`], so
//! metrics reported at training time and by a later evaluation of the saved
//! model agree on the same split.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{LabeledSample, Model, ModelKind, SavedModel, TrainConfig};
use crate::dataset::{self, Ablation, AugmentOp, CorpusIndex, Provenance, Transform};
use crate::ela::{self, ElaConfig, Gain};
use crate::error::{Error, Result};
use crate::eval::{self, EvalReport};
use crate::features::{self, Channel, DctLbpConfig, FeatureKind, ScalingParams};
use crate::imaging::{JpegQuality, RasterImage};

/// Feature extractor × classifier, e.g. `dctlbp-mlp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PipelineId {
    pub features: FeatureKind,
    pub classifier: ModelKind,
}

impl PipelineId {
    pub const ALL: [PipelineId; 4] = [
        PipelineId::new(FeatureKind::Ela, ModelKind::Svm),
        PipelineId::new(FeatureKind::Ela, ModelKind::Mlp),
        PipelineId::new(FeatureKind::DctLbp, ModelKind::Svm),
        PipelineId::new(FeatureKind::DctLbp, ModelKind::Mlp),
    ];

    pub const fn new(features: FeatureKind, classifier: ModelKind) -> Self {
        Self {
            features,
            classifier,
        }
    }
}

impl fmt::Display for PipelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.features, self.classifier)
    }
}

impl FromStr for PipelineId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (feat, clf) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidParam(format!("pipeline {s:?} is not <features>-<classifier>")))?;
        Ok(Self::new(feat.parse()?, clf.parse()?))
    }
}

/// Extractor configuration stored alongside a trained model.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureSettings {
    Ela(ElaConfig),
    DctLbp(DctLbpConfig),
}

impl FeatureSettings {
    pub fn default_for(kind: FeatureKind) -> Self {
        match kind {
            FeatureKind::Ela => FeatureSettings::Ela(ElaConfig::for_features()),
            FeatureKind::DctLbp => FeatureSettings::DctLbp(DctLbpConfig::default()),
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureSettings::Ela(_) => FeatureKind::Ela,
            FeatureSettings::DctLbp(_) => FeatureKind::DctLbp,
        }
    }

    pub fn extract(&self, img: &RasterImage) -> Result<Vec<f64>> {
        Ok(match self {
            FeatureSettings::Ela(cfg) => ela::ela_feature_vector(img, cfg)?,
            FeatureSettings::DctLbp(cfg) => features::dct_lbp_features(img, cfg)?,
        }
        .into_values())
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        match self {
            FeatureSettings::Ela(c) => vec![
                ("quality".into(), c.quality.value().to_string()),
                (
                    "gain".into(),
                    match c.gain {
                        Gain::AutoMax => "auto".into(),
                        Gain::Fixed(g) => format!("{g:?}"),
                    },
                ),
                ("grid".into(), c.feature_grid.to_string()),
            ],
            FeatureSettings::DctLbp(c) => vec![
                ("canvas".into(), c.canvas.to_string()),
                ("block".into(), c.block.to_string()),
                ("channel".into(), c.channel.to_string()),
            ],
        }
    }

    pub fn from_pairs(kind: FeatureKind, pairs: &[(String, String)]) -> Result<Self> {
        let get = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::FormatVersionMismatch(format!("model lacks setting {key:?}")))
        };
        let num = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::FormatVersionMismatch(format!("bad setting {key:?}")))
        };
        Ok(match kind {
            FeatureKind::Ela => {
                let gain = match get("gain")? {
                    "auto" => Gain::AutoMax,
                    g => Gain::Fixed(
                        g.parse()
                            .map_err(|_| Error::FormatVersionMismatch(format!("bad gain {g:?}")))?,
                    ),
                };
                FeatureSettings::Ela(ElaConfig {
                    quality: JpegQuality::new(num("quality")? as i64)?,
                    gain,
                    feature_grid: num("grid")?,
                })
            }
            FeatureKind::DctLbp => FeatureSettings::DctLbp(DctLbpConfig {
                canvas: num("canvas")?,
                block: num("block")?,
                channel: get("channel")?.parse::<Channel>()?,
            }),
        })
    }
}

/// Corpus-level variants of the detection experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum AblationTag {
    #[default]
    None,
    /// Box blur, k = 3.
    Blur,
    /// Rotation ±15° and shear ±0.2.
    ShearRotate,
    Grayscale,
}

impl fmt::Display for AblationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationTag::None => "none",
            AblationTag::Blur => "blur",
            AblationTag::ShearRotate => "shear-rotate",
            AblationTag::Grayscale => "grayscale",
        })
    }
}

impl FromStr for AblationTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AblationTag::None),
            "blur" => Ok(AblationTag::Blur),
            "shear-rotate" => Ok(AblationTag::ShearRotate),
            "grayscale" => Ok(AblationTag::Grayscale),
            other => Err(Error::InvalidParam(format!("unknown ablation {other:?}"))),
        }
    }
}

pub const BLUR_KERNEL: usize = 3;

/// Applies an ablation in place (one output record per input record).
///
/// Shear-rotate draws a rotation sign and a shear sign per record from `seed`.
pub fn apply_ablation(corpus: &CorpusIndex, tag: AblationTag, seed: u64) -> Result<CorpusIndex> {
    match tag {
        AblationTag::None => Ok(corpus.clone()),
        AblationTag::Blur => dataset::ablate(corpus, Ablation::Blur(BLUR_KERNEL)),
        AblationTag::Grayscale => dataset::ablate(corpus, Ablation::Grayscale),
        AblationTag::ShearRotate => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let records = corpus
                .records
                .iter()
                .map(|r| {
                    let rot = if rng.random_bool(0.5) { 15.0 } else { -15.0 };
                    let shear = if rng.random_bool(0.5) { 0.2 } else { -0.2 };
                    let mut rec = r.clone();
                    rec.transforms.push(Transform::Rotate(rot));
                    rec.transforms.push(Transform::Shear(shear));
                    rec.provenance = Provenance::Ablated(Transform::Shear(shear));
                    rec
                })
                .collect();
            Ok(CorpusIndex::new(corpus.root.clone(), records))
        }
    }
}

/// Unscaled feature vectors paired with labels.
pub type RawFeatures = Vec<(Vec<f64>, u8)>;

/// Raw (unscaled) features and labels for every record, in corpus order.
///
/// Images are processed on scoped worker threads; results are reassembled in
/// index order so the output does not depend on scheduling.
pub fn extract_corpus(corpus: &CorpusIndex, settings: &FeatureSettings) -> Result<RawFeatures> {
    let n = corpus.records.len();
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(n.max(1));
    let chunk = n.div_ceil(workers.max(1)).max(1);
    let results: Vec<Result<RawFeatures>> = std::thread::scope(|scope| {
        let handles: Vec<_> = corpus
            .records
            .chunks(chunk)
            .map(|records| {
                scope.spawn(move || {
                    records
                        .iter()
                        .map(|r| Ok((settings.extract(&r.load_image()?)?, r.label)))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("feature worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(n);
    for part in results {
        out.extend(part?);
    }
    Ok(out)
}

fn scaled_samples(raw: &[(Vec<f64>, u8)], scaling: &ScalingParams) -> Result<Vec<LabeledSample>> {
    raw.iter()
        .map(|(v, l)| Ok(LabeledSample::new(features::apply_scaling(v, scaling)?, *l)))
        .collect()
}

/// Predictions of a saved model over pre-extracted raw features.
pub fn predict_raw(saved: &SavedModel, raw: &[(Vec<f64>, u8)]) -> Result<Vec<u8>> {
    raw.iter()
        .map(|(v, _)| {
            let x = features::apply_scaling(v, &saved.scaling).map_err(|_| Error::DimMismatch {
                expected: saved.scaling.len(),
                actual: v.len(),
            })?;
            Ok(saved.model.predict(&x)?.0)
        })
        .collect()
}

fn report(saved: &SavedModel, raw: &[(Vec<f64>, u8)], ablation: AblationTag) -> Result<EvalReport> {
    let preds = predict_raw(saved, raw)?;
    let truth: Vec<u8> = raw.iter().map(|(_, l)| *l).collect();
    let mut r = eval::scores(&eval::confusion(&preds, &truth)?);
    r.pipeline = saved.pipeline.clone();
    r.ablation = ablation.to_string();
    Ok(r)
}

/// Settings for [`train_pipeline`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainRequest {
    pub pipeline: PipelineId,
    pub settings: FeatureSettings,
    pub train: TrainConfig,
    pub val_fraction: f64,
    /// Seeds the split and any ablation randomness.
    pub split_seed: u64,
    pub ablation: AblationTag,
}

impl TrainRequest {
    pub fn new(pipeline: PipelineId) -> Self {
        Self {
            pipeline,
            settings: FeatureSettings::default_for(pipeline.features),
            train: default_train_config(pipeline.classifier),
            val_fraction: 0.2,
            split_seed: 0,
            ablation: AblationTag::None,
        }
    }
}

/// Hyperparameters used when none are given.
pub fn default_train_config(kind: ModelKind) -> TrainConfig {
    match kind {
        ModelKind::Svm => TrainConfig {
            epochs: 200,
            learning_rate: 0.01,
            lambda: 1e-3,
            seed: 0,
            shuffle: true,
            hidden_dim: 64,
        },
        ModelKind::Mlp => TrainConfig {
            epochs: 200,
            learning_rate: 0.01,
            lambda: 1e-2,
            seed: 0,
            shuffle: true,
            hidden_dim: 64,
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub saved: SavedModel,
    pub train_report: EvalReport,
    pub val_report: EvalReport,
}

/// The train/validation partition [`train_pipeline`] uses, with the ablation applied.
pub fn prepare_split(
    corpus: &CorpusIndex,
    req: &TrainRequest,
) -> Result<(CorpusIndex, CorpusIndex)> {
    let (train, val) = dataset::split(corpus, req.val_fraction, req.split_seed)?;
    match req.ablation {
        AblationTag::ShearRotate => Ok((
            dataset::augment(&train, &[AugmentOp::Rotate, AugmentOp::Shear], req.split_seed)?,
            apply_ablation(&val, AblationTag::ShearRotate, req.split_seed)?,
        )),
        tag => Ok((
            apply_ablation(&train, tag, req.split_seed)?,
            apply_ablation(&val, tag, req.split_seed)?,
        )),
    }
}

/// Split → ablate → extract → fit scaling on train only → train → report.
pub fn train_pipeline(corpus: &CorpusIndex, req: &TrainRequest) -> Result<TrainOutcome> {
    if req.settings.kind() != req.pipeline.features {
        return Err(Error::InvalidParam(format!(
            "feature settings do not match pipeline {}",
            req.pipeline
        )));
    }
    let (train, val) = prepare_split(corpus, req)?;
    let train_raw = extract_corpus(&train, &req.settings)?;
    let val_raw = extract_corpus(&val, &req.settings)?;
    let scaling = features::fit_scaling(train_raw.iter().map(|(v, _)| v.as_slice()))?;
    let samples = scaled_samples(&train_raw, &scaling)?;
    let model = Model::train(req.pipeline.classifier, &samples, &req.train)?;
    let saved = SavedModel {
        pipeline: req.pipeline.to_string(),
        settings: req.settings.to_pairs(),
        scaling,
        model,
    };
    Ok(TrainOutcome {
        train_report: report(&saved, &train_raw, req.ablation)?,
        val_report: report(&saved, &val_raw, req.ablation)?,
        saved,
    })
}

/// Pipeline and extractor settings recorded in a saved model.
pub fn saved_pipeline(saved: &SavedModel) -> Result<(PipelineId, FeatureSettings)> {
    let id: PipelineId = saved
        .pipeline
        .parse()
        .map_err(|_| Error::FormatVersionMismatch(format!("unknown pipeline {:?}", saved.pipeline)))?;
    if id.classifier != saved.model.kind() {
        return Err(Error::FormatVersionMismatch(format!(
            "pipeline {id} does not match stored {} model",
            saved.model.kind()
        )));
    }
    let settings = FeatureSettings::from_pairs(id.features, &saved.settings)?;
    Ok((id, settings))
}

/// Label and score for one image.
pub fn predict_image(saved: &SavedModel, img: &RasterImage) -> Result<(u8, f64)> {
    let (_, settings) = saved_pipeline(saved)?;
    let raw = settings.extract(img)?;
    if raw.len() != saved.scaling.len() {
        return Err(Error::DimMismatch {
            expected: saved.scaling.len(),
            actual: raw.len(),
        });
    }
    let x = features::apply_scaling(&raw, &saved.scaling)?;
    saved.model.predict(&x)
}

/// Evaluates a saved model on a corpus after applying `ablation` in place.
pub fn evaluate_saved(
    saved: &SavedModel,
    corpus: &CorpusIndex,
    ablation: AblationTag,
    seed: u64,
) -> Result<EvalReport> {
    let (_, settings) = saved_pipeline(saved)?;
    let corpus = apply_ablation(corpus, ablation, seed)?;
    let raw = extract_corpus(&corpus, &settings)?;
    report(saved, &raw, ablation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_ids_roundtrip() {
        for id in PipelineId::ALL {
            assert_eq!(id.to_string().parse::<PipelineId>().unwrap(), id);
        }
        assert!("dct-svm".parse::<PipelineId>().is_err());
        assert!("ela".parse::<PipelineId>().is_err());
    }

    #[test]
    fn settings_roundtrip() {
        for kind in [FeatureKind::Ela, FeatureKind::DctLbp] {
            let s = FeatureSettings::default_for(kind);
            assert_eq!(FeatureSettings::from_pairs(kind, &s.to_pairs()).unwrap(), s);
        }
        let s = FeatureSettings::Ela(ElaConfig::default());
        assert_eq!(FeatureSettings::from_pairs(FeatureKind::Ela, &s.to_pairs()).unwrap(), s);
    }

    #[test]
    fn ablation_tags_roundtrip() {
        for t in [AblationTag::None, AblationTag::Blur, AblationTag::ShearRotate, AblationTag::Grayscale] {
            assert_eq!(t.to_string().parse::<AblationTag>().unwrap(), t);
        }
    }
}
