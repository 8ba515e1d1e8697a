//! `forgelens` command-line front end.
//!
//! Exit codes: 0 ok, 1 usage/parameter error, 2 I/O, 3 decode, 4 corpus,
//! 5 model, 6 mask, 7 synthesis.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use forgelens::classify::{load_model, save_model};
use forgelens::dataset::{self, ForgeryParams, SynthConfig};
use forgelens::ela::{self, ElaConfig, Gain};
use forgelens::eval::{self, EvalReport};
use forgelens::features::{Channel, FeatureKind};
use forgelens::imaging::{self, JpegQuality, RasterImage};
use forgelens::localize::{self, LocalizeConfig, TamperMask, Threshold, MASK_SIDE};
use forgelens::pipeline::{self, AblationTag, FeatureSettings, PipelineId, TrainRequest};
use forgelens::scenes::{self, SceneParams};
use forgelens::Error;

#[derive(Parser, Debug)]
#[command(name = "forgelens", version, about = "Image forgery detection and localization")]
struct Cli {
    /// Seed for splits, training, ablations and synthesis.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// JPEG quality used for error level analysis (1-100).
    #[arg(long, global = true)]
    quality: Option<i64>,
    /// Output file (or directory for `synth`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the error level analysis heatmap of an image as PNG.
    Ela {
        input: PathBuf,
        /// `auto` stretches the maximum to 255; a number multiplies the difference.
        #[arg(long, default_value = "auto")]
        gain: String,
    },
    /// Write the feature vectors of every image in a corpus as CSV.
    Extract {
        corpus: PathBuf,
        #[arg(long, default_value = "dctlbp")]
        features: FeatureKind,
        #[command(flatten)]
        feat: FeatureArgs,
    },
    /// Train a detection pipeline on a corpus and save the model.
    Train {
        corpus: PathBuf,
        #[arg(long, default_value = "dctlbp-mlp")]
        pipeline: PipelineId,
        #[arg(long, default_value = "none")]
        ablation: AblationTag,
        #[arg(long, default_value_t = 0.2)]
        val_fraction: f64,
        #[command(flatten)]
        feat: FeatureArgs,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Classify one image with a saved model; prints `label,score`.
    Predict {
        #[arg(long)]
        model: PathBuf,
        image: PathBuf,
    },
    /// Evaluate a saved model on a corpus and write an EvalReport CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        corpus: PathBuf,
        #[arg(long, default_value = "none")]
        ablation: AblationTag,
        /// Restrict to one side of the split `train` would make with the same seed.
        #[arg(long, default_value = "all")]
        subset: Subset,
        #[arg(long, default_value_t = 0.2)]
        val_fraction: f64,
    },
    /// Predict a tamper mask; with `--gt`, prints `iou,f1`.
    Localize {
        image: PathBuf,
        #[arg(long)]
        gt: Option<PathBuf>,
        /// `otsu` or a fixed level 0-255.
        #[arg(long, default_value = "otsu")]
        threshold: String,
        #[arg(long, default_value_t = 1)]
        radius: usize,
        #[arg(long, default_value_t = 16)]
        min_area: usize,
    },
    /// Synthesize an Au/ Tp/ masks/ corpus with a manifest.
    Synth {
        /// Directory of source photographs.
        #[arg(long, conflicts_with = "scenes", required_unless_present = "scenes")]
        sources: Option<PathBuf>,
        /// Use this many procedural camera-like scenes instead of photographs.
        #[arg(long)]
        scenes: Option<usize>,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 128)]
        crop: usize,
        #[arg(long, default_value_t = 8)]
        align: usize,
        #[arg(long, default_value_t = 16)]
        patch_min: usize,
        #[arg(long, default_value_t = 48)]
        patch_max: usize,
        #[arg(long)]
        seam_blur: Option<usize>,
        /// Save images as JPEG at this quality instead of PNG.
        #[arg(long)]
        save_quality: Option<i64>,
    },
}

#[derive(Args, Debug)]
struct FeatureArgs {
    /// Channel for DCT-LBP features.
    #[arg(long, default_value = "luminance")]
    channel: Channel,
}

#[derive(Args, Debug)]
struct HyperArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Subset {
    All,
    Train,
    Val,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::EncodeFailure(_) => 2,
            Error::UnsupportedFormat | Error::CorruptStream(_) => 3,
            Error::MissingRoot(_)
            | Error::EmptyCorpus(_)
            | Error::DegenerateSplit(_)
            | Error::EmptyTrainingSet
            | Error::Csv(_) => 4,
            Error::FormatVersionMismatch(_) | Error::ChecksumMismatch(_) | Error::DimMismatch { .. } => 5,
            Error::ImageTooSmall(_) => 7,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let quality = cli.quality.map(JpegQuality::new).transpose()?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Ela { input, gain } => cmd_ela(&input, quality, &gain, out),
        Command::Extract { corpus, features, feat } => {
            cmd_extract(&corpus, feature_settings(features, quality, &feat), out)
        }
        Command::Train {
            corpus,
            pipeline,
            ablation,
            val_fraction,
            feat,
            hyper,
        } => {
            let mut req = TrainRequest::new(pipeline);
            req.settings = feature_settings(pipeline.features, quality, &feat);
            req.ablation = ablation;
            req.val_fraction = val_fraction;
            req.split_seed = cli.seed;
            req.train.seed = cli.seed;
            req.train.epochs = hyper.epochs.unwrap_or(req.train.epochs);
            req.train.learning_rate = hyper.lr.unwrap_or(req.train.learning_rate);
            req.train.lambda = hyper.lambda.unwrap_or(req.train.lambda);
            req.train.hidden_dim = hyper.hidden.unwrap_or(req.train.hidden_dim);
            cmd_train(&corpus, &req, out)
        }
        Command::Predict { model, image } => cmd_predict(&model, &image, out),
        Command::Evaluate {
            model,
            corpus,
            ablation,
            subset,
            val_fraction,
        } => cmd_evaluate(&model, &corpus, ablation, subset, val_fraction, cli.seed, out),
        Command::Localize {
            image,
            gt,
            threshold,
            radius,
            min_area,
        } => {
            let threshold = match threshold.as_str() {
                "otsu" => Threshold::Otsu,
                t => Threshold::Fixed(t.parse().map_err(|_| usage(format!("bad threshold {t:?}")))?),
            };
            let cfg = LocalizeConfig {
                ela_quality: quality.unwrap_or_default(),
                threshold,
                morph_radius: radius,
                min_component_area: min_area,
            };
            cmd_localize(&image, gt.as_deref(), &cfg, out)
        }
        Command::Synth {
            sources,
            scenes,
            count,
            crop,
            align,
            patch_min,
            patch_max,
            seam_blur,
            save_quality,
        } => {
            let cfg = SynthConfig {
                count,
                crop,
                align,
                forgery: ForgeryParams {
                    patch_min,
                    patch_max,
                    seam_blur,
                    seed: cli.seed,
                },
                save_quality: save_quality.map(JpegQuality::new).transpose()?,
            };
            let sources = match (sources, scenes) {
                (Some(dir), _) => read_sources(&dir)?,
                (None, Some(n)) => (0..n as u64)
                    .map(|i| scenes::camera_scene(&SceneParams::default(), cli.seed.wrapping_add(i)))
                    .collect::<forgelens::Result<_>>()?,
                (None, None) => unreachable!("clap requires one source option"),
            };
            cmd_synth(&sources, &cfg, out.unwrap_or(Path::new("synth")))
        }
    }
}

fn feature_settings(kind: FeatureKind, quality: Option<JpegQuality>, feat: &FeatureArgs) -> FeatureSettings {
    match FeatureSettings::default_for(kind) {
        FeatureSettings::Ela(cfg) => FeatureSettings::Ela(ElaConfig {
            quality: quality.unwrap_or(cfg.quality),
            ..cfg
        }),
        FeatureSettings::DctLbp(cfg) => FeatureSettings::DctLbp(forgelens::features::DctLbpConfig {
            channel: feat.channel,
            ..cfg
        }),
    }
}

/// Writes to `--out`, or standard output when it is absent.
fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_ela(input: &Path, quality: Option<JpegQuality>, gain: &str, out: Option<&Path>) -> CmdResult {
    let gain = match gain {
        "auto" => Gain::AutoMax,
        g => Gain::Fixed(g.parse().map_err(|_| usage(format!("bad gain {g:?}")))?),
    };
    let cfg = ElaConfig {
        quality: quality.unwrap_or_default(),
        gain,
        ..ElaConfig::default()
    };
    cfg.validate()?;
    let img = imaging::read_image(input)?;
    let heat = ela::compute_ela(&img, &cfg)?;
    let out = out.unwrap_or(Path::new("ela.png"));
    let bytes = imaging::encode_png(&heat)?;
    std::fs::write(out, bytes).map_err(|e| Error::io(out, e))?;
    Ok(())
}

fn relative<'a>(path: &'a Path, root: &Path) -> &'a Path {
    path.strip_prefix(root).unwrap_or(path)
}

fn cmd_extract(corpus: &Path, settings: FeatureSettings, out: Option<&Path>) -> CmdResult {
    let index = dataset::scan_corpus(corpus)?;
    let rows = pipeline::extract_corpus(&index, &settings)?;
    let dim = rows.first().map_or(0, |(v, _)| v.len());
    let mut text = String::from("image,label");
    for i in 0..dim {
        write!(text, ",f{i:04}").unwrap();
    }
    text.push('\n');
    for (record, (values, label)) in index.records.iter().zip(&rows) {
        write!(text, "{},{label}", relative(&record.image_path, &index.root).display()).unwrap();
        for v in values {
            write!(text, ",{v}").unwrap();
        }
        text.push('\n');
    }
    emit(out, &text)
}

fn cmd_train(corpus: &Path, req: &TrainRequest, out: Option<&Path>) -> CmdResult {
    let index = dataset::scan_corpus(corpus)?;
    let outcome = pipeline::train_pipeline(&index, req)?;
    let path = out.unwrap_or(Path::new("model.flm"));
    save_model(&outcome.saved, path)?;
    print!("{}", split_reports(&[("train", &outcome.train_report), ("val", &outcome.val_report)]));
    Ok(())
}

fn split_reports(rows: &[(&str, &EvalReport)]) -> String {
    let reports: Vec<EvalReport> = rows.iter().map(|(_, r)| (*r).clone()).collect();
    let csv = eval::report_csv_string(&reports);
    let mut lines = csv.lines();
    let mut text = format!("split,{}\n", lines.next().unwrap_or_default());
    for ((split, _), line) in rows.iter().zip(lines) {
        writeln!(text, "{split},{line}").unwrap();
    }
    text
}

fn cmd_predict(model: &Path, image: &Path, out: Option<&Path>) -> CmdResult {
    let saved = load_model(model)?;
    let img = imaging::read_image(image)?;
    let (label, score) = pipeline::predict_image(&saved, &img)?;
    emit(out, &format!("label,score\n{label},{score}\n"))
}

fn cmd_evaluate(
    model: &Path,
    corpus: &Path,
    ablation: AblationTag,
    subset: Subset,
    val_fraction: f64,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let saved = load_model(model)?;
    let index = dataset::scan_corpus(corpus)?;
    let index = match subset {
        Subset::All => index,
        Subset::Train | Subset::Val => {
            let (train, val) = dataset::split(&index, val_fraction, seed)?;
            if subset == Subset::Train {
                train
            } else {
                val
            }
        }
    };
    let report = pipeline::evaluate_saved(&saved, &index, ablation, seed)?;
    emit(out, &eval::report_csv_string(&[report]))
}

/// Ground truth on the 128 canvas; full-resolution masks matching the image are rescaled.
fn load_gt(path: &Path, img: &RasterImage) -> std::result::Result<TamperMask, Failure> {
    let gt = TamperMask::read_png(path)?;
    let (w, h) = (gt.width(), gt.height());
    if (w, h) == (MASK_SIDE, MASK_SIDE) {
        Ok(gt)
    } else if (w, h) == (img.width(), img.height()) {
        Ok(gt.resized(MASK_SIDE, MASK_SIDE)?)
    } else {
        Err(Failure {
            code: 6,
            message: format!(
                "ground truth is {w}x{h}; expected {MASK_SIDE}x{MASK_SIDE} or the image size {}x{}",
                img.width(),
                img.height()
            ),
        })
    }
}

fn cmd_localize(image: &Path, gt: Option<&Path>, cfg: &LocalizeConfig, out: Option<&Path>) -> CmdResult {
    let img = imaging::read_image(image)?;
    let gt = gt.map(|p| load_gt(p, &img)).transpose()?;
    let pred = localize::predict_mask(&img, cfg)?;
    pred.write_png(out.unwrap_or(Path::new("mask.png")))?;
    if let Some(gt) = &gt {
        let iou = localize::mask_iou(&pred, gt)?;
        let f1 = localize::mask_pixel_f1(&pred, gt)?;
        println!("iou,f1\n{iou},{f1}");
    }
    Ok(())
}

fn read_sources(dir: &Path) -> std::result::Result<Vec<RasterImage>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let image_ext = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| ["jpg", "jpeg", "png", "tif", "tiff", "bmp"].contains(&e.to_ascii_lowercase().as_str()));
        if path.is_file() && image_ext {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Failure {
            code: 7,
            message: format!("no source images in {}", dir.display()),
        });
    }
    Ok(paths.iter().map(|p| imaging::read_image(p)).collect::<forgelens::Result<_>>()?)
}

fn cmd_synth(sources: &[RasterImage], cfg: &SynthConfig, out: &Path) -> CmdResult {
    let index = dataset::synthesize_corpus(sources, cfg, out)?;
    let tampered = index.count_label(dataset::TAMPERED);
    println!(
        "authentic,tampered\n{},{tampered}",
        index.count_label(dataset::AUTHENTIC)
    );
    Ok(())
}
