//! Python bindings: `import forgelens`.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use forgelens::classify::{self, SavedModel};
use forgelens::dataset::{self, ForgeryParams, SynthConfig};
use forgelens::ela::{self, ElaConfig};
use forgelens::eval::{self, EvalReport};
use forgelens::features::{self, Channel, DctLbpConfig};
use forgelens::imaging::{self, JpegQuality, RasterImage};
use forgelens::localize::{self, LocalizeConfig, TamperMask};
use forgelens::pipeline::{self, AblationTag, PipelineId, TrainRequest};
use forgelens::scenes::{self, SceneParams};
use forgelens::Error;

create_exception!(forgelens, ForgelensError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::InvalidQuality(_)
        | Error::InvalidKernel(_)
        | Error::InvalidParam(_)
        | Error::InvalidRaster(_)
        | Error::ShapeMismatch(_)
        | Error::LengthMismatch { .. }
        | Error::DimMismatch { .. } => PyValueError::new_err(e.to_string()),
        _ => ForgelensError::new_err(e.to_string()),
    }
}

fn quality(q: i64) -> PyResult<JpegQuality> {
    JpegQuality::new(q).map_err(to_py)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// 8-bit raster, 1 or 3 channels, row-major and channel-interleaved.
#[pyclass(name = "Raster", module = "forgelens", frozen, skip_from_py_object)]
struct PyRaster(RasterImage);

#[pymethods]
impl PyRaster {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> PyResult<Self> {
        RasterImage::new(width, height, channels, data).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        imaging::read_image(&path).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn decode(bytes: &[u8]) -> PyResult<Self> {
        imaging::decode_image(bytes).map(Self).map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        imaging::write_image(&path, &self.0).map_err(to_py)
    }

    fn encode_jpeg<'py>(&self, py: Python<'py>, q: i64) -> PyResult<Bound<'py, PyBytes>> {
        let bytes = imaging::encode_jpeg(&self.0, quality(q)?).map_err(to_py)?;
        Ok(PyBytes::new(py, &bytes))
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels()
    }

    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.data())
    }

    fn get(&self, x: usize, y: usize, c: usize) -> PyResult<u8> {
        if x >= self.0.width() || y >= self.0.height() || c >= self.0.channels() {
            return Err(PyValueError::new_err("pixel index out of range"));
        }
        Ok(self.0.get(x, y, c))
    }

    fn to_grayscale(&self) -> Self {
        Self(imaging::to_grayscale(&self.0))
    }

    fn box_blur(&self, k: usize) -> PyResult<Self> {
        imaging::box_blur(&self.0, k).map(Self).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Raster({}x{}x{})", self.0.width(), self.0.height(), self.0.channels())
    }
}

/// Binary tamper mask; 1 marks a tampered pixel.
#[pyclass(name = "Mask", module = "forgelens", frozen, skip_from_py_object)]
struct PyMask(TamperMask);

#[pymethods]
impl PyMask {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        TamperMask::read_png(&path).map(Self).map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.0.write_png(&path).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn count(&self) -> usize {
        self.0.count()
    }

    fn bits(&self) -> Vec<bool> {
        self.0.bits().to_vec()
    }

    fn iou(&self, truth: &PyMask) -> PyResult<f64> {
        localize::mask_iou(&self.0, &truth.0).map_err(to_py)
    }

    fn f1(&self, truth: &PyMask) -> PyResult<f64> {
        localize::mask_pixel_f1(&self.0, &truth.0).map_err(to_py)
    }
}

/// Trained detection pipeline: extractor settings, scaling and classifier.
#[pyclass(name = "Model", module = "forgelens", frozen)]
struct PyModel(SavedModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        classify::load_model(&path).map(Self).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        classify::save_model(&self.0, &path).map_err(to_py)
    }

    #[getter]
    fn pipeline(&self) -> String {
        self.0.pipeline.clone()
    }

    /// `(label, score)`: margin for SVMs, probability for MLPs.
    fn predict(&self, image: &PyRaster) -> PyResult<(u8, f64)> {
        pipeline::predict_image(&self.0, &image.0).map_err(to_py)
    }

    fn evaluate<'py>(&self, py: Python<'py>, corpus: PathBuf, ablation: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let index = dataset::scan_corpus(&corpus).map_err(to_py)?;
        let report = pipeline::evaluate_saved(&self.0, &index, parse(ablation)?, seed).map_err(to_py)?;
        report_dict(py, &report)
    }
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("pipeline", &r.pipeline)?;
    d.set_item("ablation", &r.ablation)?;
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("f0", r.f_class0)?;
    d.set_item("f1", r.f_class1)?;
    d.set_item("weighted", r.weighted_f)?;
    d.set_item("support0", r.support0)?;
    d.set_item("support1", r.support1)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (image, quality = 90))]
fn compute_ela(image: &PyRaster, quality: i64) -> PyResult<PyRaster> {
    let cfg = ElaConfig {
        quality: self::quality(quality)?,
        ..ElaConfig::default()
    };
    ela::compute_ela(&image.0, &cfg).map(PyRaster).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (image, quality = 90))]
fn ela_features(image: &PyRaster, quality: i64) -> PyResult<Vec<f64>> {
    let cfg = ElaConfig {
        quality: self::quality(quality)?,
        ..ElaConfig::for_features()
    };
    Ok(ela::ela_feature_vector(&image.0, &cfg).map_err(to_py)?.into_values())
}

#[pyfunction]
#[pyo3(signature = (image, channel = "luminance"))]
fn dct_lbp_features(image: &PyRaster, channel: &str) -> PyResult<Vec<f64>> {
    let cfg = DctLbpConfig {
        channel: parse::<Channel>(channel)?,
        ..DctLbpConfig::default()
    };
    Ok(features::dct_lbp_features(&image.0, &cfg).map_err(to_py)?.into_values())
}

#[pyfunction]
fn lbp_map(image: &PyRaster) -> PyResult<PyRaster> {
    features::lbp_map(&image.0).map(PyRaster).map_err(to_py)
}

fn check_block(block: &[f64], n: usize) -> PyResult<()> {
    if n == 0 || block.len() != n * n {
        return Err(PyValueError::new_err(format!("expected {n}x{n} = {} values", n * n)));
    }
    Ok(())
}

/// Orthonormal 2-D DCT-II of a row-major `n`×`n` block.
#[pyfunction]
fn dct2(block: Vec<f64>, n: usize) -> PyResult<Vec<f64>> {
    check_block(&block, n)?;
    Ok(features::dct2(&block, n))
}

#[pyfunction]
fn idct2(coeffs: Vec<f64>, n: usize) -> PyResult<Vec<f64>> {
    check_block(&coeffs, n)?;
    Ok(features::idct2(&coeffs, n))
}

#[pyfunction]
fn otsu_threshold(gray: &PyRaster) -> PyResult<u8> {
    if gray.0.channels() != 1 {
        return Err(PyValueError::new_err("otsu_threshold needs a 1-channel raster"));
    }
    Ok(localize::otsu_threshold(&gray.0))
}

#[pyfunction]
#[pyo3(signature = (image, quality = 90))]
fn predict_mask(image: &PyRaster, quality: i64) -> PyResult<PyMask> {
    let cfg = LocalizeConfig {
        ela_quality: self::quality(quality)?,
        ..LocalizeConfig::default()
    };
    localize::predict_mask(&image.0, &cfg).map(PyMask).map_err(to_py)
}

/// Accuracy, per-class F1 and weighted F1 for 0/1 predictions.
#[pyfunction]
fn scores<'py>(py: Python<'py>, preds: Vec<u8>, truth: Vec<u8>) -> PyResult<Bound<'py, PyDict>> {
    let cm = eval::confusion(&preds, &truth).map_err(to_py)?;
    report_dict(py, &eval::scores(&cm))
}

/// Trains a pipeline on a corpus directory; returns `(model, train_report, val_report)`.
#[pyfunction]
#[pyo3(signature = (corpus, pipeline = "dctlbp-mlp", ablation = "none", seed = 0, val_fraction = 0.2))]
fn train<'py>(
    py: Python<'py>,
    corpus: PathBuf,
    pipeline: &str,
    ablation: &str,
    seed: u64,
    val_fraction: f64,
) -> PyResult<(PyModel, Bound<'py, PyDict>, Bound<'py, PyDict>)> {
    let index = dataset::scan_corpus(&corpus).map_err(to_py)?;
    let mut req = TrainRequest::new(parse::<PipelineId>(pipeline)?);
    req.ablation = parse::<AblationTag>(ablation)?;
    req.split_seed = seed;
    req.train.seed = seed;
    req.val_fraction = val_fraction;
    let out = py.detach(|| pipeline::train_pipeline(&index, &req)).map_err(to_py)?;
    let train = report_dict(py, &out.train_report)?;
    let val = report_dict(py, &out.val_report)?;
    Ok((PyModel(out.saved), train, val))
}

/// Writes a corpus of `count` authentic and `count` tampered images built from
/// `scenes` procedural sources; returns the number of records.
#[pyfunction]
#[pyo3(signature = (out, scenes = 4, count = 20, seed = 0))]
fn synthesize(py: Python<'_>, out: PathBuf, scenes: usize, count: usize, seed: u64) -> PyResult<usize> {
    py.detach(|| {
        let sources = (0..scenes as u64)
            .map(|i| scenes::camera_scene(&SceneParams::default(), seed.wrapping_add(i)))
            .collect::<forgelens::Result<Vec<_>>>()?;
        let cfg = SynthConfig {
            count,
            forgery: ForgeryParams {
                seed,
                ..ForgeryParams::default()
            },
            ..SynthConfig::default()
        };
        dataset::synthesize_corpus(&sources, &cfg, &out).map(|index| index.len())
    })
    .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "forgelens")]
fn forgelens_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ForgelensError", m.py().get_type::<ForgelensError>())?;
    m.add_class::<PyRaster>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(compute_ela, m)?)?;
    m.add_function(wrap_pyfunction!(ela_features, m)?)?;
    m.add_function(wrap_pyfunction!(dct_lbp_features, m)?)?;
    m.add_function(wrap_pyfunction!(lbp_map, m)?)?;
    m.add_function(wrap_pyfunction!(dct2, m)?)?;
    m.add_function(wrap_pyfunction!(idct2, m)?)?;
    m.add_function(wrap_pyfunction!(otsu_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(predict_mask, m)?)?;
    m.add_function(wrap_pyfunction!(scores, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
