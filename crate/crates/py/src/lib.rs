//! Python module `bestshot`: pose descriptions, furthest point sampling,
//! retrieval inference, benchmark metrics, dataset mixing and the mock
//! annotation pipeline.

use std::collections::BTreeMap;

use bestshot_core::describer::{describe, DescriberAssets, DescriberConfig, OrderPolicy};
use bestshot_core::interval::Interval;
use bestshot_core::io::{PredictionRecord, Record};
use bestshot_core::kinematics::{self, Pose, RotationSet, Skeleton, Vec3};
use bestshot_core::metrics::{
    self, GroundTruthSegment, Prediction, QueryAnnotation, ScoredSegment, IOU_THRESHOLDS,
};
use bestshot_core::mix::{self, MixSource, MixSpec};
use bestshot_core::pres3::{
    run_pipeline, FrameRef, MockClient, MockConfig, PipelineConfig, VideoInput,
};
use bestshot_core::retrieval::{self, SegmentationParams, ThresholdPolicy};
use bestshot_core::sampler::{self, Alignment, PoseCollection};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pose(joints: Vec<Vec3>) -> PyResult<Pose> {
    let p = Pose::new(joints).map_err(err)?;
    p.validate(&Skeleton::smpl22()).map_err(err)?;
    Ok(p)
}

fn interval((start, end): (usize, usize)) -> PyResult<Interval> {
    Interval::new(start, end).map_err(err)
}

/// Python object -> Rust value through the `json` module.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(err)
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn predictions(obj: &Bound<'_, PyAny>) -> PyResult<Vec<Prediction>> {
    let records: Vec<PredictionRecord> = from_py(obj)?;
    records
        .into_iter()
        .map(|r| {
            r.check().map_err(|(field, msg)| {
                err(format!("prediction {}: {field}: {msg}", r.query_id))
            })?;
            Ok(Prediction::from(&r))
        })
        .collect()
}

fn thresholds(t: Option<Vec<f64>>) -> Vec<f64> {
    t.unwrap_or_else(|| IOU_THRESHOLDS.to_vec())
}

/// Natural-language pose describer over the bundled SMPL-22 assets.
#[pyclass(module = "bestshot")]
pub struct Describer {
    assets: DescriberAssets,
    config: DescriberConfig,
}

#[pymethods]
impl Describer {
    #[new]
    #[pyo3(signature = (seed = 0, max_sentences = 12, shuffle = false, keep_skippable = false))]
    fn new(seed: u64, max_sentences: usize, shuffle: bool, keep_skippable: bool) -> Self {
        Describer {
            assets: DescriberAssets::bundled(),
            config: DescriberConfig {
                seed,
                max_sentences,
                skip_skippable: !keep_skippable,
                order: if shuffle {
                    OrderPolicy::SeededShuffle
                } else {
                    OrderPolicy::FixedRoster
                },
            },
        }
    }

    /// Sentences for a pose given as 22 `[x, y, z]` joints.
    fn sentences(&self, joints: Vec<Vec3>) -> PyResult<Vec<String>> {
        Ok(describe(&pose(joints)?, &self.assets, &self.config)
            .map_err(err)?
            .sentences)
    }

    fn describe(&self, joints: Vec<Vec3>) -> PyResult<String> {
        Ok(describe(&pose(joints)?, &self.assets, &self.config)
            .map_err(err)?
            .text())
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.config.seed
    }
}

/// SMPL-22 joint positions from 22 axis-angle rotations.
#[pyfunction]
pub fn forward_kinematics(rotations: Vec<Vec3>) -> PyResult<Vec<Vec3>> {
    let rots = RotationSet::new(rotations).map_err(err)?;
    Ok(kinematics::forward_kinematics(&rots, &Skeleton::smpl22())
        .map_err(err)?
        .joints)
}

#[pyfunction]
pub fn mirror(joints: Vec<Vec3>) -> PyResult<Vec<Vec3>> {
    Ok(kinematics::mirror(&pose(joints)?, &Skeleton::smpl22()).joints)
}

#[pyfunction]
pub fn mpjpe(a: Vec<Vec3>, b: Vec<Vec3>) -> PyResult<f64> {
    kinematics::mpjpe(&pose(a)?, &pose(b)?).map_err(err)
}

/// MPJPE after centring both poses and turning them to face the camera.
#[pyfunction]
pub fn aligned_mpjpe(a: Vec<Vec3>, b: Vec<Vec3>) -> PyResult<f64> {
    kinematics::aligned_mpjpe(&pose(a)?, &pose(b)?, &Skeleton::smpl22()).map_err(err)
}

/// Furthest point sampling over poses; returns indices, `start` first.
#[pyfunction]
#[pyo3(signature = (poses, n, start = 0, align = true))]
pub fn fps_select(
    poses: Vec<Vec<Vec3>>,
    n: usize,
    start: usize,
    align: bool,
) -> PyResult<Vec<usize>> {
    let width = poses.len().to_string().len();
    let frames = poses
        .into_iter()
        .enumerate()
        .map(|(i, j)| Ok((format!("{i:0width$}"), pose(j)?)))
        .collect::<PyResult<Vec<_>>>()?;
    if start >= frames.len() {
        return Err(err(format!(
            "start {start} out of range for {} poses",
            frames.len()
        )));
    }
    let start_id = frames[start].0.clone();
    let collection = PoseCollection::new(Skeleton::smpl22(), frames).map_err(err)?;
    let alignment = if align {
        Alignment::Yaw
    } else {
        Alignment::None
    };
    let ids = sampler::fps_select_with(&collection, n, &start_id, alignment).map_err(err)?;
    Ok(ids
        .iter()
        .map(|id| id.parse().expect("ids are indices"))
        .collect())
}

#[pyfunction]
pub fn cosine_scores(query: Vec<f32>, frames: Vec<Vec<f32>>) -> PyResult<Vec<f64>> {
    let m = retrieval::Matrix::from_rows(&frames).map_err(err)?;
    retrieval::score_frames(&query, &m).map_err(err)
}

#[pyfunction]
pub fn best_frame(scores: Vec<f64>) -> PyResult<usize> {
    retrieval::best_frame(&scores).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (scores, radius = 8, k = 1))]
pub fn nms_select(scores: Vec<f64>, radius: usize, k: usize) -> PyResult<Vec<usize>> {
    retrieval::nms_select(&scores, radius, k).map_err(err)
}

/// Segments of a per-frame score curve as `(start, end, peak)`, inclusive.
#[pyfunction]
#[pyo3(signature = (scores, radius = 2, threshold = "mean", std_k = 1.0, min_length = 3, max_gap = 2))]
pub fn t3al_segment(
    scores: Vec<f64>,
    radius: usize,
    threshold: &str,
    std_k: f64,
    min_length: usize,
    max_gap: usize,
) -> PyResult<Vec<(usize, usize, f64)>> {
    let threshold = match threshold {
        "mean" => ThresholdPolicy::Mean,
        "mean_plus_std" => ThresholdPolicy::MeanPlusStd { k: std_k },
        other => return Err(err(format!("unknown threshold policy {other:?}"))),
    };
    let params = SegmentationParams {
        radius,
        threshold,
        min_length,
        max_gap,
    };
    Ok(retrieval::t3al_segment(&scores, &params)
        .map_err(err)?
        .into_iter()
        .map(|s| (s.interval.start(), s.interval.end(), s.peak))
        .collect())
}

#[pyfunction]
pub fn interval_iou(a: (usize, usize), b: (usize, usize)) -> PyResult<f64> {
    Ok(metrics::interval_iou(&interval(a)?, &interval(b)?))
}

/// Top@1 report from prediction dicts (`query_id`, `frame` or
/// `interval`, `score`) and annotation dicts.
#[pyfunction]
pub fn eval_bestshot<'py>(
    predictions: &Bound<'py, PyAny>,
    annotations: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let anns: Vec<QueryAnnotation> = from_py(annotations)?;
    let report = metrics::eval_bestshot(&self::predictions(predictions)?, &anns).map_err(err)?;
    to_py(predictions.py(), &report)
}

#[pyfunction]
#[pyo3(signature = (predictions, annotations, thresholds = None))]
pub fn iou_accuracy<'py>(
    predictions: &Bound<'py, PyAny>,
    annotations: &Bound<'py, PyAny>,
    thresholds: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let anns: Vec<QueryAnnotation> = from_py(annotations)?;
    let table = metrics::iou_accuracy(
        &self::predictions(predictions)?,
        &anns,
        &self::thresholds(thresholds),
    )
    .map_err(err)?;
    to_py(predictions.py(), &table)
}

/// mAP from `{label: [(video_id, start, end, score)]}` predictions and
/// `{label: [(video_id, start, end)]}` ground truth.
#[pyfunction]
#[pyo3(signature = (predictions, ground_truth, thresholds = None))]
pub fn tal_map<'py>(
    py: Python<'py>,
    predictions: BTreeMap<String, Vec<(String, usize, usize, f64)>>,
    ground_truth: BTreeMap<String, Vec<(String, usize, usize)>>,
    thresholds: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let preds = predictions
        .into_iter()
        .map(|(label, segs)| {
            let segs = segs
                .into_iter()
                .map(|(video_id, s, e, score)| {
                    Ok(ScoredSegment {
                        video_id,
                        interval: interval((s, e))?,
                        score,
                    })
                })
                .collect::<PyResult<Vec<_>>>()?;
            Ok((label, segs))
        })
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    let gts = ground_truth
        .into_iter()
        .map(|(label, segs)| {
            let segs = segs
                .into_iter()
                .map(|(video_id, s, e)| {
                    Ok(GroundTruthSegment {
                        video_id,
                        interval: interval((s, e))?,
                    })
                })
                .collect::<PyResult<Vec<_>>>()?;
            Ok((label, segs))
        })
        .collect::<PyResult<BTreeMap<_, _>>>()?;
    let report = metrics::tal_map(&preds, &gts, &self::thresholds(thresholds)).map_err(err)?;
    to_py(py, &report)
}

/// Interleaving plan as `(source, index, wrap)` triples.
#[pyfunction]
#[pyo3(signature = (sources, sizes, total, seed = 0))]
pub fn mix_plan(
    sources: Vec<(String, usize)>,
    sizes: Vec<usize>,
    total: usize,
    seed: u64,
) -> PyResult<Vec<(usize, usize, usize)>> {
    let spec = MixSpec {
        sources: sources
            .into_iter()
            .map(|(name, weight)| MixSource { name, weight })
            .collect(),
        total,
        seed,
    };
    Ok(mix::mix_plan(&spec, &sizes)
        .map_err(err)?
        .into_iter()
        .map(|d| (d.source, d.index, d.wrap))
        .collect())
}

/// Runs the annotation pipeline against the offline mock captioner and
/// returns the bundle as a dict.
#[pyfunction]
#[pyo3(signature = (video_id, dynamic_scores, static_scores, seed = 0, budget = 10, concurrency = 4))]
pub fn run_mock_pipeline<'py>(
    py: Python<'py>,
    video_id: String,
    dynamic_scores: Vec<f64>,
    static_scores: Vec<f64>,
    seed: u64,
    budget: usize,
    concurrency: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let frames = (0..dynamic_scores.len())
        .map(|index| FrameRef {
            index,
            path: format!("{video_id}/{index:05}.jpg"),
        })
        .collect();
    let video = VideoInput {
        video_id,
        frames,
        dynamic_scores,
        static_scores,
    };
    let config = PipelineConfig {
        summary_budget: budget,
        caption_concurrency: concurrency,
        ..Default::default()
    };
    let client = MockClient::new(MockConfig {
        seed,
        ..Default::default()
    });
    let bundle = py
        .detach(|| run_pipeline(&client, &video, &config))
        .map_err(err)?;
    to_py(py, &bundle)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Describer>()?;
    m.add_function(wrap_pyfunction!(forward_kinematics, m)?)?;
    m.add_function(wrap_pyfunction!(mirror, m)?)?;
    m.add_function(wrap_pyfunction!(mpjpe, m)?)?;
    m.add_function(wrap_pyfunction!(aligned_mpjpe, m)?)?;
    m.add_function(wrap_pyfunction!(fps_select, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_scores, m)?)?;
    m.add_function(wrap_pyfunction!(best_frame, m)?)?;
    m.add_function(wrap_pyfunction!(nms_select, m)?)?;
    m.add_function(wrap_pyfunction!(t3al_segment, m)?)?;
    m.add_function(wrap_pyfunction!(interval_iou, m)?)?;
    m.add_function(wrap_pyfunction!(eval_bestshot, m)?)?;
    m.add_function(wrap_pyfunction!(iou_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(tal_map, m)?)?;
    m.add_function(wrap_pyfunction!(mix_plan, m)?)?;
    m.add_function(wrap_pyfunction!(run_mock_pipeline, m)?)?;
    m.add("IOU_THRESHOLDS", IOU_THRESHOLDS.to_vec())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[pymodule]
fn bestshot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
