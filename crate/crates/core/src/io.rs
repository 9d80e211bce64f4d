//! JSONL record formats and the SHOTMAT1 binary matrix container.
//!
//! Every JSONL line is an object with a `"schema"` tag naming its record
//! type and version. Lines without the tag are accepted; lines with a
//! different tag are rejected.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::kinematics::{Pose, RotationSet, Skeleton, Vec3};
use crate::metrics::{Prediction, QueryAnnotation, Target};
use crate::retrieval::Matrix;

pub const POSE_SCHEMA: &str = "bestshot.pose/1";
pub const ANNOTATION_SCHEMA: &str = "bestshot.annotation/1";
pub const PREDICTION_SCHEMA: &str = "bestshot.prediction/1";
pub const SEGMENT_SCHEMA: &str = "bestshot.segment/1";
pub const DESCRIPTION_SCHEMA: &str = "bestshot.description/1";
pub const SUBSET_SCHEMA: &str = "bestshot.subset/1";
pub const BUNDLE_SCHEMA: &str = "bestshot.bundle/1";
pub const MIX_SCHEMA: &str = "bestshot.mix/1";

pub const SHOTMAT_MAGIC: &[u8; 8] = b"SHOTMAT1";
const SHOTMAT_HEADER: usize = 8 + 4 + 4 + 1;

/// A JSONL record type with a fixed schema tag.
pub trait Record: Serialize + DeserializeOwned {
    const SCHEMA: &'static str;

    /// Invariant check run on every loaded line.
    fn check(&self) -> std::result::Result<(), (String, String)> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub id: String,
    pub dataset: String,
    pub frame_index: usize,
    pub joints: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl PoseRecord {
    pub fn pose(&self) -> Result<Pose> {
        Pose::new(self.joints.clone())
    }

    pub fn rotation_set(&self) -> Option<Result<RotationSet>> {
        self.rotations.clone().map(RotationSet::new)
    }

    pub fn validate_for(&self, skeleton: &Skeleton) -> Result<()> {
        self.pose()?.validate(skeleton)?;
        if let Some(r) = self.rotation_set() {
            let r = r?;
            if r.len() != skeleton.len() {
                return Err(Error::LengthMismatch {
                    what: "rotations",
                    expected: skeleton.len(),
                    actual: r.len(),
                });
            }
        }
        Ok(())
    }
}

impl Record for PoseRecord {
    const SCHEMA: &'static str = POSE_SCHEMA;

    fn check(&self) -> std::result::Result<(), (String, String)> {
        if self.joints.is_empty() {
            return Err(("joints".into(), "no joints".into()));
        }
        if self.joints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(("joints".into(), "non-finite coordinate".into()));
        }
        if let Some(r) = &self.rotations {
            if r.len() != self.joints.len() {
                return Err((
                    "rotations".into(),
                    format!("{} rotations for {} joints", r.len(), self.joints.len()),
                ));
            }
            RotationSet::new(r.clone()).map_err(|e| ("rotations".into(), e.to_string()))?;
        }
        Ok(())
    }
}

impl Record for QueryAnnotation {
    const SCHEMA: &'static str = ANNOTATION_SCHEMA;

    fn check(&self) -> std::result::Result<(), (String, String)> {
        self.validate()
            .map_err(|e| ("record".into(), e.to_string()))
    }
}

/// One submission line: exactly one of `frame` or `interval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
    #[serde(default)]
    pub score: f64,
}

impl Record for PredictionRecord {
    const SCHEMA: &'static str = PREDICTION_SCHEMA;

    fn check(&self) -> std::result::Result<(), (String, String)> {
        match (self.frame, self.interval) {
            (Some(_), Some(_)) => Err(("frame".into(), "both frame and interval given".into())),
            (None, None) => Err(("frame".into(), "neither frame nor interval given".into())),
            _ if !self.score.is_finite() => Err(("score".into(), "non-finite score".into())),
            _ => Ok(()),
        }
    }
}

impl From<&Prediction> for PredictionRecord {
    fn from(p: &Prediction) -> Self {
        let (frame, interval) = match p.target {
            Target::Frame(f) => (Some(f), None),
            Target::Interval(iv) => (None, Some(iv)),
        };
        PredictionRecord {
            query_id: p.query_id.clone(),
            frame,
            interval,
            score: p.score,
        }
    }
}

impl From<&PredictionRecord> for Prediction {
    fn from(r: &PredictionRecord) -> Self {
        let target = match (r.frame, r.interval) {
            (_, Some(iv)) => Target::Interval(iv),
            (Some(f), None) => Target::Frame(f),
            (None, None) => unreachable!("checked on load"),
        };
        Prediction {
            query_id: r.query_id.clone(),
            target,
            score: r.score,
        }
    }
}

/// Labelled temporal segment, used for both localization output and its
/// ground truth. Bounds are frames unless a frame rate is supplied, in
/// which case they are seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub video_id: String,
    pub label: String,
    pub start: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl Record for SegmentRecord {
    const SCHEMA: &'static str = SEGMENT_SCHEMA;

    fn check(&self) -> std::result::Result<(), (String, String)> {
        if !(self.start.is_finite() && self.start >= 0.0) {
            return Err(("start".into(), "must be a non-negative number".into()));
        }
        if !(self.end.is_finite() && self.end >= self.start) {
            return Err(("end".into(), "must not precede start".into()));
        }
        if self.score.is_some_and(|s| !s.is_finite()) {
            return Err(("score".into(), "non-finite score".into()));
        }
        Ok(())
    }
}

impl SegmentRecord {
    pub fn from_interval(video_id: &str, label: &str, iv: Interval, score: Option<f64>) -> Self {
        SegmentRecord {
            video_id: video_id.into(),
            label: label.into(),
            start: iv.start() as f64,
            end: iv.end() as f64,
            score,
        }
    }

    /// Frame interval. With `fps`, seconds map to
    /// `[floor(start * fps), max(that, ceil(end * fps) - 1)]`.
    pub fn to_interval(&self, fps: Option<f64>) -> Result<Interval> {
        match fps {
            None => {
                let whole = |v: f64| v.fract() == 0.0 && v >= 0.0;
                if !whole(self.start) || !whole(self.end) {
                    return Err(Error::invalid(format!(
                        "segment [{}, {}] of {} has fractional frame bounds; pass a frame rate for seconds",
                        self.start, self.end, self.video_id
                    )));
                }
                Interval::new(self.start as usize, self.end as usize)
            }
            Some(fps) => {
                if !(fps.is_finite() && fps > 0.0) {
                    return Err(Error::invalid("frame rate must be positive"));
                }
                let start = (self.start * fps).floor() as usize;
                let end = ((self.end * fps).ceil() as usize)
                    .saturating_sub(1)
                    .max(start);
                Interval::new(start, end)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionRecord {
    pub id: String,
    pub text: String,
    pub sentences: Vec<String>,
    pub config_version: String,
    pub seed: u64,
}

impl Record for DescriptionRecord {
    const SCHEMA: &'static str = DESCRIPTION_SCHEMA;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub subset: usize,
    pub start: String,
    pub ids: Vec<String>,
}

impl Record for SubsetRecord {
    const SCHEMA: &'static str = SUBSET_SCHEMA;
}

impl Record for crate::pres3::AnnotationBundle {
    const SCHEMA: &'static str = BUNDLE_SCHEMA;

    fn check(&self) -> std::result::Result<(), (String, String)> {
        self.validate()
            .map_err(|e| ("record".into(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRecord {
    pub source: String,
    pub wrap: usize,
    pub record: serde_json::Value,
}

impl Record for MixRecord {
    const SCHEMA: &'static str = MIX_SCHEMA;
}

/// Serializes one record as a JSON line with its schema tag first.
pub fn to_line<R: Record>(record: &R) -> Result<String> {
    let value = serde_json::to_value(record)?;
    let serde_json::Value::Object(fields) = value else {
        return Err(Error::invalid("record did not serialize to an object"));
    };
    let mut tagged = serde_json::Map::with_capacity(fields.len() + 1);
    tagged.insert("schema".into(), R::SCHEMA.into());
    tagged.extend(fields);
    Ok(serde_json::to_string(&tagged)?)
}

pub fn write_jsonl<R: Record, W: Write>(mut out: W, records: &[R]) -> Result<()> {
    for r in records {
        writeln!(out, "{}", to_line(r)?).map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn save_jsonl<R: Record>(path: &Path, records: &[R]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parses one line; `line` is 1-based and only used for error messages.
pub fn parse_line<R: Record>(text: &str, source: &str, line: usize) -> Result<R> {
    let err = |field: &str, message: String| Error::Record {
        path: source.to_string(),
        line,
        field: field.to_string(),
        message,
    };
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| err("record", e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| err("record", "expected a JSON object".into()))?;
    match obj.remove("schema") {
        None => {}
        Some(serde_json::Value::String(s)) if s == R::SCHEMA => {}
        Some(other) => {
            return Err(err(
                "schema",
                format!("expected \"{}\", found {other}", R::SCHEMA),
            ));
        }
    }
    let record: R = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        // missing fields are reported against the parent path
        let field = inner
            .strip_prefix("missing field `")
            .and_then(|s| s.split('`').next())
            .map(str::to_string)
            .unwrap_or(path);
        err(&field, inner)
    })?;
    record
        .check()
        .map_err(|(field, message)| err(&field, message))?;
    Ok(record)
}

/// Reads every non-blank line; the first bad line aborts the load.
pub fn read_jsonl<R: Record, B: BufRead>(input: B, source: &str) -> Result<Vec<R>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, source, i + 1)?);
    }
    Ok(out)
}

pub fn load_jsonl<R: Record>(path: &Path) -> Result<Vec<R>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file), &path.display().to_string())
}

fn ensure_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

pub fn load_poses(path: &Path) -> Result<Vec<PoseRecord>> {
    let records: Vec<PoseRecord> = load_jsonl(path)?;
    ensure_unique(records.iter().map(|r| r.id.as_str()))?;
    Ok(records)
}

pub fn load_annotations(path: &Path) -> Result<Vec<QueryAnnotation>> {
    let records: Vec<QueryAnnotation> = load_jsonl(path)?;
    ensure_unique(records.iter().map(|r| r.query_id.as_str()))?;
    Ok(records)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let records: Vec<PredictionRecord> = load_jsonl(path)?;
    ensure_unique(records.iter().map(|r| r.query_id.as_str()))?;
    Ok(records.iter().map(Prediction::from).collect())
}

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(SHOTMAT_HEADER + 4 * m.data().len());
    out.extend_from_slice(SHOTMAT_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    out.push(m.is_normalized() as u8);
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < SHOTMAT_HEADER {
        return Err(Error::TruncatedMatrix {
            expected: SHOTMAT_HEADER,
            actual: bytes.len(),
        });
    }
    if &bytes[..8] != SHOTMAT_MAGIC {
        return Err(Error::BadMatrix("missing SHOTMAT1 magic".into()));
    }
    let u32_at =
        |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let rows = u32_at(8);
    let cols = u32_at(12);
    let normalized = match bytes[16] {
        0 => false,
        1 => true,
        f => return Err(Error::BadMatrix(format!("unknown flag byte {f}"))),
    };
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(SHOTMAT_HEADER))
        .ok_or_else(|| Error::BadMatrix(format!("{rows}x{cols} is too large")))?;
    if bytes.len() < expected {
        return Err(Error::TruncatedMatrix {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::BadMatrix(format!(
            "{} trailing bytes after {rows}x{cols} payload",
            bytes.len() - expected
        )));
    }
    let data = bytes[SHOTMAT_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Matrix::new(rows, cols, normalized, data)
}

pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    std::fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}
