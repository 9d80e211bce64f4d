//! Frame scoring over precomputed embeddings: argmax and NMS frame picks,
//! and zero-shot temporal segmentation (T3AL with no test-time training).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

const UNIT_NORM_TOL: f32 = 1e-4;
const ABOVE_EPS: f64 = 1e-12;

/// Row-major `f32` matrix. Holds embeddings (one row per frame or query) or
/// query-by-frame similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    normalized: bool,
    data: Vec<f32>,
}

pub type EmbeddingMatrix = Matrix;
pub type SimilarityMatrix = Matrix;

impl Matrix {
    /// `normalized` declares that every row has unit L2 norm; it is checked.
    pub fn new(rows: usize, cols: usize, normalized: bool, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        let m = Matrix {
            rows,
            cols,
            normalized,
            data,
        };
        if normalized {
            for r in 0..rows {
                let n = row_norm(m.row(r));
                if (n - 1.0).abs() > UNIT_NORM_TOL as f64 {
                    return Err(Error::invalid(format!(
                        "row {r} has norm {n}, expected 1 for a normalized matrix"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                what: "matrix row",
                expected: cols,
                actual: rows[r].len(),
            });
        }
        Matrix::new(rows.len(), cols, false, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy with every row scaled to unit length.
    pub fn normalized(&self) -> Result<Matrix> {
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            let n = row_norm(self.row(r));
            if n == 0.0 {
                return Err(Error::invalid(format!("row {r} has zero norm")));
            }
            data.extend(self.row(r).iter().map(|&v| (v as f64 / n) as f32));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            normalized: true,
            data,
        })
    }
}

fn row_norm(row: &[f32]) -> f64 {
    row.iter()
        .map(|&v| (v as f64) * (v as f64))
        .sum::<f64>()
        .sqrt()
}

fn cosine(a: &[f32], a_norm: f64, b: &[f32], b_norm: f64) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    (dot / (a_norm * b_norm)).clamp(-1.0, 1.0)
}

/// Cosine similarity of `query` against every frame row.
pub fn score_frames(query: &[f32], frames: &Matrix) -> Result<Vec<f64>> {
    if query.len() != frames.cols {
        return Err(Error::LengthMismatch {
            what: "embedding dimension",
            expected: frames.cols,
            actual: query.len(),
        });
    }
    let qn = row_norm(query);
    if qn == 0.0 {
        return Err(Error::invalid("query embedding has zero norm"));
    }
    (0..frames.rows)
        .map(|r| {
            let row = frames.row(r);
            let n = if frames.normalized {
                1.0
            } else {
                row_norm(row)
            };
            if n == 0.0 {
                return Err(Error::invalid(format!("frame {r} has zero norm")));
            }
            Ok(cosine(query, qn, row, n))
        })
        .collect()
}

/// Query-by-frame cosine similarities.
pub fn similarity_matrix(queries: &Matrix, frames: &Matrix) -> Result<Matrix> {
    let mut data = Vec::with_capacity(queries.rows * frames.rows);
    for q in 0..queries.rows {
        data.extend(
            score_frames(queries.row(q), frames)?
                .into_iter()
                .map(|s| s as f32),
        );
    }
    Matrix::new(queries.rows, frames.rows, false, data)
}

/// Index of the highest score; the earliest one on ties.
pub fn best_frame(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::invalid("empty score vector"));
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Greedy peak picking: take the best unsuppressed frame, suppress its
/// `radius` neighbours on each side, repeat until `k` picks.
pub fn nms_select(scores: &[f64], radius: usize, k: usize) -> Result<Vec<usize>> {
    if scores.is_empty() {
        return Err(Error::invalid("empty score vector"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut suppressed = vec![false; scores.len()];
    let mut picks = Vec::with_capacity(k.min(scores.len()));
    for i in order {
        if suppressed[i] {
            continue;
        }
        picks.push(i);
        if picks.len() == k {
            break;
        }
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(scores.len() - 1);
        suppressed[lo..=hi].iter_mut().for_each(|s| *s = true);
    }
    Ok(picks)
}

/// Class whose embedding is closest (cosine) to the mean of the
/// L2-normalized frame embeddings.
pub fn t3al_pseudo_label(frames: &Matrix, classes: &Matrix) -> Result<usize> {
    if frames.cols != classes.cols {
        return Err(Error::LengthMismatch {
            what: "embedding dimension",
            expected: frames.cols,
            actual: classes.cols,
        });
    }
    if classes.rows == 0 {
        return Err(Error::invalid("no class embeddings"));
    }
    if frames.rows == 0 {
        return Err(Error::invalid("no frame embeddings"));
    }
    let unit = if frames.normalized {
        frames.clone()
    } else {
        frames.normalized()?
    };
    let mut mean = vec![0.0f64; frames.cols];
    for r in 0..unit.rows {
        for (m, &v) in mean.iter_mut().zip(unit.row(r)) {
            *m += v as f64;
        }
    }
    let mean: Vec<f32> = mean.iter().map(|m| (m / unit.rows as f64) as f32).collect();
    let scores = score_frames(&mean, classes)?;
    best_frame(&scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ThresholdPolicy {
    Mean,
    MeanPlusStd { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationParams {
    pub radius: usize,
    pub threshold: ThresholdPolicy,
    pub min_length: usize,
    pub max_gap: usize,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        SegmentationParams {
            radius: 2,
            threshold: ThresholdPolicy::Mean,
            min_length: 3,
            max_gap: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub interval: Interval,
    /// Highest smoothed score inside the interval.
    pub peak: f64,
}

/// Centered moving average; windows are truncated at the sequence ends.
pub fn smooth(scores: &[f64], radius: usize) -> Vec<f64> {
    let n = scores.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            scores[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn threshold(values: &[f64], policy: ThresholdPolicy) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    match policy {
        ThresholdPolicy::Mean => mean,
        ThresholdPolicy::MeanPlusStd { k } => {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            mean + k * var.sqrt()
        }
    }
}

/// Smooth, threshold, take maximal runs above the threshold, merge runs
/// separated by at most `max_gap` frames, then drop runs shorter than
/// `min_length`.
pub fn t3al_segment(scores: &[f64], params: &SegmentationParams) -> Result<Vec<Segment>> {
    if params.min_length == 0 {
        return Err(Error::invalid("min_length must be at least 1"));
    }
    if scores.is_empty() {
        return Ok(Vec::new());
    }
    let smoothed = smooth(scores, params.radius);
    let thr = threshold(&smoothed, params.threshold);
    // absorbs rounding in the mean so constant curves stay below it
    let scale = smoothed.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let above = |s: f64| s - thr > ABOVE_EPS * scale;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &s) in smoothed.iter().enumerate() {
        match (above(s), open) {
            (true, None) => open = Some(i),
            (false, Some(st)) => {
                runs.push((st, i - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(st) = open {
        runs.push((st, smoothed.len() - 1));
    }

    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(runs.len());
    for (s, e) in runs {
        match merged.last_mut() {
            Some(last) if s - last.1 - 1 <= params.max_gap => last.1 = e,
            _ => merged.push((s, e)),
        }
    }

    Ok(merged
        .into_iter()
        .filter(|(s, e)| e - s + 1 >= params.min_length)
        .map(|(s, e)| Segment {
            interval: Interval::new(s, e).expect("run bounds are ordered"),
            peak: smoothed[s..=e]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
        })
        .collect())
}

/// Pseudo-label a video, then segment its similarity curve for that label.
pub fn t3al_localize(
    frames: &Matrix,
    classes: &Matrix,
    params: &SegmentationParams,
) -> Result<(usize, Vec<Segment>)> {
    let label = t3al_pseudo_label(frames, classes)?;
    let scores = score_frames(classes.row(label), frames)?;
    Ok((label, t3al_segment(&scores, params)?))
}

/// `[idx - margin, idx + margin]` clamped to the video.
pub fn expand_frame(idx: usize, margin: usize, length: usize) -> Result<Interval> {
    if idx >= length {
        return Err(Error::invalid(format!(
            "frame {idx} outside a video of {length} frames"
        )));
    }
    Interval::new(idx.saturating_sub(margin), (idx + margin).min(length - 1))
}
