//! Benchmark scoring: Top@1 with category tolerances, IoU accuracy tables,
//! temporal-localization mAP and fine-category hit counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::retrieval::expand_frame;

/// Half-width of the window around a Pose key frame.
pub const POSE_TOLERANCE: usize = 4;
/// Frame-to-interval expansion used before IoU scoring.
pub const POSE_MARGIN: usize = 4;
pub const OTHER_MARGIN: usize = 6;
pub const IOU_THRESHOLDS: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
pub const UNTAGGED: &str = "other";

// IoU values land exactly on thresholds (1/2, 3/10, ...) often enough that
// the comparison needs a little slack.
const IOU_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    #[serde(alias = "Content")]
    Content,
    #[serde(alias = "Action")]
    Action,
    #[serde(alias = "Pose")]
    Pose,
    #[serde(alias = "Full")]
    Full,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Content,
        Category::Action,
        Category::Pose,
        Category::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Content => "Content",
            Category::Action => "Action",
            Category::Pose => "Pose",
            Category::Full => "Full",
        }
    }

    /// Margin applied when a frame prediction is widened for IoU scoring.
    pub fn margin(self) -> usize {
        match self {
            Category::Pose => POSE_MARGIN,
            _ => OTHER_MARGIN,
        }
    }
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAnnotation {
    pub query_id: String,
    pub video_id: String,
    pub category: Category,
    pub query: String,
    #[serde(default)]
    pub intervals: Vec<Interval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_frame: Option<usize>,
    pub video_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_rate: Option<f64>,
}

impl QueryAnnotation {
    pub fn validate(&self) -> Result<()> {
        let q = &self.query_id;
        if self.video_length == 0 {
            return Err(Error::invalid(format!(
                "query {q}: video_length must be positive"
            )));
        }
        match (self.category, self.key_frame) {
            (Category::Pose, None) => {
                return Err(Error::invalid(format!(
                    "query {q}: Pose query without key_frame"
                )))
            }
            (_, Some(k)) if k >= self.video_length => {
                return Err(Error::invalid(format!(
                    "query {q}: key_frame {k} outside video of {} frames",
                    self.video_length
                )))
            }
            (Category::Pose, Some(_)) => {}
            (_, _) if self.intervals.is_empty() => {
                return Err(Error::invalid(format!(
                    "query {q}: no ground-truth intervals"
                )))
            }
            _ => {}
        }
        if let Some(iv) = self.intervals.iter().find(|iv| !iv.fits(self.video_length)) {
            return Err(Error::invalid(format!(
                "query {q}: interval {iv} outside video of {} frames",
                self.video_length
            )));
        }
        if let Some(r) = self.frame_rate {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(format!(
                    "query {q}: frame_rate must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Intervals a prediction is scored against: the key-frame window for Pose,
/// the annotated intervals otherwise.
pub fn effective_intervals(ann: &QueryAnnotation) -> Result<Vec<Interval>> {
    match ann.category {
        Category::Pose => {
            let key = ann.key_frame.ok_or_else(|| {
                Error::invalid(format!(
                    "query {}: Pose query without key_frame",
                    ann.query_id
                ))
            })?;
            Ok(vec![expand_frame(key, POSE_TOLERANCE, ann.video_length)?])
        }
        _ => Ok(ann.intervals.clone()),
    }
}

pub fn top1_hit(frame: usize, ann: &QueryAnnotation) -> Result<bool> {
    Ok(effective_intervals(ann)?
        .iter()
        .any(|iv| iv.contains(frame)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Frame(usize),
    Interval(Interval),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub query_id: String,
    pub target: Target,
    #[serde(default)]
    pub score: f64,
}

impl Prediction {
    pub fn frame(query_id: impl Into<String>, frame: usize) -> Self {
        Prediction {
            query_id: query_id.into(),
            target: Target::Frame(frame),
            score: 0.0,
        }
    }

    pub fn interval(query_id: impl Into<String>, interval: Interval) -> Self {
        Prediction {
            query_id: query_id.into(),
            target: Target::Interval(interval),
            score: 0.0,
        }
    }

    /// Frame used for Top@1; interval predictions contribute their midpoint.
    pub fn as_frame(&self) -> usize {
        match self.target {
            Target::Frame(f) => f,
            Target::Interval(iv) => iv.midpoint(),
        }
    }

    /// Interval used for IoU; frame predictions are widened by the
    /// category margin.
    pub fn as_interval(&self, ann: &QueryAnnotation) -> Result<Interval> {
        match self.target {
            Target::Frame(f) => expand_frame(f, ann.category.margin(), ann.video_length),
            Target::Interval(iv) => Ok(iv),
        }
    }
}

/// Pairs each annotation with its prediction, rejecting unknown and
/// duplicate query ids.
fn match_predictions<'a>(
    preds: &'a [Prediction],
    anns: &[QueryAnnotation],
) -> Result<HashMap<&'a str, &'a Prediction>> {
    let known: BTreeSet<&str> = anns.iter().map(|a| a.query_id.as_str()).collect();
    if known.len() != anns.len() {
        let mut seen = BTreeSet::new();
        let dup = anns
            .iter()
            .find(|a| !seen.insert(a.query_id.as_str()))
            .expect("duplicate exists");
        return Err(Error::DuplicateId(dup.query_id.clone()));
    }
    let unknown: BTreeSet<String> = preds
        .iter()
        .filter(|p| !known.contains(p.query_id.as_str()))
        .map(|p| p.query_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownQueryIds(unknown.into_iter().collect()));
    }
    let mut by_id = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.query_id.as_str(), p).is_some() {
            return Err(Error::DuplicateId(p.query_id.clone()));
        }
    }
    for ann in anns {
        let Some(p) = by_id.get(ann.query_id.as_str()) else {
            continue;
        };
        let inside = match p.target {
            Target::Frame(f) => f < ann.video_length,
            Target::Interval(iv) => iv.fits(ann.video_length),
        };
        if !inside {
            return Err(Error::invalid(format!(
                "prediction for {} lies outside its video of {} frames",
                ann.query_id, ann.video_length
            )));
        }
    }
    Ok(by_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub hits: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl CategoryScore {
    fn new(hits: usize, total: usize) -> Self {
        let accuracy = if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        };
        CategoryScore {
            hits,
            total,
            accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Top1Report {
    pub per_category: BTreeMap<Category, CategoryScore>,
    pub overall: CategoryScore,
    /// Queries that received no prediction (scored as misses).
    pub missing: Vec<String>,
}

pub fn eval_bestshot(preds: &[Prediction], anns: &[QueryAnnotation]) -> Result<Top1Report> {
    let by_id = match_predictions(preds, anns)?;
    let mut counts: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
    let mut missing = Vec::new();
    for ann in anns {
        let hit = match by_id.get(ann.query_id.as_str()) {
            Some(p) => top1_hit(p.as_frame(), ann)?,
            None => {
                missing.push(ann.query_id.clone());
                false
            }
        };
        let c = counts.entry(ann.category).or_default();
        c.0 += hit as usize;
        c.1 += 1;
    }
    let hits = counts.values().map(|c| c.0).sum();
    Ok(Top1Report {
        per_category: counts
            .into_iter()
            .map(|(k, (h, t))| (k, CategoryScore::new(h, t)))
            .collect(),
        overall: CategoryScore::new(hits, anns.len()),
        missing,
    })
}

/// Inclusive-frame intersection over union.
pub fn interval_iou(a: &Interval, b: &Interval) -> f64 {
    let inter = a.overlap(b);
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

fn meets(iou: f64, threshold: f64) -> bool {
    iou + IOU_EPS >= threshold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IouRow {
    pub accuracy: Vec<f64>,
    pub average: f64,
    pub total: usize,
}

impl IouRow {
    fn from_counts(counts: &[usize], total: usize) -> Self {
        let accuracy: Vec<f64> = counts
            .iter()
            .map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                }
            })
            .collect();
        let average = if accuracy.is_empty() {
            0.0
        } else {
            accuracy.iter().sum::<f64>() / accuracy.len() as f64
        };
        IouRow {
            accuracy,
            average,
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IouTable {
    pub thresholds: Vec<f64>,
    pub overall: IouRow,
    pub per_category: BTreeMap<Category, IouRow>,
    pub missing: Vec<String>,
}

pub fn iou_accuracy(
    preds: &[Prediction],
    anns: &[QueryAnnotation],
    thresholds: &[f64],
) -> Result<IouTable> {
    if let Some(t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::invalid(format!("IoU threshold {t} outside [0, 1]")));
    }
    let by_id = match_predictions(preds, anns)?;
    let mut overall = vec![0usize; thresholds.len()];
    let mut per_cat: BTreeMap<Category, (Vec<usize>, usize)> = BTreeMap::new();
    let mut missing = Vec::new();
    for ann in anns {
        let entry = per_cat
            .entry(ann.category)
            .or_insert_with(|| (vec![0; thresholds.len()], 0));
        entry.1 += 1;
        let Some(p) = by_id.get(ann.query_id.as_str()) else {
            missing.push(ann.query_id.clone());
            continue;
        };
        let pred = p.as_interval(ann)?;
        let best = effective_intervals(ann)?
            .iter()
            .map(|gt| interval_iou(&pred, gt))
            .fold(0.0, f64::max);
        for (i, &t) in thresholds.iter().enumerate() {
            if meets(best, t) {
                overall[i] += 1;
                entry.0[i] += 1;
            }
        }
    }
    Ok(IouTable {
        thresholds: thresholds.to_vec(),
        overall: IouRow::from_counts(&overall, anns.len()),
        per_category: per_cat
            .into_iter()
            .map(|(k, (c, t))| (k, IouRow::from_counts(&c, t)))
            .collect(),
        missing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSegment {
    pub video_id: String,
    pub interval: Interval,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthSegment {
    pub video_id: String,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TalReport {
    pub thresholds: Vec<f64>,
    /// mAP at each threshold.
    pub map: Vec<f64>,
    pub mean_map: f64,
    pub per_class: BTreeMap<String, Vec<f64>>,
    /// Classes that have predictions but no ground truth; left out of mAP.
    pub excluded_classes: Vec<String>,
}

/// Greedy one-to-one matching of score-sorted predictions, then
/// all-point interpolated AP.
pub fn average_precision(
    preds: &[ScoredSegment],
    gts: &[GroundTruthSegment],
    threshold: f64,
) -> f64 {
    if gts.is_empty() || preds.is_empty() {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score).then(a.cmp(&b)));

    let mut matched = vec![false; gts.len()];
    let mut tp = Vec::with_capacity(preds.len());
    for &i in &order {
        let p = &preds[i];
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if matched[g] || gt.video_id != p.video_id {
                continue;
            }
            let iou = interval_iou(&p.interval, &gt.interval);
            if meets(iou, threshold) && best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            matched[g] = true;
        }
        tp.push(best.is_some());
    }

    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (k, &t) in tp.iter().enumerate() {
        hits += t as usize;
        precision.push(hits as f64 / (k + 1) as f64);
        recall.push(hits as f64 / gts.len() as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, r) in precision.iter().zip(&recall) {
        ap += (r - prev_recall) * p;
        prev_recall = *r;
    }
    ap
}

pub fn tal_map(
    preds: &BTreeMap<String, Vec<ScoredSegment>>,
    gts: &BTreeMap<String, Vec<GroundTruthSegment>>,
    thresholds: &[f64],
) -> Result<TalReport> {
    if thresholds.is_empty() {
        return Err(Error::invalid("no IoU thresholds"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::invalid(format!("IoU threshold {t} outside [0, 1]")));
    }
    let classes: BTreeSet<&String> = preds.keys().chain(gts.keys()).collect();
    let mut per_class = BTreeMap::new();
    let mut excluded = Vec::new();
    for class in classes {
        let class_gts = gts.get(class).map(Vec::as_slice).unwrap_or(&[]);
        if class_gts.is_empty() {
            excluded.push(class.clone());
            continue;
        }
        let class_preds = preds.get(class).map(Vec::as_slice).unwrap_or(&[]);
        let aps = thresholds
            .iter()
            .map(|&t| average_precision(class_preds, class_gts, t))
            .collect();
        per_class.insert(class.clone(), aps);
    }
    let map: Vec<f64> = (0..thresholds.len())
        .map(|i| {
            if per_class.is_empty() {
                0.0
            } else {
                per_class.values().map(|aps: &Vec<f64>| aps[i]).sum::<f64>()
                    / per_class.len() as f64
            }
        })
        .collect();
    let mean_map = map.iter().sum::<f64>() / map.len() as f64;
    Ok(TalReport {
        thresholds: thresholds.to_vec(),
        map,
        mean_map,
        per_class,
        excluded_classes: excluded,
    })
}

/// Top@1 hits grouped by fine category; every tag present in the
/// annotations appears as a key, untagged queries count under `"other"`.
pub fn hit_count_by_category(
    preds: &[Prediction],
    anns: &[QueryAnnotation],
) -> Result<BTreeMap<String, usize>> {
    let by_id = match_predictions(preds, anns)?;
    let mut counts = BTreeMap::new();
    for ann in anns {
        let tag = ann.fine_category.as_deref().unwrap_or(UNTAGGED);
        let hit = match by_id.get(ann.query_id.as_str()) {
            Some(p) => top1_hit(p.as_frame(), ann)?,
            None => false,
        };
        *counts.entry(tag.to_string()).or_insert(0) += hit as usize;
    }
    Ok(counts)
}

/// Everything `eval` can emit; absent sections are skipped in JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top1: Option<Top1Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<IouTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tal: Option<TalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_counts: Option<BTreeMap<String, usize>>,
}

impl EvalReport {
    /// Aligned plain-text rendering.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.top1 {
            let _ = writeln!(
                out,
                "{:<10} {:>7} {:>7} {:>9}",
                "category", "hits", "total", "top@1"
            );
            for (cat, s) in &t.per_category {
                let _ = writeln!(
                    out,
                    "{:<10} {:>7} {:>7} {:>9.4}",
                    cat.name(),
                    s.hits,
                    s.total,
                    s.accuracy
                );
            }
            let s = &t.overall;
            let _ = writeln!(
                out,
                "{:<10} {:>7} {:>7} {:>9.4}",
                "overall", s.hits, s.total, s.accuracy
            );
            if !t.missing.is_empty() {
                let _ = writeln!(out, "missing predictions: {}", t.missing.len());
            }
        }
        if let Some(t) = &self.iou {
            separate(&mut out);
            let _ = write!(out, "{:<10}", "category");
            for th in &t.thresholds {
                let _ = write!(out, " {:>7}", format!("{th:.1}"));
            }
            let _ = writeln!(out, " {:>7}", "avg");
            let mut row = |name: &str, r: &IouRow| {
                let _ = write!(out, "{name:<10}");
                for a in &r.accuracy {
                    let _ = write!(out, " {a:>7.4}");
                }
                let _ = writeln!(out, " {:>7.4}", r.average);
            };
            for (cat, r) in &t.per_category {
                row(cat.name(), r);
            }
            row("overall", &t.overall);
        }
        if let Some(t) = &self.tal {
            separate(&mut out);
            let width = t
                .per_class
                .keys()
                .map(String::len)
                .max()
                .unwrap_or(0)
                .max(8);
            let _ = write!(out, "{:<width$}", "class");
            for th in &t.thresholds {
                let _ = write!(out, " {:>7}", format!("{th:.1}"));
            }
            let _ = writeln!(out);
            for (class, aps) in &t.per_class {
                let _ = write!(out, "{class:<width$}");
                for ap in aps {
                    let _ = write!(out, " {ap:>7.4}");
                }
                let _ = writeln!(out);
            }
            let _ = write!(out, "{:<width$}", "mAP");
            for m in &t.map {
                let _ = write!(out, " {m:>7.4}");
            }
            let _ = writeln!(out, "\nmean mAP {:.4}", t.mean_map);
            if !t.excluded_classes.is_empty() {
                let _ = writeln!(
                    out,
                    "warning: {} class(es) without ground truth excluded",
                    t.excluded_classes.len()
                );
            }
        }
        if let Some(h) = &self.hit_counts {
            separate(&mut out);
            let width = h.keys().map(String::len).max().unwrap_or(0).max(8);
            for (tag, n) in h {
                let _ = writeln!(out, "{tag:<width$} {n:>7}");
            }
        }
        out
    }
}

fn separate(out: &mut String) {
    if !out.is_empty() {
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn iv(s: usize, e: usize) -> Interval {
        Interval::new(s, e).unwrap()
    }

    fn ann(
        id: &str,
        cat: Category,
        intervals: Vec<Interval>,
        key: Option<usize>,
    ) -> QueryAnnotation {
        QueryAnnotation {
            query_id: id.into(),
            video_id: "v".into(),
            category: cat,
            query: String::new(),
            intervals,
            key_frame: key,
            video_length: 1000,
            fine_category: None,
            frame_rate: None,
        }
    }

    #[test]
    fn effective_interval_cases() {
        let pose = ann("p", Category::Pose, vec![], Some(100));
        assert_eq!(effective_intervals(&pose).unwrap(), [iv(96, 104)]);
        let action = ann("a", Category::Action, vec![iv(8, 19)], None);
        assert_eq!(effective_intervals(&action).unwrap(), [iv(8, 19)]);
        let edge = ann("p", Category::Pose, vec![], Some(2));
        assert_eq!(effective_intervals(&edge).unwrap(), [iv(0, 6)]);
        let keyless = ann("p", Category::Pose, vec![iv(1, 2)], None);
        assert!(effective_intervals(&keyless).is_err());
        assert!(keyless.validate().is_err());
    }

    #[test]
    fn top1_cases() {
        let a = ann("a", Category::Content, vec![iv(8, 15)], None);
        assert!(top1_hit(10, &a).unwrap());
        assert!(top1_hit(15, &a).unwrap());
        assert!(!top1_hit(16, &a).unwrap());
        let p = ann("p", Category::Pose, vec![], Some(100));
        assert!(top1_hit(96, &p).unwrap());
        assert!(!top1_hit(95, &p).unwrap());
        assert!(!top1_hit(105, &p).unwrap());
    }

    #[test]
    fn full_uses_annotated_intervals() {
        let a = ann("f", Category::Full, vec![iv(20, 30)], Some(25));
        assert_eq!(effective_intervals(&a).unwrap(), [iv(20, 30)]);
    }

    #[test]
    fn validation() {
        assert!(ann("a", Category::Action, vec![], None).validate().is_err());
        assert!(ann("a", Category::Action, vec![iv(0, 1000)], None)
            .validate()
            .is_err());
        assert!(ann("a", Category::Action, vec![iv(0, 999)], None)
            .validate()
            .is_ok());
        assert!(ann("p", Category::Pose, vec![], Some(1000))
            .validate()
            .is_err());
    }

    #[test]
    fn bestshot_ten_queries_seven_hits() {
        let anns: Vec<_> = (0..10)
            .map(|i| {
                ann(
                    &format!("q{i}"),
                    Category::Action,
                    vec![iv(10 * i, 10 * i + 5)],
                    None,
                )
            })
            .collect();
        // q0..q6 land inside, q7..q9 one past the end
        let preds: Vec<_> = (0..10)
            .map(|i| Prediction::frame(format!("q{i}"), 10 * i + if i < 7 { 3 } else { 6 }))
            .collect();
        let r = eval_bestshot(&preds, &anns).unwrap();
        assert_eq!(r.overall.hits, 7);
        assert_abs_diff_eq!(r.overall.accuracy, 0.7);
        assert!(r.missing.is_empty());
    }

    #[test]
    fn bestshot_missing_and_unknown() {
        let anns = vec![
            ann("a", Category::Content, vec![iv(0, 5)], None),
            ann("b", Category::Pose, vec![], Some(50)),
        ];
        let r = eval_bestshot(&[], &anns).unwrap();
        assert_eq!(r.overall.accuracy, 0.0);
        assert_eq!(r.missing, ["a", "b"]);

        let preds = vec![
            Prediction::frame("zz", 0),
            Prediction::frame("a", 0),
            Prediction::frame("yy", 1),
        ];
        match eval_bestshot(&preds, &anns) {
            Err(Error::UnknownQueryIds(ids)) => assert_eq!(ids, ["yy", "zz"]),
            other => panic!("{other:?}"),
        }
        let dup = vec![Prediction::frame("a", 0), Prediction::frame("a", 1)];
        assert!(matches!(eval_bestshot(&dup, &anns), Err(Error::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn bestshot_interval_prediction_uses_midpoint() {
        let anns = vec![ann("a", Category::Content, vec![iv(10, 12)], None)];
        let hit = eval_bestshot(&[Prediction::interval("a", iv(0, 22))], &anns).unwrap();
        assert_eq!(hit.overall.hits, 1);
        let miss = eval_bestshot(&[Prediction::interval("a", iv(0, 8))], &anns).unwrap();
        assert_eq!(miss.overall.hits, 0);
    }

    #[test]
    fn iou_cases() {
        assert_eq!(interval_iou(&iv(3, 9), &iv(3, 9)), 1.0);
        assert_eq!(interval_iou(&iv(0, 4), &iv(5, 9)), 0.0);
        assert_abs_diff_eq!(interval_iou(&iv(0, 9), &iv(5, 14)), 1.0 / 3.0);
        assert_abs_diff_eq!(interval_iou(&iv(5, 5), &iv(5, 6)), 0.5);
    }

    #[test]
    fn iou_accuracy_threshold_split() {
        let anns = vec![ann("a", Category::Action, vec![iv(5, 14)], None)];
        let t = iou_accuracy(
            &[Prediction::interval("a", iv(0, 9))],
            &anns,
            &IOU_THRESHOLDS,
        )
        .unwrap();
        assert_eq!(t.overall.accuracy, [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(t.overall.average, 0.2);

        let exact = iou_accuracy(
            &[Prediction::interval("a", iv(5, 14))],
            &anns,
            &IOU_THRESHOLDS,
        )
        .unwrap();
        assert_eq!(exact.overall.accuracy, [1.0; 5]);
    }

    #[test]
    fn iou_accuracy_five_query_table() {
        let anns = vec![
            ann("a", Category::Action, vec![iv(0, 9)], None),
            ann("b", Category::Action, vec![iv(0, 9)], None),
            ann("c", Category::Content, vec![iv(0, 9), iv(100, 119)], None),
            ann("d", Category::Pose, vec![], Some(50)),
            ann("e", Category::Full, vec![iv(200, 212)], None),
        ];
        let preds = vec![
            // 10/10
            Prediction::interval("a", iv(0, 9)),
            // [0,9] vs [4,13]: 6/14 = 0.4286
            Prediction::interval("b", iv(4, 13)),
            // best GT is [100,119]: [105,124] gives 15/25 = 0.6
            Prediction::interval("c", iv(105, 124)),
            // frame 52 widened by 4 -> [48,56] vs [46,54]: 7/11 = 0.636
            Prediction::frame("d", 52),
            // frame 206 widened by 6 -> [200,212]: exact
            Prediction::frame("e", 206),
        ];
        let t = iou_accuracy(&preds, &anns, &IOU_THRESHOLDS).unwrap();
        // hits per threshold 0.3..0.7: 5, 5, 4, 4, 2
        let expected = [1.0, 1.0, 0.8, 0.8, 0.4];
        for (a, e) in t.overall.accuracy.iter().zip(expected) {
            assert_abs_diff_eq!(*a, e);
        }
        assert_abs_diff_eq!(t.overall.average, 0.8);
        assert_eq!(
            t.per_category[&Category::Action].accuracy,
            [1.0, 1.0, 0.5, 0.5, 0.5]
        );
    }

    fn seg(v: &str, s: usize, e: usize, score: f64) -> ScoredSegment {
        ScoredSegment {
            video_id: v.into(),
            interval: iv(s, e),
            score,
        }
    }

    fn gt(v: &str, s: usize, e: usize) -> GroundTruthSegment {
        GroundTruthSegment {
            video_id: v.into(),
            interval: iv(s, e),
        }
    }

    #[test]
    fn tal_exact_single() {
        let preds = BTreeMap::from([("run".to_string(), vec![seg("v", 10, 20, 0.9)])]);
        let gts = BTreeMap::from([("run".to_string(), vec![gt("v", 10, 20)])]);
        let r = tal_map(&preds, &gts, &IOU_THRESHOLDS).unwrap();
        assert_eq!(r.map, [1.0; 5]);
        assert_eq!(r.mean_map, 1.0);
    }

    #[test]
    fn tal_no_predictions() {
        let gts = BTreeMap::from([("run".to_string(), vec![gt("v", 10, 20)])]);
        let r = tal_map(&BTreeMap::new(), &gts, &IOU_THRESHOLDS).unwrap();
        assert_eq!(r.mean_map, 0.0);
    }

    #[test]
    fn tal_two_gts_three_preds() {
        // GT A = [0,9], B = [20,29]
        // p1 (0.9) = [0,9]    IoU 1 with A          -> TP
        // p2 (0.8) = [5,14]   IoU 1/3 with A (taken) -> FP
        // p3 (0.7) = [22,31]  IoU 8/12 with B        -> TP at t <= 0.6, FP at 0.7
        // t <= 0.6: precision 1, 1/2, 2/3 at recall 1/2, 1/2, 1
        //   envelope 1, 2/3, 2/3 -> AP = 1/2 * 1 + 1/2 * 2/3 = 5/6
        // t = 0.7: only p1 -> AP = 1/2
        let preds = BTreeMap::from([(
            "c".to_string(),
            vec![
                seg("v", 5, 14, 0.8),
                seg("v", 0, 9, 0.9),
                seg("v", 22, 31, 0.7),
            ],
        )]);
        let gts = BTreeMap::from([("c".to_string(), vec![gt("v", 0, 9), gt("v", 20, 29)])]);
        let r = tal_map(&preds, &gts, &IOU_THRESHOLDS).unwrap();
        for m in &r.map[..4] {
            assert_abs_diff_eq!(*m, 5.0 / 6.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(r.map[4], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tal_matches_within_video_only() {
        let preds = BTreeMap::from([("c".to_string(), vec![seg("other", 0, 9, 1.0)])]);
        let gts = BTreeMap::from([("c".to_string(), vec![gt("v", 0, 9)])]);
        assert_eq!(tal_map(&preds, &gts, &[0.5]).unwrap().mean_map, 0.0);
    }

    #[test]
    fn tal_excludes_classes_without_gt() {
        let preds = BTreeMap::from([
            ("a".to_string(), vec![seg("v", 0, 9, 1.0)]),
            ("ghost".to_string(), vec![seg("v", 0, 9, 1.0)]),
        ]);
        let gts = BTreeMap::from([("a".to_string(), vec![gt("v", 0, 9)])]);
        let r = tal_map(&preds, &gts, &IOU_THRESHOLDS).unwrap();
        assert_eq!(r.excluded_classes, ["ghost"]);
        assert_eq!(r.mean_map, 1.0);
        assert!(tal_map(&preds, &gts, &[]).is_err());
    }

    #[test]
    fn hit_counts() {
        let mut anns = vec![
            ann("a", Category::Action, vec![iv(0, 9)], None),
            ann("b", Category::Action, vec![iv(0, 9)], None),
            ann("c", Category::Action, vec![iv(0, 9)], None),
            ann("d", Category::Action, vec![iv(0, 9)], None),
        ];
        anns[0].fine_category = Some("dance".into());
        anns[1].fine_category = Some("dance".into());
        anns[2].fine_category = Some("jump".into());
        let preds = vec![
            Prediction::frame("a", 3),
            Prediction::frame("b", 30),
            Prediction::frame("c", 9),
            Prediction::frame("d", 0),
        ];
        let h = hit_count_by_category(&preds, &anns).unwrap();
        assert_eq!(
            h,
            BTreeMap::from([("dance".into(), 1), ("jump".into(), 1), ("other".into(), 1)])
        );

        let none = hit_count_by_category(&[], &anns).unwrap();
        assert_eq!(none.len(), 3);
        assert!(none.values().all(|&n| n == 0));
    }

    #[test]
    fn category_serde_accepts_both_cases() {
        let c: Category = serde_json::from_str("\"Pose\"").unwrap();
        assert_eq!(c, Category::Pose);
        let c: Category = serde_json::from_str("\"action\"").unwrap();
        assert_eq!(c, Category::Action);
        assert_eq!(serde_json::to_string(&Category::Full).unwrap(), "\"full\"");
    }

    #[test]
    fn table_renders_every_section() {
        let anns = vec![ann("a", Category::Action, vec![iv(0, 9)], None)];
        let preds = vec![Prediction::frame("a", 3)];
        let report = EvalReport {
            top1: Some(eval_bestshot(&preds, &anns).unwrap()),
            iou: Some(iou_accuracy(&preds, &anns, &IOU_THRESHOLDS).unwrap()),
            tal: None,
            hit_counts: Some(hit_count_by_category(&preds, &anns).unwrap()),
        };
        let text = report.to_table();
        assert!(text.contains("Action"));
        assert!(text.contains("overall"));
        assert!(text.contains("avg"));
        assert!(text.contains("other"));
    }
}
