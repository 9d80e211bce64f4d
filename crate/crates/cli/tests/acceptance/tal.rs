use std::collections::BTreeMap;

use bestshot_core::interval::Interval;
use bestshot_core::metrics::{tal_map, GroundTruthSegment, ScoredSegment, IOU_THRESHOLDS};
use bestshot_core::retrieval::{t3al_segment, SegmentationParams, ThresholdPolicy};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{check, Outcome};

const WIDTHS: [usize; 5] = [4, 6, 8, 10, 12];
const SPACING: usize = 40;
const LENGTH: usize = SPACING * (WIDTHS.len() + 1);

fn planted() -> Vec<Interval> {
    WIDTHS
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let s = SPACING * (i + 1);
            Interval::new(s, s + w - 1).unwrap()
        })
        .collect()
}

/// Similarity curve with one plateau per interval; heights differ so
/// segment scores are distinct.
fn curve(plateaus: &[Interval]) -> Vec<f64> {
    let mut s = vec![0.05; LENGTH];
    for (k, iv) in plateaus.iter().enumerate() {
        for v in &mut s[iv.start()..=iv.end()] {
            *v = 0.9 - 0.05 * k as f64;
        }
    }
    s
}

/// Shifts every plateau by ceil(fraction * width) frames, direction drawn
/// from the seed.
fn jittered(fraction: f64, rng: &mut ChaCha8Rng) -> Vec<Interval> {
    planted()
        .into_iter()
        .map(|iv| {
            let d = (fraction * iv.len() as f64).ceil() as usize;
            if rng.random_bool(0.5) {
                Interval::new(iv.start() + d, iv.end() + d).unwrap()
            } else {
                Interval::new(iv.start() - d, iv.end() - d).unwrap()
            }
        })
        .collect()
}

fn mean_map(plateaus: &[Interval]) -> Result<(f64, Vec<f64>), String> {
    let params = SegmentationParams {
        radius: 0,
        threshold: ThresholdPolicy::Mean,
        min_length: 3,
        max_gap: 2,
    };
    let segs = t3al_segment(&curve(plateaus), &params).map_err(|e| e.to_string())?;
    let found: Vec<Interval> = segs.iter().map(|s| s.interval).collect();
    check(found == plateaus, || {
        format!("segmentation recovered {found:?}, planted {plateaus:?}")
    })?;
    let preds = segs
        .iter()
        .map(|s| ScoredSegment {
            video_id: "v".into(),
            interval: s.interval,
            score: s.peak,
        })
        .collect();
    let gts = planted()
        .into_iter()
        .map(|interval| GroundTruthSegment {
            video_id: "v".into(),
            interval,
        })
        .collect();
    let r = tal_map(
        &BTreeMap::from([("c".to_string(), preds)]),
        &BTreeMap::from([("c".to_string(), gts)]),
        &IOU_THRESHOLDS,
    )
    .map_err(|e| e.to_string())?;
    Ok((r.mean_map, r.map))
}

pub fn run() -> Outcome {
    let (clean, per) = mean_map(&planted())?;
    check(clean == 1.0 && per.iter().all(|&m| m == 1.0), || {
        format!("exact plants gave {per:?}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = (0.0f64, 0.0f64);
    for trial in 0..20 {
        let (ten, _) = mean_map(&jittered(0.1, &mut rng))?;
        let (thirty, _) = mean_map(&jittered(0.3, &mut rng))?;
        check(clean > ten && ten > thirty, || {
            format!("trial {trial}: 1.0, {ten}, {thirty} not strictly decreasing")
        })?;
        worst = (worst.0.max(ten), worst.1.max(thirty));
    }
    Ok(format!(
        "exact plants mAP 1.0 at all thresholds; 20 jitter trials, 10% <= {:.3}, 30% <= {:.3}",
        worst.0, worst.1
    ))
}
