use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use bestshot_core::interval::Interval;
use bestshot_core::metrics::{
    interval_iou, iou_accuracy, tal_map, top1_hit, Category, GroundTruthSegment, Prediction,
    QueryAnnotation, ScoredSegment, Target, IOU_THRESHOLDS,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{check, Outcome};

const CASES: usize = 1000;
const LENGTH: usize = 40;
const MILLI: [usize; 5] = [300, 400, 500, 600, 700];

fn frames(iv: &Interval) -> BTreeSet<usize> {
    (iv.start()..=iv.end()).collect()
}

fn iou_fraction(a: &Interval, b: &Interval) -> (usize, usize) {
    let (fa, fb) = (frames(a), frames(b));
    (fa.intersection(&fb).count(), fa.union(&fb).count())
}

fn meets((inter, union): (usize, usize), milli: usize) -> bool {
    inter * 1000 >= milli * union
}

fn interval(rng: &mut ChaCha8Rng) -> Interval {
    let s = rng.random_range(0..LENGTH - 1);
    let e = rng.random_range(s..(s + 10).min(LENGTH));
    Interval::new(s, e).unwrap()
}

fn category(rng: &mut ChaCha8Rng) -> Category {
    Category::ALL[rng.random_range(0..4)]
}

fn annotation(rng: &mut ChaCha8Rng, id: usize) -> QueryAnnotation {
    let category = category(rng);
    let gts = rng.random_range(1..=5);
    QueryAnnotation {
        query_id: format!("q{id}"),
        video_id: "v".into(),
        category,
        query: String::new(),
        intervals: (0..gts).map(|_| interval(rng)).collect(),
        key_frame: Some(rng.random_range(0..LENGTH)),
        video_length: LENGTH,
        fine_category: None,
        frame_rate: None,
    }
}

/// Frames that count as a hit, enumerated directly.
fn hit_set(ann: &QueryAnnotation) -> BTreeSet<usize> {
    match ann.category {
        Category::Pose => {
            let k = ann.key_frame.unwrap() as i64;
            (k - 4..=k + 4)
                .filter(|f| (0..LENGTH as i64).contains(f))
                .map(|f| f as usize)
                .collect()
        }
        _ => ann.intervals.iter().flat_map(frames).collect(),
    }
}

fn scoring_intervals(ann: &QueryAnnotation) -> Vec<Interval> {
    match ann.category {
        Category::Pose => {
            let set = hit_set(ann);
            vec![Interval::new(*set.first().unwrap(), *set.last().unwrap()).unwrap()]
        }
        _ => ann.intervals.clone(),
    }
}

fn ap_oracle(tp: &[bool], gt_count: usize) -> f64 {
    let mut cum = 0;
    let points: Vec<(usize, f64)> = tp
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            cum += t as usize;
            (cum, cum as f64 / (i + 1) as f64)
        })
        .collect();
    (1..=cum)
        .map(|k| {
            points
                .iter()
                .filter(|(c, _)| *c >= k)
                .map(|(_, p)| *p)
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / gt_count as f64
}

fn tal_oracle(preds: &[ScoredSegment], gts: &[GroundTruthSegment], milli: usize) -> f64 {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .score
            .partial_cmp(&preds[a].score)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut used = vec![false; gts.len()];
    let mut tp = Vec::new();
    for i in order {
        let p = &preds[i];
        let mut best: Option<(usize, (usize, usize))> = None;
        for (g, gt) in gts.iter().enumerate() {
            if used[g] || gt.video_id != p.video_id {
                continue;
            }
            let f = iou_fraction(&p.interval, &gt.interval);
            if !meets(f, milli) {
                continue;
            }
            if best.is_none_or(|(_, b)| f.0 * b.1 > b.0 * f.1) {
                best = Some((g, f));
            }
        }
        if let Some((g, _)) = best {
            used[g] = true;
        }
        tp.push(best.is_some());
    }
    ap_oracle(&tp, gts.len())
}

fn top1(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..CASES {
        let ann = annotation(rng, 0);
        let set = hit_set(&ann);
        for f in 0..LENGTH {
            let got = top1_hit(f, &ann).map_err(|e| e.to_string())?;
            check(got == set.contains(&f), || {
                format!("top1_hit case {case} frame {f}")
            })?;
        }
    }
    Ok(())
}

fn iou(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..CASES {
        let (a, b) = (interval(rng), interval(rng));
        let (i, u) = iou_fraction(&a, &b);
        let got = interval_iou(&a, &b);
        check((got - i as f64 / u as f64).abs() < 1e-15, || {
            format!("interval_iou case {case}: {a:?} {b:?} gave {got}")
        })?;
    }
    Ok(())
}

fn iou_acc(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..CASES {
        let n = rng.random_range(1..=10);
        let anns: Vec<QueryAnnotation> = (0..n).map(|i| annotation(rng, i)).collect();
        // some queries go unanswered
        let preds: Vec<Prediction> = anns
            .iter()
            .filter_map(|a| {
                let iv = interval(rng);
                rng.random_bool(0.85)
                    .then(|| Prediction::interval(a.query_id.clone(), iv))
            })
            .collect();
        let table = iou_accuracy(&preds, &anns, &IOU_THRESHOLDS).map_err(|e| e.to_string())?;
        for (k, &t) in MILLI.iter().enumerate() {
            let hits = preds
                .iter()
                .filter(|p| {
                    let ann = anns.iter().find(|a| a.query_id == p.query_id).unwrap();
                    let Target::Interval(iv) = p.target else {
                        unreachable!()
                    };
                    scoring_intervals(ann)
                        .iter()
                        .any(|gt| meets(iou_fraction(&iv, gt), t))
                })
                .count();
            let expected = hits as f64 / n as f64;
            check((table.overall.accuracy[k] - expected).abs() < 1e-12, || {
                format!(
                    "iou_accuracy case {case} threshold {t}: {} vs {expected}",
                    table.overall.accuracy[k]
                )
            })?;
        }
    }
    Ok(())
}

fn tal(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let video = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { "a" } else { "b" }.to_string();
    for case in 0..CASES {
        let preds: Vec<ScoredSegment> = (0..rng.random_range(0..=10))
            .map(|_| ScoredSegment {
                video_id: video(rng),
                interval: interval(rng),
                score: rng.random_range(0..6) as f64 / 5.0,
            })
            .collect();
        let gts: Vec<GroundTruthSegment> = (0..rng.random_range(1..=5))
            .map(|_| GroundTruthSegment {
                video_id: video(rng),
                interval: interval(rng),
            })
            .collect();
        let p = BTreeMap::from([("c".to_string(), preds.clone())]);
        let g = BTreeMap::from([("c".to_string(), gts.clone())]);
        let report = tal_map(&p, &g, &IOU_THRESHOLDS).map_err(|e| e.to_string())?;
        for (k, &t) in MILLI.iter().enumerate() {
            let expected = tal_oracle(&preds, &gts, t);
            check((report.map[k] - expected).abs() < 1e-12, || {
                format!(
                    "tal_map case {case} threshold {t}: {} vs {expected}",
                    report.map[k]
                )
            })?;
        }
    }
    Ok(())
}

pub fn run() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    top1(&mut rng)?;
    iou(&mut rng)?;
    iou_acc(&mut rng)?;
    tal(&mut rng)?;
    let took = started.elapsed();
    check(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "{CASES} fuzzed cases each for top1_hit, interval_iou, iou_accuracy, tal_map; 0 mismatches"
    ))
}
