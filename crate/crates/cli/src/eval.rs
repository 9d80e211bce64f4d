use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bestshot_core::io::{load_annotations, load_jsonl, load_predictions, SegmentRecord};
use bestshot_core::metrics::{
    eval_bestshot, hit_count_by_category, iou_accuracy, tal_map, EvalReport, GroundTruthSegment,
    ScoredSegment, IOU_THRESHOLDS,
};
use clap::{Args, Subcommand};

#[derive(Subcommand)]
pub enum EvalCommand {
    /// Top@1 frame accuracy per category, plus fine-category hit counts.
    Bestshot(QueryEval),
    /// Interval IoU accuracy at each threshold.
    Iou {
        #[command(flatten)]
        eval: QueryEval,
        #[arg(long, value_delimiter = ',', default_values_t = IOU_THRESHOLDS)]
        thresholds: Vec<f64>,
    },
    /// Temporal localization mAP.
    Tal {
        /// Scored segments (JSONL).
        #[arg(long)]
        predictions: PathBuf,
        /// Ground-truth segments (JSONL).
        #[arg(long)]
        ground_truth: PathBuf,
        /// Treat segment bounds as seconds at this frame rate.
        #[arg(long)]
        fps: Option<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = IOU_THRESHOLDS)]
        thresholds: Vec<f64>,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Args)]
pub struct QueryEval {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Also write the report as JSON to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print JSON instead of the text table.
    #[arg(long)]
    json: bool,
}

fn emit(report: &EvalReport, args: &ReportArgs) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    if let Some(p) = &args.report {
        std::fs::write(p, format!("{json}\n"))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    if args.json {
        println!("{json}");
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn segments(
    path: &Path,
    fps: Option<f64>,
    scored: bool,
) -> anyhow::Result<Vec<(String, ScoredSegment)>> {
    let records: Vec<SegmentRecord> = load_jsonl(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let interval = r
                .to_interval(fps)
                .with_context(|| format!("{}: record {}", path.display(), i + 1))?;
            let score = match (r.score, scored) {
                (Some(s), _) => s,
                (None, false) => 0.0,
                (None, true) => bail!("{}: record {} has no score", path.display(), i + 1),
            };
            Ok((
                r.label,
                ScoredSegment {
                    video_id: r.video_id,
                    interval,
                    score,
                },
            ))
        })
        .collect()
}

pub fn run(cmd: EvalCommand) -> anyhow::Result<()> {
    match cmd {
        EvalCommand::Bestshot(e) => {
            let anns = load_annotations(&e.annotations)?;
            let preds = load_predictions(&e.predictions)?;
            let report = EvalReport {
                top1: Some(eval_bestshot(&preds, &anns)?),
                hit_counts: Some(hit_count_by_category(&preds, &anns)?),
                ..Default::default()
            };
            emit(&report, &e.report)
        }
        EvalCommand::Iou { eval, thresholds } => {
            let anns = load_annotations(&eval.annotations)?;
            let preds = load_predictions(&eval.predictions)?;
            let report = EvalReport {
                iou: Some(iou_accuracy(&preds, &anns, &thresholds)?),
                ..Default::default()
            };
            emit(&report, &eval.report)
        }
        EvalCommand::Tal {
            predictions,
            ground_truth,
            fps,
            thresholds,
            report,
        } => {
            let mut preds: BTreeMap<String, Vec<ScoredSegment>> = BTreeMap::new();
            for (label, s) in segments(&predictions, fps, true)? {
                preds.entry(label).or_default().push(s);
            }
            let mut gts: BTreeMap<String, Vec<GroundTruthSegment>> = BTreeMap::new();
            for (label, s) in segments(&ground_truth, fps, false)? {
                gts.entry(label).or_default().push(GroundTruthSegment {
                    video_id: s.video_id,
                    interval: s.interval,
                });
            }
            let tal = tal_map(&preds, &gts, &thresholds)?;
            if !tal.excluded_classes.is_empty() {
                eprintln!(
                    "warning: {} predicted class(es) have no ground truth and were left out: {}",
                    tal.excluded_classes.len(),
                    tal.excluded_classes.join(", ")
                );
            }
            emit(
                &EvalReport {
                    tal: Some(tal),
                    ..Default::default()
                },
                &report,
            )
        }
    }
}
