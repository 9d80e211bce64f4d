use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bestshot_core::io::{load_annotations, load_matrix, PredictionRecord, SegmentRecord};
use bestshot_core::metrics::QueryAnnotation;
use bestshot_core::retrieval::{
    best_frame, nms_select, score_frames, t3al_localize, Matrix, ThresholdPolicy,
};
use clap::{Args, Subcommand, ValueEnum};

use crate::config::Config;
use crate::output::Sink;

#[derive(Subcommand)]
pub enum InferCommand {
    /// Highest-scoring frame per query.
    BestFrame(ScoreSource),
    /// Top-k frames per query with non-maximum suppression.
    Nms {
        #[command(flatten)]
        source: ScoreSource,
        /// Frames suppressed on each side of a pick (config `nms_radius`, default 8).
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Zero-shot action segments: pseudo-label each video, then threshold.
    T3al(T3alArgs),
}

/// Where per-query frame scores come from.
#[derive(Args)]
pub struct ScoreSource {
    /// Query-by-frame similarity matrix (SHOTMAT1).
    #[arg(long, conflicts_with_all = ["queries", "frames", "frames_dir"])]
    similarity: Option<PathBuf>,
    /// Query embeddings, one row per annotation (SHOTMAT1).
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Frame embeddings shared by every query (SHOTMAT1).
    #[arg(long, conflicts_with = "frames_dir")]
    frames: Option<PathBuf>,
    /// Directory of `<video_id>.shotmat` frame embeddings; needs --annotations.
    #[arg(long)]
    frames_dir: Option<PathBuf>,
    /// Annotations naming the queries, in matrix row order.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct T3alArgs {
    /// Frame embeddings of one video (SHOTMAT1).
    #[arg(long, conflicts_with = "frames_dir")]
    frames: Option<PathBuf>,
    /// Video id for --frames; defaults to the file stem.
    #[arg(long, requires = "frames")]
    video_id: Option<String>,
    /// Directory of `<video_id>.shotmat` frame embeddings.
    #[arg(long)]
    frames_dir: Option<PathBuf>,
    /// Class text embeddings (SHOTMAT1).
    #[arg(long)]
    classes: PathBuf,
    /// Class names: a JSON array or one name per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Smoothing radius in frames.
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long, value_enum)]
    threshold: Option<Threshold>,
    /// k for mean-plus-std.
    #[arg(long, default_value_t = 1.0)]
    std_k: f64,
    #[arg(long)]
    min_length: Option<usize>,
    #[arg(long)]
    max_gap: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Threshold {
    Mean,
    MeanPlusStd,
}

pub fn run(cmd: InferCommand, cfg: &Config) -> anyhow::Result<()> {
    match cmd {
        InferCommand::BestFrame(src) => {
            let rows = load_scores(&src)?;
            let mut sink = Sink::open(src.out.as_deref())?;
            for (id, scores) in rows {
                let f = best_frame(&scores).with_context(|| format!("query {id}"))?;
                sink.record(&PredictionRecord {
                    query_id: id,
                    frame: Some(f),
                    interval: None,
                    score: scores[f],
                })?;
            }
            sink.finish()
        }
        InferCommand::Nms { source, radius, k } => {
            let radius = radius.unwrap_or(cfg.nms_radius);
            let rows = load_scores(&source)?;
            let mut sink = Sink::open(source.out.as_deref())?;
            for (id, scores) in rows {
                for f in nms_select(&scores, radius, k).with_context(|| format!("query {id}"))? {
                    sink.record(&PredictionRecord {
                        query_id: id.clone(),
                        frame: Some(f),
                        interval: None,
                        score: scores[f],
                    })?;
                }
            }
            sink.finish()
        }
        InferCommand::T3al(args) => t3al(args, cfg),
    }
}

fn matrix(path: &Path) -> anyhow::Result<Matrix> {
    load_matrix(path).with_context(|| format!("loading {}", path.display()))
}

fn check_length(ann: &QueryAnnotation, frames: usize) -> anyhow::Result<()> {
    if ann.video_length != frames {
        bail!(
            "query {}: video {} has {} frames but the scores cover {frames}",
            ann.query_id,
            ann.video_id,
            ann.video_length
        );
    }
    Ok(())
}

/// (query id, per-frame scores) in input order.
fn load_scores(src: &ScoreSource) -> anyhow::Result<Vec<(String, Vec<f64>)>> {
    let anns = src
        .annotations
        .as_deref()
        .map(load_annotations)
        .transpose()?;
    let ids = |rows: usize| -> anyhow::Result<Vec<String>> {
        match &anns {
            Some(a) if a.len() != rows => bail!("{rows} query rows but {} annotations", a.len()),
            Some(a) => Ok(a.iter().map(|a| a.query_id.clone()).collect()),
            None => Ok((0..rows).map(|r| r.to_string()).collect()),
        }
    };

    if let Some(path) = &src.similarity {
        let sim = matrix(path)?;
        let ids = ids(sim.rows())?;
        if let Some(anns) = &anns {
            anns.iter().try_for_each(|a| check_length(a, sim.cols()))?;
        }
        return Ok(ids
            .into_iter()
            .enumerate()
            .map(|(r, id)| (id, sim.row(r).iter().map(|&v| v as f64).collect()))
            .collect());
    }

    let Some(qpath) = &src.queries else {
        bail!("pass --similarity, or --queries with --frames or --frames-dir");
    };
    let queries = matrix(qpath)?;
    let ids = ids(queries.rows())?;
    if let Some(fpath) = &src.frames {
        let frames = matrix(fpath)?;
        if let Some(anns) = &anns {
            anns.iter()
                .try_for_each(|a| check_length(a, frames.rows()))?;
        }
        return ids
            .into_iter()
            .enumerate()
            .map(|(r, id)| Ok((id, score_frames(queries.row(r), &frames)?)))
            .collect();
    }
    let Some(dir) = &src.frames_dir else {
        bail!("--queries needs --frames or --frames-dir");
    };
    let Some(anns) = &anns else {
        bail!("--frames-dir needs --annotations to map queries to videos");
    };
    let mut videos: HashMap<&str, Matrix> = HashMap::new();
    let mut out = Vec::with_capacity(anns.len());
    for (r, ann) in anns.iter().enumerate() {
        if !videos.contains_key(ann.video_id.as_str()) {
            let m = matrix(&dir.join(format!("{}.shotmat", ann.video_id)))?;
            videos.insert(&ann.video_id, m);
        }
        let frames = &videos[ann.video_id.as_str()];
        check_length(ann, frames.rows())?;
        let scores = score_frames(queries.row(r), frames)
            .with_context(|| format!("query {}", ann.query_id))?;
        out.push((ann.query_id.clone(), scores));
    }
    Ok(out)
}

fn load_labels(path: Option<&Path>, count: usize) -> anyhow::Result<Vec<String>> {
    let Some(path) = path else {
        return Ok((0..count).map(|i| format!("class{i}")).collect());
    };
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let labels: Vec<String> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    };
    if labels.len() != count {
        bail!("{} labels for {count} class embeddings", labels.len());
    }
    Ok(labels)
}

fn t3al(args: T3alArgs, cfg: &Config) -> anyhow::Result<()> {
    let mut params = cfg.segmentation;
    if let Some(r) = args.radius {
        params.radius = r;
    }
    if let Some(t) = args.threshold {
        params.threshold = match t {
            Threshold::Mean => ThresholdPolicy::Mean,
            Threshold::MeanPlusStd => ThresholdPolicy::MeanPlusStd { k: args.std_k },
        };
    }
    if let Some(m) = args.min_length {
        params.min_length = m;
    }
    if let Some(g) = args.max_gap {
        params.max_gap = g;
    }

    let classes = matrix(&args.classes)?;
    let labels = load_labels(args.labels.as_deref(), classes.rows())?;

    let videos: Vec<(String, PathBuf)> = match (&args.frames, &args.frames_dir) {
        (Some(f), _) => {
            let id = match &args.video_id {
                Some(id) => id.clone(),
                None => f
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .context("cannot derive a video id from the frames path")?,
            };
            vec![(id, f.clone())]
        }
        (None, Some(dir)) => {
            let mut v = Vec::new();
            for entry in
                std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?
            {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "shotmat") {
                    let id = path
                        .file_stem()
                        .expect("has extension")
                        .to_string_lossy()
                        .into_owned();
                    v.push((id, path));
                }
            }
            v.sort();
            v
        }
        (None, None) => bail!("pass --frames or --frames-dir"),
    };

    let mut sink = Sink::open(args.out.as_deref())?;
    for (id, path) in videos {
        let frames = matrix(&path)?;
        let (label, segments) =
            t3al_localize(&frames, &classes, &params).with_context(|| format!("video {id}"))?;
        for s in segments {
            sink.record(&SegmentRecord::from_interval(
                &id,
                &labels[label],
                s.interval,
                Some(s.peak),
            ))?;
        }
    }
    sink.finish()
}
