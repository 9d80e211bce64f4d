use std::path::PathBuf;

use anyhow::{bail, Context};
use bestshot_core::pres3::{
    run_pipeline, CaptionerClient, FrameRef, HttpClient, MockClient, VideoInput,
};
use clap::{Args, Subcommand};
use serde::Deserialize;

use crate::config::{ClientConfig, Config};
use crate::output::Sink;

#[derive(Subcommand)]
pub enum Pres3Command {
    /// Annotate one video: summary, keyframe captions, QA pairs.
    Run(RunArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Directory of frame images; sorted file names give frame order.
    #[arg(long)]
    frames_dir: PathBuf,
    /// JSON with equal-length `dynamic` and `static` per-frame scores.
    #[arg(long)]
    scores: PathBuf,
    /// Defaults to the frames directory name.
    #[arg(long)]
    video_id: Option<String>,
    /// Keyframes to summarize and caption.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    retries: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scores {
    dynamic: Vec<f64>,
    #[serde(rename = "static")]
    static_: Vec<f64>,
}

pub fn run(cmd: Pres3Command, cfg: &Config, seed: Option<u64>) -> anyhow::Result<()> {
    let Pres3Command::Run(args) = cmd;
    let mut pipeline = cfg.pipeline.clone();
    if let Some(b) = args.budget {
        pipeline.summary_budget = b;
    }
    if let Some(c) = args.concurrency {
        pipeline.caption_concurrency = c;
    }
    if let Some(r) = args.retries {
        pipeline.retry_limit = r;
    }

    let mut names = Vec::new();
    for entry in std::fs::read_dir(&args.frames_dir)
        .with_context(|| format!("listing {}", args.frames_dir.display()))?
    {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && !name.starts_with('.') {
            names.push(name);
        }
    }
    names.sort();
    if names.is_empty() {
        bail!("no frames in {}", args.frames_dir.display());
    }
    let frames: Vec<FrameRef> = names
        .iter()
        .enumerate()
        .map(|(index, n)| FrameRef {
            index,
            path: args.frames_dir.join(n).to_string_lossy().into_owned(),
        })
        .collect();

    let text = std::fs::read_to_string(&args.scores)
        .with_context(|| format!("reading {}", args.scores.display()))?;
    let scores: Scores = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.scores.display()))?;
    if scores.dynamic.len() != frames.len() || scores.static_.len() != frames.len() {
        bail!(
            "{} frames but {} dynamic and {} static scores",
            frames.len(),
            scores.dynamic.len(),
            scores.static_.len()
        );
    }
    let video_id = match args.video_id {
        Some(v) => v,
        None => args
            .frames_dir
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .context("cannot derive a video id; pass --video-id")?,
    };
    let video = VideoInput {
        video_id,
        frames,
        dynamic_scores: scores.dynamic,
        static_scores: scores.static_,
    };

    let client: Box<dyn CaptionerClient> = match &cfg.client {
        ClientConfig::Mock(m) => {
            let mut m = m.clone();
            if let Some(s) = seed {
                m.seed = s;
            }
            Box::new(MockClient::new(m))
        }
        ClientConfig::Http(h) => Box::new(HttpClient::new(h)),
    };
    let bundle = run_pipeline(client.as_ref(), &video, &pipeline)?;
    let mut sink = Sink::open(args.out.as_deref())?;
    sink.record(&bundle)?;
    sink.finish()
}
