use std::path::PathBuf;

use anyhow::Context;
use bestshot_core::describer::{describe, OrderPolicy};
use bestshot_core::io::{load_poses, DescriptionRecord};
use clap::{Args, ValueEnum};

use crate::config::Config;
use crate::output::Sink;

#[derive(Args)]
pub struct DescribeArgs {
    /// Pose records (JSONL).
    #[arg(long)]
    poses: PathBuf,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_sentences: Option<usize>,
    #[arg(long, value_enum)]
    order: Option<Order>,
    /// Keep statements whose category is marked skippable.
    #[arg(long)]
    keep_skippable: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    FixedRoster,
    SeededShuffle,
}

/// Per-record seed, so records differ in wording but stay reproducible.
fn record_seed(seed: u64, id: &str) -> u64 {
    let h = id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    });
    seed ^ h
}

pub fn run(args: DescribeArgs, cfg: &Config, seed: Option<u64>) -> anyhow::Result<()> {
    let assets = cfg.assets.load()?;
    let mut config = cfg.describer.clone();
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(n) = args.max_sentences {
        config.max_sentences = n;
    }
    if let Some(o) = args.order {
        config.order = match o {
            Order::FixedRoster => OrderPolicy::FixedRoster,
            Order::SeededShuffle => OrderPolicy::SeededShuffle,
        };
    }
    if args.keep_skippable {
        config.skip_skippable = false;
    }

    let records = load_poses(&args.poses)?;
    let mut sink = Sink::open(args.out.as_deref())?;
    for r in &records {
        r.validate_for(&assets.skeleton)
            .with_context(|| format!("pose {}", r.id))?;
        let mut c = config.clone();
        c.seed = record_seed(config.seed, &r.id);
        let d = describe(&r.pose()?, &assets, &c).with_context(|| format!("pose {}", r.id))?;
        sink.record(&DescriptionRecord {
            id: r.id.clone(),
            text: d.text(),
            sentences: d.sentences,
            config_version: d.config_version,
            seed: c.seed,
        })?;
    }
    sink.finish()
}
