use std::path::PathBuf;

use anyhow::{bail, Context};
use bestshot_core::io::{load_poses, SubsetRecord};
use bestshot_core::kinematics::Skeleton;
use bestshot_core::sampler::{
    fps_select_with, generate_subsets, Alignment, PoseCollection, StartPolicy, SubsetSpec,
};
use clap::{Args, ValueEnum};

use crate::output::Sink;

#[derive(Args)]
pub struct FpsArgs {
    /// Pose records (JSONL) on the SMPL-22 skeleton.
    #[arg(long)]
    poses: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Frames per subset.
    #[arg(long, conflicts_with = "fraction")]
    n: Option<usize>,
    /// Frames per subset as a fraction of the population.
    #[arg(long)]
    fraction: Option<f64>,
    /// Number of subsets, each from its own start frame.
    #[arg(long, default_value_t = 1)]
    subsets: usize,
    /// Start frame ids (repeatable); drawn with the seed when omitted.
    #[arg(long)]
    start: Vec<String>,
    /// Compare poses as recorded instead of root-centred and facing +Z.
    #[arg(long, value_enum, default_value_t = Align::Yaw)]
    alignment: Align,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Align {
    Yaw,
    None,
}

pub fn run(args: FpsArgs, seed: Option<u64>) -> anyhow::Result<()> {
    let records = load_poses(&args.poses)?;
    let skeleton = Skeleton::smpl22();
    let mut frames = Vec::with_capacity(records.len());
    for r in &records {
        r.validate_for(&skeleton)
            .with_context(|| format!("pose {}", r.id))?;
        frames.push((r.id.clone(), r.pose()?));
    }
    let collection = PoseCollection::new(skeleton, frames)?;
    let population = collection.len();

    let n = match (args.n, args.fraction) {
        (Some(n), _) => n,
        (None, Some(f)) => SubsetSpec {
            fraction: f,
            subset_count: args.subsets,
            start: StartPolicy::SeededRandom,
        }
        .subset_size(population)?,
        (None, None) => bail!("pass --n or --fraction"),
    };
    if !args.start.is_empty() && args.start.len() != args.subsets {
        bail!(
            "{} start frames given for {} subsets",
            args.start.len(),
            args.subsets
        );
    }

    let subsets = if args.alignment == Align::Yaw && args.n.is_none() {
        let spec = SubsetSpec {
            fraction: args.fraction.expect("checked above"),
            subset_count: args.subsets,
            start: if args.start.is_empty() {
                StartPolicy::SeededRandom
            } else {
                StartPolicy::Explicit(args.start.clone())
            },
        };
        generate_subsets(&collection, &spec, seed.unwrap_or(0))?
            .into_iter()
            .map(|s| (s.start, s.ids))
            .collect::<Vec<_>>()
    } else {
        let starts = if args.start.is_empty() {
            seeded_starts(&collection, args.subsets, seed.unwrap_or(0))?
        } else {
            args.start.clone()
        };
        let alignment = match args.alignment {
            Align::Yaw => Alignment::Yaw,
            Align::None => Alignment::None,
        };
        starts
            .into_iter()
            .map(|s| Ok((s.clone(), fps_select_with(&collection, n, &s, alignment)?)))
            .collect::<anyhow::Result<Vec<_>>>()?
    };

    let mut sink = Sink::open(args.out.as_deref())?;
    for (i, (start, ids)) in subsets.into_iter().enumerate() {
        sink.record(&SubsetRecord {
            subset: i,
            start,
            ids,
        })?;
    }
    sink.finish()
}

fn seeded_starts(c: &PoseCollection, count: usize, seed: u64) -> anyhow::Result<Vec<String>> {
    if count == 0 || count > c.len() {
        bail!("cannot draw {count} distinct start frames from {}", c.len());
    }
    Ok(bestshot_core::sampler::seeded_starts(c, count, seed))
}
