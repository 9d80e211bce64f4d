use std::io::BufRead;
use std::path::PathBuf;

use anyhow::Context;
use bestshot_core::io::MixRecord;
use bestshot_core::mix::{mix_plan, MixSource, MixSpec};
use clap::Args;
use serde::Deserialize;

use crate::output::Sink;

#[derive(Args)]
pub struct MixArgs {
    /// Mix spec: `{"sources": [{"name", "weight", "path"}], "total", "seed"}`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    sources: Vec<SourceFile>,
    total: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceFile {
    name: String,
    weight: usize,
    /// JSONL file; relative to the spec file.
    path: PathBuf,
}

fn read_records(path: &std::path::Path) -> anyhow::Result<Vec<serde_json::Value>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .with_context(|| format!("{}: line {}", path.display(), i + 1))?,
        );
    }
    Ok(out)
}

pub fn run(args: MixArgs, seed: Option<u64>) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let file: SpecFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let base = args.spec.parent().unwrap_or(std::path::Path::new("."));

    let spec = MixSpec {
        sources: file
            .sources
            .iter()
            .map(|s| MixSource {
                name: s.name.clone(),
                weight: s.weight,
            })
            .collect(),
        total: file.total,
        seed: seed.unwrap_or(file.seed),
    };
    spec.validate()?;
    let records: Vec<Vec<serde_json::Value>> = file
        .sources
        .iter()
        .map(|s| read_records(&base.join(&s.path)))
        .collect::<anyhow::Result<_>>()?;
    let sizes: Vec<usize> = records.iter().map(Vec::len).collect();

    let mut sink = Sink::open(args.out.as_deref())?;
    for d in mix_plan(&spec, &sizes)? {
        sink.record(&MixRecord {
            source: spec.sources[d.source].name.clone(),
            wrap: d.wrap,
            record: records[d.source][d.index].clone(),
        })?;
    }
    sink.finish()
}
