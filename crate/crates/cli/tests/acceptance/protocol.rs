use bestshot_core::metrics::{Category, EvalReport};

use crate::common::{arg, bestshot_ok, protocol_fixture};
use crate::{check, Outcome};

pub fn run() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fx = protocol_fixture(dir.path());
    check(fx.expected_overall() == (24, 30), || {
        format!("fixture plants {:?}", fx.expected_overall())
    })?;
    for (c, _, total) in &fx.expected {
        check(*total == 10, || format!("{c:?} has {total} queries"))?;
    }
    let preds = dir.path().join("preds.jsonl");
    bestshot_ok(&[
        "infer",
        "best-frame",
        "--queries",
        arg(&fx.queries),
        "--frames-dir",
        arg(&fx.frames_dir),
        "--annotations",
        arg(&fx.annotations),
        "--out",
        arg(&preds),
    ]);
    let json = bestshot_ok(&[
        "eval",
        "bestshot",
        "--predictions",
        arg(&preds),
        "--annotations",
        arg(&fx.annotations),
        "--json",
    ]);
    let report: EvalReport = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let top1 = report.top1.ok_or("no top1 section")?;
    check(top1.overall.accuracy == 0.8, || {
        format!("overall {}", top1.overall.accuracy)
    })?;
    let mut parts = Vec::new();
    for (c, hits, total) in &fx.expected {
        let s = top1
            .per_category
            .get(c)
            .ok_or_else(|| format!("no {c:?} row"))?;
        check(s.hits == *hits && s.total == *total, || {
            format!("{c:?}: {}/{} vs {hits}/{total}", s.hits, s.total)
        })?;
        parts.push(format!("{} {}/{}", c.name(), s.hits, s.total));
    }
    // Pose rows plant hits at exactly +-4 and misses at +-5.
    check(
        fx.expected
            .iter()
            .any(|(c, h, _)| *c == Category::Pose && *h == 8),
        || "pose plants changed".into(),
    )?;
    Ok(format!("overall 0.8; {}", parts.join(", ")))
}
