use bestshot_core::describer::{describe, swap_left_right, DescriberAssets, DescriberConfig};
use bestshot_core::io::{save_jsonl, PoseRecord};
use bestshot_core::kinematics::mirror;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::posegen::random_pose;
use crate::common::{arg, bestshot_ok};
use crate::{check, Outcome};

const GOLDEN: &str = include_str!("../../../core/tests/data/golden_descriptions.txt");

fn golden_lines(assets: &DescriberAssets) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let config = DescriberConfig {
        seed: 7,
        ..Default::default()
    };
    (0..20)
        .map(|i| {
            let pose = random_pose(&mut rng, &assets.skeleton);
            format!(
                "{i:02}\t{}\n",
                describe(&pose, assets, &config).unwrap().text()
            )
        })
        .collect()
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v
}

pub fn run() -> Outcome {
    let assets = DescriberAssets::bundled();
    check(golden_lines(&assets) == GOLDEN, || {
        "golden descriptions changed".into()
    })?;
    check(golden_lines(&assets) == GOLDEN, || {
        "second run differs".into()
    })?;

    // same poses through the CLI, twice
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let records: Vec<PoseRecord> = (0..20)
        .map(|i| PoseRecord {
            id: format!("g{i:02}"),
            dataset: "golden".into(),
            frame_index: i,
            joints: random_pose(&mut rng, &assets.skeleton).joints,
            rotations: None,
            description: None,
        })
        .collect();
    let poses = dir.path().join("golden.jsonl");
    save_jsonl(&poses, &records).map_err(|e| e.to_string())?;
    let a = bestshot_ok(&["describe", "--poses", arg(&poses), "--seed", "7"]);
    let b = bestshot_ok(&["describe", "--poses", arg(&poses), "--seed", "7"]);
    check(a == b && a.lines().count() == 20, || {
        "CLI runs differ".into()
    })?;

    let config = DescriberConfig {
        seed: 3,
        max_sentences: 1000,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..200 {
        let pose = random_pose(&mut rng, &assets.skeleton);
        let d = describe(&pose, &assets, &config).map_err(|e| e.to_string())?;
        let m = describe(&mirror(&pose, &assets.skeleton), &assets, &config)
            .map_err(|e| e.to_string())?;
        let expected = sorted(d.sentences.iter().map(|t| swap_left_right(t)).collect());
        check(sorted(m.sentences) == expected, || {
            format!("mirror violation on pose {case}")
        })?;
    }
    Ok("20 golden poses byte-identical (library and CLI); 200 mirrored poses, 0 violations".into())
}
