use bestshot_core::mix::{mix_plan, MixSource, MixSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{check, Outcome};

const WEIGHTS: [(&str, usize); 3] = [("image-smpltext", 1), ("shotgpt4o", 5), ("general", 5)];

pub fn run() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let total = 10_000;
    for trial in 0..5 {
        let spec = MixSpec {
            sources: WEIGHTS
                .iter()
                .map(|(n, w)| MixSource {
                    name: n.to_string(),
                    weight: *w,
                })
                .collect(),
            total,
            seed: rng.random(),
        };
        let sizes: Vec<usize> = (0..3).map(|_| rng.random_range(1..3000)).collect();
        let plan = mix_plan(&spec, &sizes).map_err(|e| e.to_string())?;
        check(plan.len() == total, || {
            format!("trial {trial}: {} items", plan.len())
        })?;
        for (start, w) in plan.windows(11).enumerate() {
            let mut counts = [0; 3];
            w.iter().for_each(|d| counts[d.source] += 1);
            check(counts == [1, 5, 5], || {
                format!("trial {trial}: window at {start} has {counts:?}")
            })?;
        }
        check(plan.iter().all(|d| d.index < sizes[d.source]), || {
            "index out of range".into()
        })?;
    }
    Ok(format!(
        "5 fuzzed streams of {total} items; every 11-item window is 1:5:5"
    ))
}
