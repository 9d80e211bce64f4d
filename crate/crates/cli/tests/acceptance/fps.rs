use bestshot_core::kinematics::{mpjpe, yaw_align, Pose, Skeleton};
use bestshot_core::sampler::{fps_select, PoseCollection};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::posegen::random_pose;
use crate::{check, Outcome};

/// Recomputes every candidate's distance to every pick at each step.
fn oracle(ids: &[String], poses: &[Pose], n: usize, start: usize) -> Vec<String> {
    let mut picked = vec![start];
    while picked.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..poses.len()).filter(|c| !picked.contains(c)) {
            let d = picked
                .iter()
                .map(|&p| mpjpe(&poses[p], &poses[c]).unwrap())
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(b, bd)| d > bd || (d == bd && ids[c] < ids[b])) {
                best = Some((c, d));
            }
        }
        picked.push(best.unwrap().0);
    }
    picked.into_iter().map(|i| ids[i].clone()).collect()
}

fn collection(rng: &mut ChaCha8Rng, size: usize) -> PoseCollection {
    let s = Skeleton::smpl22();
    let frames = (0..size)
        .map(|i| (format!("f{i:04}"), random_pose(rng, &s)))
        .collect();
    PoseCollection::new(s, frames).unwrap()
}

pub fn run() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut largest = 0;
    for case in 0..100 {
        let size = rng.random_range(2..=200);
        largest = largest.max(size);
        let c = collection(&mut rng, size);
        let n = rng.random_range(1..=size.min(25));
        let start = rng.random_range(0..size);
        let ids: Vec<String> = c.frames().iter().map(|(id, _)| id.clone()).collect();
        let aligned: Vec<Pose> = c
            .frames()
            .iter()
            .map(|(_, p)| yaw_align(p, c.skeleton()).unwrap().pose)
            .collect();
        let got = fps_select(&c, n, &ids[start]).map_err(|e| e.to_string())?;
        check(got == oracle(&ids, &aligned, n, start), || {
            format!("collection {case} (size {size}, n {n}) differs")
        })?;
    }

    let base = collection(&mut rng, 120);
    let reference = fps_select(&base, 15, "f0000").map_err(|e| e.to_string())?;
    for copy in 0..20 {
        let turned: Vec<(String, Pose)> = base
            .frames()
            .iter()
            .map(|(id, p)| {
                (
                    id.clone(),
                    p.yaw_rotated(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)),
                )
            })
            .collect();
        let turned = PoseCollection::new(Skeleton::smpl22(), turned).map_err(|e| e.to_string())?;
        let got = fps_select(&turned, 15, "f0000").map_err(|e| e.to_string())?;
        check(got == reference, || {
            format!("rotated copy {copy} picked differently")
        })?;
    }
    Ok(format!("100 collections up to {largest} poses match the exhaustive oracle; 20 rotated copies agree"))
}
