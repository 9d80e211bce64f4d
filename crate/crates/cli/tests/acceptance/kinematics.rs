use bestshot_core::kinematics::{aligned_mpjpe, forward_kinematics, RotationSet, Skeleton};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::posegen::{random_pose, random_rotations};
use crate::{check, Outcome};

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn close(a: [f64; 3], b: [f64; 3]) -> bool {
    dist(a, b) < 1e-9
}

fn analytic() -> Result<(), String> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let chain = Skeleton::chain(&[[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.25, 0.0, 0.0]])
        .map_err(|e| e.to_string())?;
    let fk = |r: Vec<[f64; 3]>| {
        forward_kinematics(&RotationSet::new(r).unwrap(), &chain)
            .unwrap()
            .joints
    };
    // elbow a quarter turn about +Y: the forearm swings from +X to -Z
    let j = fk(vec![[0.0; 3], [0.0, FRAC_PI_2, 0.0], [0.0; 3]]);
    check(close(j[2], [0.3, 0.0, -0.25]), || {
        format!("elbow 90: {:?}", j[2])
    })?;
    // shoulder a quarter turn about +Z lifts the whole arm to +Y
    let j = fk(vec![[0.0, 0.0, FRAC_PI_2], [0.0; 3], [0.0; 3]]);
    check(
        close(j[1], [0.0, 0.3, 0.0]) && close(j[2], [0.0, 0.55, 0.0]),
        || format!("shoulder 90: {j:?}"),
    )?;
    // half turn about +Z at the elbow folds the forearm back onto the upper arm
    let j = fk(vec![[0.0; 3], [0.0, 0.0, PI], [0.0; 3]]);
    check(close(j[2], [0.05, 0.0, 0.0]), || {
        format!("elbow 180: {:?}", j[2])
    })?;
    // rotations compose down the chain: +Z quarter turns at shoulder and elbow
    let j = fk(vec![[0.0, 0.0, FRAC_PI_2], [0.0, 0.0, FRAC_PI_2], [0.0; 3]]);
    check(close(j[2], [-0.25, 0.3, 0.0]), || {
        format!("composed: {:?}", j[2])
    })?;
    Ok(())
}

pub fn run() -> Outcome {
    let s = Skeleton::smpl22();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let rots = random_rotations(&mut rng, s.len(), std::f64::consts::PI);
        let pose = forward_kinematics(&rots, &s).map_err(|e| e.to_string())?;
        for (j, parent) in s.parents().iter().enumerate() {
            if let Some(p) = parent {
                let rest = dist(s.rest_offsets()[j], [0.0; 3]);
                let err = (dist(pose.joints[j], pose.joints[*p]) - rest).abs();
                worst = worst.max(err);
                check(err < 1e-9, || {
                    format!("rotation set {case} joint {j}: bone off by {err:e}")
                })?;
            }
        }
    }
    analytic()?;
    let mut worst_aligned: f64 = 0.0;
    for case in 0..200 {
        let pose = random_pose(&mut rng, &s);
        let turned =
            pose.yaw_rotated(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let e = aligned_mpjpe(&pose, &turned, &s).map_err(|e| e.to_string())?;
        worst_aligned = worst_aligned.max(e);
        check(e < 1e-6, || format!("pose {case}: aligned MPJPE {e:e}"))?;
    }
    Ok(format!(
        "1000 rotation sets, worst bone error {worst:.1e}; 4 analytic chains; 200 yaw copies, worst aligned MPJPE {worst_aligned:.1e}"
    ))
}
