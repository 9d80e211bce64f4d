#![allow(dead_code)]

use bestshot_core::kinematics::{forward_kinematics, Pose, RotationSet, Skeleton};
use rand::Rng;

/// Axis-angle vectors with uniformly random axes and angles up to `max_angle`.
pub fn random_rotations<R: Rng>(rng: &mut R, n: usize, max_angle: f64) -> RotationSet {
    let rots = (0..n)
        .map(|_| {
            let axis = loop {
                let v: [f64; 3] = [
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if n > 1e-3 && n <= 1.0 {
                    break [v[0] / n, v[1] / n, v[2] / n];
                }
            };
            let a = rng.random_range(0.0..max_angle);
            [axis[0] * a, axis[1] * a, axis[2] * a]
        })
        .collect();
    RotationSet::new(rots).unwrap()
}

/// Plausible-ish body: moderate joint rotations, any heading, random offset.
pub fn random_pose<R: Rng>(rng: &mut R, skeleton: &Skeleton) -> Pose {
    let rots = random_rotations(rng, skeleton.len(), 1.2);
    let pose = forward_kinematics(&rots, skeleton).unwrap();
    let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let shift = [
        rng.random_range(-2.0..2.0),
        rng.random_range(-0.5..0.5),
        rng.random_range(-2.0..2.0),
    ];
    pose.yaw_rotated(yaw).translated(shift)
}
