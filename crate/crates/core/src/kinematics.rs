//! Skeletons, forward kinematics, yaw alignment and MPJPE.
//!
//! Coordinates are right-handed in meters, +Y up and +Z toward the default
//! camera. On the shipped SMPL template the subject's left side is +X.

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Tolerance used to detect degenerate facing directions.
pub const FACING_EPS: f64 = 1e-6;

const MIRROR_TOL: f64 = 1e-6;

/// Joints used to derive the body facing direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacingJoints {
    pub left_hip: usize,
    pub right_hip: usize,
    pub spine: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkeletonFile", into = "SkeletonFile")]
pub struct Skeleton {
    joint_names: Vec<String>,
    parents: Vec<Option<usize>>,
    rest_offsets: Vec<Vec3>,
    left_right_pairs: Vec<(usize, usize)>,
    facing: Option<FacingJoints>,
    /// `mirror_of[j]` is the paired joint, or `j` for central joints.
    mirror_of: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SkeletonFile {
    joint_names: Vec<String>,
    parents: Vec<Option<usize>>,
    rest_offsets: Vec<Vec3>,
    #[serde(default)]
    left_right_pairs: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    facing_joints: Option<FacingJoints>,
}

impl TryFrom<SkeletonFile> for Skeleton {
    type Error = Error;

    fn try_from(f: SkeletonFile) -> Result<Self> {
        Skeleton::new(
            f.joint_names,
            f.parents,
            f.rest_offsets,
            f.left_right_pairs,
            f.facing_joints,
        )
    }
}

impl From<Skeleton> for SkeletonFile {
    fn from(s: Skeleton) -> Self {
        SkeletonFile {
            joint_names: s.joint_names,
            parents: s.parents,
            rest_offsets: s.rest_offsets,
            left_right_pairs: s.left_right_pairs,
            facing_joints: s.facing,
        }
    }
}

impl Skeleton {
    /// Builds and validates a skeleton. Joints must be stored in topological
    /// order (every parent index smaller than its child's). When `facing` is
    /// `None` the joints named `left_hip`, `right_hip` and `spine1` are used
    /// if present.
    pub fn new(
        joint_names: Vec<String>,
        parents: Vec<Option<usize>>,
        rest_offsets: Vec<Vec3>,
        left_right_pairs: Vec<(usize, usize)>,
        facing: Option<FacingJoints>,
    ) -> Result<Self> {
        let n = joint_names.len();
        if n == 0 {
            return Err(Error::invalid("skeleton has no joints"));
        }
        if parents.len() != n {
            return Err(Error::LengthMismatch {
                what: "skeleton parents",
                expected: n,
                actual: parents.len(),
            });
        }
        if rest_offsets.len() != n {
            return Err(Error::LengthMismatch {
                what: "skeleton rest offsets",
                expected: n,
                actual: rest_offsets.len(),
            });
        }
        if parents[0].is_some() {
            return Err(Error::invalid("joint 0 must be the root"));
        }
        for (j, p) in parents.iter().enumerate().skip(1) {
            match p {
                None => return Err(Error::invalid(format!("joint {j} has no parent"))),
                Some(p) if *p >= j => {
                    return Err(Error::invalid(format!(
                        "joint {j} has parent {p}; parents must precede children"
                    )))
                }
                _ => {}
            }
        }
        if rest_offsets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite rest offset"));
        }

        let mut mirror_of: Vec<usize> = (0..n).collect();
        for &(l, r) in &left_right_pairs {
            if l >= n || r >= n || l == r {
                return Err(Error::invalid(format!("bad left/right pair ({l}, {r})")));
            }
            if mirror_of[l] != l || mirror_of[r] != r {
                return Err(Error::invalid(format!(
                    "joint in pair ({l}, {r}) already belongs to another pair"
                )));
            }
            let (a, b) = (rest_offsets[l], rest_offsets[r]);
            if (a[0] + b[0]).abs() > MIRROR_TOL
                || (a[1] - b[1]).abs() > MIRROR_TOL
                || (a[2] - b[2]).abs() > MIRROR_TOL
            {
                return Err(Error::invalid(format!(
                    "rest offsets of pair ({l}, {r}) are not mirror images"
                )));
            }
            mirror_of[l] = r;
            mirror_of[r] = l;
        }

        let facing = match facing {
            Some(f) => {
                if [f.left_hip, f.right_hip, f.spine].iter().any(|&j| j >= n) {
                    return Err(Error::invalid("facing joint index out of range"));
                }
                Some(f)
            }
            None => {
                let find = |name: &str| joint_names.iter().position(|j| j == name);
                match (find("left_hip"), find("right_hip"), find("spine1")) {
                    (Some(left_hip), Some(right_hip), Some(spine)) => Some(FacingJoints {
                        left_hip,
                        right_hip,
                        spine,
                    }),
                    _ => None,
                }
            }
        };

        Ok(Skeleton {
            joint_names,
            parents,
            rest_offsets,
            left_right_pairs,
            facing,
            mirror_of,
        })
    }

    /// The shipped 22-joint SMPL body template.
    pub fn smpl22() -> Self {
        serde_json::from_str(crate::defaults::SKELETON_JSON).expect("bundled skeleton is valid")
    }

    /// A chain of joints, each offset from its parent. Handy for tests and
    /// small synthetic setups.
    pub fn chain(offsets: &[Vec3]) -> Result<Self> {
        let n = offsets.len();
        let names = (0..n).map(|i| format!("j{i}")).collect();
        let parents = (0..n).map(|i| i.checked_sub(1)).collect();
        Skeleton::new(names, parents, offsets.to_vec(), Vec::new(), None)
    }

    pub fn len(&self) -> usize {
        self.joint_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint_names.is_empty()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn rest_offsets(&self) -> &[Vec3] {
        &self.rest_offsets
    }

    pub fn left_right_pairs(&self) -> &[(usize, usize)] {
        &self.left_right_pairs
    }

    pub fn facing_joints(&self) -> Option<FacingJoints> {
        self.facing
    }

    pub fn joint_index(&self, name: &str) -> Result<usize> {
        self.joint_names
            .iter()
            .position(|j| j == name)
            .ok_or_else(|| Error::UnknownJoint(name.to_string()))
    }

    /// Paired joint of `j`, or `j` itself for central joints.
    pub fn mirror_joint(&self, j: usize) -> usize {
        self.mirror_of[j]
    }

    /// Pose obtained with all-zero rotations.
    pub fn rest_pose(&self) -> Pose {
        forward_kinematics(&RotationSet::zeros(self.len()), self).expect("sizes match")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose {
    pub joints: Vec<Vec3>,
}

impl Pose {
    pub fn new(joints: Vec<Vec3>) -> Result<Self> {
        let pose = Pose { joints };
        pose.check_finite()?;
        Ok(pose)
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(j) = self
            .joints
            .iter()
            .position(|p| p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::invalid(format!(
                "joint {j} has a non-finite coordinate"
            )));
        }
        Ok(())
    }

    /// Checks joint count and finiteness against a skeleton.
    pub fn validate(&self, skeleton: &Skeleton) -> Result<()> {
        if self.len() != skeleton.len() {
            return Err(Error::LengthMismatch {
                what: "pose joints",
                expected: skeleton.len(),
                actual: self.len(),
            });
        }
        self.check_finite()
    }

    pub fn translated(&self, t: Vec3) -> Pose {
        Pose {
            joints: self.joints.iter().map(|p| add(*p, t)).collect(),
        }
    }

    /// Rotates every joint about the vertical axis through the origin.
    pub fn yaw_rotated(&self, angle: f64) -> Pose {
        let (s, c) = angle.sin_cos();
        Pose {
            joints: self.joints.iter().map(|p| rotate_y(*p, s, c)).collect(),
        }
    }
}

/// Per-joint axis-angle rotations relative to the parent frame. Entry 0
/// carries the global orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RotationSet {
    pub rotations: Vec<Vec3>,
}

impl RotationSet {
    pub fn new(rotations: Vec<Vec3>) -> Result<Self> {
        for (j, r) in rotations.iter().enumerate() {
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("rotation {j} is not finite")));
            }
            if norm(*r) >= std::f64::consts::TAU {
                return Err(Error::invalid(format!(
                    "rotation {j} has magnitude >= 2*pi"
                )));
            }
        }
        Ok(RotationSet { rotations })
    }

    pub fn zeros(n: usize) -> Self {
        RotationSet {
            rotations: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

pub fn forward_kinematics(rotations: &RotationSet, skeleton: &Skeleton) -> Result<Pose> {
    let n = skeleton.len();
    if rotations.len() != n {
        return Err(Error::LengthMismatch {
            what: "rotation set",
            expected: n,
            actual: rotations.len(),
        });
    }

    let mut global: Vec<Rotation3<f64>> = Vec::with_capacity(n);
    let mut joints: Vec<Vec3> = Vec::with_capacity(n);
    for j in 0..n {
        let local = Rotation3::from_scaled_axis(Vector3::from(rotations.rotations[j]));
        let offset = Vector3::from(skeleton.rest_offsets[j]);
        match skeleton.parents[j] {
            None => {
                global.push(local);
                joints.push(skeleton.rest_offsets[j]);
            }
            Some(p) => {
                let pos = Vector3::from(joints[p]) + global[p] * offset;
                global.push(global[p] * local);
                joints.push([pos.x, pos.y, pos.z]);
            }
        }
    }
    Ok(Pose { joints })
}

/// Horizontal unit vector the body faces, or `None` when degenerate.
///
/// The facing normal is `(left_hip - right_hip) x (spine - mid_hip)`.
pub fn facing_direction(pose: &Pose, skeleton: &Skeleton) -> Option<Vec3> {
    let f = skeleton.facing?;
    let (lh, rh, spine) = (
        pose.joints[f.left_hip],
        pose.joints[f.right_hip],
        pose.joints[f.spine],
    );
    let across = sub(lh, rh);
    let mid = [
        (lh[0] + rh[0]) / 2.0,
        (lh[1] + rh[1]) / 2.0,
        (lh[2] + rh[2]) / 2.0,
    ];
    let up = sub(spine, mid);
    if norm(across) < FACING_EPS {
        return None;
    }
    let n = cross(across, up);
    let len = norm(n);
    if len < FACING_EPS {
        return None;
    }
    let (x, z) = (n[0] / len, n[2] / len);
    let horizontal = x.hypot(z);
    if horizontal < FACING_EPS {
        return None;
    }
    Some([x / horizontal, 0.0, z / horizontal])
}

/// Signed yaw of the facing direction relative to +Z, in `[-pi, pi)`.
/// Positive yaw turns +Z toward +X.
pub fn facing_yaw(pose: &Pose, skeleton: &Skeleton) -> Option<f64> {
    facing_direction(pose, skeleton).map(|f| wrap_angle(f[0].atan2(f[2])))
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub pose: Pose,
    /// Facing could not be determined; only the root translation was removed.
    pub degenerate: bool,
}

/// Moves the root to the origin and turns the body about +Y so it faces +Z.
pub fn yaw_align(pose: &Pose, skeleton: &Skeleton) -> Result<Aligned> {
    pose.validate(skeleton)?;
    let root = pose.joints[0];
    let centered = pose.translated([-root[0], -root[1], -root[2]]);
    match facing_yaw(&centered, skeleton) {
        Some(yaw) => Ok(Aligned {
            pose: centered.yaw_rotated(-yaw),
            degenerate: false,
        }),
        None => Ok(Aligned {
            pose: centered,
            degenerate: true,
        }),
    }
}

pub fn mpjpe(a: &Pose, b: &Pose) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "pose joints",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = a
        .joints
        .iter()
        .zip(&b.joints)
        .map(|(p, q)| norm(sub(*p, *q)))
        .sum();
    Ok(total / a.len() as f64)
}

/// MPJPE between the yaw-aligned versions of two poses.
pub fn aligned_mpjpe(a: &Pose, b: &Pose, skeleton: &Skeleton) -> Result<f64> {
    mpjpe(&yaw_align(a, skeleton)?.pose, &yaw_align(b, skeleton)?.pose)
}

/// Reflects a pose across the sagittal plane: X is negated, then paired
/// joints exchange positions.
pub fn mirror(pose: &Pose, skeleton: &Skeleton) -> Pose {
    let joints = (0..pose.len())
        .map(|j| {
            let p = pose.joints[skeleton.mirror_joint(j)];
            [-p[0], p[1], p[2]]
        })
        .collect();
    Pose { joints }
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn rotate_y(p: Vec3, s: f64, c: f64) -> Vec3 {
    [p[0] * c + p[2] * s, p[1], -p[0] * s + p[2] * c]
}
