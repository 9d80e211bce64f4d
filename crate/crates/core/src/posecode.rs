//! Geometric measurements on a pose and their discretization into posecodes.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{self, cross, dot, norm, sub, Pose, Skeleton};

const DEGENERATE_EPS: f64 = 1e-9;

/// Label used when the facing direction cannot be determined.
pub const ORIENTATION_INDETERMINATE: &str = "orientation indeterminate";

/// Bin set used for the global body orientation.
pub const ORIENTATION_BINS: &str = "orientation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Lateral,
    Vertical,
    Depth,
}

impl Axis {
    fn component(self) -> usize {
        match self {
            Axis::Lateral => 0,
            Axis::Vertical => 1,
            Axis::Depth => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PosecodeKind {
    /// Interior angle at `pivot` between the segments toward `a` and `b`.
    Angle {
        a: usize,
        pivot: usize,
        b: usize,
    },
    Distance {
        a: usize,
        b: usize,
    },
    /// Signed coordinate of `a` minus `b` along `axis`.
    RelativePosition {
        axis: Axis,
        a: usize,
        b: usize,
    },
    /// Elevation of the segment `from -> to` above the horizontal plane.
    PitchRoll {
        from: usize,
        to: usize,
    },
    /// Height of a joint above the lowest joint of the pose.
    GroundContact {
        joint: usize,
    },
    BodyOrientation,
}

impl PosecodeKind {
    pub fn family(&self) -> &'static str {
        match self {
            PosecodeKind::Angle { .. } => "angle",
            PosecodeKind::Distance { .. } => "distance",
            PosecodeKind::RelativePosition { .. } => "relative_position",
            PosecodeKind::PitchRoll { .. } => "pitch_roll",
            PosecodeKind::GroundContact { .. } => "ground_contact",
            PosecodeKind::BodyOrientation => "body_orientation",
        }
    }

    fn joints(&self) -> Vec<usize> {
        match *self {
            PosecodeKind::Angle { a, pivot, b } => vec![a, pivot, b],
            PosecodeKind::Distance { a, b } | PosecodeKind::RelativePosition { a, b, .. } => {
                vec![a, b]
            }
            PosecodeKind::PitchRoll { from, to } => vec![from, to],
            PosecodeKind::GroundContact { joint } => vec![joint],
            PosecodeKind::BodyOrientation => vec![],
        }
    }

    pub fn validate(&self, skeleton: &Skeleton) -> Result<()> {
        if let Some(j) = self.joints().into_iter().find(|&j| j >= skeleton.len()) {
            return Err(Error::invalid(format!("joint index {j} out of range")));
        }
        match *self {
            PosecodeKind::Angle { a, pivot, b } if a == pivot || a == b || pivot == b => Err(
                Error::invalid(format!("angle joints ({a}, {pivot}, {b}) must be distinct")),
            ),
            PosecodeKind::Distance { a, b }
            | PosecodeKind::RelativePosition { a, b, .. }
            | PosecodeKind::PitchRoll { from: a, to: b }
                if a == b =>
            {
                Err(Error::invalid(format!("joint {a} used twice")))
            }
            PosecodeKind::BodyOrientation if skeleton.facing_joints().is_none() => Err(
                Error::invalid("skeleton has no facing joints for body orientation"),
            ),
            _ => Ok(()),
        }
    }

    /// The same measurement with every joint replaced by its left/right
    /// counterpart.
    pub fn mirrored(&self, skeleton: &Skeleton) -> PosecodeKind {
        let m = |j: usize| skeleton.mirror_joint(j);
        match *self {
            PosecodeKind::Angle { a, pivot, b } => PosecodeKind::Angle {
                a: m(a),
                pivot: m(pivot),
                b: m(b),
            },
            PosecodeKind::Distance { a, b } => PosecodeKind::Distance { a: m(a), b: m(b) },
            PosecodeKind::RelativePosition { axis, a, b } => PosecodeKind::RelativePosition {
                axis,
                a: m(a),
                b: m(b),
            },
            PosecodeKind::PitchRoll { from, to } => PosecodeKind::PitchRoll {
                from: m(from),
                to: m(to),
            },
            PosecodeKind::GroundContact { joint } => {
                PosecodeKind::GroundContact { joint: m(joint) }
            }
            PosecodeKind::BodyOrientation => PosecodeKind::BodyOrientation,
        }
    }

    /// Whether mirroring the pose negates this kind's value.
    pub fn flips_under_mirror(&self) -> bool {
        matches!(
            self,
            PosecodeKind::RelativePosition {
                axis: Axis::Lateral,
                ..
            } | PosecodeKind::BodyOrientation
        )
    }

    /// Distance and angle are symmetric in their endpoints, so a mirrored
    /// kind may be the same measurement with the endpoints exchanged.
    fn canonical(&self) -> PosecodeKind {
        match *self {
            PosecodeKind::Distance { a, b } if a > b => PosecodeKind::Distance { a: b, b: a },
            PosecodeKind::Angle { a, pivot, b } if a > b => {
                PosecodeKind::Angle { a: b, pivot, b: a }
            }
            k => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub kind: PosecodeKind,
    pub value: f64,
}

pub fn measure(pose: &Pose, skeleton: &Skeleton, kind: PosecodeKind) -> Result<Measurement> {
    kind.validate(skeleton)?;
    if pose.len() != skeleton.len() {
        return Err(Error::LengthMismatch {
            what: "pose joints",
            expected: skeleton.len(),
            actual: pose.len(),
        });
    }
    let p = &pose.joints;
    let value = match kind {
        PosecodeKind::Angle { a, pivot, b } => {
            let u = sub(p[a], p[pivot]);
            let v = sub(p[b], p[pivot]);
            if norm(u) < DEGENERATE_EPS || norm(v) < DEGENERATE_EPS {
                return Err(Error::DegenerateAngle { a, pivot, b });
            }
            norm(cross(u, v)).atan2(dot(u, v))
        }
        PosecodeKind::Distance { a, b } => norm(sub(p[a], p[b])),
        PosecodeKind::RelativePosition { axis, a, b } => {
            let c = axis.component();
            p[a][c] - p[b][c]
        }
        PosecodeKind::PitchRoll { from, to } => {
            let d = sub(p[to], p[from]);
            let len = norm(d);
            if len < DEGENERATE_EPS {
                return Err(Error::invalid(format!(
                    "segment ({from}, {to}) has zero length"
                )));
            }
            (d[1] / len).clamp(-1.0, 1.0).asin()
        }
        PosecodeKind::GroundContact { joint } => {
            let lowest = p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
            p[joint][1] - lowest
        }
        PosecodeKind::BodyOrientation => kinematics::facing_yaw(pose, skeleton)
            .ok_or_else(|| Error::invalid("degenerate facing direction"))?,
    };
    Ok(Measurement { kind, value })
}

/// Ordered bin edges and labels for one family of measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BinSetFile", into = "BinSetFile")]
pub struct BinSet {
    edges: Vec<f64>,
    labels: Vec<String>,
    skippable: Vec<bool>,
    template: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeUnit {
    #[default]
    Native,
    Degrees,
}

#[derive(Serialize, Deserialize)]
struct BinSetFile {
    edges: Vec<f64>,
    #[serde(default)]
    unit: EdgeUnit,
    labels: Vec<String>,
    #[serde(default)]
    skippable: Vec<String>,
    template: String,
}

impl TryFrom<BinSetFile> for BinSet {
    type Error = Error;

    fn try_from(f: BinSetFile) -> Result<Self> {
        let edges = match f.unit {
            EdgeUnit::Native => f.edges,
            EdgeUnit::Degrees => f.edges.iter().map(|d| d.to_radians()).collect(),
        };
        for s in &f.skippable {
            if !f.labels.contains(s) {
                return Err(Error::invalid(format!(
                    "skippable label `{s}` is not a label"
                )));
            }
        }
        let skippable = f.labels.iter().map(|l| f.skippable.contains(l)).collect();
        BinSet::new(edges, f.labels, skippable, f.template)
    }
}

impl From<BinSet> for BinSetFile {
    fn from(b: BinSet) -> Self {
        let skippable = b
            .labels
            .iter()
            .zip(&b.skippable)
            .filter(|(_, s)| **s)
            .map(|(l, _)| l.clone())
            .collect();
        BinSetFile {
            edges: b.edges,
            unit: EdgeUnit::Native,
            labels: b.labels,
            skippable,
            template: b.template,
        }
    }
}

impl BinSet {
    pub fn new(
        edges: Vec<f64>,
        labels: Vec<String>,
        skippable: Vec<bool>,
        template: String,
    ) -> Result<Self> {
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("bin edges must be finite"));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("bin edges must be strictly increasing"));
        }
        if labels.len() != edges.len() + 1 {
            return Err(Error::LengthMismatch {
                what: "bin labels",
                expected: edges.len() + 1,
                actual: labels.len(),
            });
        }
        if skippable.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "skippable flags",
                expected: labels.len(),
                actual: skippable.len(),
            });
        }
        Ok(BinSet {
            edges,
            labels,
            skippable,
            template,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_skippable(&self, bin: usize) -> bool {
        self.skippable[bin]
    }

    /// Template category used to realize codes from this set.
    pub fn template(&self) -> &str {
        &self.template
    }

    /// Number of edges strictly below `value`. A value on an edge lands in
    /// the higher bin.
    pub fn bin_index(&self, value: f64) -> usize {
        self.edges.partition_point(|&e| e <= value)
    }

    fn bin_index_jittered<R: Rng>(&self, value: f64, amplitude: f64, rng: &mut R) -> usize {
        self.edges
            .iter()
            .filter(|&&e| e + rng.random_range(-amplitude..=amplitude) <= value)
            .count()
    }
}

/// All bin sets, keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinConfig {
    pub config_version: String,
    /// Half-width of the uniform perturbation applied to every edge when a
    /// jitter RNG is supplied. Zero keeps binning deterministic.
    #[serde(default)]
    pub jitter: f64,
    pub sets: BTreeMap<String, BinSet>,
}

impl BinConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: BinConfig = serde_json::from_str(s)?;
        if !(cfg.jitter >= 0.0 && cfg.jitter.is_finite()) {
            return Err(Error::invalid("jitter must be a non-negative number"));
        }
        Ok(cfg)
    }

    pub fn get(&self, name: &str) -> Result<&BinSet> {
        self.sets
            .get(name)
            .ok_or_else(|| Error::MissingBins(name.to_string()))
    }
}

impl Default for BinConfig {
    fn default() -> Self {
        BinConfig::from_json(crate::defaults::BINS_JSON).expect("bundled bins are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorizedPosecode {
    pub kind: PosecodeKind,
    pub bins: String,
    pub label: String,
    /// `None` only for an indeterminate body orientation.
    pub bin: Option<usize>,
    pub value: f64,
    pub skippable: bool,
    /// Roster position that produced this code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<usize>,
}

pub fn categorize(m: Measurement, bins_name: &str, bins: &BinSet) -> CategorizedPosecode {
    let bin = bins.bin_index(m.value);
    code_for_bin(m, bins_name, bins, bin)
}

/// Like [`categorize`] but perturbs each edge by up to `amplitude`.
pub fn categorize_jittered<R: Rng>(
    m: Measurement,
    bins_name: &str,
    bins: &BinSet,
    amplitude: f64,
    rng: &mut R,
) -> CategorizedPosecode {
    let bin = if amplitude > 0.0 {
        bins.bin_index_jittered(m.value, amplitude, rng)
    } else {
        bins.bin_index(m.value)
    };
    code_for_bin(m, bins_name, bins, bin)
}

fn code_for_bin(m: Measurement, bins_name: &str, bins: &BinSet, bin: usize) -> CategorizedPosecode {
    CategorizedPosecode {
        kind: m.kind,
        bins: bins_name.to_string(),
        label: bins.labels[bin].clone(),
        bin: Some(bin),
        value: m.value,
        skippable: bins.skippable[bin],
        entry: None,
    }
}

/// One measurement to extract, with the phrases used to talk about it.
#[derive(Debug, Clone, PartialEq)]
pub struct RosterEntry {
    pub id: String,
    pub kind: PosecodeKind,
    pub bins: String,
    pub subject: String,
    pub object: Option<String>,
    /// Subject is grammatically plural ("the hands").
    pub plural: bool,
    /// Subject used when this entry merges with its mirror partner.
    pub both: Option<String>,
    pub both_object: Option<String>,
    /// Roster position of the entry measuring the mirrored joints.
    pub partner: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roster {
    pub entries: Vec<RosterEntry>,
}

#[derive(Deserialize)]
struct RosterFile {
    entries: Vec<RosterEntryFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterEntryFile {
    id: String,
    kind: KindFile,
    bins: String,
    subject: String,
    #[serde(default)]
    object: Option<String>,
    #[serde(default)]
    plural: bool,
    #[serde(default)]
    both: Option<String>,
    #[serde(default)]
    both_object: Option<String>,
}

/// Kind as written in config files, with joints named.
#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum KindFile {
    Angle { joints: [String; 3] },
    Distance { joints: [String; 2] },
    RelativePosition { axis: Axis, joints: [String; 2] },
    PitchRoll { joints: [String; 2] },
    GroundContact { joint: String },
    BodyOrientation,
}

impl KindFile {
    fn resolve(&self, s: &Skeleton) -> Result<PosecodeKind> {
        let j = |n: &String| s.joint_index(n);
        let kind = match self {
            KindFile::Angle { joints: [a, p, b] } => PosecodeKind::Angle {
                a: j(a)?,
                pivot: j(p)?,
                b: j(b)?,
            },
            KindFile::Distance { joints: [a, b] } => PosecodeKind::Distance { a: j(a)?, b: j(b)? },
            KindFile::RelativePosition {
                axis,
                joints: [a, b],
            } => PosecodeKind::RelativePosition {
                axis: *axis,
                a: j(a)?,
                b: j(b)?,
            },
            KindFile::PitchRoll { joints: [a, b] } => PosecodeKind::PitchRoll {
                from: j(a)?,
                to: j(b)?,
            },
            KindFile::GroundContact { joint } => PosecodeKind::GroundContact { joint: j(joint)? },
            KindFile::BodyOrientation => PosecodeKind::BodyOrientation,
        };
        kind.validate(s)?;
        Ok(kind)
    }
}

impl Roster {
    pub fn empty() -> Self {
        Roster {
            entries: Vec::new(),
        }
    }

    /// Parses a roster file and resolves joint names against `skeleton`.
    /// Bin set names are checked against `bins`.
    pub fn from_json(s: &str, skeleton: &Skeleton, bins: &BinConfig) -> Result<Self> {
        let file: RosterFile = serde_json::from_str(s)?;
        let mut entries = Vec::with_capacity(file.entries.len());
        for (position, e) in file.entries.into_iter().enumerate() {
            let wrap = |cause: Error| Error::Roster {
                position,
                id: e.id.clone(),
                cause: Box::new(cause),
            };
            let kind = e.kind.resolve(skeleton).map_err(wrap)?;
            bins.get(&e.bins).map_err(wrap)?;
            if entries.iter().any(|x: &RosterEntry| x.id == e.id) {
                return Err(Error::DuplicateId(e.id));
            }
            entries.push(RosterEntry {
                id: e.id,
                kind,
                bins: e.bins,
                subject: e.subject,
                object: e.object,
                plural: e.plural,
                both: e.both,
                both_object: e.both_object,
                partner: None,
            });
        }
        let mut roster = Roster { entries };
        roster.link_partners(skeleton);
        Ok(roster)
    }

    pub fn default_for(skeleton: &Skeleton, bins: &BinConfig) -> Result<Self> {
        Roster::from_json(crate::defaults::ROSTER_JSON, skeleton, bins)
    }

    fn link_partners(&mut self, skeleton: &Skeleton) {
        let canon: Vec<PosecodeKind> = self.entries.iter().map(|e| e.kind.canonical()).collect();
        let partners: Vec<Option<usize>> = (0..self.entries.len())
            .map(|i| {
                let mirrored = self.entries[i].kind.mirrored(skeleton).canonical();
                if mirrored == canon[i] {
                    return None;
                }
                (0..canon.len())
                    .find(|&k| canon[k] == mirrored && self.entries[k].bins == self.entries[i].bins)
            })
            .collect();
        for (e, p) in self.entries.iter_mut().zip(partners) {
            e.partner = p;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Measures and categorizes every roster entry, in roster order.
pub fn extract_all(
    pose: &Pose,
    skeleton: &Skeleton,
    bins: &BinConfig,
    roster: &Roster,
) -> Result<Vec<CategorizedPosecode>> {
    extract_with(
        pose,
        skeleton,
        bins,
        roster,
        None::<&mut rand_chacha::ChaCha8Rng>,
    )
}

/// [`extract_all`] with edge jitter drawn from `rng` when the config's
/// jitter amplitude is positive.
pub fn extract_with<R: Rng>(
    pose: &Pose,
    skeleton: &Skeleton,
    bins: &BinConfig,
    roster: &Roster,
    mut rng: Option<&mut R>,
) -> Result<Vec<CategorizedPosecode>> {
    pose.validate(skeleton)?;
    roster
        .entries
        .iter()
        .enumerate()
        .map(|(position, e)| {
            let wrap = |cause: Error| Error::Roster {
                position,
                id: e.id.clone(),
                cause: Box::new(cause),
            };
            let m = measure(pose, skeleton, e.kind).map_err(wrap)?;
            let set = bins.get(&e.bins).map_err(wrap)?;
            let mut code = match rng.as_deref_mut() {
                Some(r) => categorize_jittered(m, &e.bins, set, bins.jitter, r),
                None => categorize(m, &e.bins, set),
            };
            code.entry = Some(position);
            Ok(code)
        })
        .collect()
}

/// Global yaw relative to the camera, binned into the orientation sectors.
pub fn body_orientation_code(
    pose: &Pose,
    skeleton: &Skeleton,
    bins: &BinConfig,
) -> Result<CategorizedPosecode> {
    pose.validate(skeleton)?;
    let set = bins.get(ORIENTATION_BINS)?;
    match kinematics::facing_yaw(pose, skeleton) {
        Some(yaw) => Ok(categorize(
            Measurement {
                kind: PosecodeKind::BodyOrientation,
                value: yaw,
            },
            ORIENTATION_BINS,
            set,
        )),
        None => Ok(CategorizedPosecode {
            kind: PosecodeKind::BodyOrientation,
            bins: ORIENTATION_BINS.to_string(),
            label: ORIENTATION_INDETERMINATE.to_string(),
            bin: None,
            value: f64::NAN,
            skippable: false,
            entry: None,
        }),
    }
}
