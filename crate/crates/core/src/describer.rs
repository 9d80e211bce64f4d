//! Turns categorized posecodes into sentences.
//!
//! Codes are first merged across left/right partners ("both arms are
//! straight"), then each statement is realized with a template whose variant
//! is picked by a seeded draw keyed on the statement's roster rank. The rank
//! of a statement equals the rank of its mirror image, so mirrored poses draw
//! the same variants.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{yaw_align, Pose, Skeleton};
use crate::posecode::{
    body_orientation_code, extract_with, BinConfig, CategorizedPosecode, PosecodeKind, Roster,
};

const ORIENTATION_SUBJECT: &str = "the person";
const ORIENTATION_RANK: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedStatement {
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    /// Template category used to realize the statement.
    pub category: String,
    pub label: String,
    pub plural: bool,
    pub codes: Vec<CategorizedPosecode>,
    /// Mirror-invariant ordering key, used for the variant draw.
    pub rank: u64,
}

impl AggregatedStatement {
    pub fn is_orientation(&self) -> bool {
        self.codes
            .first()
            .is_some_and(|c| c.kind == PosecodeKind::BodyOrientation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    Singular,
    Plural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Subject,
    Label,
    Object,
}

impl Slot {
    fn marker(self) -> &'static str {
        match self {
            Slot::Subject => "{subject}",
            Slot::Label => "{label}",
            Slot::Object => "{object}",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub category: String,
    pub arity: Arity,
    pub slots: Vec<Slot>,
    pub variants: Vec<String>,
}

impl Template {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::invalid(format!(
                "template `{}` has no variants",
                self.category
            )));
        }
        for v in &self.variants {
            for slot in [Slot::Subject, Slot::Label, Slot::Object] {
                let count = v.matches(slot.marker()).count();
                let want = usize::from(self.slots.contains(&slot));
                if count != want {
                    return Err(Error::invalid(format!(
                        "template `{}` variant {v:?}: {} appears {count} times, expected {want}",
                        self.category,
                        slot.marker()
                    )));
                }
            }
        }
        Ok(())
    }

    fn fill(&self, variant: usize, s: &AggregatedStatement) -> String {
        let mut text = self.variants[variant]
            .replace("{subject}", &s.subject)
            .replace("{label}", &s.label);
        if self.slots.contains(&Slot::Object) {
            text = text.replace("{object}", s.object.as_deref().unwrap_or("the body"));
        }
        capitalize(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub templates: Vec<Template>,
}

impl TemplateSet {
    pub fn from_json(s: &str) -> Result<Self> {
        let set: TemplateSet = serde_json::from_str(s)?;
        for t in &set.templates {
            t.validate()?;
        }
        Ok(set)
    }

    pub fn get(&self, category: &str, arity: Arity) -> Result<&Template> {
        self.templates
            .iter()
            .find(|t| t.category == category && t.arity == arity)
            .ok_or_else(|| {
                let a = match arity {
                    Arity::Singular => "singular",
                    Arity::Plural => "plural",
                };
                Error::MissingTemplate(format!("{category} ({a})"))
            })
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::from_json(crate::defaults::TEMPLATES_JSON)
            .expect("bundled templates are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderPolicy {
    #[default]
    FixedRoster,
    SeededShuffle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriberConfig {
    pub seed: u64,
    pub max_sentences: usize,
    pub skip_skippable: bool,
    pub order: OrderPolicy,
}

impl Default for DescriberConfig {
    fn default() -> Self {
        DescriberConfig {
            seed: 0,
            max_sentences: 12,
            skip_skippable: true,
            order: OrderPolicy::FixedRoster,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseDescription {
    pub sentences: Vec<String>,
    pub statements: Vec<AggregatedStatement>,
    pub config_version: String,
    pub seed: u64,
}

impl PoseDescription {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Everything [`describe`] reads besides the pose.
#[derive(Debug, Clone)]
pub struct DescriberAssets {
    pub skeleton: Skeleton,
    pub bins: BinConfig,
    pub roster: Roster,
    pub templates: TemplateSet,
}

impl DescriberAssets {
    /// The bundled SMPL-22 skeleton, bins, roster and templates.
    pub fn bundled() -> Self {
        let skeleton = Skeleton::smpl22();
        let bins = BinConfig::default();
        let roster = Roster::default_for(&skeleton, &bins).expect("bundled roster is valid");
        DescriberAssets {
            skeleton,
            bins,
            roster,
            templates: TemplateSet::default(),
        }
    }
}

/// Merges left/right partners with identical categories and drops
/// skippable statements when asked. Order follows the input codes.
pub fn aggregate(
    codes: &[CategorizedPosecode],
    roster: &Roster,
    bins: &BinConfig,
    skip_skippable: bool,
) -> Result<Vec<AggregatedStatement>> {
    let mut position_of_entry = std::collections::HashMap::new();
    for (i, c) in codes.iter().enumerate() {
        if let Some(e) = c.entry {
            position_of_entry.insert(e, i);
        }
    }
    let mut consumed = vec![false; codes.len()];
    let mut out = Vec::new();

    for (i, code) in codes.iter().enumerate() {
        if consumed[i] {
            continue;
        }
        consumed[i] = true;
        let category = bins.get(&code.bins)?.template().to_string();

        let statement = match code.entry {
            None => AggregatedStatement {
                subject: ORIENTATION_SUBJECT.to_string(),
                object: None,
                category,
                label: code.label.clone(),
                plural: false,
                codes: vec![code.clone()],
                rank: ORIENTATION_RANK,
            },
            Some(e) => {
                let entry = roster
                    .entries
                    .get(e)
                    .ok_or_else(|| Error::invalid(format!("code refers to roster entry {e}")))?;
                let partner_code = entry.partner.and_then(|p| {
                    position_of_entry
                        .get(&p)
                        .copied()
                        .filter(|&j| !consumed[j] && codes[j].label == code.label)
                        .map(|j| (p, j))
                });
                match partner_code {
                    Some((p, j)) => {
                        consumed[j] = true;
                        let partner = &roster.entries[p];
                        AggregatedStatement {
                            subject: entry
                                .both
                                .clone()
                                .or_else(|| partner.both.clone())
                                .unwrap_or_else(|| format!("both {}", entry.subject)),
                            object: entry.both_object.clone().or_else(|| entry.object.clone()),
                            category,
                            label: code.label.clone(),
                            plural: true,
                            codes: vec![code.clone(), codes[j].clone()],
                            rank: e.min(p) as u64,
                        }
                    }
                    None => AggregatedStatement {
                        subject: entry.subject.clone(),
                        object: entry.object.clone(),
                        category,
                        label: code.label.clone(),
                        plural: entry.plural,
                        codes: vec![code.clone()],
                        rank: e.min(entry.partner.unwrap_or(e)) as u64,
                    },
                }
            }
        };

        if skip_skippable && statement.codes.iter().all(|c| c.skippable) {
            continue;
        }
        out.push(statement);
    }
    Ok(out)
}

/// One sentence per statement, up to `max_sentences`.
pub fn realize(
    statements: &[AggregatedStatement],
    templates: &TemplateSet,
    config: &DescriberConfig,
) -> Result<PoseDescription> {
    if config.max_sentences == 0 {
        return Err(Error::invalid("max_sentences must be at least 1"));
    }
    for s in statements {
        templates.get(&s.category, arity(s))?;
    }

    let mut kept: Vec<AggregatedStatement> = statements
        .iter()
        .take(config.max_sentences)
        .cloned()
        .collect();
    if config.order == OrderPolicy::SeededShuffle {
        let fixed = kept.iter().take_while(|s| s.is_orientation()).count();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        kept[fixed..].shuffle(&mut rng);
    }

    let sentences = kept
        .iter()
        .map(|s| {
            let t = templates.get(&s.category, arity(s))?;
            Ok(t.fill(variant_index(config.seed, s.rank, t.variants.len()), s))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PoseDescription {
        sentences,
        statements: kept,
        config_version: String::new(),
        seed: config.seed,
    })
}

/// Full pipeline: orientation code, posecodes on the yaw-aligned pose,
/// aggregation and realization.
pub fn describe(
    pose: &Pose,
    assets: &DescriberAssets,
    config: &DescriberConfig,
) -> Result<PoseDescription> {
    let DescriberAssets {
        skeleton,
        bins,
        roster,
        templates,
    } = assets;
    pose.validate(skeleton)?;

    let mut codes = Vec::with_capacity(roster.len() + 1);
    let orientation = body_orientation_code(pose, skeleton, bins)?;
    if orientation.bin.is_some() {
        codes.push(orientation);
    }

    let aligned = yaw_align(pose, skeleton)?.pose;
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rng = (bins.jitter > 0.0).then_some(&mut jitter_rng);
    codes.extend(extract_with(&aligned, skeleton, bins, roster, rng)?);

    let statements = aggregate(&codes, roster, bins, config.skip_skippable)?;
    let mut description = realize(&statements, templates, config)?;
    description.config_version = bins.config_version.clone();
    Ok(description)
}

/// Exchanges the words "left" and "right" (keeping capitalization). The
/// "right" of "right angle" is not a side and stays.
pub fn swap_left_right(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(|c: char| c.is_alphanumeric() || c == '_') {
        out.push_str(&rest[..start]);
        rest = &rest[start..];
        let len = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        let (word, tail) = rest.split_at(len);
        let angle = tail.starts_with(" angle");
        let swapped = match word {
            "left" => "right",
            "right" if !angle => "left",
            "Left" => "Right",
            "Right" if !angle => "Left",
            w => w,
        };
        out.push_str(swapped);
        rest = tail;
    }
    out.push_str(rest);
    out
}

fn arity(s: &AggregatedStatement) -> Arity {
    if s.plural {
        Arity::Plural
    } else {
        Arity::Singular
    }
}

fn variant_index(seed: u64, rank: u64, n: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(rank)));
    rng.random_range(0..n)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
