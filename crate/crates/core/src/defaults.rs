//! Configuration files bundled with the crate.

pub const SKELETON_JSON: &str = include_str!("../data/smpl22_skeleton.json");
pub const BINS_JSON: &str = include_str!("../data/bins.json");
pub const ROSTER_JSON: &str = include_str!("../data/roster.json");
pub const TEMPLATES_JSON: &str = include_str!("../data/templates.json");
pub const PROMPTS_JSON: &str = include_str!("../data/prompts.json");
