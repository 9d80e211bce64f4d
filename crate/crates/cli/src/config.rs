use std::path::{Path, PathBuf};

use anyhow::Context;
use bestshot_core::describer::{DescriberAssets, DescriberConfig, TemplateSet};
use bestshot_core::kinematics::Skeleton;
use bestshot_core::posecode::{BinConfig, Roster};
use bestshot_core::pres3::{HttpConfig, MockConfig, PipelineConfig};
use bestshot_core::retrieval::SegmentationParams;
use serde::Deserialize;

/// Optional JSON config; every section falls back to library defaults.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub describer: DescriberConfig,
    pub assets: AssetPaths,
    pub pipeline: PipelineConfig,
    pub client: ClientConfig,
    pub segmentation: SegmentationParams,
    pub nms_radius: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            describer: DescriberConfig::default(),
            assets: AssetPaths::default(),
            pipeline: PipelineConfig::default(),
            client: ClientConfig::default(),
            segmentation: SegmentationParams::default(),
            nms_radius: 8,
        }
    }
}

/// Replacement data files for the describer; relative paths resolve
/// against the config file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssetPaths {
    pub skeleton: Option<PathBuf>,
    pub bins: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum ClientConfig {
    Mock(MockConfig),
    Http(HttpConfig),
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig::Mock(MockConfig::default())
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.assets.skeleton,
            &mut cfg.assets.bins,
            &mut cfg.assets.roster,
            &mut cfg.assets.templates,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl AssetPaths {
    pub fn load(&self) -> anyhow::Result<DescriberAssets> {
        let skeleton = match &self.skeleton {
            Some(p) => serde_json::from_str::<Skeleton>(&read(p)?)
                .with_context(|| format!("parsing skeleton {}", p.display()))?,
            None => Skeleton::smpl22(),
        };
        let bins = match &self.bins {
            Some(p) => BinConfig::from_json(&read(p)?)
                .with_context(|| format!("parsing bins {}", p.display()))?,
            None => BinConfig::default(),
        };
        let roster = match &self.roster {
            Some(p) => Roster::from_json(&read(p)?, &skeleton, &bins)
                .with_context(|| format!("parsing roster {}", p.display()))?,
            None => Roster::default_for(&skeleton, &bins)
                .context("bundled roster does not fit this skeleton")?,
        };
        let templates = match &self.templates {
            Some(p) => TemplateSet::from_json(&read(p)?)
                .with_context(|| format!("parsing templates {}", p.display()))?,
            None => TemplateSet::default(),
        };
        Ok(DescriberAssets {
            skeleton,
            bins,
            roster,
            templates,
        })
    }
}
