//! Optional TOML file mirroring the library's tunables.

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;
use wingtap::analysis::{AssociationConfig, SeriesConfig};
use wingtap::attack::HijackConfig;
use wingtap::linkproto::LinkConfig;
use wingtap::wepcrypt::SearchBudget;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// Replaces the link settings of scripts and live targets when present.
    pub link: Option<LinkConfig>,
    pub series: SeriesConfig,
    pub association: AssociationConfig,
    pub hijack: HijackConfig,
    pub crack: SearchBudget,
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(AppConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: AppConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(link) = &cfg.link {
            link.validate()?;
        }
        Ok(cfg)
    }
}
