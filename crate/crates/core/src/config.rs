//! Run configuration files: JSON with SI unit-suffixed keys.

use crate::error::{Error, Result};
use crate::light_shift::Manifold;
use crate::surface::SurfaceModel;
use crate::trap::{excited_manifold, ground_manifold, CharacterizeOptions, FiberConfig, ScanGrid, TrapConfiguration};
use crate::waveguide::BeamSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const VETSCH_PRESET: &str = include_str!("../presets/vetsch.config");
pub const MAGIC_PRESET: &str = include_str!("../presets/magic.config");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_manifolds() -> Vec<Manifold> {
    vec![ground_manifold(3.0), ground_manifold(4.0), excited_manifold(4.0)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub fiber: FiberConfig,
    pub beams: Vec<BeamSpec>,
    #[serde(default)]
    pub surface: SurfaceModel,
    #[serde(default)]
    pub delta_fb_hz: f64,
    /// Atom data file; the bundled cesium data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom_data: Option<PathBuf>,
    #[serde(default = "default_manifolds")]
    pub manifolds: Vec<Manifold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characterize: Option<CharacterizeOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl RunConfig {
    pub fn trap_configuration(&self) -> TrapConfiguration {
        TrapConfiguration {
            fiber: self.fiber,
            beams: self.beams.clone(),
            surface: self.surface,
            delta_fb: self.delta_fb_hz,
            manifolds: self.manifolds.clone(),
        }
    }

    pub fn from_trap(trap: &TrapConfiguration) -> Self {
        RunConfig {
            fiber: trap.fiber,
            beams: trap.beams.clone(),
            surface: trap.surface,
            delta_fb_hz: trap.delta_fb,
            atom_data: None,
            manifolds: trap.manifolds.clone(),
            scan: None,
            characterize: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trap_configuration().validate()?;
        if let Some(scan) = &self.scan {
            scan.validate()?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a configuration; a relative `atom_data` path is resolved against
/// the configuration file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let (Some(data), Some(dir)) = (&cfg.atom_data, path.parent()) {
        if data.is_relative() {
            cfg.atom_data = Some(dir.join(data));
        }
    }
    Ok(cfg)
}
