//! Run configuration and the manifest written next to every run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cover_core::scene::SceneSpec;
use cover_core::select::{Method, SelectConfig, DEFAULT_EMBODIED_K, DEFAULT_SEED_VIEWS};
use serde::{Deserialize, Serialize};

/// Bumped whenever a field changes meaning.
pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_ROUNDS: usize = 50;
pub const DEFAULT_REFINE_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneSource {
    Generate(SceneSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneSource,
    pub method: Method,
    pub rounds: usize,
    pub seed_count: usize,
    pub rng_seed: u64,
    pub embodied: bool,
    pub k: usize,
    pub refine: bool,
    pub refine_steps: usize,
    pub select: SelectConfig,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let SceneSource::Generate(spec) = &self.scene {
            spec.validate()?;
            if self.seed_count > spec.n_seed {
                bail!("seed_count {} exceeds the {} seed cameras of the scene", self.seed_count, spec.n_seed);
            }
            if !self.embodied && self.rounds > spec.n_candidates {
                bail!("{} rounds requested but the scene has {} candidates", self.rounds, spec.n_candidates);
            }
        }
        if self.embodied && self.k == 0 {
            bail!("k must be at least 1");
        }
        if self.refine && self.refine_steps == 0 {
            bail!("refine_steps must be at least 1 when refinement is enabled");
        }
        self.select.validate()?;
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneSource::Generate(SceneSpec::default()),
            method: Method::Cover,
            rounds: DEFAULT_ROUNDS,
            seed_count: DEFAULT_SEED_VIEWS,
            rng_seed: 0,
            embodied: false,
            k: DEFAULT_EMBODIED_K,
            refine: false,
            refine_steps: DEFAULT_REFINE_STEPS,
            select: SelectConfig::default(),
            output_dir: PathBuf::from("cover-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub checkpoint_version: u32,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(config: RunConfig) -> Self {
        Self {
            format_version: MANIFEST_VERSION,
            checkpoint_version: cover_core::checkpoint::FORMAT_VERSION,
            config,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if m.format_version != MANIFEST_VERSION {
            bail!("manifest version {} is not supported (expected {MANIFEST_VERSION})", m.format_version);
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
