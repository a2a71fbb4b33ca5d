use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::construction::DEFAULT_EPSILON;
use crate::error::{Error, Result};
use crate::regions::Region;
use crate::spectrum::SpectrumConfig;

pub const DEFAULT_GRID: [u64; 4] = [100_000, 300_000, 1_000_000, 3_000_000];
pub const DEFAULT_SEEDS_PER_N: u64 = 3;
pub const SCALING_MEMORY_BUDGET: u64 = 2 << 30;

/// Experiment settings, read from TOML. Every field has a default and can
/// be overridden on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub epsilon: f64,
    pub seed: u64,
    pub scaling: ScalingConfig,
    pub memory: MemoryConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub grid: Vec<u64>,
    pub seeds_per_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryConfig {
    pub budget_bytes: u64,
    pub spill_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            scaling: ScalingConfig::default(),
            memory: MemoryConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID.to_vec(),
            seeds_per_n: DEFAULT_SEEDS_PER_N,
        }
    }
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            budget_bytes: SCALING_MEMORY_BUDGET,
            spill_dir: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn spectrum(&self) -> SpectrumConfig {
        SpectrumConfig {
            memory_budget: self.memory.budget_bytes,
            spill_dir: self.memory.spill_dir.clone(),
            ..SpectrumConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grid = &self.scaling.grid;
        if grid.len() < 4 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "scaling grid must hold >= 4 ascending values, got {grid:?}"
            )));
        }
        if self.scaling.seeds_per_n < 3 {
            return Err(Error::Config(format!(
                "need >= 3 seeds per n, got {}",
                self.scaling.seeds_per_n
            )));
        }
        if self.memory.budget_bytes == 0 {
            return Err(Error::Config("memory budget must be positive".into()));
        }
        Ok(())
    }
}

/// Accepts plain integers and float notation with an integral value,
/// such as `100000`, `1e5` or `3e6`.
pub fn parse_count(s: &str) -> Result<u64> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| Error::Config(format!("not a count: {s:?}")))?;
    if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(Error::Config(format!("not a non-negative integer: {s:?}")))
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<u64>> {
    s.split(',').map(|t| parse_count(t.trim())).collect()
}

/// `square`, `disk:R`, `rect:HALF_W,HALF_H`, `lobes:N`, or the tagged JSON
/// form of [`Region`].
pub fn parse_region(s: &str) -> Result<Region> {
    let s = s.trim();
    if s.starts_with('{') {
        let r: Region = serde_json::from_str(s).map_err(|e| Error::Config(format!("region JSON: {e}")))?;
        r.validate()?;
        return Ok(r);
    }
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> Result<Vec<f64>> {
        args.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number in region {s:?}")))
            })
            .collect()
    };
    match kind {
        "square" | "unit-square" => Ok(Region::unit_square()),
        "disk" => match nums()?[..] {
            [r] => Region::disk(r),
            _ => Err(Error::Config(format!("disk takes one radius: {s:?}"))),
        },
        "rect" => match nums()?[..] {
            [w, h] => Region::rectangle(w, h),
            _ => Err(Error::Config(format!("rect takes two half-sides: {s:?}"))),
        },
        "lobes" => Region::polar_lobes(parse_count(args)?),
        _ => Err(Error::Config(format!("unknown region {s:?}"))),
    }
}
