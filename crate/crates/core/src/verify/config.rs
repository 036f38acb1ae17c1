use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a seeded sweep. Every field has a default, so a config file
/// only needs the keys it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k: u32,
    pub s: u32,
    pub side_min: u64,
    pub side_max: u64,
    #[serde(rename = "N_max")]
    pub n_max: u64,
    pub instances: usize,
    pub seed: u64,
    /// Sampled frequencies per `X` in the arc checks.
    pub samples: usize,
    /// `X` grid of the arc checks, usually doubling.
    #[serde(rename = "X_grid")]
    pub x_grid: Vec<u64>,
    /// The `ε` of `N^ε` checks.
    pub eps: f64,
    /// Largest `Σ P_j^k + N` for which the full-circle identity is rechecked.
    pub circle_limit: u64,
    /// Overrides of the enumeration and convolution guards.
    pub tuple_guard: Option<u64>,
    pub conv_guard: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            k: 2,
            s: 5,
            side_min: 1,
            side_max: 20,
            n_max: 2000,
            instances: 1000,
            seed: 1,
            samples: 10_000,
            x_grid: (6..=12).map(|e| 1u64 << e).collect(),
            eps: 0.05,
            circle_limit: 100_000,
            tuple_guard: None,
            conv_guard: None,
            out: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!("k must be at least 2, got {}", self.k)));
        }
        if self.s < 2 {
            return Err(Error::invalid(format!("s must be at least 2, got {}", self.s)));
        }
        if self.side_min < 1 || self.side_min > self.side_max {
            return Err(Error::invalid(format!(
                "need 1 <= side_min <= side_max, got {}..{}",
                self.side_min, self.side_max
            )));
        }
        if self.n_max < self.s as u64 {
            return Err(Error::invalid("N_max must be at least s"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("eps must be positive"));
        }
        if self.x_grid.iter().any(|&x| x < 2) {
            return Err(Error::invalid("every X in X_grid must be at least 2"));
        }
        Ok(())
    }

    /// Exports the guard overrides to the environment read by [`Guards::current`].
    ///
    /// Call before spawning worker threads.
    ///
    /// [`Guards::current`]: crate::guards::Guards::current
    pub fn apply_guards(&self) {
        if let Some(g) = self.tuple_guard {
            std::env::set_var(crate::guards::TUPLE_GUARD_VAR, g.to_string());
        }
        if let Some(g) = self.conv_guard {
            std::env::set_var(crate::guards::CONV_GUARD_VAR, g.to_string());
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
