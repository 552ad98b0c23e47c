//! JSON run configuration shared by all commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::MeshPolicy;
use crate::error::{Error, Result};
use crate::profile::WidthProfile;
use crate::schrodinger1d::TruncationPolicy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    #[serde(default)]
    pub half_length: Option<f64>,
    #[serde(default = "default_growth")]
    pub growth_factor: f64,
}

fn default_growth() -> f64 {
    10.0
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            half_length: None,
            growth_factor: default_growth(),
        }
    }
}

impl From<&TruncationConfig> for TruncationPolicy {
    fn from(t: &TruncationConfig) -> Self {
        TruncationPolicy {
            half_length: t.half_length,
            growth_factor: t.growth_factor,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketConfig {
    /// Remainder bound; fitted from the profile when absent.
    #[serde(rename = "K", default)]
    pub k_bound: Option<f64>,
    /// Half-length of the inner interval; half the shorter side when absent.
    #[serde(default)]
    pub eta_tilde: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: WidthProfile,
    /// Strictly decreasing eps values.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// 1-based eigenvalue indices.
    #[serde(default = "default_j")]
    pub j: Vec<usize>,
    #[serde(default)]
    pub mesh: MeshPolicy,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub bracket: BracketConfig,
    /// Grid size for profile validation.
    #[serde(default = "default_validation_points")]
    pub validation_points: usize,
    /// Output directory used when `--out` is not given.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_j() -> Vec<usize> {
    vec![1]
}

fn default_validation_points() -> usize {
    1000
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    /// Largest requested eigenvalue index.
    pub fn k(&self) -> usize {
        self.j.iter().copied().max().unwrap_or(1)
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.eps.iter().any(|e| !(*e > 0.0 && e.is_finite() && *e <= 1.0)) {
            return bad(format!("eps values must lie in (0, 1], got {:?}", self.eps));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return bad("eps values must be strictly decreasing".into());
        }
        if self.j.is_empty() || self.j.iter().any(|&j| j == 0 || j > 50) {
            return bad(format!("j values must lie in 1..=50, got {:?}", self.j));
        }
        if self.j.windows(2).any(|w| w[1] <= w[0]) {
            return bad("j values must be strictly increasing".into());
        }
        let m = &self.mesh;
        if !(1..=256).contains(&m.cells_per_scale) {
            return bad(format!("mesh.cells_per_scale must lie in 1..=256, got {}", m.cells_per_scale));
        }
        if !(2..=512).contains(&m.ns) {
            return bad(format!("mesh.ns must lie in 2..=512, got {}", m.ns));
        }
        if !(50..=1_000_000).contains(&m.h_points) {
            return bad(format!("mesh.h_points must lie in 50..=1000000, got {}", m.h_points));
        }
        if !(m.tol > 0.0 && m.tol < 1e-2) {
            return bad(format!("mesh.tol must lie in (0, 1e-2), got {}", m.tol));
        }
        if !(self.truncation.growth_factor > 1.0) {
            return bad("truncation.growth_factor must exceed 1".into());
        }
        if let Some(l) = self.truncation.half_length {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("truncation.half_length must be > 0, got {l}"));
            }
        }
        if let Some(k) = self.bracket.k_bound {
            if !(k >= 0.0 && k.is_finite()) {
                return bad(format!("bracket.K must be >= 0, got {k}"));
            }
        }
        if let Some(e) = self.bracket.eta_tilde {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("bracket.eta_tilde must be > 0, got {e}"));
            }
        }
        if self.validation_points < 10 {
            return bad("validation_points must be >= 10".into());
        }
        Ok(())
    }
}
