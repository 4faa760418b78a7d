//! Run configuration: a single JSON document, with every numeric default
//! overridable.

use std::path::{Path, PathBuf};

use dirac_core::bc::BoundaryCondition;
use dirac_core::potential::{generate_potential, FourierPotential, PotentialFamily, Weight};
use dirac_core::riesz::DEFAULT_GAMMA_FLOOR_REL;
use dirac_core::spectral::SpectralConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    /// {"K": .., "p": [[k, re, im], ..], "q": [..]}
    Inline(FourierPotential),
    Generator(PotentialFamily),
    /// Coefficient file in the inline format, relative to the config file.
    File(PathBuf),
}

fn per_plus() -> BoundaryCondition {
    BoundaryCondition::PerPlus
}

fn default_k() -> usize {
    64
}

fn default_tol() -> f64 {
    SpectralConfig::default().tol
}

fn default_nodes() -> usize {
    SpectralConfig::default().contour_nodes
}

fn default_gamma_floor() -> f64 {
    DEFAULT_GAMMA_FLOOR_REL
}

fn default_weights() -> Vec<Weight> {
    [1.0, 2.0].iter().map(|&m| Weight::polynomial(m).expect("valid weight")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    #[serde(default = "per_plus")]
    pub bc: BoundaryCondition,
    pub n_range: (i64, i64),
    #[serde(rename = "K", default = "default_k")]
    pub k_cut: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_nodes")]
    pub contour_nodes: usize,
    #[serde(default)]
    pub ode_steps: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Regime threshold of the inequality suite.
    #[serde(rename = "M", default)]
    pub m: Option<f64>,
    /// Relative floor below which γ_n counts as zero.
    #[serde(default = "default_gamma_floor")]
    pub gamma_floor: f64,
    #[serde(default = "default_weights")]
    pub weights: Vec<Weight>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let PotentialSpec::File(p) = &mut cfg.potential {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn trust_window(&self) -> i64 {
        (self.k_cut - self.k_cut / 4) as i64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let (lo, hi) = self.n_range;
        if lo > hi {
            return bad(format!("n_range [{lo}, {hi}] is empty"));
        }
        if self.k_cut == 0 {
            return bad("K must be positive".into());
        }
        let w = self.trust_window();
        if lo.abs().max(hi.abs()) > w {
            return bad(format!(
                "n_range [{lo}, {hi}] leaves the trust window |n| ≤ K − K/4 = {w} for K = {}",
                self.k_cut
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.gamma_floor > 0.0 && self.gamma_floor.is_finite()) {
            return bad(format!("gamma_floor must be positive, got {}", self.gamma_floor));
        }
        if self.contour_nodes < 16 {
            return bad(format!("contour_nodes must be at least 16, got {}", self.contour_nodes));
        }
        if self.ode_steps == Some(0) {
            return bad("ode_steps must be positive".into());
        }
        if let Some(m) = self.m {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("M must be positive, got {m}"));
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<FourierPotential, ConfigError> {
        let v = match &self.potential {
            PotentialSpec::Inline(v) => v.clone(),
            PotentialSpec::Generator(f) => generate_potential(f).map_err(|e| ConfigError::Invalid(e.to_string()))?,
            PotentialSpec::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.clone(),
                    source,
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| ConfigError::Parse(format!("potential file {}: {e}", p.display())))?
            }
        };
        if v.order() > self.k_cut {
            return Err(ConfigError::Invalid(format!(
                "potential order {} exceeds K = {}",
                v.order(),
                self.k_cut
            )));
        }
        Ok(v)
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            k_cut: self.k_cut,
            tol: self.tol,
            contour_nodes: self.contour_nodes,
            ode_steps: self.ode_steps,
            ..SpectralConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(r#"{"potential": {"inline": {"K": 0, "p": [], "q": []}}, "n_range": [-3, 3]}"#)
            .unwrap();
        assert_eq!(c.k_cut, 64);
        assert_eq!(c.bc, BoundaryCondition::PerPlus);
        assert_eq!(c.weights.len(), 2);
        c.validate().unwrap();
    }

    #[test]
    fn generator_and_bc() {
        let c = RunConfig::from_json(
            r#"{"potential": {"generator": {"family": "analytic", "r": 0.5, "order": 30}},
                "bc": {"kind": "general", "a_re": 1, "d_re": 1}, "n_range": [10, 40]}"#,
        )
        .unwrap();
        assert!(c.bc.general().is_some());
        let v = c.potential().unwrap();
        assert!((v.p(3).re - 0.125).abs() < 1e-15);
    }

    #[test]
    fn trust_window_enforced() {
        let c = RunConfig::from_json(r#"{"potential": {"inline": {"K": 0, "p": [], "q": []}}, "n_range": [0, 49]}"#)
            .unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("trust window") && e.contains("48"), "{e}");
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"potential": {"inline": {"K": 0, "p": [], "q": []}}, "n_range": [0, 4], "tol": 0}"#,
            r#"{"potential": {"inline": {"K": 0, "p": [], "q": []}}, "n_range": [4, 0]}"#,
            r#"{"potential": {"inline": {"K": 0, "p": [], "q": []}}, "n_range": [0, 4], "gamma_floor": -1}"#,
        ] {
            assert!(RunConfig::from_json(text).unwrap().validate().is_err());
        }
        assert!(RunConfig::from_json(r#"{"potential": {"inline": {"K": 0, "p": [], "q": []}}, "n_range": [0, 4], "bogus": 1}"#).is_err());
        let bad_bc = r#"{"potential": {"inline": {"K": 0, "p": [], "q": []}}, "n_range": [0, 4],
            "bc": {"kind": "general", "a_re": 1, "b_re": 0.5, "c_re": 0.5, "d_re": 1}}"#;
        assert!(RunConfig::from_json(bad_bc).is_err());
    }

    #[test]
    fn order_above_k_rejected() {
        let c = RunConfig::from_json(
            r#"{"potential": {"generator": {"family": "sobolev", "m": 2, "order": 40}}, "K": 32, "n_range": [0, 4]}"#,
        )
        .unwrap();
        assert!(c.potential().is_err());
    }
}
