//! Experiment configuration (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::labels::{model_domain, LayoutSpec, Region};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestGrid {
    pub region: Region,
    /// `(k points, h points)`, endpoints included.
    pub counts: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorPolicy {
    /// DMRG states solved per point before sector resolution.
    pub states_per_point: usize,
    /// Feed degenerate test points to the classifier as a random
    /// superposition of two sector states.
    #[serde(default)]
    pub random_superposition: bool,
    /// Energy window (absolute) within which states of different sectors
    /// are treated as one ground space.
    #[serde(default = "default_window")]
    pub degeneracy_window: f64,
    pub seed: u64,
}

fn default_window() -> f64 {
    crate::mps::DEGENERACY_EPS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub n_sites: usize,
    pub chi: usize,
    pub training: LayoutSpec,
    pub test_grid: TestGrid,
    #[serde(default = "default_c")]
    pub c: f64,
    pub sectors: SectorPolicy,
    /// Relative DMRG energy tolerance between sweeps.
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

fn default_c() -> f64 {
    1.0
}

fn default_energy_tol() -> f64 {
    1e-10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_sites < 3 {
            return bad(format!("n_sites = {} (need >= 3)", self.n_sites));
        }
        if self.chi < 2 {
            return bad(format!("chi = {} (need >= 2)", self.chi));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C = {} (need > 0)", self.c));
        }
        if self.sectors.states_per_point == 0 {
            return bad("sectors.states_per_point must be positive".into());
        }
        if !(self.sectors.degeneracy_window > 0.0) {
            return bad("sectors.degeneracy_window must be positive".into());
        }
        if !(self.energy_tol > 0.0) {
            return bad("energy_tol must be positive".into());
        }
        let domain = model_domain(self.model);
        let inside = |r: &Region| domain.contains(r.k.0, r.h.0) && domain.contains(r.k.1, r.h.1);
        if self.test_grid.region.validate().is_err() || !inside(&self.test_grid.region) {
            return bad(format!("test grid {:?} outside the {} domain {:?}", self.test_grid.region, self.model, domain));
        }
        if self.test_grid.counts.0 == 0 || self.test_grid.counts.1 == 0 {
            return bad("test grid needs at least one point per axis".into());
        }
        if let LayoutSpec::Grid { region, .. } = &self.training {
            if region.validate().is_err() || !inside(region) {
                return bad(format!("training region {region:?} outside the {} domain", self.model));
            }
        }
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.output_dir.join("cache"))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "model": "annni",
        "n_sites": 8,
        "chi": 16,
        "training": {"kind": "grid", "region": {"k": [0, 1], "h": [0, 2]}, "counts": [3, 2], "centered": true},
        "test_grid": {"region": {"k": [0, 1], "h": [0, 2]}, "counts": [3, 3]},
        "sectors": {"states_per_point": 2, "seed": 7}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(SMALL).unwrap();
        assert_eq!(cfg.c, 1.0);
        assert!(!cfg.sectors.random_superposition);
        assert_eq!(cfg.cache_dir(), PathBuf::from("out/cache"));
        assert_eq!(cfg.hash(), ExperimentConfig::from_json(SMALL).unwrap().hash());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_json(&SMALL.replace("\"chi\": 16", "\"chi\": 1")).is_err());
        assert!(ExperimentConfig::from_json(&SMALL.replace("\"n_sites\": 8", "\"n_sites\": 8, \"bogus\": 1")).is_err());
        assert!(ExperimentConfig::from_json(&SMALL.replace("\"h\": [0, 2]}, \"counts\": [3, 3]", "\"h\": [0, 3]}, \"counts\": [3, 3]")).is_err());
    }

    #[test]
    fn hash_tracks_chi() {
        let a = ExperimentConfig::from_json(SMALL).unwrap();
        let mut b = a.clone();
        b.chi = 17;
        assert_ne!(a.hash(), b.hash());
    }
}
