//! Phase-grid records, CSV output and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::labels::PhaseLabel;
use crate::svm::MulticlassModel;

use super::cache::write_atomic;
use super::config::{hex, ExperimentConfig, TestGrid};
use super::{CacheRecord, Classified};

#[derive(Clone, Debug, PartialEq)]
pub struct GridRecord {
    pub k: f64,
    pub h: f64,
    pub true_label: PhaseLabel,
    pub predicted_label: PhaseLabel,
    pub far_from_boundary: bool,
    /// One margin per pair model.
    pub margins: Vec<f64>,
    pub expectation: f64,
    pub variance: f64,
    pub shots_for_2sigma: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    pub model: Model,
    pub grid: TestGrid,
    /// `(positive class, negative class)` of each margin column.
    pub pairs: Vec<(usize, usize)>,
    pub records: Vec<GridRecord>,
}

impl PhaseGrid {
    pub fn new(
        model: Model,
        grid: TestGrid,
        classifier: &MulticlassModel,
        classified: &[Classified],
        truth: &[(PhaseLabel, bool)],
    ) -> Self {
        let records = classified
            .iter()
            .zip(truth)
            .map(|(c, &(true_label, far))| GridRecord {
                k: c.k,
                h: c.h,
                true_label,
                predicted_label: c.label,
                far_from_boundary: far,
                margins: c.prediction.margins.clone(),
                expectation: c.expectation,
                variance: c.variance,
                shots_for_2sigma: c.shots_for_2sigma,
            })
            .collect();
        Self {
            model,
            grid,
            pairs: classifier.pairs.iter().map(|p| p.classes()).collect(),
            records,
        }
    }

    /// Fraction of correct predictions among far-from-boundary points.
    pub fn far_accuracy(&self) -> f64 {
        let far: Vec<&GridRecord> = self.records.iter().filter(|r| r.far_from_boundary).collect();
        if far.is_empty() {
            return f64::NAN;
        }
        far.iter().filter(|r| r.true_label == r.predicted_label).count() as f64 / far.len() as f64
    }

    /// Share of the most frequent true label among far-from-boundary points.
    pub fn far_majority_share(&self) -> f64 {
        let far: Vec<&GridRecord> = self.records.iter().filter(|r| r.far_from_boundary).collect();
        let best = PhaseLabel::all(self.model)
            .iter()
            .map(|l| far.iter().filter(|r| r.true_label == *l).count())
            .max()
            .unwrap_or(0);
        best as f64 / far.len().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let name = |id: usize| {
            PhaseLabel::from_class_id(self.model, id)
                .map(|l| l.name().to_string())
                .unwrap_or_else(|_| id.to_string())
        };
        let mut out = String::from("k,h,true_label,predicted_label,far_from_boundary");
        for &(p, n) in &self.pairs {
            let _ = write!(out, ",margin_{}_{}", name(p), name(n));
        }
        out.push_str(",expectation,variance,shots_for_2sigma\n");
        for r in &self.records {
            let _ = write!(
                out,
                "{:?},{:?},{},{},{}",
                r.k,
                r.h,
                r.true_label.name(),
                r.predicted_label.name(),
                r.far_from_boundary
            );
            for m in &r.margins {
                let _ = write!(out, ",{m:.12e}");
            }
            let shots = r.shots_for_2sigma.map_or_else(String::new, |s| s.to_string());
            let _ = writeln!(out, ",{:.12e},{:.12e},{shots}", r.expectation, r.variance);
        }
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<(String, u64)>,
    pub version: String,
    pub timestamp: String,
    pub cache_dir: String,
    pub cache: Vec<CacheRecord>,
    pub unconverged: Vec<CacheRecord>,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, cache: &[CacheRecord]) -> Self {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            config_hash: config.hash(),
            config: config.clone(),
            seeds: vec![("sectors".into(), config.sectors.seed)],
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: format!("{now}"),
            cache_dir: config.cache_dir().display().to_string(),
            cache: cache.to_vec(),
            unconverged: cache.iter().filter(|r| !r.converged).cloned().collect(),
            outputs: Vec::new(),
        }
    }

    /// Write `bytes` under `dir` and record its checksum.
    pub fn write_output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(Error::from)?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
