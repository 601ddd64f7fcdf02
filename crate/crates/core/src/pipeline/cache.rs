//! Content-addressed cache of solved ground spaces.
//!
//! One bundle per parameter point: magic `QPBUNDL1`, `u32` header length, a
//! JSON header, the MPS records in the format of [`crate::mps::io`], and the
//! magic again as a trailer. Files are written to a temporary name and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::Model;
use crate::mps::io::{read_mps, write_mps};
use crate::mps::{GroundSolveResult, SectorState};

use super::config::hex;

const MAGIC: &[u8; 8] = b"QPBUNDL1";

/// Everything that determines the content of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveKey {
    pub model: Model,
    pub n_sites: usize,
    pub chi: usize,
    pub k: f64,
    pub h: f64,
    pub states_per_point: usize,
    pub seed: u64,
    pub energy_tol: f64,
}

impl SolveKey {
    pub fn hash(&self) -> String {
        let text = format!(
            "qphase-solve-v1|{}|{}|{}|{:016x}|{:016x}|{}|{}|{:016x}",
            self.model,
            self.n_sites,
            self.chi,
            self.k.to_bits(),
            self.h.to_bits(),
            self.states_per_point,
            self.seed,
            self.energy_tol.to_bits()
        );
        hex(&Sha256::digest(text.as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct StateHeader {
    energy: f64,
    sectors: Vec<f64>,
    determinate: bool,
}

#[derive(Serialize, Deserialize)]
struct BundleHeader {
    key: SolveKey,
    converged: bool,
    sweep_count: usize,
    seeds: Vec<u64>,
    states: Vec<StateHeader>,
}

pub fn encode_bundle(key: &SolveKey, solve: &GroundSolveResult) -> Vec<u8> {
    let header = BundleHeader {
        key: key.clone(),
        converged: solve.converged,
        sweep_count: solve.sweep_count,
        seeds: solve.seeds.clone(),
        states: solve
            .states
            .iter()
            .map(|s| StateHeader {
                energy: s.energy,
                sectors: s.sectors.clone(),
                determinate: s.determinate,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("bundle header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for s in &solve.states {
        write_mps(&mut out, &s.state).expect("writing to a Vec cannot fail");
    }
    out.extend_from_slice(MAGIC);
    out
}

pub fn decode_bundle(bytes: &[u8], expect: &SolveKey) -> Result<GroundSolveResult> {
    let bad = |r: &str| Error::format("cache bundle", r.to_string());
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let json = bytes.get(12..12 + len).ok_or_else(|| bad("truncated header"))?;
    let header: BundleHeader = serde_json::from_slice(json).map_err(|e| bad(&e.to_string()))?;
    if &header.key != expect {
        return Err(bad("key does not match the requested solve"));
    }
    let mut cursor = &bytes[12 + len..];
    let mut states = Vec::with_capacity(header.states.len());
    for h in header.states {
        let state = read_mps(&mut cursor)?;
        if state.n_sites() != expect.n_sites {
            return Err(bad("state size does not match the key"));
        }
        states.push(SectorState {
            state,
            energy: h.energy,
            sectors: h.sectors,
            determinate: h.determinate,
        });
    }
    if cursor != MAGIC {
        return Err(bad("missing trailer"));
    }
    Ok(GroundSolveResult {
        states,
        converged: header.converged,
        sweep_count: header.sweep_count,
        seeds: header.seeds,
    })
}

/// How a cache lookup was satisfied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheSource {
    Hit,
    Solved,
    /// The entry existed but failed validation and was solved again.
    Repaired,
}

#[derive(Debug)]
pub struct StateCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl StateCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &SolveKey) -> PathBuf {
        self.dir.join(format!("{}.mps", key.hash()))
    }

    /// `Ok(None)` when absent; `Err` when present but unreadable or invalid.
    pub fn load(&self, key: &SolveKey) -> Result<Option<GroundSolveResult>> {
        let path = self.path_for(key);
        match fs::read(&path) {
            Ok(bytes) => decode_bundle(&bytes, key).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn store(&self, key: &SolveKey, solve: &GroundSolveResult) -> Result<PathBuf> {
        let path = self.path_for(key);
        write_atomic(&path, &encode_bundle(key, solve))?;
        Ok(path)
    }

    /// Cached result, or `solve()` stored under `key`.
    pub fn get_or_solve(
        &self,
        key: &SolveKey,
        solve: impl FnOnce() -> Result<GroundSolveResult>,
    ) -> Result<(GroundSolveResult, CacheSource)> {
        let source = match self.load(key) {
            Ok(Some(found)) => return Ok((found, CacheSource::Hit)),
            Ok(None) => CacheSource::Solved,
            Err(Error::Io { .. }) | Err(Error::Format { .. }) => CacheSource::Repaired,
            Err(e) => return Err(e),
        };
        let result = solve()?;
        self.store(key, &result)?;
        Ok((result, source))
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::Mps;

    fn key(chi: usize) -> SolveKey {
        SolveKey {
            model: Model::Annni,
            n_sites: 5,
            chi,
            k: 0.25,
            h: 0.5,
            states_per_point: 2,
            seed: 9,
            energy_tol: 1e-10,
        }
    }

    fn fake_solve() -> GroundSolveResult {
        let s = |seed| SectorState {
            state: Mps::random(5, 3, seed).unwrap(),
            energy: -1.0 / 3.0 + seed as f64 * 1e-3,
            sectors: vec![if seed % 2 == 0 { 1.0 } else { -1.0 }],
            determinate: true,
        };
        GroundSolveResult {
            states: vec![s(0), s(1)],
            converged: true,
            sweep_count: 4,
            seeds: vec![9, 10],
        }
    }

    #[test]
    fn key_hash_tracks_chi() {
        assert_ne!(key(8).hash(), key(9).hash());
        assert_eq!(key(8).hash(), key(8).hash());
    }

    #[test]
    fn bundle_round_trip_is_exact() {
        let solve = fake_solve();
        let back = decode_bundle(&encode_bundle(&key(4), &solve), &key(4)).unwrap();
        assert_eq!(back.states.len(), 2);
        for (a, b) in back.states.iter().zip(&solve.states) {
            assert_eq!(a.state, b.state);
            assert_eq!(a.energy.to_bits(), b.energy.to_bits());
            assert_eq!(a.sectors, b.sectors);
        }
        assert!(decode_bundle(&encode_bundle(&key(4), &solve), &key(5)).is_err());
    }

    #[test]
    fn second_lookup_hits_and_truncation_is_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let cache = StateCache::open(dir.path()).unwrap();
        let mut calls = 0;
        let (_, src) = cache
            .get_or_solve(&key(4), || {
                calls += 1;
                Ok(fake_solve())
            })
            .unwrap();
        assert_eq!(src, CacheSource::Solved);
        let (_, src) = cache
            .get_or_solve(&key(4), || {
                calls += 1;
                Ok(fake_solve())
            })
            .unwrap();
        assert_eq!(src, CacheSource::Hit);
        assert_eq!(calls, 1);

        let path = cache.path_for(&key(4));
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 20]).unwrap();
        let (_, src) = cache.get_or_solve(&key(4), || Ok(fake_solve())).unwrap();
        assert_eq!(src, CacheSource::Repaired);
        assert_eq!(fs::read(&path).unwrap(), bytes);
    }
}
