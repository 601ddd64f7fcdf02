//! End-to-end experiments: solve and cache ground states, build the training
//! set, train the one-vs-one classifier, and predict a test grid.

pub mod cache;
pub mod commands;
pub mod config;
pub mod report;
pub mod truth;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_mpo, model_symmetries, Model, ModelParams};
use crate::kernel::{overlap_row, sector_tag, Overlaps, PointMeta};
use crate::labels::{axis, make_layout, PhaseLabel, TrainingLayout};
use crate::mps::{lowest_sector_states, random_sector_superposition, DmrgOptions, GroundSolveResult, Mps, SectorState};
use crate::observable::{shots_for_2sigma, variance_from_overlaps};
use crate::seed::{derive_seed, derive_seed_tagged};
use crate::svm::{predict_multiclass, train_multiclass, MulticlassModel, Prediction};

pub use cache::{CacheSource, SolveKey, StateCache};
pub use config::{ExperimentConfig, SectorPolicy, TestGrid};
pub use report::{GridRecord, PhaseGrid};

pub fn model_params(model: Model, n_sites: usize, k: f64, h: f64) -> ModelParams {
    match model {
        Model::Annni => ModelParams::annni(n_sites, k, h),
        Model::Cluster => ModelParams::cluster(n_sites, k, h),
    }
}

/// A solved parameter point and where its states came from.
#[derive(Clone, Debug)]
pub struct PointSolve {
    pub k: f64,
    pub h: f64,
    pub hash: String,
    pub source: CacheSource,
    pub result: GroundSolveResult,
}

impl PointSolve {
    /// Lowest state plus every state of a different sector within `window`
    /// of it.
    pub fn quasi_ground(&self, window: f64) -> Vec<&SectorState> {
        let Some(first) = self.result.states.first() else {
            return Vec::new();
        };
        let mut out: Vec<&SectorState> = Vec::new();
        for s in &self.result.states {
            if s.energy - first.energy >= window {
                break;
            }
            if s.determinate && out.iter().any(|o| o.sectors == s.sectors) {
                continue;
            }
            out.push(s);
        }
        out
    }
}

/// One cache entry touched by a run, as listed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CacheRecord {
    pub role: String,
    pub k: f64,
    pub h: f64,
    pub hash: String,
    pub source: CacheSource,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub layout: TrainingLayout,
    pub states: Vec<Mps>,
    /// Class ids, see [`PhaseLabel::class_id`].
    pub labels: Vec<usize>,
    pub meta: Vec<PointMeta>,
    /// Layout point each state came from.
    pub point: Vec<usize>,
}

impl TrainingSet {
    /// States per layout point.
    pub fn rows_per_point(&self) -> Vec<usize> {
        let mut out = vec![0; self.layout.points.len()];
        for &p in &self.point {
            out[p] += 1;
        }
        out
    }
}

/// Trained classifier with the training overlaps it was built from.
#[derive(Clone, Debug)]
pub struct Trained {
    pub model: MulticlassModel,
    pub overlaps: Overlaps,
}

/// Classifier output at one point, plus the moments of the pair observable
/// that decided it.
#[derive(Clone, Debug)]
pub struct Classified {
    pub k: f64,
    pub h: f64,
    pub prediction: Prediction,
    pub label: PhaseLabel,
    /// Index into `model.pairs` of the deciding pair.
    pub deciding_pair: usize,
    pub expectation: f64,
    pub variance: f64,
    pub shots_for_2sigma: Option<u64>,
    pub superposed: bool,
}

pub struct Pipeline {
    pub config: ExperimentConfig,
    cache: StateCache,
    records: Vec<CacheRecord>,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let cache = StateCache::open(config.cache_dir())?;
        Ok(Self {
            config,
            cache,
            records: Vec::new(),
        })
    }

    pub fn cache(&self) -> &StateCache {
        &self.cache
    }

    pub fn records(&self) -> &[CacheRecord] {
        &self.records
    }

    pub fn unconverged(&self) -> Vec<&CacheRecord> {
        self.records.iter().filter(|r| !r.converged).collect()
    }

    pub fn solve_key(&self, k: f64, h: f64) -> SolveKey {
        let c = &self.config;
        SolveKey {
            model: c.model,
            n_sites: c.n_sites,
            chi: c.chi,
            k,
            h,
            states_per_point: c.sectors.states_per_point,
            seed: c.sectors.seed,
            energy_tol: c.energy_tol,
        }
    }

    fn solve_point(&self, k: f64, h: f64) -> Result<PointSolve> {
        let c = &self.config;
        let key = self.solve_key(k, h);
        let (result, source) = self.cache.get_or_solve(&key, || {
            let mpo = build_mpo(&model_params(c.model, c.n_sites, k, h))?;
            let syms = model_symmetries(c.model, c.n_sites)?;
            let point_seed = derive_seed(derive_seed_tagged(c.sectors.seed, "dmrg", k.to_bits()), h.to_bits());
            let opts = DmrgOptions {
                energy_tol: c.energy_tol,
                ..DmrgOptions::default().with_seed(point_seed)
            };
            lowest_sector_states(&mpo, &syms, c.sectors.states_per_point, c.chi, &opts)
        })?;
        Ok(PointSolve {
            k,
            h,
            hash: key.hash(),
            source,
            result,
        })
    }

    /// Solve (or load) every point; `role` tags the manifest entries.
    pub fn solve_points(&mut self, role: &str, points: &[(f64, f64)]) -> Result<Vec<PointSolve>> {
        let solved = points
            .par_iter()
            .map(|&(k, h)| self.solve_point(k, h))
            .collect::<Result<Vec<_>>>()?;
        for s in &solved {
            self.records.push(CacheRecord {
                role: role.to_string(),
                k: s.k,
                h: s.h,
                hash: s.hash.clone(),
                source: s.source,
                converged: s.result.converged,
            });
        }
        Ok(solved)
    }

    pub fn test_points(&self) -> Vec<(f64, f64)> {
        let g = &self.config.test_grid;
        let ks = axis(g.region.k.0, g.region.k.1, g.counts.0, false);
        let hs = axis(g.region.h.0, g.region.h.1, g.counts.1, false);
        ks.iter().flat_map(|&k| hs.iter().map(move |&h| (k, h))).collect()
    }

    /// Layout states with labels. At degenerate points every sector state
    /// enters with the point's label.
    pub fn training_set(&mut self) -> Result<TrainingSet> {
        let model = self.config.model;
        let layout = make_layout(model, &self.config.training)?;
        let pts: Vec<(f64, f64)> = layout.points.iter().map(|p| (p.k, p.h)).collect();
        let solved = self.solve_points("train", &pts)?;
        let window = self.config.sectors.degeneracy_window;
        let mut set = TrainingSet {
            layout,
            states: Vec::new(),
            labels: Vec::new(),
            meta: Vec::new(),
            point: Vec::new(),
        };
        for (i, s) in solved.iter().enumerate() {
            let label = set.layout.points[i].label;
            for st in s.quasi_ground(window) {
                set.states.push(st.state.clone());
                set.labels.push(label.class_id(model)?);
                set.meta.push(PointMeta {
                    k: s.k,
                    h: s.h,
                    sector: sector_tag(&st.sectors),
                    label: label.name().to_string(),
                });
                set.point.push(i);
            }
        }
        Ok(set)
    }

    pub fn train(&self, set: &TrainingSet) -> Result<Trained> {
        let overlaps = Overlaps::compute(&set.states)?;
        let mut classes = set.labels.clone();
        classes.sort_unstable();
        classes.dedup();
        let model = train_multiclass(&overlaps.fidelity(), &set.labels, &classes, self.config.c, &set.meta)?;
        Ok(Trained { model, overlaps })
    }

    /// State fed to the classifier at a solved point.
    pub fn test_state(&self, solved: &PointSolve, index: u64) -> Result<(Mps, bool)> {
        let policy = &self.config.sectors;
        let ground = solved.quasi_ground(policy.degeneracy_window);
        let first = ground
            .first()
            .ok_or_else(|| Error::Numerical(format!("no states at ({}, {})", solved.k, solved.h)))?;
        if policy.random_superposition && ground.len() >= 2 {
            let seed = derive_seed_tagged(policy.seed, "superpose", index);
            return Ok((random_sector_superposition(&first.state, &ground[1].state, seed)?, true));
        }
        Ok((first.state.clone(), false))
    }

    /// Classify one state.
    pub fn classify(&self, set: &TrainingSet, trained: &Trained, k: f64, h: f64, state: &Mps) -> Result<Classified> {
        let overlaps = overlap_row(state, &set.states)?;
        let row: Vec<f64> = overlaps.iter().map(|z| z.norm_sqr()).collect();
        let prediction = predict_multiclass(&trained.model, &row)?;
        let label = PhaseLabel::from_class_id(self.config.model, prediction.class)?;
        let deciding_pair = deciding_pair(&trained.model, &prediction);
        let pair = &trained.model.pairs[deciding_pair];
        let coeffs = pair.model.signed_coeffs();
        let sub_overlaps: Vec<_> = pair.indices.iter().map(|&i| overlaps[i]).collect();
        let expectation: f64 = pair.indices.iter().zip(&coeffs).map(|(&i, c)| c * row[i]).sum();
        let variance = variance_from_overlaps(&coeffs, &sub_overlaps, &trained.overlaps.submatrix(&pair.indices))?;
        let margin = prediction.margins[deciding_pair];
        Ok(Classified {
            k,
            h,
            label,
            deciding_pair,
            expectation,
            variance,
            shots_for_2sigma: shots_for_2sigma(variance, margin),
            prediction,
            superposed: false,
        })
    }

    /// Solve and classify arbitrary points; `role` tags the manifest entries.
    pub fn classify_points(
        &mut self,
        role: &str,
        points: &[(f64, f64)],
        set: &TrainingSet,
        trained: &Trained,
    ) -> Result<(Vec<Classified>, Vec<Mps>)> {
        let solved = self.solve_points(role, points)?;
        let mut out = Vec::with_capacity(solved.len());
        let mut states = Vec::with_capacity(solved.len());
        for (i, s) in solved.iter().enumerate() {
            let (state, superposed) = self.test_state(s, i as u64)?;
            let mut c = self.classify(set, trained, s.k, s.h, &state)?;
            c.superposed = superposed;
            out.push(c);
            states.push(state);
        }
        Ok((out, states))
    }

    pub fn predict(&mut self, set: &TrainingSet, trained: &Trained) -> Result<PhaseGrid> {
        let points = self.test_points();
        let (classified, states) = self.classify_points("test", &points, set, trained)?;
        let refs: Vec<&Mps> = states.iter().collect();
        let truth = truth::grid_truth(self.config.model, &points, self.config.test_grid.counts, &refs)?;
        Ok(PhaseGrid::new(
            self.config.model,
            self.config.test_grid.clone(),
            &trained.model,
            &classified,
            &truth,
        ))
    }

    /// Training, fitting and grid prediction in one go.
    pub fn run(&mut self) -> Result<RunOutput> {
        let training = self.training_set()?;
        let trained = self.train(&training)?;
        let grid = self.predict(&training, &trained)?;
        Ok(RunOutput {
            training,
            trained,
            grid,
        })
    }
}

pub struct RunOutput {
    pub training: TrainingSet,
    pub trained: Trained,
    pub grid: PhaseGrid,
}

/// Among the pair models involving the predicted class, the one with the
/// smallest |margin|.
pub fn deciding_pair(model: &MulticlassModel, prediction: &Prediction) -> usize {
    let mut best: Option<usize> = None;
    for (i, p) in model.pairs.iter().enumerate() {
        let (a, b) = p.classes();
        if a != prediction.class && b != prediction.class {
            continue;
        }
        if best.is_none_or(|j| prediction.margins[i].abs() < prediction.margins[j].abs()) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}
