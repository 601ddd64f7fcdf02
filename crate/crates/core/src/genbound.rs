//! Generalization-bound estimate `B = Tr sqrt(K)` with
//! `K_jk = <psi_j|psi_k> / m` over sampled ground states, and its growth with
//! the chain length.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{build_mpo, model_symmetries, Model, ModelParams, SymmetryOp};
use crate::kernel::gram_overlap;
use crate::labels::Region;
use crate::mps::{sector_ground_state, DmrgOptions, Mps};
use crate::seed::derive_seed_tagged;

const CLIP: f64 = -1e-10;
const HARD_FLOOR: f64 = -1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundEstimate {
    pub b: f64,
    pub b_squared: f64,
    pub m: usize,
}

/// `m` i.i.d. uniform points of `region`.
pub fn sample_parameters(region: &Region, m: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    region.validate()?;
    if m == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    Ok((0..m)
        .map(|_| {
            let k = draw(region.k);
            let h = draw(region.h);
            (k, h)
        })
        .collect())
}

/// `sum_i sqrt(lambda_i)` over the spectrum of `K` (trace one). Eigenvalues
/// in `[-1e-8, 0)` are treated as zero; anything lower is an error.
/// Eigenvalues below the rounding floor `64 eps m` also count as zero, since
/// the square root would turn solver noise of order `1e-16` into `1e-8`.
pub fn bound_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let floor = 64.0 * f64::EPSILON * eigenvalues.len() as f64;
    let mut b = 0.0;
    for &l in eigenvalues {
        if l < HARD_FLOOR {
            return Err(Error::NegativeEigenvalue(l));
        }
        if l > CLIP && l > floor {
            b += l.sqrt();
        }
    }
    Ok(b)
}

pub fn bound_from_states(states: &[Mps]) -> Result<BoundEstimate> {
    if states.is_empty() {
        return Err(Error::InvalidParams("need at least one state".into()));
    }
    let k = gram_overlap(states)?;
    let b = bound_from_eigenvalues(&k.eigenvalues()?)?;
    let m = states.len();
    if b < 1.0 - 1e-8 || b > (m as f64).sqrt() + 1e-8 {
        return Err(Error::Numerical(format!("bound {b} outside [1, sqrt({m})]")));
    }
    Ok(BoundEstimate {
        b,
        b_squared: b * b,
        m,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub model: Model,
    pub n_sites: Vec<usize>,
    pub chi: usize,
    pub region: Region,
    pub m: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Largest accepted relative change of `B` when `m` is doubled.
    #[serde(default = "default_doubling_tol")]
    pub doubling_tol: f64,
    /// DMRG energy tolerance for the sampled solves.
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
}

fn default_doubling_tol() -> f64 {
    0.02
}

fn default_energy_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub n_sites: usize,
    pub sector: String,
    pub m: usize,
    pub repetitions: usize,
    pub b: f64,
    pub b_squared: f64,
    pub b_squared_std: f64,
    /// `B` over `2m` samples (the first `m` being repetition 0).
    pub b_doubled: f64,
    /// `|B(2m) - B(m)| / B(m)` for repetition 0.
    pub doubling_change: f64,
    /// Sampled points that stayed unconverged after one resample.
    pub flagged: usize,
}

/// `even`/`odd` for a single symmetry, sign characters otherwise.
pub fn sector_name(signs: &[f64]) -> String {
    match signs {
        [s] if *s > 0.0 => "even".into(),
        [_] => "odd".into(),
        _ => signs.iter().map(|&s| if s > 0.0 { '+' } else { '-' }).collect(),
    }
}

fn all_sectors(k: usize) -> Vec<Vec<f64>> {
    (0..1usize << k)
        .map(|mask| (0..k).map(|b| if (mask >> b) & 1 == 0 { 1.0 } else { -1.0 }).collect())
        .collect()
}

struct SampleSolve {
    /// one state per sector
    states: Vec<Mps>,
    flagged: bool,
}

fn solve_point(
    cfg: &StudyConfig,
    n: usize,
    syms: &[SymmetryOp],
    sectors: &[Vec<f64>],
    point: (f64, f64),
    resample_seed: u64,
    opts: &DmrgOptions,
) -> Result<SampleSolve> {
    let attempt = |(k, h): (f64, f64)| -> Result<(Vec<Mps>, bool)> {
        let mpo = build_mpo(&ModelParams {
            model: cfg.model,
            n_sites: n,
            k,
            h,
        })?;
        let mut states = Vec::with_capacity(sectors.len());
        let mut converged = true;
        for signs in sectors {
            let (st, res) = sector_ground_state(&mpo, syms, signs, cfg.chi, opts)?;
            converged &= res.converged;
            states.push(st.state);
        }
        Ok((states, converged))
    };
    let (states, ok) = attempt(point)?;
    if ok {
        return Ok(SampleSolve { states, flagged: false });
    }
    let retry = sample_parameters(&cfg.region, 1, resample_seed)?[0];
    let (states, ok) = attempt(retry)?;
    Ok(SampleSolve { states, flagged: !ok })
}

/// Per `(N, sector)` average of `B^2` over independent draws of `m` points,
/// plus the doubling diagnostic on the first draw.
///
/// Every draw uses the same parameter points for all `N`, so the size
/// dependence is not masked by sampling noise.
pub fn scaling_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    cfg.region.validate()?;
    if cfg.m == 0 || cfg.repetitions == 0 || cfg.chi < 2 {
        return Err(Error::InvalidParams("need m >= 1, repetitions >= 1 and chi >= 2".into()));
    }
    if let Some(&n) = cfg.n_sites.iter().find(|&&n| n < 3) {
        return Err(Error::InvalidParams(format!("chain length {n} below 3")));
    }
    let opts = DmrgOptions {
        energy_tol: cfg.energy_tol,
        ..DmrgOptions::default()
    }
    .with_seed(derive_seed_tagged(cfg.seed, "genbound-dmrg", 0));
    let mut draws: Vec<Vec<(f64, f64)>> = (0..cfg.repetitions)
        .map(|r| sample_parameters(&cfg.region, cfg.m, derive_seed_tagged(cfg.seed, "genbound-draw", r as u64)))
        .collect::<Result<_>>()?;
    let extra = sample_parameters(&cfg.region, cfg.m, derive_seed_tagged(cfg.seed, "genbound-extra", 0))?;
    draws.push(extra);

    let mut rows = Vec::new();
    for &n in &cfg.n_sites {
        let syms = model_symmetries(cfg.model, n)?;
        let sectors = all_sectors(syms.len());
        let jobs: Vec<(usize, usize)> = draws
            .iter()
            .enumerate()
            .flat_map(|(d, pts)| (0..pts.len()).map(move |i| (d, i)))
            .collect();
        let solved = jobs
            .par_iter()
            .map(|&(d, i)| {
                let reseed = derive_seed_tagged(cfg.seed, "genbound-resample", ((d as u64) << 32) | i as u64);
                solve_point(cfg, n, &syms, &sectors, draws[d][i], reseed, &opts)
            })
            .collect::<Result<Vec<_>>>()?;
        let flagged = solved.iter().filter(|s| s.flagged).count();
        let per_draw = |d: usize| &solved[d * cfg.m..(d + 1) * cfg.m];
        for (si, signs) in sectors.iter().enumerate() {
            let states_of = |d: usize| per_draw(d).iter().map(|s| s.states[si].clone()).collect::<Vec<_>>();
            let mut b2 = Vec::with_capacity(cfg.repetitions);
            let mut b_sum = 0.0;
            for d in 0..cfg.repetitions {
                let est = bound_from_states(&states_of(d))?;
                b2.push(est.b_squared);
                b_sum += est.b;
            }
            let first = bound_from_states(&states_of(0))?;
            let mut doubled_states = states_of(0);
            doubled_states.extend(states_of(cfg.repetitions));
            let doubled = bound_from_states(&doubled_states)?;
            let mean = b2.iter().sum::<f64>() / b2.len() as f64;
            let std = if b2.len() > 1 {
                (b2.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b2.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(StudyRow {
                n_sites: n,
                sector: sector_name(signs),
                m: cfg.m,
                repetitions: cfg.repetitions,
                b: b_sum / cfg.repetitions as f64,
                b_squared: mean,
                b_squared_std: std,
                b_doubled: doubled.b,
                doubling_change: (doubled.b - first.b).abs() / first.b,
                flagged,
            });
        }
    }
    Ok(rows)
}

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("N,sector,m,repetitions,B,B_squared,B_squared_std,B_doubled,doubling_change,flagged\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            r.n_sites, r.sector, r.m, r.repetitions, r.b, r.b_squared, r.b_squared_std, r.b_doubled, r.doubling_change, r.flagged
        );
    }
    out
}

/// Verdict on a finished study.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingVerdict {
    pub positive: bool,
    pub increasing: bool,
    /// Largest `B^2/N` over the sweep divided by its value at the smallest `N`.
    pub ratio_growth: f64,
    pub max_doubling_change: f64,
}

/// Per sector: `B^2 > 0`, strictly increasing in `N`; and the spread of
/// `B^2/N` across the sweep, measured against the smallest chain.
pub fn assess(rows: &[StudyRow]) -> ScalingVerdict {
    let mut sectors: Vec<&str> = rows.iter().map(|r| r.sector.as_str()).collect();
    sectors.sort_unstable();
    sectors.dedup();
    let mut positive = true;
    let mut increasing = true;
    let mut ratio_growth = 0.0f64;
    for s in sectors {
        let mut series: Vec<&StudyRow> = rows.iter().filter(|r| r.sector == s).collect();
        series.sort_by_key(|r| r.n_sites);
        positive &= series.iter().all(|r| r.b_squared > 0.0);
        increasing &= series.windows(2).all(|w| w[1].b_squared > w[0].b_squared);
        if let Some(first) = series.first() {
            let base = first.b_squared / first.n_sites as f64;
            for r in &series {
                ratio_growth = ratio_growth.max(r.b_squared / r.n_sites as f64 / base);
            }
        }
    }
    ScalingVerdict {
        positive,
        increasing,
        ratio_growth,
        max_doubling_change: rows.iter().map(|r| r.doubling_change).fold(0.0, f64::max),
    }
}
