//! Two-site DMRG with an orthogonality penalty, and sector resolution of
//! (near-)degenerate ground spaces by symmetry projection.

use crate::error::{Error, Result};
use crate::hamiltonian::{Mpo, SymmetryOp};
use crate::linalg::{self, gemm, gemm_into, lanczos_lowest, truncated_svd, view, LanczosOptions, C64, ZERO};
use crate::seed::derive_seed;

use super::env::{extend_left, extend_right, Env, SparseSite};
use super::{CanonicalForm, Mps, SiteTensor, COMPRESS_CUTOFF};

/// Energy window (absolute) inside which states count as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-6;
/// Minimum retained weight for a projected component.
const MIN_SECTOR_WEIGHT: f64 = 0.005;

#[derive(Clone, Debug)]
pub struct DmrgOptions {
    pub max_sweeps: usize,
    pub min_sweeps: usize,
    /// Sweep-to-sweep convergence threshold relative to `max(1, |E|)`.
    pub energy_tol: f64,
    pub svd_cutoff: f64,
    pub seed: u64,
    pub lanczos: LanczosOptions,
    /// Orthogonality penalty weight; defaults to ten times the spectral-range estimate.
    pub penalty_weight: Option<f64>,
}

impl Default for DmrgOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 40,
            min_sweeps: 2,
            energy_tol: 1e-10,
            svd_cutoff: COMPRESS_CUTOFF,
            seed: 0x5eed,
            lanczos: LanczosOptions {
                krylov_dim: 24,
                tol: 1e-9,
                max_restarts: 3,
            },
            penalty_weight: None,
        }
    }
}

impl DmrgOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    pub state: Mps,
    /// `<psi|H|psi>` of the returned state (without the penalty).
    pub energy: f64,
    pub converged: bool,
    pub sweeps: usize,
    /// Lowest local eigenvalue at the end of each sweep (penalty included).
    pub sweep_energies: Vec<f64>,
    pub max_discarded: f64,
    pub seed: u64,
}

/// Combined two-site operator entries `(w_left, w_right, out_pair, in_pair, coeff)`.
struct PairOp {
    right: usize,
    entries: Vec<(usize, usize, usize, usize, C64)>,
}

impl PairOp {
    fn new(a: &SparseSite, b: &SparseSite) -> Self {
        let mut dense = vec![ZERO; a.left * 16 * b.right];
        for ea in &a.entries {
            for eb in b.entries.iter().filter(|e| e.wl == ea.wr) {
                let o = ea.out * 2 + eb.out;
                let i = ea.inp * 2 + eb.inp;
                dense[((ea.wl * 4 + o) * 4 + i) * b.right + eb.wr] += ea.coeff * eb.coeff;
            }
        }
        let mut entries = Vec::new();
        for wl in 0..a.left {
            for o in 0..4 {
                for i in 0..4 {
                    for wr in 0..b.right {
                        let c = dense[((wl * 4 + o) * 4 + i) * b.right + wr];
                        if c.norm() > 0.0 {
                            entries.push((wl, wr, o, i, c));
                        }
                    }
                }
            }
        }
        Self {
            right: b.right,
            entries,
        }
    }
}

fn merge(a: &SiteTensor, b: &SiteTensor) -> Vec<C64> {
    gemm(view(&a.data, a.left * 2, a.right), view(&b.data, b.left, 2 * b.right))
}

/// `H_eff theta` for the two-site block with environments `l` and `r`.
fn apply_two_site(l: &Env, op: &PairOp, r: &Env, theta: &[C64], out: &mut [C64]) {
    let dl = l.cols;
    let dr = r.rows;
    let x: Vec<Vec<C64>> = l.blocks.iter().map(|lb| gemm(view(lb, dl, dl), view(theta, dl, 4 * dr))).collect();
    let mut y = vec![vec![ZERO; dl * 4 * dr]; op.right];
    for &(wl, wr, o, i, c) in &op.entries {
        let src = &x[wl];
        let dst = &mut y[wr];
        for a in 0..dl {
            let s = &src[(a * 4 + i) * dr..(a * 4 + i + 1) * dr];
            let d = &mut dst[(a * 4 + o) * dr..(a * 4 + o + 1) * dr];
            for (p, q) in d.iter_mut().zip(s) {
                *p += c * q;
            }
        }
    }
    out.iter_mut().for_each(|v| *v = ZERO);
    for (w, yb) in y.iter().enumerate() {
        gemm_into(out, view(yb, dl * 4, dr), view(&r.blocks[w], dr, dr), true);
    }
}

/// Projection vector `u` with `<phi|psi> = <u|theta>` for the current block.
fn overlap_vector(l: &Env, phi_block: &[C64], r: &Env) -> Vec<C64> {
    // l: (phi_l x psi_l), r: (psi_r x phi_r)
    let (pl, sl) = (l.rows, l.cols);
    let (sr, pr) = (r.rows, r.cols);
    let mut t = vec![ZERO; sl * 4 * pr];
    gemm_into(&mut t, view(&l.blocks[0], pl, sl).adjoint(), view(phi_block, pl, 4 * pr), false);
    let mut u = vec![ZERO; sl * 4 * sr];
    gemm_into(&mut u, view(&t, sl * 4, pr), view(&r.blocks[0], sr, pr).adjoint(), false);
    u
}

struct Sweeper<'a> {
    n: usize,
    chi: usize,
    ops: Vec<SparseSite>,
    pairs: Vec<PairOp>,
    psi: Mps,
    lenv: Vec<Option<Env>>,
    renv: Vec<Option<Env>>,
    others: &'a [Mps],
    olenv: Vec<Vec<Option<Env>>>,
    orenv: Vec<Vec<Option<Env>>>,
    weight: f64,
    opts: &'a DmrgOptions,
    max_discarded: f64,
}

impl<'a> Sweeper<'a> {
    fn new(mpo: &Mpo, chi: usize, others: &'a [Mps], weight: f64, opts: &'a DmrgOptions) -> Result<Self> {
        let n = mpo.n_sites();
        let ops: Vec<SparseSite> = mpo.sites.iter().map(SparseSite::from_mpo).collect();
        let pairs = (0..n - 1).map(|j| PairOp::new(&ops[j], &ops[j + 1])).collect();
        let psi = Mps::random(n, chi, opts.seed)?;
        let mut s = Self {
            n,
            chi,
            ops,
            pairs,
            psi,
            lenv: vec![None; n + 1],
            renv: vec![None; n + 1],
            others,
            olenv: vec![vec![None; n + 1]; others.len()],
            orenv: vec![vec![None; n + 1]; others.len()],
            weight,
            opts,
            max_discarded: 0.0,
        };
        s.lenv[0] = Some(Env::trivial());
        s.renv[n] = Some(Env::trivial());
        for k in 0..others.len() {
            s.olenv[k][0] = Some(Env::trivial());
            s.orenv[k][n] = Some(Env::trivial());
        }
        for j in (2..n).rev() {
            s.update_right(j);
        }
        Ok(s)
    }

    /// Rebuild right environments from site `j` (absorbing sites `j..`).
    fn update_right(&mut self, j: usize) {
        let t = &self.psi.tensors[j];
        let prev = self.renv[j + 1].as_ref().expect("right environment");
        self.renv[j] = Some(extend_right(prev, t, &self.ops[j], t));
        let id = SparseSite::identity();
        for (k, phi) in self.others.iter().enumerate() {
            let prev = self.orenv[k][j + 1].as_ref().expect("overlap environment");
            self.orenv[k][j] = Some(extend_right(prev, &phi.tensors[j], &id, t));
        }
    }

    fn update_left(&mut self, j: usize) {
        let t = &self.psi.tensors[j];
        let prev = self.lenv[j].as_ref().expect("left environment");
        self.lenv[j + 1] = Some(extend_left(prev, t, &self.ops[j], t));
        let id = SparseSite::identity();
        for (k, phi) in self.others.iter().enumerate() {
            let prev = self.olenv[k][j].as_ref().expect("overlap environment");
            self.olenv[k][j + 1] = Some(extend_left(prev, &phi.tensors[j], &id, t));
        }
    }

    /// Optimize sites `(j, j+1)`; `right_moving` decides where the singular values go.
    fn step(&mut self, j: usize, right_moving: bool) -> Result<f64> {
        let l = self.lenv[j].as_ref().expect("left environment");
        let r = self.renv[j + 2].as_ref().expect("right environment");
        let (a, b) = (&self.psi.tensors[j], &self.psi.tensors[j + 1]);
        let (dl, dr) = (a.left, b.right);
        let theta = merge(a, b);
        let penalties: Vec<Vec<C64>> = self
            .others
            .iter()
            .enumerate()
            .map(|(k, phi)| {
                let block = merge(&phi.tensors[j], &phi.tensors[j + 1]);
                overlap_vector(
                    self.olenv[k][j].as_ref().expect("overlap environment"),
                    &block,
                    self.orenv[k][j + 2].as_ref().expect("overlap environment"),
                )
            })
            .collect();
        let op = &self.pairs[j];
        let w = self.weight;
        let ritz = lanczos_lowest(
            |x, y| {
                apply_two_site(l, op, r, x, y);
                for u in &penalties {
                    let c = linalg::dot(u, x) * w;
                    linalg::axpy(y, c, u);
                }
            },
            theta,
            &[],
            &self.opts.lanczos,
        );
        let svd = truncated_svd(&ritz.vector, dl * 2, 2 * dr, self.chi, self.opts.svd_cutoff)?;
        self.max_discarded = self.max_discarded.max(svd.discarded);
        let k = svd.rank;
        let snorm = svd.s.iter().map(|s| s * s).sum::<f64>().sqrt();
        let s: Vec<f64> = svd.s.iter().map(|x| x / snorm).collect();
        let (mut u, mut vh) = (svd.u, svd.vh);
        if right_moving {
            for row in 0..k {
                for x in &mut vh[row * 2 * dr..(row + 1) * 2 * dr] {
                    *x *= s[row];
                }
            }
        } else {
            for row in 0..dl * 2 {
                for (c, x) in u[row * k..(row + 1) * k].iter_mut().enumerate() {
                    *x *= s[c];
                }
            }
        }
        self.psi.tensors[j] = SiteTensor {
            left: dl,
            right: k,
            data: u,
        };
        self.psi.tensors[j + 1] = SiteTensor {
            left: k,
            right: dr,
            data: vh,
        };
        if right_moving {
            self.update_left(j);
        } else {
            self.update_right(j + 1);
        }
        Ok(ritz.value)
    }

    fn sweep(&mut self) -> Result<f64> {
        let mut e = f64::INFINITY;
        for j in 0..self.n - 1 {
            e = self.step(j, true)?;
        }
        for j in (0..self.n - 1).rev() {
            e = self.step(j, false)?;
        }
        Ok(e)
    }
}

fn check_inputs(mpo: &Mpo, chi: usize, orthogonal_to: &[Mps]) -> Result<()> {
    if chi < 2 {
        return Err(Error::InvalidParams(format!("bond dimension must be at least 2, got {chi}")));
    }
    if mpo.n_sites() < 2 {
        return Err(Error::InvalidParams("DMRG needs at least 2 sites".into()));
    }
    for phi in orthogonal_to {
        if phi.n_sites() != mpo.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: mpo.n_sites(),
                got: phi.n_sites(),
            });
        }
    }
    Ok(())
}

/// Penalty weight: ten times the spectral-range estimate `2 |H|`.
pub fn default_penalty(mpo: &Mpo) -> f64 {
    10.0 * 2.0 * mpo.norm_bound.max(1.0)
}

/// Variational ground state of `mpo`, optionally penalized against overlap
/// with `orthogonal_to`.
pub fn dmrg_ground_state(mpo: &Mpo, chi: usize, orthogonal_to: &[Mps], opts: &DmrgOptions) -> Result<DmrgResult> {
    check_inputs(mpo, chi, orthogonal_to)?;
    let weight = opts.penalty_weight.unwrap_or_else(|| default_penalty(mpo));
    let mut sw = Sweeper::new(mpo, chi, orthogonal_to, weight, opts)?;
    let mut history = Vec::new();
    let mut converged = false;
    for sweep in 0..opts.max_sweeps {
        let e = sw.sweep()?;
        if let Some(&prev) = history.last() {
            let de: f64 = e - prev;
            if sweep + 1 >= opts.min_sweeps && de.abs() < opts.energy_tol * e.abs().max(1.0) {
                history.push(e);
                converged = true;
                break;
            }
        }
        history.push(e);
    }
    let mut state = sw.psi;
    state.form = CanonicalForm::Mixed(0);
    state.max_bond = chi;
    state.normalize()?;
    let energy = state.expectation(mpo)?;
    Ok(DmrgResult {
        state,
        energy,
        converged,
        sweeps: history.len(),
        sweep_energies: history,
        max_discarded: sw.max_discarded,
        seed: opts.seed,
    })
}

#[derive(Clone, Debug)]
pub struct SectorState {
    pub state: Mps,
    pub energy: f64,
    /// One entry per symmetry: `+-1` when resolved, otherwise the raw expectation.
    pub sectors: Vec<f64>,
    /// False when projection failed and the state is an unresolved mixture.
    pub determinate: bool,
}

impl SectorState {
    pub fn sector_eigenvalue(&self) -> f64 {
        self.sectors.first().copied().unwrap_or(1.0)
    }
}

#[derive(Clone, Debug)]
pub struct GroundSolveResult {
    pub states: Vec<SectorState>,
    pub converged: bool,
    pub sweep_count: usize,
    pub seeds: Vec<u64>,
}

impl GroundSolveResult {
    /// States within the degeneracy window of the lowest energy.
    pub fn ground_space(&self) -> &[SectorState] {
        let Some(first) = self.states.first() else {
            return &self.states;
        };
        let n = self
            .states
            .iter()
            .take_while(|s| s.energy - first.energy < DEGENERACY_EPS)
            .count();
        &self.states[..n]
    }
}

fn symmetry_values(psi: &Mps, symmetries: &[SymmetryOp]) -> Result<Vec<f64>> {
    symmetries.iter().map(|s| psi.expectation(&s.mpo)).collect()
}

fn round_sector(v: f64) -> f64 {
    if v.abs() > 0.99 {
        v.signum()
    } else {
        v
    }
}

/// Project onto the joint sector `signs`, returning the normalized state and its weight.
fn project_joint(psi: &Mps, symmetries: &[SymmetryOp], signs: &[f64], chi: usize) -> Result<Option<(Mps, f64)>> {
    let mut cur = psi.clone();
    let mut weight = 1.0;
    for (sym, &s) in symmetries.iter().zip(signs) {
        match cur.project_sector(sym, s, chi)? {
            Some((m, w)) => {
                cur = m;
                weight *= w;
            }
            None => return Ok(None),
        }
    }
    Ok(Some((cur, weight)))
}

fn all_sign_patterns(k: usize) -> Vec<Vec<f64>> {
    (0..1usize << k)
        .map(|mask| (0..k).map(|b| if (mask >> b) & 1 == 0 { 1.0 } else { -1.0 }).collect())
        .collect()
}

/// Replace a cluster of (near-)degenerate states by symmetry-resolved ones.
///
/// Every sector component carrying at least [`MIN_SECTOR_WEIGHT`] (after
/// removing what earlier picks in the same sector already span) becomes a
/// state, so a single mixed solve of a degenerate point yields all its sector
/// states. Projection is applied even to states that already look pure, so
/// sector states are orthogonal to machine precision.
fn resolve_cluster(cluster: &[(Mps, f64)], mpo: &Mpo, symmetries: &[SymmetryOp], chi: usize) -> Result<Vec<SectorState>> {
    let values: Vec<Vec<f64>> = cluster.iter().map(|(m, _)| symmetry_values(m, symmetries)).collect::<Result<_>>()?;
    let patterns = all_sign_patterns(symmetries.len());
    let mut candidates: Vec<(usize, Mps, f64)> = Vec::new();
    for (m, _) in cluster {
        for (p, signs) in patterns.iter().enumerate() {
            if let Some((proj, w)) = project_joint(m, symmetries, signs, chi)? {
                candidates.push((p, proj, w));
            }
        }
    }

    let mut accepted: Vec<(usize, Mps)> = Vec::new();
    let mut used = vec![false; candidates.len()];
    while accepted.len() < candidates.len() {
        let mut best: Option<(usize, f64)> = None;
        for (ci, (p, cand, w)) in candidates.iter().enumerate() {
            if used[ci] {
                continue;
            }
            let mut leak = 0.0;
            for (ap, a) in &accepted {
                if ap == p {
                    leak += a.overlap(cand)?.norm_sqr();
                }
            }
            let eff = w * (1.0 - leak).max(0.0);
            if best.is_none_or(|(_, b)| eff > b) {
                best = Some((ci, eff));
            }
        }
        let Some((ci, eff)) = best else { break };
        if eff < MIN_SECTOR_WEIGHT {
            break;
        }
        used[ci] = true;
        let (p, cand, _) = &candidates[ci];
        let mut vec_state = cand.clone();
        for (ap, a) in &accepted {
            if ap == p {
                let c = a.overlap(&vec_state)?;
                vec_state = Mps::linear_combination(&vec_state, C64::new(1.0, 0.0), a, -c)?;
            }
        }
        let (clean, _) = vec_state.compress(chi, COMPRESS_CUTOFF)?;
        accepted.push((*p, clean));
    }

    let mut out = Vec::with_capacity(cluster.len());
    for (p, m) in accepted {
        let energy = m.expectation(mpo)?;
        out.push(SectorState {
            state: m,
            energy,
            sectors: patterns[p].clone(),
            determinate: true,
        });
    }
    // anything left unresolved is passed through and flagged
    for ((m, e), v) in cluster.iter().zip(values).skip(out.len()) {
        out.push(SectorState {
            state: m.clone(),
            energy: *e,
            sectors: v.into_iter().map(round_sector).collect(),
            determinate: false,
        });
    }
    Ok(out)
}

/// `count` lowest states by sequential penalized DMRG, with (near-)degenerate
/// groups resolved into joint eigenstates of `symmetries`.
///
/// A mixed solve at a degenerate point can resolve into more than `count`
/// sector states; all of them are returned, sorted by energy.
pub fn lowest_sector_states(
    mpo: &Mpo,
    symmetries: &[SymmetryOp],
    count: usize,
    chi: usize,
    opts: &DmrgOptions,
) -> Result<GroundSolveResult> {
    if count == 0 {
        return Err(Error::InvalidParams("count must be positive".into()));
    }
    for s in symmetries {
        if s.n_sites != mpo.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: mpo.n_sites(),
                got: s.n_sites,
            });
        }
    }
    let mut found: Vec<Mps> = Vec::with_capacity(count);
    let mut raw: Vec<(Mps, f64)> = Vec::with_capacity(count);
    let mut converged = true;
    let mut sweeps = 0;
    let mut seeds = Vec::with_capacity(count);
    for i in 0..count {
        let seed = if i == 0 { opts.seed } else { derive_seed(opts.seed, i as u64) };
        let o = DmrgOptions {
            seed,
            ..opts.clone()
        };
        let res = dmrg_ground_state(mpo, chi, &found, &o)?;
        converged &= res.converged;
        sweeps += res.sweeps;
        seeds.push(seed);
        found.push(res.state.clone());
        raw.push((res.state, res.energy));
    }
    raw.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut states = Vec::with_capacity(count);
    let mut start = 0;
    while start < raw.len() {
        let mut end = start + 1;
        while end < raw.len() && raw[end].1 - raw[start].1 < DEGENERACY_EPS {
            end += 1;
        }
        states.extend(resolve_cluster(&raw[start..end], mpo, symmetries, chi)?);
        start = end;
    }
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(GroundSolveResult {
        states,
        converged,
        sweep_count: sweeps,
        seeds,
    })
}

/// Lowest state inside the joint sector `signs`, found with the penalty
/// Hamiltonian `H - (w/2) sum_k s_k S_k` and cleaned up by projection.
pub fn sector_ground_state(
    mpo: &Mpo,
    symmetries: &[SymmetryOp],
    signs: &[f64],
    chi: usize,
    opts: &DmrgOptions,
) -> Result<(SectorState, DmrgResult)> {
    if symmetries.len() != signs.len() {
        return Err(Error::DimensionMismatch {
            expected: symmetries.len(),
            got: signs.len(),
        });
    }
    let w = default_penalty(mpo);
    let mut shifted = mpo.clone();
    for (sym, &s) in symmetries.iter().zip(signs) {
        shifted = shifted.sum(&sym.mpo.scaled(-0.5 * w * s))?;
    }
    let res = dmrg_ground_state(&shifted, chi, &[], opts)?;
    let (state, weight) = project_joint(&res.state, symmetries, signs, chi)?
        .ok_or_else(|| Error::Numerical("sector-penalized state has no weight in the requested sector".into()))?;
    if weight < 0.5 {
        return Err(Error::Numerical(format!("sector weight {weight:.3e} after penalized solve")));
    }
    let energy = state.expectation(mpo)?;
    Ok((
        SectorState {
            state,
            energy,
            sectors: signs.to_vec(),
            determinate: true,
        },
        res,
    ))
}
