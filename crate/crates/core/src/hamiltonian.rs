//! Model Hamiltonians and their symmetry operators.
//!
//! Two independent representations are provided for every operator:
//!
//! * an [`Mpo`] assembled from a finite-state automaton (bond dimension 4
//!   for the ANNNI chain, 5 for the cluster chain), used by DMRG;
//! * a [`PauliSum`] of weighted Pauli strings that can be applied matrix-free
//!   or expanded into a dense matrix, used as the oracle in tests.
//!
//! Site `j` (1-based) is the `j`-th most significant bit of a basis index and
//! `sigma_z |0> = +|0>`.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ONE, ZERO};

/// Dense matrices are only built up to this many sites (a 4096 x 4096 complex matrix).
pub const DENSE_SITE_LIMIT: usize = 12;
/// Matrix-free operators are accepted by the exact oracle up to this size.
pub const ORACLE_SITE_LIMIT: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Annni,
    Cluster,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Annni => write!(f, "annni"),
            Model::Cluster => write!(f, "cluster"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: Model,
    pub n_sites: usize,
    pub k: f64,
    pub h: f64,
}

impl ModelParams {
    pub fn annni(n_sites: usize, k: f64, h: f64) -> Self {
        Self {
            model: Model::Annni,
            n_sites,
            k,
            h,
        }
    }

    pub fn cluster(n_sites: usize, k: f64, h: f64) -> Self {
        Self {
            model: Model::Cluster,
            n_sites,
            k,
            h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 3 {
            return Err(Error::InvalidParams(format!(
                "need at least 3 sites, got {}",
                self.n_sites
            )));
        }
        if !self.k.is_finite() || !self.h.is_finite() {
            return Err(Error::InvalidParams(format!(
                "non-finite couplings k={}, h={}",
                self.k, self.h
            )));
        }
        Ok(())
    }

    /// Upper bound on the spectral norm: the sum of absolute term weights.
    pub fn norm_bound(&self) -> f64 {
        let n = self.n_sites as f64;
        match self.model {
            Model::Annni => (n - 1.0) + self.k.abs() * (n - 2.0) + self.h.abs() * n,
            Model::Cluster => (n - 2.0) + self.k.abs() * (n - 1.0) + self.h.abs() * n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -i], [i, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// Action on a single basis bit: `P|b> = phase |b'>`.
    fn act(self, bit: usize) -> (usize, C64) {
        match self {
            Pauli::I => (bit, ONE),
            Pauli::X => (bit ^ 1, ONE),
            Pauli::Y => (bit ^ 1, if bit == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) }),
            Pauli::Z => (bit, if bit == 0 { ONE } else { -ONE }),
        }
    }
}

/// A weighted sum of Pauli strings on `n_sites` qubits. Sites are 0-based here.
#[derive(Clone, Debug)]
pub struct PauliSum {
    pub n_sites: usize,
    pub terms: Vec<(f64, Vec<(usize, Pauli)>)>,
}

impl PauliSum {
    pub fn new(n_sites: usize) -> Self {
        Self {
            n_sites,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, coeff: f64, ops: Vec<(usize, Pauli)>) {
        if coeff != 0.0 {
            self.terms.push((coeff, ops));
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    fn act_on_basis(&self, ops: &[(usize, Pauli)], mut index: usize) -> (usize, C64) {
        let mut phase = ONE;
        for &(site, p) in ops {
            let shift = self.n_sites - 1 - site;
            let bit = (index >> shift) & 1;
            let (nb, ph) = p.act(bit);
            index = (index & !(1 << shift)) | (nb << shift);
            phase *= ph;
        }
        (index, phase)
    }

    /// `y = H x` without materializing `H`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (coeff, ops) in &self.terms {
            for (b, &xb) in x.iter().enumerate() {
                if xb == ZERO {
                    continue;
                }
                let (b2, ph) = self.act_on_basis(ops, b);
                y[b2] += ph * xb * *coeff;
            }
        }
    }

    pub fn to_dense(&self) -> Result<Mat<C64>> {
        if self.n_sites > DENSE_SITE_LIMIT {
            return Err(Error::TooLarge {
                n_sites: self.n_sites,
                limit: DENSE_SITE_LIMIT,
            });
        }
        let dim = self.dim();
        let mut m = Mat::<C64>::zeros(dim, dim);
        for (coeff, ops) in &self.terms {
            for b in 0..dim {
                let (b2, ph) = self.act_on_basis(ops, b);
                m[(b2, b)] += ph * *coeff;
            }
        }
        Ok(m)
    }
}

/// The Pauli-string form of a model Hamiltonian.
pub fn pauli_sum(params: &ModelParams) -> Result<PauliSum> {
    params.validate()?;
    let n = params.n_sites;
    let mut sum = PauliSum::new(n);
    match params.model {
        Model::Annni => {
            for j in 0..n - 1 {
                sum.push(-1.0, vec![(j, Pauli::X), (j + 1, Pauli::X)]);
            }
            for j in 0..n - 2 {
                sum.push(params.k, vec![(j, Pauli::X), (j + 2, Pauli::X)]);
            }
        }
        Model::Cluster => {
            for j in 0..n - 2 {
                sum.push(-1.0, vec![(j, Pauli::X), (j + 1, Pauli::Z), (j + 2, Pauli::X)]);
            }
            for j in 0..n - 1 {
                sum.push(-params.k, vec![(j, Pauli::Z), (j + 1, Pauli::Z)]);
            }
        }
    }
    for j in 0..n {
        sum.push(-params.h, vec![(j, Pauli::Z)]);
    }
    Ok(sum)
}

/// Dense `2^N x 2^N` Hamiltonian; `N <= 12`.
pub fn build_dense(params: &ModelParams) -> Result<Mat<C64>> {
    params.validate()?;
    if params.n_sites > DENSE_SITE_LIMIT {
        return Err(Error::TooLarge {
            n_sites: params.n_sites,
            limit: DENSE_SITE_LIMIT,
        });
    }
    pauli_sum(params)?.to_dense()
}

/// One MPO site tensor, indexed `(left, out, in, right)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MpoSite {
    pub left: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl MpoSite {
    pub fn zeros(left: usize, right: usize) -> Self {
        Self {
            left,
            right,
            data: vec![ZERO; left * 4 * right],
        }
    }

    #[inline]
    pub fn at(&self, l: usize, out: usize, inp: usize, r: usize) -> C64 {
        self.data[((l * 2 + out) * 2 + inp) * self.right + r]
    }

    pub fn set_block(&mut self, l: usize, r: usize, op: [[C64; 2]; 2], coeff: C64) {
        for (o, row) in op.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                self.data[((l * 2 + o) * 2 + i) * self.right + r] = *v * coeff;
            }
        }
    }

    pub fn block(&self, l: usize, r: usize) -> [[C64; 2]; 2] {
        let mut b = [[ZERO; 2]; 2];
        for (o, row) in b.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = self.at(l, o, i, r);
            }
        }
        b
    }

    /// Non-zero `(left, right, 2x2 operator)` blocks.
    pub fn blocks(&self) -> Vec<(usize, usize, [[C64; 2]; 2])> {
        let mut out = Vec::new();
        for l in 0..self.left {
            for r in 0..self.right {
                let b = self.block(l, r);
                if b.iter().flatten().any(|v| v.norm() > 0.0) {
                    out.push((l, r, b));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    pub sites: Vec<MpoSite>,
    /// Upper bound on the operator norm, carried through sums and scalings.
    pub norm_bound: f64,
}

impl Mpo {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.right).max().unwrap_or(1)
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().take(self.sites.len().saturating_sub(1)).map(|s| s.right).collect()
    }

    /// Bond-dimension-1 MPO of a product of single-site operators.
    pub fn product(ops: &[[[C64; 2]; 2]], coeff: C64) -> Self {
        let mut sites = Vec::with_capacity(ops.len());
        let mut bound = coeff.norm();
        for (j, op) in ops.iter().enumerate() {
            let mut s = MpoSite::zeros(1, 1);
            s.set_block(0, 0, *op, if j == 0 { coeff } else { ONE });
            bound *= op.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            sites.push(s);
        }
        Self {
            sites,
            norm_bound: bound,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.sites[0].data {
            *v *= c;
        }
        out.norm_bound *= c.abs();
        out
    }

    /// Block-diagonal sum `self + other`; bond dimensions add.
    pub fn sum(&self, other: &Mpo) -> Result<Mpo> {
        let n = self.n_sites();
        if other.n_sites() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: other.n_sites(),
            });
        }
        let mut sites = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (&self.sites[j], &other.sites[j]);
            let first = j == 0;
            let last = j + 1 == n;
            let left = if first { 1 } else { a.left + b.left };
            let right = if last { 1 } else { a.right + b.right };
            let mut s = MpoSite::zeros(left, right);
            for (src, loff, roff) in [(a, 0, 0), (b, if first { 0 } else { a.left }, if last { 0 } else { a.right })] {
                for l in 0..src.left {
                    for r in 0..src.right {
                        for o in 0..2 {
                            for i in 0..2 {
                                s.data[(((l + loff) * 2 + o) * 2 + i) * right + r + roff] += src.at(l, o, i, r);
                            }
                        }
                    }
                }
            }
            sites.push(s);
        }
        Ok(Mpo {
            sites,
            norm_bound: self.norm_bound + other.norm_bound,
        })
    }

    /// Contract into a dense matrix (`N <= 12`).
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        let n = self.n_sites();
        if n > DENSE_SITE_LIMIT {
            return Err(Error::TooLarge {
                n_sites: n,
                limit: DENSE_SITE_LIMIT,
            });
        }
        // acc[(out, in, bond)] grows one site at a time
        let mut dim = 1usize;
        let mut bond = 1usize;
        let mut acc = vec![ONE];
        for site in &self.sites {
            let nd = dim * 2;
            let mut next = vec![ZERO; nd * nd * site.right];
            for o in 0..dim {
                for i in 0..dim {
                    for b in 0..bond {
                        let v = acc[(o * dim + i) * bond + b];
                        if v == ZERO {
                            continue;
                        }
                        for so in 0..2 {
                            for si in 0..2 {
                                for r in 0..site.right {
                                    let w = site.at(b, so, si, r);
                                    if w != ZERO {
                                        next[((o * 2 + so) * nd + i * 2 + si) * site.right + r] += v * w;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
            dim = nd;
            bond = site.right;
        }
        Ok(Mat::from_fn(dim, dim, |o, i| acc[o * dim + i]))
    }
}

fn check_model(params: &ModelParams, model: Model) -> Result<()> {
    params.validate()?;
    if params.model != model {
        return Err(Error::InvalidParams(format!(
            "expected {model} parameters, got {}",
            params.model
        )));
    }
    Ok(())
}

/// ANNNI chain `-sum XX + k sum X.X - h sum Z` as a bond-dimension-4 MPO.
///
/// Automaton states: 0 = finished, 1 = one `X` placed and awaiting its
/// nearest-neighbour partner, 2 = one `X` placed awaiting an identity then an
/// `X`, 3 = nothing placed yet.
pub fn build_annni_mpo(params: &ModelParams) -> Result<Mpo> {
    check_model(params, Model::Annni)?;
    let n = params.n_sites;
    let (id, x, z) = (Pauli::I.matrix(), Pauli::X.matrix(), Pauli::Z.matrix());
    let bulk = |s: &mut MpoSite, lmap: &dyn Fn(usize) -> Option<usize>, rmap: &dyn Fn(usize) -> Option<usize>| {
        let entries: [(usize, usize, [[C64; 2]; 2], f64); 6] = [
            (0, 0, id, 1.0),
            (1, 0, x, 1.0),
            (2, 1, id, 1.0),
            (3, 0, z, -params.h),
            (3, 1, x, -1.0),
            (3, 2, x, params.k),
        ];
        for (l, r, op, c) in entries {
            if let (Some(ll), Some(rr)) = (lmap(l), rmap(r)) {
                s.set_block(ll, rr, op, C64::new(c, 0.0));
            }
        }
        // identity on the start state
        if let (Some(ll), Some(rr)) = (lmap(3), rmap(3)) {
            s.set_block(ll, rr, id, ONE);
        }
    };
    Ok(assemble(n, 4, 3, 0, params.norm_bound(), bulk))
}

/// Cluster chain `-sum XZX - k sum ZZ - h sum Z` as a bond-dimension-5 MPO.
///
/// Automaton states: 0 = finished, 1 = `X Z` placed awaiting `X`,
/// 2 = `X` placed awaiting `Z`, 3 = `Z` placed awaiting `Z`, 4 = nothing yet.
pub fn build_cluster_mpo(params: &ModelParams) -> Result<Mpo> {
    check_model(params, Model::Cluster)?;
    let n = params.n_sites;
    let (id, x, z) = (Pauli::I.matrix(), Pauli::X.matrix(), Pauli::Z.matrix());
    let bulk = |s: &mut MpoSite, lmap: &dyn Fn(usize) -> Option<usize>, rmap: &dyn Fn(usize) -> Option<usize>| {
        let entries: [(usize, usize, [[C64; 2]; 2], f64); 8] = [
            (0, 0, id, 1.0),
            (1, 0, x, 1.0),
            (2, 1, z, 1.0),
            (3, 0, z, 1.0),
            (4, 0, z, -params.h),
            (4, 2, x, -1.0),
            (4, 3, z, -params.k),
            (4, 4, id, 1.0),
        ];
        for (l, r, op, c) in entries {
            if let (Some(ll), Some(rr)) = (lmap(l), rmap(r)) {
                s.set_block(ll, rr, op, C64::new(c, 0.0));
            }
        }
    };
    Ok(assemble(n, 5, 4, 0, params.norm_bound(), bulk))
}

/// Lay out an automaton MPO: the first site keeps only the `start` row, the
/// last site only the `end` column.
fn assemble<F>(n: usize, d: usize, start: usize, end: usize, norm_bound: f64, fill: F) -> Mpo
where
    F: Fn(&mut MpoSite, &dyn Fn(usize) -> Option<usize>, &dyn Fn(usize) -> Option<usize>),
{
    let mut sites = Vec::with_capacity(n);
    for j in 0..n {
        let first = j == 0;
        let last = j + 1 == n;
        let left = if first { 1 } else { d };
        let right = if last { 1 } else { d };
        let mut s = MpoSite::zeros(left, right);
        let lmap = move |l: usize| -> Option<usize> {
            if first {
                (l == start).then_some(0)
            } else {
                Some(l)
            }
        };
        let rmap = move |r: usize| -> Option<usize> {
            if last {
                (r == end).then_some(0)
            } else {
                Some(r)
            }
        };
        fill(&mut s, &lmap, &rmap);
        sites.push(s);
    }
    Mpo { sites, norm_bound }
}

pub fn build_mpo(params: &ModelParams) -> Result<Mpo> {
    match params.model {
        Model::Annni => build_annni_mpo(params),
        Model::Cluster => build_cluster_mpo(params),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryKind {
    /// Product of `sigma_z` on every site (ANNNI parity).
    ParityZ,
    /// Product of `sigma_z` on even sites (2, 4, ... counting from 1).
    XEven,
    /// Product of `sigma_z` on odd sites (1, 3, ...).
    XOdd,
}

impl fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymmetryKind::ParityZ => "parity-z",
            SymmetryKind::XEven => "x-even",
            SymmetryKind::XOdd => "x-odd",
        };
        f.write_str(s)
    }
}

/// A product-form involutive symmetry.
#[derive(Clone, Debug)]
pub struct SymmetryOp {
    pub kind: SymmetryKind,
    pub n_sites: usize,
    /// Single-site operator per site (identity where the symmetry acts trivially).
    pub site_ops: Vec<Pauli>,
    pub mpo: Mpo,
}

impl SymmetryOp {
    pub fn to_dense(&self) -> Result<Mat<C64>> {
        self.pauli_sum().to_dense()
    }

    pub fn pauli_sum(&self) -> PauliSum {
        let mut p = PauliSum::new(self.n_sites);
        let ops = self
            .site_ops
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(j, p)| (j, *p))
            .collect();
        p.terms.push((1.0, ops));
        p
    }

    /// Eigenvalue on a computational basis state given as 0/1 per site.
    pub fn eigenvalue_on_basis(&self, bits: &[u8]) -> f64 {
        let flips = self
            .site_ops
            .iter()
            .zip(bits)
            .filter(|(p, b)| **p == Pauli::Z && **b == 1)
            .count();
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

pub fn build_symmetry(model: Model, n_sites: usize, kind: SymmetryKind) -> Result<SymmetryOp> {
    if n_sites < 3 {
        return Err(Error::InvalidParams(format!("need at least 3 sites, got {n_sites}")));
    }
    let compatible = matches!(
        (model, kind),
        (Model::Annni, SymmetryKind::ParityZ)
            | (Model::Cluster, SymmetryKind::XEven)
            | (Model::Cluster, SymmetryKind::XOdd)
    );
    if !compatible {
        return Err(Error::IncompatibleSymmetry {
            kind: kind.to_string(),
            model: model.to_string(),
        });
    }
    let site_ops: Vec<Pauli> = (1..=n_sites)
        .map(|j| match kind {
            SymmetryKind::ParityZ => Pauli::Z,
            SymmetryKind::XEven if j % 2 == 0 => Pauli::Z,
            SymmetryKind::XOdd if j % 2 == 1 => Pauli::Z,
            _ => Pauli::I,
        })
        .collect();
    let mats: Vec<_> = site_ops.iter().map(|p| p.matrix()).collect();
    Ok(SymmetryOp {
        kind,
        n_sites,
        site_ops,
        mpo: Mpo::product(&mats, ONE),
    })
}

/// The symmetry generators used for sector resolution of each model.
pub fn model_symmetries(model: Model, n_sites: usize) -> Result<Vec<SymmetryOp>> {
    match model {
        Model::Annni => Ok(vec![build_symmetry(model, n_sites, SymmetryKind::ParityZ)?]),
        Model::Cluster => Ok(vec![
            build_symmetry(model, n_sites, SymmetryKind::XEven)?,
            build_symmetry(model, n_sites, SymmetryKind::XOdd)?,
        ]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, hermitian_defect};
    use faer::MatRef;

    fn max_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
        let mut d = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                d = d.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        d
    }

    fn commutator_norm(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
        let ab = a * b;
        let ba = b * a;
        max_diff(ab.as_ref(), ba.as_ref())
    }

    /// Brute-force classical energy in the sigma_x basis for h = 0.
    fn classical_annni_min(n: usize, k: f64) -> f64 {
        (0..1usize << n)
            .map(|cfg| {
                let s = |j: usize| if (cfg >> j) & 1 == 0 { 1.0 } else { -1.0 };
                let nn: f64 = (0..n - 1).map(|j| -s(j) * s(j + 1)).sum();
                let nnn: f64 = (0..n - 2).map(|j| k * s(j) * s(j + 2)).sum();
                nn + nnn
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn rejects_bad_params() {
        assert!(build_annni_mpo(&ModelParams::annni(2, 0.0, 0.0)).is_err());
        assert!(build_annni_mpo(&ModelParams::annni(5, f64::NAN, 0.0)).is_err());
        assert!(build_cluster_mpo(&ModelParams::cluster(5, 0.0, f64::INFINITY)).is_err());
        assert!(build_annni_mpo(&ModelParams::cluster(5, 0.0, 0.0)).is_err());
        assert!(matches!(
            build_dense(&ModelParams::annni(13, 0.1, 0.1)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn annni_three_sites_classical() {
        let h = build_dense(&ModelParams::annni(3, 0.0, 0.0)).unwrap();
        let e = hermitian_eigenvalues(h.as_ref()).unwrap();
        assert!((e[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn annni_three_sites_by_hand() {
        // -X1X2 - X2X3 - (Z1 + Z2 + Z3) written out explicitly
        let x = Pauli::X.matrix();
        let z = Pauli::Z.matrix();
        let id = Pauli::I.matrix();
        let kron3 = |a: [[C64; 2]; 2], b: [[C64; 2]; 2], c: [[C64; 2]; 2]| {
            Mat::<C64>::from_fn(8, 8, |r, col| {
                a[r >> 2][col >> 2] * b[(r >> 1) & 1][(col >> 1) & 1] * c[r & 1][col & 1]
            })
        };
        let expect = -(kron3(x, x, id) + kron3(id, x, x) + kron3(z, id, id) + kron3(id, z, id) + kron3(id, id, z));
        let got = build_dense(&ModelParams::annni(3, 0.0, 1.0)).unwrap();
        assert_eq!(max_diff(got.as_ref(), expect.as_ref()), 0.0);
    }

    #[test]
    fn annni_classical_energy_matches_enumeration() {
        let n = 8;
        let k = 0.2;
        let brute = classical_annni_min(n, k);
        assert!((brute - (-5.8)).abs() < 1e-12);
        let h = build_dense(&ModelParams::annni(n, k, 0.0)).unwrap();
        let e = hermitian_eigenvalues(h.as_ref()).unwrap();
        assert!((e[0] - brute).abs() < 1e-10);
    }

    #[test]
    fn classical_energy_is_extensive_for_small_k() {
        for n in [5, 7, 9] {
            for k in [0.0, 0.1, 0.3, 0.45] {
                let expect = -((n - 1) as f64) + k * (n - 2) as f64;
                assert!((classical_annni_min(n, k) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mpo_contracts_to_dense() {
        let cases = [
            ModelParams::annni(10, 0.4, 0.7),
            ModelParams::annni(6, 0.9, 1.3),
            ModelParams::cluster(9, -0.5, 1.0),
            ModelParams::cluster(5, 0.7, 0.2),
            ModelParams::annni(3, 0.3, 0.2),
            ModelParams::cluster(3, 0.3, 0.2),
        ];
        for p in cases {
            let mpo = build_mpo(&p).unwrap();
            assert!(mpo.max_bond() <= 5);
            let a = mpo.to_dense().unwrap();
            let b = build_dense(&p).unwrap();
            assert!(max_diff(a.as_ref(), b.as_ref()) < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn bond_dimensions_are_minimal_automata() {
        assert_eq!(build_mpo(&ModelParams::annni(8, 0.1, 0.1)).unwrap().max_bond(), 4);
        assert_eq!(build_mpo(&ModelParams::cluster(8, 0.1, 0.1)).unwrap().max_bond(), 5);
    }

    #[test]
    fn cluster_three_sites_spectrum() {
        let h = build_dense(&ModelParams::cluster(3, 0.0, 0.0)).unwrap();
        let e = hermitian_eigenvalues(h.as_ref()).unwrap();
        for (i, v) in e.iter().enumerate() {
            let expect = if i < 4 { -1.0 } else { 1.0 };
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn strong_field_polarizes_cluster() {
        let h = build_dense(&ModelParams::cluster(3, 0.0, 50.0)).unwrap();
        let (_, vecs) = crate::linalg::hermitian_eigen(h.as_ref()).unwrap();
        assert!(vecs[(0, 0)].norm() > 0.999);
    }

    #[test]
    fn dense_is_hermitian() {
        for p in [ModelParams::annni(7, 0.3, 0.8), ModelParams::cluster(7, -1.2, 0.4)] {
            let h = build_dense(&p).unwrap();
            assert_eq!(hermitian_defect(h.as_ref()), 0.0);
        }
    }

    #[test]
    fn symmetries_commute_and_square_to_one() {
        let n = 8;
        let p = build_symmetry(Model::Annni, n, SymmetryKind::ParityZ).unwrap();
        let pd = p.to_dense().unwrap();
        let id = Mat::<C64>::identity(1 << n, 1 << n);
        assert!(max_diff((&pd * &pd).as_ref(), id.as_ref()) < 1e-14);
        for (k, h) in [(0.0, 0.0), (0.4, 0.7), (1.0, 2.0)] {
            let hd = build_dense(&ModelParams::annni(n, k, h)).unwrap();
            assert!(commutator_norm(&pd, &hd) < 1e-12);
        }
        let xe = build_symmetry(Model::Cluster, n, SymmetryKind::XEven).unwrap().to_dense().unwrap();
        let xo = build_symmetry(Model::Cluster, n, SymmetryKind::XOdd).unwrap().to_dense().unwrap();
        assert!(commutator_norm(&xe, &xo) < 1e-14);
        assert!(max_diff((&xe * &xe).as_ref(), id.as_ref()) < 1e-14);
        for (k, h) in [(0.0, 0.0), (-0.8, 0.6), (0.5, 1.5)] {
            let hd = build_dense(&ModelParams::cluster(n, k, h)).unwrap();
            assert!(commutator_norm(&xe, &hd) < 1e-10);
            assert!(commutator_norm(&xo, &hd) < 1e-10);
        }
    }

    #[test]
    fn symmetry_mpo_matches_dense() {
        let s = build_symmetry(Model::Cluster, 6, SymmetryKind::XOdd).unwrap();
        assert_eq!(s.mpo.max_bond(), 1);
        let a = s.mpo.to_dense().unwrap();
        let b = s.to_dense().unwrap();
        assert!(max_diff(a.as_ref(), b.as_ref()) < 1e-15);
    }

    #[test]
    fn parity_eigenvalues_on_basis_states() {
        let p = build_symmetry(Model::Annni, 5, SymmetryKind::ParityZ).unwrap();
        assert_eq!(p.eigenvalue_on_basis(&[0, 0, 0, 0, 0]), 1.0);
        assert_eq!(p.eigenvalue_on_basis(&[1, 0, 0, 0, 0]), -1.0);
    }

    #[test]
    fn incompatible_symmetry_rejected() {
        assert!(build_symmetry(Model::Annni, 5, SymmetryKind::XEven).is_err());
        assert!(build_symmetry(Model::Cluster, 5, SymmetryKind::ParityZ).is_err());
    }

    #[test]
    fn mpo_sum_adds_operators() {
        let p = ModelParams::annni(5, 0.3, 0.4);
        let h = build_mpo(&p).unwrap();
        let par = build_symmetry(Model::Annni, 5, SymmetryKind::ParityZ).unwrap();
        let s = h.sum(&par.mpo.scaled(-2.0)).unwrap();
        let dense = s.to_dense().unwrap();
        let par_dense = par.to_dense().unwrap();
        let expect = build_dense(&p).unwrap() - &par_dense - &par_dense;
        assert!(max_diff(dense.as_ref(), expect.as_ref()) < 1e-12);
    }

    #[test]
    fn matrix_free_apply_matches_dense() {
        let p = ModelParams::cluster(6, -0.3, 0.9);
        let ps = pauli_sum(&p).unwrap();
        let dense = ps.to_dense().unwrap();
        let x: Vec<C64> = (0..64).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.5).cos())).collect();
        let mut y = vec![ZERO; 64];
        ps.apply(&x, &mut y);
        for r in 0..64 {
            let expect: C64 = (0..64).map(|c| dense[(r, c)] * x[c]).sum();
            assert!((expect - y[r]).norm() < 1e-12);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn mpo_matches_dense_and_commutes_with_symmetries(
            cluster in proptest::bool::ANY,
            n in 3usize..9,
            k in -2.0f64..2.0,
            h in 0.0f64..2.0,
        ) {
            let (model, p) = if cluster {
                (Model::Cluster, ModelParams::cluster(n, k, h))
            } else {
                (Model::Annni, ModelParams::annni(n, k.abs().min(1.0), h))
            };
            let dense = build_dense(&p).unwrap();
            let mpo = build_mpo(&p).unwrap().to_dense().unwrap();
            proptest::prop_assert!(max_diff(mpo.as_ref(), dense.as_ref()) < 1e-12);
            for sym in model_symmetries(model, n).unwrap() {
                proptest::prop_assert!(commutator_norm(&sym.to_dense().unwrap(), &dense) < 1e-10);
            }
        }
    }
}
