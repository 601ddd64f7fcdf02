//! Matrix-product states: construction, canonical forms, compression,
//! contractions and symmetry projections.

pub mod dmrg;
pub(crate) mod env;
pub mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hamiltonian::{Mpo, Pauli, SymmetryOp, ORACLE_SITE_LIMIT};
use crate::linalg::{self, gemm, thin_qr, truncated_svd, view, C64, ONE, ZERO};

use env::{extend_left, Env, SparseSite};

pub use dmrg::{
    dmrg_ground_state, lowest_sector_states, sector_ground_state, DmrgOptions, DmrgResult, GroundSolveResult,
    SectorState, DEGENERACY_EPS,
};

/// Relative singular-value cutoff used whenever a state is recompressed.
pub const COMPRESS_CUTOFF: f64 = 1e-12;

/// Rank-3 site tensor laid out `(left, physical, right)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub left: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl SiteTensor {
    pub fn zeros(left: usize, right: usize) -> Self {
        Self {
            left,
            right,
            data: vec![ZERO; left * 2 * right],
        }
    }

    #[inline]
    pub fn at(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[(l * 2 + s) * self.right + r]
    }

    #[inline]
    pub fn at_mut(&mut self, l: usize, s: usize, r: usize) -> &mut C64 {
        &mut self.data[(l * 2 + s) * self.right + r]
    }

    /// The `left x right` matrix for one physical index.
    pub fn slice(&self, s: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.left * self.right);
        for l in 0..self.left {
            let start = (l * 2 + s) * self.right;
            out.extend_from_slice(&self.data[start..start + self.right]);
        }
        out
    }

    fn apply_op(&self, op: &[[C64; 2]; 2]) -> SiteTensor {
        let mut out = SiteTensor::zeros(self.left, self.right);
        for l in 0..self.left {
            for o in 0..2 {
                for i in 0..2 {
                    let c = op[o][i];
                    if c == ZERO {
                        continue;
                    }
                    for r in 0..self.right {
                        *out.at_mut(l, o, r) += c * self.at(l, i, r);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalForm {
    Left,
    Right,
    /// Orthogonality center at the given 0-based site.
    Mixed(usize),
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    pub tensors: Vec<SiteTensor>,
    pub form: CanonicalForm,
    /// Bond-dimension cap the state was built or truncated with.
    pub max_bond: usize,
}

impl Mps {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    /// Internal bond dimensions (length `N - 1`).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors.iter().skip(1).map(|t| t.left).collect()
    }

    pub fn current_max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Computational basis product state, one 0/1 entry per site.
    pub fn product(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() || bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParams("bits must be a non-empty 0/1 string".into()));
        }
        let tensors = bits
            .iter()
            .map(|&b| {
                let mut t = SiteTensor::zeros(1, 1);
                t.data[b as usize] = ONE;
                t
            })
            .collect();
        Ok(Self {
            tensors,
            form: CanonicalForm::Left,
            max_bond: 1,
        })
    }

    /// Product state from one normalized two-component vector per site.
    pub fn product_from_sites(sites: &[[C64; 2]]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParams("empty product state".into()));
        }
        let tensors = sites
            .iter()
            .map(|v| SiteTensor {
                left: 1,
                right: 1,
                data: v.to_vec(),
            })
            .collect();
        let mut m = Self {
            tensors,
            form: CanonicalForm::None,
            max_bond: 1,
        };
        m.normalize()?;
        Ok(m)
    }

    /// `(|00...0> + |11...1>) / sqrt(2)` with bond dimension 2.
    pub fn ghz(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams("GHZ state needs at least 2 sites".into()));
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut tensors = Vec::with_capacity(n);
        for j in 0..n {
            let left = if j == 0 { 1 } else { 2 };
            let right = if j + 1 == n { 1 } else { 2 };
            let mut t = SiteTensor::zeros(left, right);
            for b in 0..2 {
                let l = if j == 0 { 0 } else { b };
                let rr = if j + 1 == n { 0 } else { b };
                *t.at_mut(l, b, rr) = if j == 0 { C64::new(r, 0.0) } else { ONE };
            }
            tensors.push(t);
        }
        Ok(Self {
            tensors,
            form: CanonicalForm::None,
            max_bond: 2,
        })
    }

    /// Random state with Gaussian complex entries, right-canonical and normalized.
    pub fn random(n: usize, chi: usize, seed: u64) -> Result<Self> {
        if n == 0 || chi == 0 {
            return Err(Error::InvalidParams("random MPS needs n >= 1 and chi >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = capped_bonds(n, chi);
        let tensors = (0..n)
            .map(|j| {
                let (left, right) = (dims[j], dims[j + 1]);
                let data = (0..left * 2 * right)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        C64::new(re, im)
                    })
                    .collect();
                SiteTensor { left, right, data }
            })
            .collect();
        let mut m = Self {
            tensors,
            form: CanonicalForm::None,
            max_bond: chi,
        };
        m.right_canonicalize();
        m.normalize()?;
        Ok(m)
    }

    /// Exact (up to `max_bond` truncation) MPS of a dense state vector.
    pub fn from_dense(v: &[C64], n: usize, max_bond: usize) -> Result<Self> {
        if v.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: v.len(),
            });
        }
        let mut rest = v.to_vec();
        let mut left = 1usize;
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n - 1 {
            let cols = rest.len() / (left * 2);
            let svd = truncated_svd(&rest, left * 2, cols, max_bond, COMPRESS_CUTOFF)?;
            tensors.push(SiteTensor {
                left,
                right: svd.rank,
                data: svd.u,
            });
            let mut next = svd.vh;
            for k in 0..svd.rank {
                for x in &mut next[k * cols..(k + 1) * cols] {
                    *x *= svd.s[k];
                }
            }
            rest = next;
            left = svd.rank;
        }
        tensors.push(SiteTensor {
            left,
            right: 1,
            data: rest,
        });
        let mut m = Self {
            tensors,
            form: CanonicalForm::Mixed(n - 1),
            max_bond,
        };
        m.normalize()?;
        Ok(m)
    }

    /// Full state vector (`N <= 14`); site 1 is the most significant bit.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        let n = self.n_sites();
        if n > ORACLE_SITE_LIMIT {
            return Err(Error::TooLarge {
                n_sites: n,
                limit: ORACLE_SITE_LIMIT,
            });
        }
        // acc is (prefix index, bond) row-major
        let mut acc = vec![ONE];
        let mut rows = 1usize;
        for t in &self.tensors {
            let next = gemm(view(&acc, rows, t.left), view(&t.data, t.left, 2 * t.right));
            acc = next;
            rows *= 2;
        }
        Ok(acc)
    }

    pub fn check_same_size(&self, other: &Mps) -> Result<()> {
        if self.n_sites() != other.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites(),
                got: other.n_sites(),
            });
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Mps) -> Result<C64> {
        self.check_same_size(other)?;
        let id = SparseSite::identity();
        let mut env = Env::trivial();
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            env = extend_left(&env, a, &id, b);
        }
        Ok(env.blocks[0][0])
    }

    pub fn norm(&self) -> f64 {
        self.overlap(self).map(|c| c.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let nrm = self.norm();
        if !(nrm > 1e-300) || !nrm.is_finite() {
            return Err(Error::Numerical("cannot normalize a zero state".into()));
        }
        let idx = match self.form {
            CanonicalForm::Mixed(c) => c,
            CanonicalForm::Left => self.n_sites() - 1,
            _ => 0,
        };
        linalg::scale(&mut self.tensors[idx].data, C64::new(1.0 / nrm, 0.0));
        Ok(nrm)
    }

    /// `<bits|psi>` by a left-to-right matrix chain.
    pub fn amplitude(&self, bits: &[u8]) -> Result<C64> {
        if bits.len() != self.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites(),
                got: bits.len(),
            });
        }
        let mut row = vec![ONE];
        for (t, &b) in self.tensors.iter().zip(bits) {
            if b > 1 {
                return Err(Error::InvalidParams(format!("bit value {b}")));
            }
            let mut next = vec![ZERO; t.right];
            for (l, &x) in row.iter().enumerate() {
                if x == ZERO {
                    continue;
                }
                let start = (l * 2 + b as usize) * t.right;
                for (n, &a) in next.iter_mut().zip(&t.data[start..start + t.right]) {
                    *n += x * a;
                }
            }
            row = next;
        }
        Ok(row[0])
    }

    /// `<psi|O|psi>` as a complex number.
    pub fn expectation_complex(&self, op: &Mpo) -> Result<C64> {
        self.sandwich(op, self)
    }

    /// `<self|O|ket>`.
    pub fn sandwich(&self, op: &Mpo, ket: &Mps) -> Result<C64> {
        self.check_same_size(ket)?;
        if op.n_sites() != self.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites(),
                got: op.n_sites(),
            });
        }
        let mut env = Env::trivial();
        for ((a, w), b) in self.tensors.iter().zip(&op.sites).zip(&ket.tensors) {
            env = extend_left(&env, a, &SparseSite::from_mpo(w), b);
        }
        Ok(env.blocks[0][0])
    }

    /// Real expectation of a Hermitian MPO; errors on an imaginary residue above 1e-10.
    pub fn expectation(&self, op: &Mpo) -> Result<f64> {
        let z = self.expectation_complex(op)?;
        if z.im.abs() > 1e-10 * z.norm().max(1.0) {
            return Err(Error::ImaginaryResidue(z.im));
        }
        Ok(z.re)
    }

    /// Apply one single-site operator per site; bond dimensions are unchanged.
    pub fn apply_site_ops(&self, ops: &[[[C64; 2]; 2]]) -> Result<Mps> {
        if ops.len() != self.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites(),
                got: ops.len(),
            });
        }
        Ok(Mps {
            tensors: self.tensors.iter().zip(ops).map(|(t, op)| t.apply_op(op)).collect(),
            form: CanonicalForm::None,
            max_bond: self.max_bond,
        })
    }

    /// Expectation of a Pauli string given as `(0-based site, Pauli)` pairs.
    pub fn pauli_expectation(&self, ops: &[(usize, Pauli)]) -> Result<C64> {
        let n = self.n_sites();
        let mut site_ops = vec![Pauli::I.matrix(); n];
        for &(j, p) in ops {
            if j >= n {
                return Err(Error::InvalidParams(format!("site {j} out of range for {n} sites")));
            }
            site_ops[j] = mat_mul2(&p.matrix(), &site_ops[j]);
        }
        let applied = self.apply_site_ops(&site_ops)?;
        self.overlap(&applied)
    }

    /// `<sigma^x_a prod_{a<i<b} sigma^z_i sigma^x_b>` with 1-based `a < b`.
    pub fn string_order(&self, a: usize, b: usize) -> Result<f64> {
        self.check_string_bounds(a, b)?;
        let mut ops = vec![(a - 1, Pauli::X)];
        ops.extend((a + 1..b).map(|i| (i - 1, Pauli::Z)));
        ops.push((b - 1, Pauli::X));
        Ok(self.pauli_expectation(&ops)?.re)
    }

    /// String with `sigma^z` only on every other interior site
    /// (`a+1, a+3, ..., b-1`), the product of alternate cluster stabilizers.
    /// Requires `b - a` even.
    pub fn cluster_string_order(&self, a: usize, b: usize) -> Result<f64> {
        self.check_string_bounds(a, b)?;
        if (b - a) % 2 != 0 {
            return Err(Error::InvalidParams(format!("string endpoints {a},{b} must have even separation")));
        }
        let mut ops = vec![(a - 1, Pauli::X)];
        ops.extend((a + 1..b).step_by(2).map(|i| (i - 1, Pauli::Z)));
        ops.push((b - 1, Pauli::X));
        Ok(self.pauli_expectation(&ops)?.re)
    }

    fn check_string_bounds(&self, a: usize, b: usize) -> Result<()> {
        if a < 1 || a >= b || b > self.n_sites() {
            return Err(Error::InvalidParams(format!(
                "string endpoints must satisfy 1 <= a < b <= {}, got a={a}, b={b}",
                self.n_sites()
            )));
        }
        Ok(())
    }

    /// Apply a bond-dimension-1 MPO (such as a symmetry operator).
    pub fn apply_product_mpo(&self, op: &Mpo) -> Result<Mps> {
        if op.max_bond() != 1 {
            return Err(Error::InvalidParams("operator is not a product of site operators".into()));
        }
        let mats: Vec<[[C64; 2]; 2]> = op.sites.iter().map(|s| s.block(0, 0)).collect();
        self.apply_site_ops(&mats)
    }

    /// `ca * a + cb * b` with summed bond dimensions (not compressed).
    pub fn linear_combination(a: &Mps, ca: C64, b: &Mps, cb: C64) -> Result<Mps> {
        a.check_same_size(b)?;
        let n = a.n_sites();
        if n == 1 {
            let data = a.tensors[0]
                .data
                .iter()
                .zip(&b.tensors[0].data)
                .map(|(x, y)| ca * x + cb * y)
                .collect();
            return Ok(Mps {
                tensors: vec![SiteTensor { left: 1, right: 1, data }],
                form: CanonicalForm::None,
                max_bond: a.max_bond.max(b.max_bond),
            });
        }
        let mut tensors = Vec::with_capacity(n);
        for j in 0..n {
            let (ta, tb) = (&a.tensors[j], &b.tensors[j]);
            let first = j == 0;
            let last = j + 1 == n;
            let left = if first { 1 } else { ta.left + tb.left };
            let right = if last { 1 } else { ta.right + tb.right };
            let mut t = SiteTensor::zeros(left, right);
            let parts = [
                (ta, 0usize, 0usize, ca),
                (tb, if first { 0 } else { ta.left }, if last { 0 } else { ta.right }, cb),
            ];
            for (src, lo, ro, c) in parts {
                let coef = if first { c } else { ONE };
                for l in 0..src.left {
                    for s in 0..2 {
                        for r in 0..src.right {
                            *t.at_mut(l + lo, s, r + ro) += coef * src.at(l, s, r);
                        }
                    }
                }
            }
            tensors.push(t);
        }
        Ok(Mps {
            tensors,
            form: CanonicalForm::None,
            max_bond: a.max_bond.max(b.max_bond),
        })
    }

    /// Left-orthogonalize sites `0..upto` by QR, pushing the remainder right.
    pub fn left_orthogonalize(&mut self, upto: usize) {
        for j in 0..upto.min(self.n_sites() - 1) {
            let t = &self.tensors[j];
            let (l, r) = (t.left, t.right);
            let (q, rmat, k) = thin_qr(&t.data, l * 2, r);
            self.tensors[j] = SiteTensor {
                left: l,
                right: k,
                data: q,
            };
            let next = &self.tensors[j + 1];
            let data = gemm(view(&rmat, k, r), view(&next.data, r, 2 * next.right));
            self.tensors[j + 1] = SiteTensor {
                left: k,
                right: next.right,
                data,
            };
        }
    }

    /// Right-orthogonalize sites `(from, N)` by LQ, pushing the remainder left.
    pub fn right_orthogonalize(&mut self, from: usize) {
        let n = self.n_sites();
        for j in (from + 1..n).rev() {
            let t = &self.tensors[j];
            let (l, r) = (t.left, t.right);
            let adj = adjoint(&t.data, l, 2 * r);
            let (q, rmat, k) = thin_qr(&adj, 2 * r, l);
            // t = R^H Q^H
            self.tensors[j] = SiteTensor {
                left: k,
                right: r,
                data: adjoint(&q, 2 * r, k),
            };
            let rh = adjoint(&rmat, k, l);
            let prev = &self.tensors[j - 1];
            let data = gemm(view(&prev.data, prev.left * 2, l), view(&rh, l, k));
            self.tensors[j - 1] = SiteTensor {
                left: prev.left,
                right: k,
                data,
            };
        }
    }

    pub fn left_canonicalize(&mut self) {
        let n = self.n_sites();
        self.left_orthogonalize(n - 1);
        self.form = CanonicalForm::Left;
    }

    pub fn right_canonicalize(&mut self) {
        self.right_orthogonalize(0);
        self.form = CanonicalForm::Right;
    }

    /// Mixed-canonical form with the orthogonality center at `center`.
    pub fn canonicalize(&mut self, center: usize) {
        let center = center.min(self.n_sites() - 1);
        self.left_orthogonalize(center);
        self.right_orthogonalize(center);
        self.form = CanonicalForm::Mixed(center);
    }

    /// Largest deviation from the left-isometry condition over sites `0..upto`.
    pub fn left_isometry_defect(&self, upto: usize) -> f64 {
        self.tensors[..upto]
            .iter()
            .map(|t| {
                let g = linalg::gemm_adj(view(&t.data, t.left * 2, t.right), view(&t.data, t.left * 2, t.right));
                identity_defect(&g, t.right)
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation from the right-isometry condition over sites `(from, N)`.
    pub fn right_isometry_defect(&self, from: usize) -> f64 {
        self.tensors[from + 1..]
            .iter()
            .map(|t| {
                let m = view(&t.data, t.left, 2 * t.right);
                let mut g = vec![ZERO; t.left * t.left];
                linalg::gemm_into(&mut g, m, m.adjoint(), false);
                identity_defect(&g, t.left)
            })
            .fold(0.0, f64::max)
    }

    /// SVD-compress to at most `max_bond`, returning the state (normalized,
    /// right-canonical) and the largest discarded weight.
    pub fn compress(&self, max_bond: usize, rel_cutoff: f64) -> Result<(Mps, f64)> {
        let mut m = self.clone();
        m.left_canonicalize();
        let n = m.n_sites();
        let mut discarded = 0.0f64;
        for j in (1..n).rev() {
            let t = &m.tensors[j];
            let (l, r) = (t.left, t.right);
            let svd = truncated_svd(&t.data, l, 2 * r, max_bond, rel_cutoff)?;
            discarded = discarded.max(svd.discarded);
            m.tensors[j] = SiteTensor {
                left: svd.rank,
                right: r,
                data: svd.vh,
            };
            let mut us = svd.u;
            for row in 0..l {
                for k in 0..svd.rank {
                    us[row * svd.rank + k] *= svd.s[k];
                }
            }
            let prev = &m.tensors[j - 1];
            let data = gemm(view(&prev.data, prev.left * 2, l), view(&us, l, svd.rank));
            m.tensors[j - 1] = SiteTensor {
                left: prev.left,
                right: svd.rank,
                data,
            };
        }
        m.form = CanonicalForm::Right;
        m.max_bond = max_bond;
        m.normalize()?;
        Ok((m, discarded))
    }

    /// Normalized `(1 + sign * S) psi`, compressed to `max_bond`, together with
    /// the squared norm of the projected component. `None` when it vanishes.
    pub fn project_sector(&self, symmetry: &SymmetryOp, sign: f64, max_bond: usize) -> Result<Option<(Mps, f64)>> {
        let s_psi = self.apply_product_mpo(&symmetry.mpo)?;
        let sum = Mps::linear_combination(self, C64::new(0.5, 0.0), &s_psi, C64::new(0.5 * sign, 0.0))?;
        let weight = sum.overlap(&sum)?.re;
        if weight.max(0.0).sqrt() <= 1e-8 {
            return Ok(None);
        }
        let (m, _) = sum.compress(max_bond, COMPRESS_CUTOFF)?;
        Ok(Some((m, weight)))
    }
}

fn capped_bonds(n: usize, chi: usize) -> Vec<usize> {
    (0..=n)
        .map(|j| {
            let from_left = 1usize.checked_shl(j.min(62) as u32).unwrap_or(usize::MAX);
            let from_right = 1usize.checked_shl((n - j).min(62) as u32).unwrap_or(usize::MAX);
            from_left.min(from_right).min(chi)
        })
        .collect()
}

fn adjoint(data: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![ZERO; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c].conj();
        }
    }
    out
}

fn identity_defect(g: &[C64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((g[r * n + c] - target).norm());
        }
    }
    worst
}

fn mat_mul2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Weighted sum `cos(theta) plus + e^{i phi} sin(theta) minus`, compressed to
/// one more than the larger input bond dimension and renormalized.
pub fn superpose_sectors(plus: &Mps, minus: &Mps, theta: f64, phi: f64) -> Result<Mps> {
    let ov = plus.overlap(minus)?.norm();
    if ov >= 1e-4 {
        return Err(Error::NotOrthogonal(ov));
    }
    if theta.sin() == 0.0 {
        return Ok(plus.clone());
    }
    let ca = C64::new(theta.cos(), 0.0);
    let cb = C64::from_polar(theta.sin(), phi);
    let sum = Mps::linear_combination(plus, ca, minus, cb)?;
    let cap = plus.current_max_bond().max(minus.current_max_bond()) + 1;
    Ok(sum.compress(cap, COMPRESS_CUTOFF)?.0)
}

/// Random mixing angles for [`superpose_sectors`] drawn from `seed`.
pub fn superposition_angles(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = rng.random_range(0.0..=std::f64::consts::FRAC_PI_2);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    (theta, phi)
}

/// `alpha_+ |plus> + alpha_- |minus>` with seeded random `alpha`.
pub fn random_sector_superposition(plus: &Mps, minus: &Mps, seed: u64) -> Result<Mps> {
    let (theta, phi) = superposition_angles(seed);
    superpose_sectors(plus, minus, theta, phi)
}
