//! Fidelity Gram matrices and kernel rows.
//!
//! Both the real fidelity kernel `|<a|b>|^2` and the complex overlap matrix
//! used by the generalization bound come from one pass of MPS overlaps.

use std::fmt::Write as _;

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, symmetric_eigenvalues, C64};
use crate::mps::Mps;

/// Per-state metadata carried alongside kernel rows and trained models.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMeta {
    pub k: f64,
    pub h: f64,
    /// Joint sector signs written as `+`/`-` characters, `?` when undetermined.
    pub sector: String,
    pub label: String,
}

/// `+`/`-` encoding of a sector sign pattern; anything not within 1e-6 of
/// `+-1` becomes `?`.
pub fn sector_tag(signs: &[f64]) -> String {
    if signs.is_empty() {
        return "none".into();
    }
    signs
        .iter()
        .map(|&s| {
            if (s - 1.0).abs() < 1e-6 {
                '+'
            } else if (s + 1.0).abs() < 1e-6 {
                '-'
            } else {
                '?'
            }
        })
        .collect()
}

/// Hermitian matrix of raw overlaps `<psi_j|psi_k>` with an exact unit diagonal.
#[derive(Clone, Debug)]
pub struct Overlaps {
    pub n: usize,
    pub entries: Vec<C64>,
}

impl Overlaps {
    pub fn compute(states: &[Mps]) -> Result<Self> {
        check_sizes(states)?;
        let n = states.len();
        for (i, s) in states.iter().enumerate() {
            let dev = (s.overlap(s)?.re - 1.0).abs();
            if dev > 1e-8 {
                return Err(Error::InvalidParams(format!("state {i} is not normalized (deviation {dev:.3e})")));
            }
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| states[i].overlap(&states[j]))
            .collect::<Result<Vec<C64>>>()?;
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = C64::new(1.0, 0.0);
        }
        for (&(i, j), v) in pairs.iter().zip(values) {
            entries[i * n + j] = v;
            entries[j * n + i] = v.conj();
        }
        Ok(Self { n, entries })
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.n + j]
    }

    pub fn submatrix(&self, indices: &[usize]) -> Overlaps {
        let n = indices.len();
        let entries = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.at(i, j))
            .collect();
        Overlaps { n, entries }
    }

    /// Fidelity Gram matrix from these overlaps.
    pub fn fidelity(&self) -> GramMatrix {
        GramMatrix {
            n: self.n,
            entries: self.entries.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    /// Overlap matrix normalized by the sample count.
    pub fn normalized(&self) -> OverlapMatrix {
        OverlapMatrix {
            m: self.n,
            raw: self.clone(),
        }
    }
}

fn check_sizes(states: &[Mps]) -> Result<()> {
    if let Some(first) = states.first() {
        for s in states {
            first.check_same_size(s)?;
        }
    }
    Ok(())
}

/// Real symmetric fidelity kernel matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl GramMatrix {
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Principal submatrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> GramMatrix {
        let entries = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.at(i, j))
            .collect();
        GramMatrix {
            n: indices.len(),
            entries,
        }
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        if self.n == 0 {
            return Ok(0.0);
        }
        let m = Mat::from_fn(self.n, self.n, |i, j| self.at(i, j));
        Ok(symmetric_eigenvalues(m.as_ref())?[0])
    }

    /// Row-major CSV with 17 significant digits, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| Error::format("Gram CSV", format!("bad number {v:?}"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::format("Gram CSV", "matrix is not square"));
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }
}

/// `K_jk = <psi_j|psi_k> / m` for `m` sampled states.
#[derive(Clone, Debug)]
pub struct OverlapMatrix {
    pub m: usize,
    pub raw: Overlaps,
}

impl OverlapMatrix {
    pub fn at(&self, j: usize, k: usize) -> C64 {
        self.raw.at(j, k) / self.m as f64
    }

    pub fn to_mat(&self) -> Mat<C64> {
        Mat::from_fn(self.m, self.m, |j, k| self.at(j, k))
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|j| self.at(j, j).re).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(self.to_mat().as_ref())
    }
}

/// `|<psi_n|psi_m>|^2` for all pairs.
pub fn gram_fidelity(states: &[Mps]) -> Result<GramMatrix> {
    Ok(Overlaps::compute(states)?.fidelity())
}

/// `<psi_j|psi_k> / m` for all pairs.
pub fn gram_overlap(states: &[Mps]) -> Result<OverlapMatrix> {
    Ok(Overlaps::compute(states)?.normalized())
}

/// `<psi_n|test>` for every training state.
pub fn overlap_row(test: &Mps, train: &[Mps]) -> Result<Vec<C64>> {
    check_sizes(train)?;
    train
        .par_iter()
        .map(|t| {
            test.check_same_size(t)?;
            t.overlap(test)
        })
        .collect()
}

/// `|<psi_n|test>|^2` for every training state.
pub fn kernel_row(test: &Mps, train: &[Mps]) -> Result<Vec<f64>> {
    Ok(overlap_row(test, train)?.iter().map(|z| z.norm_sqr()).collect())
}

/// Sidecar CSV describing each Gram index.
pub fn metadata_csv(meta: &[PointMeta]) -> String {
    let mut out = String::from("index,k,h,sector,label\n");
    for (i, m) in meta.iter().enumerate() {
        let _ = writeln!(out, "{i},{:?},{:?},{},{}", m.k, m.h, m.sector, m.label);
    }
    out
}

/// Mean kernel value inside and across groups (diagonal excluded).
pub fn within_across_means(gram: &GramMatrix, groups: &[usize]) -> (f64, f64) {
    let (mut win, mut nwin, mut acr, mut nacr) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..gram.n {
        for j in 0..gram.n {
            if i == j {
                continue;
            }
            if groups[i] == groups[j] {
                win += gram.at(i, j);
                nwin += 1;
            } else {
                acr += gram.at(i, j);
                nacr += 1;
            }
        }
    }
    (win / nwin.max(1) as f64, acr / nacr.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::lowest_eigenpairs;
    use crate::hamiltonian::{build_dense, build_mpo, model_symmetries, Model, ModelParams};
    use crate::mps::{lowest_sector_states, DmrgOptions};
    use proptest::prelude::*;

    fn random_states(n_sites: usize, count: usize, seed: u64) -> Vec<Mps> {
        (0..count).map(|i| Mps::random(n_sites, 4, seed + i as u64).unwrap()).collect()
    }

    fn dense_overlap(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn diagonal_is_one() {
        let g = gram_fidelity(&random_states(6, 5, 1)).unwrap();
        for i in 0..5 {
            assert_eq!(g.at(i, i), 1.0);
        }
    }

    #[test]
    fn matches_dense_fidelities() {
        let states = random_states(8, 6, 11);
        let dense: Vec<Vec<C64>> = states.iter().map(|s| s.to_dense().unwrap()).collect();
        let g = gram_fidelity(&states).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = dense_overlap(&dense[i], &dense[j]).norm_sqr();
                assert!((g.at(i, j) - want).abs() < 1e-10);
            }
        }
        let test = Mps::random(8, 3, 99).unwrap();
        let td = test.to_dense().unwrap();
        let row = kernel_row(&test, &states).unwrap();
        for i in 0..6 {
            assert!((row[i] - dense_overlap(&dense[i], &td).norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn parity_partners_have_zero_kernel() {
        let n = 8;
        let mpo = build_mpo(&ModelParams::annni(n, 0.0, 0.1)).unwrap();
        let syms = model_symmetries(Model::Annni, n).unwrap();
        let res = lowest_sector_states(&mpo, &syms, 2, 16, &DmrgOptions::default()).unwrap();
        let states: Vec<Mps> = res.ground_space().iter().map(|s| s.state.clone()).collect();
        assert_eq!(states.len(), 2);
        let g = gram_fidelity(&states).unwrap();
        assert!(g.at(0, 1) < 1e-20);
        // sanity against the dense spectrum
        let dense = lowest_eigenpairs(build_dense(&ModelParams::annni(n, 0.0, 0.1)).unwrap().as_ref(), 2).unwrap();
        assert!((dense[1].energy - dense[0].energy).abs() < 1e-6);
    }

    #[test]
    fn identical_states_are_rank_one() {
        let s = Mps::random(6, 4, 5).unwrap();
        let k = gram_overlap(&vec![s; 4]).unwrap();
        let ev = k.eigenvalues().unwrap();
        assert!((ev[3] - 1.0).abs() < 1e-12);
        assert!(ev[..3].iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn orthonormal_states_give_scaled_identity() {
        let states: Vec<Mps> = (0..4).map(|b| Mps::product(&[b & 1, (b >> 1) & 1, 0]).unwrap()).collect();
        let k = gram_overlap(&states).unwrap();
        for j in 0..4 {
            for l in 0..4 {
                let want = if j == l { 0.25 } else { 0.0 };
                assert!((k.at(j, l) - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        let test = Mps::product(&[1, 1, 1]).unwrap();
        assert!(kernel_row(&test, &states).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn kernel_row_peaks_on_own_index() {
        let states = random_states(6, 4, 21);
        let row = kernel_row(&states[2], &states).unwrap();
        assert!((row[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let a = Mps::random(6, 2, 1).unwrap();
        let b = Mps::random(7, 2, 1).unwrap();
        assert!(gram_fidelity(&[a.clone(), b.clone()]).is_err());
        assert!(kernel_row(&a, &[b]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = gram_fidelity(&random_states(5, 4, 3)).unwrap();
        assert_eq!(GramMatrix::from_csv(&g.to_csv()).unwrap(), g);
    }

    proptest! {
        #[test]
        fn gram_is_psd_and_bounded(seed in 0u64..500, count in 1usize..7) {
            let g = gram_fidelity(&random_states(6, count, seed)).unwrap();
            prop_assert!(g.entries.iter().all(|&x| (0.0..=1.0 + 1e-10).contains(&x)));
            for i in 0..count {
                for j in 0..count {
                    prop_assert_eq!(g.at(i, j), g.at(j, i));
                }
            }
            prop_assert!(g.min_eigenvalue().unwrap() > -1e-8);
        }

        #[test]
        fn fidelity_is_squared_overlap(seed in 0u64..500, count in 1usize..6) {
            let ov = Overlaps::compute(&random_states(5, count, seed)).unwrap();
            let g = ov.fidelity();
            let k = ov.normalized();
            prop_assert!((k.trace() - 1.0).abs() < 1e-8);
            for i in 0..count {
                for j in 0..count {
                    prop_assert_eq!(g.at(i, j), ov.at(i, j).norm_sqr());
                    prop_assert!(((k.at(i, j) * count as f64).norm_sqr() - g.at(i, j)).abs() < 1e-14);
                }
            }
        }
    }
}
