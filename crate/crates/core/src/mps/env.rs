//! Left/right environment contractions shared by expectation values, overlaps
//! and the DMRG effective Hamiltonian.

use crate::hamiltonian::MpoSite;
use crate::linalg::{gemm, gemm_into, view, C64, ONE, ZERO};

use super::SiteTensor;

/// One non-zero element `W[wl, out, in, wr]` of an MPO site tensor.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Entry {
    pub wl: usize,
    pub wr: usize,
    pub out: usize,
    pub inp: usize,
    pub coeff: C64,
}

#[derive(Clone, Debug)]
pub(crate) struct SparseSite {
    pub left: usize,
    pub right: usize,
    pub entries: Vec<Entry>,
}

impl SparseSite {
    pub fn from_mpo(site: &MpoSite) -> Self {
        let mut entries = Vec::new();
        for wl in 0..site.left {
            for out in 0..2 {
                for inp in 0..2 {
                    for wr in 0..site.right {
                        let coeff = site.at(wl, out, inp, wr);
                        if coeff != ZERO {
                            entries.push(Entry {
                                wl,
                                wr,
                                out,
                                inp,
                                coeff,
                            });
                        }
                    }
                }
            }
        }
        Self {
            left: site.left,
            right: site.right,
            entries,
        }
    }

    pub fn identity() -> Self {
        Self {
            left: 1,
            right: 1,
            entries: (0..2)
                .map(|s| Entry {
                    wl: 0,
                    wr: 0,
                    out: s,
                    inp: s,
                    coeff: ONE,
                })
                .collect(),
        }
    }
}

/// Environment blocks, one matrix per MPO bond index.
///
/// Left environments are stored `(bra, ket)`, right environments `(ket, bra)`.
#[derive(Clone, Debug)]
pub(crate) struct Env {
    pub rows: usize,
    pub cols: usize,
    pub blocks: Vec<Vec<C64>>,
}

impl Env {
    pub fn trivial() -> Self {
        Self {
            rows: 1,
            cols: 1,
            blocks: vec![vec![ONE]],
        }
    }
}

/// Absorb one site into a left environment.
pub(crate) fn extend_left(env: &Env, bra: &SiteTensor, op: &SparseSite, ket: &SiteTensor) -> Env {
    let (bl, br) = (bra.left, bra.right);
    let (kl, kr) = (ket.left, ket.right);
    debug_assert_eq!(env.rows, bl);
    debug_assert_eq!(env.cols, kl);
    // t[w] = L[w] . ket, laid out [bra_l, in, ket_r]
    let t: Vec<Vec<C64>> = env
        .blocks
        .iter()
        .map(|l| gemm(view(l, bl, kl), view(&ket.data, kl, 2 * kr)))
        .collect();
    let mut u = vec![vec![ZERO; bl * 2 * kr]; op.right];
    for e in &op.entries {
        let src = &t[e.wl];
        let dst = &mut u[e.wr];
        for a in 0..bl {
            let s = &src[(a * 2 + e.inp) * kr..(a * 2 + e.inp + 1) * kr];
            let d = &mut dst[(a * 2 + e.out) * kr..(a * 2 + e.out + 1) * kr];
            for (x, y) in d.iter_mut().zip(s) {
                *x += e.coeff * y;
            }
        }
    }
    let bra_m = view(&bra.data, bl * 2, br);
    let blocks = u
        .iter()
        .map(|ub| {
            let mut out = vec![ZERO; br * kr];
            gemm_into(&mut out, bra_m.adjoint(), view(ub, bl * 2, kr), false);
            out
        })
        .collect();
    Env {
        rows: br,
        cols: kr,
        blocks,
    }
}

/// Absorb one site into a right environment.
pub(crate) fn extend_right(env: &Env, bra: &SiteTensor, op: &SparseSite, ket: &SiteTensor) -> Env {
    let (bl, br) = (bra.left, bra.right);
    let (kl, kr) = (ket.left, ket.right);
    debug_assert_eq!(env.rows, kr);
    debug_assert_eq!(env.cols, br);
    // t[w'] = ket . R[w'], laid out [ket_l, in, bra_r]
    let t: Vec<Vec<C64>> = env
        .blocks
        .iter()
        .map(|r| gemm(view(&ket.data, kl * 2, kr), view(r, kr, br)))
        .collect();
    let mut u = vec![vec![ZERO; kl * 2 * br]; op.left];
    for e in &op.entries {
        let src = &t[e.wr];
        let dst = &mut u[e.wl];
        for a in 0..kl {
            let s = &src[(a * 2 + e.inp) * br..(a * 2 + e.inp + 1) * br];
            let d = &mut dst[(a * 2 + e.out) * br..(a * 2 + e.out + 1) * br];
            for (x, y) in d.iter_mut().zip(s) {
                *x += e.coeff * y;
            }
        }
    }
    let bra_m = view(&bra.data, bl, 2 * br);
    let blocks = u
        .iter()
        .map(|ub| {
            let mut out = vec![ZERO; kl * bl];
            gemm_into(&mut out, view(ub, kl, 2 * br), bra_m.adjoint(), false);
            out
        })
        .collect();
    Env {
        rows: kl,
        cols: bl,
        blocks,
    }
}
