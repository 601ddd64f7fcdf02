//! Thin wrappers over `faer` for the dense kernels used by the tensor-network
//! code, plus a restarted Lanczos eigensolver for matrix-free operators.
//!
//! Tensors throughout the crate are flat row-major `Vec<C64>` buffers; the
//! helpers here view them as matrices without copying.

use faer::linalg::matmul::matmul;
use faer::traits::Conjugate;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

pub(crate) fn view(data: &[C64], rows: usize, cols: usize) -> MatRef<'_, C64> {
    MatRef::from_row_major_slice(data, rows, cols)
}

pub(crate) fn view_mut(data: &mut [C64], rows: usize, cols: usize) -> MatMut<'_, C64> {
    MatMut::from_row_major_slice_mut(data, rows, cols)
}

/// `out = a * b` (or `out += a * b`) into a row-major buffer.
pub(crate) fn gemm_into<A, B>(out: &mut [C64], a: MatRef<'_, A>, b: MatRef<'_, B>, accumulate: bool)
where
    A: Conjugate<Canonical = C64>,
    B: Conjugate<Canonical = C64>,
{
    let (m, n) = (a.nrows(), b.ncols());
    let accum = if accumulate { Accum::Add } else { Accum::Replace };
    matmul(view_mut(out, m, n), accum, a, b, ONE, Par::Seq);
}

pub(crate) fn gemm(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Vec<C64> {
    let mut out = vec![ZERO; a.nrows() * b.ncols()];
    gemm_into(&mut out, a, b, false);
    out
}

/// `a^H * b` for row-major buffers.
pub(crate) fn gemm_adj(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Vec<C64> {
    let mut out = vec![ZERO; a.ncols() * b.ncols()];
    matmul(
        view_mut(&mut out, a.ncols(), b.ncols()),
        Accum::Replace,
        a.adjoint(),
        b,
        ONE,
        Par::Seq,
    );
    out
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn scale(x: &mut [C64], alpha: C64) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

fn is_real(a: MatRef<'_, C64>) -> bool {
    (0..a.ncols()).all(|c| (0..a.nrows()).all(|r| a[(r, c)].im == 0.0))
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
/// Real input takes the (much cheaper) real-symmetric path.
pub fn hermitian_eigen(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    if is_real(a) {
        let re = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)].re);
        let evd = re
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
        let values = evd.S().column_vector().iter().copied().collect();
        let u = evd.U();
        return Ok((values, Mat::from_fn(a.nrows(), a.ncols(), |r, c| C64::new(u[(r, c)], 0.0))));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if is_real(a) {
        let re = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)].re);
        return symmetric_eigenvalues(re.as_ref());
    }
    let mut values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn symmetric_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let mut values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Largest entry of `|A - A^H|`.
pub fn hermitian_defect(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) struct TruncatedSvd {
    /// `rows x rank`, row-major.
    pub u: Vec<C64>,
    pub s: Vec<f64>,
    /// `rank x cols`, row-major.
    pub vh: Vec<C64>,
    pub rank: usize,
    /// Fraction of the squared norm that was dropped.
    pub discarded: f64,
}

/// Thin SVD of a row-major `rows x cols` matrix, keeping at most `max_rank`
/// singular values and dropping those below `rel_cutoff * s_max`.
pub(crate) fn truncated_svd(
    data: &[C64],
    rows: usize,
    cols: usize,
    max_rank: usize,
    rel_cutoff: f64,
) -> Result<TruncatedSvd> {
    let a = view(data, rows, cols);
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))?;
    let all: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    let total: f64 = all.iter().map(|s| s * s).sum();
    let smax = all.first().copied().unwrap_or(0.0);
    let mut rank = all
        .iter()
        .take_while(|&&s| s > rel_cutoff * smax && s > 0.0)
        .count()
        .min(max_rank);
    if rank == 0 {
        rank = 1;
    }
    let kept: f64 = all[..rank].iter().map(|s| s * s).sum();
    let discarded = if total > 0.0 { (1.0 - kept / total).max(0.0) } else { 0.0 };

    let u_full = svd.U();
    let v_full = svd.V();
    let mut u = vec![ZERO; rows * rank];
    for i in 0..rows {
        for k in 0..rank {
            u[i * rank + k] = u_full[(i, k)];
        }
    }
    let mut vh = vec![ZERO; rank * cols];
    for k in 0..rank {
        for j in 0..cols {
            vh[k * cols + j] = v_full[(j, k)].conj();
        }
    }
    Ok(TruncatedSvd {
        u,
        s: all[..rank].to_vec(),
        vh,
        rank,
        discarded,
    })
}

/// Thin QR of a row-major `rows x cols` matrix: `(Q, R, k)` with `k = min(rows, cols)`.
pub(crate) fn thin_qr(data: &[C64], rows: usize, cols: usize) -> (Vec<C64>, Vec<C64>, usize) {
    let a = view(data, rows, cols);
    let qr = a.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R();
    let k = rows.min(cols);
    let mut qv = vec![ZERO; rows * k];
    for i in 0..rows {
        for j in 0..k {
            qv[i * k + j] = q[(i, j)];
        }
    }
    let mut rv = vec![ZERO; k * cols];
    for i in 0..k {
        for j in 0..cols {
            rv[i * cols + j] = r[(i, j)];
        }
    }
    (qv, rv, k)
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    /// Absolute tolerance on the residual norm `|Hx - theta x|`.
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 40,
            tol: 1e-10,
            max_restarts: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub converged: bool,
    pub applications: usize,
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(w, -c, v);
        }
    }
}

/// Lowest eigenpair of a Hermitian operator restricted to the orthogonal
/// complement of `locked`, by explicitly restarted Lanczos with full
/// reorthogonalization.
pub fn lanczos_lowest<F>(
    mut apply: F,
    start: Vec<C64>,
    locked: &[Vec<C64>],
    opts: &LanczosOptions,
) -> RitzPair
where
    F: FnMut(&[C64], &mut [C64]),
{
    let dim = start.len();
    let mut x = start;
    orthogonalize(&mut x, locked);
    let mut nx = norm(&x);
    if nx < 1e-12 {
        // start vector lies in the locked space; use a deterministic fallback
        x = (0..dim)
            .map(|i| C64::new(((i * 7919 + 13) % 101) as f64 - 50.0, ((i * 104729) % 37) as f64 - 18.0))
            .collect();
        orthogonalize(&mut x, locked);
        nx = norm(&x);
    }
    scale(&mut x, C64::new(1.0 / nx, 0.0));

    let mut applications = 0;
    let mut hx = vec![ZERO; dim];
    let mut best = RitzPair {
        value: f64::INFINITY,
        vector: x.clone(),
        residual: f64::INFINITY,
        converged: false,
        applications: 0,
    };
    let kmax = opts.krylov_dim.max(2).min(dim.saturating_sub(locked.len()).max(1));

    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(kmax);
        let mut beta: Vec<f64> = Vec::with_capacity(kmax);
        let mut ritz_y: Vec<f64> = vec![1.0];

        for j in 0..kmax {
            let mut w = vec![ZERO; dim];
            apply(&basis[j], &mut w);
            applications += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            axpy(&mut w, C64::new(-a, 0.0), &basis[j]);
            if j > 0 {
                axpy(&mut w, C64::new(-beta[j - 1], 0.0), &basis[j - 1]);
            }
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);

            let m = alpha.len();
            let t = Mat::<f64>::from_fn(m, m, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let evd = t
                .self_adjoint_eigen(Side::Lower)
                .expect("tridiagonal eigendecomposition");
            let s = evd.S().column_vector();
            let (mut imin, mut vmin) = (0, f64::INFINITY);
            for i in 0..m {
                if s[i] < vmin {
                    vmin = s[i];
                    imin = i;
                }
            }
            ritz_y = (0..m).map(|r| evd.U()[(r, imin)]).collect();
            let estimate = b * ritz_y[m - 1].abs();

            if estimate < opts.tol * 0.1 || b < 1e-14 || j + 1 == kmax {
                break;
            }
            beta.push(b);
            let mut next = w;
            scale(&mut next, C64::new(1.0 / b, 0.0));
            basis.push(next);
        }

        let mut y = vec![ZERO; dim];
        for (coef, v) in ritz_y.iter().zip(&basis) {
            axpy(&mut y, C64::new(*coef, 0.0), v);
        }
        orthogonalize(&mut y, locked);
        let ny = norm(&y);
        scale(&mut y, C64::new(1.0 / ny, 0.0));

        apply(&y, &mut hx);
        applications += 1;
        let rq = dot(&y, &hx).re;
        let mut r = hx.clone();
        axpy(&mut r, C64::new(-rq, 0.0), &y);
        orthogonalize(&mut r, locked);
        let residual = norm(&r);

        best = RitzPair {
            value: rq,
            vector: y.clone(),
            residual,
            converged: residual <= opts.tol,
            applications,
        };
        if best.converged {
            break;
        }
        x = y;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_apply(d: &[f64]) -> impl FnMut(&[C64], &mut [C64]) + '_ {
        move |x, y| {
            for i in 0..d.len() {
                y[i] = x[i] * d[i];
            }
        }
    }

    #[test]
    fn lanczos_finds_lowest_of_diagonal() {
        let d: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.1).collect();
        let start = vec![ONE; 50];
        let r = lanczos_lowest(diag_apply(&d), start, &[], &LanczosOptions::default());
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(r.converged);
        assert!((r.value - min).abs() < 1e-12);
    }

    #[test]
    fn lanczos_respects_locked_vectors() {
        let d = vec![0.0, 1.0, 2.0, 3.0];
        let e0 = vec![ONE, ZERO, ZERO, ZERO];
        let r = lanczos_lowest(diag_apply(&d), vec![ONE; 4], &[e0], &LanczosOptions::default());
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_truncation_keeps_largest() {
        // rank-2 matrix
        let rows = 4;
        let cols = 3;
        let mut a = vec![ZERO; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                a[i * cols + j] = C64::new((i + 1) as f64 * (j + 1) as f64, 0.0)
                    + C64::new(0.0, 1e-3 * (i as f64 - j as f64));
            }
        }
        let full = truncated_svd(&a, rows, cols, 10, 0.0).unwrap();
        let cut = truncated_svd(&a, rows, cols, 1, 0.0).unwrap();
        assert_eq!(cut.rank, 1);
        assert!((cut.s[0] - full.s[0]).abs() < 1e-12);
        assert!(cut.discarded > 0.0 && cut.discarded < 1e-6);
        // reconstruct with full rank
        let mut us = full.u.clone();
        for i in 0..rows {
            for k in 0..full.rank {
                us[i * full.rank + k] *= full.s[k];
            }
        }
        let rec = gemm(view(&us, rows, full.rank), view(&full.vh, full.rank, cols));
        for (x, y) in rec.iter().zip(&a) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn qr_reconstructs() {
        let rows = 6;
        let cols = 4;
        let a: Vec<C64> = (0..rows * cols)
            .map(|i| C64::new((i as f64).cos(), (i as f64 * 0.3).sin()))
            .collect();
        let (q, r, k) = thin_qr(&a, rows, cols);
        let rec = gemm(view(&q, rows, k), view(&r, k, cols));
        for (x, y) in rec.iter().zip(&a) {
            assert!((x - y).norm() < 1e-12);
        }
        let qhq = gemm_adj(view(&q, rows, k), view(&q, rows, k));
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((qhq[i * k + j] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }
}
