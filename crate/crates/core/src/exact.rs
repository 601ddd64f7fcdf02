//! Exact ground-space solver for small chains, used as the reference for
//! every approximate routine in the crate.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::hamiltonian::{PauliSum, SymmetryOp, DENSE_SITE_LIMIT, ORACLE_SITE_LIMIT};
use crate::linalg::{self, hermitian_defect, lanczos_lowest, LanczosOptions, C64, ZERO};

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub energy: f64,
    pub vector: Vec<C64>,
}

/// Relative energy window for ground-space membership.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// The `count` lowest eigenpairs of a dense Hermitian matrix, energies ascending.
pub fn lowest_eigenpairs(h: MatRef<'_, C64>, count: usize) -> Result<Vec<EigenPair>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.ncols(),
        });
    }
    if count == 0 || count > n {
        return Err(Error::InvalidParams(format!(
            "requested {count} eigenpairs of a {n}-dimensional matrix"
        )));
    }
    let defect = hermitian_defect(h);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let (vals, vecs) = linalg::hermitian_eigen(h)?;
    Ok((0..count)
        .map(|i| EigenPair {
            energy: vals[i],
            vector: (0..n).map(|r| vecs[(r, i)]).collect(),
        })
        .collect())
}

/// The `count` lowest eigenpairs of a Pauli-sum operator. Dense
/// diagonalization up to 12 sites, restarted Lanczos with locking for 13 and 14.
pub fn lowest_eigenpairs_of(op: &PauliSum, count: usize) -> Result<Vec<EigenPair>> {
    if op.n_sites <= DENSE_SITE_LIMIT {
        let dense = op.to_dense()?;
        return lowest_eigenpairs(dense.as_ref(), count);
    }
    if op.n_sites > ORACLE_SITE_LIMIT {
        return Err(Error::TooLarge {
            n_sites: op.n_sites,
            limit: ORACLE_SITE_LIMIT,
        });
    }
    let dim = op.dim();
    let opts = LanczosOptions {
        krylov_dim: 60,
        tol: 1e-10,
        max_restarts: 200,
    };
    let mut found: Vec<EigenPair> = Vec::with_capacity(count);
    for i in 0..count {
        let start: Vec<C64> = (0..dim)
            .map(|b| {
                let t = (b as f64 + 1.0) * (0.618_033_988_75 + i as f64 * 0.1);
                C64::new(t.sin(), (1.7 * t).cos())
            })
            .collect();
        let locked: Vec<Vec<C64>> = found.iter().map(|p| p.vector.clone()).collect();
        let ritz = lanczos_lowest(|x, y| op.apply(x, y), start, &locked, &opts);
        if !ritz.converged {
            return Err(Error::Numerical(format!(
                "Lanczos did not converge for eigenpair {i} (residual {:.2e})",
                ritz.residual
            )));
        }
        found.push(EigenPair {
            energy: ritz.value,
            vector: ritz.vector,
        });
    }
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(found)
}

/// Members of `pairs` within the degeneracy window of the lowest energy.
pub fn ground_space(pairs: &[EigenPair]) -> &[EigenPair] {
    let Some(first) = pairs.first() else {
        return pairs;
    };
    let tol = DEGENERACY_TOL * first.energy.abs().max(1.0);
    let n = pairs
        .iter()
        .take_while(|p| (p.energy - first.energy).abs() < tol)
        .count();
    &pairs[..n]
}

fn check_unit(v: &[C64]) -> Result<()> {
    let dev = (linalg::norm(v) - 1.0).abs();
    if dev > 1e-8 {
        return Err(Error::NotNormalized(dev));
    }
    Ok(())
}

/// `|<a|b>|^2` for unit vectors.
pub fn dense_fidelity(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    check_unit(a)?;
    check_unit(b)?;
    Ok(linalg::dot(a, b).norm_sqr().min(1.0))
}

/// Weight of `v` inside the span of the orthonormal vectors `space`.
pub fn subspace_fidelity(v: &[C64], space: &[EigenPair]) -> f64 {
    space.iter().map(|p| linalg::dot(&p.vector, v).norm_sqr()).sum()
}

/// `(1 + sign * S) v / |...|`, or `None` when the projection vanishes.
pub fn project_symmetry_sector(v: &[C64], symmetry: MatRef<'_, C64>, sign: f64) -> Option<Vec<C64>> {
    let n = v.len();
    let mut out: Vec<C64> = v.to_vec();
    for r in 0..n {
        let mut acc = ZERO;
        for c in 0..n {
            acc += symmetry[(r, c)] * v[c];
        }
        out[r] += acc * sign;
    }
    normalize_or_none(out)
}

/// Same as [`project_symmetry_sector`] for a product-of-`sigma_z` symmetry,
/// which acts diagonally in the computational basis.
pub fn project_product_sector(v: &[C64], symmetry: &SymmetryOp, sign: f64) -> Option<Vec<C64>> {
    let out = v
        .iter()
        .enumerate()
        .map(|(b, &x)| x * (1.0 + sign * diagonal_sign(symmetry, b)))
        .collect();
    normalize_or_none(out)
}

/// Eigenvalue of a product-of-`sigma_z` symmetry on basis state `index`.
pub fn diagonal_sign(symmetry: &SymmetryOp, index: usize) -> f64 {
    let n = symmetry.n_sites;
    let bits: Vec<u8> = (0..n).map(|j| ((index >> (n - 1 - j)) & 1) as u8).collect();
    symmetry.eigenvalue_on_basis(&bits)
}

fn normalize_or_none(mut v: Vec<C64>) -> Option<Vec<C64>> {
    let nv = linalg::norm(&v);
    if nv <= 1e-8 {
        return None;
    }
    linalg::scale(&mut v, C64::new(1.0 / nv, 0.0));
    Some(v)
}

/// `<v|A|v>` for a dense operator.
pub fn dense_expectation(a: MatRef<'_, C64>, v: &[C64]) -> C64 {
    let mut acc = ZERO;
    for r in 0..v.len() {
        let mut row = ZERO;
        for c in 0..v.len() {
            row += a[(r, c)] * v[c];
        }
        acc += v[r].conj() * row;
    }
    acc
}

/// Dense matrix-vector product.
pub fn dense_apply(a: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; a.nrows()];
    for (r, o) in out.iter_mut().enumerate() {
        for (c, x) in v.iter().enumerate() {
            *o += a[(r, c)] * x;
        }
    }
    out
}

/// Largest principal-angle sine between two subspaces given by orthonormal bases.
pub fn max_principal_angle_sine(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    if a.len() != b.len() || a.is_empty() {
        return 1.0;
    }
    let m = Mat::<C64>::from_fn(a.len(), b.len(), |i, j| linalg::dot(&a[i], &b[j]));
    let s = m.singular_values().unwrap_or_default();
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min).min(1.0);
    (1.0 - smin * smin).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_dense, build_symmetry, pauli_sum, Model, ModelParams, SymmetryKind};

    #[test]
    fn diagonal_matrix() {
        let h = Mat::<C64>::from_fn(4, 4, |r, c| if r == c { C64::new(r as f64, 0.0) } else { ZERO });
        let pairs = lowest_eigenpairs(h.as_ref(), 2).unwrap();
        assert_eq!(pairs[0].energy, 0.0);
        assert_eq!(pairs[1].energy, 1.0);
        assert!((pairs[0].vector[0].norm() - 1.0).abs() < 1e-14);
        assert!((pairs[1].vector[1].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = Mat::<C64>::zeros(3, 3);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(lowest_eigenpairs(h.as_ref(), 1), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn classical_doublet() {
        let h = build_dense(&ModelParams::annni(8, 0.0, 0.0)).unwrap();
        let pairs = lowest_eigenpairs(h.as_ref(), 3).unwrap();
        assert!((pairs[0].energy + 7.0).abs() < 1e-10);
        assert!((pairs[1].energy - pairs[0].energy).abs() < 1e-10);
        assert_eq!(ground_space(&pairs).len(), 2);
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_rayleigh_consistent() {
        let h = build_dense(&ModelParams::cluster(7, -0.4, 0.6)).unwrap();
        let pairs = lowest_eigenpairs(h.as_ref(), 4).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            assert!((linalg::norm(&p.vector) - 1.0).abs() < 1e-12);
            let rq = dense_expectation(h.as_ref(), &p.vector);
            assert!((rq.re - p.energy).abs() < 1e-10);
            for q in &pairs[i + 1..] {
                assert!(linalg::dot(&p.vector, &q.vector).norm() < 1e-10);
                assert!(q.energy >= p.energy);
            }
        }
    }

    #[test]
    fn fidelity_basics() {
        let a = vec![C64::new(1.0, 0.0), ZERO];
        let b = vec![ZERO, C64::new(0.0, 1.0)];
        assert_eq!(dense_fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(dense_fidelity(&a, &b).unwrap(), 0.0);
        assert!(dense_fidelity(&[C64::new(2.0, 0.0)], &[C64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn bell_state_projection() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(r, 0.0)];
        let zz = Mat::<C64>::from_fn(4, 4, |i, j| {
            if i != j {
                ZERO
            } else if i == 0 || i == 3 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            }
        });
        let even = project_symmetry_sector(&v, zz.as_ref(), 1.0).unwrap();
        for (x, y) in even.iter().zip(&v) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(project_symmetry_sector(&v, zz.as_ref(), -1.0).is_none());
    }

    #[test]
    fn doublet_projections_span_ground_space() {
        let n = 8;
        let h = build_dense(&ModelParams::annni(n, 0.0, 0.1)).unwrap();
        let par = build_symmetry(Model::Annni, n, SymmetryKind::ParityZ).unwrap();
        let pd = par.to_dense().unwrap();
        let pairs = lowest_eigenpairs(h.as_ref(), 2).unwrap();
        let mixed: Vec<C64> = pairs[0]
            .vector
            .iter()
            .zip(&pairs[1].vector)
            .map(|(a, b)| a * 0.6 + b * 0.8)
            .collect();
        let plus = project_symmetry_sector(&mixed, pd.as_ref(), 1.0).unwrap();
        let minus = project_symmetry_sector(&mixed, pd.as_ref(), -1.0).unwrap();
        assert!((dense_expectation(pd.as_ref(), &plus).re - 1.0).abs() < 1e-8);
        assert!((dense_expectation(pd.as_ref(), &minus).re + 1.0).abs() < 1e-8);
        let fast = project_product_sector(&mixed, &par, 1.0).unwrap();
        for (x, y) in fast.iter().zip(&plus) {
            assert!((x - y).norm() < 1e-12);
        }
        let doublet: Vec<_> = pairs.iter().map(|p| p.vector.clone()).collect();
        assert!(max_principal_angle_sine(&doublet, &[plus, minus]) < 1e-6);
    }

    #[test]
    fn thirteen_sites_use_lanczos() {
        let op = pauli_sum(&ModelParams::annni(13, 0.0, 0.0)).unwrap();
        let pairs = lowest_eigenpairs_of(&op, 1).unwrap();
        assert!((pairs[0].energy + 12.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_free_path_matches_dense() {
        let p = ModelParams::annni(10, 0.3, 0.5);
        let op = pauli_sum(&p).unwrap();
        let dense = lowest_eigenpairs(op.to_dense().unwrap().as_ref(), 2).unwrap();
        let opts = LanczosOptions {
            krylov_dim: 60,
            tol: 1e-10,
            max_restarts: 200,
        };
        let start: Vec<C64> = (0..op.dim()).map(|b| C64::new((b as f64).sin(), 0.3)).collect();
        let r0 = lanczos_lowest(|x, y| op.apply(x, y), start.clone(), &[], &opts);
        let r1 = lanczos_lowest(|x, y| op.apply(x, y), start, &[r0.vector.clone()], &opts);
        assert!((r0.value - dense[0].energy).abs() < 1e-9);
        assert!((r1.value - dense[1].energy).abs() < 1e-9);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn pairs_are_orthonormal_and_ascending(
            cluster in proptest::bool::ANY,
            n in 3usize..8,
            k in 0.0f64..1.0,
            h in 0.0f64..2.0,
            count in 1usize..5,
        ) {
            let p = if cluster { ModelParams::cluster(n, k, h) } else { ModelParams::annni(n, k, h) };
            let pairs = lowest_eigenpairs(build_dense(&p).unwrap().as_ref(), count).unwrap();
            proptest::prop_assert_eq!(pairs.len(), count);
            for (i, a) in pairs.iter().enumerate() {
                proptest::prop_assert!((linalg::norm(&a.vector) - 1.0).abs() < 1e-12);
                for b in &pairs[i + 1..] {
                    proptest::prop_assert!(b.energy >= a.energy);
                    proptest::prop_assert!(linalg::dot(&a.vector, &b.vector).norm() < 1e-10);
                }
            }
        }
    }
}
