//! The trained classifier as a Hermitian observable
//! `Lambda = sum_n y_n alpha_n |psi_n><psi_n|`: dense materialization,
//! expectation, exact variance from overlaps, and finite-shot estimates.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hamiltonian::DENSE_SITE_LIMIT;
use crate::kernel::{overlap_row, Overlaps};
use crate::linalg::{C64, ZERO};
use crate::mps::Mps;
use crate::svm::TrainedModel;

const VARIANCE_TOL: f64 = 1e-10;

fn check_len(model: &TrainedModel, got: usize) -> Result<()> {
    if got != model.len() {
        return Err(Error::DimensionMismatch {
            expected: model.len(),
            got,
        });
    }
    Ok(())
}

/// `Lambda` as a dense matrix; only for small chains.
pub fn materialize_dense(model: &TrainedModel, train: &[Mps]) -> Result<Mat<C64>> {
    check_len(model, train.len())?;
    let n_sites = train.first().map_or(0, Mps::n_sites);
    if n_sites > DENSE_SITE_LIMIT {
        return Err(Error::TooLarge {
            n_sites,
            limit: DENSE_SITE_LIMIT,
        });
    }
    let dim = 1usize << n_sites;
    let mut lambda = Mat::<C64>::zeros(dim, dim);
    for (coef, state) in model.signed_coeffs().into_iter().zip(train) {
        if coef == 0.0 {
            continue;
        }
        let v = state.to_dense()?;
        for i in 0..dim {
            let vi = v[i] * coef;
            if vi == ZERO {
                continue;
            }
            for j in 0..dim {
                lambda[(i, j)] += vi * v[j].conj();
            }
        }
    }
    Ok(lambda)
}

/// `sum_n y_n alpha_n row_n`, the margin without the bias.
pub fn expectation(model: &TrainedModel, row: &[f64]) -> Result<f64> {
    check_len(model, row.len())?;
    Ok(model.signed_coeffs().iter().zip(row).map(|(c, r)| c * r).sum())
}

/// Variance of `Lambda` in a pure state, from the overlaps `o_n = <psi_n|psi>`
/// and the training overlaps `G_nm = <psi_n|psi_m>`:
/// `sum_nm c_n c_m (conj(o_n) G_nm o_m - |o_n|^2 |o_m|^2)`.
pub fn variance_from_overlaps(coeffs: &[f64], test_overlaps: &[C64], train_overlaps: &Overlaps) -> Result<f64> {
    let n = coeffs.len();
    if test_overlaps.len() != n || train_overlaps.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: test_overlaps.len().min(train_overlaps.n),
        });
    }
    let active: Vec<usize> = (0..n).filter(|&i| coeffs[i] != 0.0).collect();
    let mut second = C64::new(0.0, 0.0);
    let mut first = 0.0;
    for &a in &active {
        first += coeffs[a] * test_overlaps[a].norm_sqr();
        for &b in &active {
            second += coeffs[a] * coeffs[b] * test_overlaps[a].conj() * train_overlaps.at(a, b) * test_overlaps[b];
        }
    }
    let scale = coeffs.iter().map(|c| c.abs()).sum::<f64>().powi(2).max(1.0);
    if second.im.abs() > VARIANCE_TOL * scale {
        return Err(Error::ImaginaryResidue(second.im));
    }
    let var = second.re - first * first;
    if var < -VARIANCE_TOL * scale {
        return Err(Error::NegativeVariance(var));
    }
    Ok(var.max(0.0))
}

/// Exact variance of `Lambda` in `test`.
pub fn variance(model: &TrainedModel, train: &[Mps], test: &Mps) -> Result<f64> {
    check_len(model, train.len())?;
    let support = model.support_indices();
    let states: Vec<Mps> = support.iter().map(|&i| train[i].clone()).collect();
    let coeffs: Vec<f64> = {
        let all = model.signed_coeffs();
        support.iter().map(|&i| all[i]).collect()
    };
    let g = Overlaps::compute(&states)?;
    let o = overlap_row(test, &states)?;
    variance_from_overlaps(&coeffs, &o, &g)
}

/// `((sum alpha)^2, (C N_S)^2)`, the two upper bounds on the variance.
pub fn hoelder_bound(model: &TrainedModel) -> (f64, f64) {
    let s: f64 = model.alphas.iter().sum();
    let cns = model.c * model.support_indices().len() as f64;
    (s * s, cns * cns)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub shots: u64,
    pub seed: u64,
}

/// Sample mean and standard error of `shots` Gaussian draws with the given
/// first two moments.
pub fn simulate_shots(expectation: f64, variance: f64, shots: u64, seed: u64) -> Result<ShotEstimate> {
    if !(variance >= 0.0) || shots == 0 {
        return Err(Error::InvalidParams(format!(
            "need variance >= 0 and shots >= 1 (got {variance}, {shots})"
        )));
    }
    let normal = Normal::new(expectation, variance.sqrt()).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford, so constant samples give the exact mean
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 1..=shots {
        let x = normal.sample(&mut rng);
        let d = x - mean;
        mean += d / i as f64;
        m2 += d * (x - mean);
    }
    let sample_var = if shots > 1 { m2 / (shots - 1) as f64 } else { 0.0 };
    Ok(ShotEstimate {
        mean,
        std_error: (sample_var / shots as f64).sqrt(),
        shots,
        seed,
    })
}

/// Shots for a two-sigma resolution of `margin`: `ceil(4 Var / margin^2)`,
/// at least one. `None` for a zero margin.
pub fn shots_for_2sigma(variance: f64, margin: f64) -> Option<u64> {
    if margin == 0.0 {
        return None;
    }
    Some(((4.0 * variance / (margin * margin)).ceil() as u64).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::dense_expectation;
    use crate::kernel::{gram_fidelity, kernel_row, PointMeta};
    use crate::svm::{decide_binary, train_binary};

    fn meta(n: usize) -> Vec<PointMeta> {
        vec![
            PointMeta {
                k: 0.0,
                h: 0.0,
                sector: "+".into(),
                label: "x".into(),
            };
            n
        ]
    }

    fn hand_model(alphas: Vec<f64>, labels: Vec<i8>) -> TrainedModel {
        let n = alphas.len();
        TrainedModel {
            alphas,
            labels,
            bias: 0.0,
            c: 1.0,
            class_pair: None,
            metadata: meta(n),
        }
    }

    fn dense_moments(lambda: &Mat<C64>, v: &[C64]) -> (f64, f64) {
        let lv: Vec<C64> = (0..v.len()).map(|i| (0..v.len()).map(|j| lambda[(i, j)] * v[j]).sum()).collect();
        let mean = dense_expectation(lambda.as_ref(), v).re;
        let second: f64 = lv.iter().map(|z| z.norm_sqr()).sum();
        (mean, second - mean * mean)
    }

    #[test]
    fn single_projector() {
        let s = Mps::random(4, 3, 2).unwrap();
        let m = hand_model(vec![1.0], vec![1]);
        let lam = materialize_dense(&m, std::slice::from_ref(&s)).unwrap();
        let ev = crate::linalg::hermitian_eigenvalues(lam.as_ref()).unwrap();
        assert!((ev[15] - 1.0).abs() < 1e-12);
        assert!(ev[..15].iter().all(|e| e.abs() < 1e-12));
        assert!(variance(&m, std::slice::from_ref(&s), &s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_pair_spectrum() {
        let a = Mps::product(&[0, 0, 1]).unwrap();
        let b = Mps::product(&[1, 0, 1]).unwrap();
        let m = hand_model(vec![1.0, 1.0], vec![1, -1]);
        let lam = materialize_dense(&m, &[a, b]).unwrap();
        let ev = crate::linalg::hermitian_eigenvalues(lam.as_ref()).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[7] - 1.0).abs() < 1e-12);
        assert!(ev[1..7].iter().all(|e| e.abs() < 1e-12));
        assert_eq!(hoelder_bound(&m), (4.0, 4.0));
    }

    #[test]
    fn orthogonal_test_state_has_no_signal() {
        let train = vec![Mps::product(&[0, 0, 0]).unwrap(), Mps::product(&[1, 1, 0]).unwrap()];
        let m = hand_model(vec![0.5, 0.5], vec![1, -1]);
        let test = Mps::product(&[1, 0, 1]).unwrap();
        let row = kernel_row(&test, &train).unwrap();
        assert_eq!(expectation(&m, &row).unwrap(), 0.0);
        assert_eq!(variance(&m, &train, &test).unwrap(), 0.0);
    }

    #[test]
    fn expectation_basics() {
        let m = hand_model(vec![0.3, 0.7], vec![1, -1]);
        assert_eq!(expectation(&m, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(expectation(&m, &[0.0, 1.0]).unwrap(), -0.7);
        assert!(expectation(&m, &[0.0]).is_err());
    }

    #[test]
    fn support_count_ignores_zero_alphas() {
        let m = hand_model(vec![1.0, 0.0, 1e-12, 0.5], vec![1, -1, 1, -1]);
        let (s, cns) = hoelder_bound(&m);
        assert!((s - 2.25).abs() < 1e-9);
        assert_eq!(cns, 4.0);
    }

    #[test]
    fn matches_dense_observable_at_eight_sites() {
        let train: Vec<Mps> = (0..6).map(|i| Mps::random(8, 4, 100 + i).unwrap()).collect();
        let gram = gram_fidelity(&train).unwrap();
        let model = train_binary(&gram, &[1, -1, 1, -1, 1, -1], 1.0, meta(6)).unwrap();
        let lam = materialize_dense(&model, &train).unwrap();
        assert!(crate::linalg::hermitian_defect(lam.as_ref()) < 1e-12);
        for seed in 0..5 {
            let test = Mps::random(8, 3, 900 + seed).unwrap();
            let v = test.to_dense().unwrap();
            let (mean, var) = dense_moments(&lam, &v);
            let row = kernel_row(&test, &train).unwrap();
            let d = decide_binary(&model, &row).unwrap();
            assert!((d.margin - model.bias - mean).abs() < 1e-10);
            assert!((expectation(&model, &row).unwrap() - mean).abs() < 1e-10);
            assert!((variance(&model, &train, &test).unwrap() - var).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_variance_shots_are_exact() {
        let est = simulate_shots(0.123, 0.0, 1000, 5).unwrap();
        assert_eq!(est.mean, 0.123);
        assert_eq!(est.std_error, 0.0);
        assert!(simulate_shots(0.0, -1.0, 10, 0).is_err());
        assert!(simulate_shots(0.0, 1.0, 0, 0).is_err());
    }

    #[test]
    fn shots_are_deterministic_per_seed() {
        assert_eq!(simulate_shots(0.1, 0.5, 100, 9).unwrap(), simulate_shots(0.1, 0.5, 100, 9).unwrap());
        assert_ne!(simulate_shots(0.1, 0.5, 100, 9).unwrap(), simulate_shots(0.1, 0.5, 100, 10).unwrap());
    }

    #[test]
    fn two_sigma_budget() {
        assert_eq!(shots_for_2sigma(1.0, 0.5), Some(16));
        assert_eq!(shots_for_2sigma(0.0, 0.5), Some(1));
        assert_eq!(shots_for_2sigma(1.0, 0.0), None);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn variance_is_nonnegative_and_bounded(
            seed in 0u64..10_000,
            signs in proptest::collection::vec(proptest::bool::ANY, 2..7),
            c in 0.1f64..10.0,
        ) {
            let m = signs.len();
            let mut labels: Vec<i8> = signs.iter().map(|&b| if b { 1 } else { -1 }).collect();
            labels[0] = 1;
            labels[1] = -1;
            let train: Vec<Mps> = (0..m as u64).map(|i| Mps::random(5, 3, seed * 10 + i).unwrap()).collect();
            let model = train_binary(&gram_fidelity(&train).unwrap(), &labels, c, meta(m)).unwrap();
            let test = Mps::random(5, 3, seed + 77_777).unwrap();
            let var = variance(&model, &train, &test).unwrap();
            let (sum_alpha_sq, norm_sq) = hoelder_bound(&model);
            proptest::prop_assert!(var >= 0.0);
            proptest::prop_assert!(var <= sum_alpha_sq + 1e-12);
            proptest::prop_assert!(sum_alpha_sq <= norm_sq + 1e-12);
        }
    }
}
