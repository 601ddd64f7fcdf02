//! Pipeline margins and variances against the same quantities built from
//! exact eigenvectors and an explicitly materialized decision observable.

use faer::Mat;
use qphase::exact::{dense_apply, dense_expectation, dense_fidelity, lowest_eigenpairs, subspace_fidelity};
use qphase::hamiltonian::{build_dense, build_symmetry, Model, ModelParams, SymmetryKind};
use qphase::kernel::GramMatrix;
use qphase::labels::{LayoutSpec, Region};
use qphase::linalg::C64;
use qphase::observable::materialize_dense;
use qphase::pipeline::{ExperimentConfig, Pipeline, SectorPolicy, TestGrid};
use qphase::svm::{predict_multiclass, train_multiclass};

const N: usize = 8;

fn config(dir: &std::path::Path) -> ExperimentConfig {
    let domain = Region::new((0.0, 1.0), (0.0, 2.0));
    ExperimentConfig {
        model: qphase::hamiltonian::Model::Annni,
        n_sites: N,
        chi: 16,
        training: LayoutSpec::Grid {
            region: domain,
            counts: (3, 2),
            centered: true,
        },
        test_grid: TestGrid {
            region: domain,
            counts: (2, 2),
        },
        c: 1.0,
        sectors: SectorPolicy {
            states_per_point: 2,
            random_superposition: false,
            degeneracy_window: 0.05,
            seed: 21,
        },
        energy_tol: 1e-10,
        output_dir: dir.join("out"),
        cache_dir: Some(dir.join("cache")),
    }
}

fn quadratic(a: &Mat<C64>, v: &[C64]) -> (f64, f64) {
    let mean = dense_expectation(a.as_ref(), v).re;
    let av = dense_apply(a.as_ref(), v);
    let second: f64 = av.iter().map(|z| z.norm_sqr()).sum();
    (mean, second - mean * mean)
}

#[test]
fn training_states_lie_in_the_exact_low_energy_space() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(config(dir.path())).unwrap();
    let set = p.training_set().unwrap();
    for (state, meta) in set.states.iter().zip(&set.meta) {
        let pairs = lowest_eigenpairs(build_dense(&ModelParams::annni(N, meta.k, meta.h)).unwrap().as_ref(), 4).unwrap();
        let window: Vec<_> = pairs.iter().filter(|e| e.energy - pairs[0].energy < 0.05).cloned().collect();
        let f = subspace_fidelity(&state.to_dense().unwrap(), &window);
        assert!(f > 1.0 - 1e-8, "({}, {}) sector {}: fidelity {f}", meta.k, meta.h, meta.sector);
    }
}

#[test]
fn margins_and_variance_match_the_dense_observable() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(config(dir.path())).unwrap();
    let set = p.training_set().unwrap();
    let trained = p.train(&set).unwrap();
    // Non-degenerate points: paramagnetic and floating.
    let points = [(0.3, 1.6), (0.7, 1.4)];
    let (classified, _) = p.classify_points("probe", &points, &set, &trained).unwrap();
    for (c, &(k, h)) in classified.iter().zip(&points) {
        let exact = lowest_eigenpairs(build_dense(&ModelParams::annni(N, k, h)).unwrap().as_ref(), 2).unwrap();
        assert!(exact[1].energy - exact[0].energy > 1e-3);
        let v = &exact[0].vector;
        for (pi, pair) in trained.model.pairs.iter().enumerate() {
            let subset: Vec<_> = pair.indices.iter().map(|&i| set.states[i].clone()).collect();
            let lambda = materialize_dense(&pair.model, &subset).unwrap();
            let (mean, var) = quadratic(&lambda, v);
            let margin = mean + pair.model.bias;
            assert!((margin - c.prediction.margins[pi]).abs() < 1e-8, "pair {pi}: {margin} vs {}", c.prediction.margins[pi]);
            if pi == c.deciding_pair {
                assert!((mean - c.expectation).abs() < 1e-8);
                assert!((var - c.variance).abs() < 1e-8, "{var} vs {}", c.variance);
            }
        }
    }
}

#[test]
fn predictions_match_an_all_dense_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.test_grid.counts = (5, 5);
    let mut p = Pipeline::new(cfg).unwrap();
    let run = p.run().unwrap();

    // Dense training states: eigenvectors inside the window, matched to each
    // training row by parity.
    let parity = build_symmetry(Model::Annni, N, SymmetryKind::ParityZ).unwrap().to_dense().unwrap();
    let set = &run.training;
    let mut dense_states: Vec<Vec<C64>> = Vec::new();
    for m in &set.meta {
        let pairs = lowest_eigenpairs(build_dense(&ModelParams::annni(N, m.k, m.h)).unwrap().as_ref(), 4).unwrap();
        let want = if m.sector == "+" { 1.0 } else { -1.0 };
        let v = pairs
            .iter()
            .filter(|e| e.energy - pairs[0].energy < 0.05)
            .find(|e| (dense_expectation(parity.as_ref(), &e.vector).re - want).abs() < 1e-6)
            .unwrap_or_else(|| panic!("no {} state near ({}, {})", m.sector, m.k, m.h));
        dense_states.push(v.vector.clone());
    }
    let n = dense_states.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = dense_fidelity(&dense_states[i], &dense_states[j]).unwrap();
        }
    }
    let gram = GramMatrix::from_entries(n, entries).unwrap();
    let model = train_multiclass(&gram, &set.labels, &run.trained.model.classes, 1.0, &set.meta).unwrap();

    for r in &run.grid.records {
        let v = &lowest_eigenpairs(build_dense(&ModelParams::annni(N, r.k, r.h)).unwrap().as_ref(), 1).unwrap()[0].vector;
        let row: Vec<f64> = dense_states.iter().map(|s| dense_fidelity(v, s).unwrap()).collect();
        let class = predict_multiclass(&model, &row).unwrap().class;
        assert_eq!(
            qphase::labels::PhaseLabel::from_class_id(Model::Annni, class).unwrap(),
            r.predicted_label,
            "({}, {})",
            r.k,
            r.h
        );
    }
}
