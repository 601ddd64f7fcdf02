//! End-to-end ANNNI phase diagram on a small chain, printed as a character map.

use qphase::labels::{LayoutSpec, Region};
use qphase::pipeline::{ExperimentConfig, Pipeline, SectorPolicy, TestGrid};

fn main() -> qphase::Result<()> {
    let cache = std::env::temp_dir().join("qphase-example-cache");
    let domain = Region::new((0.0, 1.0), (0.0, 2.0));
    let config = ExperimentConfig {
        model: qphase::hamiltonian::Model::Annni,
        n_sites: 8,
        chi: 16,
        training: LayoutSpec::Grid {
            region: domain,
            counts: (4, 3),
            centered: true,
        },
        test_grid: TestGrid {
            region: domain,
            counts: (11, 11),
        },
        c: 1.0,
        sectors: SectorPolicy {
            states_per_point: 2,
            random_superposition: false,
            degeneracy_window: 0.05,
            seed: 1,
        },
        energy_tol: 1e-10,
        output_dir: std::env::temp_dir().join("qphase-example-out"),
        cache_dir: Some(cache),
    };
    let mut pipeline = Pipeline::new(config)?;
    let run = pipeline.run()?;

    // Rows are h from top to bottom, columns are k.
    let (nk, nh) = (11, 11);
    for j in (0..nh).rev() {
        let line: String = (0..nk)
            .map(|i| {
                let r = &run.grid.records[i * nh + j];
                r.predicted_label.name().chars().next().unwrap().to_ascii_uppercase()
            })
            .collect();
        println!("{line}");
    }
    println!(
        "far-from-boundary accuracy {:.3} (majority share {:.3})",
        run.grid.far_accuracy(),
        run.grid.far_majority_share()
    );
    Ok(())
}
