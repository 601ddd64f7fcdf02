//! Data-dependent generalization bound for small chains.

use qphase::genbound::{assess, scaling_study, study_csv, StudyConfig};
use qphase::hamiltonian::Model;
use qphase::labels::Region;

fn main() -> qphase::Result<()> {
    let cfg: StudyConfig = serde_json::from_value(serde_json::json!({
        "model": "annni",
        "n_sites": [6, 8, 10],
        "chi": 12,
        "region": Region::new((0.0, 1.0), (0.0, 2.0)),
        "m": 16,
        "repetitions": 2,
        "seed": 5
    }))
    .map_err(|e| qphase::Error::Config(e.to_string()))?;
    assert_eq!(cfg.model, Model::Annni);

    let rows = scaling_study(&cfg)?;
    print!("{}", study_csv(&rows));
    let v = assess(&rows);
    println!(
        "positive {} increasing {} ratio growth {:.3} max doubling change {:.3}",
        v.positive, v.increasing, v.ratio_growth, v.max_doubling_change
    );
    Ok(())
}
