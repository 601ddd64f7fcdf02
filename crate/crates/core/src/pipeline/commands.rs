//! Subcommand bodies shared by the binary and the repro runner. Each writes
//! its files under the config's output directory next to a manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::genbound::{assess, scaling_study, study_csv, ScalingVerdict, StudyConfig};
use crate::kernel::{metadata_csv, sector_tag};
use crate::labels::layout_to_csv;
use crate::observable::hoelder_bound;
use crate::svm::MulticlassModel;

use super::report::Manifest;
use super::{ExperimentConfig, Pipeline, TrainingSet};

#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    /// Manifest entries whose solve did not converge.
    pub unconverged: usize,
    pub summary: String,
}

fn finish(p: &Pipeline, mut manifest: Manifest, summary: String) -> Result<Outcome> {
    let dir = p.config.output_dir.clone();
    manifest.cache = p.records().to_vec();
    manifest.unconverged = p.unconverged().into_iter().cloned().collect();
    let mut outputs: Vec<PathBuf> = manifest.outputs.iter().map(|o| dir.join(&o.path)).collect();
    outputs.push(manifest.save(&dir)?);
    Ok(Outcome {
        outputs,
        unconverged: manifest.unconverged.len(),
        summary,
    })
}

fn start(config: &ExperimentConfig) -> Result<(Pipeline, Manifest)> {
    let p = Pipeline::new(config.clone())?;
    let m = Manifest::new(config, &[]);
    Ok((p, m))
}

fn policy_text(config: &ExperimentConfig) -> String {
    format!(
        "states={};superpose={};window={:e}",
        config.sectors.states_per_point, config.sectors.random_superposition, config.sectors.degeneracy_window
    )
}

fn write_training(manifest: &mut Manifest, dir: &Path, config: &ExperimentConfig, set: &TrainingSet) -> Result<()> {
    manifest.write_output(dir, "training_layout.csv", layout_to_csv(&set.layout, &policy_text(config)).as_bytes())?;
    Ok(())
}

/// Ground states for the training layout and the test grid, summarised
/// in `energies.csv`.
pub fn solve(config: &ExperimentConfig) -> Result<Outcome> {
    let (mut p, mut manifest) = start(config)?;
    let layout = crate::labels::make_layout(config.model, &config.training)?;
    let train: Vec<(f64, f64)> = layout.points.iter().map(|q| (q.k, q.h)).collect();
    let test = p.test_points();
    let mut csv = String::from("role,k,h,state,energy,sector,determinate,converged\n");
    let mut count = 0;
    for (role, pts) in [("train", train), ("test", test)] {
        for s in p.solve_points(role, &pts)? {
            for (i, st) in s.result.states.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{role},{:?},{:?},{i},{:.12e},{},{},{}",
                    s.k,
                    s.h,
                    st.energy,
                    sector_tag(&st.sectors),
                    st.determinate,
                    s.result.converged
                );
                count += 1;
            }
        }
    }
    let dir = config.output_dir.clone();
    manifest.write_output(&dir, "energies.csv", csv.as_bytes())?;
    finish(&p, manifest, format!("{count} states across {} points", p.records().len()))
}

fn model_files(manifest: &mut Manifest, dir: &Path, set: &TrainingSet, model: &MulticlassModel) -> Result<()> {
    manifest.write_output(dir, "model.txt", model.to_text().as_bytes())?;
    let mut support = String::from("pair,index,k,h,sector,label,alpha,y\n");
    for (pi, pair) in model.pairs.iter().enumerate() {
        for &i in &pair.model.support_indices() {
            let m = &set.meta[pair.indices[i]];
            let _ = writeln!(
                support,
                "{pi},{},{:?},{:?},{},{},{:.12e},{}",
                pair.indices[i], m.k, m.h, m.sector, m.label, pair.model.alphas[i], pair.model.labels[i]
            );
        }
    }
    manifest.write_output(dir, "support.csv", support.as_bytes())?;
    Ok(())
}

/// Train on the layout; writes `model.txt`, `support.csv` and the layout.
pub fn train(config: &ExperimentConfig) -> Result<Outcome> {
    let (mut p, mut manifest) = start(config)?;
    let set = p.training_set()?;
    let trained = p.train(&set)?;
    let dir = config.output_dir.clone();
    write_training(&mut manifest, &dir, config, &set)?;
    model_files(&mut manifest, &dir, &set, &trained.model)?;
    let summary = format!("{} training states, {} pair models", set.states.len(), trained.model.pairs.len());
    finish(&p, manifest, summary)
}

/// Predict the test grid with a saved model; training states come from the
/// cache (or are solved again).
pub fn predict(config: &ExperimentConfig, model_path: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(model_path).map_err(|e| Error::io(model_path, e))?;
    let model = MulticlassModel::from_text(&text)?;
    let (mut p, mut manifest) = start(config)?;
    let set = p.training_set()?;
    if set.states.len() != model.training_size {
        return Err(Error::Config(format!(
            "{} was trained on {} states but the config yields {}",
            model_path.display(),
            model.training_size,
            set.states.len()
        )));
    }
    let overlaps = crate::kernel::Overlaps::compute(&set.states)?;
    let trained = super::Trained { model, overlaps };
    let grid = p.predict(&set, &trained)?;
    let dir = config.output_dir.clone();
    manifest.write_output(&dir, "phase_grid.csv", grid.to_csv().as_bytes())?;
    finish(&p, manifest, format!("far-from-boundary accuracy {:.4}", grid.far_accuracy()))
}

/// Solve, train and predict.
pub fn phase_diagram(config: &ExperimentConfig) -> Result<Outcome> {
    let (mut p, mut manifest) = start(config)?;
    let run = p.run()?;
    let dir = config.output_dir.clone();
    write_training(&mut manifest, &dir, config, &run.training)?;
    model_files(&mut manifest, &dir, &run.training, &run.trained.model)?;
    manifest.write_output(&dir, "phase_grid.csv", run.grid.to_csv().as_bytes())?;
    let summary = format!(
        "far-from-boundary accuracy {:.4} (majority share {:.4})",
        run.grid.far_accuracy(),
        run.grid.far_majority_share()
    );
    finish(&p, manifest, summary)
}

/// Per test point: moments of the deciding pair observable, its bounds
/// and the two-sigma shot budget.
pub fn variance_report(config: &ExperimentConfig) -> Result<Outcome> {
    let (mut p, mut manifest) = start(config)?;
    let set = p.training_set()?;
    let trained = p.train(&set)?;
    let points = p.test_points();
    let (classified, _) = p.classify_points("test", &points, &set, &trained)?;
    let mut csv = String::from("k,h,predicted_label,pair,margin,expectation,variance,sum_alpha_sq,c_ns_sq,shots_for_2sigma\n");
    let mut violations = 0;
    for c in &classified {
        let pair = &trained.model.pairs[c.deciding_pair];
        let (sa, cns) = hoelder_bound(&pair.model);
        if !(c.variance <= sa && sa <= cns) {
            violations += 1;
        }
        let (a, b) = pair.classes();
        let _ = writeln!(
            csv,
            "{:?},{:?},{},{a}-{b},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            c.k,
            c.h,
            c.label.name(),
            c.prediction.margins[c.deciding_pair],
            c.expectation,
            c.variance,
            sa,
            cns,
            c.shots_for_2sigma.map_or_else(String::new, |s| s.to_string())
        );
    }
    let dir = config.output_dir.clone();
    manifest.write_output(&dir, "variance_report.csv", csv.as_bytes())?;
    finish(&p, manifest, format!("{} points, {violations} bound violations", classified.len()))
}

/// Training Gram matrix and its index sidecar.
pub fn export_gram(config: &ExperimentConfig) -> Result<Outcome> {
    let (mut p, mut manifest) = start(config)?;
    let set = p.training_set()?;
    let gram = crate::kernel::Overlaps::compute(&set.states)?.fidelity();
    let dir = config.output_dir.clone();
    manifest.write_output(&dir, "gram.csv", gram.to_csv().as_bytes())?;
    manifest.write_output(&dir, "gram_meta.csv", metadata_csv(&set.meta).as_bytes())?;
    let summary = format!("{0}x{0} Gram matrix, min eigenvalue {1:.3e}", gram.n, gram.min_eigenvalue()?);
    finish(&p, manifest, summary)
}

/// Scaling study; writes `genbound.csv` and returns the verdict.
pub fn genbound(config: &StudyConfig, out_dir: &Path) -> Result<(Outcome, ScalingVerdict)> {
    let rows = scaling_study(config)?;
    let verdict = assess(&rows);
    let csv = study_csv(&rows);
    let path = out_dir.join("genbound.csv");
    super::cache::write_atomic(&path, csv.as_bytes())?;
    let flagged = rows.iter().map(|r| r.flagged).max().unwrap_or(0);
    let summary = format!(
        "positive={} increasing={} ratio_growth={:.4} max_doubling_change={:.4}",
        verdict.positive, verdict.increasing, verdict.ratio_growth, verdict.max_doubling_change
    );
    Ok((
        Outcome {
            outputs: vec![path],
            unconverged: flagged,
            summary,
        },
        verdict,
    ))
}
