//! Fidelity Gram matrix of ground states along a line through three phases.

use qphase::hamiltonian::{build_mpo, ModelParams};
use qphase::kernel::{gram_fidelity, within_across_means};
use qphase::labels::annni_label;
use qphase::mps::{dmrg_ground_state, DmrgOptions};

fn main() -> qphase::Result<()> {
    let points = [(0.2, 0.2), (0.25, 0.3), (0.2, 1.6), (0.25, 1.7), (0.8, 0.2), (0.85, 0.3)];
    let mut states = Vec::new();
    let mut groups = Vec::new();
    for &(k, h) in &points {
        let mpo = build_mpo(&ModelParams::annni(8, k, h))?;
        states.push(dmrg_ground_state(&mpo, 16, &[], &DmrgOptions::default())?.state);
        groups.push(annni_label(k, h)? as usize);
    }
    let gram = gram_fidelity(&states)?;
    for i in 0..gram.n {
        let row: Vec<String> = gram.row(i).iter().map(|v| format!("{v:.3}")).collect();
        println!("{}", row.join(" "));
    }
    let (within, across) = within_across_means(&gram, &groups);
    println!("mean fidelity within phases {within:.3}, across {across:.3}");
    println!("min eigenvalue {:.3e}", gram.min_eigenvalue()?);
    Ok(())
}
