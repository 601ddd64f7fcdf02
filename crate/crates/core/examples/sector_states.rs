//! Deep in the ferromagnetic phase the two lowest states are parity partners.
//! Resolve them into sectors and mix them with a random superposition.

use qphase::hamiltonian::{build_mpo, model_symmetries, Model, ModelParams};
use qphase::kernel::sector_tag;
use qphase::mps::{lowest_sector_states, random_sector_superposition, DmrgOptions};

fn main() -> qphase::Result<()> {
    let n = 8;
    let mpo = build_mpo(&ModelParams::annni(n, 0.1, 0.2))?;
    let symmetries = model_symmetries(Model::Annni, n)?;
    let solved = lowest_sector_states(&mpo, &symmetries, 2, 16, &DmrgOptions::default())?;

    for s in &solved.states {
        println!("E = {:.12}  sector {}", s.energy, sector_tag(&s.sectors));
    }
    let gap = solved.states[1].energy - solved.states[0].energy;
    println!("splitting {gap:.3e}");

    let mixed = random_sector_superposition(&solved.states[0].state, &solved.states[1].state, 7)?;
    for s in &solved.states {
        println!("|<mixed|{}>|^2 = {:.6}", sector_tag(&s.sectors), mixed.overlap(&s.state)?.norm_sqr());
    }
    Ok(())
}
