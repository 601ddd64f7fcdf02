//! Ground energy of a small ANNNI chain from DMRG and from exact diagonalization.

use qphase::exact::{dense_fidelity, lowest_eigenpairs};
use qphase::hamiltonian::{build_dense, build_mpo, ModelParams};
use qphase::mps::{dmrg_ground_state, DmrgOptions};

fn main() -> qphase::Result<()> {
    let params = ModelParams::annni(10, 0.3, 1.2);
    let mpo = build_mpo(&params)?;
    println!("MPO bond dimensions {:?}", mpo.bond_dims());

    let dmrg = dmrg_ground_state(&mpo, 32, &[], &DmrgOptions::default())?;
    let exact = lowest_eigenpairs(build_dense(&params)?.as_ref(), 1)?;
    let fidelity = dense_fidelity(&dmrg.state.to_dense()?, &exact[0].vector)?;

    println!("dmrg   E = {:.12}  ({} sweeps, converged {})", dmrg.energy, dmrg.sweeps, dmrg.converged);
    println!("exact  E = {:.12}", exact[0].energy);
    println!("fidelity  {fidelity:.12}");
    Ok(())
}
