//! The decision function as an observable: exact expectation and variance
//! on a test state, the norm bounds, and a simulated finite-shot estimate.

use qphase::hamiltonian::{build_mpo, ModelParams};
use qphase::kernel::{gram_fidelity, kernel_row};
use qphase::mps::{dmrg_ground_state, DmrgOptions};
use qphase::observable::{expectation, hoelder_bound, shots_for_2sigma, simulate_shots, variance};
use qphase::svm::train_binary;

fn ground(k: f64, h: f64) -> qphase::Result<qphase::mps::Mps> {
    let mpo = build_mpo(&ModelParams::annni(8, k, h))?;
    Ok(dmrg_ground_state(&mpo, 16, &[], &DmrgOptions::default())?.state)
}

fn main() -> qphase::Result<()> {
    let train = vec![ground(0.2, 1.5)?, ground(0.3, 1.8)?, ground(0.8, 0.2)?, ground(0.9, 0.4)?];
    let labels = [1, 1, -1, -1];
    let model = train_binary(&gram_fidelity(&train)?, &labels, 1.0, Vec::new())?;

    let test = ground(0.4, 1.2)?;
    let mean = expectation(&model, &kernel_row(&test, &train)?)?;
    let var = variance(&model, &train, &test)?;
    let (sum_alpha_sq, norm_sq) = hoelder_bound(&model);
    println!("<O> = {mean:+.6}  Var = {var:.6}  <= {sum_alpha_sq:.6} <= {norm_sq:.6}");

    let margin = mean + model.bias;
    match shots_for_2sigma(var, margin) {
        Some(n) => println!("{n} shots put the sign two standard errors clear"),
        None => println!("zero margin; no finite shot count resolves the sign"),
    }
    for shots in [16, 256, 4096] {
        let est = simulate_shots(mean, var, shots, 1)?;
        println!("{shots:>5} shots: {:+.6} +- {:.6}", est.mean, est.std_error);
    }
    Ok(())
}
