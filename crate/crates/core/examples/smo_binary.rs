//! Binary soft-margin SVM on a precomputed kernel.

use qphase::kernel::GramMatrix;
use qphase::svm::{decide_binary, train_binary};

fn main() -> qphase::Result<()> {
    // Two tight clusters with weak overlap between them.
    let n = 4;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = if i == j {
                1.0
            } else if i / 2 == j / 2 {
                0.9
            } else {
                0.1
            };
        }
    }
    let gram = GramMatrix::from_entries(n, entries)?;
    let labels = [1, 1, -1, -1];
    let model = train_binary(&gram, &labels, 1.0, Vec::new())?;

    println!("alphas {:?}", model.alphas);
    println!("bias {:.6}", model.bias);
    println!("dual objective {:.9}", model.dual_objective(&gram));
    println!("kkt residual {:.3e}", model.kkt_residual(&gram));
    for i in 0..n {
        let d = decide_binary(&model, gram.row(i))?;
        println!("point {i}: margin {:+.6}", d.margin);
    }
    Ok(())
}
