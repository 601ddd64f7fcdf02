//! One-vs-one training over three synthetic classes, then a text round trip.

use qphase::kernel::{GramMatrix, PointMeta};
use qphase::svm::{predict_multiclass, train_multiclass, MulticlassModel};

fn main() -> qphase::Result<()> {
    let labels = [0usize, 0, 1, 1, 2, 2];
    let n = labels.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = match (i == j, labels[i] == labels[j]) {
                (true, _) => 1.0,
                (false, true) => 0.8,
                (false, false) => 0.15,
            };
        }
    }
    let gram = GramMatrix::from_entries(n, entries)?;
    let meta: Vec<PointMeta> = labels
        .iter()
        .map(|&l| PointMeta {
            k: l as f64,
            h: 0.0,
            sector: "+".into(),
            label: format!("class{l}"),
        })
        .collect();
    let model = train_multiclass(&gram, &labels, &[0, 1, 2], 1.0, &meta)?;

    for i in 0..n {
        let p = predict_multiclass(&model, gram.row(i))?;
        println!("point {i}: class {} votes {:?}", p.class, p.votes);
    }
    let text = model.to_text();
    let back = MulticlassModel::from_text(&text)?;
    println!("{} pair models, text round trip equal: {}", back.pairs.len(), back == model);
    Ok(())
}
