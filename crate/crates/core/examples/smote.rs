//! Balance a small imbalanced binary set with SMOTE.
//!
//!     cargo run --example smote

use speechact::balance::{smote_balance, DenseExample, Origin};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let positives: Vec<DenseExample> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        .iter()
        .map(|p| DenseExample::real(p.to_vec()))
        .collect();
    let negatives: Vec<DenseExample> = (0..8)
        .map(|i| DenseExample::real(vec![5.0 + i as f64 * 0.1, 5.0]))
        .collect();

    let balanced = smote_balance(positives, negatives, 2, 7)?;
    println!("oversampled side: {:?}", balanced.oversampled);
    println!("{} positives, {} negatives", balanced.positives.len(), balanced.negatives.len());
    for (ex, s) in balanced
        .positives
        .iter()
        .filter(|e| e.origin == Origin::Synthetic)
        .zip(&balanced.syntheses)
    {
        println!(
            "  ({:.3}, {:.3}) = point {} + {:.3} * (point {} - point {})",
            ex.values[0], ex.values[1], s.base, s.r, s.neighbor, s.base
        );
    }
    Ok(())
}
