//! Accuracy and one-vs-rest AUC, with tied scores handled exactly.
//!
//! ```bash
//! cargo run --example evaluate
//! ```

use gnz::diffusion::ScoreMatrix;
use gnz::metrics::{auc_counts, evaluate};

fn main() -> gnz::Result<()> {
    let counts = auc_counts(&[0.9, 0.4, 0.6, 0.2, 0.6], &[true, false, false, true, true])?;
    println!(
        "AUC = {}/{} = {:.4}",
        counts.half_points,
        2 * counts.pairs,
        counts.value()
    );

    let h = ScoreMatrix::from_rows(&[[0.8, 0.1, 0.1], [0.2, 0.7, 0.1], [0.3, 0.3, 0.4], [0.5, 0.4, 0.1]])?;
    let pred = gnz::certainty::harden_labels(&h);
    let report = evaluate(&pred, &h, &[0, 1, 2, 1])?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
