//! Turn diffusion scores into certainty-weighted pseudo-labels.
//!
//! ```bash
//! cargo run --example pseudo_labels
//! ```

use gnz::certainty::{entropy_certainty, extract_pseudo_labels};
use gnz::diffusion::ScoreMatrix;
use gnz::LabelSet;

fn main() -> gnz::Result<()> {
    for row in [[0.5, 0.5], [0.7, 0.3], [0.9, 0.1], [1.0, 0.0]] {
        println!("{row:?} -> certainty {:.5}", entropy_certainty(&row, 2)?);
    }

    // node 0 is labeled; nodes 1-4 get pseudo-labels, three of them class 0
    let h = ScoreMatrix::from_rows(&[[1.0, 0.0], [0.9, 0.1], [0.8, 0.2], [1.0, 0.0], [0.0, 1.0]])?;
    let labels = LabelSet::new(5, Some(2), vec![(0, 0)])?;
    for balance in [false, true] {
        let p = extract_pseudo_labels(&h, &labels, balance)?;
        println!("balance = {balance}: histogram {:?}", p.histogram());
        for e in &p.entries {
            println!("  node {} -> class {} weight {:.4}", e.id, e.label, e.weight);
        }
    }
    Ok(())
}
