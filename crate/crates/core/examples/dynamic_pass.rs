//! Alternate diffusion and feature refinement for several epochs. The mock
//! extractor pulls points towards their pseudo-class centroids, weighted by
//! certainty and the ramp.
//!
//! ```bash
//! cargo run --example dynamic_pass
//! ```

use gnz::graph::KnnParams;
use gnz::pipeline::{dynamic_pass, DataSource, Mode, PipelineConfig, RampConfig};

fn main() -> gnz::Result<()> {
    let cfg = PipelineConfig {
        mode: Mode::Dynamic,
        epochs: 6,
        ramp: RampConfig {
            t_ramp: 3,
            alpha_max: 1.0,
        },
        data: DataSource::Blobs {
            n: 400,
            classes: 4,
            dim: 64,
            spread: 8.0,
            labels_per_class: 5,
        },
        graph: KnnParams { k: 10, ..Default::default() },
        seed: 4,
        ..Default::default()
    };
    let out = dynamic_pass(&cfg)?;
    for e in &out.report.epochs {
        println!(
            "epoch {}  ramp {:.2}  accuracy {:.4}  mean certainty {:.3}  pseudo {:?}",
            e.epoch,
            e.ramp_weight,
            e.accuracy.unwrap_or(f64::NAN),
            e.mean_certainty.unwrap_or(0.0),
            e.pseudo_histogram
        );
    }
    Ok(())
}
