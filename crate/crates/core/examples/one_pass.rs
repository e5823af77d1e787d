//! Extract features once, build the graph once, diffuse once.
//!
//! ```bash
//! cargo run --example one_pass
//! ```

use gnz::graph::KnnParams;
use gnz::pipeline::{one_pass, DataSource, ExtractorConfig, Method, MockConfig, PipelineConfig, Projection};

fn main() -> gnz::Result<()> {
    for method in [Method::P2, Method::P1] {
        let cfg = PipelineConfig {
            method,
            data: DataSource::TwoMoons {
                n: 600,
                noise: 0.1,
                labels_per_class: 10,
            },
            graph: KnnParams { k: 10, ..Default::default() },
            extractor: ExtractorConfig::Mock(MockConfig {
                projection: Projection::Identity,
                eta: 0.1,
            }),
            ..Default::default()
        };
        let out = one_pass(&cfg)?;
        let m = out.report.metrics.as_ref().expect("synthetic data has ground truth");
        println!("{method:?}: accuracy {:.4}, macro AUC {:.4}", m.accuracy, m.macro_auc.unwrap_or(f64::NAN));
    }
    println!("{}", PipelineConfig::default().to_json());
    Ok(())
}
