//! Plug a feature extractor in through the `Extractor` trait. This one
//! returns the raw features plus a constant column; any model that can
//! embed all `n` items works the same way.
//!
//! ```bash
//! cargo run --example custom_extractor
//! ```

use gnz::certainty::harden_labels;
use gnz::diffusion::l2::{diffuse_iterative, DiffusionConfig};
use gnz::diffusion::seed_matrix;
use gnz::graph::{build_knn_graph, KnnParams};
use gnz::metrics::accuracy;
use gnz::pipeline::synthetic::{sample_labels, two_moons};
use gnz::pipeline::{invoke_extractor, Extractor, ExtractorRequest};
use gnz::EmbeddingMatrix;

struct Augment {
    raw: EmbeddingMatrix,
    calls: usize,
}

impl Extractor for Augment {
    fn extract(&mut self, req: &ExtractorRequest) -> gnz::Result<EmbeddingMatrix> {
        self.calls += 1;
        let rows: Vec<Vec<f32>> = (0..req.n)
            .map(|i| {
                let mut r = self.raw.row(i).to_vec();
                r.push(1.0);
                r
            })
            .collect();
        EmbeddingMatrix::from_rows(&rows)
    }

    fn diagnostics(&self) -> Option<String> {
        Some(format!("{} call(s)", self.calls))
    }
}

fn main() -> gnz::Result<()> {
    let data = two_moons(300, 0.1, 5)?;
    let labels = sample_labels(&data.truth, 2, 5, 5)?;
    let mut ext = Augment {
        raw: data.embeddings.clone(),
        calls: 0,
    };
    let req = ExtractorRequest {
        data_ref: "two-moons".into(),
        n: labels.n(),
        labeled: labels.labeled().to_vec(),
        pseudo: None,
        ramp_weight: 0.0,
        epoch: 0,
        seed: 0,
        output_path: Default::default(),
    };
    let features = invoke_extractor(&mut ext, &req)?;
    let (g, _) = build_knn_graph(&features, &KnnParams { k: 8, ..Default::default() })?;
    let (h, _) = diffuse_iterative(&g.normalized_operator()?, &seed_matrix(&labels), &DiffusionConfig::default())?;
    println!(
        "features {}x{}, accuracy {:.4}, extractor: {}",
        features.rows(),
        features.dim(),
        accuracy(&harden_labels(&h), &data.truth)?,
        ext.diagnostics().unwrap_or_default()
    );
    Ok(())
}
