//! Total-variation (p = 1) diffusion, with the ratio trace of each class.
//!
//! ```bash
//! cargo run --example total_variation
//! ```

use gnz::certainty::harden_labels;
use gnz::diffusion::l1::{diffuse_l1, minimize_class_ratio, L1Config};
use gnz::graph::{build_knn_graph, Graph, KnnParams};
use gnz::metrics::accuracy;
use gnz::pipeline::synthetic::{sample_labels, two_moons};

fn main() -> gnz::Result<()> {
    // a strong edge wins: node 1 sides with node 0
    let path = Graph::from_edges(3, [(0, 1, 10.0), (1, 2, 0.1)])?;
    let f = minimize_class_ratio(&path, &[(0, 1.0), (2, -1.0)], &L1Config::default())?;
    println!("path u = {:?}, ratio {:.4}", f.u, f.ratio());

    let data = two_moons(600, 0.1, 2)?;
    let labels = sample_labels(&data.truth, 2, 10, 2)?;
    let (graph, _) = build_knn_graph(&data.embeddings, &KnnParams { k: 10, ..Default::default() })?;
    let (h, report) = diffuse_l1(&graph, &labels, &L1Config::default())?;
    for (k, class) in report.classes.iter().enumerate() {
        let trace: Vec<String> = class.ratio_trace.iter().map(|r| format!("{r:.4}")).collect();
        println!("class {k}: ratio {}", trace.join(" -> "));
    }
    println!("accuracy {:.4}", accuracy(&harden_labels(&h), &data.truth)?);
    Ok(())
}
