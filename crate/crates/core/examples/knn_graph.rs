//! Build a kNN graph over the two-moons point cloud and inspect it.
//!
//! ```bash
//! cargo run --example knn_graph
//! ```

use gnz::graph::{build_knn_graph, KnnParams, Kernel, Metric};
use gnz::pipeline::synthetic::two_moons;

fn main() -> gnz::Result<()> {
    let data = two_moons(400, 0.08, 1)?;

    for (kernel, name) in [(Kernel::GaussianLocal, "gaussian-local"), (Kernel::Binary, "binary")] {
        let params = KnnParams {
            k: 10,
            metric: Metric::Euclidean,
            kernel,
        };
        let (graph, report) = build_knn_graph(&data.embeddings, &params)?;
        let components = graph.normalized_operator()?.components().len();
        println!(
            "{name:>15}: {} nodes, {} edges, mean degree {:.2}, {components} component(s)",
            report.nodes, report.edges, report.mean_degree
        );
    }

    let (graph, _) = build_knn_graph(&data.embeddings, &KnnParams { k: 5, ..Default::default() })?;
    println!("node 0 neighbors:");
    for (j, w) in graph.neighbors(0) {
        println!("  {j:>4}  w = {w:.4}");
    }
    Ok(())
}
