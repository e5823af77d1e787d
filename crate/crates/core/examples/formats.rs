//! Write and read every file format: GNZE embeddings, GNZG graphs, label,
//! prediction and projection CSVs.
//!
//! ```bash
//! cargo run --example formats
//! ```

use gnz::diffusion::l2::{diffuse_closed_form, DiffusionConfig};
use gnz::diffusion::seed_matrix;
use gnz::graph::{build_knn_graph, KnnParams};
use gnz::io::{self, PredictionTable};
use gnz::pipeline::synthetic::{blobs, sample_labels};

fn main() -> gnz::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = |name: &str| dir.path().join(name);

    let data = blobs(60, 3, 5, 1.5, 9)?;
    let labels = sample_labels(&data.truth, 3, 2, 9)?;
    io::write_embeddings(&data.embeddings, path("x.gnze"))?;
    io::write_labels(&labels, path("labels.csv"))?;

    let x = io::read_embeddings(path("x.gnze"))?;
    assert_eq!(x, data.embeddings);
    let (g, _) = build_knn_graph(&x, &KnnParams { k: 6, ..Default::default() })?;
    io::write_graph(&g, path("g.gnzg"))?;
    assert_eq!(io::read_graph(path("g.gnzg"))?, g);

    let labels = io::read_labels(path("labels.csv"), g.n())?;
    let h = diffuse_closed_form(&g.normalized_operator()?, &seed_matrix(&labels), DiffusionConfig::default().alpha)?;
    io::write_predictions(&PredictionTable::from_scores(h), path("pred.csv"))?;
    io::export_projection(&x, path("xy.csv"))?;

    for name in ["x.gnze", "g.gnzg", "labels.csv", "pred.csv", "xy.csv"] {
        let bytes = std::fs::metadata(path(name)).expect("written").len();
        println!("{name:>10}: {bytes} bytes");
    }
    let pred = std::fs::read_to_string(path("pred.csv")).expect("written");
    for line in pred.lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
