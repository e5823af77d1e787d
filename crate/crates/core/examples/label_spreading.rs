//! Quadratic label spreading: dense solve, conjugate gradients, and the
//! plain fixed-point iteration all land on the same scores.
//!
//! ```bash
//! cargo run --example label_spreading
//! ```

use gnz::certainty::harden_labels;
use gnz::diffusion::l2::{diffuse_closed_form, diffuse_iterative, select_alpha, DiffusionConfig, IterativeSolver};
use gnz::diffusion::seed_matrix;
use gnz::graph::{build_knn_graph, KnnParams};
use gnz::metrics::accuracy;
use gnz::pipeline::synthetic::{sample_labels, two_moons};
use gnz::pipeline::DEFAULT_ALPHA_GRID;

fn main() -> gnz::Result<()> {
    let data = two_moons(600, 0.1, 0)?;
    let labels = sample_labels(&data.truth, 2, 10, 0)?;
    let (graph, _) = build_knn_graph(&data.embeddings, &KnnParams { k: 10, ..Default::default() })?;
    let s = graph.normalized_operator()?;
    let y = seed_matrix(&labels);

    let alpha = 0.99;
    let dense = diffuse_closed_form(&s, &y, alpha)?;
    for solver in [IterativeSolver::ConjugateGradient, IterativeSolver::FixedPoint] {
        let cfg = DiffusionConfig {
            alpha,
            solver,
            max_iter: 10_000,
            ..Default::default()
        };
        let (h, report) = diffuse_iterative(&s, &y, &cfg)?;
        println!(
            "{solver:?}: {} iterations, residual {:.2e}, max |H - H_dense| = {:.2e}",
            report.iterations,
            report.residual,
            h.max_abs_diff(&dense)
        );
    }
    println!("accuracy at alpha = {alpha}: {:.4}", accuracy(&harden_labels(&dense), &data.truth)?);

    let sel = select_alpha(&s, &labels, &DEFAULT_ALPHA_GRID, 0.3, 7, &DiffusionConfig::default())?;
    println!("holdout grid search picked alpha = {}", sel.alpha);
    for (a, acc) in sel.table {
        println!("  alpha {a:<5} holdout accuracy {acc:.3}");
    }
    Ok(())
}
