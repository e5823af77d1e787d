//! Worked examples checked against independent oracles.

mod common;

use gnz::certainty::{argmax, harden_labels, PseudoLabel, PseudoLabelSet};
use gnz::diffusion::l1::{diffuse_l1, minimize_class_ratio, ratio_energy, Denominator, L1Config, TvNormalization};
use gnz::diffusion::l2::{diffuse_closed_form, select_alpha, DiffusionConfig};
use gnz::diffusion::{seed_matrix, ScoreMatrix};
use gnz::graph::{build_knn_graph, knn_lists, KnnParams, Kernel, Metric};
use gnz::io::principal_projection;
use gnz::metrics::{accuracy, macro_auc};
use gnz::pipeline::extractor::sharpen;
use gnz::pipeline::synthetic;
use gnz::pipeline::ExtractorRequest;
use gnz::{EmbeddingMatrix, Graph, LabelSet};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum()
}

#[test]
fn projection_variances_are_top_covariance_eigenvalues() {
    let mut r = common::rng(11);
    let (n, p) = (50, 10);
    // anisotropic columns so the top two eigenvalues are well separated
    let data: Vec<f32> = (0..n * p)
        .map(|k| {
            let z: f64 = StandardNormal.sample(&mut r);
            (z * (1.0 + (k % p) as f64)) as f32
        })
        .collect();
    let m = EmbeddingMatrix::new(n, p, data).unwrap();
    let mean: Vec<f64> = (0..p)
        .map(|c| (0..n).map(|i| m.row(i)[c] as f64).sum::<f64>() / n as f64)
        .collect();
    let mut cov = vec![vec![0.0; p]; p];
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                cov[a][b] += (m.row(i)[a] as f64 - mean[a]) * (m.row(i)[b] as f64 - mean[b]) / (n - 1) as f64;
            }
        }
    }
    let ev = common::jacobi_eigenvalues(cov);
    let proj = principal_projection(&m).unwrap();
    for (axis, &want) in ev.iter().take(2).enumerate() {
        let mu = proj.iter().map(|q| q[axis]).sum::<f64>() / n as f64;
        let var = proj.iter().map(|q| (q[axis] - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mu.abs() < 1e-9);
        assert!((var - want).abs() < 1e-8 * want, "axis {axis}: {var} vs {want}");
    }
}

#[test]
fn line_points_give_expected_binary_graph() {
    let m = EmbeddingMatrix::from_rows(&[[0.0f32], [1.0], [3.0]]).unwrap();
    let params = KnnParams {
        k: 1,
        metric: Metric::Euclidean,
        kernel: Kernel::Binary,
    };
    let (g, _) = build_knn_graph(&m, &params).unwrap();
    let edges: Vec<_> = g.edges().collect();
    assert_eq!(edges, vec![(0, 1, 1.0), (1, 2, 1.0)]);
}

#[test]
fn knn_lists_match_all_pairs_scan() {
    let mut r = common::rng(5);
    for _ in 0..20 {
        let n = r.random_range(5..40);
        let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..4).map(|_| r.random_range(-1.0f32..1.0)).collect()).collect();
        let m = EmbeddingMatrix::from_rows(&rows).unwrap();
        let k = r.random_range(1..n);
        let lists = knn_lists(&m, k, Metric::Euclidean).unwrap();
        for i in 0..n {
            let mut all: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (sq_dist(&rows[i], &rows[j]), j)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let want: Vec<usize> = all[..k].iter().map(|x| x.1).collect();
            let got: Vec<usize> = lists[i].iter().map(|nb| nb.id).collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn gaussian_weights_match_scalar_formula() {
    let mut r = common::rng(6);
    let n = 25;
    let k = 4;
    let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..3).map(|_| r.random_range(-1.0f32..1.0)).collect()).collect();
    let m = EmbeddingMatrix::from_rows(&rows).unwrap();
    let (g, _) = build_knn_graph(&m, &KnnParams { k, ..Default::default() }).unwrap();
    // sigma_i: mean distance to the k nearest others
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| sq_dist(&rows[i], &rows[j]).sqrt()).collect();
            d.sort_by(f64::total_cmp);
            d[..k].iter().sum::<f64>() / k as f64
        })
        .collect();
    for (i, j, w) in g.edges() {
        let d2 = sq_dist(&rows[i], &rows[j]);
        let want = (-d2 / (sigma[i] * sigma[j])).exp();
        assert!((w as f64 - want).abs() <= 1e-6 * want.max(1e-30), "({i},{j}) {w} vs {want}");
    }
}

#[test]
fn closed_form_matches_dense_elimination() {
    let mut r = common::rng(7);
    for _ in 0..10 {
        let n = r.random_range(5..=100);
        let g = common::random_graph(n, 4.0 / n as f64, &mut r);
        let labels = common::random_labels(n, 3, 6.min(n), &mut r);
        let y = seed_matrix(&labels);
        let h = diffuse_closed_form(&g.normalized_operator().unwrap(), &y, 0.9).unwrap();
        assert!(common::max_abs_diff(&h, &common::dense_diffusion(&g, &y, 0.9)) <= 1e-8);
    }
}

#[test]
fn separated_blobs_select_smallest_alpha() {
    let d = synthetic::blobs(120, 2, 5, 0.5, 3).unwrap();
    let params = KnnParams {
        k: 8,
        ..Default::default()
    };
    let (g, _) = build_knn_graph(&d.embeddings, &params).unwrap();
    assert_eq!(g.normalized_operator().unwrap().components().len(), 2);
    let labels = synthetic::sample_labels(&d.truth, 2, 10, 1).unwrap();
    let sel = select_alpha(
        &g.normalized_operator().unwrap(),
        &labels,
        &[0.1, 0.5, 0.9],
        0.3,
        4,
        &DiffusionConfig::default(),
    )
    .unwrap();
    assert!(sel.table.iter().all(|&(_, acc)| acc == 1.0), "{:?}", sel.table);
    assert_eq!(sel.alpha, 0.1);
}

#[test]
fn ratio_is_tv_over_denominator() {
    let mut r = common::rng(8);
    let g = common::random_graph(30, 0.2, &mut r);
    let w = common::dense_weights(&g);
    let u: Vec<f64> = (0..30).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut tv = 0.0;
    for i in 0..30 {
        for j in i + 1..30 {
            tv += w[i][j] * (u[i] - u[j]).abs();
        }
    }
    let l1: f64 = u.iter().map(|v| v.abs()).sum();
    let mut sorted = u.clone();
    sorted.sort_by(f64::total_cmp);
    let med = sorted[14];
    let centered: f64 = u.iter().map(|v| (v - med).abs()).sum();
    let plain = ratio_energy(&g, &u, &L1Config::default()).unwrap();
    let median = ratio_energy(
        &g,
        &u,
        &L1Config {
            denominator: Denominator::L1MedianCentered,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((plain - tv / l1).abs() < 1e-12 * plain);
    assert!((median - tv / centered).abs() < 1e-12 * median);
}

#[test]
fn strong_edge_pulls_middle_node() {
    let g = Graph::from_edges(3, [(0, 1, 10.0), (1, 2, 0.1)]).unwrap();
    let cfg = L1Config::default();
    // brute force over u1 on a fine grid
    let mut best = (f64::INFINITY, 0.0);
    for k in -2000..=2000 {
        let u1 = k as f64 / 2000.0;
        let r = ratio_energy(&g, &[1.0, u1, -1.0], &cfg).unwrap();
        if r < best.0 {
            best = (r, u1);
        }
    }
    assert!(best.1 > 0.0);
    let f = minimize_class_ratio(&g, &[(0, 1.0), (2, -1.0)], &cfg).unwrap();
    assert!(f.u[1] > 0.0);
    assert!(f.ratio() <= best.0 + 1e-6);
}

#[test]
fn two_class_sign_agrees_with_argmax() {
    let d = synthetic::two_moons(200, 0.1, 2).unwrap();
    let (g, _) = build_knn_graph(&d.embeddings, &KnnParams { k: 8, ..Default::default() }).unwrap();
    let labels = synthetic::sample_labels(&d.truth, 2, 5, 2).unwrap();
    let (h, _) = diffuse_l1(&g, &labels, &L1Config::default()).unwrap();
    let hard = harden_labels(&h);
    let mut agree = 0;
    for i in 0..200 {
        let by_sign = if h.get(i, 0) >= 0.0 { 0 } else { 1 };
        agree += (by_sign == hard[i]) as usize;
    }
    // the two columns solve mirrored problems; allow a handful of near-zero nodes
    assert!(agree >= 196, "{agree} of 200 agree");
}

#[test]
fn degree_normalized_tv_mode_runs() {
    let d = synthetic::two_moons(100, 0.1, 4).unwrap();
    let (g, _) = build_knn_graph(&d.embeddings, &KnnParams { k: 6, ..Default::default() }).unwrap();
    let labels = synthetic::sample_labels(&d.truth, 2, 3, 4).unwrap();
    let cfg = L1Config {
        tv_normalization: TvNormalization::Degree,
        ..Default::default()
    };
    let (h, rep) = diffuse_l1(&g, &labels, &cfg).unwrap();
    assert_eq!(h.rows(), 100);
    for f in &rep.classes {
        assert!(f.ratio_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}

#[test]
fn argmax_matches_linear_scan() {
    let mut r = common::rng(9);
    for _ in 0..200 {
        let c = r.random_range(1..6);
        let row: Vec<f64> = (0..c).map(|_| r.random_range(0..4) as f64).collect();
        let mut best = 0;
        for k in 1..c {
            if row[k] > row[best] {
                best = k;
            }
        }
        assert_eq!(argmax(&row), best);
    }
}

#[test]
fn accuracy_matches_count() {
    let mut r = common::rng(10);
    let pred: Vec<usize> = (0..300).map(|_| r.random_range(0..4)).collect();
    let truth: Vec<usize> = (0..300).map(|_| r.random_range(0..4)).collect();
    let hits = pred.iter().zip(&truth).filter(|(a, b)| a == b).count();
    assert_eq!(accuracy(&pred, &truth).unwrap(), hits as f64 / 300.0);
}

#[test]
fn macro_auc_matches_pairwise_oracle() {
    let mut r = common::rng(12);
    let h = ScoreMatrix::new(50, 3, (0..150).map(|_| r.random_range(0..10) as f64).collect()).unwrap();
    let truth: Vec<usize> = (0..50).map(|i| if i < 3 { i } else { r.random_range(0..3) }).collect();
    let got = macro_auc(&h, &truth).unwrap();
    let mut mean = 0.0;
    for c in 0..3 {
        let t: Vec<bool> = truth.iter().map(|&l| l == c).collect();
        let (half, pairs) = common::brute_auc(&h.column(c), &t);
        let want = half as f64 / (2.0 * pairs as f64);
        assert_eq!(got.per_class[c], Some(want));
        mean += want / 3.0;
    }
    assert!((got.mean.unwrap() - mean).abs() < 1e-15);
}

#[test]
fn auc_worked_example() {
    let scores = [0.9, 0.4, 0.6, 0.2];
    let truth = [true, false, false, true];
    assert_eq!(gnz::metrics::binary_auc(&scores, &truth).unwrap(), 0.5);
}

fn within_class_variance(m: &EmbeddingMatrix, truth: &[usize], classes: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..classes {
        let members: Vec<usize> = (0..m.rows()).filter(|&i| truth[i] == c).collect();
        let mean: Vec<f64> = (0..m.dim())
            .map(|d| members.iter().map(|&i| m.row(i)[d] as f64).sum::<f64>() / members.len() as f64)
            .collect();
        for &i in &members {
            total += m.row(i).iter().zip(&mean).map(|(&v, mu)| (v as f64 - mu).powi(2)).sum::<f64>();
        }
    }
    total / m.rows() as f64
}

#[test]
fn sharpening_step_reduces_within_class_variance() {
    let d = synthetic::blobs(80, 2, 6, 2.0, 13).unwrap();
    let labels = synthetic::sample_labels(&d.truth, 2, 4, 13).unwrap();
    let pseudo = PseudoLabelSet {
        classes: 2,
        entries: labels
            .unlabeled()
            .map(|id| PseudoLabel {
                id,
                label: d.truth[id],
                weight: 1.0,
            })
            .collect(),
    };
    let req = ExtractorRequest {
        data_ref: "blobs".into(),
        n: 80,
        labeled: labels.labeled().to_vec(),
        pseudo: Some(pseudo),
        ramp_weight: 1.0,
        epoch: 1,
        seed: 0,
        output_path: Default::default(),
    };
    let before = within_class_variance(&d.embeddings, &d.truth, 2);
    let after = within_class_variance(&sharpen(&d.embeddings, &req, 0.1).unwrap(), &d.truth, 2);
    assert!(after < before, "{after} !< {before}");
    // every point moves 10% of the way to its exact class mean: variance scales by 0.81
    assert!((after - 0.81 * before).abs() < 1e-4 * before);
}

#[test]
fn fully_labeled_graph_returns_seeds() {
    let g = Graph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
    let labels = LabelSet::new(4, None, vec![(0, 0), (1, 0), (2, 1), (3, 1)]).unwrap();
    let (h, _) = diffuse_l1(&g, &labels, &L1Config::default()).unwrap();
    assert_eq!(harden_labels(&h), vec![0, 0, 1, 1]);
}
