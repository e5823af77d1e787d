//! Independent oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use gnz::{Graph, LabelSet, ScoreMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected weighted graph: a random spanning path plus random extra edges.
pub fn random_graph(n: usize, extra: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for w in order.windows(2) {
        edges.push((w[0], w[1], rng.random_range(0.1f32..2.0)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(extra) {
                edges.push((i, j, rng.random_range(0.1f32..2.0)));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Labels with every class present at least once.
pub fn random_labels(n: usize, classes: usize, count: usize, rng: &mut ChaCha8Rng) -> LabelSet {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let pairs = ids[..count]
        .iter()
        .enumerate()
        .map(|(k, &id)| (id, if k < classes { k } else { rng.random_range(0..classes) }))
        .collect();
    LabelSet::new(n, Some(classes), pairs).unwrap()
}

pub fn dense_weights(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut w = vec![vec![0.0; n]; n];
    for (i, j, v) in g.entries() {
        w[i as usize][j as usize] = v as f64;
    }
    w
}

/// `D^{-1/2} W D^{-1/2}` from the dense weight matrix.
pub fn dense_normalized(g: &Graph) -> Vec<Vec<f64>> {
    let w = dense_weights(g);
    let d: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let n = w.len();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if w[i][j] != 0.0 {
                s[i][j] = w[i][j] / (d[i].sqrt() * d[j].sqrt());
            }
        }
    }
    s
}

/// Solve `A X = B` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            for c in 0..b[r].len() {
                b[r][c] -= f * b[col][c];
            }
        }
    }
    let m = b[0].len();
    let mut x = vec![vec![0.0; m]; n];
    for r in (0..n).rev() {
        for c in 0..m {
            let mut acc = b[r][c];
            for k in r + 1..n {
                acc -= a[r][k] * x[k][c];
            }
            x[r][c] = acc / a[r][r];
        }
    }
    x
}

/// Dense oracle for `(I - alpha S) H = Y`.
pub fn dense_diffusion(g: &Graph, y: &ScoreMatrix, alpha: f64) -> Vec<Vec<f64>> {
    let s = dense_normalized(g);
    let n = s.len();
    let a = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } - alpha * s[i][j]).collect())
        .collect();
    let b = (0..n).map(|i| y.row(i).to_vec()).collect();
    gauss_solve(a, b)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// AUC numerator over all positive/negative pairs: 2 per correct order, 1 per tie.
pub fn brute_auc(scores: &[f64], truth: &[bool]) -> (u64, u64) {
    let mut half = 0;
    let mut pairs = 0;
    for (i, &pi) in truth.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in truth.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                half += 2;
            } else if scores[i] == scores[j] {
                half += 1;
            }
        }
    }
    (half, pairs)
}

pub fn max_abs_diff(a: &ScoreMatrix, b: &[Vec<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for (i, row) in b.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m = m.max((a.get(i, c) - v).abs());
        }
    }
    m
}
