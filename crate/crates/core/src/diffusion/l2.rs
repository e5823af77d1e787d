//! Quadratic (p = 2) label spreading: `H = (I - alpha S)^{-1} Y`.
//!
//! No `(1 - alpha)` prefactor is applied. It would rescale every score by
//! the same positive constant and leave the argmax untouched.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{seed_matrix, ScoreMatrix};
use crate::certainty::harden_labels;
use crate::data::LabelSet;
use crate::error::{Error, Result};
use crate::graph::NormalizedOperator;

pub const DEFAULT_DENSE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IterativeSolver {
    /// Per-column conjugate gradient on the SPD system `(I - alpha S) h = y`.
    #[default]
    ConjugateGradient,
    /// `H <- alpha S H + Y`.
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub solver: IterativeSolver,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.99,
            tol: 1e-8,
            max_iter: 1000,
            solver: IterativeSolver::ConjugateGradient,
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha must lie in [0, 1), got {alpha}")))
    }
}

fn check_shapes(s: &NormalizedOperator, y: &ScoreMatrix) -> Result<()> {
    if s.n() != y.rows() {
        return Err(Error::DimensionMismatch {
            expected: s.n(),
            found: y.rows(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionReport {
    pub iterations: usize,
    /// `||H - (alpha S H + Y)||_F / ||H||_F` of the returned matrix.
    pub residual: f64,
}

/// `||H - (alpha S H + Y)||_F / ||H||_F`; zero when both sides vanish.
pub fn fixed_point_residual(s: &NormalizedOperator, y: &ScoreMatrix, alpha: f64, h: &ScoreMatrix) -> f64 {
    let mut num = 0.0;
    let mut sh = vec![0.0; s.n()];
    for c in 0..h.classes() {
        let col = h.column(c);
        s.apply(&col, &mut sh);
        for i in 0..s.n() {
            let r = col[i] - (alpha * sh[i] + y.get(i, c));
            num += r * r;
        }
    }
    let den = h.frobenius_norm();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num.sqrt() / den
    }
}

/// Dense Cholesky solve of `(I - alpha S) H = Y`, for `n <= DEFAULT_DENSE_CAP`.
pub fn diffuse_closed_form(s: &NormalizedOperator, y: &ScoreMatrix, alpha: f64) -> Result<ScoreMatrix> {
    diffuse_closed_form_capped(s, y, alpha, DEFAULT_DENSE_CAP)
}

pub fn diffuse_closed_form_capped(
    s: &NormalizedOperator,
    y: &ScoreMatrix,
    alpha: f64,
    cap: usize,
) -> Result<ScoreMatrix> {
    check_alpha(alpha)?;
    check_shapes(s, y)?;
    let n = s.n();
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for (j, v) in s.row(i) {
            a[(i, j)] -= alpha * v;
        }
    }
    let rhs = DMatrix::from_row_slice(n, y.classes(), y.data());
    let chol = a.cholesky().ok_or(Error::Singular)?;
    let h = chol.solve(&rhs);
    let mut data = Vec::with_capacity(n * y.classes());
    for i in 0..n {
        data.extend(h.row(i).iter());
    }
    ScoreMatrix::new(n, y.classes(), data)
}

/// Iterative solve of `(I - alpha S) H = Y`, one column and one connected
/// component at a time. Components that hold no seed mass stay exactly zero.
pub fn diffuse_iterative(
    s: &NormalizedOperator,
    y: &ScoreMatrix,
    cfg: &DiffusionConfig,
) -> Result<(ScoreMatrix, DiffusionReport)> {
    cfg.validate()?;
    check_shapes(s, y)?;
    let components = s.components();
    let single = components.len() == 1;
    let parts: Vec<NormalizedOperator> = if single {
        Vec::new()
    } else {
        components.iter().map(|nodes| s.restrict(nodes)).collect()
    };
    let tasks: Vec<(usize, usize)> = (0..components.len())
        .flat_map(|k| (0..y.classes()).map(move |c| (k, c)))
        .collect();
    let solved: Vec<(Vec<f64>, usize, bool)> = tasks
        .par_iter()
        .map(|&(k, c)| {
            let op = if single { s } else { &parts[k] };
            let rhs: Vec<f64> = components[k].iter().map(|&i| y.get(i, c)).collect();
            match cfg.solver {
                IterativeSolver::FixedPoint => fixed_point(op, &rhs, cfg),
                IterativeSolver::ConjugateGradient => cg_column(op, &rhs, cfg),
            }
        })
        .collect();
    let mut h = ScoreMatrix::zeros(s.n(), y.classes());
    let mut iterations = 0;
    let mut converged = true;
    for (&(k, c), (x, it, ok)) in tasks.iter().zip(solved) {
        for (&i, v) in components[k].iter().zip(x) {
            h.set(i, c, v);
        }
        iterations = iterations.max(it);
        converged &= ok;
    }
    let residual = fixed_point_residual(s, y, cfg.alpha, &h);
    if !converged {
        return Err(Error::NotConverged {
            iterations,
            residual,
            last: Box::new(h),
        });
    }
    Ok((h, DiffusionReport { iterations, residual }))
}

/// `x <- alpha S x + y` from `x = y`; returns (solution, iterations, converged).
fn fixed_point(s: &NormalizedOperator, y: &[f64], cfg: &DiffusionConfig) -> (Vec<f64>, usize, bool) {
    let n = y.len();
    let mut x = y.to_vec();
    if y.iter().all(|&v| v == 0.0) {
        return (x, 0, true);
    }
    let mut next = vec![0.0; n];
    // error after a step is at most alpha / (1 - alpha) times the step
    let gain = cfg.alpha / (1.0 - cfg.alpha);
    for it in 1..=cfg.max_iter {
        s.apply(&x, &mut next);
        next.iter_mut().zip(y).for_each(|(o, &yv)| *o = cfg.alpha * *o + yv);
        let diff: f64 = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
        let norm: f64 = next.iter().map(|v| v * v).sum();
        std::mem::swap(&mut x, &mut next);
        if gain * diff.sqrt() <= cfg.tol * norm.sqrt() {
            return (x, it, true);
        }
    }
    (x, cfg.max_iter, false)
}

/// Conjugate gradients from `x = 0`; returns (solution, iterations, converged).
fn cg_column(s: &NormalizedOperator, y: &[f64], cfg: &DiffusionConfig) -> (Vec<f64>, usize, bool) {
    let n = y.len();
    let mut x = vec![0.0; n];
    if y.iter().all(|&v| v == 0.0) {
        return (x, 0, true);
    }
    let mut r = y.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 1..=cfg.max_iter {
        s.apply(&p, &mut ap);
        ap.iter_mut().zip(&p).for_each(|(a, &pv)| *a = pv - cfg.alpha * *a);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return (x, it, false);
        }
        let step = rr / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_next: f64 = r.iter().map(|v| v * v).sum();
        let xx: f64 = x.iter().map(|v| v * v).sum();
        // the smallest eigenvalue of I - alpha S is at least 1 - alpha, so this
        // bounds the relative error of x, not just its residual, by tol
        if rr_next.sqrt() <= cfg.tol * (1.0 - cfg.alpha) * xx.sqrt() {
            return (x, it, true);
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    (x, cfg.max_iter, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSelection {
    pub alpha: f64,
    /// `(alpha, holdout accuracy)` in grid order.
    pub table: Vec<(f64, f64)>,
}

/// Stratified seed/holdout split of the labeled nodes. Each class holds out
/// `max(1, round(fraction * count))` nodes and must keep at least one seed.
pub fn stratified_holdout(labels: &LabelSet, fraction: f64, seed: u64) -> Result<(LabelSet, Vec<(usize, usize)>)> {
    if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds = Vec::new();
    let mut holdout = Vec::new();
    for class in 0..labels.classes() {
        let mut members: Vec<usize> = labels
            .labeled()
            .iter()
            .filter(|&&(_, c)| c == class)
            .map(|&(id, _)| id)
            .collect();
        let take = ((fraction * members.len() as f64).round() as usize).max(1);
        if take >= members.len() {
            return Err(Error::InvalidParameter(format!(
                "holdout leaves class {class} with no seeds ({} labeled)",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        holdout.extend(members[..take].iter().map(|&id| (id, class)));
        seeds.extend(members[take..].iter().map(|&id| (id, class)));
    }
    holdout.sort_unstable();
    let seeds = LabelSet::new(labels.n(), Some(labels.classes()), seeds)?;
    Ok((seeds, holdout))
}

/// Grid search of alpha by holdout accuracy; ties go to the smaller alpha.
pub fn select_alpha(
    s: &NormalizedOperator,
    labels: &LabelSet,
    grid: &[f64],
    holdout_fraction: f64,
    seed: u64,
    cfg: &DiffusionConfig,
) -> Result<AlphaSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty alpha grid".into()));
    }
    for &a in grid {
        check_alpha(a)?;
    }
    let (seeds, holdout) = stratified_holdout(labels, holdout_fraction, seed)?;
    let y = seed_matrix(&seeds);
    let mut table = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let (h, _) = diffuse_iterative(s, &y, &DiffusionConfig { alpha, ..*cfg })?;
        let pred = harden_labels(&h);
        let hits = holdout.iter().filter(|&&(id, c)| pred[id] == c).count();
        table.push((alpha, hits as f64 / holdout.len() as f64));
    }
    let mut best = table[0];
    for &(a, acc) in &table[1..] {
        if acc > best.1 || (acc == best.1 && a < best.0) {
            best = (a, acc);
        }
    }
    Ok(AlphaSelection { alpha: best.0, table })
}
