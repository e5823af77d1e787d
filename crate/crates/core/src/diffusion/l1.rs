//! Total-variation (p = 1) diffusion.
//!
//! Each class k gets a node function `u^k` minimizing the ratio
//! `TV(u) / |u|` under hard constraints: `+1` on nodes labeled k, `-1` on
//! nodes labeled with any other class, `[-1, 1]` elsewhere. The ratio is a
//! quotient of two convex one-homogeneous functions, minimized with an
//! inverse-power style outer loop:
//!
//! ```text
//! lambda_t = TV(u_t) / N(u_t),   s_t in dN(u_t)
//! u_{t+1}  = argmin_u  TV(u) - lambda_t <s_t, u>    (over the constraint set)
//! ```
//!
//! Any `u` with a negative inner objective has a ratio below `lambda_t`,
//! because `<s_t, u> <= N(u)`. The inner problem is solved by a primal-dual
//! splitting on the weighted incidence operator `K`, `TV(u) = |K u|_1`. The
//! iterate with the lowest ratio is taken as `u_{t+1}`, and only if it
//! improves on `lambda_t`, so the recorded ratio sequence never increases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScoreMatrix;
use crate::data::LabelSet;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvNormalization {
    /// `1/2 sum_ij w_ij |u_i - u_j|`
    #[default]
    Plain,
    /// Plain TV of `D^{-1} u`.
    Degree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Denominator {
    /// `sum_i |u_i|`
    #[default]
    L1,
    /// `sum_i |u_i - median(u)|`
    L1MedianCentered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct L1Config {
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub tol: f64,
    /// Primal step; derived from the operator norm bound when unset.
    pub primal_step: Option<f64>,
    /// Dual step; derived from the operator norm bound when unset.
    pub dual_step: Option<f64>,
    pub tv_normalization: TvNormalization,
    pub denominator: Denominator,
}

impl Default for L1Config {
    fn default() -> Self {
        Self {
            outer_iters: 20,
            inner_iters: 500,
            tol: 1e-6,
            primal_step: None,
            dual_step: None,
            tv_normalization: TvNormalization::Plain,
            denominator: Denominator::L1,
        }
    }
}

impl L1Config {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::InvalidParameter("outer_iters and inner_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        for step in [self.primal_step, self.dual_step].into_iter().flatten() {
            if !(step > 0.0) || !step.is_finite() {
                return Err(Error::InvalidParameter(format!("step must be > 0, got {step}")));
            }
        }
        Ok(())
    }
}

/// `K u` has one row per undirected edge `e = (i, j)`:
/// `(K u)_e = a_e u_i - b_e u_j`.
#[derive(Debug, Clone)]
struct Incidence {
    n: usize,
    ends: Vec<(usize, usize)>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Incidence {
    fn new(g: &Graph, normalization: TvNormalization) -> Result<Self> {
        let inv_deg = match normalization {
            TvNormalization::Plain => None,
            TvNormalization::Degree => Some(g.degrees()?.iter().map(|d| 1.0 / d).collect::<Vec<_>>()),
        };
        let mut ends = Vec::with_capacity(g.edge_count());
        let mut a = Vec::with_capacity(g.edge_count());
        let mut b = Vec::with_capacity(g.edge_count());
        for (i, j, w) in g.edges() {
            let w = w as f64;
            ends.push((i, j));
            match &inv_deg {
                None => {
                    a.push(w);
                    b.push(w);
                }
                Some(inv) => {
                    a.push(w * inv[i]);
                    b.push(w * inv[j]);
                }
            }
        }
        Ok(Self { n: g.n(), ends, a, b })
    }

    fn tv(&self, u: &[f64]) -> f64 {
        self.ends
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&(i, j), (a, b))| (a * u[i] - b * u[j]).abs())
            .sum()
    }

    /// Upper bound on `||K||_2^2` via `||K||_1 ||K||_inf`.
    fn norm_sq_bound(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        let mut row_max: f64 = 0.0;
        for (&(i, j), (a, b)) in self.ends.iter().zip(self.a.iter().zip(&self.b)) {
            col[i] += a.abs();
            col[j] += b.abs();
            row_max = row_max.max(a.abs() + b.abs());
        }
        col.into_iter().fold(0.0, f64::max) * row_max
    }
}

pub fn tv_energy(g: &Graph, u: &[f64], normalization: TvNormalization) -> Result<f64> {
    check_len(g, u)?;
    Ok(Incidence::new(g, normalization)?.tv(u))
}

fn check_len(g: &Graph, u: &[f64]) -> Result<()> {
    if u.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: u.len(),
        });
    }
    Ok(())
}

fn median(u: &[f64]) -> f64 {
    let mut v = u.to_vec();
    let mid = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

fn denominator(u: &[f64], kind: Denominator) -> f64 {
    match kind {
        Denominator::L1 => u.iter().map(|v| v.abs()).sum(),
        Denominator::L1MedianCentered => {
            let m = median(u);
            u.iter().map(|v| (v - m).abs()).sum()
        }
    }
}

/// A subgradient `s` of the denominator at `u`, with `<s, u> = N(u)`.
fn denominator_subgradient(u: &[f64], kind: Denominator) -> Vec<f64> {
    let sign = |v: f64| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    match kind {
        Denominator::L1 => u.iter().map(|&v| sign(v)).collect(),
        Denominator::L1MedianCentered => {
            let m = median(u);
            let above = u.iter().filter(|&&v| v > m).count() as f64;
            let below = u.iter().filter(|&&v| v < m).count() as f64;
            let at = u.len() as f64 - above - below;
            // entries at the median balance the sum to zero
            let tie = if at > 0.0 { (below - above) / at } else { 0.0 };
            u.iter()
                .map(|&v| if v == m { tie } else { sign(v - m) })
                .collect()
        }
    }
}

pub fn ratio_energy(g: &Graph, u: &[f64], cfg: &L1Config) -> Result<f64> {
    check_len(g, u)?;
    let den = denominator(u, cfg.denominator);
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(tv_energy(g, u, cfg.tv_normalization)? / den)
}

/// Solution of one constrained ratio problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFunction {
    pub u: Vec<f64>,
    /// Ratio at the initial point and after every accepted outer step.
    pub ratio_trace: Vec<f64>,
    /// Inner iterations run per outer step.
    pub inner_iterations: Vec<usize>,
}

impl ClassFunction {
    pub fn ratio(&self) -> f64 {
        *self.ratio_trace.last().expect("trace holds the initial ratio")
    }
}

struct Problem<'a> {
    k: Incidence,
    fixed: Vec<Option<f64>>,
    cfg: &'a L1Config,
    tau: f64,
    sigma: f64,
}

impl Problem<'_> {
    fn ratio(&self, u: &[f64]) -> f64 {
        let den = denominator(u, self.cfg.denominator);
        if den == 0.0 {
            f64::INFINITY
        } else {
            self.k.tv(u) / den
        }
    }

    /// Primal-dual iterations on `min TV(u) - lambda <s, u>` starting from
    /// `u`, warm-starting the dual from `y`. Returns the lowest-ratio iterate
    /// with its ratio and the number of iterations run.
    fn inner(&self, u0: &[f64], y: &mut [f64], lambda: f64, s: &[f64]) -> (Vec<f64>, f64, usize) {
        let n = u0.len();
        let mut u = u0.to_vec();
        let mut u_bar = u.clone();
        let mut kty = vec![0.0; n];
        let mut best = u.clone();
        let mut best_ratio = self.ratio(&u);
        let mut iters = 0;
        for _ in 0..self.cfg.inner_iters {
            iters += 1;
            for (e, &(i, j)) in self.k.ends.iter().enumerate() {
                let z = self.k.a[e] * u_bar[i] - self.k.b[e] * u_bar[j];
                y[e] = (y[e] + self.sigma * z).clamp(-1.0, 1.0);
            }
            kty.iter_mut().for_each(|v| *v = 0.0);
            for (e, &(i, j)) in self.k.ends.iter().enumerate() {
                kty[i] += self.k.a[e] * y[e];
                kty[j] -= self.k.b[e] * y[e];
            }
            let mut change: f64 = 0.0;
            for i in 0..n {
                let next = match self.fixed[i] {
                    Some(v) => v,
                    None => (u[i] - self.tau * (kty[i] - lambda * s[i])).clamp(-1.0, 1.0),
                };
                u_bar[i] = 2.0 * next - u[i];
                change = change.max((next - u[i]).abs());
                u[i] = next;
            }
            let r = self.ratio(&u);
            if r < best_ratio {
                best_ratio = r;
                best.copy_from_slice(&u);
            }
            if change <= self.cfg.tol {
                break;
            }
        }
        (best, best_ratio, iters)
    }
}

/// Minimize `TV(u) / N(u)` with `u_i` fixed at each given `(node, +-1)`.
pub fn minimize_class_ratio(g: &Graph, constraints: &[(usize, f64)], cfg: &L1Config) -> Result<ClassFunction> {
    cfg.validate()?;
    let n = g.n();
    let mut fixed = vec![None; n];
    for &(node, value) in constraints {
        if node >= n {
            return Err(Error::InvalidParameter(format!("constraint node {node} out of range for {n} nodes")));
        }
        if value != 1.0 && value != -1.0 {
            return Err(Error::InvalidParameter(format!("constraint value must be +1 or -1, got {value}")));
        }
        if fixed[node].replace(value).is_some() {
            return Err(Error::InvalidParameter(format!("node {node} constrained twice")));
        }
    }
    if !constraints.iter().any(|c| c.1 > 0.0) {
        return Err(Error::EmptyConstraintSide("no +1 constraint"));
    }
    if !constraints.iter().any(|c| c.1 < 0.0) {
        return Err(Error::EmptyConstraintSide("no -1 constraint"));
    }

    let k = Incidence::new(g, cfg.tv_normalization)?;
    let bound = k.norm_sq_bound().max(f64::MIN_POSITIVE);
    let (tau, sigma) = match (cfg.primal_step, cfg.dual_step) {
        (None, None) => (1.0 / bound.sqrt(), 1.0 / bound.sqrt()),
        (Some(t), None) => (t, 1.0 / (t * bound)),
        (None, Some(s)) => (1.0 / (s * bound), s),
        (Some(t), Some(s)) => {
            if t * s * bound > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "steps violate tau * sigma * ||K||^2 <= 1 (bound {bound:e})"
                )));
            }
            (t, s)
        }
    };
    let problem = Problem {
        k,
        fixed,
        cfg,
        tau,
        sigma,
    };

    let mut u: Vec<f64> = problem.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut lambda = problem.ratio(&u);
    let mut ratio_trace = vec![lambda];
    let mut inner_iterations = Vec::new();
    let mut dual = vec![0.0; problem.k.ends.len()];
    for _ in 0..cfg.outer_iters {
        if lambda == 0.0 {
            break;
        }
        let s = denominator_subgradient(&u, cfg.denominator);
        let (candidate, ratio, iters) = problem.inner(&u, &mut dual, lambda, &s);
        inner_iterations.push(iters);
        if !ratio.is_finite() {
            return Err(Error::SolverFailure {
                reason: format!("non-finite ratio {ratio}"),
                trace: ratio_trace,
            });
        }
        if ratio >= lambda {
            break;
        }
        let gain = lambda - ratio;
        u = candidate;
        lambda = ratio;
        ratio_trace.push(lambda);
        if gain <= cfg.tol * ratio_trace[0].max(lambda) {
            break;
        }
    }

    if ratio_trace.windows(2).any(|w| w[1] > w[0] + 1e-9) {
        return Err(Error::SolverFailure {
            reason: "ratio increased across an outer step".into(),
            trace: ratio_trace,
        });
    }
    for (i, f) in problem.fixed.iter().enumerate() {
        if let Some(v) = f {
            if u[i] != *v {
                return Err(Error::SolverFailure {
                    reason: format!("constraint on node {i} violated"),
                    trace: ratio_trace,
                });
            }
        }
    }
    Ok(ClassFunction {
        u,
        ratio_trace,
        inner_iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Report {
    pub classes: Vec<ClassFunction>,
}

/// One-vs-rest total-variation diffusion; column k of the result is `u^k`.
pub fn diffuse_l1(g: &Graph, labels: &LabelSet, cfg: &L1Config) -> Result<(ScoreMatrix, L1Report)> {
    if labels.n() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: labels.n(),
        });
    }
    let counts = labels.class_counts();
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass(missing));
    }
    let solved: Vec<ClassFunction> = (0..labels.classes())
        .into_par_iter()
        .map(|class| {
            let constraints: Vec<(usize, f64)> = labels
                .labeled()
                .iter()
                .map(|&(id, c)| (id, if c == class { 1.0 } else { -1.0 }))
                .collect();
            minimize_class_ratio(g, &constraints, cfg)
        })
        .collect::<Result<_>>()?;
    let columns: Vec<Vec<f64>> = solved.iter().map(|c| c.u.clone()).collect();
    Ok((ScoreMatrix::from_columns(&columns)?, L1Report { classes: solved }))
}
