//! Argmax hardening and entropy certainty for pseudo-labels.

use serde::{Deserialize, Serialize};

use crate::data::LabelSet;
use crate::diffusion::ScoreMatrix;
use crate::error::{Error, Result};

/// Argmax of a score row, ties resolved to the smallest class index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = c;
        }
    }
    best
}

pub fn harden_labels(h: &ScoreMatrix) -> Vec<usize> {
    (0..h.rows()).map(|i| argmax(h.row(i))).collect()
}

/// `1 - M(p) / ln C` with `M` the Shannon entropy of the row after shifting
/// it to be non-negative and normalizing to unit sum. A row with no mass
/// after the shift counts as uniform.
pub fn entropy_certainty(row: &[f64], classes: usize) -> Result<f64> {
    if classes < 2 {
        return Err(Error::InvalidParameter(format!("certainty needs C >= 2, got {classes}")));
    }
    if row.len() != classes {
        return Err(Error::DimensionMismatch {
            expected: classes,
            found: row.len(),
        });
    }
    let min = row.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min < 0.0 { min } else { 0.0 };
    let total: f64 = row.iter().map(|v| v - shift).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Ok(0.0);
    }
    if row.iter().all(|&v| v == row[0]) {
        return Ok(0.0);
    }
    let entropy: f64 = row
        .iter()
        .map(|v| (v - shift) / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok((1.0 - entropy / (classes as f64).ln()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub id: usize,
    pub label: usize,
    pub weight: f64,
}

/// Pseudo-labels covering exactly the unlabeled nodes, sorted by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    pub classes: usize,
    pub entries: Vec<PseudoLabel>,
}

impl PseudoLabelSet {
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for e in &self.entries {
            h[e.label] += 1;
        }
        h
    }

    pub fn mean_weight(&self) -> Option<f64> {
        if self.entries.is_empty() {
            None
        } else {
            Some(self.entries.iter().map(|e| e.weight).sum::<f64>() / self.entries.len() as f64)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// With `balance`, each weight is scaled by `(n_u / C) / |class of i|` and
/// clamped back into `[0, 1]`, lifting minority pseudo-classes.
pub fn extract_pseudo_labels(h: &ScoreMatrix, labels: &LabelSet, balance: bool) -> Result<PseudoLabelSet> {
    if h.rows() != labels.n() {
        return Err(Error::DimensionMismatch {
            expected: labels.n(),
            found: h.rows(),
        });
    }
    let classes = h.classes();
    let mut entries = labels
        .unlabeled()
        .map(|id| {
            let row = h.row(id);
            Ok(PseudoLabel {
                id,
                label: argmax(row),
                weight: entropy_certainty(row, classes)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if balance && !entries.is_empty() {
        let mut counts = vec![0usize; classes];
        for e in &entries {
            counts[e.label] += 1;
        }
        let share = entries.len() as f64 / classes as f64;
        for e in &mut entries {
            e.weight = (e.weight * share / counts[e.label] as f64).clamp(0.0, 1.0);
        }
    }
    Ok(PseudoLabelSet { classes, entries })
}
