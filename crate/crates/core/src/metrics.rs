//! Accuracy and ROC-AUC.
//!
//! AUC uses the Mann-Whitney count: over all (positive, negative) pairs, one
//! point when the positive scores higher and half a point on ties. The count
//! is kept as an exact integer of half-points, see [`AucCounts`].

use serde::{Deserialize, Serialize};

use crate::diffusion::ScoreMatrix;
use crate::error::{Error, Result};

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// AUC as the exact rational `half_points / (2 * pairs)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AucCounts {
    /// Twice the number of correctly ordered pairs plus the number of tied pairs.
    pub half_points: u64,
    /// `n_pos * n_neg`
    pub pairs: u64,
}

impl AucCounts {
    pub fn value(&self) -> f64 {
        self.half_points as f64 / (2.0 * self.pairs as f64)
    }
}

pub fn auc_counts(scores: &[f64], truth: &[bool]) -> Result<AucCounts> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: scores.len(),
        });
    }
    let positives = truth.iter().filter(|&&t| t).count() as u64;
    let negatives = truth.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidParameter("AUC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut half_points = 0u64;
    let mut negatives_below = 0u64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]].total_cmp(&scores[order[start]]).is_eq() {
            end += 1;
        }
        let group = &order[start..end];
        let pos = group.iter().filter(|&&i| truth[i]).count() as u64;
        let neg = group.len() as u64 - pos;
        half_points += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        start = end;
    }
    Ok(AucCounts {
        half_points,
        pairs: positives * negatives,
    })
}

pub fn binary_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    auc_counts(scores, truth).map(|c| c.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroAuc {
    /// `None` for classes absent from (or covering all of) the truth.
    pub per_class: Vec<Option<f64>>,
    /// Unweighted mean over the classes that have a value.
    pub mean: Option<f64>,
    pub absent: Vec<usize>,
}

/// One-vs-rest AUC per column of `h`.
pub fn macro_auc(h: &ScoreMatrix, truth: &[usize]) -> Result<MacroAuc> {
    if h.rows() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: h.rows(),
        });
    }
    let mut per_class = Vec::with_capacity(h.classes());
    let mut absent = Vec::new();
    for c in 0..h.classes() {
        let t: Vec<bool> = truth.iter().map(|&l| l == c).collect();
        if t.iter().all(|&x| x) || !t.iter().any(|&x| x) {
            per_class.push(None);
            absent.push(c);
        } else {
            per_class.push(Some(binary_auc(&h.column(c), &t)?));
        }
    }
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let mean = if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    };
    Ok(MacroAuc {
        per_class,
        mean,
        absent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub per_class_auc: Vec<Option<f64>>,
    pub macro_auc: Option<f64>,
    pub absent_classes: Vec<usize>,
    pub samples: usize,
    pub class_counts: Vec<usize>,
}

pub fn evaluate(pred: &[usize], h: &ScoreMatrix, truth: &[usize]) -> Result<MetricReport> {
    let accuracy = accuracy(pred, truth)?;
    let auc = macro_auc(h, truth)?;
    let mut class_counts = vec![0; h.classes()];
    for &t in truth {
        if t < class_counts.len() {
            class_counts[t] += 1;
        }
    }
    Ok(MetricReport {
        accuracy,
        per_class_auc: auc.per_class,
        macro_auc: auc.mean,
        absent_classes: auc.absent,
        samples: truth.len(),
        class_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[0, 1, 1], &[0, 1, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert!(matches!(accuracy(&[], &[]), Err(Error::EmptyInput)));
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn auc_cases() {
        assert_eq!(binary_auc(&[0.9, 0.8, 0.3, 0.2], &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(binary_auc(&[0.9, 0.4, 0.6, 0.2], &[true, false, false, true]).unwrap(), 0.5);
        assert_eq!(binary_auc(&[0.3; 5], &[true, false, true, false, false]).unwrap(), 0.5);
        assert!(binary_auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn macro_auc_cases() {
        let h = ScoreMatrix::from_rows(&[[0.9, 0.1], [0.8, 0.2], [0.1, 0.9]]).unwrap();
        let m = macro_auc(&h, &[0, 0, 1]).unwrap();
        assert_eq!(m.per_class, vec![Some(1.0), Some(1.0)]);
        assert_eq!(m.mean, Some(1.0));

        let flat = ScoreMatrix::from_rows(&[[1.0, 1.0, 1.0]; 4]).unwrap();
        let m = macro_auc(&flat, &[0, 1, 2, 1]).unwrap();
        assert_eq!(m.per_class, vec![Some(0.5); 3]);

        let m = macro_auc(&flat, &[0, 1, 1, 1]).unwrap();
        assert_eq!(m.per_class[2], None);
        assert_eq!(m.absent, vec![2]);
    }
}
