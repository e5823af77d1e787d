//! Label diffusion over a graph.
//!
//! [`l2`] spreads seed rows through the normalized operator; [`l1`] solves a
//! total-variation ratio problem per class. Both produce an `n x C`
//! [`ScoreMatrix`] hardened by argmax.

pub mod l1;
pub mod l2;

use serde::{Deserialize, Serialize};

use crate::data::LabelSet;
use crate::error::{Error, Result};

/// Dense row-major `n x C` class scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    rows: usize,
    classes: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(rows: usize, classes: usize) -> Self {
        Self {
            rows,
            classes,
            data: vec![0.0; rows * classes],
        }
    }

    pub fn new(rows: usize, classes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * classes {
            return Err(Error::DimensionMismatch {
                expected: rows * classes,
                found: data.len(),
            });
        }
        Ok(Self { rows, classes, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let classes = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * classes);
        for r in rows {
            if r.as_ref().len() != classes {
                return Err(Error::DimensionMismatch {
                    expected: classes,
                    found: r.as_ref().len(),
                });
            }
            data.extend_from_slice(r.as_ref());
        }
        Ok(Self {
            rows: rows.len(),
            classes,
            data,
        })
    }

    /// Assemble from per-class columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let classes = columns.len();
        let rows = columns.first().map(Vec::len).unwrap_or(0);
        let mut m = Self::zeros(rows, classes);
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            for (i, &v) in col.iter().enumerate() {
                m.data[i * classes + c] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.classes..(i + 1) * self.classes]
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.data[i * self.classes + c]
    }

    pub fn set(&mut self, i: usize, c: usize, v: f64) {
        self.data[i * self.classes + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, c)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ScoreMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> ScoreMatrix {
        ScoreMatrix {
            rows: self.rows,
            classes: self.classes,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &ScoreMatrix) -> Result<ScoreMatrix> {
        if self.rows != other.rows || self.classes != other.classes {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        Ok(ScoreMatrix {
            rows: self.rows,
            classes: self.classes,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }
}

/// One-hot rows for labeled nodes, zero rows elsewhere.
pub fn seed_matrix(labels: &LabelSet) -> ScoreMatrix {
    let mut y = ScoreMatrix::zeros(labels.n(), labels.classes());
    for &(id, c) in labels.labeled() {
        y.set(id, c, 1.0);
    }
    y
}
