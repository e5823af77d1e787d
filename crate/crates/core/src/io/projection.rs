//! Two-component PCA export for plotting.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use super::tables::format_real;
use super::write_atomic;
use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Scores of the centered rows on the two leading principal axes of the
/// sample covariance. Each axis is signed so that its largest-magnitude
/// loading is non-negative. With `P = 1` the second column is zero.
pub fn principal_projection(m: &EmbeddingMatrix) -> Result<Vec<[f64; 2]>> {
    let (n, p) = (m.rows(), m.dim());
    if n < 2 {
        return Err(Error::InvalidParameter(format!("projection needs n >= 2, got {n}")));
    }
    let mut mean = vec![0.0; p];
    for i in 0..n {
        for (acc, &v) in mean.iter_mut().zip(m.row(i)) {
            *acc += v as f64;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    let centered = DMatrix::from_fn(n, p, |i, j| m.row(i)[j] as f64 - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut axes = Vec::with_capacity(2);
    for &k in order.iter().take(2) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let lead = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
        if axis[lead] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        axes.push(axis);
    }
    Ok((0..n)
        .map(|i| {
            let row = centered.row(i);
            let mut out = [0.0; 2];
            for (slot, axis) in out.iter_mut().zip(&axes) {
                *slot = row.iter().zip(axis).map(|(a, b)| a * b).sum();
            }
            out
        })
        .collect())
}

/// Write `id,x,y` rows of [`principal_projection`].
pub fn export_projection(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let points = principal_projection(m)?;
    let mut out = String::from("id,x,y\n");
    for (i, [x, y]) in points.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", format_real(*x), format_real(*y));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}
