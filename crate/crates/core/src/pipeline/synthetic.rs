//! Seeded synthetic datasets with ground truth.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{EmbeddingMatrix, LabelSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub embeddings: EmbeddingMatrix,
    pub truth: Vec<usize>,
    pub classes: usize,
}

fn normal(sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sd).map_err(|e| Error::InvalidParameter(format!("noise {sd}: {e}")))
}

/// Two interleaving half circles: the upper one (class 0) centred at the
/// origin, the lower one (class 1) shifted to `(1, 0.5)`, each point
/// perturbed by isotropic Gaussian noise.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("two-moons needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = normal(noise)?;
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let angle = |i: usize, count: usize| {
        if count > 1 {
            PI * i as f64 / (count - 1) as f64
        } else {
            0.0
        }
    };
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n_outer {
        let t = angle(i, n_outer);
        rows.push([t.cos(), t.sin()]);
        truth.push(0);
    }
    for i in 0..n_inner {
        let t = angle(i, n_inner);
        rows.push([1.0 - t.cos(), 0.5 - t.sin()]);
        truth.push(1);
    }
    let rows: Vec<[f32; 2]> = rows
        .into_iter()
        .map(|[x, y]| {
            [
                (x + jitter.sample(&mut rng)) as f32,
                (y + jitter.sample(&mut rng)) as f32,
            ]
        })
        .collect();
    Ok(Dataset {
        embeddings: EmbeddingMatrix::from_rows(&rows)?,
        truth,
        classes: 2,
    })
}

/// Isotropic Gaussian clusters with centres drawn uniformly from
/// `[-10, 10]^dim`; node `i` belongs to class `i % classes`.
pub fn blobs(n: usize, classes: usize, dim: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || n < classes || dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "blobs needs classes >= 2, n >= classes, dim >= 1 (n={n}, classes={classes}, dim={dim})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let jitter = normal(spread)?;
    let mut data = Vec::with_capacity(n * dim);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % classes;
        truth.push(c);
        data.extend(centers[c].iter().map(|&x| (x + jitter.sample(&mut rng)) as f32));
    }
    Ok(Dataset {
        embeddings: EmbeddingMatrix::new(n, dim, data)?,
        truth,
        classes,
    })
}

/// Reveal `per_class` randomly chosen ground-truth labels per class.
pub fn sample_labels(truth: &[usize], classes: usize, per_class: usize, seed: u64) -> Result<LabelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled = Vec::with_capacity(per_class * classes);
    for class in 0..classes {
        let mut members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == class).collect();
        if members.len() < per_class {
            return Err(Error::InvalidParameter(format!(
                "class {class} has {} members, cannot reveal {per_class}",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        labeled.extend(members[..per_class].iter().map(|&i| (i, class)));
    }
    LabelSet::new(truth.len(), Some(classes), labeled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moons_shape_and_determinism() {
        let a = two_moons(11, 0.1, 3).unwrap();
        assert_eq!(a.embeddings.rows(), 11);
        assert_eq!(a.truth.iter().filter(|&&c| c == 0).count(), 5);
        assert_eq!(a, two_moons(11, 0.1, 3).unwrap());
        let noiseless = two_moons(4, 0.0, 0).unwrap();
        assert_eq!(noiseless.embeddings.row(0), &[1.0, 0.0]);
        assert_eq!(noiseless.embeddings.row(2), &[0.0, 0.5]);
    }

    #[test]
    fn sampled_labels_match_truth() {
        let d = blobs(40, 4, 3, 1.0, 9).unwrap();
        let l = sample_labels(&d.truth, 4, 5, 1).unwrap();
        assert_eq!(l.class_counts(), vec![5; 4]);
        for &(id, c) in l.labeled() {
            assert_eq!(d.truth[id], c);
        }
        assert!(sample_labels(&d.truth, 4, 11, 1).is_err());
    }
}
