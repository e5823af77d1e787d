//! Node features and labeled subsets.

use crate::error::{Error, FormatError, LabelIssue, Result};

/// Dense row-major `n x P` feature matrix, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(FormatError::EmptyDimension { rows, dim }.into());
        }
        let expected = rows.checked_mul(dim).ok_or(FormatError::SizeOverflow)?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite(pos).into());
        }
        Ok(Self { rows, dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

/// Labeled node ids with their classes, over `n` nodes and `C` classes.
///
/// Entries are kept sorted by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    n: usize,
    classes: usize,
    labeled: Vec<(usize, usize)>,
    class_of: Vec<Option<usize>>,
}

impl LabelSet {
    /// `classes = None` infers `C` as the largest class plus one.
    pub fn new(n: usize, classes: Option<usize>, labeled: Vec<(usize, usize)>) -> Result<Self> {
        if labeled.is_empty() {
            return Err(Error::labels(LabelIssue::Empty));
        }
        let inferred = labeled.iter().map(|&(_, c)| c).max().unwrap_or(0) + 1;
        let classes = classes.unwrap_or(inferred);
        if classes < 2 {
            return Err(Error::labels(LabelIssue::TooFewClasses(classes)));
        }
        let mut class_of = vec![None; n];
        for &(id, class) in &labeled {
            if id >= n {
                return Err(Error::labels(LabelIssue::IdOutOfRange { id, n }));
            }
            if class >= classes {
                return Err(Error::labels(LabelIssue::ClassOutOfRange { class, classes }));
            }
            if class_of[id].replace(class).is_some() {
                return Err(Error::labels(LabelIssue::DuplicateId(id)));
            }
        }
        let mut labeled = labeled;
        labeled.sort_unstable();
        Ok(Self {
            n,
            classes,
            labeled,
            class_of,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labeled(&self) -> &[(usize, usize)] {
        &self.labeled
    }

    pub fn len(&self) -> usize {
        self.labeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labeled.is_empty()
    }

    pub fn label_of(&self, id: usize) -> Option<usize> {
        self.class_of.get(id).copied().flatten()
    }

    pub fn is_labeled(&self, id: usize) -> bool {
        self.label_of(id).is_some()
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&i| self.class_of[i].is_none())
    }

    pub fn unlabeled_count(&self) -> usize {
        self.n - self.labeled.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &(_, c) in &self.labeled {
            counts[c] += 1;
        }
        counts
    }

    /// Same labels restricted to the given node subset.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let labeled = self
            .labeled
            .iter()
            .copied()
            .filter(|&(id, _)| keep(id))
            .collect();
        Self::new(self.n, Some(self.classes), labeled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_rejects_non_finite() {
        let err = EmbeddingMatrix::new(1, 2, vec![1.0, f32::NAN]).unwrap_err();
        assert!(matches!(err, Error::Format(FormatError::NonFinite(1))));
    }

    #[test]
    fn labels_infer_classes() {
        let l = LabelSet::new(10, None, vec![(5, 1), (0, 0)]).unwrap();
        assert_eq!(l.classes(), 2);
        assert_eq!(l.labeled(), &[(0, 0), (5, 1)]);
        assert_eq!(l.unlabeled_count(), 8);
    }

    #[test]
    fn labels_reject_duplicates_and_range() {
        let dup = LabelSet::new(3, None, vec![(0, 0), (0, 1)]).unwrap_err();
        assert!(matches!(
            dup,
            Error::Labels {
                issue: LabelIssue::DuplicateId(0),
                ..
            }
        ));
        let oob = LabelSet::new(3, None, vec![(3, 0), (0, 1)]).unwrap_err();
        assert!(matches!(
            oob,
            Error::Labels {
                issue: LabelIssue::IdOutOfRange { id: 3, n: 3 },
                ..
            }
        ));
        let one = LabelSet::new(3, None, vec![(0, 0)]).unwrap_err();
        assert!(matches!(
            one,
            Error::Labels {
                issue: LabelIssue::TooFewClasses(1),
                ..
            }
        ));
    }
}
