//! Symmetric weighted kNN graphs and the normalized diffusion operator.
//!
//! Graphs are stored in compressed sparse row form with both `(i, j)` and
//! `(j, i)` present, columns sorted within each row and no diagonal. Weights
//! are `f32`, the precision of the on-disk GNZG format, so a graph survives a
//! write/read cycle bit for bit. All arithmetic on them happens in `f64`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingMatrix;
use crate::error::{Error, FormatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `exp(-d^2 / (sigma_i sigma_j))`, `sigma_i` the mean distance to the k neighbors of i.
    #[default]
    GaussianLocal,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
    pub metric: Metric,
    pub kernel: Kernel,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 50,
            metric: Metric::Euclidean,
            kernel: Kernel::GaussianLocal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f32>,
}

impl Graph {
    /// Build from a full entry list: both directions present, sorted by
    /// `(row, col)`, no diagonal, weights finite and non-negative.
    pub fn from_sorted_entries(n: usize, entries: &[(u32, u32, f32)]) -> Result<Self, FormatError> {
        let mut row_ptr = vec![0usize; n + 1];
        let mut prev: Option<(u32, u32)> = None;
        for (pos, &(i, j, w)) in entries.iter().enumerate() {
            let (iu, ju) = (i as usize, j as usize);
            if iu >= n {
                return Err(FormatError::IndexOutOfRange { index: iu, n });
            }
            if ju >= n {
                return Err(FormatError::IndexOutOfRange { index: ju, n });
            }
            if i == j {
                return Err(FormatError::DiagonalEntry(iu));
            }
            if !w.is_finite() {
                return Err(FormatError::NonFinite(pos));
            }
            if w < 0.0 {
                return Err(FormatError::NegativeWeight { i: iu, j: ju, w });
            }
            if prev.is_some_and(|p| p >= (i, j)) {
                return Err(FormatError::Unsorted(pos));
            }
            prev = Some((i, j));
            row_ptr[iu + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let graph = Self {
            n,
            row_ptr,
            cols: entries.iter().map(|e| e.1).collect(),
            weights: entries.iter().map(|e| e.2).collect(),
        };
        for &(i, j, w) in entries {
            if graph.weight(j as usize, i as usize).map(f32::to_bits) != Some(w.to_bits()) {
                return Err(FormatError::Asymmetric {
                    i: i as usize,
                    j: j as usize,
                });
            }
        }
        Ok(graph)
    }

    /// Build from undirected edges, merging duplicates (either direction) by
    /// maximum weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f32)>) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(FormatError::IndexOutOfRange { index: i.max(j), n }.into());
            }
            if i == j {
                return Err(FormatError::DiagonalEntry(i).into());
            }
            if !w.is_finite() {
                return Err(FormatError::NonFinite(entries.len()).into());
            }
            if w < 0.0 {
                return Err(FormatError::NegativeWeight { i, j, w }.into());
            }
            entries.push((i as u32, j as u32, w));
            entries.push((j as u32, i as u32, w));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(b.2.total_cmp(&a.2)));
        entries.dedup_by_key(|e| (e.0, e.1));
        Ok(Self::from_sorted_entries(n, &entries)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries, counting both directions.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn edge_count(&self) -> usize {
        self.nnz() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f32)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.weights[span])
            .map(|(&j, &w)| (j as usize, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f32> {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.cols[span.clone()];
        cols.binary_search(&(j as u32))
            .ok()
            .map(|k| self.weights[span.start + k])
    }

    /// All stored entries in `(row, col)` order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, f32)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .map(move |(j, w)| (i as u32, j as u32, w))
        })
    }

    /// Undirected edges with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f32)> + '_ {
        self.entries()
            .filter(|e| e.0 < e.1)
            .map(|(i, j, w)| (i as usize, j as usize, w))
    }

    /// Degrees `d_i = sum_j w_ij`; fails on the first isolated node.
    pub fn degrees(&self) -> Result<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let d: f64 = self.neighbors(i).map(|(_, w)| w as f64).sum();
                if d > 0.0 {
                    Ok(d)
                } else {
                    Err(Error::IsolatedNode(i))
                }
            })
            .collect()
    }

    pub fn normalized_operator(&self) -> Result<NormalizedOperator> {
        let inv_sqrt: Vec<f64> = self.degrees()?.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut values = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                values.push(w as f64 * inv_sqrt[i] * inv_sqrt[j]);
            }
        }
        Ok(NormalizedOperator {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            values,
        })
    }

    /// Connected component id per node, numbered in order of smallest member.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for (j, w) in self.neighbors(i) {
                    if w > 0.0 && comp[j] == usize::MAX {
                        comp[j] = next;
                        stack.push(j);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Free-function form of [`Graph::degrees`].
pub fn degree_vector(g: &Graph) -> Result<Vec<f64>> {
    g.degrees()
}

/// Free-function form of [`Graph::normalized_operator`].
pub fn normalized_operator(g: &Graph) -> Result<NormalizedOperator> {
    g.normalized_operator()
}

/// `S = D^{-1/2} W D^{-1/2}`, same sparsity pattern as `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl NormalizedOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&j, &v)| (j as usize, v))
    }

    /// `out = S x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Node lists of the connected components, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            comp[start] = id;
            stack.push(start);
            let mut members = Vec::new();
            while let Some(i) = stack.pop() {
                members.push(i);
                for (j, _) in self.row(i) {
                    if comp[j] == usize::MAX {
                        comp[j] = id;
                        stack.push(j);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// The operator on a node subset closed under adjacency (a union of
    /// components), re-indexed by position in `nodes`.
    pub fn restrict(&self, nodes: &[usize]) -> NormalizedOperator {
        let mut local = vec![u32::MAX; self.n];
        for (k, &i) in nodes.iter().enumerate() {
            local[i] = k as u32;
        }
        let mut row_ptr = Vec::with_capacity(nodes.len() + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &i in nodes {
            for (j, v) in self.row(i) {
                assert!(local[j] != u32::MAX, "node subset is not closed under adjacency");
                cols.push(local[j]);
                values.push(v);
            }
            row_ptr.push(cols.len());
        }
        NormalizedOperator {
            n: nodes.len(),
            row_ptr,
            cols,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    /// Edges whose kernel scale was zero and fell back to unit weight.
    pub duplicate_fallbacks: usize,
}

/// Kernel weights for each directed neighbor list, same shape as the input.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    pub weights: Vec<Vec<f64>>,
    pub duplicate_fallbacks: usize,
}

pub fn compute_edge_weights(neighbors: &[Vec<Neighbor>], kernel: Kernel) -> Result<EdgeWeights> {
    let mut duplicate_fallbacks = 0;
    if let Some(bad) = neighbors
        .iter()
        .flatten()
        .find(|nb| !(nb.distance >= 0.0) || !nb.distance.is_finite())
    {
        return Err(Error::InvalidParameter(format!(
            "distance to node {} is {}",
            bad.id, bad.distance
        )));
    }
    let weights = match kernel {
        Kernel::Binary => neighbors.iter().map(|l| vec![1.0; l.len()]).collect(),
        Kernel::GaussianLocal => {
            let sigma: Vec<f64> = neighbors
                .iter()
                .map(|l| {
                    if l.is_empty() {
                        0.0
                    } else {
                        l.iter().map(|nb| nb.distance).sum::<f64>() / l.len() as f64
                    }
                })
                .collect();
            neighbors
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    l.iter()
                        .map(|nb| {
                            let d = nb.distance;
                            let mut scale = sigma[i] * sigma[nb.id];
                            if scale == 0.0 {
                                if d == 0.0 {
                                    duplicate_fallbacks += 1;
                                    return 1.0;
                                }
                                // one endpoint sits on a stack of duplicates
                                scale = sigma[i].max(sigma[nb.id]).powi(2);
                            }
                            // keep the edge representable in f32
                            (-d * d / scale).exp().max(f32::MIN_POSITIVE as f64)
                        })
                        .collect()
                })
                .collect()
        }
    };
    Ok(EdgeWeights {
        weights,
        duplicate_fallbacks,
    })
}

fn distance(metric: Metric, a: &[f32], b: &[f32], norm_a: f64, norm_b: f64) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let d = x as f64 - y as f64;
                d * d
            })
            .sum::<f64>()
            .sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
            (1.0 - dot / (norm_a * norm_b)).max(0.0)
        }
    }
}

/// Exact k nearest neighbors of every row, self excluded, sorted by
/// `(distance, id)`.
pub fn knn_lists(m: &EmbeddingMatrix, k: usize, metric: Metric) -> Result<Vec<Vec<Neighbor>>> {
    let n = m.rows();
    if k == 0 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| m.row(i).iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt())
        .collect();
    if metric == Metric::Cosine {
        if let Some(i) = norms.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroNormRow(i));
        }
    }
    let by_distance = |a: &Neighbor, b: &Neighbor| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id));
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let q = m.row(i);
            let mut all: Vec<Neighbor> = (0..n)
                .filter(|&j| j != i)
                .map(|j| Neighbor {
                    id: j,
                    distance: distance(metric, q, m.row(j), norms[i], norms[j]),
                })
                .collect();
            if k < all.len() {
                all.select_nth_unstable_by(k - 1, by_distance);
                all.truncate(k);
            }
            all.sort_unstable_by(by_distance);
            all
        })
        .collect())
}

/// Directed kNN edges symmetrized by union, `w_ij = max(w_ij, w_ji)`.
pub fn build_knn_graph(m: &EmbeddingMatrix, params: &KnnParams) -> Result<(Graph, BuildReport)> {
    let lists = knn_lists(m, params.k, params.metric)?;
    let EdgeWeights {
        weights,
        duplicate_fallbacks,
    } = compute_edge_weights(&lists, params.kernel)?;
    let edges = lists.iter().zip(&weights).enumerate().flat_map(|(i, (l, w))| {
        l.iter().zip(w).map(move |(nb, &w)| (i, nb.id, w as f32))
    });
    let graph = Graph::from_edges(m.rows(), edges)?;
    let report = BuildReport {
        nodes: graph.n(),
        edges: graph.edge_count(),
        mean_degree: graph.nnz() as f64 / graph.n() as f64,
        duplicate_fallbacks,
    };
    Ok((graph, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn line_points_k1_binary() {
        // brute force: d(0,1)=1, d(0,3)=3, d(1,3)=2 -> 0->1, 1->0, 3->1
        let m = EmbeddingMatrix::from_rows(&[[0.0f32], [1.0], [3.0]]).unwrap();
        let params = KnnParams {
            k: 1,
            metric: Metric::Euclidean,
            kernel: Kernel::Binary,
        };
        let (g, report) = build_knn_graph(&m, &params).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(report.edges, 2);
    }

    #[test]
    fn two_nodes_single_edge() {
        let m = EmbeddingMatrix::from_rows(&[[0.0f32, 1.0], [2.0, 5.0]]).unwrap();
        let (g, _) = build_knn_graph(&m, &KnnParams { k: 1, ..Default::default() }).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), g.weight(1, 0));
    }

    #[test]
    fn k_equal_n_rejected() {
        let m = EmbeddingMatrix::from_rows(&[[0.0f32], [1.0], [3.0]]).unwrap();
        let err = build_knn_graph(&m, &KnnParams { k: 3, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::InvalidK { k: 3, n: 3 }));
    }

    #[test]
    fn cosine_zero_row_rejected() {
        let m = EmbeddingMatrix::from_rows(&[[0.0f32, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let params = KnnParams {
            k: 1,
            metric: Metric::Cosine,
            kernel: Kernel::Binary,
        };
        assert!(matches!(build_knn_graph(&m, &params), Err(Error::ZeroNormRow(0))));
    }

    #[test]
    fn distance_ties_prefer_smaller_id() {
        // node 1 is equidistant from 0 and 2
        let m = EmbeddingMatrix::from_rows(&[[0.0f32], [1.0], [2.0]]).unwrap();
        let lists = knn_lists(&m, 1, Metric::Euclidean).unwrap();
        assert_eq!(lists[1][0].id, 0);
    }

    #[test]
    fn gaussian_weight_values() {
        let nb = |id, distance| Neighbor { id, distance };
        // sigma_0 = 1, sigma_1 = 1: d^2 = sigma_0 sigma_1 -> e^-1
        let lists = vec![vec![nb(1, 1.0)], vec![nb(0, 1.0)]];
        let w = compute_edge_weights(&lists, Kernel::GaussianLocal).unwrap();
        assert!((w.weights[0][0] - (-1.0f64).exp()).abs() < 1e-15);
        // duplicates: zero scale, zero distance -> 1, flagged
        let dup = vec![vec![nb(1, 0.0)], vec![nb(0, 0.0)]];
        let w = compute_edge_weights(&dup, Kernel::GaussianLocal).unwrap();
        assert_eq!(w.weights, vec![vec![1.0], vec![1.0]]);
        assert_eq!(w.duplicate_fallbacks, 2);
    }

    #[test]
    fn degrees_of_small_graphs() {
        assert_eq!(path3().degrees().unwrap(), vec![1.0, 2.0, 1.0]);
        let g = Graph::from_edges(2, [(0, 1, 0.5)]).unwrap();
        assert_eq!(g.degrees().unwrap(), vec![0.5, 0.5]);
        let iso = Graph::from_edges(3, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(iso.degrees(), Err(Error::IsolatedNode(2))));
    }

    #[test]
    fn normalized_operator_entries() {
        let g = Graph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        let s = g.normalized_operator().unwrap();
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(1, 0), 1.0);
        let s = path3().normalized_operator().unwrap();
        assert!((s.get(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.get(0, 2), 0.0);
    }

    #[test]
    fn sorted_entries_validation() {
        let asym = Graph::from_sorted_entries(3, &[(1, 2, 0.5)]).unwrap_err();
        assert_eq!(asym, FormatError::Asymmetric { i: 1, j: 2 });
        let neg = Graph::from_sorted_entries(2, &[(0, 1, -0.1), (1, 0, -0.1)]).unwrap_err();
        assert!(matches!(neg, FormatError::NegativeWeight { .. }));
        let unsorted = Graph::from_sorted_entries(2, &[(1, 0, 1.0), (0, 1, 1.0)]).unwrap_err();
        assert_eq!(unsorted, FormatError::Unsorted(1));
        let diag = Graph::from_sorted_entries(2, &[(1, 1, 1.0)]).unwrap_err();
        assert_eq!(diag, FormatError::DiagonalEntry(1));
    }

    #[test]
    fn components_split() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(g.components(), vec![0, 0, 1, 1]);
    }
}
