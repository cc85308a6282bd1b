//! Sparse-matrix classification and graph indices.
//!
//! Rows are classified as strictly / weakly diagonally dominant, and the
//! index of connectivity measures the longest shortest walk in the matrix
//! graph from a weakly dominant row to a strictly dominant one. For a
//! substochastic matrix the index of contraction is the same quantity for
//! `Id - A`, and equals the number of extra powers needed before the matrix
//! becomes a strict contraction in the infinity norm.

mod assumptions;

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use assumptions::{
    check_a0, check_a0_doubleprime_sampled, check_a0_prime, reach_targets, sample_policy,
    A0DoublePrimeReport,
};

/// Dense LU solve of `A x = b`; errors if `A` is numerically singular.
pub fn solve_dense(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.len(),
        });
    }
    a.to_dense()
        .lu()
        .solve(&nalgebra::DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::SingularPolicy("dense LU found a zero pivot".into()))
}

/// Row-oriented sparse matrix with sorted, unique column indices.
///
/// Explicit zeros are dropped on construction so that the directed graph is
/// exactly the nonzero pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    /// Builds from unsorted row entries; duplicate columns are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n, "row count must equal dimension");
        let rows = rows.into_iter().map(|r| normalize_row(n, r)).collect();
        Self { n, rows }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| a[(i, j)] != 0.0)
                    .map(|j| (j, a[(i, j)]))
                    .collect()
            })
            .collect();
        Self { n, rows }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn set_row(&mut self, i: usize, row: Vec<(usize, f64)>) {
        self.rows[i] = normalize_row(self.n, row);
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v).sum())
            .collect()
    }

    /// Infinity norm: maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| (j, s * v)).collect())
            .collect();
        Self::from_rows(self.n, rows)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().chain(b.iter()).copied().collect())
            .collect();
        Self::from_rows(self.n, rows)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `Id - self`.
    pub fn identity_minus(&self) -> Self {
        SparseMatrix::identity(self.n).sub(self)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.rows.iter().flatten().all(|&(_, v)| v >= 0.0)
    }

    /// Z-matrix with nonnegative diagonal.
    pub fn is_l0(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, r)| {
            r.iter()
                .all(|&(j, v)| if i == j { v >= 0.0 } else { v <= 0.0 })
        })
    }

    /// Off-diagonal adjacency (self-loops never shorten a walk).
    fn off_diagonal_graph(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().map(|&(j, _)| j).filter(|&j| j != i).collect())
            .collect()
    }

    /// Full adjacency including self-loops, used for walks along sequences.
    fn graph_with_loops(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, _)| j).collect())
            .collect()
    }
}

fn normalize_row(n: usize, mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (j, v) in row {
        assert!(j < n, "column {j} out of range {n}");
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|&(_, v)| v != 0.0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Sdd,
    WddOnly,
    NotWdd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowClass {
    pub rows: Vec<RowKind>,
}

impl RowClass {
    pub fn is_wdd(&self) -> bool {
        self.rows.iter().all(|&k| k != RowKind::NotWdd)
    }

    pub fn is_sdd(&self) -> bool {
        self.rows.iter().all(|&k| k == RowKind::Sdd)
    }

    pub fn not_wdd_rows(&self) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&i| self.rows[i] == RowKind::NotWdd)
            .collect()
    }
}

/// Index value that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Finite(usize),
    Infinite,
}

impl Index {
    pub fn is_finite(self) -> bool {
        matches!(self, Index::Finite(_))
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Index::Finite(n) => Some(n),
            Index::Infinite => None,
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Finite(n) => write!(f, "{n}"),
            Index::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub con: Index,
    /// Shortest walk length from each row to a non-trouble row; `None` when
    /// no such walk exists.
    pub distance: Vec<Option<usize>>,
}

/// Comparisons are exact unless `tol > 0`; a row is then SDD when
/// `|a_ii| - sum_{j!=i} |a_ij| > tol` and WDD when it is `>= -tol`.
pub fn classify_rows_tol(a: &SparseMatrix, tol: f64) -> RowClass {
    let rows = (0..a.dim())
        .map(|i| {
            let mut diag = 0.0;
            let mut off = 0.0;
            for &(j, v) in a.row(i) {
                if i == j {
                    diag = v.abs();
                } else {
                    off += v.abs();
                }
            }
            if diag - off > tol && diag > off {
                RowKind::Sdd
            } else if diag - off >= -tol {
                RowKind::WddOnly
            } else {
                RowKind::NotWdd
            }
        })
        .collect();
    RowClass { rows }
}

pub fn classify_rows(a: &SparseMatrix) -> RowClass {
    classify_rows_tol(a, 0.0)
}

/// Multi-source BFS over reversed edges from the non-trouble rows.
fn distances_to(graph: &[Vec<usize>], nontrouble: &[bool]) -> Vec<Option<usize>> {
    let n = graph.len();
    let mut reversed = vec![Vec::new(); n];
    for (i, adj) in graph.iter().enumerate() {
        for &j in adj {
            reversed[j].push(i);
        }
    }
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        if nontrouble[i] {
            dist[i] = Some(0);
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        let d = dist[j].unwrap();
        for &i in &reversed[j] {
            if dist[i].is_none() {
                dist[i] = Some(d + 1);
                queue.push_back(i);
            }
        }
    }
    dist
}

fn report_from(dist: Vec<Option<usize>>) -> ConnectivityReport {
    let con = dist
        .iter()
        .try_fold(0usize, |acc, d| d.map(|d| acc.max(d)))
        .map_or(Index::Infinite, Index::Finite);
    ConnectivityReport {
        con,
        distance: dist,
    }
}

pub fn index_of_connectivity_tol(a: &SparseMatrix, tol: f64) -> Result<ConnectivityReport> {
    let class = classify_rows_tol(a, tol);
    if !class.is_wdd() {
        return Err(Error::NotWdd(class.not_wdd_rows()));
    }
    let sdd: Vec<bool> = class.rows.iter().map(|&k| k == RowKind::Sdd).collect();
    Ok(report_from(distances_to(&a.off_diagonal_graph(), &sdd)))
}

pub fn index_of_connectivity(a: &SparseMatrix) -> Result<ConnectivityReport> {
    index_of_connectivity_tol(a, 0.0)
}

pub fn is_wcdd(a: &SparseMatrix) -> bool {
    index_of_connectivity(a).is_ok_and(|r| r.con.is_finite())
}

/// `A >= 0` with every row summing to at most one (exact comparison).
pub fn is_substochastic(a: &SparseMatrix) -> bool {
    is_substochastic_ulps(a, 0)
}

/// Substochastic test allowing row sums up to `1 + ulps * eps`.
pub fn is_substochastic_ulps(a: &SparseMatrix, ulps: u32) -> bool {
    let bound = 1.0 + f64::from(ulps) * f64::EPSILON;
    a.is_nonnegative() && a.row_sums().iter().all(|&s| s <= bound)
}

fn check_nonnegative(a: &SparseMatrix) -> Result<()> {
    for i in 0..a.dim() {
        if let Some(&(j, _)) = a.row(i).iter().find(|&&(_, v)| v < 0.0) {
            return Err(Error::NegativeEntry(i, j));
        }
    }
    Ok(())
}

/// Index of contraction, computed as the index of connectivity of `Id - A`.
pub fn index_of_contraction(a: &SparseMatrix) -> Result<ConnectivityReport> {
    index_of_contraction_tol(a, 0.0)
}

/// As [`index_of_contraction`], with a tolerance on the dominance margin
/// of `Id - A`. Useful when `A` was produced by floating-point inversion.
pub fn index_of_contraction_tol(a: &SparseMatrix, tol: f64) -> Result<ConnectivityReport> {
    check_nonnegative(a)?;
    index_of_connectivity_tol(&a.identity_minus(), tol)
}

/// Rows of `A` whose sum is strictly below one.
pub fn contracting_rows(a: &SparseMatrix) -> Vec<bool> {
    a.row_sums().iter().map(|&s| s < 1.0).collect()
}

/// Shortest horizon `m` such that every row has a walk
/// `i_0 -> i_1 -> ... -> i_m` where step `j` uses an edge of `graphs[j]` and
/// `i_m` is non-trouble for matrix `m` (0-based). Infinite if no horizon
/// within the sequence works.
fn sequential_index(graphs: &[Vec<Vec<usize>>], nontrouble: &[Vec<bool>]) -> Index {
    let len = graphs.len();
    if len == 0 {
        return Index::Infinite;
    }
    let n = graphs[0].len();
    for m in 0..len {
        let mut reached = nontrouble[m].clone();
        for j in (0..m).rev() {
            let next = reached;
            reached = nontrouble[j].clone();
            for i in 0..n {
                if !reached[i] && graphs[j][i].iter().any(|&l| next[l]) {
                    reached[i] = true;
                }
            }
        }
        if reached.iter().all(|&r| r) {
            return Index::Finite(m);
        }
    }
    Index::Infinite
}

fn check_dims(seq: &[SparseMatrix]) -> Result<()> {
    if let Some(first) = seq.first() {
        for a in seq {
            if a.dim() != first.dim() {
                return Err(Error::Dimension {
                    expected: first.dim(),
                    got: a.dim(),
                });
            }
        }
    }
    Ok(())
}

/// Sequential index of connectivity of WDD matrices; walks take their
/// `k`-th step in the graph of the `k`-th matrix and may rest on a
/// self-loop.
pub fn sequential_index_of_connectivity(seq: &[SparseMatrix]) -> Result<Index> {
    check_dims(seq)?;
    let mut graphs = Vec::with_capacity(seq.len());
    let mut sdd = Vec::with_capacity(seq.len());
    for a in seq {
        let class = classify_rows(a);
        if !class.is_wdd() {
            return Err(Error::NotWdd(class.not_wdd_rows()));
        }
        sdd.push(class.rows.iter().map(|&k| k == RowKind::Sdd).collect());
        graphs.push(a.graph_with_loops());
    }
    Ok(sequential_index(&graphs, &sdd))
}

/// Sequential index of contraction of substochastic matrices.
pub fn sequential_index_of_contraction(seq: &[SparseMatrix]) -> Result<Index> {
    check_dims(seq)?;
    for a in seq {
        check_nonnegative(a)?;
    }
    let graphs: Vec<_> = seq.iter().map(SparseMatrix::graph_with_loops).collect();
    let nontrouble: Vec<_> = seq.iter().map(contracting_rows).collect();
    Ok(sequential_index(&graphs, &nontrouble))
}
