//! Optimal one-to-one assignment between rows (tracks) and columns
//! (detections).
//!
//! [`solve`] maximizes the number of matched pairs over the non-forbidden
//! entries and, among those, minimizes the total cost. Ties between optimal
//! matchings are broken deterministically in favour of the lexicographically
//! smallest `(row, col)` pair list.
//!
//! The rectangular problem is embedded in a square one (forbidden and padding
//! entries cost nothing and mean "unmatched"), solved with the O(n^3)
//! shortest-augmenting-path Hungarian method, and then re-routed inside the
//! equality subgraph of the optimal dual to pick the canonical optimum.

use thiserror::Error;

use crate::geometry::{iou, BBox};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssignmentError {
    #[error("cost matrix has {rows}x{cols} shape but {len} entries")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("row {row} has {len} entries, expected {cols}")]
    Ragged { row: usize, len: usize, cols: usize },
    #[error("cost at ({row}, {col}) must be finite and non-negative, got {value}")]
    InvalidCost { row: usize, col: usize, value: f64 },
}

/// Sentinel for pairs that may never be matched.
pub const FORBIDDEN: Option<f64> = None;

/// Row-major matrix of non-negative costs; `None` marks a forbidden pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Option<f64>>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Option<f64>>) -> Result<Self, AssignmentError> {
        if entries.len() != rows * cols {
            return Err(AssignmentError::Shape {
                rows,
                cols,
                len: entries.len(),
            });
        }
        for (i, e) in entries.iter().enumerate() {
            if let Some(v) = *e {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(AssignmentError::InvalidCost {
                        row: i / cols,
                        col: i % cols,
                        value: v,
                    });
                }
            }
        }
        Ok(CostMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Option<f64>>>) -> Result<Self, AssignmentError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(AssignmentError::Ragged {
                    row: r,
                    len: row.len(),
                    cols: n_cols,
                });
            }
            entries.extend(row);
        }
        CostMatrix::new(n_rows, n_cols, entries)
    }

    /// All entries forbidden.
    pub fn forbidden(rows: usize, cols: usize) -> Self {
        CostMatrix {
            rows,
            cols,
            entries: vec![None; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.entries[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, cost: Option<f64>) -> Result<(), AssignmentError> {
        if let Some(v) = cost {
            if !(v.is_finite() && v >= 0.0) {
                return Err(AssignmentError::InvalidCost { row, col, value: v });
            }
        }
        self.entries[row * self.cols + col] = cost;
        Ok(())
    }
}

/// Result of an assignment. `pairs` is sorted by row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Matching {
    fn from_pairs(mut pairs: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        pairs.sort_unstable();
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &pairs {
            row_used[r] = true;
            col_used[c] = true;
        }
        Matching {
            pairs,
            unmatched_rows: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_cols: (0..cols).filter(|&c| !col_used[c]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn col_for_row(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }

    /// Sum of matched costs under `costs`.
    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.pairs
            .iter()
            .map(|&(r, c)| costs.get(r, c).unwrap_or(0.0))
            .sum()
    }
}

/// Costs `1 - IoU` between previous and current boxes; pairs whose IoU falls
/// below `gate` are forbidden.
pub fn iou_cost_matrix(prev_boxes: &[BBox], cur_boxes: &[BBox], gate: f64) -> CostMatrix {
    let entries = prev_boxes
        .iter()
        .flat_map(|p| {
            cur_boxes.iter().map(move |c| {
                let v = iou(p, c);
                (v >= gate).then_some(1.0 - v)
            })
        })
        .collect();
    CostMatrix {
        rows: prev_boxes.len(),
        cols: cur_boxes.len(),
        entries,
    }
}

/// Maximum-cardinality, minimum-cost matching over non-forbidden entries.
pub fn solve(costs: &CostMatrix) -> Matching {
    let (rows, cols) = (costs.rows, costs.cols);
    if rows == 0 || cols == 0 {
        return Matching::from_pairs(Vec::new(), rows, cols);
    }
    let max_cost = costs
        .entries
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| m.max(v));
    // Any extra matched pair outweighs every possible cost difference.
    let bonus = rows.min(cols) as f64 * max_cost + 1.0;
    let pairs = solve_embedded(rows, cols, |r, c| costs.get(r, c).map(|v| v - bonus), bonus);
    Matching::from_pairs(pairs, rows, cols)
}

/// One-to-one matching maximizing the summed weight. Entries `<= 0` are
/// never matched; there is no preference for larger matchings beyond weight.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> Matching {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    assert!(
        weights.iter().all(|r| r.len() == cols),
        "weight matrix must be rectangular"
    );
    if rows == 0 || cols == 0 {
        return Matching::from_pairs(Vec::new(), rows, cols);
    }
    let scale = weights
        .iter()
        .flatten()
        .fold(0.0f64, |m, &v| if v.is_finite() { m.max(v) } else { m });
    let pairs = solve_embedded(
        rows,
        cols,
        |r, c| {
            let w = weights[r][c];
            (w.is_finite() && w > 0.0).then_some(-w)
        },
        scale,
    );
    Matching::from_pairs(pairs, rows, cols)
}

/// Solves the square embedding of a rectangular problem. `real(r, c)` gives
/// the cost of a genuine pair or `None`; every other square entry costs 0 and
/// stands for "unmatched". Returns the genuine pairs of the canonical optimum.
fn solve_embedded<F>(rows: usize, cols: usize, real: F, magnitude: f64) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> Option<f64>,
{
    let n = rows.max(cols);
    let mut cost = vec![0.0f64; n * n];
    let mut is_real = vec![false; n * n];
    for r in 0..rows {
        for c in 0..cols {
            if let Some(v) = real(r, c) {
                cost[r * n + c] = v;
                is_real[r * n + c] = true;
            }
        }
    }

    let (row_of_col, u, v) = hungarian(n, &cost);
    let mut col_of_row = vec![0usize; n];
    for (c, &r) in row_of_col.iter().enumerate() {
        col_of_row[r] = c;
    }

    let eps = 64.0 * f64::EPSILON * (1.0 + magnitude.abs()) * n as f64;
    let tight = |r: usize, c: usize| cost[r * n + c] - u[r] - v[c] <= eps;

    let mut canon = Canonicalizer {
        n,
        tight: &tight,
        is_real: &is_real,
        col_of_row,
        row_of_col,
        fixed_row: vec![false; n],
        fixed_col: vec![false; n],
        unmatched_row: vec![false; n],
    };
    canon.run(rows, cols);

    (0..rows)
        .filter_map(|r| {
            let c = canon.col_of_row[r];
            is_real[r * n + c].then_some((r, c))
        })
        .collect()
}

/// Shortest augmenting path Hungarian method on a dense square matrix.
/// Returns the row assigned to each column plus the row and column duals,
/// with `cost[r][c] - u[r] - v[c] >= 0` everywhere and `= 0` on the matching.
fn hungarian(n: usize, cost: &[f64]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual source column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let a = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let row_of_col = (1..=n).map(|j| p[j] - 1).collect();
    (row_of_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Walks rows in order and moves each to its smallest feasible genuine column
/// inside the equality subgraph, keeping the matching perfect (and therefore
/// optimal) throughout.
struct Canonicalizer<'a, T: Fn(usize, usize) -> bool> {
    n: usize,
    tight: &'a T,
    is_real: &'a [bool],
    col_of_row: Vec<usize>,
    row_of_col: Vec<usize>,
    fixed_row: Vec<bool>,
    fixed_col: Vec<bool>,
    /// Rows committed to staying unmatched; they may still move between
    /// non-genuine columns.
    unmatched_row: Vec<bool>,
}

impl<T: Fn(usize, usize) -> bool> Canonicalizer<'_, T> {
    fn run(&mut self, rows: usize, cols: usize) {
        for r in 0..rows {
            let current = self.col_of_row[r];
            let current_real = self.is_real[r * self.n + current];
            for c in 0..cols {
                if current_real && c >= current {
                    break;
                }
                if self.fixed_col[c] || !self.is_real[r * self.n + c] || !(self.tight)(r, c) {
                    continue;
                }
                if self.try_force(r, c) {
                    break;
                }
            }
            let c = self.col_of_row[r];
            if self.is_real[r * self.n + c] {
                self.fixed_row[r] = true;
                self.fixed_col[c] = true;
            } else {
                self.unmatched_row[r] = true;
            }
        }
    }

    fn allowed(&self, r: usize, c: usize) -> bool {
        if self.fixed_col[c] || !(self.tight)(r, c) {
            return false;
        }
        !(self.unmatched_row[r] && self.is_real[r * self.n + c])
    }

    /// Re-routes the matching so that `r` takes `c`, if a perfect matching
    /// with that pair exists in the allowed subgraph.
    fn try_force(&mut self, r: usize, c: usize) -> bool {
        let freed_col = self.col_of_row[r];
        let displaced = self.row_of_col[c];

        // tentatively commit r -> c
        self.fixed_row[r] = true;
        self.fixed_col[c] = true;
        let mut visited = vec![false; self.n];
        let mut path = Vec::new();
        let found = self.augment(displaced, freed_col, &mut visited, &mut path);
        self.fixed_row[r] = false;
        self.fixed_col[c] = false;
        if !found {
            return false;
        }

        // path holds (row, new col) steps starting at `displaced`
        for &(pr, pc) in &path {
            self.col_of_row[pr] = pc;
            self.row_of_col[pc] = pr;
        }
        self.col_of_row[r] = c;
        self.row_of_col[c] = r;
        true
    }

    /// Alternating path from `row` to the free column `target`.
    fn augment(
        &self,
        row: usize,
        target: usize,
        visited: &mut [bool],
        path: &mut Vec<(usize, usize)>,
    ) -> bool {
        for c in 0..self.n {
            if visited[c] || !self.allowed(row, c) {
                continue;
            }
            visited[c] = true;
            if c == target {
                path.push((row, c));
                return true;
            }
            let next = self.row_of_col[c];
            if self.fixed_row[next] {
                continue;
            }
            path.push((row, c));
            if self.augment(next, target, visited, path) {
                return true;
            }
            path.pop();
        }
        false
    }
}
