//! Exact rectangular assignment with gating and pinned pairs.
//!
//! [`solve`] returns, among all matchings that avoid forbidden cells, one with
//! the largest number of pairs and, among those, the smallest total cost.
//! The square Hungarian core is the shortest-augmenting-path variant with
//! row/column potentials, `O(n^3)`.

use crate::error::{Error, Result};
use crate::geometry::{loc_sim, BBox};
use crate::types::Detection;

/// Dense `rows x cols` cost table; `None` marks a forbidden (gated) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<Option<f64>>,
}

impl CostMatrix {
    /// Every entry must be forbidden or lie in `[0, 1]`.
    pub fn new(rows: usize, cols: usize, cells: Vec<Option<f64>>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::Config(format!(
                "cost matrix has {} cells, expected {rows}x{cols}",
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().flatten().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Config(format!("cost {bad} outside [0, 1]")));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        f: impl Fn(usize, usize) -> Option<f64>,
    ) -> Result<Self> {
        let cells = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(rows, cols, cells)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row * self.cols + col]
    }

    pub fn is_forbidden(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_none()
    }

    /// Sum of costs over `pairs`, skipping forbidden cells.
    pub fn total(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().filter_map(|&(r, c)| self.get(r, c)).sum()
    }
}

/// `1 - LocSim` between detections (rows) and predicted boxes (columns);
/// pairs with LocSim below `gate` are forbidden.
pub fn build_cost(dets: &[&Detection], predicted: &[BBox], gate: f64) -> CostMatrix {
    let cells = dets
        .iter()
        .flat_map(|d| {
            predicted.iter().map(move |p| {
                let sim = loc_sim(d, p);
                (sim >= gate).then_some(1.0 - sim)
            })
        })
        .collect();
    CostMatrix {
        rows: dets.len(),
        cols: predicted.len(),
        cells,
    }
}

/// Square min-cost perfect assignment; returns the column for each row.
fn hungarian_square(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // p[j]: row (1-based) matched to column j; column 0 is the virtual root.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
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
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
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
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum-cost partial matching: every row and column may stay unmatched at
/// zero cost and only `Some` cells can be used. Negative costs make a pair
/// attractive, positive costs repel it. Output is sorted by row.
pub fn min_cost_partial(
    rows: usize,
    cols: usize,
    cost: impl Fn(usize, usize) -> Option<f64>,
) -> Vec<(usize, usize)> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let table: Vec<Option<f64>> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| cost(r, c))
        .collect();
    // Any positive penalty keeps forbidden cells out of an optimum, since
    // swapping one for two zero-cost dummy slots is always possible.
    let forbidden = 1.0 + table.iter().flatten().map(|c| c.abs()).sum::<f64>();
    // Rows [rows, rows+cols) and columns [cols, cols+rows) are dummies.
    let n = rows + cols;
    let col_of = hungarian_square(n, |r, c| {
        if r < rows && c < cols {
            table[r * cols + c].unwrap_or(forbidden)
        } else {
            0.0
        }
    });
    col_of
        .into_iter()
        .enumerate()
        .take(rows)
        .filter(|&(r, c)| c < cols && table[r * cols + c].is_some())
        .collect()
}

/// Maximum-cardinality, then minimum-cost matching avoiding forbidden cells.
/// Results are deterministic for identical input.
pub fn solve(c: &CostMatrix) -> Vec<(usize, usize)> {
    // Each pair is rewarded by more than any achievable total cost, so a
    // larger matching always wins before costs are compared.
    let reward = c.rows.min(c.cols) as f64 + 1.0;
    min_cost_partial(c.rows, c.cols, |r, col| c.get(r, col).map(|v| v - reward))
}

/// Like [`solve`], but every pair in `pinned` is forced into the result and
/// the remaining rows and columns are matched optimally among themselves.
pub fn solve_pinned(c: &CostMatrix, pinned: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut row_taken = vec![false; c.rows];
    let mut col_taken = vec![false; c.cols];
    for &(row, col) in pinned {
        if row >= c.rows || col >= c.cols {
            return Err(Error::InvalidPin {
                row,
                col,
                reason: "out of range",
            });
        }
        if row_taken[row] || col_taken[col] {
            return Err(Error::InvalidPin {
                row,
                col,
                reason: "conflicts with another pin",
            });
        }
        if c.is_forbidden(row, col) {
            return Err(Error::InvalidPin {
                row,
                col,
                reason: "pair is forbidden",
            });
        }
        row_taken[row] = true;
        col_taken[col] = true;
    }
    let free_rows: Vec<usize> = (0..c.rows).filter(|r| !row_taken[*r]).collect();
    let free_cols: Vec<usize> = (0..c.cols).filter(|k| !col_taken[*k]).collect();
    let reduced = CostMatrix::from_fn(free_rows.len(), free_cols.len(), |r, k| {
        c.get(free_rows[r], free_cols[k])
    })?;
    let mut out: Vec<(usize, usize)> = solve(&reduced)
        .into_iter()
        .map(|(r, k)| (free_rows[r], free_cols[k]))
        .chain(pinned.iter().copied())
        .collect();
    out.sort_unstable();
    Ok(out)
}
