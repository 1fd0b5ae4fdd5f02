//! Compressed sparse matrices and the utilities built around them.

mod block;
mod gen;
mod mtx;
mod oracle;

use std::fmt;

pub use block::{partition_blocks, trim_to_fit, BlockGrid};
pub use gen::{random_sparse, random_sparse_with, GenOptions, Pattern};
pub use mtx::{parse_matrix_market, read_matrix_market, write_matrix_market, write_matrix_market_file};
pub use oracle::{dense_multiply_oracle, ORACLE_DROP_TOLERANCE};

use crate::{Error, Result};

/// Storage orientation of a [`SparseMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Compressed rows: `offsets` has `rows + 1` entries, `indices` are column indices.
    Csr,
    /// Compressed columns: `offsets` has `cols + 1` entries, `indices` are row indices.
    Csc,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::Csr => f.write_str("CSR"),
            Layout::Csc => f.write_str("CSC"),
        }
    }
}

/// A real-valued sparse matrix in CSR or CSC layout.
///
/// Invariants, checked by [`SparseMatrix::new`]:
/// `offsets` starts at 0, is non-decreasing and ends at `nnz`; every index is
/// in range for the minor dimension; indices within a lane (row for CSR,
/// column for CSC) are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    layout: Layout,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        layout: Layout,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let (major, minor) = match layout {
            Layout::Csr => (rows, cols),
            Layout::Csc => (cols, rows),
        };
        if offsets.len() != major + 1 {
            return Err(Error::InvalidMatrix(format!(
                "offsets has length {}, expected {}",
                offsets.len(),
                major + 1
            )));
        }
        if offsets[0] != 0 {
            return Err(Error::InvalidMatrix("offsets[0] must be 0".into()));
        }
        if indices.len() != values.len() || offsets[major] != indices.len() {
            return Err(Error::InvalidMatrix(format!(
                "last offset {} / indices {} / values {} disagree",
                offsets[major],
                indices.len(),
                values.len()
            )));
        }
        if let Some(lane) = offsets.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidMatrix(format!("offsets decrease at lane {lane}")));
        }
        for lane in 0..major {
            let (start, end) = (offsets[lane], offsets[lane + 1]);
            let lane_idx = &indices[start..end];
            if lane_idx.iter().any(|&i| i >= minor) {
                return Err(Error::InvalidMatrix(format!("index out of range in lane {lane}")));
            }
            if lane_idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "indices not strictly increasing in lane {lane}"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            layout,
            offsets,
            indices,
            values,
        })
    }

    /// Builds the matrix from a validated-by-construction set of parts.
    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        layout: Layout,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert!(Self::new(rows, cols, layout, offsets.clone(), indices.clone(), values.clone()).is_ok());
        Self {
            rows,
            cols,
            layout,
            offsets,
            indices,
            values,
        }
    }

    pub fn zeros(rows: usize, cols: usize, layout: Layout) -> Self {
        let major = match layout {
            Layout::Csr => rows,
            Layout::Csc => cols,
        };
        Self::from_parts_unchecked(rows, cols, layout, vec![0; major + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize, layout: Layout) -> Self {
        Self::from_parts_unchecked(n, n, layout, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
    }

    /// Builds a matrix from `(row, col, value)` triplets in any order.
    ///
    /// Duplicate coordinates are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, layout: Layout, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut keyed: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::InvalidMatrix(format!(
                    "triplet ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            match layout {
                Layout::Csr => keyed.push((r, c, v)),
                Layout::Csc => keyed.push((c, r, v)),
            }
        }
        keyed.sort_by_key(|t| (t.0, t.1));

        let major = match layout {
            Layout::Csr => rows,
            Layout::Csc => cols,
        };
        let mut offsets = vec![0usize; major + 1];
        let mut indices = Vec::with_capacity(keyed.len());
        let mut values = Vec::with_capacity(keyed.len());
        let mut iter = keyed.into_iter().peekable();
        while let Some((maj, min, mut v)) = iter.next() {
            while let Some(&(m2, n2, v2)) = iter.peek() {
                if m2 == maj && n2 == min {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                offsets[maj + 1] += 1;
                indices.push(min);
                values.push(v);
            }
        }
        for i in 0..major {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self::from_parts_unchecked(rows, cols, layout, offsets, indices, values))
    }

    /// Dense row-major input; zeros are skipped.
    pub fn from_dense(rows: usize, cols: usize, layout: Layout, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "dense buffer of {} values for {rows}x{cols}",
                data.len()
            )));
        }
        let triplets: Vec<_> = data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(idx, &v)| (idx / cols, idx % cols, v))
            .collect();
        Self::from_triplets(rows, cols, layout, &triplets)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of lanes along the compressed dimension.
    pub fn major_dim(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Indices and values of lane `i` (row `i` for CSR, column `i` for CSC).
    pub fn lane(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn lane_nnz(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Fraction of stored entries, `nnz / (rows * cols)`; zero for an empty shape.
    pub fn density(&self) -> f64 {
        let size = self.rows * self.cols;
        if size == 0 {
            0.0
        } else {
            self.nnz() as f64 / size as f64
        }
    }

    /// Nonzeros per row, regardless of layout.
    pub fn row_counts(&self) -> Vec<usize> {
        match self.layout {
            Layout::Csr => (0..self.rows).map(|i| self.lane_nnz(i)).collect(),
            Layout::Csc => {
                let mut counts = vec![0; self.rows];
                for &r in &self.indices {
                    counts[r] += 1;
                }
                counts
            }
        }
    }

    /// Nonzeros per column, regardless of layout.
    pub fn col_counts(&self) -> Vec<usize> {
        match self.layout {
            Layout::Csc => (0..self.cols).map(|j| self.lane_nnz(j)).collect(),
            Layout::Csr => {
                let mut counts = vec![0; self.cols];
                for &c in &self.indices {
                    counts[c] += 1;
                }
                counts
            }
        }
    }

    /// Iterates `(row, col, value)` in storage order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.major_dim()).flat_map(move |lane| {
            let (idx, val) = self.lane(lane);
            idx.iter().zip(val).map(move |(&minor, &v)| match self.layout {
                Layout::Csr => (lane, minor, v),
                Layout::Csc => (minor, lane, v),
            })
        })
    }

    /// Entries sorted in row-major order, independent of layout.
    pub fn sorted_entries(&self) -> Vec<(usize, usize, f64)> {
        match self.layout {
            Layout::Csr => self.triplets().collect(),
            Layout::Csc => self.to_layout(Layout::Csr).triplets().collect(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let (lane, minor) = match self.layout {
            Layout::Csr => (row, col),
            Layout::Csc => (col, row),
        };
        if lane >= self.major_dim() {
            return None;
        }
        let (idx, val) = self.lane(lane);
        idx.binary_search(&minor).ok().map(|p| val[p])
    }

    /// Same logical matrix stored in `target` layout.
    ///
    /// Converting to the current layout returns a clone.
    pub fn to_layout(&self, target: Layout) -> SparseMatrix {
        if target == self.layout {
            return self.clone();
        }
        let new_major = match target {
            Layout::Csr => self.rows,
            Layout::Csc => self.cols,
        };
        let mut offsets = vec![0usize; new_major + 1];
        for &m in &self.indices {
            offsets[m + 1] += 1;
        }
        for i in 0..new_major {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0f64; self.nnz()];
        // Walking old lanes in order keeps the new lanes sorted.
        for lane in 0..self.major_dim() {
            let (idx, val) = self.lane(lane);
            for (&m, &v) in idx.iter().zip(val) {
                let dst = cursor[m];
                indices[dst] = lane;
                values[dst] = v;
                cursor[m] += 1;
            }
        }
        Self::from_parts_unchecked(self.rows, self.cols, target, offsets, indices, values)
    }

    /// Logical equality: same shape, same entry set, values within `tol`.
    pub fn approx_eq(&self, other: &SparseMatrix, tol: f64) -> bool {
        if self.shape() != other.shape() || self.nnz() != other.nnz() {
            return false;
        }
        self.sorted_entries()
            .iter()
            .zip(other.sorted_entries())
            .all(|(a, b)| a.0 == b.0 && a.1 == b.1 && (a.2 - b.2).abs() <= tol)
    }

    /// Copy with every stored value replaced by `f(value)`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// The sub-matrix `rows x cols` starting at the origin, dropping entries outside it.
    pub fn leading(&self, rows: usize, cols: usize) -> SparseMatrix {
        let rows = rows.min(self.rows);
        let cols = cols.min(self.cols);
        self.window(0, rows, 0, cols)
    }

    /// Extracts rows `[r0, r1)` and columns `[c0, c1)`, re-indexed to local coordinates.
    pub fn window(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> SparseMatrix {
        let (maj0, maj1, min0, min1) = match self.layout {
            Layout::Csr => (r0, r1, c0, c1),
            Layout::Csc => (c0, c1, r0, r1),
        };
        let mut offsets = Vec::with_capacity(maj1 - maj0 + 1);
        offsets.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for lane in maj0..maj1 {
            let (idx, val) = self.lane(lane);
            let lo = idx.partition_point(|&m| m < min0);
            let hi = idx.partition_point(|&m| m < min1);
            indices.extend(idx[lo..hi].iter().map(|&m| m - min0));
            values.extend_from_slice(&val[lo..hi]);
            offsets.push(indices.len());
        }
        Self::from_parts_unchecked(r1 - r0, c1 - c0, self.layout, offsets, indices, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_broken_invariants() {
        // wrong offsets length
        assert!(SparseMatrix::new(2, 2, Layout::Csr, vec![0, 1], vec![0], vec![1.0]).is_err());
        // offsets[0] != 0
        assert!(SparseMatrix::new(1, 2, Layout::Csr, vec![1, 1], vec![0], vec![1.0]).is_err());
        // decreasing
        assert!(SparseMatrix::new(2, 2, Layout::Csr, vec![0, 2, 1], vec![0], vec![1.0]).is_err());
        // out of range
        assert!(SparseMatrix::new(1, 2, Layout::Csr, vec![0, 1], vec![2], vec![1.0]).is_err());
        // unsorted
        assert!(SparseMatrix::new(1, 3, Layout::Csr, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        // duplicate
        assert!(SparseMatrix::new(1, 3, Layout::Csr, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::new(1, 3, Layout::Csc, vec![0, 1, 1, 1], vec![0], vec![1.0]).is_ok());
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            Layout::Csr,
            &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 0, -3.0), (1, 1, 0.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), Some(3.0));
        assert_eq!(m.get(1, 0), None);
    }

    #[test]
    fn identity_conversion_keeps_arrays() {
        let csr = SparseMatrix::identity(4, Layout::Csr);
        let csc = csr.to_layout(Layout::Csc);
        assert_eq!(csc.layout(), Layout::Csc);
        assert_eq!(csc.offsets(), csr.offsets());
        assert_eq!(csc.indices(), csr.indices());
        assert_eq!(csc.values(), csr.values());
    }

    #[test]
    fn single_row_to_csc() {
        let m = SparseMatrix::from_dense(1, 3, Layout::Csr, &[0.0, 7.0, 0.0]).unwrap();
        let csc = m.to_layout(Layout::Csc);
        assert_eq!(csc.offsets(), &[0, 0, 1, 1]);
        assert_eq!(csc.indices(), &[0]);
        assert_eq!(csc.values(), &[7.0]);
    }

    #[test]
    fn random_round_trip_is_bit_identical() {
        let m = random_sparse(50, 40, 0.1, Pattern::Uniform, 7).unwrap();
        let back = m.to_layout(Layout::Csc).to_layout(Layout::Csr);
        assert_eq!(back, m);
    }

    #[test]
    fn counts_agree_across_layouts() {
        let m = random_sparse(13, 9, 0.3, Pattern::Uniform, 5).unwrap();
        let csc = m.to_layout(Layout::Csc);
        assert_eq!(m.row_counts(), csc.row_counts());
        assert_eq!(m.col_counts(), csc.col_counts());
        assert_eq!(m.row_counts().iter().sum::<usize>(), m.nnz());
    }

    #[test]
    fn window_reindexes() {
        let m = SparseMatrix::from_dense(3, 3, Layout::Csr, &[1., 2., 3., 4., 5., 6., 7., 8., 9.]).unwrap();
        for layout in [Layout::Csr, Layout::Csc] {
            let w = m.to_layout(layout).window(1, 3, 0, 2);
            assert_eq!(w.shape(), (2, 2));
            assert_eq!(w.get(0, 0), Some(4.0));
            assert_eq!(w.get(1, 1), Some(8.0));
            assert_eq!(w.nnz(), 4);
        }
    }
}
