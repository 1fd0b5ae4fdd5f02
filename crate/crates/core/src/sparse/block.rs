use super::SparseMatrix;
use crate::{Error, Result};

/// A matrix cut into a grid of independent tiles.
///
/// Block `(i, j)` covers rows `[i * block_rows, (i + 1) * block_rows)` and
/// columns `[j * block_cols, (j + 1) * block_cols)` of the source, re-indexed
/// to local coordinates. Edge blocks are smaller when the dimensions do not divide.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    block_rows: usize,
    block_cols: usize,
    grid_rows: usize,
    grid_cols: usize,
    blocks: Vec<SparseMatrix>,
}

impl BlockGrid {
    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    /// Grid dimensions as `(block rows, block columns)`.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn block(&self, i: usize, j: usize) -> &SparseMatrix {
        &self.blocks[i * self.grid_cols + j]
    }

    /// Blocks in row-major grid order with their coordinates.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &SparseMatrix)> {
        let gc = self.grid_cols;
        self.blocks.iter().enumerate().map(move |(n, b)| ((n / gc, n % gc), b))
    }

    pub fn total_nnz(&self) -> usize {
        self.blocks.iter().map(SparseMatrix::nnz).sum()
    }
}

pub fn partition_blocks(m: &SparseMatrix, block_rows: usize, block_cols: usize) -> Result<BlockGrid> {
    if block_rows == 0 || block_cols == 0 {
        return Err(Error::InvalidArgument("block dimensions must be at least 1".into()));
    }
    let grid_rows = m.rows().div_ceil(block_rows);
    let grid_cols = m.cols().div_ceil(block_cols);
    let mut blocks = Vec::with_capacity(grid_rows * grid_cols);
    for i in 0..grid_rows {
        let r0 = i * block_rows;
        let r1 = (r0 + block_rows).min(m.rows());
        for j in 0..grid_cols {
            let c0 = j * block_cols;
            let c1 = (c0 + block_cols).min(m.cols());
            blocks.push(m.window(r0, r1, c0, c1));
        }
    }
    Ok(BlockGrid {
        block_rows,
        block_cols,
        grid_rows,
        grid_cols,
        blocks,
    })
}

/// Makes `a * b` conformant by cutting the longer inner dimension down to the shorter.
///
/// Leading ranges are kept: `a` keeps its first `k` columns and `b` its first `k`
/// rows, with `k = min(a.cols, b.rows)`.
pub fn trim_to_fit(a: &SparseMatrix, b: &SparseMatrix) -> (SparseMatrix, SparseMatrix) {
    let k = a.cols().min(b.rows());
    let a2 = if a.cols() == k {
        a.clone()
    } else {
        a.leading(a.rows(), k)
    };
    let b2 = if b.rows() == k {
        b.clone()
    } else {
        b.leading(k, b.cols())
    };
    (a2, b2)
}
