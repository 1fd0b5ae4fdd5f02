use super::{Layout, SparseMatrix};
use crate::{Error, Result};

/// Products smaller than this in magnitude are treated as structural zeros.
pub const ORACLE_DROP_TOLERANCE: f64 = 1e-12;

/// Reference product through a dense triple loop, re-sparsified into CSR.
///
/// Accumulation runs over `k` in increasing order for every output element.
pub fn dense_multiply_oracle(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut da = vec![0.0; m * k];
    for (r, c, v) in a.triplets() {
        da[r * k + c] = v;
    }
    let mut db = vec![0.0; k * n];
    for (r, c, v) in b.triplets() {
        db[r * n + c] = v;
    }
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..k {
                acc += da[i * k + p] * db[p * n + j];
            }
            if acc.abs() >= ORACLE_DROP_TOLERANCE {
                indices.push(j);
                values.push(acc);
            }
        }
        offsets.push(indices.len());
    }
    Ok(SparseMatrix::from_parts_unchecked(
        m,
        n,
        Layout::Csr,
        offsets,
        indices,
        values,
    ))
}
