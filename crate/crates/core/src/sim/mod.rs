//! Cycle-level cost models for the three SpGEMM dataflows.
//!
//! Every model splits the multiplication into tasks, charges each task a
//! cycle cost derived from nonzero counts, and deals the tasks round-robin
//! onto `num_pes` processing elements in a fixed order. Latency is the
//! heaviest PE load. Only tasks with work are dealt; empty rows, columns or
//! shared indices never occupy a PE slot.
//!
//! | dataflow | operands | task | cost |
//! |----------|----------|------|------|
//! | inner    | A CSR, B CSC | output `(i, j)` | `nnz(A_i*) + nnz(B_*j)` |
//! | outer    | A CSC, B CSR | shared `k`, then output row | `nnz(A_*k) * nnz(B_k*)`, then partial products per row |
//! | row-wise | A CSR, B CSR | output row `i` | `2 * sum nnz(B_k*)` plus miss penalties |
//!
//! All three compute the actual product so the models can be checked against
//! [`crate::sparse::dense_multiply_oracle`].

mod inner;
mod outer;
mod rowwise;
mod window;

pub use inner::simulate_inner;
pub use outer::simulate_outer;
pub use rowwise::simulate_rowwise;
pub use window::BlockWindow;

use crate::sparse::{Layout, SparseMatrix, ORACLE_DROP_TOLERANCE};
use crate::{DataflowLabel, Error, Result};

/// Accelerator and memory parameters shared by the simulators and the feature extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub num_pes: usize,
    /// Rows of B per memory block.
    pub mem_block_rows: usize,
    /// Number of B blocks held resident at once (LRU).
    pub resident_blocks: usize,
    pub miss_penalty_cycles: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_pes: 4,
            mem_block_rows: 256,
            resident_blocks: 4,
            miss_penalty_cycles: 64,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_pes == 0 {
            return Err(Error::InvalidArgument("num_pes must be at least 1".into()));
        }
        if self.mem_block_rows == 0 {
            return Err(Error::InvalidArgument("mem_block_rows must be at least 1".into()));
        }
        if self.resident_blocks == 0 {
            return Err(Error::InvalidArgument("resident_blocks must be at least 1".into()));
        }
        Ok(())
    }

    /// Memory block of B holding row `k`.
    pub fn mem_block_of(&self, k: usize) -> usize {
        k / self.mem_block_rows
    }
}

/// Outcome of one simulated multiplication.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub dataflow: DataflowLabel,
    pub latency_cycles: u64,
    /// `total_work_cycles / (num_pes * latency_cycles)`, or 1 when both are zero.
    pub pe_utilization: f64,
    pub total_work_cycles: u64,
    /// B-block misses charged as stall cycles (row-wise only).
    pub misses: u64,
    /// The computed product, in CSR.
    pub result: SparseMatrix,
}

/// The three results of [`simulate_all`], indexable by [`DataflowLabel`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimTriple {
    pub results: [SimResult; 3],
}

impl SimTriple {
    pub fn get(&self, label: DataflowLabel) -> &SimResult {
        &self.results[label.index()]
    }

    pub fn latencies(&self) -> [u64; 3] {
        self.results.each_ref().map(|r| r.latency_cycles)
    }

    pub fn utilizations(&self) -> [f64; 3] {
        self.results.each_ref().map(|r| r.pe_utilization)
    }
}

/// Runs all three dataflows, converting operand layouts as each requires.
pub fn simulate_all(a: &SparseMatrix, b: &SparseMatrix, cfg: &SimConfig) -> Result<SimTriple> {
    check_dims(a, b)?;
    let a_csr = a.to_layout(Layout::Csr);
    let a_csc = a.to_layout(Layout::Csc);
    let b_csr = b.to_layout(Layout::Csr);
    let b_csc = b.to_layout(Layout::Csc);
    Ok(SimTriple {
        results: [
            simulate_inner(&a_csr, &b_csc, cfg)?,
            simulate_outer(&a_csc, &b_csr, cfg)?,
            simulate_rowwise(&a_csr, &b_csr, cfg)?,
        ],
    })
}

fn check_dims(a: &SparseMatrix, b: &SparseMatrix) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

fn check_layout(operand: &'static str, m: &SparseMatrix, expected: Layout) -> Result<()> {
    if m.layout() != expected {
        return Err(Error::WrongLayout {
            operand,
            expected,
            actual: m.layout(),
        });
    }
    Ok(())
}

/// Round-robin dealer of task costs onto PEs.
struct PeArray {
    loads: Vec<u64>,
    next: usize,
}

impl PeArray {
    fn new(num_pes: usize) -> Self {
        Self {
            loads: vec![0; num_pes],
            next: 0,
        }
    }

    fn assign(&mut self, cost: u64) {
        self.loads[self.next] += cost;
        self.next = (self.next + 1) % self.loads.len();
    }

    fn makespan(&self) -> u64 {
        self.loads.iter().copied().max().unwrap_or(0)
    }
}

fn utilization(total_work: u64, num_pes: usize, latency: u64) -> f64 {
    if latency == 0 {
        1.0
    } else {
        total_work as f64 / (num_pes as u64 * latency) as f64
    }
}

/// Builds a CSR matrix from per-row `(col, value)` lists already sorted by column,
/// dropping values below the oracle tolerance.
fn csr_from_rows(rows: usize, cols: usize, row_entries: Vec<Vec<(usize, f64)>>) -> SparseMatrix {
    let mut offsets = Vec::with_capacity(rows + 1);
    offsets.push(0);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for entries in row_entries {
        for (c, v) in entries {
            if v.abs() >= ORACLE_DROP_TOLERANCE {
                indices.push(c);
                values.push(v);
            }
        }
        offsets.push(indices.len());
    }
    SparseMatrix::from_parts_unchecked(rows, cols, Layout::Csr, offsets, indices, values)
}

/// Dense scratch row for accumulating one output row in shared-index order.
struct RowAccumulator {
    values: Vec<f64>,
    touched: Vec<usize>,
    seen: Vec<bool>,
}

impl RowAccumulator {
    fn new(cols: usize) -> Self {
        Self {
            values: vec![0.0; cols],
            touched: Vec::new(),
            seen: vec![false; cols],
        }
    }

    fn add(&mut self, col: usize, v: f64) {
        if !self.seen[col] {
            self.seen[col] = true;
            self.touched.push(col);
        }
        self.values[col] += v;
    }

    fn drain_sorted(&mut self) -> Vec<(usize, f64)> {
        self.touched.sort_unstable();
        let out = self.touched.iter().map(|&c| (c, self.values[c])).collect();
        for &c in &self.touched {
            self.values[c] = 0.0;
            self.seen[c] = false;
        }
        self.touched.clear();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{dense_multiply_oracle, random_sparse, Pattern};

    fn dense(n: usize) -> SparseMatrix {
        SparseMatrix::from_dense(n, n, Layout::Csr, &vec![1.0; n * n]).unwrap()
    }

    #[test]
    fn dense_two_by_two_hand_values() {
        let d = dense(2);
        let t = simulate_all(&d, &d, &SimConfig::default()).unwrap();
        assert_eq!(t.latencies(), [4, 8, 8]);
        assert_eq!(t.get(DataflowLabel::Ip).pe_utilization, 1.0);
        assert_eq!(t.get(DataflowLabel::Op).pe_utilization, 0.5);
        assert_eq!(t.get(DataflowLabel::Rw).pe_utilization, 0.5);
    }

    #[test]
    fn empty_operands() {
        let z = SparseMatrix::zeros(8, 8, Layout::Csr);
        let t = simulate_all(&z, &z, &SimConfig::default()).unwrap();
        for r in &t.results {
            assert_eq!(r.latency_cycles, 0);
            assert_eq!(r.pe_utilization, 1.0);
            assert_eq!(r.result.nnz(), 0);
        }
    }

    #[test]
    fn results_match_oracle_and_each_other() {
        let cfg = SimConfig::default();
        for seed in 0..20u64 {
            let p = Pattern::ALL[seed as usize % 3];
            let a = random_sparse(17, 23, 0.05 + 0.04 * seed as f64, p, seed).unwrap();
            let b = random_sparse(23, 11, 0.3, Pattern::Uniform, seed + 100).unwrap();
            let want = dense_multiply_oracle(&a, &b).unwrap();
            let t = simulate_all(&a, &b, &cfg).unwrap();
            for r in &t.results {
                assert!(r.result.approx_eq(&want, 1e-9), "{} seed {seed}", r.dataflow);
                assert!(r.pe_utilization >= 0.0 && r.pe_utilization <= 1.0);
                assert!(r.latency_cycles >= r.total_work_cycles.div_ceil(cfg.num_pes as u64));
            }
        }
    }

    #[test]
    fn dimension_and_config_errors() {
        let a = SparseMatrix::zeros(2, 3, Layout::Csr);
        assert!(matches!(
            simulate_all(&a, &a, &SimConfig::default()),
            Err(Error::DimensionMismatch(_))
        ));
        let bad = SimConfig {
            num_pes: 0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let sq = SparseMatrix::zeros(3, 3, Layout::Csr);
        assert!(simulate_all(&sq, &sq, &bad).is_err());
    }
}
