use super::{
    check_dims, check_layout, csr_from_rows, utilization, BlockWindow, PeArray, RowAccumulator, SimConfig, SimResult,
};
use crate::sparse::{Layout, SparseMatrix};
use crate::{DataflowLabel, Result};

/// Row-wise (Gustavson) dataflow with a bounded window of resident B blocks.
///
/// Each nonempty row of A is one task costing `2 * sum_k nnz(B_k*)` (multiply and
/// accumulator insert). Rows are processed in order against an LRU window of
/// `resident_blocks` B blocks that starts pre-loaded with the leading blocks;
/// every access to a non-resident block stalls the row's PE for
/// `miss_penalty_cycles`. Stalls count toward latency but not toward work.
pub fn simulate_rowwise(a_csr: &SparseMatrix, b_csr: &SparseMatrix, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    check_layout("A", a_csr, Layout::Csr)?;
    check_layout("B", b_csr, Layout::Csr)?;
    check_dims(a_csr, b_csr)?;

    let total_blocks = b_csr.rows().div_ceil(cfg.mem_block_rows);
    let mut window = BlockWindow::prewarmed(cfg.resident_blocks, total_blocks);
    let mut pes = PeArray::new(cfg.num_pes);
    let mut acc = RowAccumulator::new(b_csr.cols());
    let mut total_work = 0u64;
    let mut misses = 0u64;
    let mut rows = Vec::with_capacity(a_csr.rows());

    for i in 0..a_csr.rows() {
        let (a_idx, a_val) = a_csr.lane(i);
        if a_idx.is_empty() {
            rows.push(Vec::new());
            continue;
        }
        let mut work = 0u64;
        let mut row_misses = 0u64;
        for (&k, &x) in a_idx.iter().zip(a_val) {
            if !window.access(cfg.mem_block_of(k)) {
                row_misses += 1;
            }
            let (b_idx, b_val) = b_csr.lane(k);
            work += 2 * b_idx.len() as u64;
            for (&j, &y) in b_idx.iter().zip(b_val) {
                acc.add(j, x * y);
            }
        }
        pes.assign(work + row_misses * cfg.miss_penalty_cycles);
        total_work += work;
        misses += row_misses;
        rows.push(acc.drain_sorted());
    }

    let latency = pes.makespan();
    Ok(SimResult {
        dataflow: DataflowLabel::Rw,
        latency_cycles: latency,
        pe_utilization: utilization(total_work, cfg.num_pes, latency),
        total_work_cycles: total_work,
        misses,
        result: csr_from_rows(a_csr.rows(), b_csr.cols(), rows),
    })
}
