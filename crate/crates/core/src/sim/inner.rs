use super::{check_dims, check_layout, csr_from_rows, utilization, PeArray, SimConfig, SimResult};
use crate::sparse::{Layout, SparseMatrix};
use crate::{DataflowLabel, Result};

/// Inner-product dataflow: one merge-intersection task per output pair `(i, j)`
/// with a nonempty row of A and a nonempty column of B, dealt in row-major order.
pub fn simulate_inner(a_csr: &SparseMatrix, b_csc: &SparseMatrix, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    check_layout("A", a_csr, Layout::Csr)?;
    check_layout("B", b_csc, Layout::Csc)?;
    check_dims(a_csr, b_csc)?;

    let mut pes = PeArray::new(cfg.num_pes);
    let mut total_work = 0u64;
    let nonempty_cols: Vec<usize> = (0..b_csc.cols()).filter(|&j| b_csc.lane_nnz(j) > 0).collect();
    let mut rows = Vec::with_capacity(a_csr.rows());

    for i in 0..a_csr.rows() {
        let (a_idx, a_val) = a_csr.lane(i);
        let mut out = Vec::new();
        if !a_idx.is_empty() {
            for &j in &nonempty_cols {
                let (b_idx, b_val) = b_csc.lane(j);
                let cost = (a_idx.len() + b_idx.len()) as u64;
                pes.assign(cost);
                total_work += cost;
                if let Some(v) = dot_sorted(a_idx, a_val, b_idx, b_val) {
                    out.push((j, v));
                }
            }
        }
        rows.push(out);
    }

    let latency = pes.makespan();
    Ok(SimResult {
        dataflow: DataflowLabel::Ip,
        latency_cycles: latency,
        pe_utilization: utilization(total_work, cfg.num_pes, latency),
        total_work_cycles: total_work,
        misses: 0,
        result: csr_from_rows(a_csr.rows(), b_csc.cols(), rows),
    })
}

/// Sorted-index intersection; `None` when the index sets do not meet.
fn dot_sorted(ai: &[usize], av: &[f64], bi: &[usize], bv: &[f64]) -> Option<f64> {
    let (mut p, mut q) = (0, 0);
    let mut acc = 0.0;
    let mut hit = false;
    while p < ai.len() && q < bi.len() {
        match ai[p].cmp(&bi[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => {
                acc += av[p] * bv[q];
                hit = true;
                p += 1;
                q += 1;
            }
        }
    }
    hit.then_some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{dense_multiply_oracle, random_sparse, Pattern};
    use crate::Error;

    #[test]
    fn dense_two_by_two() {
        let d = SparseMatrix::from_dense(2, 2, Layout::Csr, &[1.0; 4]).unwrap();
        let r = simulate_inner(&d, &d.to_layout(Layout::Csc), &SimConfig::default()).unwrap();
        assert_eq!(r.latency_cycles, 4);
        assert_eq!(r.total_work_cycles, 16);
        assert_eq!(r.pe_utilization, 1.0);
    }

    #[test]
    fn rejects_wrong_layout() {
        let d = SparseMatrix::identity(3, Layout::Csr);
        assert!(matches!(
            simulate_inner(&d, &d, &SimConfig::default()),
            Err(Error::WrongLayout { operand: "B", .. })
        ));
    }

    #[test]
    fn disjoint_patterns_still_cost_work() {
        // A touches only column 0, B's only column touches row 1: tasks exist, products do not.
        let a = SparseMatrix::from_triplets(2, 2, Layout::Csr, &[(0, 0, 1.0)]).unwrap();
        let b = SparseMatrix::from_triplets(2, 2, Layout::Csc, &[(1, 0, 1.0)]).unwrap();
        let r = simulate_inner(&a, &b, &SimConfig::default()).unwrap();
        assert_eq!(r.total_work_cycles, 2);
        assert_eq!(r.latency_cycles, 2);
        assert_eq!(r.result.nnz(), 0);
    }

    #[test]
    fn matches_oracle() {
        let a = random_sparse(20, 15, 0.2, Pattern::Clustered, 3).unwrap();
        let b = random_sparse(15, 12, 0.25, Pattern::Banded, 4).unwrap();
        let r = simulate_inner(&a, &b.to_layout(Layout::Csc), &SimConfig::default()).unwrap();
        assert!(r.result.approx_eq(&dense_multiply_oracle(&a, &b).unwrap(), 1e-9));
    }
}
