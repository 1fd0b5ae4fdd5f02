use super::{check_dims, check_layout, csr_from_rows, utilization, PeArray, RowAccumulator, SimConfig, SimResult};
use crate::sparse::{Layout, SparseMatrix};
use crate::{DataflowLabel, Result};

/// Outer-product dataflow in two phases.
///
/// Multiply: one task per shared index `k`, costing `nnz(A_*k) * nnz(B_k*)`.
/// Merge: one task per output row, costing the partial products that land in it.
/// Latency is the sum of the two phase makespans.
pub fn simulate_outer(a_csc: &SparseMatrix, b_csr: &SparseMatrix, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    check_layout("A", a_csc, Layout::Csc)?;
    check_layout("B", b_csr, Layout::Csr)?;
    check_dims(a_csc, b_csr)?;

    let m = a_csc.rows();
    let mut multiply = PeArray::new(cfg.num_pes);
    let mut partials_per_row = vec![0u64; m];
    // Partial products bucketed by output row, in increasing k.
    let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut partial_total = 0u64;

    for k in 0..a_csc.cols() {
        let (a_rows, a_val) = a_csc.lane(k);
        let (b_cols, b_val) = b_csr.lane(k);
        let cost = (a_rows.len() * b_cols.len()) as u64;
        if cost == 0 {
            continue;
        }
        multiply.assign(cost);
        partial_total += cost;
        for (&i, &x) in a_rows.iter().zip(a_val) {
            partials_per_row[i] += b_cols.len() as u64;
            buckets[i].extend(b_cols.iter().zip(b_val).map(|(&j, &y)| (j, x * y)));
        }
    }

    let mut merge = PeArray::new(cfg.num_pes);
    for &p in partials_per_row.iter().filter(|&&p| p > 0) {
        merge.assign(p);
    }

    let mut acc = RowAccumulator::new(b_csr.cols());
    let rows = buckets
        .into_iter()
        .map(|bucket| {
            for (j, v) in bucket {
                acc.add(j, v);
            }
            acc.drain_sorted()
        })
        .collect();

    let latency = multiply.makespan() + merge.makespan();
    let total_work = 2 * partial_total;
    Ok(SimResult {
        dataflow: DataflowLabel::Op,
        latency_cycles: latency,
        pe_utilization: utilization(total_work, cfg.num_pes, latency),
        total_work_cycles: total_work,
        misses: 0,
        result: csr_from_rows(m, b_csr.cols(), rows),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{dense_multiply_oracle, random_sparse, Pattern};

    #[test]
    fn dense_two_by_two() {
        let d = SparseMatrix::from_dense(2, 2, Layout::Csr, &[1.0; 4]).unwrap();
        let r = simulate_outer(&d.to_layout(Layout::Csc), &d, &SimConfig::default()).unwrap();
        assert_eq!(r.total_work_cycles, 16);
        assert_eq!(r.latency_cycles, 8);
        assert_eq!(r.pe_utilization, 0.5);
    }

    #[test]
    fn identity_left_operand() {
        let b = random_sparse(4, 6, 0.5, Pattern::Uniform, 8).unwrap();
        let id = SparseMatrix::identity(4, Layout::Csc);
        let r = simulate_outer(&id, &b, &SimConfig::default()).unwrap();
        assert_eq!(r.total_work_cycles, 2 * b.nnz() as u64);
        assert_eq!(r.result, b);
    }

    #[test]
    fn matches_oracle() {
        let a = random_sparse(20, 15, 0.2, Pattern::Uniform, 5).unwrap();
        let b = random_sparse(15, 12, 0.25, Pattern::Clustered, 6).unwrap();
        let r = simulate_outer(&a.to_layout(Layout::Csc), &b, &SimConfig::default()).unwrap();
        assert!(r.result.approx_eq(&dense_multiply_oracle(&a, &b).unwrap(), 1e-9));
    }
}
