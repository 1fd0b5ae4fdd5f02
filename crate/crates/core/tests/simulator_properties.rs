use proptest::prelude::*;

use sparseflow::sim::{simulate_all, simulate_inner, simulate_outer, simulate_rowwise};
use sparseflow::sparse::{dense_multiply_oracle, random_sparse, Pattern};
use sparseflow::{Layout, SimConfig, SparseMatrix};

fn pattern() -> impl Strategy<Value = Pattern> {
    prop_oneof![Just(Pattern::Uniform), Just(Pattern::Banded), Just(Pattern::Clustered)]
}

prop_compose! {
    fn pair()(m in 1usize..40, k in 1usize..40, n in 1usize..40,
              da in 0.01f64..1.0, db in 0.01f64..1.0,
              p in pattern(), sa in any::<u64>(), sb in any::<u64>()) -> (SparseMatrix, SparseMatrix) {
        (random_sparse(m, k, da, p, sa).unwrap(), random_sparse(k, n, db, p, sb).unwrap())
    }
}

prop_compose! {
    fn config()(num_pes in 1usize..9, mem_block_rows in 1usize..17,
                resident_blocks in 1usize..5, miss_penalty_cycles in 0u64..100) -> SimConfig {
        SimConfig { num_pes, mem_block_rows, resident_blocks, miss_penalty_cycles }
    }
}

fn with_entry(m: &SparseMatrix, r: usize, c: usize) -> SparseMatrix {
    let mut t: Vec<_> = m.triplets().filter(|&(i, j, _)| (i, j) != (r, c)).collect();
    t.push((r, c, 1.0));
    SparseMatrix::from_triplets(m.rows(), m.cols(), m.layout(), &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_dataflow_matches_the_oracle((a, b) in pair(), cfg in config()) {
        let want = dense_multiply_oracle(&a, &b).unwrap();
        for r in simulate_all(&a, &b, &cfg).unwrap().results {
            prop_assert!(r.result.approx_eq(&want, 1e-9), "{:?} differs", r.dataflow);
        }
    }

    #[test]
    fn utilization_and_latency_bounds((a, b) in pair(), cfg in config()) {
        let first = simulate_all(&a, &b, &cfg).unwrap();
        for r in &first.results {
            prop_assert!((0.0..=1.0).contains(&r.pe_utilization));
            prop_assert!(r.latency_cycles >= r.total_work_cycles.div_ceil(cfg.num_pes as u64));
            if r.latency_cycles > 0 {
                let expect = r.total_work_cycles as f64 / (cfg.num_pes as f64 * r.latency_cycles as f64);
                prop_assert!((r.pe_utilization - expect).abs() < 1e-12);
            }
        }
        prop_assert_eq!(first, simulate_all(&a, &b, &cfg).unwrap());
    }

    #[test]
    fn ip_work_grows_with_a((a, b) in pair(), r in any::<prop::sample::Index>(), c in any::<prop::sample::Index>()) {
        let cfg = SimConfig::default();
        let bc = b.to_layout(Layout::Csc);
        let before = simulate_inner(&a, &bc, &cfg).unwrap().total_work_cycles;
        let grown = with_entry(&a, r.index(a.rows()), c.index(a.cols()));
        let after = simulate_inner(&grown, &bc, &cfg).unwrap().total_work_cycles;
        prop_assert!(after >= before);
    }

    #[test]
    fn op_work_grows_with_b_row((a, b) in pair(), k in any::<prop::sample::Index>(), c in any::<prop::sample::Index>()) {
        let cfg = SimConfig::default();
        let ac = a.to_layout(Layout::Csc);
        let k = k.index(b.rows());
        prop_assume!(ac.lane_nnz(k) > 0);
        let before = simulate_outer(&ac, &b, &cfg).unwrap().total_work_cycles;
        let grown = with_entry(&b, k, c.index(b.cols()));
        let after = simulate_outer(&ac, &grown, &cfg).unwrap().total_work_cycles;
        prop_assert!(after >= before);
    }

    #[test]
    fn rowwise_with_every_block_resident_has_no_penalty((a, b) in pair(), cfg in config()) {
        let all = SimConfig { resident_blocks: b.rows().div_ceil(cfg.mem_block_rows), ..cfg };
        let free = SimConfig { miss_penalty_cycles: 0, ..all };
        let x = simulate_rowwise(&a, &b, &all).unwrap();
        prop_assert_eq!(x.misses, 0);
        prop_assert_eq!(x.latency_cycles, simulate_rowwise(&a, &b, &free).unwrap().latency_cycles);
    }
}
