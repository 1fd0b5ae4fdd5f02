use std::path::PathBuf;

use sparseflow::features::extract_features;
use sparseflow::sparse::{partition_blocks, random_sparse, read_matrix_market, write_matrix_market_file, Pattern};
use sparseflow::{Feature, SimConfig, SparseMatrix};

/// Set `SPARSEFLOW_SHERMAN1` or place the file at `<workspace>/data/sherman1.mtx`.
fn sherman1() -> Option<PathBuf> {
    let path = std::env::var_os("SPARSEFLOW_SHERMAN1")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/sherman1.mtx"));
    path.exists().then_some(path)
}

fn assert_conserved(m: &SparseMatrix, block: usize) {
    let grid = partition_blocks(m, block, block).unwrap();
    assert_eq!(grid.total_nnz(), m.nnz());
    let mut back: Vec<(usize, usize, f64)> = grid
        .iter()
        .flat_map(|((i, j), b)| {
            b.triplets()
                .map(move |(r, c, v)| (i * block + r, j * block + c, v))
                .collect::<Vec<_>>()
        })
        .collect();
    back.sort_by_key(|t| (t.0, t.1));
    assert_eq!(back, m.sorted_entries());
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (i, p) in Pattern::ALL.into_iter().enumerate() {
        let m = random_sparse(37, 53, 0.08, p, i as u64).unwrap();
        let path = dir.path().join(format!("{p}.mtx"));
        write_matrix_market_file(&m, &path).unwrap();
        assert_eq!(read_matrix_market(&path).unwrap(), m);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = read_matrix_market("/definitely/not/here.mtx").unwrap_err();
    assert!(matches!(err, sparseflow::Error::Io(_)), "{err:?}");
}

#[test]
fn sherman1_sized_block_conservation() {
    // Same shape and nonzero count as sherman1.
    let m = random_sparse(1000, 1000, 3750.0 / 1e6, Pattern::Banded, 1).unwrap();
    assert_eq!(m.nnz(), 3750);
    assert_conserved(&m, 256);
}

#[test]
fn sherman1_when_available() {
    let Some(path) = sherman1() else {
        eprintln!("sherman1.mtx not found; skipping");
        return;
    };
    let m = read_matrix_market(path).unwrap();
    let density = m.density();
    assert!((0.0025..0.0035).contains(&density), "density {density}");
    assert_conserved(&m, 256);
    let f = extract_features(&m, &m, &SimConfig::default()).unwrap();
    assert!((0.0025..0.0035).contains(&f.get(Feature::SparsityA)));
}
