//! Seeded synthetic corpora of matrix pairs and the pair-manifest format.
//!
//! A manifest is a text file with one pair per line: `<a.mtx> <b.mtx> [id]`.
//! Paths are relative to the manifest's directory; `#` starts a comment.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::MatrixPair;
use crate::sparse::{random_sparse, read_matrix_market, Pattern};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub pairs: usize,
    /// Square matrix side drawn uniformly from this inclusive range.
    pub dims: (usize, usize),
    /// Density drawn log-uniformly from this inclusive range.
    pub density: (f64, f64),
    /// Probability that a pair multiplies a matrix with itself.
    pub self_pair_prob: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            pairs: 40,
            dims: (64, 256),
            density: (1e-3, 0.5),
            self_pair_prob: 0.5,
            seed: 0,
        }
    }
}

/// Generates `spec.pairs` pairs cycling through the three patterns.
///
/// A pair is either a matrix times itself or two independent matrices of the
/// same pattern and size whose densities differ by at most a factor of two.
pub fn synthetic_corpus(spec: &CorpusSpec) -> Result<Vec<MatrixPair>> {
    let (dlo, dhi) = spec.density;
    if !(dlo > 0.0 && dlo <= dhi && dhi <= 1.0) {
        return Err(Error::InvalidArgument(format!("density range ({dlo}, {dhi})")));
    }
    if spec.dims.0 == 0 || spec.dims.0 > spec.dims.1 {
        return Err(Error::InvalidArgument(format!("dimension range {:?}", spec.dims)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.pairs);
    for p in 0..spec.pairs {
        let pattern = Pattern::ALL[p % 3];
        let n = rng.gen_range(spec.dims.0..=spec.dims.1);
        let density = (rng.gen_range(dlo.ln()..=dhi.ln())).exp().clamp(dlo, dhi);
        let seed_a: u64 = rng.gen();
        let a = random_sparse(n, n, density, pattern, seed_a)?;
        let b = if rng.gen_bool(spec.self_pair_prob.clamp(0.0, 1.0)) {
            a.clone()
        } else {
            let factor: f64 = rng.gen_range(0.5..=2.0);
            random_sparse(n, n, (density * factor).clamp(dlo, dhi), pattern, rng.gen())?
        };
        out.push(MatrixPair {
            id: format!("p{p:03}-{pattern}"),
            a,
            b,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub a: PathBuf,
    pub b: PathBuf,
}

pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (a, b, id) = match parts.as_slice() {
            [a, b] => (*a, *b, None),
            [a, b, id] => (*a, *b, Some(*id)),
            _ => return Err(Error::format("manifest", format!("line {}: `{line}`", n + 1))),
        };
        let id = id.map(str::to_string).unwrap_or_else(|| {
            let stem = |p: &str| {
                Path::new(p)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            };
            format!("{}__{}", stem(a), stem(b))
        });
        out.push(ManifestEntry {
            id,
            a: base.join(a),
            b: base.join(b),
        });
    }
    Ok(out)
}

/// Reads a manifest and every matrix it names.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<MatrixPair>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&fs::read_to_string(path)?, base)?
        .into_iter()
        .map(|e| {
            Ok(MatrixPair {
                id: e.id,
                a: read_matrix_market(&e.a)?,
                b: read_matrix_market(&e.b)?,
            })
        })
        .collect()
}
