//! Per-pair features and min-max scaling.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::sim::{BlockWindow, SimConfig};
use crate::sparse::{Layout, SparseMatrix};
use crate::{Error, Result};

/// The twelve features, in their fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    SparsityA,
    SparsityB,
    AvgRowLengthA,
    AvgRowLengthB,
    AvgColLengthA,
    AvgColLengthB,
    AvgRowLengthAVar,
    AvgRowLengthBVar,
    AvgColLengthAVar,
    AvgColLengthBVar,
    BlocksAccessed,
    Size,
}

pub const NUM_FEATURES: usize = 12;

impl Feature {
    pub const ALL: [Feature; NUM_FEATURES] = [
        Feature::SparsityA,
        Feature::SparsityB,
        Feature::AvgRowLengthA,
        Feature::AvgRowLengthB,
        Feature::AvgColLengthA,
        Feature::AvgColLengthB,
        Feature::AvgRowLengthAVar,
        Feature::AvgRowLengthBVar,
        Feature::AvgColLengthAVar,
        Feature::AvgColLengthBVar,
        Feature::BlocksAccessed,
        Feature::Size,
    ];

    /// The five features the tree and the Q-network consume by default.
    pub const TOP_FIVE: [Feature; 5] = [
        Feature::BlocksAccessed,
        Feature::AvgColLengthB,
        Feature::AvgRowLengthAVar,
        Feature::SparsityA,
        Feature::SparsityB,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::SparsityA => "sparsityA",
            Feature::SparsityB => "sparsityB",
            Feature::AvgRowLengthA => "avg_row_lengthA",
            Feature::AvgRowLengthB => "avg_row_lengthB",
            Feature::AvgColLengthA => "avg_col_lengthA",
            Feature::AvgColLengthB => "avg_col_lengthB",
            Feature::AvgRowLengthAVar => "avg_row_lengthA_var",
            Feature::AvgRowLengthBVar => "avg_row_lengthB_var",
            Feature::AvgColLengthAVar => "avg_col_lengthA_var",
            Feature::AvgColLengthBVar => "avg_col_lengthB_var",
            Feature::BlocksAccessed => "blocks_accessed",
            Feature::Size => "size",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature `{s}`")))
    }
}

/// Feature values for one `(A, B)` block pair, raw or scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn get(&self, f: Feature) -> f64 {
        self.0[f.index()]
    }

    pub fn set(&mut self, f: Feature, v: f64) {
        self.0[f.index()] = v;
    }

    pub fn values(&self) -> &[f64; NUM_FEATURES] {
        &self.0
    }

    /// Values of `subset`, in the subset's order.
    pub fn select(&self, subset: &[Feature]) -> Vec<f64> {
        subset.iter().map(|&f| self.get(f)).collect()
    }
}

fn mean_and_variance(counts: &[usize]) -> (f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Computes the twelve features of `a * b`.
///
/// Variances are population variances of the per-row (per-column) nonzero counts.
pub fn extract_features(a: &SparseMatrix, b: &SparseMatrix, cfg: &SimConfig) -> Result<FeatureVector> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    cfg.validate()?;
    let (row_a, row_a_var) = mean_and_variance(&a.row_counts());
    let (row_b, row_b_var) = mean_and_variance(&b.row_counts());
    let (col_a, col_a_var) = mean_and_variance(&a.col_counts());
    let (col_b, col_b_var) = mean_and_variance(&b.col_counts());

    let mut f = FeatureVector([0.0; NUM_FEATURES]);
    f.set(Feature::SparsityA, a.density());
    f.set(Feature::SparsityB, b.density());
    f.set(Feature::AvgRowLengthA, row_a);
    f.set(Feature::AvgRowLengthB, row_b);
    f.set(Feature::AvgColLengthA, col_a);
    f.set(Feature::AvgColLengthB, col_b);
    f.set(Feature::AvgRowLengthAVar, row_a_var);
    f.set(Feature::AvgRowLengthBVar, row_b_var);
    f.set(Feature::AvgColLengthAVar, col_a_var);
    f.set(Feature::AvgColLengthBVar, col_b_var);
    f.set(Feature::BlocksAccessed, blocks_accessed(a, cfg));
    f.set(Feature::Size, (a.rows() * a.cols()) as f64);
    Ok(f)
}

/// Fraction of A's nonzeros whose B row-block is not resident when touched.
///
/// Replays A's column indices in row-major order against a cold LRU window of
/// `resident_blocks` blocks of `mem_block_rows` B rows each. Empty A gives 0.
pub fn blocks_accessed(a: &SparseMatrix, cfg: &SimConfig) -> f64 {
    if a.nnz() == 0 {
        return 0.0;
    }
    let csr;
    let a = if a.layout() == Layout::Csr {
        a
    } else {
        csr = a.to_layout(Layout::Csr);
        &csr
    };
    let mut window = BlockWindow::cold(cfg.resident_blocks.max(1));
    let block_rows = cfg.mem_block_rows.max(1);
    let misses = a.indices().iter().filter(|&&k| !window.access(k / block_rows)).count();
    misses as f64 / a.nnz() as f64
}

/// Per-feature min-max scaler.
///
/// Maps the fitted minimum to 0 and maximum to 1, clamps outside values, and
/// sends every value of a degenerate (constant) feature to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    min: [f64; NUM_FEATURES],
    max: [f64; NUM_FEATURES],
}

impl Scaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self> {
        let mut min = [f64::INFINITY; NUM_FEATURES];
        let mut max = [f64::NEG_INFINITY; NUM_FEATURES];
        let mut any = false;
        for r in rows {
            any = true;
            for (i, &v) in r.0.iter().enumerate() {
                min[i] = min[i].min(v);
                max[i] = max[i].max(v);
            }
        }
        if !any {
            return Err(Error::Empty("scaler fitting set"));
        }
        Ok(Self { min, max })
    }

    /// Scaler that leaves values in `[0, 1]` unchanged.
    pub fn identity() -> Self {
        Self {
            min: [0.0; NUM_FEATURES],
            max: [1.0; NUM_FEATURES],
        }
    }

    pub fn from_bounds(min: [f64; NUM_FEATURES], max: [f64; NUM_FEATURES]) -> Result<Self> {
        if min
            .iter()
            .zip(&max)
            .any(|(lo, hi)| lo.partial_cmp(hi).is_none_or(|o| o.is_gt()))
        {
            return Err(Error::InvalidArgument("scaler bounds need min <= max".into()));
        }
        Ok(Self { min, max })
    }

    pub fn bounds(&self, f: Feature) -> (f64, f64) {
        (self.min[f.index()], self.max[f.index()])
    }

    pub fn scale_value(&self, f: Feature, v: f64) -> f64 {
        let (lo, hi) = self.bounds(f);
        if hi <= lo {
            0.0
        } else {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        }
    }

    pub fn transform(&self, f: &FeatureVector) -> FeatureVector {
        let mut out = *f;
        for feat in Feature::ALL {
            out.set(feat, self.scale_value(feat, f.get(feat)));
        }
        out
    }

    /// One line per feature: `name min max`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for f in Feature::ALL {
            let (lo, hi) = self.bounds(f);
            s.push_str(&format!("{} {:?} {:?}\n", f.name(), lo, hi));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut min = [f64::NAN; NUM_FEATURES];
        let mut max = [f64::NAN; NUM_FEATURES];
        let mut seen = [false; NUM_FEATURES];
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [name, lo, hi] = parts.as_slice() else {
                return Err(Error::format("scaler", format!("bad line `{line}`")));
            };
            let f: Feature = name.parse()?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::format("scaler", format!("bad number `{s}`")))
            };
            min[f.index()] = parse(lo)?;
            max[f.index()] = parse(hi)?;
            seen[f.index()] = true;
        }
        if let Some(missing) = Feature::ALL.iter().find(|f| !seen[f.index()]) {
            return Err(Error::format("scaler", format!("missing feature `{missing}`")));
        }
        Self::from_bounds(min, max)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}
