//! Seeded random sparse matrices with a few structural patterns.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Layout, SparseMatrix};
use crate::{Error, Result};

/// Placement of the nonzeros of a generated matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Positions drawn uniformly without replacement over the whole matrix.
    Uniform,
    /// Positions restricted to `|row - col| <= half_width`.
    Banded,
    /// Positions drawn uniformly from the union of a few random rectangles.
    Clustered,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Uniform, Pattern::Banded, Pattern::Clustered];
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Uniform => "uniform",
            Pattern::Banded => "banded",
            Pattern::Clustered => "clustered",
        })
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Pattern::Uniform),
            "banded" => Ok(Pattern::Banded),
            "clustered" => Ok(Pattern::Clustered),
            other => Err(Error::InvalidArgument(format!("unknown pattern `{other}`"))),
        }
    }
}

/// Shape parameters for the non-uniform patterns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenOptions {
    /// Band half-width; `None` means `max(1, rows / 16)`.
    pub band_half_width: Option<usize>,
    /// Number of rectangles for [`Pattern::Clustered`].
    pub clusters: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            band_half_width: None,
            clusters: 4,
        }
    }
}

impl GenOptions {
    pub fn half_width(&self, rows: usize) -> usize {
        self.band_half_width.unwrap_or_else(|| (rows / 16).max(1))
    }
}

/// Random matrix with default [`GenOptions`]; see [`random_sparse_with`].
pub fn random_sparse(rows: usize, cols: usize, density: f64, pattern: Pattern, seed: u64) -> Result<SparseMatrix> {
    random_sparse_with(rows, cols, density, pattern, seed, &GenOptions::default())
}

/// Generates a CSR matrix whose nonzero count is `round(density * rows * cols)`,
/// capped by the number of cells the pattern allows. Values are uniform in `(0, 1]`.
///
/// The output is a pure function of the arguments.
pub fn random_sparse_with(
    rows: usize,
    cols: usize,
    density: f64,
    pattern: Pattern,
    seed: u64,
    opts: &GenOptions,
) -> Result<SparseMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {density} not in (0, 1]")));
    }
    if pattern == Pattern::Clustered && opts.clusters == 0 {
        return Err(Error::InvalidArgument(
            "clustered pattern needs at least one cluster".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = (density * (rows * cols) as f64).round() as usize;
    let support = match pattern {
        Pattern::Uniform => RowSupport::full(rows, cols),
        Pattern::Banded => RowSupport::band(rows, cols, opts.half_width(rows)),
        Pattern::Clustered => RowSupport::rectangles(rows, cols, density, opts.clusters, &mut rng),
    };
    let nnz = target.min(support.total());

    let mut picks = index::sample(&mut rng, support.total(), nnz).into_vec();
    picks.sort_unstable();

    let mut offsets = vec![0usize; rows + 1];
    let mut indices = Vec::with_capacity(nnz);
    for p in picks {
        let (r, c) = support.locate(p);
        offsets[r + 1] += 1;
        indices.push(c);
    }
    for i in 0..rows {
        offsets[i + 1] += offsets[i];
    }
    let values = (0..nnz).map(|_| 1.0 - rng.gen::<f64>()).collect();
    Ok(SparseMatrix::from_parts_unchecked(
        rows,
        cols,
        Layout::Csr,
        offsets,
        indices,
        values,
    ))
}

/// Allowed cells as sorted, disjoint column intervals per row.
///
/// Cells are numbered row-major over the support so sampled ordinals map to
/// positions already sorted within each row.
struct RowSupport {
    intervals: Vec<Vec<(usize, usize)>>,
    prefix: Vec<usize>,
}

impl RowSupport {
    fn from_intervals(intervals: Vec<Vec<(usize, usize)>>) -> Self {
        let mut prefix = Vec::with_capacity(intervals.len() + 1);
        prefix.push(0);
        for row in &intervals {
            let len: usize = row.iter().map(|(a, b)| b - a).sum();
            prefix.push(prefix.last().unwrap() + len);
        }
        Self { intervals, prefix }
    }

    fn full(rows: usize, cols: usize) -> Self {
        Self::from_intervals(vec![vec![(0, cols)]; rows])
    }

    fn band(rows: usize, cols: usize, half_width: usize) -> Self {
        let intervals = (0..rows)
            .map(|i| {
                let lo = i.saturating_sub(half_width).min(cols);
                let hi = (i + half_width + 1).min(cols);
                if lo < hi {
                    vec![(lo, hi)]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Self::from_intervals(intervals)
    }

    /// `clusters` rectangles, each covering about `2 * density / clusters` of the
    /// matrix with a random aspect ratio, so the union is filled at roughly half density.
    fn rectangles(rows: usize, cols: usize, density: f64, clusters: usize, rng: &mut impl Rng) -> Self {
        let mut per_row: Vec<Vec<(usize, usize)>> = vec![Vec::new(); rows];
        if rows == 0 || cols == 0 {
            return Self::from_intervals(per_row);
        }
        let side = (2.0 * density / clusters as f64).min(1.0).sqrt();
        for _ in 0..clusters {
            let aspect: f64 = rng.gen_range(0.5..=2.0);
            let h = ((rows as f64 * side * aspect).round() as usize).clamp(1, rows);
            let w = ((cols as f64 * side / aspect).round() as usize).clamp(1, cols);
            let r0 = rng.gen_range(0..=rows - h);
            let c0 = rng.gen_range(0..=cols - w);
            for row in &mut per_row[r0..r0 + h] {
                row.push((c0, c0 + w));
            }
        }
        for row in &mut per_row {
            row.sort_unstable();
            let mut merged: Vec<(usize, usize)> = Vec::with_capacity(row.len());
            for &(a, b) in row.iter() {
                match merged.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            *row = merged;
        }
        Self::from_intervals(per_row)
    }

    fn total(&self) -> usize {
        *self.prefix.last().unwrap()
    }

    fn locate(&self, ordinal: usize) -> (usize, usize) {
        let row = self.prefix.partition_point(|&p| p <= ordinal) - 1;
        let mut rem = ordinal - self.prefix[row];
        for &(a, b) in &self.intervals[row] {
            if rem < b - a {
                return (row, a + rem);
            }
            rem -= b - a;
        }
        unreachable!("ordinal {ordinal} beyond support")
    }
}
