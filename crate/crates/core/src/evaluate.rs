//! Selector evaluation: speedups over fixed dataflows, accuracy, storage sizes
//! and CSV reports for plotting.
//!
//! Speedup against a baseline is `baseline cycles / selector cycles`. The
//! headline figure divides totals over the whole evaluation set; the mean of
//! per-pair ratios is reported alongside it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::Dataset;
use crate::features::{Feature, FeatureVector};
use crate::heuristic::heuristic_predict;
use crate::{DataflowLabel, Error, Result};

/// Baselines in report order.
pub const BASELINES: [&str; 4] = ["ip", "op", "rw", "h"];

#[derive(Debug, Clone, PartialEq)]
pub struct PairMetrics {
    pub pair_id: String,
    pub rows: usize,
    pub accuracy: f64,
    /// Against IP, OP, RW and the heuristic.
    pub speedup_vs: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorMetrics {
    pub accuracy: f64,
    /// Ratio of total cycles against IP, OP, RW and the heuristic.
    pub speedup_vs: [f64; 4],
    /// Arithmetic mean of the per-pair ratios.
    pub mean_pair_speedup_vs: [f64; 4],
    /// Sorted by pair id.
    pub per_pair: Vec<PairMetrics>,
    pub total_cycles: u64,
    pub baseline_cycles: [u64; 4],
}

fn ratio(baseline: u64, selector: u64) -> f64 {
    match (baseline, selector) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        (b, s) => b as f64 / s as f64,
    }
}

#[derive(Default)]
struct Tally {
    rows: usize,
    hits: usize,
    selector: u64,
    baselines: [u64; 4],
}

impl Tally {
    fn speedups(&self) -> [f64; 4] {
        std::array::from_fn(|b| ratio(self.baselines[b], self.selector))
    }
}

/// Scores `selector` on `eval`. The selector sees features scaled by `eval.scaler`.
pub fn evaluate_selector<F>(selector: F, eval: &Dataset) -> Result<SelectorMetrics>
where
    F: Fn(&FeatureVector) -> DataflowLabel,
{
    let choices: Vec<DataflowLabel> = (0..eval.len()).map(|i| selector(&eval.scaled(i))).collect();
    evaluate_choices(&choices, eval)
}

/// Scores the oracle that always picks each row's recorded label.
pub fn evaluate_oracle(eval: &Dataset) -> Result<SelectorMetrics> {
    let choices: Vec<DataflowLabel> = eval.rows.iter().map(|r| r.label).collect();
    evaluate_choices(&choices, eval)
}

/// Scores a per-row choice list aligned with `eval.rows`.
pub fn evaluate_choices(choices: &[DataflowLabel], eval: &Dataset) -> Result<SelectorMetrics> {
    if eval.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    if choices.len() != eval.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} choices for {} rows",
            choices.len(),
            eval.len()
        )));
    }
    let mut pairs: BTreeMap<&str, Tally> = BTreeMap::new();
    let mut all = Tally::default();
    for (i, (row, &chosen)) in eval.rows.iter().zip(choices).enumerate() {
        let h = heuristic_predict(&eval.scaled(i));
        let lat = row.latency;
        let base = [lat[0], lat[1], lat[2], lat[h.index()]];
        for t in [pairs.entry(&row.pair_id).or_default(), &mut all] {
            t.rows += 1;
            t.hits += usize::from(chosen == row.label);
            t.selector += lat[chosen.index()];
            for (acc, b) in t.baselines.iter_mut().zip(base) {
                *acc += b;
            }
        }
    }
    let per_pair: Vec<PairMetrics> = pairs
        .into_iter()
        .map(|(id, t)| PairMetrics {
            pair_id: id.to_string(),
            rows: t.rows,
            accuracy: t.hits as f64 / t.rows as f64,
            speedup_vs: t.speedups(),
        })
        .collect();
    let n = per_pair.len() as f64;
    let mean_pair_speedup_vs = std::array::from_fn(|b| per_pair.iter().map(|p| p.speedup_vs[b]).sum::<f64>() / n);
    Ok(SelectorMetrics {
        accuracy: all.hits as f64 / all.rows as f64,
        speedup_vs: all.speedups(),
        mean_pair_speedup_vs,
        per_pair,
        total_cycles: all.selector,
        baseline_cycles: all.baselines,
    })
}

/// Report CSV: one line per pair, then `#total` (ratio of totals) and `#mean` (mean of pair ratios).
pub fn metrics_csv(m: &SelectorMetrics) -> String {
    let mut s = String::from("pair_id,speedup_ip,speedup_op,speedup_rw,speedup_h,accuracy\n");
    let line = |s: &mut String, id: &str, sp: &[f64; 4], acc: f64| {
        let _ = writeln!(s, "{id},{:.6},{:.6},{:.6},{:.6},{:.6}", sp[0], sp[1], sp[2], sp[3], acc);
    };
    for p in &m.per_pair {
        line(&mut s, &p.pair_id, &p.speedup_vs, p.accuracy);
    }
    line(&mut s, "#total", &m.speedup_vs, m.accuracy);
    let mean_acc = m.per_pair.iter().map(|p| p.accuracy).sum::<f64>() / m.per_pair.len().max(1) as f64;
    line(&mut s, "#mean", &m.mean_pair_speedup_vs, mean_acc);
    s
}

/// `(file name, size in bytes)` for each path.
pub fn storage_report<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<(String, u64)>> {
    paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, fs::metadata(p)?.len()))
        })
        .collect()
}

pub fn storage_csv(entries: &[(String, u64)]) -> String {
    let mut s = String::from("file,bytes\n");
    for (name, bytes) in entries {
        let _ = writeln!(s, "{name},{bytes}");
    }
    s
}

/// One line per dataset row, in dataset order, with raw feature values.
pub fn sweep_report(d: &Dataset) -> String {
    let mut s = String::from("pair_id,sparsityA,sparsityB,avg_row_lengthA,best,lat_ip,lat_op,lat_rw\n");
    for r in &d.rows {
        let f = &r.features;
        let _ = writeln!(
            s,
            "{},{:?},{:?},{:?},{},{},{},{}",
            r.pair_id,
            f.get(Feature::SparsityA),
            f.get(Feature::SparsityB),
            f.get(Feature::AvgRowLengthA),
            r.label.short_name(),
            r.latency[0],
            r.latency[1],
            r.latency[2]
        );
    }
    s
}

/// Rank of `label`'s latency within a row: 1 plus the number of strictly faster dataflows.
pub fn latency_rank(latency: [u64; 3], label: DataflowLabel) -> usize {
    let mine = latency[label.index()];
    1 + latency.iter().filter(|&&l| l < mine).count()
}

/// Summary of how the winning dataflow moves with density and row length.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendSummary {
    /// Rows whose scaled sparsityA and sparsityB both exceed the threshold.
    pub dense_rows: usize,
    /// Label counts among those rows.
    pub dense_labels: [usize; 3],
    pub rw_rank_all: f64,
    pub rw_rank_top_decile: f64,
    pub top_decile_rows: usize,
}

/// Trend statistics; the row-length decile uses raw `avg_row_lengthA`.
pub fn trend_summary(d: &Dataset, density_threshold: f64) -> Result<TrendSummary> {
    if d.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut dense_labels = [0; 3];
    for i in 0..d.len() {
        let s = d.scaled(i);
        if s.get(Feature::SparsityA) > density_threshold && s.get(Feature::SparsityB) > density_threshold {
            dense_labels[d.rows[i].label.index()] += 1;
        }
    }
    let mut lengths: Vec<f64> = d.rows.iter().map(|r| r.features.get(Feature::AvgRowLengthA)).collect();
    lengths.sort_by(f64::total_cmp);
    let cut = lengths[(lengths.len() * 9 / 10).min(lengths.len() - 1)];
    let rank = |r: &crate::dataset::DatasetRow| latency_rank(r.latency, DataflowLabel::Rw) as f64;
    let top: Vec<f64> = d
        .rows
        .iter()
        .filter(|r| r.features.get(Feature::AvgRowLengthA) >= cut)
        .map(rank)
        .collect();
    Ok(TrendSummary {
        dense_rows: dense_labels.iter().sum(),
        dense_labels,
        rw_rank_all: d.rows.iter().map(rank).sum::<f64>() / d.len() as f64,
        rw_rank_top_decile: top.iter().sum::<f64>() / top.len() as f64,
        top_decile_rows: top.len(),
    })
}
