//! Labeled block-pair datasets.
//!
//! Each row records one block-level multiplication: its raw features, the
//! latency and utilization of all three dataflows, and the latency-optimal label.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::{extract_features, Feature, FeatureVector, Scaler, NUM_FEATURES};
use crate::sim::{simulate_all, SimConfig};
use crate::sparse::{partition_blocks, trim_to_fit, SparseMatrix};
use crate::{DataflowLabel, Error, Result};

/// A named operand pair to be multiplied block by block.
#[derive(Debug, Clone)]
pub struct MatrixPair {
    pub id: String,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub pair_id: String,
    /// `(i, j, k)`: A block `(i, k)` times B block `(k, j)`.
    pub block: (usize, usize, usize),
    /// Raw, unscaled features.
    pub features: FeatureVector,
    /// Indexed by [`DataflowLabel::index`].
    pub latency: [u64; 3],
    pub utilization: [f64; 3],
    pub label: DataflowLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    pub scaler: Scaler,
}

/// Argmin latency; ties go to the higher utilization, then the lower class code.
pub fn label_row(latency: [u64; 3], utilization: [f64; 3]) -> DataflowLabel {
    let mut best = DataflowLabel::Ip;
    for cand in [DataflowLabel::Op, DataflowLabel::Rw] {
        let (c, b) = (cand.index(), best.index());
        if latency[c] < latency[b] || (latency[c] == latency[b] && utilization[c] > utilization[b]) {
            best = cand;
        }
    }
    best
}

/// Simulates every non-empty block combination of every pair.
///
/// A is tiled `block_rows x block_cols` and B `block_cols x block_rows`, so
/// the shared dimension is cut identically. Pairs are trimmed to conform first.
/// With `jobs = Some(n)` pairs run on an `n`-thread pool; row order is always
/// pair order, then `(i, j, k)`.
pub fn build_dataset(
    pairs: &[MatrixPair],
    cfg: &SimConfig,
    block_dims: (usize, usize),
    jobs: Option<usize>,
) -> Result<Dataset> {
    cfg.validate()?;
    let work = || -> Result<Vec<Vec<DatasetRow>>> { pairs.par_iter().map(|p| pair_rows(p, cfg, block_dims)).collect() };
    let per_pair = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Dataset::from_rows(per_pair.into_iter().flatten().collect())
}

fn pair_rows(pair: &MatrixPair, cfg: &SimConfig, (block_rows, block_cols): (usize, usize)) -> Result<Vec<DatasetRow>> {
    let (a, b) = trim_to_fit(&pair.a, &pair.b);
    let ga = partition_blocks(&a, block_rows, block_cols)?;
    let gb = partition_blocks(&b, block_cols, block_rows)?;
    let (gi, gk) = ga.grid_shape();
    let gj = gb.grid_shape().1;
    let mut rows = Vec::new();
    for i in 0..gi {
        for j in 0..gj {
            for k in 0..gk {
                let (ab, bb) = (ga.block(i, k), gb.block(k, j));
                if ab.nnz() == 0 || bb.nnz() == 0 {
                    continue;
                }
                let sims = simulate_all(ab, bb, cfg)?;
                let latency = sims.latencies();
                let utilization = sims.utilizations();
                rows.push(DatasetRow {
                    pair_id: pair.id.clone(),
                    block: (i, j, k),
                    features: extract_features(ab, bb, cfg)?,
                    latency,
                    utilization,
                    label: label_row(latency, utilization),
                });
            }
        }
    }
    Ok(rows)
}

impl Dataset {
    /// Wraps rows with a scaler fitted on all of them (identity when empty).
    pub fn from_rows(rows: Vec<DatasetRow>) -> Result<Self> {
        let scaler = if rows.is_empty() {
            Scaler::identity()
        } else {
            Scaler::fit(rows.iter().map(|r| &r.features))?
        };
        Ok(Self { rows, scaler })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Scaled features of row `idx` under this dataset's scaler.
    pub fn scaled(&self, idx: usize) -> FeatureVector {
        self.scaler.transform(&self.rows[idx].features)
    }

    /// Distinct pair ids in order of first appearance.
    pub fn pair_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.pair_id.as_str()))
            .map(|r| r.pair_id.clone())
            .collect()
    }

    pub fn label_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for r in &self.rows {
            c[r.label.index()] += 1;
        }
        c
    }

    /// Rows whose pair id is in `ids`, keeping this dataset's scaler.
    pub fn subset_by_pairs(&self, ids: &BTreeSet<String>) -> Dataset {
        Dataset {
            rows: self.rows.iter().filter(|r| ids.contains(&r.pair_id)).cloned().collect(),
            scaler: self.scaler.clone(),
        }
    }

    /// Same rows with a scaler refitted on them.
    pub fn refit_scaler(mut self) -> Result<Self> {
        if !self.rows.is_empty() {
            self.scaler = Scaler::fit(self.rows.iter().map(|r| &r.features))?;
        }
        Ok(self)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["pair_id", "i", "j", "k"].iter().map(|s| s.to_string()).collect();
        header.extend(Feature::ALL.iter().map(|f| f.name().to_string()));
        header.extend(
            ["lat_ip", "lat_op", "lat_rw", "util_ip", "util_op", "util_rw", "label"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.pair_id.clone(),
                r.block.0.to_string(),
                r.block.1.to_string(),
                r.block.2.to_string(),
            ];
            rec.extend(r.features.0.iter().map(|v| format!("{v:?}")));
            rec.extend(r.latency.iter().map(u64::to_string));
            rec.extend(r.utilization.iter().map(|v| format!("{v:?}")));
            rec.push(r.label.code().to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses rows from CSV; the returned dataset's scaler is fitted on them.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::format("dataset csv", format!("missing column `{name}`")))
        };
        let pair_col = col("pair_id")?;
        let ijk = [col("i")?, col("j")?, col("k")?];
        let feat_cols: Vec<usize> = Feature::ALL.iter().map(|f| col(f.name())).collect::<Result<_>>()?;
        let lat_cols = [col("lat_ip")?, col("lat_op")?, col("lat_rw")?];
        let util_cols = [col("util_ip")?, col("util_op")?, col("util_rw")?];
        let label_col = col("label")?;

        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = n + 2;
            let field = |c: usize| rec.get(c).unwrap_or("");
            let num = |c: usize| -> Result<f64> {
                field(c)
                    .parse::<f64>()
                    .map_err(|_| Error::format("dataset csv", format!("line {line}: bad number `{}`", field(c))))
            };
            let int = |c: usize| -> Result<u64> {
                field(c)
                    .parse::<u64>()
                    .map_err(|_| Error::format("dataset csv", format!("line {line}: bad integer `{}`", field(c))))
            };
            let mut features = [0.0; NUM_FEATURES];
            for (slot, &c) in features.iter_mut().zip(&feat_cols) {
                *slot = num(c)?;
            }
            rows.push(DatasetRow {
                pair_id: field(pair_col).to_string(),
                block: (int(ijk[0])? as usize, int(ijk[1])? as usize, int(ijk[2])? as usize),
                features: FeatureVector(features),
                latency: [int(lat_cols[0])?, int(lat_cols[1])?, int(lat_cols[2])?],
                utilization: [num(util_cols[0])?, num(util_cols[1])?, num(util_cols[2])?],
                label: field(label_col).parse()?,
            });
        }
        Dataset::from_rows(rows)
    }

    /// Writes the CSV and its scaler sidecar (see [`scaler_sidecar`]).
    pub fn save(&self, csv_path: impl AsRef<Path>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        self.write_csv(File::create(csv_path)?)?;
        self.scaler.save(scaler_sidecar(csv_path))
    }

    /// Reads the CSV; uses the scaler sidecar when present, otherwise fits one on the rows.
    pub fn load(csv_path: impl AsRef<Path>) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        let mut d = Self::read_csv(File::open(csv_path)?)?;
        let sidecar = scaler_sidecar(csv_path);
        if sidecar.exists() {
            d.scaler = Scaler::load(sidecar)?;
        }
        Ok(d)
    }
}

/// `dir/name.csv` -> `dir/name.scaler`.
pub fn scaler_sidecar(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("scaler")
}

/// Grouped, shuffled split: every row of a pair lands on the same side.
///
/// The training side gets `round(train_fraction * groups)` groups, clamped so
/// both sides are non-empty. Both halves carry a scaler fitted on the training rows.
pub fn split_train_eval(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let mut groups = d.pair_ids();
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 pair groups to split, found {}",
            groups.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    let n_train = ((train_fraction * groups.len() as f64).round() as usize).clamp(1, groups.len() - 1);
    let train_ids: BTreeSet<String> = groups[..n_train].iter().cloned().collect();
    let eval_ids: BTreeSet<String> = groups[n_train..].iter().cloned().collect();
    let train = d.subset_by_pairs(&train_ids).refit_scaler()?;
    let mut eval = d.subset_by_pairs(&eval_ids);
    eval.scaler = train.scaler.clone();
    Ok((train, eval))
}

/// Inverse-frequency weights `N / (K * count_c)` over the `K` classes present.
///
/// An absent class gets weight 0 and a logged warning.
pub fn class_weights(d: &Dataset) -> [f64; 3] {
    weights_from_counts(d.label_counts())
}

pub fn weights_from_counts(counts: [usize; 3]) -> [f64; 3] {
    let n: usize = counts.iter().sum();
    let present = counts.iter().filter(|&&c| c > 0).count();
    let mut w = [0.0; 3];
    for (label, (&c, slot)) in DataflowLabel::ALL.iter().zip(counts.iter().zip(w.iter_mut())) {
        if c == 0 {
            log::warn!("class {label} absent from training data; weight set to 0");
        } else {
            *slot = n as f64 / (present * c) as f64;
        }
    }
    w
}

/// Row indices grouped by pair id, in first-appearance order.
pub(crate) fn group_indices(d: &Dataset) -> Vec<(String, Vec<usize>)> {
    let mut order: Vec<String> = Vec::new();
    let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, r) in d.rows.iter().enumerate() {
        map.entry(r.pair_id.as_str())
            .or_insert_with(|| {
                order.push(r.pair_id.clone());
                Vec::new()
            })
            .push(i);
    }
    order
        .into_iter()
        .map(|id| {
            let idx = map.remove(id.as_str()).unwrap_or_default();
            (id, idx)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::sparse::{random_sparse, Layout, Pattern};
    use proptest::prelude::*;

    fn dense(n: usize) -> SparseMatrix {
        SparseMatrix::from_dense(n, n, Layout::Csr, &vec![1.0; n * n]).unwrap()
    }

    pub(crate) fn fake_row(pair: &str, label: DataflowLabel, x: f64) -> DatasetRow {
        let mut latency = [10, 10, 10];
        latency[label.index()] = 5;
        DatasetRow {
            pair_id: pair.to_string(),
            block: (0, 0, 0),
            features: FeatureVector([x; NUM_FEATURES]),
            latency,
            utilization: [0.5; 3],
            label,
        }
    }

    #[test]
    fn label_rules() {
        assert_eq!(label_row([10, 5, 7], [0.0; 3]), DataflowLabel::Op);
        assert_eq!(label_row([5, 5, 9], [0.5, 0.9, 0.1]), DataflowLabel::Op);
        assert_eq!(label_row([5, 5, 5], [0.3, 0.3, 0.3]), DataflowLabel::Ip);
        assert_eq!(label_row([5, 6, 5], [0.3, 0.9, 0.4]), DataflowLabel::Rw);
    }

    #[test]
    fn dense_pair_yields_one_ip_row() {
        let pairs = [MatrixPair {
            id: "d".into(),
            a: dense(4),
            b: dense(4),
        }];
        let d = build_dataset(&pairs, &SimConfig::default(), (4, 4), None).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.rows[0].label, DataflowLabel::Ip);
        assert_eq!(d.rows[0].block, (0, 0, 0));
    }

    #[test]
    fn empty_blocks_skipped() {
        // A's left half is empty, so k = 0 combinations vanish.
        let trip: Vec<_> = (0..4).flat_map(|i| (2..4).map(move |j| (i, j, 1.0))).collect();
        let a = SparseMatrix::from_triplets(4, 4, Layout::Csr, &trip).unwrap();
        let pairs = [MatrixPair {
            id: "p".into(),
            a,
            b: dense(4),
        }];
        let d = build_dataset(&pairs, &SimConfig::default(), (2, 2), None).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.rows.iter().all(|r| r.block.2 == 1));

        let empty = [MatrixPair {
            id: "e".into(),
            a: SparseMatrix::zeros(4, 4, Layout::Csr),
            b: dense(4),
        }];
        assert!(build_dataset(&empty, &SimConfig::default(), (4, 4), None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn parallel_build_matches_serial_and_csv_round_trips() {
        let pairs: Vec<MatrixPair> = (0..6u64)
            .map(|s| MatrixPair {
                id: format!("p{s}"),
                a: random_sparse(40, 30, 0.1, Pattern::ALL[s as usize % 3], s).unwrap(),
                b: random_sparse(32, 20, 0.2, Pattern::Uniform, s + 50).unwrap(),
            })
            .collect();
        let cfg = SimConfig::default();
        let serial = build_dataset(&pairs, &cfg, (16, 16), Some(1)).unwrap();
        let par = build_dataset(&pairs, &cfg, (16, 16), Some(4)).unwrap();
        assert_eq!(serial, par);
        assert!(!serial.is_empty());
        for r in &serial.rows {
            assert_eq!(r.latency[r.label.index()], *r.latency.iter().min().unwrap());
        }

        let mut buf = Vec::new();
        serial.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, serial);
        let mut buf2 = Vec::new();
        back.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn save_and_load_keep_sidecar_scaler() {
        let dir = tempfile::tempdir().unwrap();
        let rows = (0..4)
            .map(|i| fake_row(&format!("g{i}"), DataflowLabel::Op, i as f64))
            .collect();
        let mut d = Dataset::from_rows(rows).unwrap();
        d.scaler = Scaler::identity();
        let path = dir.path().join("train.csv");
        d.save(&path).unwrap();
        assert!(dir.path().join("train.scaler").exists());
        assert_eq!(Dataset::load(&path).unwrap(), d);
    }

    #[test]
    fn split_counts_and_determinism() {
        let rows: Vec<_> = (0..10)
            .flat_map(|g| (0..3).map(move |r| fake_row(&format!("g{g}"), DataflowLabel::ALL[r], g as f64)))
            .collect();
        let d = Dataset::from_rows(rows).unwrap();
        let (tr, ev) = split_train_eval(&d, 0.7, 5).unwrap();
        assert_eq!(tr.pair_ids().len(), 7);
        assert_eq!(ev.pair_ids().len(), 3);
        assert_eq!(ev.scaler, tr.scaler);
        let (tr2, ev2) = split_train_eval(&d, 0.7, 5).unwrap();
        assert_eq!((tr, ev), (tr2, ev2));

        let one = Dataset::from_rows(vec![fake_row("solo", DataflowLabel::Ip, 0.0)]).unwrap();
        assert!(split_train_eval(&one, 0.7, 0).is_err());
        assert!(split_train_eval(&d, 1.0, 0).is_err());
    }

    #[test]
    fn weights() {
        let w = weights_from_counts([50, 25, 25]);
        let expect = [100.0 / 150.0, 100.0 / 75.0, 100.0 / 75.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((w[0] - 0.667).abs() < 1e-3 && (w[1] - 1.333).abs() < 1e-3);
        assert_eq!(weights_from_counts([10, 10, 10]), [1.0; 3]);
        assert_eq!(weights_from_counts([30, 10, 0]), [40.0 / 60.0, 40.0 / 20.0, 0.0]);
    }

    proptest! {
        #[test]
        fn split_is_grouped_partition(groups in 2usize..25, per in 1usize..4, frac in 0.05f64..0.95, seed in 0u64..1000) {
            let rows: Vec<_> = (0..groups)
                .flat_map(|g| (0..per).map(move |_| fake_row(&format!("g{g}"), DataflowLabel::Ip, g as f64)))
                .collect();
            let d = Dataset::from_rows(rows).unwrap();
            let (tr, ev) = split_train_eval(&d, frac, seed).unwrap();
            let a: BTreeSet<_> = tr.pair_ids().into_iter().collect();
            let b: BTreeSet<_> = ev.pair_ids().into_iter().collect();
            prop_assert!(a.is_disjoint(&b));
            prop_assert_eq!(a.len() + b.len(), groups);
            prop_assert_eq!(tr.len() + ev.len(), d.len());
            prop_assert!(!a.is_empty() && !b.is_empty());
        }
    }
}
