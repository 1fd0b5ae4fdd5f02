//! Classification tree trained on weighted Gini impurity.
//!
//! Training is greedy and deterministic: at every node each feature of the
//! selected subset is scanned in order, candidate thresholds are midpoints
//! between consecutive distinct values, and the split with the lowest
//! weighted child impurity wins. Equal scores keep the earlier candidate, so
//! ties go to the lower feature position and then the lower threshold.
//! Samples with `value <= threshold` go left.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{group_indices, weights_from_counts, Dataset};
use crate::features::{Feature, FeatureVector, Scaler, NUM_FEATURES};
use crate::{DataflowLabel, Error, Result};

const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub feature_subset: Vec<Feature>,
    /// Per-class sample weights; `None` derives balanced weights from the training labels.
    pub class_weights: Option<[f64; 3]>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 9,
            min_samples_leaf: 1,
            feature_subset: Feature::TOP_FIVE.to_vec(),
            class_weights: None,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("max_depth must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument("min_samples_leaf must be at least 1".into()));
        }
        if self.feature_subset.is_empty() {
            return Err(Error::InvalidArgument("feature subset is empty".into()));
        }
        Ok(())
    }
}

/// Class statistics of the training samples routed to a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeStats {
    pub class_counts: [usize; 3],
    pub weighted: [f64; 3],
}

impl NodeStats {
    fn total_weight(&self) -> f64 {
        self.weighted.iter().sum()
    }

    /// Weighted majority; ties go to the lower class code.
    pub fn majority(&self) -> DataflowLabel {
        let mut best = 0;
        for c in 1..3 {
            if self.weighted[c] > self.weighted[best] {
                best = c;
            }
        }
        DataflowLabel::ALL[best]
    }
}

fn gini(w: &[f64; 3]) -> f64 {
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - w.iter().map(|&x| (x / total).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        label: DataflowLabel,
        stats: NodeStats,
    },
    Internal {
        /// Position within the tree's feature subset.
        feature: usize,
        threshold: f64,
        stats: NodeStats,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn stats(&self) -> &NodeStats {
        match self {
            TreeNode::Leaf { stats, .. } | TreeNode::Internal { stats, .. } => stats,
        }
    }

    /// Depth of the deepest leaf; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> DataflowLabel {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Copy cut at `depth`: internal nodes at that depth become majority leaves.
    pub fn truncated(&self, depth: usize) -> TreeNode {
        match self {
            TreeNode::Leaf { .. } => self.clone(),
            TreeNode::Internal { stats, .. } if depth == 0 => TreeNode::Leaf {
                label: stats.majority(),
                stats: *stats,
            },
            TreeNode::Internal {
                feature,
                threshold,
                stats,
                left,
                right,
            } => TreeNode::Internal {
                feature: *feature,
                threshold: *threshold,
                stats: *stats,
                left: Box::new(left.truncated(depth - 1)),
                right: Box::new(right.truncated(depth - 1)),
            },
        }
    }
}

/// Fits a tree on raw arrays. `x[i]` holds the subset values of sample `i`.
pub fn fit_arrays(
    x: &[Vec<f64>],
    y: &[DataflowLabel],
    sample_weight: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<TreeNode> {
    if x.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if x.len() != y.len() || y.len() != sample_weight.len() {
        return Err(Error::DimensionMismatch(
            "samples, labels and weights differ in length".into(),
        ));
    }
    let width = x[0].len();
    if width == 0 || x.iter().any(|r| r.len() != width) {
        return Err(Error::DimensionMismatch("ragged feature rows".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }
    let builder = Builder {
        x,
        y,
        w: sample_weight,
        max_depth,
        min_leaf: min_samples_leaf.max(1),
    };
    let idx: Vec<usize> = (0..x.len()).collect();
    Ok(builder.grow(idx, 0))
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [DataflowLabel],
    w: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn stats(&self, idx: &[usize]) -> NodeStats {
        let mut s = NodeStats {
            class_counts: [0; 3],
            weighted: [0.0; 3],
        };
        for &i in idx {
            let c = self.y[i].index();
            s.class_counts[c] += 1;
            s.weighted[c] += self.w[i];
        }
        s
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> TreeNode {
        let stats = self.stats(&idx);
        let pure = stats.class_counts.iter().filter(|&&c| c > 0).count() <= 1;
        let leaf = || TreeNode::Leaf {
            label: stats.majority(),
            stats,
        };
        if depth >= self.max_depth || pure || idx.len() < 2 * self.min_leaf {
            return leaf();
        }
        let Some(split) = self.best_split(&idx, &stats) else {
            return leaf();
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.x[i][split.feature] <= split.threshold);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            stats,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }

    fn best_split(&self, idx: &[usize], parent: &NodeStats) -> Option<Split> {
        let total_w = parent.total_weight();
        if total_w <= 0.0 {
            return None;
        }
        let n = idx.len();
        let mut best: Option<Split> = None;
        let mut order = idx.to_vec();
        for f in 0..self.x[idx[0]].len() {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left_w = [0.0; 3];
            for pos in 0..n - 1 {
                let i = order[pos];
                left_w[self.y[i].index()] += self.w[i];
                let (v, next) = (self.x[i][f], self.x[order[pos + 1]][f]);
                if v == next {
                    continue;
                }
                let n_left = pos + 1;
                if n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let right_w: [f64; 3] = std::array::from_fn(|c| parent.weighted[c] - left_w[c]);
                let wl: f64 = left_w.iter().sum();
                let wr = total_w - wl;
                let score = (wl * gini(&left_w) + wr * gini(&right_w)) / total_w;
                if best.as_ref().is_none_or(|b| score < b.score - SCORE_EPS) {
                    best = Some(Split {
                        feature: f,
                        threshold: v + (next - v) / 2.0,
                        score,
                    });
                }
            }
        }
        best
    }
}

/// A fitted tree together with what it needs to score raw feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub features: Vec<Feature>,
    pub class_weights: [f64; 3],
    pub max_depth: usize,
    pub scaler: Scaler,
}

/// Trains on `train`'s rows scaled by `train.scaler`.
pub fn fit(train: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let class_weights = params
        .class_weights
        .unwrap_or_else(|| weights_from_counts(train.label_counts()));
    let x: Vec<Vec<f64>> = (0..train.len())
        .map(|i| train.scaled(i).select(&params.feature_subset))
        .collect();
    let y: Vec<DataflowLabel> = train.rows.iter().map(|r| r.label).collect();
    let w: Vec<f64> = y.iter().map(|l| class_weights[l.index()]).collect();
    let root = fit_arrays(&x, &y, &w, params.max_depth, params.min_samples_leaf)?;
    Ok(DecisionTree {
        root,
        features: params.feature_subset.clone(),
        class_weights,
        max_depth: params.max_depth,
        scaler: train.scaler.clone(),
    })
}

impl DecisionTree {
    pub fn predict_scaled(&self, scaled: &FeatureVector) -> DataflowLabel {
        self.root.predict(&scaled.select(&self.features))
    }

    pub fn predict_raw(&self, raw: &FeatureVector) -> DataflowLabel {
        self.predict_scaled(&self.scaler.transform(raw))
    }

    pub fn truncated(&self, depth: usize) -> DecisionTree {
        DecisionTree {
            root: self.root.truncated(depth),
            max_depth: depth.min(self.max_depth),
            ..self.clone()
        }
    }

    /// Fraction of `data` rows whose label the tree reproduces, features scaled by `data.scaler`.
    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = (0..data.len())
            .filter(|&i| self.predict_scaled(&data.scaled(i)) == data.rows[i].label)
            .count();
        hits as f64 / data.len() as f64
    }

    /// Plain-text model: header, scaler bounds, then one node per line in preorder.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("sparseflow-dtree 1\n");
        let names: Vec<&str> = self.features.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "features {}", names.join(" "));
        let _ = writeln!(
            s,
            "class_weights {:?} {:?} {:?}",
            self.class_weights[0], self.class_weights[1], self.class_weights[2]
        );
        let _ = writeln!(s, "max_depth {}", self.max_depth);
        s.push_str("scaler\n");
        s.push_str(&self.scaler.to_text());
        let _ = writeln!(s, "nodes {}", self.root.node_count());
        write_nodes(&self.root, &mut s);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |d: String| Error::format("decision tree model", d);
        let mut lines = text.lines();
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("missing {what}")));
        if next("magic")?.trim() != "sparseflow-dtree 1" {
            return Err(bad("unrecognized header".into()));
        }
        let features = next("features")?
            .strip_prefix("features ")
            .ok_or_else(|| bad("expected `features`".into()))?
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Feature>>>()?;
        let cw: Vec<f64> = next("class_weights")?
            .strip_prefix("class_weights ")
            .ok_or_else(|| bad("expected `class_weights`".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad weight `{t}`"))))
            .collect::<Result<_>>()?;
        let class_weights: [f64; 3] = cw.try_into().map_err(|_| bad("need three class weights".into()))?;
        let max_depth: usize = next("max_depth")?
            .strip_prefix("max_depth ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| bad("expected `max_depth`".into()))?;
        if next("scaler")?.trim() != "scaler" {
            return Err(bad("expected `scaler`".into()));
        }
        let mut scaler_text = String::new();
        for _ in 0..NUM_FEATURES {
            scaler_text.push_str(next("scaler bounds")?);
            scaler_text.push('\n');
        }
        let scaler = Scaler::from_text(&scaler_text)?;
        let count: usize = next("nodes")?
            .strip_prefix("nodes ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| bad("expected `nodes`".into()))?;
        let node_lines: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
        if node_lines.len() != count {
            return Err(bad(format!("expected {count} nodes, found {}", node_lines.len())));
        }
        let mut cursor = node_lines.into_iter();
        let root = read_node(&mut cursor, features.len())?;
        Ok(DecisionTree {
            root,
            features,
            class_weights,
            max_depth,
            scaler,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn write_nodes(node: &TreeNode, s: &mut String) {
    let st = node.stats();
    let c = st.class_counts;
    let w = st.weighted;
    match node {
        TreeNode::Leaf { label, .. } => {
            let _ = writeln!(
                s,
                "L - - {} {} {} {} {:?} {:?} {:?}",
                label.code(),
                c[0],
                c[1],
                c[2],
                w[0],
                w[1],
                w[2]
            );
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            let _ = writeln!(
                s,
                "I {} {:?} {} {} {} {} {:?} {:?} {:?}",
                feature,
                threshold,
                st.majority().code(),
                c[0],
                c[1],
                c[2],
                w[0],
                w[1],
                w[2]
            );
            write_nodes(left, s);
            write_nodes(right, s);
        }
    }
}

fn read_node<'a>(lines: &mut impl Iterator<Item = &'a str>, width: usize) -> Result<TreeNode> {
    let bad = |d: String| Error::format("decision tree model", d);
    let line = lines.next().ok_or_else(|| bad("node list ends early".into()))?;
    let t: Vec<&str> = line.split_whitespace().collect();
    if t.len() != 10 {
        return Err(bad(format!("bad node line `{line}`")));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer `{s}`")));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let stats = NodeStats {
        class_counts: [int(t[4])?, int(t[5])?, int(t[6])?],
        weighted: [num(t[7])?, num(t[8])?, num(t[9])?],
    };
    match t[0] {
        "L" => Ok(TreeNode::Leaf {
            label: t[3].parse()?,
            stats,
        }),
        "I" => {
            let feature = int(t[1])?;
            if feature >= width {
                return Err(bad(format!("feature position {feature} out of range")));
            }
            let threshold = num(t[2])?;
            let left = Box::new(read_node(lines, width)?);
            let right = Box::new(read_node(lines, width)?);
            Ok(TreeNode::Internal {
                feature,
                threshold,
                stats,
                left,
                right,
            })
        }
        other => Err(bad(format!("unknown node kind `{other}`"))),
    }
}

/// Mean-decrease-in-impurity importances over all twelve features.
///
/// `data` is routed through the tree (scaled by its own scaler, weighted by the
/// tree's class weights); each split contributes its share of the total weight
/// times its impurity decrease. Normalized to sum to 1 when any split exists.
pub fn feature_importance(tree: &DecisionTree, data: &Dataset) -> [f64; NUM_FEATURES] {
    let rows: Vec<(Vec<f64>, usize, f64)> = (0..data.len())
        .map(|i| {
            let c = data.rows[i].label.index();
            (data.scaled(i).select(&tree.features), c, tree.class_weights[c])
        })
        .collect();
    let idx: Vec<usize> = (0..rows.len()).collect();
    let mut raw = vec![0.0; tree.features.len()];
    let total: f64 = rows.iter().map(|r| r.2).sum();
    if total > 0.0 {
        accumulate_importance(&tree.root, &rows, &idx, total, &mut raw);
    }
    let sum: f64 = raw.iter().sum();
    let mut out = [0.0; NUM_FEATURES];
    for (pos, f) in tree.features.iter().enumerate() {
        out[f.index()] += if sum > 0.0 { raw[pos] / sum } else { 0.0 };
    }
    out
}

fn accumulate_importance(node: &TreeNode, rows: &[(Vec<f64>, usize, f64)], idx: &[usize], total: f64, acc: &mut [f64]) {
    let TreeNode::Internal {
        feature,
        threshold,
        left,
        right,
        ..
    } = node
    else {
        return;
    };
    let weigh = |ids: &[usize]| {
        let mut w = [0.0; 3];
        for &i in ids {
            w[rows[i].1] += rows[i].2;
        }
        w
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i].0[*feature] <= *threshold);
    let (wn, wl, wr) = (weigh(idx), weigh(&l), weigh(&r));
    let (sn, sl, sr): (f64, f64, f64) = (wn.iter().sum(), wl.iter().sum(), wr.iter().sum());
    if sn > 0.0 {
        let decrease = gini(&wn) - (sl / sn) * gini(&wl) - (sr / sn) * gini(&wr);
        acc[*feature] += (sn / total) * decrease;
    }
    accumulate_importance(left, rows, &l, total, acc);
    accumulate_importance(right, rows, &r, total, acc);
}

/// Per-fold and mean held-out accuracy of grouped, label-stratified k-fold CV.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Pair ids of each fold.
    pub folds: Vec<Vec<String>>,
}

/// Assigns whole pair groups to `k` folds, balancing label proportions.
///
/// Groups are shuffled with `seed`, then stably ordered by how uneven their
/// label mix is. Every fold first receives one group; after that each group
/// goes to the fold that keeps per-class fold shares most even, ties going to
/// the smaller fold and then the lower index.
pub fn stratified_group_folds(d: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be at least 2".into()));
    }
    let mut groups: Vec<(String, [usize; 3])> = group_indices(d)
        .into_iter()
        .map(|(id, idx)| {
            let mut c = [0; 3];
            for i in idx {
                c[d.rows[i].label.index()] += 1;
            }
            (id, c)
        })
        .collect();
    if groups.len() < k {
        return Err(Error::InvalidArgument(format!(
            "{} pair groups cannot fill {k} folds",
            groups.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    let spread = |c: &[usize; 3]| {
        let n: usize = c.iter().sum();
        let mean = n as f64 / 3.0;
        c.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>()
    };
    groups.sort_by(|a, b| spread(&b.1).total_cmp(&spread(&a.1)));

    let totals = d.label_counts();
    let mut fold_counts = vec![[0usize; 3]; k];
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    for (id, c) in groups {
        let target = if let Some(empty) = folds.iter().position(Vec::is_empty) {
            empty
        } else {
            let mut best = (f64::INFINITY, usize::MAX, 0usize);
            for f in 0..k {
                let mut trial = fold_counts.clone();
                for cls in 0..3 {
                    trial[f][cls] += c[cls];
                }
                let score = imbalance(&trial, &totals);
                let size: usize = trial[f].iter().sum();
                let cand = (score, size, f);
                if cand.0 < best.0 - SCORE_EPS || ((cand.0 - best.0).abs() <= SCORE_EPS && cand.1 < best.1) {
                    best = cand;
                }
            }
            best.2
        };
        for cls in 0..3 {
            fold_counts[target][cls] += c[cls];
        }
        folds[target].push(id);
    }
    Ok(folds)
}

/// Mean over classes of the standard deviation of per-fold class shares.
fn imbalance(fold_counts: &[[usize; 3]], totals: &[usize; 3]) -> f64 {
    let k = fold_counts.len() as f64;
    let mut acc = 0.0;
    for cls in 0..3 {
        if totals[cls] == 0 {
            continue;
        }
        let shares: Vec<f64> = fold_counts.iter().map(|f| f[cls] as f64 / totals[cls] as f64).collect();
        let mean = shares.iter().sum::<f64>() / k;
        acc += (shares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / k).sqrt();
    }
    acc / 3.0
}

/// Grouped, stratified k-fold cross-validation of a tree.
///
/// Each fold's training side gets its own scaler and, when `params` leaves
/// them unset, its own balanced class weights.
pub fn kfold_cv(d: &Dataset, k: usize, params: &TreeParams, seed: u64) -> Result<CvReport> {
    params.validate()?;
    let folds = stratified_group_folds(d, k, seed)?;
    let mut fold_accuracies = Vec::with_capacity(k);
    for held in &folds {
        let held_ids: BTreeSet<String> = held.iter().cloned().collect();
        let train_ids: BTreeSet<String> = d.pair_ids().into_iter().filter(|id| !held_ids.contains(id)).collect();
        let train = d.subset_by_pairs(&train_ids).refit_scaler()?;
        let mut test = d.subset_by_pairs(&held_ids);
        test.scaler = train.scaler.clone();
        let tree = fit(&train, params)?;
        fold_accuracies.push(tree.accuracy(&test));
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(CvReport {
        fold_accuracies,
        mean_accuracy,
        folds,
    })
}

/// Renders the tree cut at `depth_limit` as nested `if`/`elif` rules.
///
/// Each split becomes `if f <= t:` / `elif f > t:` with thresholds printed at
/// full precision; leaves become `predicted.append('<code>')`.
pub fn export_rules(tree: &DecisionTree, depth_limit: usize) -> String {
    let root = tree.root.truncated(depth_limit);
    let mut s = String::from("def heuristic(input):\n");
    emit_rules(&root, &tree.features, 1, &mut s);
    s
}

fn emit_rules(node: &TreeNode, features: &[Feature], level: usize, s: &mut String) {
    let pad = "    ".repeat(level);
    match node {
        TreeNode::Leaf { label, .. } => {
            let _ = writeln!(s, "{pad}predicted.append('{}')", label.code());
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
            ..
        } => {
            let name = features[*feature].name();
            let _ = writeln!(s, "{pad}if {name} <= {threshold:?}:");
            emit_rules(left, features, level + 1, s);
            let _ = writeln!(s, "{pad}elif {name} > {threshold:?}:");
            emit_rules(right, features, level + 1, s);
        }
    }
}
