use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sparseflow::cart::{self, export_rules, kfold_cv};
use sparseflow::corpus::{load_manifest, synthetic_corpus, CorpusSpec};
use sparseflow::dataset::{build_dataset, split_train_eval, MatrixPair};
use sparseflow::dqn::{self, DqnModel};
use sparseflow::evaluate::{
    evaluate_oracle, evaluate_selector, metrics_csv, storage_csv, storage_report, sweep_report,
};
use sparseflow::features::{extract_features, NUM_FEATURES};
use sparseflow::heuristic::{heuristic_predict, rules_text};
use sparseflow::sim::{simulate_all, simulate_inner, simulate_outer, simulate_rowwise};
use sparseflow::sparse::{random_sparse, read_matrix_market, write_matrix_market_file, Pattern};
use sparseflow::{DataflowLabel, Dataset, DecisionTree, Feature, FeatureVector, Layout, Scaler};

use crate::config::RunConfig;
use crate::{
    BuildArgs, Cli, CliError, Command, CvArgs, DataflowChoice, EvaluateArgs, ExportArgs, GenArgs, HeuristicArgs,
    ModelKind, PairArgs, SimulateArgs, StorageArgs, SweepArgs, TrainDtArgs, TrainRlArgs,
};

struct Ctx {
    seed: u64,
    out_dir: PathBuf,
    cfg: RunConfig,
}

impl Ctx {
    /// Output path under `--out-dir` (absolute paths pass through); parent directories are created.
    fn output(&self, p: &Path) -> Result<PathBuf, CliError> {
        let path = if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        Ok(path)
    }

    fn write(&self, p: &Path, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.output(p)?;
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    fn emit(&self, out: Option<&Path>, contents: &str) -> Result<(), CliError> {
        match out {
            Some(p) => {
                let path = self.write(p, contents)?;
                println!("wrote {}", path.display());
            }
            None => {
                let _ = std::io::stdout().write_all(contents.as_bytes());
            }
        }
        Ok(())
    }
}

/// Attaches `path` to I/O failures so the diagnostic names the file.
fn at(path: &Path) -> impl FnOnce(sparseflow::Error) -> CliError + '_ {
    move |e| match e {
        sparseflow::Error::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Data(other),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
        cfg,
    };
    match cli.command {
        Command::Gen(a) => gen(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Features(a) => features(&ctx, a),
        Command::BuildDataset(a) => build(&ctx, a),
        Command::TrainDt(a) => train_dt(&ctx, a),
        Command::TrainRl(a) => train_rl(&ctx, a),
        Command::ExportRules(a) => export(&ctx, a),
        Command::Heuristic(a) => heuristic(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Cv(a) => cv(&ctx, a),
        Command::StorageReport(a) => storage(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
    }
}

fn gen(ctx: &Ctx, a: GenArgs) -> Result<(), CliError> {
    if let Some(pairs) = a.corpus {
        let spec = CorpusSpec {
            pairs,
            dims: (a.min_dim, a.max_dim),
            density: (a.min_density, a.max_density),
            seed: ctx.seed,
            ..CorpusSpec::default()
        };
        let corpus = synthetic_corpus(&spec)?;
        let mut manifest = String::from("# a b id\n");
        for p in &corpus {
            let (fa, fb) = (format!("{}_a.mtx", p.id), format!("{}_b.mtx", p.id));
            write_matrix_market_file(&p.a, ctx.output(&a.out.join(&fa))?)?;
            write_matrix_market_file(&p.b, ctx.output(&a.out.join(&fb))?)?;
            let _ = writeln!(manifest, "{fa} {fb} {}", p.id);
        }
        let path = ctx.write(&a.out.join("manifest.txt"), manifest)?;
        println!("wrote {} pairs and {}", corpus.len(), path.display());
        return Ok(());
    }
    let pattern: Pattern = a
        .pattern
        .parse()
        .map_err(|e: sparseflow::Error| CliError::Usage(e.to_string()))?;
    let cols = a.cols.unwrap_or(a.rows);
    for i in 0..a.count {
        let seed = ctx.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let m = random_sparse(a.rows, cols, a.density, pattern, seed)?;
        write_matrix_market_file(&m, ctx.output(&a.out.join(format!("m{i:03}.mtx")))?)?;
    }
    println!("wrote {} matrices to {}", a.count, ctx.output(&a.out)?.display());
    Ok(())
}

fn read_pair(a: &PairArgs) -> Result<MatrixPair, CliError> {
    Ok(MatrixPair {
        id: String::new(),
        a: read_matrix_market(&a.a).map_err(at(&a.a))?,
        b: read_matrix_market(&a.b).map_err(at(&a.b))?,
    })
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> Result<(), CliError> {
    let p = read_pair(&a.pair)?;
    let cfg = &ctx.cfg.sim;
    let results = match a.dataflow {
        DataflowChoice::All => simulate_all(&p.a, &p.b, cfg)?.results.to_vec(),
        DataflowChoice::Ip => vec![simulate_inner(
            &p.a.to_layout(Layout::Csr),
            &p.b.to_layout(Layout::Csc),
            cfg,
        )?],
        DataflowChoice::Op => vec![simulate_outer(
            &p.a.to_layout(Layout::Csc),
            &p.b.to_layout(Layout::Csr),
            cfg,
        )?],
        DataflowChoice::Rw => vec![simulate_rowwise(
            &p.a.to_layout(Layout::Csr),
            &p.b.to_layout(Layout::Csr),
            cfg,
        )?],
    };
    let mut s = String::from("dataflow,latency_cycles,pe_utilization,result_nnz,total_work_cycles,misses\n");
    for r in &results {
        let _ = writeln!(
            s,
            "{},{},{:?},{},{},{}",
            r.dataflow.short_name(),
            r.latency_cycles,
            r.pe_utilization,
            r.result.nnz(),
            r.total_work_cycles,
            r.misses
        );
    }
    ctx.emit(a.pair.out.as_deref(), &s)
}

fn features(ctx: &Ctx, a: PairArgs) -> Result<(), CliError> {
    let p = read_pair(&a)?;
    let f = extract_features(&p.a, &p.b, &ctx.cfg.sim)?;
    let names: Vec<&str> = Feature::ALL.iter().map(|f| f.name()).collect();
    let values: Vec<String> = f.values().iter().map(|v| format!("{v:?}")).collect();
    ctx.emit(
        a.out.as_deref(),
        &format!("{}\n{}\n", names.join(","), values.join(",")),
    )
}

fn build(ctx: &Ctx, a: BuildArgs) -> Result<(), CliError> {
    let pairs = match (&a.manifest, a.synthetic) {
        (Some(m), _) => load_manifest(m).map_err(at(m))?,
        (None, Some(n)) => synthetic_corpus(&CorpusSpec {
            pairs: n,
            seed: ctx.seed,
            ..CorpusSpec::default()
        })?,
        (None, None) => return Err(CliError::Usage("give --manifest or --synthetic".into())),
    };
    let dims = (a.block_rows, a.block_cols.unwrap_or(a.block_rows));
    if dims.0 == 0 || dims.1 == 0 {
        return Err(CliError::Usage("block dimensions must be positive".into()));
    }
    let d = build_dataset(&pairs, &ctx.cfg.sim, dims, a.jobs)?;
    let out = ctx.output(&a.out)?;
    d.save(&out)?;
    let (train, eval) = split_train_eval(&d, a.train_fraction, ctx.seed)?;
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let train_path = out.with_file_name(format!("{stem}_train.csv"));
    let eval_path = out.with_file_name(format!("{stem}_eval.csv"));
    train.save(&train_path)?;
    eval.save(&eval_path)?;
    let c = d.label_counts();
    println!(
        "{} rows from {} pairs (ip {}, op {}, rw {}); train {} rows, eval {} rows",
        d.len(),
        pairs.len(),
        c[0],
        c[1],
        c[2],
        train.len(),
        eval.len()
    );
    println!(
        "wrote {}, {}, {}",
        out.display(),
        train_path.display(),
        eval_path.display()
    );
    Ok(())
}

fn train_dt(ctx: &Ctx, a: TrainDtArgs) -> Result<(), CliError> {
    let d = Dataset::load(&a.dataset).map_err(at(&a.dataset))?;
    let mut params = ctx.cfg.tree.clone();
    if let Some(depth) = a.max_depth {
        params.max_depth = depth;
    }
    if let Some(leaf) = a.min_samples_leaf {
        params.min_samples_leaf = leaf;
    }
    let tree = cart::fit(&d, &params)?;
    let out = ctx.output(&a.out)?;
    tree.save(&out)?;
    println!(
        "tree depth {}, {} nodes, training accuracy {:.4}; wrote {}",
        tree.root.depth(),
        tree.root.node_count(),
        tree.accuracy(&d),
        out.display()
    );
    Ok(())
}

fn train_rl(ctx: &Ctx, a: TrainRlArgs) -> Result<(), CliError> {
    let d = Dataset::load(&a.dataset).map_err(at(&a.dataset))?;
    let mut hyper = ctx.cfg.dqn.clone();
    hyper.seed = ctx.seed;
    if let Some(n) = a.episodes {
        hyper.episodes = n;
    }
    let net = dqn::train(&d, &hyper)?;
    let model = DqnModel {
        net,
        scaler: d.scaler.clone(),
        hyper,
    };
    let out = ctx.output(&a.out)?;
    model.save(&out)?;
    println!("training accuracy {:.4}; wrote {}", model.accuracy(&d), out.display());
    Ok(())
}

fn export(ctx: &Ctx, a: ExportArgs) -> Result<(), CliError> {
    let tree = DecisionTree::load(&a.model).map_err(at(&a.model))?;
    let path = ctx.write(&a.out, export_rules(&tree, a.depth))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn heuristic(ctx: &Ctx, a: HeuristicArgs) -> Result<(), CliError> {
    let scaler = match &a.scaler {
        Some(p) => Some(Scaler::load(p).map_err(at(p))?),
        None => None,
    };
    let mut reader = csv::Reader::from_path(&a.features)?;
    let headers = reader.headers()?.clone();
    let mut cols = [0usize; NUM_FEATURES];
    for f in Feature::ALL {
        cols[f.index()] = headers
            .iter()
            .position(|h| h == f.name())
            .ok_or_else(|| sparseflow::Error::Format {
                what: "feature CSV",
                detail: format!("missing column `{}`", f.name()),
            })?;
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut out_headers = headers.clone();
    out_headers.push_field("heuristic");
    writer.write_record(&out_headers)?;
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut v = [0.0; NUM_FEATURES];
        for (i, &c) in cols.iter().enumerate() {
            v[i] = rec[c].trim().parse().map_err(|_| sparseflow::Error::Format {
                what: "feature CSV",
                detail: format!("record {}: bad number `{}`", n + 1, &rec[c]),
            })?;
        }
        let mut fv = FeatureVector(v);
        if let Some(s) = &scaler {
            fv = s.transform(&fv);
        }
        let mut out = rec.clone();
        out.push_field(&heuristic_predict(&fv).code().to_string());
        writer.write_record(&out)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Io {
        path: PathBuf::from("<buffer>"),
        source: e.into_error(),
    })?;
    if let Some(p) = &a.rules_out {
        let path = ctx.write(p, rules_text())?;
        eprintln!("wrote {}", path.display());
    }
    ctx.emit(a.out.as_deref(), &String::from_utf8_lossy(&bytes))
}

fn evaluate(ctx: &Ctx, a: EvaluateArgs) -> Result<(), CliError> {
    let mut eval = Dataset::load(&a.dataset).map_err(at(&a.dataset))?;
    let need_file = || {
        a.model_file
            .clone()
            .ok_or_else(|| CliError::Usage(format!("--model {:?} needs --model-file", a.model).to_lowercase()))
    };
    let metrics = match a.model {
        ModelKind::Dt => {
            let file = need_file()?;
            let tree = DecisionTree::load(&file).map_err(at(&file))?;
            eval.scaler = tree.scaler.clone();
            evaluate_selector(|f| tree.predict_scaled(f), &eval)?
        }
        ModelKind::Rl => {
            let file = need_file()?;
            let model = DqnModel::load(&file).map_err(at(&file))?;
            eval.scaler = model.scaler.clone();
            evaluate_selector(|f| model.predict_scaled(f), &eval)?
        }
        ModelKind::Heuristic => evaluate_selector(heuristic_predict, &eval)?,
        ModelKind::Ip => evaluate_selector(|_| DataflowLabel::Ip, &eval)?,
        ModelKind::Op => evaluate_selector(|_| DataflowLabel::Op, &eval)?,
        ModelKind::Rw => evaluate_selector(|_| DataflowLabel::Rw, &eval)?,
        ModelKind::Oracle => evaluate_oracle(&eval)?,
    };
    let path = ctx.write(&a.out, metrics_csv(&metrics))?;
    let s = metrics.speedup_vs;
    println!(
        "accuracy {:.4}; speedup vs ip {:.3}, op {:.3}, rw {:.3}, heuristic {:.3}; wrote {}",
        metrics.accuracy,
        s[0],
        s[1],
        s[2],
        s[3],
        path.display()
    );
    Ok(())
}

fn cv(ctx: &Ctx, a: CvArgs) -> Result<(), CliError> {
    let d = Dataset::load(&a.dataset).map_err(at(&a.dataset))?;
    let mut params = ctx.cfg.tree.clone();
    if let Some(depth) = a.max_depth {
        params.max_depth = depth;
    }
    let report = kfold_cv(&d, a.k, &params, ctx.seed)?;
    for (i, acc) in report.fold_accuracies.iter().enumerate() {
        println!("fold {i}: accuracy {acc:.4} ({} pairs)", report.folds[i].len());
    }
    println!("mean accuracy {:.4}", report.mean_accuracy);
    Ok(())
}

fn storage(ctx: &Ctx, a: StorageArgs) -> Result<(), CliError> {
    for f in &a.files {
        fs::metadata(f).map_err(|source| CliError::Io {
            path: f.clone(),
            source,
        })?;
    }
    let entries = storage_report(&a.files)?;
    ctx.emit(a.out.as_deref(), &storage_csv(&entries))
}

fn sweep(ctx: &Ctx, a: SweepArgs) -> Result<(), CliError> {
    let d = Dataset::load(&a.dataset).map_err(at(&a.dataset))?;
    let path = ctx.write(&a.out, sweep_report(&d))?;
    let ids: BTreeSet<&str> = d.rows.iter().map(|r| r.pair_id.as_str()).collect();
    println!("{} rows from {} pairs; wrote {}", d.len(), ids.len(), path.display());
    Ok(())
}
