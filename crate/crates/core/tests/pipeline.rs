use sparseflow::cart::{export_rules, fit};
use sparseflow::corpus::{synthetic_corpus, CorpusSpec};
use sparseflow::dataset::{build_dataset, split_train_eval};
use sparseflow::dqn;
use sparseflow::evaluate::{evaluate_oracle, evaluate_selector, metrics_csv};
use sparseflow::{Dataset, DecisionTree, DqnHyper, DqnModel, SimConfig, TreeParams};

fn small_dataset(jobs: usize) -> Dataset {
    let spec = CorpusSpec {
        pairs: 9,
        dims: (32, 80),
        seed: 4,
        ..CorpusSpec::default()
    };
    let cfg = SimConfig {
        mem_block_rows: 4,
        resident_blocks: 2,
        ..SimConfig::default()
    };
    build_dataset(&synthetic_corpus(&spec).unwrap(), &cfg, (32, 32), Some(jobs)).unwrap()
}

#[test]
fn parallel_build_matches_serial_and_survives_csv() {
    let d = small_dataset(2);
    let serial = small_dataset(1);
    assert_eq!(d, serial);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    d.save(&path).unwrap();
    let back = Dataset::load(&path).unwrap();
    assert_eq!(back.len(), d.len());
    for i in 0..d.len() {
        assert_eq!(back.rows[i].label, d.rows[i].label);
        assert_eq!(back.rows[i].latency, d.rows[i].latency);
        assert_eq!(back.scaled(i), d.scaled(i));
    }
}

#[test]
fn train_save_load_evaluate() {
    let d = small_dataset(2);
    let (train, eval) = split_train_eval(&d, 0.7, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let tree = fit(&train, &TreeParams::default()).unwrap();
    tree.save(dir.path().join("m.dt")).unwrap();
    let tree2 = DecisionTree::load(dir.path().join("m.dt")).unwrap();
    let hyper = DqnHyper {
        episodes: 300,
        seed: 4,
        ..DqnHyper::default()
    };
    let model = DqnModel {
        net: dqn::train(&train, &hyper).unwrap(),
        scaler: train.scaler.clone(),
        hyper,
    };
    model.save(dir.path().join("m.rl")).unwrap();
    let model2 = DqnModel::load(dir.path().join("m.rl")).unwrap();

    for r in &eval.rows {
        assert_eq!(tree.predict_raw(&r.features), tree2.predict_raw(&r.features));
        assert_eq!(model.predict_raw(&r.features), model2.predict_raw(&r.features));
    }

    let dt = evaluate_selector(|f| tree.predict_scaled(f), &eval).unwrap();
    let oracle = evaluate_oracle(&eval).unwrap();
    assert!(dt.accuracy <= 1.0 && oracle.accuracy == 1.0);
    assert!(dt.total_cycles >= oracle.total_cycles);
    assert!(metrics_csv(&dt).lines().count() >= 3);
    assert!(export_rules(&tree, 2).len() < 1024);
}
