use std::fs;
use std::path::Path;

use pragmact::classify::{evaluate, Architecture, HeadTask, ModelConfig, Prediction, Task};
use pragmact::corpus::{split, write_corpus, CorpusKind, Party, SpeechAct, SplitSpec};
use pragmact::cvt::ViewSpec;
use pragmact::embeddings::EmbeddingSource;
use pragmact::experiment::{
    agreement_report, cascade_with, kept_documents, run_experiment, run_experiment_with,
    sweep_training_ratio_with, train_spec, ExperimentConfig, ExperimentData, ModelSpec,
};
use pragmact::synthetic::{generate, SyntheticConfig};

fn data(labeled: usize) -> ExperimentData {
    let d = generate(&SyntheticConfig {
        labeled_utterances: labeled,
        unlabeled_utterances: 200,
        embedding_dim: 16,
        ..SyntheticConfig::default()
    })
    .unwrap();
    ExperimentData {
        labeled: d.labeled,
        unlabeled: d.unlabeled,
        source: EmbeddingSource::Static(d.embeddings),
    }
}

fn mlp() -> ModelConfig {
    ModelConfig {
        architecture: Architecture::MlpBow,
        hidden_dim: 8,
        epochs: 5,
        learning_rate: 0.005,
        ..ModelConfig::default()
    }
}

fn config(models: Vec<ModelSpec>, runs: usize) -> ExperimentConfig {
    ExperimentConfig {
        labeled: "unused".into(),
        unlabeled: None,
        embeddings: "bow".into(),
        runs,
        train_ratio: 0.9,
        val_fraction: 0.1,
        base_seed: 3,
        output_dir: None,
        ratios: Vec::new(),
        significance: Vec::new(),
        models,
    }
}

#[test]
fn single_run_report_is_that_evaluation() {
    let d = data(300);
    let cfg = config(vec![ModelSpec::supervised("m", mlp())], 1);
    let report = run_experiment_with(&cfg, &d).unwrap();
    let sp = split(
        &d.labeled,
        &SplitSpec {
            seed: 3,
            ..SplitSpec::default()
        },
    )
    .unwrap();
    let (outcome, _) = train_spec(
        &cfg.models[0],
        3,
        &sp.train,
        &sp.val,
        &d.unlabeled,
        &d.source,
    )
    .unwrap();
    let direct = evaluate(&outcome.model, &sp.test, &d.source).unwrap();
    let s = report.summary("m", HeadTask::SpeechAct).unwrap();
    let r = direct.report(HeadTask::SpeechAct).unwrap();
    assert_eq!(s.runs, 1);
    assert_eq!(s.accuracy_mean, r.accuracy);
    assert_eq!(s.macro_f1_mean, r.macro_f1);
    assert_eq!(s.accuracy_std, 0.0);
    assert_eq!(s.confusion.confusion, r.confusion);
}

#[test]
fn identical_models_have_a_null_paired_test() {
    let d = data(300);
    let mut cfg = config(
        vec![
            ModelSpec::supervised("a", mlp()),
            ModelSpec::supervised("b", mlp()),
        ],
        3,
    );
    cfg.significance = vec![("a".into(), "b".into())];
    let report = run_experiment_with(&cfg, &d).unwrap();
    assert_eq!(report.significance.len(), 2);
    for row in &report.significance {
        assert_eq!(row.t, 0.0);
        assert_eq!(row.p, 1.0);
        assert_eq!(row.df, 2);
    }
}

#[test]
fn means_are_recomputable_from_per_run_values() {
    let d = data(300);
    let models = vec![
        ModelSpec::supervised("mlp", mlp()),
        ModelSpec::supervised(
            "both",
            ModelConfig {
                task: Task::Both,
                ..mlp()
            },
        ),
    ];
    let report = run_experiment_with(&config(models, 4), &d).unwrap();
    for s in &report.summaries {
        let vals: Vec<f64> = report
            .records
            .iter()
            .filter(|r| r.model == s.model && r.task == s.task)
            .map(|r| r.report.macro_f1)
            .collect();
        assert_eq!(vals.len(), 4);
        let mean = vals.iter().sum::<f64>() / 4.0;
        assert!((mean - s.macro_f1_mean).abs() < 1e-15);
    }
    let csv = report.per_run_csv();
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    let first = csv.lines().nth(1).unwrap();
    let f1: f64 = first.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(f1, report.records[0].report.macro_f1);
}

#[test]
fn paired_design_shares_splits_across_models() {
    let d = data(300);
    let cfg = config(
        vec![
            ModelSpec::supervised("a", mlp()),
            ModelSpec::supervised(
                "b",
                ModelConfig {
                    hidden_dim: 4,
                    ..mlp()
                },
            ),
        ],
        3,
    );
    let report = run_experiment_with(&cfg, &d).unwrap();
    for run in 0..3 {
        let sizes: Vec<_> = report
            .records
            .iter()
            .filter(|r| r.run == run)
            .map(|r| {
                (
                    r.seed,
                    r.train_utterances,
                    r.report.confusion.iter().flatten().sum::<usize>(),
                )
            })
            .collect();
        assert_eq!(sizes.len(), 2);
        assert_eq!(sizes[0], sizes[1]);
    }
}

fn write_dataset(dir: &Path) {
    let d = generate(&SyntheticConfig {
        labeled_utterances: 300,
        unlabeled_utterances: 200,
        embedding_dim: 8,
        ..SyntheticConfig::default()
    })
    .unwrap();
    write_corpus(dir.join("labeled.jsonl"), &d.labeled).unwrap();
    write_corpus(dir.join("unlabeled.jsonl"), &d.unlabeled).unwrap();
    fs::write(dir.join("emb.txt"), d.embeddings.to_text()).unwrap();
}

const CONFIG: &str = r#"
labeled = "labeled.jsonl"
unlabeled = "unlabeled.jsonl"
embeddings = "static:emb.txt"
runs = 2
base_seed = 11
output_dir = "out"
significance = [["mlp", "cvt"]]

[[models]]
id = "mlp"
architecture = "mlp-bow"
hidden_dim = 8
epochs = 4

[[models]]
id = "cvt"
architecture = "bigru"
cvt = "worddrop"
word_dropout = 0.2
hidden_dim = 4
epochs = 2

[[models]]
id = "both"
architecture = "dan"
task = "both"
hidden_dim = 4
epochs = 2
alpha_grid = [0.1, 1.0]
"#;

#[test]
fn config_file_round_trip_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path());
    let path = dir.path().join("exp.toml");
    fs::write(&path, CONFIG).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.labeled, dir.path().join("labeled.jsonl"));
    assert_eq!(cfg.models[1].view, Some(ViewSpec::WordDrop { rate: 0.2 }));
    assert_eq!(cfg.models[2].alpha_grid, vec![0.1, 1.0]);
    assert_eq!(cfg.runs, 2);

    let read_all = |out: &Path| {
        let mut files: Vec<_> = fs::read_dir(out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let out = cfg.output_dir.clone().unwrap();
    run_experiment(&cfg).unwrap().write(&out).unwrap();
    let first = read_all(&out);
    fs::remove_dir_all(&out).unwrap();
    run_experiment(&cfg).unwrap().write(&out).unwrap();
    assert_eq!(first, read_all(&out));
    let names: Vec<String> = first
        .iter()
        .map(|(n, _)| n.to_string_lossy().into_owned())
        .collect();
    for f in [
        "report.txt",
        "summary.csv",
        "per_run.csv",
        "significance.csv",
        "confusion_both_target.csv",
    ] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
}

#[test]
fn config_errors_are_reported() {
    let base = Path::new(".");
    let bad = [
        ("labeled = \"x\"\nmodels = []\n", "no models"),
        (
            "labeled = \"x\"\nruns = 0\n[[models]]\nid = \"a\"\n",
            "runs",
        ),
        (
            "labeled = \"x\"\n[[models]]\nid = \"a\"\n[[models]]\nid = \"a\"\n",
            "duplicate",
        ),
        (
            "labeled = \"x\"\n[[models]]\nid = \"a\"\nbogus = 1\n",
            "bogus",
        ),
        (
            "labeled = \"x\"\n[[models]]\nid = \"a\"\nseed = 1\n",
            "seed",
        ),
        (
            "labeled = \"x\"\nsignificance = [[\"a\", \"z\"]]\n[[models]]\nid = \"a\"\n",
            "unknown model",
        ),
        (
            "labeled = \"x\"\n[[models]]\nid = \"a\"\narchitecture = \"dan\"\ncvt = \"fwd\"\n",
            "bigru",
        ),
        (
            "labeled = \"x\"\ntrain_ratio = 1.0\n[[models]]\nid = \"a\"\n",
            "train_ratio",
        ),
    ];
    for (text, needle) in bad {
        let err = ExperimentConfig::from_toml_str(text, base)
            .unwrap_err()
            .to_string();
        assert!(err.contains(needle), "{err:?} lacks {needle:?}");
    }
    let ok =
        ExperimentConfig::from_toml_str("labeled = \"x\"\n[[models]]\nid = \"a\"\n", base).unwrap();
    assert_eq!((ok.runs, ok.train_ratio, ok.val_fraction), (10, 0.9, 0.1));
}

#[test]
fn missing_paths_fail_at_launch() {
    let cfg = ExperimentConfig::from_toml_str(
        "labeled = \"/nonexistent/labeled.jsonl\"\n[[models]]\nid = \"a\"\n",
        Path::new("."),
    )
    .unwrap();
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn degenerate_sweep_matches_the_experiment() {
    let d = data(300);
    let cfg = config(vec![ModelSpec::supervised("m", mlp())], 2);
    let exp = run_experiment_with(&cfg, &d).unwrap();
    let sweep = sweep_training_ratio_with(&cfg, &d, &[0.9]).unwrap();
    assert_eq!(sweep.records, exp.records);
    let row = sweep.row(0.9, "m", HeadTask::SpeechAct).unwrap();
    let s = exp.summary("m", HeadTask::SpeechAct).unwrap();
    assert_eq!(
        (row.accuracy_mean, row.macro_f1_mean),
        (s.accuracy_mean, s.macro_f1_mean)
    );
}

#[test]
fn sweep_subsamples_training_only() {
    let d = data(400);
    let cfg = config(vec![ModelSpec::supervised("m", mlp())], 2);
    let sweep = sweep_training_ratio_with(&cfg, &d, &[0.1, 0.5, 0.9]).unwrap();
    let size = |r: f64| {
        sweep
            .row(r, "m", HeadTask::SpeechAct)
            .unwrap()
            .mean_train_utterances
    };
    assert!(size(0.1) < size(0.5) && size(0.5) < size(0.9));
    for run in 0..2 {
        let tests: Vec<usize> = sweep
            .records
            .iter()
            .filter(|r| r.run == run)
            .map(|r| r.report.confusion.iter().flatten().sum())
            .collect();
        assert!(tests.iter().all(|&t| t == tests[0]));
    }
    assert!(sweep_training_ratio_with(&cfg, &d, &[0.95]).is_err());
    assert!(sweep_training_ratio_with(&cfg, &d, &[0.0]).is_err());
    assert!(sweep_training_ratio_with(&cfg, &d, &[1e-4]).is_err());
    assert_eq!(kept_documents(36, 0.9, 0.9), 36);
    assert_eq!(kept_documents(36, 0.1, 0.9), 4);
    assert_eq!(kept_documents(36, 0.45, 0.9), 18);
}

#[test]
fn agreement_of_identical_annotations_is_perfect() {
    let d = data(300);
    let r = agreement_report(&d.labeled, &d.labeled).unwrap();
    assert_eq!(r.boundary_alpha, 1.0);
    assert_eq!(r.labels.len(), 2);
    for l in &r.labels {
        assert_eq!(l.kappa, 1.0);
        assert_eq!(l.matched_spans, 300);
        for (_, k, n) in &l.per_class {
            if *n > 0 {
                assert_eq!(*k, 1.0);
            }
        }
    }
}

#[test]
fn agreement_is_symmetric_and_checks_coverage() {
    let d = data(300);
    let mut other = d.labeled.clone();
    for (k, u) in other.utterances.iter_mut().enumerate() {
        if k % 5 == 0 {
            u.speech_act = Some(SpeechAct::Directive);
        }
        if k % 7 == 0 {
            u.target = Some(Party::None);
        }
    }
    // merge the first two-utterance sentence into one utterance
    let sentences = other.sentences();
    let s = sentences.iter().find(|s| s.utterances.len() == 2).unwrap();
    let (a, b) = (s.utterances[0], s.utterances[1]);
    let tail = other.utterances[b].tokens.clone();
    other.utterances[a].tokens.extend(tail);
    other.utterances.remove(b);
    let other = pragmact::corpus::Corpus::new(other.utterances, CorpusKind::Labeled).unwrap();

    let ab = agreement_report(&d.labeled, &other).unwrap();
    let ba = agreement_report(&other, &d.labeled).unwrap();
    assert_eq!(ab.boundary_alpha, ba.boundary_alpha);
    assert!(ab.boundary_alpha < 1.0);
    for (x, y) in ab.labels.iter().zip(&ba.labels) {
        assert_eq!(x.kappa, y.kappa);
        assert_eq!(x.matched_spans, 298);
        assert_eq!(x.per_class, y.per_class);
        assert!(x.kappa < 1.0);
    }

    let dropped = d
        .labeled
        .restrict_to_documents(&d.labeled.documents()[1..].iter().copied().collect());
    assert!(agreement_report(&d.labeled, &dropped).is_err());
}

#[test]
fn perfect_cascade_has_joint_accuracy_one() {
    let d = data(300);
    let gold_of = |doc: &str, sent: u32, start: usize| {
        let utts: Vec<_> = d
            .labeled
            .utterances
            .iter()
            .filter(|u| u.doc_id == doc && u.sent_id == sent)
            .collect();
        let mut offset = 0;
        for u in utts {
            if offset == start {
                return u;
            }
            offset += u.tokens.len();
        }
        panic!("no utterance at {start}");
    };
    let report = cascade_with(
        &d.labeled,
        |st| Ok(st.segmentation.clone()),
        |st, a, _| {
            let u = gold_of(&st.sentence.doc_id, st.sentence.sent_id, a);
            let one_hot =
                |k: usize, n: usize| (0..n).map(|i| f64::from(u8::from(i == k))).collect();
            Ok(Prediction {
                speech_act: Some(one_hot(u.speech_act.unwrap().index(), 8)),
                target: Some(one_hot(u.target.unwrap().index(), 3)),
            })
        },
    )
    .unwrap();
    assert_eq!(report.segmentation.unwrap().ratio(), 1.0);
    for task in HeadTask::ALL {
        assert_eq!(report.joint(task).unwrap().ratio(), 1.0);
    }
    assert_eq!(report.to_tsv().lines().count(), 301);
}

#[test]
fn cascade_joint_never_exceeds_segmentation() {
    let d = data(300);
    let report = cascade_with(
        &d.labeled,
        |st| pragmact::segment::Segmentation::whole(st.tokens.len()),
        |_, a, b| {
            let k = (a + b) % 8;
            Ok(Prediction {
                speech_act: Some((0..8).map(|i| f64::from(u8::from(i == k))).collect()),
                target: None,
            })
        },
    )
    .unwrap();
    let sa = report.segmentation.unwrap();
    let ja = report.joint(HeadTask::SpeechAct).unwrap();
    assert!(ja.matched <= sa.matched && sa.matched < sa.total);
    assert!(report.joint(HeadTask::Target).is_none());
}
