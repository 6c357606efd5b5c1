use pragmact::classify::{
    evaluate, predict, train_supervised, Architecture, HeadTask, InputDims, LinearLoss, Mode,
    Model, ModelConfig, Task,
};
use pragmact::corpus::{split, Party, SplitSpec};
use pragmact::embeddings::EmbeddingSource;
use pragmact::synthetic::{generate, SyntheticConfig, SyntheticData};
use pragmact::tensor::Tape;

fn small_data(labeled: usize) -> SyntheticData {
    generate(&SyntheticConfig {
        labeled_utterances: labeled,
        unlabeled_utterances: 200,
        embedding_dim: 16,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

fn config(arch: Architecture) -> ModelConfig {
    ModelConfig {
        architecture: arch,
        hidden_dim: 8,
        epochs: 4,
        learning_rate: 0.005,
        ..ModelConfig::default()
    }
}

fn gru_params(d_in: usize, h: usize) -> usize {
    3 * (d_in * h + h * h + h)
}

#[test]
fn bigru_parameter_count() {
    let d = 50;
    let cfg = ModelConfig {
        hidden_dim: 128,
        ..ModelConfig::default()
    };
    let model = Model::build(&cfg, InputDims::Embedding { dim: d }).unwrap();
    assert_eq!(model.num_parameters(), 2 * gru_params(d, 128) + 256 * 8 + 8);

    let meta = Model::build(
        &ModelConfig {
            use_meta: true,
            ..cfg.clone()
        },
        InputDims::Embedding { dim: d },
    )
    .unwrap();
    assert_eq!(
        meta.num_parameters(),
        2 * gru_params(d, 128) + (128 * 257 + 128) + 128 * 8 + 8
    );

    let both = Model::build(
        &ModelConfig {
            task: Task::Both,
            ..cfg
        },
        InputDims::Embedding { dim: d },
    )
    .unwrap();
    assert_eq!(
        both.num_parameters(),
        2 * gru_params(d, 128) + 256 * 8 + 8 + 256 * 3 + 3
    );
}

#[test]
fn other_parameter_counts() {
    let (v, d, h) = (40, 12, 6);
    let count = |arch: Architecture, meta: bool, dims: InputDims| {
        let cfg = ModelConfig {
            architecture: arch,
            hidden_dim: h,
            use_meta: meta,
            ..ModelConfig::default()
        };
        Model::build(&cfg, dims).unwrap().num_parameters()
    };
    let bow = InputDims::Bow { vocab: v };
    let emb = InputDims::Embedding { dim: d };
    assert_eq!(count(Architecture::LinearBow, false, bow), v * 8 + 8);
    assert_eq!(count(Architecture::LinearBow, true, bow), v * 8 + 8 + 8);
    assert_eq!(
        count(Architecture::MlpBow, false, bow),
        v * h + h + h * 8 + 8
    );
    assert_eq!(
        count(Architecture::MlpBow, true, bow),
        v * h + h + h + h * 8 + 8
    );
    assert_eq!(count(Architecture::Dan, false, emb), d * h + h + h * 8 + 8);
    assert_eq!(
        count(Architecture::Gru, false, emb),
        gru_params(d, h) + h * 8 + 8
    );
}

#[test]
fn meta_adds_one_input_to_the_post_encoder_layer() {
    let d = 10;
    for arch in [Architecture::Dan, Architecture::Gru, Architecture::Bigru] {
        let shape = |meta: bool| {
            let cfg = ModelConfig {
                architecture: arch,
                hidden_dim: 4,
                use_meta: meta,
                ..ModelConfig::default()
            };
            let m = Model::build(&cfg, InputDims::Embedding { dim: d }).unwrap();
            let name = if arch == Architecture::Dan || meta {
                "hidden.W"
            } else {
                "head.speech_act.W"
            };
            m.params.get(m.params.id(name).unwrap()).shape()[1]
        };
        assert_eq!(shape(true), shape(false) + 1, "{arch}");
    }
}

#[test]
fn both_task_builds_two_heads_on_one_encoder() {
    let cfg = ModelConfig {
        task: Task::Both,
        primary: HeadTask::Target,
        hidden_dim: 4,
        ..ModelConfig::default()
    };
    let model = Model::build(&cfg, InputDims::Embedding { dim: 3 }).unwrap();
    assert_eq!(model.heads(), vec![HeadTask::Target, HeadTask::SpeechAct]);
    let encoders = model
        .params
        .iter()
        .filter(|(_, n, _)| n.starts_with("gru.fwd.W_z"))
        .count();
    assert_eq!(encoders, 1);
    let ex = model
        .prepare_tokens(
            &["a".into()],
            Some(vec![vec![0.1, 0.2, 0.3]]),
            None,
            [None, None],
        )
        .unwrap();
    let p = model.predict_example(&ex).unwrap();
    assert_eq!(p.speech_act.as_ref().map(Vec::len), Some(8));
    assert_eq!(p.target.as_ref().map(Vec::len), Some(3));
}

#[test]
fn invalid_combinations_are_rejected() {
    let hinge = ModelConfig {
        architecture: Architecture::MlpBow,
        loss: LinearLoss::Hinge,
        ..ModelConfig::default()
    };
    assert!(hinge.validate().is_err());
    let dan = config(Architecture::Dan);
    assert!(Model::build(&dan, InputDims::Bow { vocab: 10 }).is_err());
    let mlp = config(Architecture::MlpBow);
    assert!(Model::build(&mlp, InputDims::Embedding { dim: 10 }).is_err());
    let data = small_data(100);
    let sp = split(&data.labeled, &SplitSpec::default()).unwrap();
    assert!(train_supervised(
        &config(Architecture::Bigru),
        &sp.train,
        &sp.val,
        &EmbeddingSource::Bow
    )
    .is_err());
}

#[test]
fn alpha_zero_matches_single_task_bit_for_bit() {
    let data = small_data(300);
    let sp = split(&data.labeled, &SplitSpec::default()).unwrap();
    let src = EmbeddingSource::Static(data.embeddings.clone());
    for arch in [Architecture::MlpBow, Architecture::Bigru] {
        let single = config(arch);
        let multi = ModelConfig {
            task: Task::Both,
            alpha: 0.0,
            ..single.clone()
        };
        let a = train_supervised(&single, &sp.train, &sp.val, &src).unwrap();
        let b = train_supervised(&multi, &sp.train, &sp.val, &src).unwrap();
        assert_eq!(a.history, b.history);
        for (_, name, tensor) in a.model.params.iter() {
            let other = b.model.params.get(b.model.params.id(name).unwrap());
            assert_eq!(tensor.data(), other.data(), "{arch} {name}");
        }
    }
}

#[test]
fn patience_zero_stops_after_first_non_improvement() {
    let data = small_data(300);
    let sp = split(&data.labeled, &SplitSpec::default()).unwrap();
    let cfg = ModelConfig {
        patience: 0,
        epochs: 60,
        ..config(Architecture::MlpBow)
    };
    let out = train_supervised(&cfg, &sp.train, &sp.val, &EmbeddingSource::Bow).unwrap();
    let f1 = &out.history.val_macro_f1;
    let first_stale = (1..f1.len())
        .find(|&e| f1[e] <= f1[..e].iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .expect("training stopped early");
    assert_eq!(f1.len(), first_stale + 1);
}

#[test]
fn returned_snapshot_has_the_best_validation_score() {
    let data = small_data(300);
    let sp = split(&data.labeled, &SplitSpec::default()).unwrap();
    let cfg = ModelConfig {
        epochs: 12,
        patience: 3,
        ..config(Architecture::MlpBow)
    };
    let out = train_supervised(&cfg, &sp.train, &sp.val, &EmbeddingSource::Bow).unwrap();
    let f1 = &out.history.val_macro_f1;
    let best = out.history.best_epoch;
    assert!(f1.iter().all(|&x| x <= f1[best]));
    assert!(f1[..best].iter().all(|&x| x < f1[best]));
}

#[test]
fn predictions_are_distributions_and_deterministic() {
    let data = small_data(200);
    let src = EmbeddingSource::Static(data.embeddings.clone());
    for arch in [
        Architecture::LinearBow,
        Architecture::MlpBow,
        Architecture::Dan,
        Architecture::Gru,
        Architecture::Bigru,
    ] {
        let cfg = ModelConfig {
            task: Task::Both,
            epochs: 1,
            ..config(arch)
        };
        let out = train_supervised(&cfg, &data.labeled, &data.labeled, &src).unwrap();
        for u in data.labeled.utterances.iter().take(30) {
            let p = predict(&out.model, u, &src).unwrap();
            for task in HeadTask::ALL {
                let d = p.distribution(task).unwrap();
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            assert_eq!(p, predict(&out.model, u, &src).unwrap());
        }
    }
}

#[test]
fn zero_head_gives_uniform_distribution() {
    let mut model = Model::build(
        &config(Architecture::Bigru),
        InputDims::Embedding { dim: 4 },
    )
    .unwrap();
    for name in ["head.speech_act.W", "head.speech_act.b"] {
        let id = model.params.id(name).unwrap();
        model.params.get_mut(id).data_mut().fill(0.0);
    }
    let ex = model
        .prepare_tokens(
            &["x".into(), "y".into()],
            Some(vec![vec![1.0; 4], vec![-1.0; 4]]),
            None,
            [None, None],
        )
        .unwrap();
    let p = model.predict_example(&ex).unwrap();
    assert!(p
        .speech_act
        .unwrap()
        .iter()
        .all(|&x| (x - 0.125).abs() < 1e-15));
}

#[test]
fn save_load_preserves_predictions_exactly() {
    let data = small_data(200);
    let src = EmbeddingSource::Static(data.embeddings.clone());
    let dir = tempfile::tempdir().unwrap();
    for (k, arch) in [
        Architecture::LinearBow,
        Architecture::MlpBow,
        Architecture::Bigru,
    ]
    .into_iter()
    .enumerate()
    {
        let cfg = ModelConfig {
            task: Task::Both,
            use_meta: true,
            epochs: 2,
            ..config(arch)
        };
        let out = train_supervised(&cfg, &data.labeled, &data.labeled, &src).unwrap();
        let path = dir.path().join(format!("m{k}.txt"));
        out.model.save(&path).unwrap();
        let loaded = Model::load(&path).unwrap();
        assert_eq!(loaded.params, out.model.params);
        assert_eq!(loaded.config, out.model.config);
        for u in data.labeled.utterances.iter().take(50) {
            assert_eq!(
                predict(&loaded, u, &src).unwrap(),
                predict(&out.model, u, &src).unwrap()
            );
        }
    }
}

#[test]
fn speaker_only_matters_with_meta() {
    let data = small_data(200);
    let src = EmbeddingSource::Static(data.embeddings.clone());
    for meta in [false, true] {
        let cfg = ModelConfig {
            task: Task::Target,
            primary: HeadTask::Target,
            use_meta: meta,
            epochs: 2,
            ..config(Architecture::Bigru)
        };
        let out = train_supervised(&cfg, &data.labeled, &data.labeled, &src).unwrap();
        let mut changed = 0;
        for u in data.labeled.utterances.iter().take(40) {
            let preds: Vec<_> = [Some(Party::Labor), Some(Party::Liberal), None]
                .into_iter()
                .map(|speaker| {
                    let mut v = u.clone();
                    v.speaker = speaker;
                    predict(&out.model, &v, &src).unwrap()
                })
                .collect();
            if preds[0] != preds[1] {
                changed += 1;
            }
            if !meta {
                assert!(preds.iter().all(|p| *p == preds[0]));
            }
        }
        if meta {
            assert!(changed > 0);
        }
    }
}

#[test]
fn training_loss_decreases_over_the_first_epochs() {
    let data = generate(&SyntheticConfig::default()).unwrap();
    let sp = split(&data.labeled, &SplitSpec::default()).unwrap();
    let src = EmbeddingSource::Static(data.embeddings.clone());
    let cfg = ModelConfig {
        hidden_dim: 32,
        learning_rate: 0.005,
        epochs: 5,
        ..ModelConfig::default()
    };
    let out = train_supervised(&cfg, &sp.train, &sp.val, &src).unwrap();
    let loss = &out.history.epoch_loss;
    assert_eq!(loss.len(), 5);
    for e in 1..5 {
        assert!(loss[e] <= loss[e - 1] + 1e-6, "{loss:?}");
    }
}

#[test]
fn evaluation_confusion_rows_match_gold_counts() {
    let data = small_data(200);
    let sp = split(&data.labeled, &SplitSpec::default()).unwrap();
    let cfg = ModelConfig {
        task: Task::Both,
        ..config(Architecture::MlpBow)
    };
    let out = train_supervised(&cfg, &sp.train, &sp.val, &EmbeddingSource::Bow).unwrap();
    let eval = evaluate(&out.model, &sp.test, &EmbeddingSource::Bow).unwrap();
    for task in HeadTask::ALL {
        let r = eval.report(task).unwrap();
        for (k, row) in r.confusion.iter().enumerate() {
            let gold = sp
                .test
                .utterances
                .iter()
                .filter(|u| task.gold(u) == Some(k))
                .count();
            assert_eq!(row.iter().sum::<usize>(), gold);
        }
    }
}

#[test]
fn inference_mode_ignores_dropout() {
    let model = Model::build(
        &ModelConfig {
            dropout: 0.5,
            ..config(Architecture::Bigru)
        },
        InputDims::Embedding { dim: 3 },
    )
    .unwrap();
    let ex = model
        .prepare_tokens(
            &["a".into()],
            Some(vec![vec![0.5, -0.5, 1.0]]),
            None,
            [Some(0), None],
        )
        .unwrap();
    let run = || {
        let mut tape = Tape::new(&model.params);
        let l = model
            .loss(&mut tape, &ex, &mut Mode::Inference)
            .unwrap()
            .unwrap();
        tape.scalar(l)
    };
    assert_eq!(run(), run());
}
