use pragmact::classify::{train_supervised, HeadTask, InputDims, Model, ModelConfig};
use pragmact::corpus::{split, Corpus, CorpusKind, SplitSpec};
use pragmact::cvt::{attach_students, train_semisup, SemiSupConfig, ViewSpec};
use pragmact::embeddings::EmbeddingSource;
use pragmact::synthetic::{generate, SyntheticConfig};
use pragmact::tensor::{kl_divergence, softmax, Tape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base() -> ModelConfig {
    ModelConfig {
        hidden_dim: 8,
        epochs: 3,
        learning_rate: 0.005,
        ..ModelConfig::default()
    }
}

#[test]
fn degenerate_semisup_equals_supervised() {
    let data = generate(&SyntheticConfig {
        labeled_utterances: 300,
        unlabeled_utterances: 300,
        embedding_dim: 16,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let sp = split(&data.labeled, &SplitSpec::default()).unwrap();
    let src = EmbeddingSource::Static(data.embeddings.clone());
    let sup = train_supervised(&base(), &sp.train, &sp.val, &src).unwrap();
    for view in [
        ViewSpec::Fwd,
        ViewSpec::FwdBwd,
        ViewSpec::WordDrop { rate: 0.3 },
    ] {
        let mut zero_weight = SemiSupConfig::new(base(), view);
        zero_weight.consensus_weight = 0.0;
        let a = train_semisup(&zero_weight, &sp.train, &sp.val, &data.unlabeled, &src).unwrap();
        assert_eq!(a, sup);

        let mut zero_ratio = SemiSupConfig::new(base(), view);
        zero_ratio.unlabeled_batch_ratio = 0.0;
        let empty = Corpus::empty(CorpusKind::Unlabeled);
        let b = train_semisup(&zero_ratio, &sp.train, &sp.val, &empty, &src).unwrap();
        assert_eq!(b, sup);
    }

    let active = SemiSupConfig::new(base(), ViewSpec::WordDrop { rate: 0.3 });
    let c = train_semisup(&active, &sp.train, &sp.val, &data.unlabeled, &src).unwrap();
    assert_ne!(c.model.params, sup.model.params);
    assert_eq!(c.model.params.len(), sup.model.params.len());
}

#[test]
fn semisup_requires_bigru() {
    let cfg = SemiSupConfig::new(
        ModelConfig {
            architecture: pragmact::classify::Architecture::Gru,
            ..base()
        },
        ViewSpec::Fwd,
    );
    assert!(cfg.validate().is_err());
}

/// The tape gradient of the consensus term must equal the finite-difference
/// gradient of the same term with the teacher distribution held fixed, and
/// differ from the gradient obtained when the teacher moves with θ.
#[test]
fn teacher_is_a_constant_in_the_consensus_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for view in [
        ViewSpec::Fwd,
        ViewSpec::FwdBwd,
        ViewSpec::WordDrop { rate: 0.0 },
    ] {
        let cfg = ModelConfig {
            hidden_dim: 3,
            dropout: 0.0,
            use_meta: true,
            ..base()
        };
        let mut model = Model::build(&cfg, InputDims::Embedding { dim: 2 }).unwrap();
        let students = attach_students(&mut model, view).unwrap();
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let tokens = vec!["t".to_string(); 3];
        let ex = model
            .prepare_tokens(&tokens, Some(rows), None, [None, None])
            .unwrap();
        let teacher_of = |m: &Model| m.predict_example(&ex).unwrap().speech_act.unwrap();
        let teacher = teacher_of(&model);

        let consensus = |m: &Model, target: &[f64]| {
            let mut tape = Tape::new(&m.params);
            let mut r = ChaCha8Rng::seed_from_u64(1);
            let v = students
                .consensus(m, &mut tape, &ex, target, &mut r)
                .unwrap();
            (tape.scalar(v), tape.backward(v).unwrap())
        };
        let (_, grads) = consensus(&model, &teacher);

        let head = model
            .params
            .id(&format!("head.{}.W", HeadTask::SpeechAct))
            .unwrap();
        assert!(
            grads.get(head).iter().all(|&g| g == 0.0),
            "teacher head received gradient"
        );

        let eps = 1e-6;
        let mut moving_differs = false;
        let ids: Vec<_> = model.params.iter().map(|(id, _, _)| id).collect();
        for id in ids {
            for k in 0..model.params.get(id).len() {
                let mut plus = model.clone();
                plus.params.get_mut(id).data_mut()[k] += eps;
                let mut minus = model.clone();
                minus.params.get_mut(id).data_mut()[k] -= eps;
                let frozen =
                    (consensus(&plus, &teacher).0 - consensus(&minus, &teacher).0) / (2.0 * eps);
                let g = grads.get(id)[k];
                assert!(
                    (g - frozen).abs() < 1e-6 * g.abs().max(1.0),
                    "{g} vs {frozen}"
                );
                let moving = (consensus(&plus, &teacher_of(&plus)).0
                    - consensus(&minus, &teacher_of(&minus)).0)
                    / (2.0 * eps);
                if (moving - frozen).abs() > 1e-6 {
                    moving_differs = true;
                }
            }
        }
        assert!(
            moving_differs,
            "{view:?}: teacher path would have been indistinguishable"
        );
    }
}

#[test]
fn consensus_is_zero_when_students_match_the_teacher() {
    let logits = [0.3, -1.2, 2.0];
    let p = softmax(&logits);
    assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    let q = softmax(&[0.0, 0.0, 0.0]);
    assert!(kl_divergence(&p, &q).unwrap() > 0.0);
}
