use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Example, InputDims, Mode, Model, Prediction};
use super::{HeadTask, ModelConfig};
use crate::corpus::{Corpus, Utterance};
use crate::embeddings::EmbeddingSource;
use crate::error::{Error, Result};
use crate::metrics::{accuracy_macro_f1, MetricsReport};
use crate::tensor::{AdamConfig, AdamState, ParamSet, Tape};
use crate::textfeat::FeatureDictionary;

/// Independent RNG stream `stream` of the run seeded by `seed`.
pub fn split_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) const SHUFFLE_STREAM: u64 = 1;
pub(crate) const DROPOUT_STREAM: u64 = 2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    /// Mean supervised training loss per epoch (dropout active).
    pub epoch_loss: Vec<f64>,
    /// Primary-task validation macro-F1 per epoch; empty without validation data.
    pub val_macro_f1: Vec<f64>,
    /// Epoch of the returned snapshot.
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: TrainingHistory,
}

/// Extra optimization steps interleaved after each labeled batch.
pub(crate) trait UnlabeledSteps {
    fn after_batch(&mut self, model: &mut Model, adam: &mut AdamState) -> Result<()>;
}

/// Builds an untrained model; bag-of-words architectures get a frozen
/// dictionary over the training tokens.
pub(crate) fn init_model(
    config: &ModelConfig,
    train: &Corpus,
    source: &EmbeddingSource,
) -> Result<Model> {
    if config.architecture.uses_bow() {
        let mut dict = FeatureDictionary::new();
        for u in &train.utterances {
            for t in &u.tokens {
                dict.intern(&t.to_lowercase());
            }
        }
        dict.freeze();
        let mut model = Model::build(config, InputDims::Bow { vocab: dict.len() })?;
        model.dictionary = Some(dict);
        Ok(model)
    } else {
        let dim = source.dim().ok_or_else(|| {
            Error::Config(format!(
                "{} needs static or contextual embeddings",
                config.architecture
            ))
        })?;
        Model::build(config, InputDims::Embedding { dim })
    }
}

pub(crate) fn prepare_examples(
    model: &Model,
    corpus: &Corpus,
    source: &EmbeddingSource,
) -> Result<Vec<Example>> {
    corpus
        .utterances
        .iter()
        .map(|u| model.prepare(u, source))
        .collect()
}

fn primary_macro_f1(model: &Model, examples: &[Example]) -> Result<f64> {
    let task = model.config.primary_head();
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for ex in examples {
        if let Some(g) = ex.label(task) {
            gold.push(g);
            pred.push(
                model
                    .predict_example(ex)?
                    .label(task)
                    .expect("primary head present"),
            );
        }
    }
    if gold.is_empty() {
        return Err(Error::Empty("validation set has no primary labels".into()));
    }
    Ok(accuracy_macro_f1(&gold, &pred, &task.class_names())?.macro_f1)
}

/// Mini-batch Adam with per-epoch shuffling and early stopping on the
/// primary validation macro-F1: the best snapshot is kept on strict
/// improvement and training stops once `patience` epochs in a row
/// fail to improve. Without validation data every epoch runs and the
/// final parameters are returned.
pub(crate) fn fit(
    mut model: Model,
    train: &[Example],
    val: &[Example],
    mut hook: Option<&mut dyn UnlabeledSteps>,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Empty("empty training set".into()));
    }
    let cfg = model.config.clone();
    let mut adam = AdamState::new(
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        },
        &model.params,
    );
    let mut shuffle = split_rng(cfg.seed, SHUFFLE_STREAM);
    let mut dropout = split_rng(cfg.seed, DROPOUT_STREAM);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, ParamSet)> = None;
    let mut stale = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let (mut total, mut count) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let grads = {
                let mut tape = Tape::new(&model.params);
                let mut losses = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    if let Some(l) =
                        model.loss(&mut tape, &train[i], &mut Mode::Train(&mut dropout))?
                    {
                        losses.push(l);
                    }
                }
                if losses.is_empty() {
                    continue;
                }
                let w = 1.0 / losses.len() as f64;
                for &l in &losses {
                    total += tape.scalar(l);
                }
                count += losses.len();
                let terms: Vec<_> = losses.iter().map(|&l| (l, w)).collect();
                let batch = tape.weighted_sum(&terms)?;
                if !tape.scalar(batch).is_finite() {
                    return Err(Error::Diverged(format!(
                        "non-finite loss at epoch {epoch}, batch {b}"
                    )));
                }
                tape.backward(batch)?
            };
            if !grads.all_finite() {
                return Err(Error::Diverged(format!(
                    "non-finite gradient at epoch {epoch}, batch {b}"
                )));
            }
            adam.update(&mut model.params, &grads)?;
            if let Some(h) = hook.as_deref_mut() {
                h.after_batch(&mut model, &mut adam)?;
            }
        }
        if count == 0 {
            return Err(Error::Empty(
                "no training example carries a label for the trained heads".into(),
            ));
        }
        history.epoch_loss.push(total / count as f64);
        if val.is_empty() {
            history.best_epoch = epoch;
            continue;
        }
        let f1 = primary_macro_f1(&model, val)?;
        history.val_macro_f1.push(f1);
        if best.as_ref().map_or(true, |(b, _)| f1 > *b) {
            best = Some((f1, model.params.clone()));
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok(TrainOutcome { model, history })
}

pub fn train_supervised(
    config: &ModelConfig,
    train: &Corpus,
    val: &Corpus,
    source: &EmbeddingSource,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::Empty("empty training set".into()));
    }
    let model = init_model(config, train, source)?;
    let train_ex = prepare_examples(&model, train, source)?;
    let val_ex = prepare_examples(&model, val, source)?;
    fit(model, &train_ex, &val_ex, None)
}

pub fn predict(
    model: &Model,
    utterance: &Utterance,
    source: &EmbeddingSource,
) -> Result<Prediction> {
    model.predict_example(&model.prepare(utterance, source)?)
}

/// Per-head test metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub reports: Vec<(HeadTask, MetricsReport)>,
}

impl Evaluation {
    pub fn report(&self, task: HeadTask) -> Option<&MetricsReport> {
        self.reports
            .iter()
            .find(|(t, _)| *t == task)
            .map(|(_, r)| r)
    }
}

pub fn evaluate(model: &Model, test: &Corpus, source: &EmbeddingSource) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Empty("empty test set".into()));
    }
    let heads = model.heads();
    let mut gold = vec![Vec::new(); heads.len()];
    let mut pred = vec![Vec::new(); heads.len()];
    for u in &test.utterances {
        let ex = model.prepare(u, source)?;
        let p = model.predict_example(&ex)?;
        for (k, &task) in heads.iter().enumerate() {
            if let (Some(g), Some(y)) = (ex.label(task), p.label(task)) {
                gold[k].push(g);
                pred[k].push(y);
            }
        }
    }
    let reports = heads
        .iter()
        .enumerate()
        .map(|(k, &task)| {
            Ok((
                task,
                accuracy_macro_f1(&gold[k], &pred[k], &task.class_names())?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(Evaluation { reports })
}
