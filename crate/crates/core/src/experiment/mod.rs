//! Multi-run evaluation protocol: paired random splits, per-model
//! aggregates, paired significance tests and training-ratio sweeps;
//! plus the cascaded segmentation + classification pipeline and
//! inter-annotator agreement reports.

mod agreement;
mod cascade;
mod config;
mod report;

pub use agreement::{agreement_report, AgreementReport, ClassAgreement};
pub use cascade::{cascade, cascade_with, CascadeReport, CascadeSentence};
pub use config::{ExperimentConfig, ExperimentData, ModelSpec};
pub use report::{
    ExperimentReport, ModelSummary, RunRecord, SignificanceRow, SweepReport, SweepRow,
};

use rayon::prelude::*;

use crate::classify::{evaluate, split_rng, train_supervised, TrainOutcome};
use crate::corpus::{split, subsample_documents, Corpus, Split, SplitSpec};
use crate::cvt::{train_semisup, SemiSupConfig};
use crate::embeddings::EmbeddingSource;
use crate::error::{Error, Result};

const SUBSAMPLE_STREAM: u64 = 10;

/// Trains one configured model; with an alpha grid, keeps the setting
/// with the best validation macro-F1 (earliest on ties).
pub fn train_spec(
    spec: &ModelSpec,
    seed: u64,
    train: &Corpus,
    val: &Corpus,
    unlabeled: &Corpus,
    source: &EmbeddingSource,
) -> Result<(TrainOutcome, f64)> {
    let grid = if spec.alpha_grid.is_empty() || spec.model.task != crate::classify::Task::Both {
        vec![spec.model.alpha]
    } else {
        spec.alpha_grid.clone()
    };
    let mut best: Option<(f64, TrainOutcome, f64)> = None;
    for alpha in grid {
        let mut cfg = spec.model.clone();
        cfg.seed = seed;
        cfg.alpha = alpha;
        let outcome = match spec.view {
            Some(view) => {
                let semi = SemiSupConfig {
                    model: cfg,
                    view,
                    unlabeled_batch_ratio: spec.unlabeled_batch_ratio,
                    consensus_weight: spec.consensus_weight,
                };
                train_semisup(&semi, train, val, unlabeled, source)?
            }
            None => train_supervised(&cfg, train, val, source)?,
        };
        let score = outcome
            .history
            .val_macro_f1
            .get(outcome.history.best_epoch)
            .copied()
            .unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
            best = Some((score, outcome, alpha));
        }
    }
    let (_, outcome, alpha) = best.expect("non-empty alpha grid");
    Ok((outcome, alpha))
}

fn run_models(
    config: &ExperimentConfig,
    data: &ExperimentData,
    run: usize,
    seed: u64,
    ratio: f64,
    parts: &Split,
    train: &Corpus,
) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for spec in &config.models {
        let context =
            |e: Error| Error::Config(format!("run {run} (seed {seed}), model {}: {e}", spec.id));
        let (outcome, alpha) =
            train_spec(spec, seed, train, &parts.val, &data.unlabeled, &data.source)
                .map_err(context)?;
        let eval = evaluate(&outcome.model, &parts.test, &data.source).map_err(context)?;
        for (task, report) in eval.reports {
            records.push(RunRecord {
                run,
                seed,
                ratio,
                model: spec.id.clone(),
                task,
                train_utterances: train.len(),
                epochs: outcome.history.epoch_loss.len(),
                alpha,
                report,
            });
        }
    }
    Ok(records)
}

fn split_for(config: &ExperimentConfig, data: &ExperimentData, seed: u64) -> Result<Split> {
    split(
        &data.labeled,
        &SplitSpec {
            seed,
            train_ratio: config.train_ratio,
            val_fraction_of_train: config.val_fraction,
        },
    )
}

/// Runs are independent and may execute in parallel; their records are
/// gathered in run order.
fn collect_runs(
    config: &ExperimentConfig,
    job: impl Fn(usize) -> Result<Vec<RunRecord>> + Sync + Send,
) -> Result<Vec<RunRecord>> {
    let results: Vec<Result<Vec<RunRecord>>> = (0..config.runs).into_par_iter().map(job).collect();
    let mut records = Vec::new();
    let mut first_error = None;
    for r in results {
        match r {
            Ok(mut recs) => records.append(&mut recs),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        if let Some(dir) = &config.output_dir {
            report::write_partial(dir, &records)?;
        }
        return Err(e);
    }
    Ok(records)
}

/// The paired protocol: run `i` uses seed `base_seed + i` for its split
/// and for every model's initialization and data order.
pub fn run_experiment_with(
    config: &ExperimentConfig,
    data: &ExperimentData,
) -> Result<ExperimentReport> {
    config.validate()?;
    let records = collect_runs(config, |run| {
        let seed = config.base_seed + run as u64;
        let parts = split_for(config, data, seed)?;
        run_models(
            config,
            data,
            run,
            seed,
            config.train_ratio,
            &parts,
            &parts.train,
        )
    })?;
    ExperimentReport::build(config, records)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let data = ExperimentData::load(config)?;
    run_experiment_with(config, &data)
}

/// Number of training documents kept at `ratio` out of a pool split with
/// `train_ratio`.
pub fn kept_documents(n_train_docs: usize, ratio: f64, train_ratio: f64) -> usize {
    if (ratio - train_ratio).abs() < 1e-12 {
        n_train_docs
    } else {
        crate::corpus::round_half_up(ratio / train_ratio * n_train_docs as f64).min(n_train_docs)
    }
}

/// Subsamples the training pool at each ratio while test and validation
/// stay fixed per run.
pub fn sweep_training_ratio_with(
    config: &ExperimentConfig,
    data: &ExperimentData,
    ratios: &[f64],
) -> Result<SweepReport> {
    config.validate()?;
    if ratios.is_empty() {
        return Err(Error::Config("no training ratios given".into()));
    }
    for &r in ratios {
        if !(r > 0.0 && r <= config.train_ratio + 1e-12) {
            return Err(Error::Config(format!(
                "ratio {r} outside (0, {}]",
                config.train_ratio
            )));
        }
    }
    let records = collect_runs(config, |run| {
        let seed = config.base_seed + run as u64;
        let parts = split_for(config, data, seed)?;
        let n_docs = parts.train.documents().len();
        let mut out = Vec::new();
        for &ratio in ratios {
            let keep = kept_documents(n_docs, ratio, config.train_ratio);
            if keep == 0 {
                return Err(Error::Corpus(format!(
                    "ratio {ratio} leaves no training documents"
                )));
            }
            let mut rng = split_rng(seed, SUBSAMPLE_STREAM);
            let train = subsample_documents(&parts.train, keep, &mut rng);
            out.extend(run_models(config, data, run, seed, ratio, &parts, &train)?);
        }
        Ok(out)
    })?;
    SweepReport::build(config, ratios, records)
}

pub fn sweep_training_ratio(config: &ExperimentConfig, ratios: &[f64]) -> Result<SweepReport> {
    let data = ExperimentData::load(config)?;
    sweep_training_ratio_with(config, &data, ratios)
}
