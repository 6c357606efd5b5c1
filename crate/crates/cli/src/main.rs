//! `pragmact`: train and evaluate speech-act / target classifiers and the
//! utterance segmenter, run the cascade, the multi-run protocol, training
//! ratio sweeps and agreement reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pragmact::classify::{evaluate, Architecture, Model, Task, TrainOutcome};
use pragmact::corpus::{corpus_stats, holdout, load_corpus, write_corpus, Corpus, CorpusKind};
use pragmact::cvt::ViewSpec;
use pragmact::embeddings::{load_source, EmbeddingSource};
use pragmact::experiment::{
    agreement_report, cascade, run_experiment, sweep_training_ratio, train_spec, ExperimentConfig,
    ModelSpec,
};
use pragmact::metrics::{segmentation_accuracy, SpanMatches};
use pragmact::segment::{corpus_sentences, segment_sentence, train_crf, CrfModel, CrfTrainConfig};
use pragmact::synthetic::{generate, SyntheticConfig};

const CRF_FILE: &str = "crf.model";
const CRF_DICT_FILE: &str = "crf.dict";
const MODEL_FILE: &str = "model.txt";

#[derive(Parser)]
#[command(
    name = "pragmact",
    version,
    about = "Speech act and target party analysis of campaign text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier on a labeled corpus.
    Train(TrainArgs),
    /// Evaluate a trained classifier.
    Eval(EvalArgs),
    /// Train the CRF utterance segmenter.
    SegmentTrain(SegmentTrainArgs),
    /// Segment sentences with a trained CRF.
    Segment(SegmentArgs),
    /// Segment, then classify each predicted utterance.
    Cascade(CascadeArgs),
    /// Run the multi-run evaluation protocol from a config file.
    Experiment(ExperimentArgs),
    /// Run the protocol at several training ratios.
    Sweep(SweepArgs),
    /// Agreement between two annotations of the same sentences.
    Agreement(AgreementArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Write a seeded synthetic corpus with static embeddings.
    Synth(SynthArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled corpus (JSON lines).
    #[arg(long)]
    data: PathBuf,
    /// Unlabeled corpus for cross-view training.
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    /// TOML table of model settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Architecture: linear-bow, mlp-bow, dan, gru or bigru.
    #[arg(long)]
    model: Option<Architecture>,
    #[arg(long, default_value = "bow")]
    embeddings: String,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    meta: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    cvt: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Share of training documents held out for early stopping.
    #[arg(long, default_value_t = 0.1)]
    val_fraction: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "bow")]
    embeddings: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SegmentTrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    /// Directory written by `segment-train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Treat the input as unlabeled (no gold scoring).
    #[arg(long)]
    unlabeled: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CascadeArgs {
    /// Directory written by `segment-train`.
    #[arg(long)]
    segmenter: PathBuf,
    /// Classifier model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "bow")]
    embeddings: String,
    #[arg(long)]
    unlabeled: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated training ratios; defaults to the config's list or 0.1..0.9.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AgreementArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    unlabeled: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    labeled: usize,
    #[arg(long, default_value_t = 10000)]
    unlabeled: usize,
    /// Share of targets recoverable only from the speaker.
    #[arg(long, default_value_t = 0.0)]
    speaker_only: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::SegmentTrain(a) => segment_train(a),
        Command::Segment(a) => segment(a),
        Command::Cascade(a) => run_cascade(a),
        Command::Experiment(a) => experiment(a),
        Command::Sweep(a) => sweep(a),
        Command::Agreement(a) => agreement(a),
        Command::Stats(a) => stats(a),
        Command::Synth(a) => synth(a),
    }
}

fn labeled(path: &Path) -> Result<Corpus> {
    load_corpus(path, CorpusKind::Labeled).with_context(|| format!("loading {}", path.display()))
}

fn kind(unlabeled: bool) -> CorpusKind {
    if unlabeled {
        CorpusKind::Unlabeled
    } else {
        CorpusKind::Labeled
    }
}

/// Prints `text` and, with `out`, also writes it to `out/name`.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join(name), text)
            .with_context(|| format!("writing {}", dir.join(name).display()))?;
    }
    Ok(())
}

fn model_spec(a: &TrainArgs) -> Result<ModelSpec> {
    let mut spec = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ModelSpec::from_toml_str(&text, "model")?
        }
        None => ModelSpec::supervised("model", Default::default()),
    };
    if let Some(m) = a.model {
        spec.model.architecture = m;
    }
    if let Some(t) = a.task {
        spec.model.task = t;
    }
    if a.meta {
        spec.model.use_meta = true;
    }
    if let Some(x) = a.alpha {
        spec.model.alpha = x;
        spec.alpha_grid.clear();
    }
    if let Some(e) = a.epochs {
        spec.model.epochs = e;
    }
    if let Some(h) = a.hidden_dim {
        spec.model.hidden_dim = h;
    }
    if let Some(lr) = a.learning_rate {
        spec.model.learning_rate = lr;
    }
    if let Some(c) = &a.cvt {
        spec.view = match c.as_str() {
            "none" => None,
            other => Some(ViewSpec::parse(other)?),
        };
    }
    spec.validate()?;
    Ok(spec)
}

fn train(a: TrainArgs) -> Result<()> {
    let spec = model_spec(&a)?;
    let seed = a.seed.unwrap_or(spec.model.seed);
    let corpus = labeled(&a.data)?;
    let unlabeled = match &a.unlabeled {
        Some(p) => load_corpus(p, CorpusKind::Unlabeled)
            .with_context(|| format!("loading {}", p.display()))?,
        None => Corpus::empty(CorpusKind::Unlabeled),
    };
    if spec.view.is_some() && spec.consensus_weight > 0.0 && unlabeled.is_empty() {
        bail!("cross-view training needs --unlabeled");
    }
    let source = load_source(&a.embeddings, &[&corpus, &unlabeled])?;
    let (train, val) = if a.val_fraction > 0.0 {
        holdout(&corpus, a.val_fraction, seed)?
    } else {
        (corpus, Corpus::empty(CorpusKind::Labeled))
    };
    let (TrainOutcome { model, history }, alpha) =
        train_spec(&spec, seed, &train, &val, &unlabeled, &source)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    model.save(a.out.join(MODEL_FILE))?;
    let mut log = String::from("epoch,train_loss,val_macro_f1\n");
    for (e, loss) in history.epoch_loss.iter().enumerate() {
        let f1 = history
            .val_macro_f1
            .get(e)
            .map(|x| x.to_string())
            .unwrap_or_default();
        let _ = writeln!(log, "{e},{loss},{f1}");
    }
    fs::write(a.out.join("history.csv"), log)?;
    println!(
        "trained {} ({} parameters, alpha {alpha}) for {} epochs, best epoch {}; saved {}",
        model.config.architecture,
        model.num_parameters(),
        history.epoch_loss.len(),
        history.best_epoch,
        a.out.join(MODEL_FILE).display()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let corpus = labeled(&a.data)?;
    let source = load_source(&a.embeddings, &[&corpus])?;
    let evaluation = evaluate(&model, &corpus, &source)?;
    let mut text = String::new();
    for (task, report) in &evaluation.reports {
        for line in report.to_key_values().lines() {
            let _ = writeln!(text, "{task}.{line}");
        }
        if let Some(dir) = &a.out {
            fs::create_dir_all(dir)?;
            fs::write(
                dir.join(format!("confusion_{task}.csv")),
                report.confusion_csv(),
            )?;
        }
    }
    emit(a.out.as_deref(), "metrics.txt", &text)
}

fn segment_train(a: SegmentTrainArgs) -> Result<()> {
    let corpus = labeled(&a.data)?;
    let mut config = CrfTrainConfig::default();
    if let Some(l) = a.lambda {
        config.lambda = l;
    }
    if let Some(e) = a.epochs {
        config.epochs = e;
    }
    let sentences: Vec<_> = corpus_sentences(&corpus)?
        .iter()
        .map(|s| s.crf_sentence())
        .collect();
    let crf = train_crf(&sentences, &config)?;
    fs::create_dir_all(&a.out)?;
    crf.save(a.out.join(CRF_FILE), a.out.join(CRF_DICT_FILE))?;
    println!(
        "trained CRF on {} sentences; saved {}",
        sentences.len(),
        a.out.display()
    );
    Ok(())
}

fn load_crf(dir: &Path) -> Result<CrfModel> {
    CrfModel::load(dir.join(CRF_FILE), dir.join(CRF_DICT_FILE))
        .with_context(|| format!("loading segmenter from {}", dir.display()))
}

fn segment(a: SegmentArgs) -> Result<()> {
    let crf = load_crf(&a.model)?;
    let corpus = load_corpus(&a.data, kind(a.unlabeled))?;
    let mut text = String::from("doc_id\tsent_id\tutt_index\tstart\tend\ttext\n");
    let mut sa = SpanMatches::default();
    for st in corpus_sentences(&corpus)? {
        let hyp = segment_sentence(&crf, &st.tokens, st.pos.as_deref(), st.dep.as_deref())?;
        for (k, &(s, e)) in hyp.spans().iter().enumerate() {
            let _ = writeln!(
                text,
                "{}\t{}\t{k}\t{s}\t{e}\t{}",
                st.sentence.doc_id,
                st.sentence.sent_id,
                st.tokens[s..e].join(" ")
            );
        }
        if !a.unlabeled {
            sa.add(segmentation_accuracy(&st.segmentation, &hyp)?);
        }
    }
    emit(a.out.as_deref(), "segments.tsv", &text)?;
    if !a.unlabeled {
        let line = format!(
            "segmentation_accuracy\t{:.6}\t{}/{}\n",
            sa.ratio(),
            sa.matched,
            sa.total
        );
        if let Some(dir) = &a.out {
            fs::write(dir.join("metrics.txt"), &line)?;
        }
        eprint!("{line}");
    }
    Ok(())
}

fn run_cascade(a: CascadeArgs) -> Result<()> {
    let crf = load_crf(&a.segmenter)?;
    let model = Model::load(&a.model)?;
    let corpus = load_corpus(&a.data, kind(a.unlabeled))?;
    let source: EmbeddingSource = load_source(&a.embeddings, &[&corpus])?;
    let report = cascade(&crf, &model, &corpus, &source)?;
    emit(a.out.as_deref(), "cascade.tsv", &report.to_tsv())?;
    let metrics = report.to_key_values();
    if let Some(dir) = &a.out {
        fs::write(dir.join("metrics.txt"), &metrics)?;
    }
    eprint!("{metrics}");
    Ok(())
}

fn load_config(
    path: &Path,
    out: Option<PathBuf>,
    runs: Option<usize>,
    seed: Option<u64>,
) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if out.is_some() {
        config.output_dir = out;
    }
    if let Some(r) = runs {
        config.runs = r;
    }
    if let Some(s) = seed {
        config.base_seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let config = load_config(&a.config, a.out, a.runs, a.seed)?;
    let report = run_experiment(&config)?;
    if let Some(dir) = &config.output_dir {
        report.write(dir)?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let config = load_config(&a.config, a.out, a.runs, a.seed)?;
    let ratios = match a.ratios {
        Some(r) => r,
        None if !config.ratios.is_empty() => config.ratios.clone(),
        None => (1..=9).map(|k| k as f64 / 10.0).collect(),
    };
    let report = sweep_training_ratio(&config, &ratios)?;
    if let Some(dir) = &config.output_dir {
        report.write(dir)?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn agreement(a: AgreementArgs) -> Result<()> {
    let report = agreement_report(&labeled(&a.first)?, &labeled(&a.second)?)?;
    emit(a.out.as_deref(), "agreement.txt", &report.to_text())
}

fn stats(a: StatsArgs) -> Result<()> {
    let corpus = load_corpus(&a.data, kind(a.unlabeled))?;
    let s = corpus_stats(&corpus);
    let mut text = String::new();
    let _ = writeln!(text, "documents\t{}", s.documents);
    let _ = writeln!(text, "sentences\t{}", s.sentences);
    let _ = writeln!(text, "utterances\t{}", s.utterances);
    let _ = writeln!(
        text,
        "mean_utterance_length\t{:.2}",
        s.mean_utterance_length
    );
    for c in &s.speech_acts {
        let _ = writeln!(
            text,
            "speech_act.{}\t{}\t{:.1}%",
            c.label, c.count, c.percent
        );
    }
    for c in &s.targets {
        let _ = writeln!(text, "target.{}\t{}\t{:.1}%", c.label, c.count, c.percent);
    }
    print!("{text}");
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let config = SyntheticConfig {
        seed: a.seed,
        labeled_utterances: a.labeled,
        unlabeled_utterances: a.unlabeled,
        speaker_only_fraction: a.speaker_only,
        ..SyntheticConfig::default()
    };
    let data = generate(&config)?;
    fs::create_dir_all(&a.out)?;
    write_corpus(a.out.join("labeled.jsonl"), &data.labeled)?;
    write_corpus(a.out.join("unlabeled.jsonl"), &data.unlabeled)?;
    fs::write(a.out.join("embeddings.txt"), data.embeddings.to_text())?;
    println!(
        "wrote {} labeled and {} unlabeled utterances to {}",
        data.labeled.len(),
        data.unlabeled.len(),
        a.out.display()
    );
    Ok(())
}
