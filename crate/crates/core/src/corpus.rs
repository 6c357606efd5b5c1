//! Campaign-text corpora: label schema, JSON-lines loading and writing,
//! document-level splitting and summary statistics.
//!
//! A corpus file holds one JSON object per line. Each object is one
//! utterance, identified by `(doc_id, sent_id, utt_index)`; labeled corpora
//! carry a speech act and a target party for every record, unlabeled ones
//! carry neither.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eight speech act classes, in canonical index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpeechAct {
    Assertive,
    CommissiveActionSpecific,
    CommissiveActionVague,
    CommissiveOutcome,
    Directive,
    Expressive,
    PastAction,
    Verdictive,
}

impl SpeechAct {
    pub const COUNT: usize = 8;

    pub const ALL: [SpeechAct; 8] = [
        SpeechAct::Assertive,
        SpeechAct::CommissiveActionSpecific,
        SpeechAct::CommissiveActionVague,
        SpeechAct::CommissiveOutcome,
        SpeechAct::Directive,
        SpeechAct::Expressive,
        SpeechAct::PastAction,
        SpeechAct::Verdictive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpeechAct::Assertive => "assertive",
            SpeechAct::CommissiveActionSpecific => "commissive-action-specific",
            SpeechAct::CommissiveActionVague => "commissive-action-vague",
            SpeechAct::CommissiveOutcome => "commissive-outcome",
            SpeechAct::Directive => "directive",
            SpeechAct::Expressive => "expressive",
            SpeechAct::PastAction => "past-action",
            SpeechAct::Verdictive => "verdictive",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<SpeechAct> {
        SpeechAct::ALL.get(index).copied()
    }
}

impl fmt::Display for SpeechAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpeechAct {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpeechAct::ALL
            .iter()
            .copied()
            .find(|act| act.name() == s)
            .ok_or_else(|| Error::UnknownLabel {
                field: "speech_act",
                value: s.to_string(),
            })
    }
}

/// A political party. `None` is only meaningful as a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    Labor,
    Liberal,
    None,
}

impl Party {
    pub const COUNT: usize = 3;

    pub const ALL: [Party; 3] = [Party::Labor, Party::Liberal, Party::None];

    pub fn name(self) -> &'static str {
        match self {
            Party::Labor => "Labor",
            Party::Liberal => "Liberal",
            Party::None => "None",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Party> {
        Party::ALL.get(index).copied()
    }

    /// Speaker flag value: Labor = 0, Liberal = 1.
    pub fn speaker_flag(self) -> Option<f64> {
        match self {
            Party::Labor => Some(0.0),
            Party::Liberal => Some(1.0),
            Party::None => None,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Party {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Party::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownLabel {
                field: "party",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    Labeled,
    Unlabeled,
}

impl FromStr for CorpusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labeled" => Ok(CorpusKind::Labeled),
            "unlabeled" => Ok(CorpusKind::Unlabeled),
            other => Err(Error::InvalidArgument(format!(
                "unknown corpus kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub doc_id: String,
    pub sent_id: u32,
    /// Position of the utterance within its sentence.
    pub utt_index: u32,
    pub text: String,
    pub tokens: Vec<String>,
    /// Always set for labeled records; unlabeled records may lack it.
    pub speaker: Option<Party>,
    pub speech_act: Option<SpeechAct>,
    pub target: Option<Party>,
    pub pos: Option<Vec<String>>,
    pub dep: Option<Vec<String>>,
}

impl Utterance {
    pub fn key(&self) -> (&str, u32, u32) {
        (&self.doc_id, self.sent_id, self.utt_index)
    }
}

/// One sentence: the utterances sharing `(doc_id, sent_id)`, in
/// `utt_index` order, as indices into [`Corpus::utterances`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_id: u32,
    pub utterances: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub utterances: Vec<Utterance>,
    pub kind: CorpusKind,
}

impl Corpus {
    /// Builds a corpus, enforcing the per-kind label invariants, key
    /// uniqueness and contiguous utterance indices within each sentence.
    pub fn new(utterances: Vec<Utterance>, kind: CorpusKind) -> Result<Corpus> {
        for u in &utterances {
            validate_utterance(u, kind)?;
        }
        let corpus = Corpus { utterances, kind };
        corpus.check_keys()?;
        Ok(corpus)
    }

    pub fn empty(kind: CorpusKind) -> Corpus {
        Corpus {
            utterances: Vec::new(),
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// Document ids in order of first appearance.
    pub fn documents(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        let mut docs = Vec::new();
        for u in &self.utterances {
            if seen.insert(u.doc_id.as_str()) {
                docs.push(u.doc_id.as_str());
            }
        }
        docs
    }

    /// Sentences in order of first appearance.
    pub fn sentences(&self) -> Vec<Sentence> {
        let mut order: Vec<(String, u32)> = Vec::new();
        let mut groups: HashMap<(String, u32), Vec<usize>> = HashMap::new();
        for (i, u) in self.utterances.iter().enumerate() {
            let key = (u.doc_id.clone(), u.sent_id);
            groups
                .entry(key.clone())
                .or_insert_with(|| {
                    order.push(key);
                    Vec::new()
                })
                .push(i);
        }
        order
            .into_iter()
            .map(|key| {
                let mut idx = groups.remove(&key).unwrap_or_default();
                idx.sort_by_key(|&i| self.utterances[i].utt_index);
                Sentence {
                    doc_id: key.0,
                    sent_id: key.1,
                    utterances: idx,
                }
            })
            .collect()
    }

    /// Keeps the utterances whose document is in `docs`, preserving order.
    pub fn restrict_to_documents(&self, docs: &HashSet<&str>) -> Corpus {
        Corpus {
            utterances: self
                .utterances
                .iter()
                .filter(|u| docs.contains(u.doc_id.as_str()))
                .cloned()
                .collect(),
            kind: self.kind,
        }
    }

    fn check_keys(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for u in &self.utterances {
            if !seen.insert(u.key()) {
                return Err(Error::Corpus(format!(
                    "duplicate utterance key ({}, {}, {})",
                    u.doc_id, u.sent_id, u.utt_index
                )));
            }
        }
        for sentence in self.sentences() {
            for (expected, &i) in sentence.utterances.iter().enumerate() {
                if self.utterances[i].utt_index as usize != expected {
                    return Err(Error::Corpus(format!(
                        "utterance indices of sentence ({}, {}) are not contiguous from 0",
                        sentence.doc_id, sentence.sent_id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn validate_utterance(u: &Utterance, kind: CorpusKind) -> Result<()> {
    let where_ = || format!("({}, {}, {})", u.doc_id, u.sent_id, u.utt_index);
    if u.speaker == Some(Party::None) {
        return Err(Error::Corpus(format!(
            "{}: speaker cannot be None",
            where_()
        )));
    }
    for (name, col) in [("pos", &u.pos), ("dep", &u.dep)] {
        if let Some(col) = col {
            if col.len() != u.tokens.len() {
                return Err(Error::Corpus(format!(
                    "{}: {name} has {} entries but there are {} tokens",
                    where_(),
                    col.len(),
                    u.tokens.len()
                )));
            }
        }
    }
    match kind {
        CorpusKind::Labeled => {
            if u.speaker.is_none() || u.speech_act.is_none() || u.target.is_none() {
                return Err(Error::Corpus(format!(
                    "{}: labeled records need speaker, speech_act and target",
                    where_()
                )));
            }
            if u.tokens.is_empty() {
                return Err(Error::Corpus(format!("{}: empty token list", where_())));
            }
        }
        CorpusKind::Unlabeled => {
            if u.speech_act.is_some() || u.target.is_some() {
                return Err(Error::Corpus(format!(
                    "{}: unlabeled records must not carry labels",
                    where_()
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    doc_id: String,
    sent_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utt_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speaker: Option<String>,
    text: String,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speech_act: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dep: Option<Vec<String>>,
}

fn record_to_utterance(
    rec: Record,
    kind: CorpusKind,
    context: &str,
    line: usize,
) -> Result<Utterance> {
    let field_err =
        |field: &str, e: Error| Error::parse(context, line, format!("field {field}: {e}"));
    let utt_index = match (rec.utt_index, kind) {
        (Some(i), _) => i,
        (None, CorpusKind::Unlabeled) => 0,
        (None, CorpusKind::Labeled) => {
            return Err(Error::parse(context, line, "missing field utt_index"));
        }
    };
    let speaker = match rec.speaker {
        Some(s) => Some(s.parse::<Party>().map_err(|e| field_err("speaker", e))?),
        None if kind == CorpusKind::Labeled => {
            return Err(Error::parse(context, line, "missing field speaker"));
        }
        None => None,
    };
    let speech_act = rec
        .speech_act
        .map(|s| {
            s.parse::<SpeechAct>()
                .map_err(|e| field_err("speech_act", e))
        })
        .transpose()?;
    let target = rec
        .target
        .map(|s| s.parse::<Party>().map_err(|e| field_err("target", e)))
        .transpose()?;
    let utt = Utterance {
        doc_id: rec.doc_id,
        sent_id: rec.sent_id,
        utt_index,
        text: rec.text,
        tokens: rec.tokens,
        speaker,
        speech_act,
        target,
        pos: rec.pos,
        dep: rec.dep,
    };
    validate_utterance(&utt, kind).map_err(|e| Error::parse(context, line, e.to_string()))?;
    Ok(utt)
}

/// Parses corpus records from JSON-lines text. Blank lines are skipped;
/// errors carry 1-based line numbers.
pub fn parse_corpus(text: &str, kind: CorpusKind, context: &str) -> Result<Corpus> {
    let mut utterances = Vec::new();
    let mut seen: HashMap<(String, u32, u32), usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line)
            .map_err(|e| Error::parse(context, lineno, format!("malformed record: {e}")))?;
        let utt = record_to_utterance(rec, kind, context, lineno)?;
        let key = (utt.doc_id.clone(), utt.sent_id, utt.utt_index);
        if let Some(first) = seen.insert(key, lineno) {
            return Err(Error::parse(
                context,
                lineno,
                format!(
                    "duplicate key ({}, {}, {}), first seen on line {first}",
                    utt.doc_id, utt.sent_id, utt.utt_index
                ),
            ));
        }
        utterances.push(utt);
    }
    let corpus = Corpus { utterances, kind };
    corpus.check_keys()?;
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>, kind: CorpusKind) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, kind, &path.display().to_string())
}

/// Serializes a corpus as JSON lines. Absent optional fields are omitted.
pub fn corpus_to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for u in &corpus.utterances {
        let rec = Record {
            doc_id: u.doc_id.clone(),
            sent_id: u.sent_id,
            utt_index: Some(u.utt_index),
            speaker: u.speaker.map(|p| p.name().to_string()),
            text: u.text.clone(),
            tokens: u.tokens.clone(),
            speech_act: u.speech_act.map(|s| s.name().to_string()),
            target: u.target.map(|p| p.name().to_string()),
            pos: u.pos.clone(),
            dep: u.dep.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serialization"));
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, corpus_to_jsonl(corpus)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_ratio: f64,
    pub val_fraction_of_train: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 0,
            train_ratio: 0.9,
            val_fraction_of_train: 0.1,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train_ratio", self.train_ratio),
            ("val_fraction_of_train", self.val_fraction_of_train),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Corpus,
    pub val: Corpus,
    pub test: Corpus,
}

/// Round half up; the small slack absorbs representation error such as
/// `(1.0 - 0.9) * 10.0 == 0.9999999999999998`.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Partition sizes `(train, val, test)` in documents.
pub fn partition_sizes(n_docs: usize, spec: &SplitSpec) -> (usize, usize, usize) {
    let n_test = round_half_up((1.0 - spec.train_ratio) * n_docs as f64).min(n_docs);
    let pool = n_docs - n_test;
    let n_val = round_half_up(spec.val_fraction_of_train * pool as f64).min(pool);
    (pool - n_val, n_val, n_test)
}

/// Splits a labeled corpus by document into train / validation / test.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<Split> {
    if corpus.kind != CorpusKind::Labeled {
        return Err(Error::InvalidArgument(
            "only labeled corpora can be split".into(),
        ));
    }
    spec.validate()?;
    let mut docs = corpus.documents();
    let (n_train, n_val, n_test) = partition_sizes(docs.len(), spec);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Corpus(format!(
            "{} documents are too few for non-empty train/val/test partitions ({n_train}/{n_val}/{n_test})",
            docs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    docs.shuffle(&mut rng);
    let test: HashSet<&str> = docs[..n_test].iter().copied().collect();
    let val: HashSet<&str> = docs[n_test..n_test + n_val].iter().copied().collect();
    let train: HashSet<&str> = docs[n_test + n_val..].iter().copied().collect();
    Ok(Split {
        train: corpus.restrict_to_documents(&train),
        val: corpus.restrict_to_documents(&val),
        test: corpus.restrict_to_documents(&test),
    })
}

/// Splits off `fraction` of the documents (at least one) as a validation
/// set; the rest, in original order, is the training set.
pub fn holdout(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut docs = corpus.documents();
    if docs.len() < 2 {
        return Err(Error::Corpus("holdout needs at least two documents".into()));
    }
    let n_val = round_half_up(fraction * docs.len() as f64).clamp(1, docs.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    docs.shuffle(&mut rng);
    let val: HashSet<&str> = docs[..n_val].iter().copied().collect();
    let train: HashSet<&str> = docs[n_val..].iter().copied().collect();
    Ok((
        corpus.restrict_to_documents(&train),
        corpus.restrict_to_documents(&val),
    ))
}

/// Keeps `n_keep` documents chosen uniformly with `rng`, in original order.
pub fn subsample_documents<R: rand::Rng>(corpus: &Corpus, n_keep: usize, rng: &mut R) -> Corpus {
    let docs = corpus.documents();
    if n_keep >= docs.len() {
        return corpus.clone();
    }
    let mut shuffled = docs.clone();
    shuffled.shuffle(rng);
    let keep: HashSet<&str> = shuffled[..n_keep].iter().copied().collect();
    corpus.restrict_to_documents(&keep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassShare<L> {
    pub label: L,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub documents: usize,
    pub sentences: usize,
    pub utterances: usize,
    pub mean_utterance_length: f64,
    /// Empty when the corpus carries no labels.
    pub speech_acts: Vec<ClassShare<SpeechAct>>,
    pub targets: Vec<ClassShare<Party>>,
}

pub fn corpus_stats(corpus: &Corpus) -> Stats {
    let n = corpus.len();
    let total_tokens: usize = corpus.utterances.iter().map(|u| u.tokens.len()).sum();
    let mean = if n == 0 {
        0.0
    } else {
        total_tokens as f64 / n as f64
    };

    fn shares<L: Copy + Ord>(all: &[L], labels: impl Iterator<Item = L>) -> Vec<ClassShare<L>> {
        let mut counts: BTreeMap<L, usize> = all.iter().map(|&l| (l, 0)).collect();
        let mut total = 0usize;
        for l in labels {
            *counts.entry(l).or_default() += 1;
            total += 1;
        }
        if total == 0 {
            return Vec::new();
        }
        counts
            .into_iter()
            .map(|(label, count)| ClassShare {
                label,
                count,
                percent: 100.0 * count as f64 / total as f64,
            })
            .collect()
    }

    Stats {
        documents: corpus.documents().len(),
        sentences: corpus.sentences().len(),
        utterances: n,
        mean_utterance_length: mean,
        speech_acts: shares(
            &SpeechAct::ALL,
            corpus.utterances.iter().filter_map(|u| u.speech_act),
        ),
        targets: shares(
            &Party::ALL,
            corpus.utterances.iter().filter_map(|u| u.target),
        ),
    }
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents\t{}", self.documents)?;
        writeln!(f, "sentences\t{}", self.sentences)?;
        writeln!(f, "utterances\t{}", self.utterances)?;
        writeln!(
            f,
            "mean_utterance_length\t{:.2}",
            self.mean_utterance_length
        )?;
        for share in &self.speech_acts {
            writeln!(
                f,
                "speech_act.{}\t{}\t{:.1}%",
                share.label, share.count, share.percent
            )?;
        }
        for share in &self.targets {
            writeln!(
                f,
                "target.{}\t{}\t{:.1}%",
                share.label, share.count, share.percent
            )?;
        }
        Ok(())
    }
}
