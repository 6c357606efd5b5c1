//! Utterance segmentation: BI token labels, spans, and a linear-chain CRF.

mod crf;

pub use crf::{
    segment_sentence, sentence_features, train_crf, CrfModel, CrfSentence, CrfTrainConfig,
    CRF_MAGIC,
};

use std::fmt;

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BiLabel {
    B,
    I,
}

impl BiLabel {
    pub const COUNT: usize = 2;

    pub fn index(self) -> usize {
        match self {
            BiLabel::B => 0,
            BiLabel::I => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<BiLabel> {
        match i {
            0 => Some(BiLabel::B),
            1 => Some(BiLabel::I),
            _ => None,
        }
    }
}

impl fmt::Display for BiLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BiLabel::B => "B",
            BiLabel::I => "I",
        })
    }
}

/// Half-open token spans partitioning `[0, n)`, `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segmentation {
    spans: Vec<(usize, usize)>,
}

impl Segmentation {
    pub fn from_spans(spans: Vec<(usize, usize)>) -> Result<Segmentation> {
        if spans.is_empty() {
            return Err(Error::InvalidArgument("segmentation without spans".into()));
        }
        let mut expected = 0;
        for &(start, end) in &spans {
            if start != expected || end <= start {
                return Err(Error::InvalidArgument(format!(
                    "span ({start}, {end}) breaks a contiguous partition starting at 0"
                )));
            }
            expected = end;
        }
        Ok(Segmentation { spans })
    }

    /// `flags[i]` is true when token `i` opens a span; `flags[0]` must be.
    pub fn from_boundary_flags(flags: &[bool]) -> Result<Segmentation> {
        if flags.first() != Some(&true) {
            return Err(Error::InvalidArgument(
                "first token must open a span".into(),
            ));
        }
        let mut spans = Vec::new();
        let mut start = 0;
        for (i, &b) in flags.iter().enumerate().skip(1) {
            if b {
                spans.push((start, i));
                start = i;
            }
        }
        spans.push((start, flags.len()));
        Ok(Segmentation { spans })
    }

    pub fn from_labels(labels: &[BiLabel]) -> Result<Segmentation> {
        let flags: Vec<bool> = labels.iter().map(|&l| l == BiLabel::B).collect();
        Segmentation::from_boundary_flags(&flags)
    }

    /// A single span over `n` tokens.
    pub fn whole(n: usize) -> Result<Segmentation> {
        Segmentation::from_spans(vec![(0, n)])
    }

    pub fn spans(&self) -> &[(usize, usize)] {
        &self.spans
    }

    pub fn n_tokens(&self) -> usize {
        self.spans.last().map_or(0, |s| s.1)
    }

    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n_tokens()];
        for &(start, _) in &self.spans {
            flags[start] = true;
        }
        flags
    }

    pub fn labels(&self) -> Vec<BiLabel> {
        self.boundary_flags()
            .into_iter()
            .map(|b| if b { BiLabel::B } else { BiLabel::I })
            .collect()
    }
}

/// A corpus sentence reassembled from its utterances.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceTokens {
    pub sentence: Sentence,
    pub tokens: Vec<String>,
    /// Present only when every utterance of the sentence carries the column.
    pub pos: Option<Vec<String>>,
    pub dep: Option<Vec<String>>,
    pub segmentation: Segmentation,
}

impl SentenceTokens {
    pub fn crf_sentence(&self) -> CrfSentence {
        CrfSentence {
            tokens: self.tokens.clone(),
            pos: self.pos.clone(),
            dep: self.dep.clone(),
            labels: self.segmentation.labels(),
        }
    }
}

/// Concatenates each sentence's utterance tokens in `utt_index` order, the
/// utterance boundaries giving the gold segmentation.
pub fn corpus_sentences(corpus: &Corpus) -> Result<Vec<SentenceTokens>> {
    corpus
        .sentences()
        .into_iter()
        .map(|sentence| {
            let utts: Vec<_> = sentence
                .utterances
                .iter()
                .map(|&i| &corpus.utterances[i])
                .collect();
            let mut tokens = Vec::new();
            let mut spans = Vec::new();
            for u in &utts {
                let start = tokens.len();
                tokens.extend(u.tokens.iter().cloned());
                if tokens.len() == start {
                    return Err(Error::Corpus(format!(
                        "utterance {}/{}/{} has no tokens",
                        u.doc_id, u.sent_id, u.utt_index
                    )));
                }
                spans.push((start, tokens.len()));
            }
            let column = |get: fn(&crate::corpus::Utterance) -> Option<&Vec<String>>| {
                utts.iter()
                    .map(|u| get(u).filter(|c| c.len() == u.tokens.len()).cloned())
                    .collect::<Option<Vec<_>>>()
                    .map(|parts| parts.concat())
            };
            let pos = column(|u| u.pos.as_ref());
            let dep = column(|u| u.dep.as_ref());
            Ok(SentenceTokens {
                segmentation: Segmentation::from_spans(spans)?,
                sentence,
                tokens,
                pos,
                dep,
            })
        })
        .collect()
}
