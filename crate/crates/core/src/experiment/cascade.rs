use std::fmt::Write as _;

use crate::classify::{HeadTask, Model, Prediction};
use crate::corpus::Corpus;
use crate::embeddings::{embed_span, EmbeddingSource};
use crate::error::Result;
use crate::metrics::{joint_accuracy, segmentation_accuracy, SpanMatches};
use crate::segment::{corpus_sentences, segment_sentence, CrfModel, Segmentation, SentenceTokens};

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSentence {
    pub doc_id: String,
    pub sent_id: u32,
    pub tokens: Vec<String>,
    pub segmentation: Segmentation,
    /// One per predicted span.
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeReport {
    pub sentences: Vec<CascadeSentence>,
    /// Pooled over all sentences; `None` when no gold labels exist.
    pub segmentation: Option<SpanMatches>,
    pub joint: Vec<(HeadTask, SpanMatches)>,
}

impl CascadeReport {
    pub fn joint(&self, task: HeadTask) -> Option<SpanMatches> {
        self.joint.iter().find(|(t, _)| *t == task).map(|(_, m)| *m)
    }

    /// One line per predicted utterance:
    /// `doc_id	sent_id	utt_index	start	end	speech_act	target	text`.
    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("doc_id\tsent_id\tutt_index\tstart\tend\tspeech_act\ttarget\ttext\n");
        for s in &self.sentences {
            for (k, (&(a, b), p)) in s
                .segmentation
                .spans()
                .iter()
                .zip(&s.predictions)
                .enumerate()
            {
                let name = |task: HeadTask| {
                    p.label(task)
                        .map(|i| task.class_names()[i].to_string())
                        .unwrap_or_else(|| "-".into())
                };
                let _ = writeln!(
                    out,
                    "{}\t{}\t{k}\t{a}\t{b}\t{}\t{}\t{}",
                    s.doc_id,
                    s.sent_id,
                    name(HeadTask::SpeechAct),
                    name(HeadTask::Target),
                    s.tokens[a..b].join(" ")
                );
            }
        }
        out
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        if let Some(sa) = self.segmentation {
            let _ = writeln!(
                out,
                "segmentation_accuracy\t{:.6}\t{}/{}",
                sa.ratio(),
                sa.matched,
                sa.total
            );
        }
        for (task, ja) in &self.joint {
            let _ = writeln!(
                out,
                "joint_accuracy.{task}\t{:.6}\t{}/{}",
                ja.ratio(),
                ja.matched,
                ja.total
            );
        }
        out
    }
}

/// Segments every sentence of `corpus` with `segmenter`, labels each
/// predicted span with `classifier` and, where the corpus carries gold
/// labels, scores exact-span and joint span-plus-label matches.
pub fn cascade_with<S, C>(
    corpus: &Corpus,
    mut segmenter: S,
    mut classifier: C,
) -> Result<CascadeReport>
where
    S: FnMut(&SentenceTokens) -> Result<Segmentation>,
    C: FnMut(&SentenceTokens, usize, usize) -> Result<Prediction>,
{
    let mut sentences = Vec::new();
    let mut sa = SpanMatches::default();
    let mut joint: Vec<(HeadTask, SpanMatches)> = Vec::new();
    let mut any_gold = false;
    for st in corpus_sentences(corpus)? {
        let hyp = segmenter(&st)?;
        let predictions = hyp
            .spans()
            .iter()
            .map(|&(a, b)| classifier(&st, a, b))
            .collect::<Result<Vec<_>>>()?;
        let gold_utts: Vec<_> = st
            .sentence
            .utterances
            .iter()
            .map(|&i| &corpus.utterances[i])
            .collect();
        let gold_labeled = gold_utts
            .iter()
            .all(|u| u.speech_act.is_some() && u.target.is_some());
        if gold_labeled {
            any_gold = true;
            sa.add(segmentation_accuracy(&st.segmentation, &hyp)?);
            for task in HeadTask::ALL {
                let Some(hyp_labels) = predictions
                    .iter()
                    .map(|p| p.label(task))
                    .collect::<Option<Vec<_>>>()
                else {
                    continue;
                };
                let gold: Vec<usize> = gold_utts
                    .iter()
                    .map(|u| task.gold(u).expect("labeled"))
                    .collect();
                let m = joint_accuracy(&st.segmentation, &gold, &hyp, &hyp_labels)?;
                match joint.iter_mut().find(|(t, _)| *t == task) {
                    Some((_, acc)) => acc.add(m),
                    None => joint.push((task, m)),
                }
            }
        }
        sentences.push(CascadeSentence {
            doc_id: st.sentence.doc_id.clone(),
            sent_id: st.sentence.sent_id,
            tokens: st.tokens.clone(),
            segmentation: hyp,
            predictions,
        });
    }
    Ok(CascadeReport {
        sentences,
        segmentation: any_gold.then_some(sa),
        joint,
    })
}

/// CRF segmentation followed by span classification. The speaker of a
/// sentence is taken from its first utterance.
pub fn cascade(
    crf: &CrfModel,
    model: &Model,
    corpus: &Corpus,
    source: &EmbeddingSource,
) -> Result<CascadeReport> {
    cascade_with(
        corpus,
        |st| segment_sentence(crf, &st.tokens, st.pos.as_deref(), st.dep.as_deref()),
        |st, a, b| {
            let speaker = corpus.utterances[st.sentence.utterances[0]].speaker;
            let vectors = match model.dims {
                crate::classify::InputDims::Bow { .. } => None,
                crate::classify::InputDims::Embedding { .. } => Some(embed_span(
                    source,
                    &st.sentence.doc_id,
                    st.sentence.sent_id,
                    &st.tokens,
                    a,
                    b,
                )?),
            };
            let ex = model.prepare_tokens(&st.tokens[a..b], vectors, speaker, [None, None])?;
            model.predict_example(&ex)
        },
    )
}
