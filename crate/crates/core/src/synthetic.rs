//! Seeded synthetic campaign corpora with known structure.
//!
//! Each labeled utterance carries speech-act cue words drawn with Zipf
//! frequencies from a per-class list, one target cue and some filler.
//! A configurable share of utterances replaces the party cue with a
//! first-person cue whose target is the document's speaker, so it can
//! only be resolved through speaker meta-data. Sentences hold one to
//! three utterances and every non-initial utterance opens with a
//! boundary cue word that appears nowhere else.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{Corpus, CorpusKind, Party, SpeechAct, Utterance};
use crate::embeddings::StaticEmbeddings;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub labeled_utterances: usize,
    pub unlabeled_utterances: usize,
    pub utterances_per_document: usize,
    /// Share of utterances whose target is the speaker, cued only by a
    /// first-person word.
    pub speaker_only_fraction: f64,
    pub cues_per_class: usize,
    pub cues_per_utterance: usize,
    pub zipf_exponent: f64,
    pub filler_vocabulary: usize,
    pub max_filler: usize,
    pub embedding_dim: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 0,
            labeled_utterances: 2000,
            unlabeled_utterances: 10_000,
            utterances_per_document: 10,
            speaker_only_fraction: 0.0,
            cues_per_class: 15,
            cues_per_utterance: 2,
            zipf_exponent: 1.0,
            filler_vocabulary: 200,
            max_filler: 4,
            embedding_dim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub labeled: Corpus,
    pub unlabeled: Corpus,
    /// Random Gaussian vectors for every generated word.
    pub embeddings: StaticEmbeddings,
}

pub const BOUNDARY_CUES: [&str; 3] = ["whereas", "meanwhile", "moreover"];
const SELF_CUES: [&str; 3] = ["we", "our", "us"];

fn speech_act_cue(class: SpeechAct, k: usize) -> String {
    format!("sa{}w{k}", class.index())
}

fn target_cue(party: Party, k: usize) -> String {
    match party {
        Party::Labor => format!("lab{k}"),
        Party::Liberal => format!("lib{k}"),
        Party::None => format!("gen{k}"),
    }
}

const TARGET_CUES: usize = 5;

fn filler(k: usize) -> String {
    format!("f{k}")
}

struct Generator<'c> {
    config: &'c SyntheticConfig,
    rng: ChaCha8Rng,
    zipf: WeightedIndex<f64>,
}

impl Generator<'_> {
    fn utterance_tokens(
        &mut self,
        act: SpeechAct,
        target: Party,
        speaker: Option<Party>,
        self_cue: bool,
    ) -> Vec<String> {
        let mut tokens = Vec::new();
        for _ in 0..self.config.cues_per_utterance {
            let k = self.zipf.sample(&mut self.rng);
            tokens.push(speech_act_cue(act, k));
        }
        if self_cue && speaker.is_some() {
            tokens.push(SELF_CUES[self.rng.gen_range(0..SELF_CUES.len())].to_string());
        } else {
            tokens.push(target_cue(target, self.rng.gen_range(0..TARGET_CUES)));
        }
        for _ in 0..self.rng.gen_range(1..=self.config.max_filler.max(1)) {
            tokens.push(filler(self.rng.gen_range(0..self.config.filler_vocabulary)));
        }
        tokens.shuffle(&mut self.rng);
        tokens
    }

    fn labeled_utterance(&mut self, speaker: Party) -> (SpeechAct, Party, Vec<String>) {
        let act = SpeechAct::ALL[self.rng.gen_range(0..SpeechAct::COUNT)];
        let self_cue = self
            .rng
            .gen_bool(self.config.speaker_only_fraction.clamp(0.0, 1.0));
        let target = if self_cue {
            speaker
        } else {
            Party::ALL[self.rng.gen_range(0..Party::COUNT)]
        };
        let tokens = self.utterance_tokens(act, target, Some(speaker), self_cue);
        (act, target, tokens)
    }

    fn labeled(&mut self) -> Result<Corpus> {
        let n = self.config.labeled_utterances;
        let per_doc = self.config.utterances_per_document.max(1);
        let mut utterances = Vec::with_capacity(n);
        let mut doc = 0;
        while utterances.len() < n {
            let doc_id = format!("doc{doc:04}");
            let speaker = if self.rng.gen_bool(0.5) {
                Party::Labor
            } else {
                Party::Liberal
            };
            let doc_len = per_doc.min(n - utterances.len());
            let mut in_doc = 0;
            let mut sent_id = 0;
            while in_doc < doc_len {
                let sentence_len =
                    [1, 1, 1, 2, 2, 3][self.rng.gen_range(0..6)].min(doc_len - in_doc);
                for utt in 0..sentence_len {
                    let (act, target, mut tokens) = self.labeled_utterance(speaker);
                    if utt > 0 {
                        tokens.insert(
                            0,
                            BOUNDARY_CUES[self.rng.gen_range(0..BOUNDARY_CUES.len())].to_string(),
                        );
                    }
                    utterances.push(Utterance {
                        doc_id: doc_id.clone(),
                        sent_id,
                        utt_index: utt as u32,
                        text: tokens.join(" "),
                        tokens,
                        speaker: Some(speaker),
                        speech_act: Some(act),
                        target: Some(target),
                        pos: None,
                        dep: None,
                    });
                }
                in_doc += sentence_len;
                sent_id += 1;
            }
            doc += 1;
        }
        Corpus::new(utterances, CorpusKind::Labeled)
    }

    /// One utterance per sentence, speaker unknown, labels dropped.
    fn unlabeled(&mut self) -> Result<Corpus> {
        let per_doc = self.config.utterances_per_document.max(1);
        let utterances = (0..self.config.unlabeled_utterances)
            .map(|i| {
                let speaker = if self.rng.gen_bool(0.5) {
                    Party::Labor
                } else {
                    Party::Liberal
                };
                let (_, _, tokens) = self.labeled_utterance(speaker);
                Utterance {
                    doc_id: format!("hist{:05}", i / per_doc),
                    sent_id: (i % per_doc) as u32,
                    utt_index: 0,
                    text: tokens.join(" "),
                    tokens,
                    speaker: None,
                    speech_act: None,
                    target: None,
                    pos: None,
                    dep: None,
                }
            })
            .collect();
        Corpus::new(utterances, CorpusKind::Unlabeled)
    }

    fn embeddings(&mut self) -> Result<StaticEmbeddings> {
        let c = self.config;
        let mut words: Vec<String> = Vec::new();
        for act in SpeechAct::ALL {
            words.extend((0..c.cues_per_class).map(|k| speech_act_cue(act, k)));
        }
        for party in Party::ALL {
            words.extend((0..TARGET_CUES).map(|k| target_cue(party, k)));
        }
        words.extend(SELF_CUES.iter().map(|s| s.to_string()));
        words.extend(BOUNDARY_CUES.iter().map(|s| s.to_string()));
        words.extend((0..c.filler_vocabulary).map(filler));
        let mut table = StaticEmbeddings::new(c.embedding_dim);
        for w in words {
            let v: Vec<f64> = (0..c.embedding_dim)
                .map(|_| self.rng.sample(StandardNormal))
                .collect();
            table.insert(&w, v)?;
        }
        Ok(table)
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    let weights: Vec<f64> = (0..config.cues_per_class.max(1))
        .map(|k| 1.0 / ((k + 1) as f64).powf(config.zipf_exponent))
        .collect();
    let mut g = Generator {
        config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        zipf: WeightedIndex::new(weights).expect("positive Zipf weights"),
    };
    let embeddings = g.embeddings()?;
    let labeled = g.labeled()?;
    let unlabeled = g.unlabeled()?;
    Ok(SyntheticData {
        labeled,
        unlabeled,
        embeddings,
    })
}
