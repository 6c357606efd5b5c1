//! Per-token input vectors from static word tables or contextual
//! per-utterance matrices.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::{Corpus, Utterance};
use crate::error::{Error, Result};

pub const CTXEMB_MAGIC: &str = "CTXEMB v1";

/// Word table with lowercased keys; unknown words embed as zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticEmbeddings {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
    zero: Vec<f64>,
}

impl StaticEmbeddings {
    pub fn new(dim: usize) -> StaticEmbeddings {
        StaticEmbeddings {
            dim,
            table: HashMap::new(),
            zero: vec![0.0; dim],
        }
    }

    /// Adds a row unless the lowercased word is already present.
    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector of {} for dim {}",
                vector.len(),
                self.dim
            )));
        }
        self.table.entry(word.to_lowercase()).or_insert(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.table.contains_key(&word.to_lowercase())
    }

    pub fn lookup(&self, word: &str) -> &[f64] {
        self.table.get(&word.to_lowercase()).unwrap_or(&self.zero)
    }

    /// Rows sorted by word, `word v1 … vd` per line.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.table.keys().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            for v in &self.table[w] {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }
}

fn parse_floats(fields: &[&str], context: &str, line: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(context, line, format!("bad value {s:?}")))
        })
        .collect()
}

pub fn parse_static(text: &str, context: &str) -> Result<StaticEmbeddings> {
    let mut table: Option<StaticEmbeddings> = None;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::parse(
                context,
                ln,
                "expected a word followed by values",
            ));
        }
        let values = parse_floats(&fields[1..], context, ln)?;
        let table = table.get_or_insert_with(|| StaticEmbeddings::new(values.len()));
        if values.len() != table.dim {
            return Err(Error::parse(
                context,
                ln,
                format!("{} values, expected {}", values.len(), table.dim),
            ));
        }
        table.insert(fields[0], values)?;
    }
    table.ok_or_else(|| Error::Empty(format!("{context}: no embedding rows")))
}

pub fn load_static(path: impl AsRef<Path>) -> Result<StaticEmbeddings> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_static(&text, &path.display().to_string())
}

/// Token matrices keyed by `(doc_id, sent_id, utt_index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualEmbeddings {
    dim: usize,
    blocks: HashMap<(String, u32, u32), Vec<Vec<f64>>>,
    order: Vec<(String, u32, u32)>,
}

impl ContextualEmbeddings {
    pub fn new(dim: usize) -> ContextualEmbeddings {
        ContextualEmbeddings {
            dim,
            blocks: HashMap::new(),
            order: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn insert(
        &mut self,
        doc_id: &str,
        sent_id: u32,
        utt_index: u32,
        rows: Vec<Vec<f64>>,
    ) -> Result<()> {
        if let Some(r) = rows.iter().find(|r| r.len() != self.dim) {
            return Err(Error::Dimension(format!(
                "row of {} for dim {}",
                r.len(),
                self.dim
            )));
        }
        let key = (doc_id.to_string(), sent_id, utt_index);
        if self.blocks.insert(key.clone(), rows).is_some() {
            return Err(Error::Corpus(format!(
                "duplicate block {doc_id} {sent_id} {utt_index}"
            )));
        }
        self.order.push(key);
        Ok(())
    }

    pub fn block(&self, doc_id: &str, sent_id: u32, utt_index: u32) -> Result<&[Vec<f64>]> {
        self.blocks
            .get(&(doc_id.to_string(), sent_id, utt_index))
            .map(Vec::as_slice)
            .ok_or_else(|| {
                Error::MissingEmbedding(format!(
                    "no contextual block for {doc_id} {sent_id} {utt_index}"
                ))
            })
    }

    /// Rows of a whole sentence: its utterance blocks concatenated in
    /// `utt_index` order from 0.
    pub fn sentence_rows(&self, doc_id: &str, sent_id: u32) -> Result<Vec<&[f64]>> {
        let mut rows = Vec::new();
        let mut utt = 0;
        while let Some(block) = self.blocks.get(&(doc_id.to_string(), sent_id, utt)) {
            rows.extend(block.iter().map(Vec::as_slice));
            utt += 1;
        }
        if utt == 0 {
            return Err(Error::MissingEmbedding(format!(
                "no contextual blocks for sentence {doc_id} {sent_id}"
            )));
        }
        Ok(rows)
    }

    /// Every utterance of `corpus` has a block with one row per token.
    pub fn check_coverage(&self, corpus: &Corpus) -> Result<()> {
        for u in &corpus.utterances {
            let block = self.block(&u.doc_id, u.sent_id, u.utt_index)?;
            if block.len() != u.tokens.len() {
                return Err(Error::Corpus(format!(
                    "sentence {} {} utterance {}: {} tokens in corpus but {} embedding rows",
                    u.doc_id,
                    u.sent_id,
                    u.utt_index,
                    u.tokens.len(),
                    block.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{CTXEMB_MAGIC} dim={}\n", self.dim);
        for key in &self.order {
            let rows = &self.blocks[key];
            let _ = writeln!(out, "# {} {} {} {}", key.0, key.1, key.2, rows.len());
            for row in rows {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn parse_contextual(text: &str, context: &str) -> Result<ContextualEmbeddings> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (ln, header) = lines
        .next()
        .ok_or_else(|| Error::Empty(format!("{context}: empty contextual embedding file")))?;
    let dim = header
        .strip_prefix(CTXEMB_MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("dim="))
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::parse(context, ln, format!("expected `{CTXEMB_MAGIC} dim=<d>`")))?;
    let mut emb = ContextualEmbeddings::new(dim);
    while let Some((ln, line)) = lines.next() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "#" {
            return Err(Error::parse(
                context,
                ln,
                "expected `# <doc_id> <sent_id> <utt_index> <n_tokens>`",
            ));
        }
        let num = |s: &str| {
            s.parse::<u32>()
                .map_err(|_| Error::parse(context, ln, format!("bad integer {s:?}")))
        };
        let (sent, utt, n) = (num(fields[2])?, num(fields[3])?, num(fields[4])? as usize);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let (rln, row) = lines.next().ok_or_else(|| {
                Error::parse(
                    context,
                    ln,
                    format!("block ends after {} of {n} rows", rows.len()),
                )
            })?;
            let fields: Vec<&str> = row.split_whitespace().collect();
            let values = parse_floats(&fields, context, rln)?;
            if values.len() != dim {
                return Err(Error::parse(
                    context,
                    rln,
                    format!("{} values, expected {dim}", values.len()),
                ));
            }
            rows.push(values);
        }
        emb.insert(fields[1], sent, utt, rows)
            .map_err(|e| Error::parse(context, ln, e.to_string()))?;
    }
    Ok(emb)
}

/// Loads a CTXEMB file and checks it against every utterance of `corpus`.
pub fn load_contextual(path: impl AsRef<Path>, corpus: &Corpus) -> Result<ContextualEmbeddings> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let emb = parse_contextual(&text, &path.display().to_string())?;
    emb.check_coverage(corpus)?;
    Ok(emb)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingSource {
    Bow,
    Static(StaticEmbeddings),
    Contextual(ContextualEmbeddings),
}

impl EmbeddingSource {
    /// Vector width, `None` for bag-of-words.
    pub fn dim(&self) -> Option<usize> {
        match self {
            EmbeddingSource::Bow => None,
            EmbeddingSource::Static(s) => Some(s.dim()),
            EmbeddingSource::Contextual(c) => Some(c.dim()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EmbeddingSource::Bow => "bow",
            EmbeddingSource::Static(_) => "static",
            EmbeddingSource::Contextual(_) => "contextual",
        }
    }
}

/// Parses `bow`, `static:<path>` or `ctx:<path>`; contextual files are
/// checked against every corpus in `corpora`.
pub fn load_source(spec: &str, corpora: &[&Corpus]) -> Result<EmbeddingSource> {
    match spec.split_once(':') {
        None if spec == "bow" => Ok(EmbeddingSource::Bow),
        Some(("static", path)) => Ok(EmbeddingSource::Static(load_static(path)?)),
        Some(("ctx", path)) => {
            let path = Path::new(path);
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let emb = parse_contextual(&text, &path.display().to_string())?;
            for c in corpora {
                emb.check_coverage(c)?;
            }
            Ok(EmbeddingSource::Contextual(emb))
        }
        _ => Err(Error::Config(format!(
            "embedding source {spec:?} is not `bow`, `static:<path>` or `ctx:<path>`"
        ))),
    }
}

/// One vector per token of `utterance`.
pub fn embed(source: &EmbeddingSource, utterance: &Utterance) -> Result<Vec<Vec<f64>>> {
    match source {
        EmbeddingSource::Bow => Err(Error::InvalidArgument(
            "bag-of-words source has no token vectors".into(),
        )),
        EmbeddingSource::Static(s) => Ok(utterance
            .tokens
            .iter()
            .map(|t| s.lookup(t).to_vec())
            .collect()),
        EmbeddingSource::Contextual(c) => {
            let block = c.block(&utterance.doc_id, utterance.sent_id, utterance.utt_index)?;
            if block.len() != utterance.tokens.len() {
                return Err(Error::Dimension(format!(
                    "{} {} {}: {} rows for {} tokens",
                    utterance.doc_id,
                    utterance.sent_id,
                    utterance.utt_index,
                    block.len(),
                    utterance.tokens.len()
                )));
            }
            Ok(block.to_vec())
        }
    }
}

/// Vectors for tokens `start..end` of a sentence, given the sentence's
/// full token list.
pub fn embed_span(
    source: &EmbeddingSource,
    doc_id: &str,
    sent_id: u32,
    sentence_tokens: &[String],
    start: usize,
    end: usize,
) -> Result<Vec<Vec<f64>>> {
    if start >= end || end > sentence_tokens.len() {
        return Err(Error::InvalidArgument(format!(
            "span {start}..{end} outside a {}-token sentence",
            sentence_tokens.len()
        )));
    }
    match source {
        EmbeddingSource::Bow => Err(Error::InvalidArgument(
            "bag-of-words source has no token vectors".into(),
        )),
        EmbeddingSource::Static(s) => Ok(sentence_tokens[start..end]
            .iter()
            .map(|t| s.lookup(t).to_vec())
            .collect()),
        EmbeddingSource::Contextual(c) => {
            let rows = c.sentence_rows(doc_id, sent_id)?;
            if rows.len() != sentence_tokens.len() {
                return Err(Error::Dimension(format!(
                    "sentence {doc_id} {sent_id}: {} rows for {} tokens",
                    rows.len(),
                    sentence_tokens.len()
                )));
            }
            Ok(rows[start..end].iter().map(|r| r.to_vec()).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, CorpusKind};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn static_loading() {
        let e = parse_static("the 1 2 3\nDog 0.5 -1 2e-1\n", "t").unwrap();
        assert_eq!((e.len(), e.dim()), (2, 3));
        assert_eq!(e.lookup("dog"), &[0.5, -1.0, 0.2]);
        assert_eq!(e.lookup("THE"), &[1.0, 2.0, 3.0]);
        assert_eq!(e.lookup("cat"), &[0.0; 3]);
        let err = parse_static("a 1 2 3\nb 1 2\n", "t")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(parse_static("\n\n", "t").is_err());
        assert!(parse_static("a 1 x\n", "t").is_err());
    }

    #[test]
    fn static_embed_in_order() {
        let e = EmbeddingSource::Static(parse_static("a 1 0\nb 0 1\n", "t").unwrap());
        let corpus = parse_corpus(
            r#"{"doc_id":"d","sent_id":0,"utt_index":0,"speaker":"Labor","text":"a zz b","tokens":["a","zz","b"],"speech_act":"assertive","target":"None"}"#,
            CorpusKind::Labeled,
            "t",
        )
        .unwrap();
        let rows = embed(&e, &corpus.utterances[0]).unwrap();
        assert_eq!(rows, vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]]);
    }

    fn two_utterance_corpus() -> Corpus {
        let lines = [
            r#"{"doc_id":"d1","sent_id":3,"utt_index":0,"speaker":"Labor","text":"we will","tokens":["we","will"],"speech_act":"assertive","target":"None"}"#,
            r#"{"doc_id":"d1","sent_id":3,"utt_index":1,"speaker":"Labor","text":"act now .","tokens":["act","now","."],"speech_act":"assertive","target":"None"}"#,
        ];
        parse_corpus(&lines.join("\n"), CorpusKind::Labeled, "t").unwrap()
    }

    fn ctx_file(rows_second: usize) -> String {
        let mut s = String::from("CTXEMB v1 dim=2\n# d1 3 0 2\n0 0\n1 1\n");
        let _ = writeln!(s, "# d1 3 1 {rows_second}");
        for k in 0..rows_second {
            let _ = writeln!(s, "{} {}", k + 2, k + 2);
        }
        s
    }

    #[test]
    fn contextual_round_trip_and_slicing() {
        let corpus = two_utterance_corpus();
        let c = parse_contextual(&ctx_file(3), "t").unwrap();
        c.check_coverage(&corpus).unwrap();
        assert_eq!(parse_contextual(&c.to_text(), "t").unwrap(), c);
        let src = EmbeddingSource::Contextual(c);
        let second = embed(&src, &corpus.utterances[1]).unwrap();
        assert_eq!(second[0], vec![2.0, 2.0]);
        let tokens = toks("we will act now .");
        let span = embed_span(&src, "d1", 3, &tokens, 1, 4).unwrap();
        assert_eq!(span, vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]);
        assert!(embed_span(&src, "d1", 4, &tokens, 0, 1).is_err());
        assert!(embed_span(&src, "d1", 3, &tokens, 3, 6).is_err());
    }

    #[test]
    fn contextual_mismatch_names_the_sentence() {
        let corpus = two_utterance_corpus();
        let c = parse_contextual(&ctx_file(2), "t").unwrap();
        let err = c.check_coverage(&corpus).unwrap_err().to_string();
        assert!(err.contains("d1 3"), "{err}");
        let missing = parse_contextual("CTXEMB v1 dim=2\n# d1 3 0 2\n0 0\n1 1\n", "t").unwrap();
        assert!(missing.check_coverage(&corpus).is_err());
        assert!(parse_contextual("CTXEMB v1 dim=2\n# d1 3 0 2\n0 0\n", "t").is_err());
        assert!(parse_contextual("CTXEMB v2 dim=2\n", "t").is_err());
        assert!(parse_contextual("CTXEMB v1 dim=2\n# d1 3 0 1\n0 0 0\n", "t").is_err());
    }
}
