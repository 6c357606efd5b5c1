//! Tokenization, word shapes, CRF indicator features and bag-of-words
//! vectors.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Characters split off the edges of a whitespace-delimited chunk.
fn is_edge_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ','
            | ';'
            | ':'
            | '!'
            | '?'
            | '"'
            | '\''
            | '('
            | ')'
            | '['
            | ']'
            | '{'
            | '}'
            | '…'
            | '“'
            | '”'
            | '‘'
            | '’'
    )
}

/// Whitespace tokenization with leading and trailing punctuation detached.
/// Internal symbols (`$`, `%`, hyphens, apostrophes, digits) stay attached.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_edge_punct(chars[start]) {
            start += 1;
        }
        while end > start && is_edge_punct(chars[end - 1]) {
            end -= 1;
        }
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    out
}

/// Maps uppercase to `X`, lowercase to `x`, digits to `d` and keeps other
/// characters, then truncates runs of identical shape characters to two.
pub fn word_shape(token: &str) -> Result<String> {
    if token.is_empty() {
        return Err(Error::InvalidArgument(
            "word_shape of an empty token".into(),
        ));
    }
    let mut shape = String::with_capacity(token.len());
    let mut prev: Option<char> = None;
    let mut run = 0;
    for c in token.chars() {
        let s = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if Some(s) == prev {
            run += 1;
        } else {
            prev = Some(s);
            run = 1;
        }
        if run <= 2 {
            shape.push(s);
        }
    }
    Ok(shape)
}

pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";

/// Relative-position quartile (1..=4) of token `i` in a sentence of `len`.
pub fn position_quartile(i: usize, len: usize) -> usize {
    (4 * i / len.max(1) + 1).min(4)
}

/// Indicator feature names for token `i`: lowercased token, word shape and
/// the optional POS / dependency columns for offsets -1, 0 and +1, plus the
/// relative-position quartile.
pub fn crf_features(
    tokens: &[String],
    pos: Option<&[String]>,
    dep: Option<&[String]>,
    i: usize,
) -> Result<Vec<String>> {
    let n = tokens.len();
    if i >= n {
        return Err(Error::InvalidArgument(format!(
            "token index {i} out of range for {n} tokens"
        )));
    }
    let mut feats = Vec::with_capacity(12);
    for offset in [-1isize, 0, 1] {
        let tag = match offset {
            -1 => "-1",
            0 => "0",
            _ => "+1",
        };
        let j = i as isize + offset;
        if j < 0 {
            feats.push(format!("tok[{tag}]={BOS}"));
            continue;
        }
        if j as usize >= n {
            feats.push(format!("tok[{tag}]={EOS}"));
            continue;
        }
        let j = j as usize;
        let tok = &tokens[j];
        feats.push(format!("tok[{tag}]={}", tok.to_lowercase()));
        if !tok.is_empty() {
            feats.push(format!("shape[{tag}]={}", word_shape(tok)?));
        }
        if let Some(pos) = pos {
            feats.push(format!("pos[{tag}]={}", pos[j]));
        }
        if let Some(dep) = dep {
            feats.push(format!("dep[{tag}]={}", dep[j]));
        }
    }
    feats.push(format!("relpos=Q{}", position_quartile(i, n)));
    Ok(feats)
}

/// Sparse feature vector: `(id, value)` pairs sorted by id, no zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn from_counts(counts: BTreeMap<usize, f64>) -> FeatureVector {
        FeatureVector {
            entries: counts.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    /// Binary indicators; duplicated ids collapse to one entry of weight 1.
    pub fn indicators(ids: impl IntoIterator<Item = usize>) -> FeatureVector {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        FeatureVector {
            entries: ids.into_iter().map(|id| (id, 1.0)).collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> f64 {
        self.entries
            .binary_search_by_key(&id, |&(i, _)| i)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Feature string <-> dense id map. Id 0 is reserved for unknown features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDictionary {
    names: Vec<String>,
    ids: HashMap<String, usize>,
    frozen: bool,
}

impl Default for FeatureDictionary {
    fn default() -> Self {
        FeatureDictionary::new()
    }
}

impl FeatureDictionary {
    pub const UNK: usize = 0;
    pub const UNK_NAME: &'static str = "<UNK>";

    pub fn new() -> FeatureDictionary {
        let mut ids = HashMap::new();
        ids.insert(Self::UNK_NAME.to_string(), Self::UNK);
        FeatureDictionary {
            names: vec![Self::UNK_NAME.to_string()],
            ids,
            frozen: false,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    /// Id of a known feature, or [`Self::UNK`].
    pub fn lookup(&self, feature: &str) -> usize {
        self.ids.get(feature).copied().unwrap_or(Self::UNK)
    }

    /// Adds unseen features while unfrozen; behaves like `lookup` once frozen.
    pub fn intern(&mut self, feature: &str) -> usize {
        if let Some(&id) = self.ids.get(feature) {
            return id;
        }
        if self.frozen {
            return Self::UNK;
        }
        let id = self.names.len();
        self.names.push(feature.to_string());
        self.ids.insert(feature.to_string(), id);
        id
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{id}\t{}", escape(name));
        }
        out
    }

    /// Parses the `id<TAB>feature` text form; the result is frozen.
    pub fn from_text(text: &str) -> Result<FeatureDictionary> {
        let mut names = Vec::new();
        let mut ids = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (id, name) = line.split_once('\t').ok_or_else(|| {
                Error::parse("feature dictionary", i + 1, "expected id<TAB>feature")
            })?;
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse("feature dictionary", i + 1, format!("bad id {id:?}")))?;
            if id != names.len() {
                return Err(Error::parse(
                    "feature dictionary",
                    i + 1,
                    format!(
                        "ids must be dense and ordered, expected {} got {id}",
                        names.len()
                    ),
                ));
            }
            let name = unescape(name);
            if ids.insert(name.clone(), id).is_some() {
                return Err(Error::parse(
                    "feature dictionary",
                    i + 1,
                    "duplicate feature",
                ));
            }
            names.push(name);
        }
        if names.first().map(String::as_str) != Some(Self::UNK_NAME) {
            return Err(Error::parse("feature dictionary", 1, "id 0 must be <UNK>"));
        }
        Ok(FeatureDictionary {
            names,
            ids,
            frozen: true,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FeatureDictionary> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FeatureDictionary::from_text(&text)
    }

    /// Term-frequency vector of lowercased unigrams using existing ids only.
    pub fn bow(&self, tokens: &[String]) -> FeatureVector {
        let mut counts = BTreeMap::new();
        for t in tokens {
            *counts.entry(self.lookup(&t.to_lowercase())).or_insert(0.0) += 1.0;
        }
        FeatureVector::from_counts(counts)
    }

    /// Indicator vector over feature names, interning while unfrozen.
    pub fn indicators(&mut self, names: &[String]) -> FeatureVector {
        FeatureVector::indicators(names.iter().map(|n| self.intern(n)))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Term-frequency vector of lowercased unigrams. Unseen tokens are added
/// to an unfrozen dictionary and map to the unknown id otherwise.
pub fn bow_vector(tokens: &[String], dict: &mut FeatureDictionary) -> FeatureVector {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(dict.intern(&t.to_lowercase())).or_insert(0.0) += 1.0;
    }
    FeatureVector::from_counts(counts)
}
