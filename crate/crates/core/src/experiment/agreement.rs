use std::collections::HashMap;
use std::fmt::Write as _;

use crate::classify::HeadTask;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{cohens_kappa, krippendorff_alpha_boundaries, per_class_kappa};
use crate::segment::{corpus_sentences, Segmentation};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAgreement {
    pub task: HeadTask,
    /// Spans both annotators delimited identically.
    pub matched_spans: usize,
    pub kappa: f64,
    /// One-vs-rest kappa per class with its count in either annotation.
    pub per_class: Vec<(String, f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub sentences: usize,
    pub spans: (usize, usize),
    pub boundary_alpha: f64,
    pub labels: Vec<ClassAgreement>,
}

impl AgreementReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sentences\t{}", self.sentences);
        let _ = writeln!(out, "spans\t{}\t{}", self.spans.0, self.spans.1);
        let _ = writeln!(out, "boundary_alpha\t{:.6}", self.boundary_alpha);
        for l in &self.labels {
            let _ = writeln!(
                out,
                "kappa.{}\t{:.6}\t{} spans",
                l.task, l.kappa, l.matched_spans
            );
            for (name, k, n) in &l.per_class {
                let _ = writeln!(out, "kappa.{}.{name}\t{k:.6}\t{n}", l.task);
            }
        }
        out
    }
}

/// Agreement between two annotations of the same sentences: boundary
/// alpha over inter-token gaps, and label kappa over exactly matched spans.
pub fn agreement_report(first: &Corpus, second: &Corpus) -> Result<AgreementReport> {
    let a = corpus_sentences(first)?;
    let b = corpus_sentences(second)?;
    let index: HashMap<(&str, u32), usize> = b
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.sentence.doc_id.as_str(), s.sentence.sent_id), i))
        .collect();
    if a.len() != b.len() {
        return Err(Error::Corpus(format!(
            "annotations cover {} vs {} sentences",
            a.len(),
            b.len()
        )));
    }
    let mut seg1: Vec<Segmentation> = Vec::new();
    let mut seg2: Vec<Segmentation> = Vec::new();
    let mut labels: [(Vec<usize>, Vec<usize>); 2] = Default::default();
    for sa in &a {
        let key = (sa.sentence.doc_id.as_str(), sa.sentence.sent_id);
        let sb = index.get(&key).map(|&i| &b[i]).ok_or_else(|| {
            Error::Corpus(format!(
                "sentence {} {} missing from the second annotation",
                key.0, key.1
            ))
        })?;
        if sa.tokens != sb.tokens {
            return Err(Error::Corpus(format!(
                "sentence {} {} is tokenized differently",
                key.0, key.1
            )));
        }
        let spans_b: HashMap<(usize, usize), usize> = sb
            .segmentation
            .spans()
            .iter()
            .enumerate()
            .map(|(k, s)| (*s, k))
            .collect();
        for (k, span) in sa.segmentation.spans().iter().enumerate() {
            if let Some(&j) = spans_b.get(span) {
                let u1 = &first.utterances[sa.sentence.utterances[k]];
                let u2 = &second.utterances[sb.sentence.utterances[j]];
                for task in HeadTask::ALL {
                    if let (Some(x), Some(y)) = (task.gold(u1), task.gold(u2)) {
                        labels[task.index()].0.push(x);
                        labels[task.index()].1.push(y);
                    }
                }
            }
        }
        seg1.push(sa.segmentation.clone());
        seg2.push(sb.segmentation.clone());
    }
    let boundary_alpha = krippendorff_alpha_boundaries(&seg1, &seg2)?;
    let mut label_reports = Vec::new();
    for task in HeadTask::ALL {
        let (x, y) = &labels[task.index()];
        if x.is_empty() {
            continue;
        }
        let classes: Vec<usize> = (0..task.classes()).collect();
        let per = per_class_kappa(x, y, &classes)?;
        let names = task.class_names();
        label_reports.push(ClassAgreement {
            task,
            matched_spans: x.len(),
            kappa: cohens_kappa(x, y)?,
            per_class: classes
                .iter()
                .map(|&c| {
                    let n = x.iter().chain(y).filter(|&&l| l == c).count();
                    (names[c].to_string(), per[c], n)
                })
                .collect(),
        });
    }
    Ok(AgreementReport {
        sentences: a.len(),
        spans: (
            a.iter().map(|s| s.segmentation.spans().len()).sum(),
            b.iter().map(|s| s.segmentation.spans().len()).sum(),
        ),
        boundary_alpha,
        labels: label_reports,
    })
}
