use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold count.
    pub support: usize,
    /// Whether the class occurs in gold or predictions; absent classes
    /// are excluded from the macro average.
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub classes: Vec<String>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScore>,
    /// `confusion[gold][pred]`
    pub confusion: Vec<Vec<usize>>,
    pub segmentation_accuracy: Option<f64>,
    pub joint_accuracy: Option<f64>,
}

/// Accuracy, per-class precision / recall / F1 (with 0/0 := 0), macro-F1
/// over the classes present in gold or predictions, and the confusion
/// matrix. Labels are indices into `classes`.
pub fn accuracy_macro_f1(
    gold: &[usize],
    pred: &[usize],
    classes: &[&str],
) -> Result<MetricsReport> {
    if gold.len() != pred.len() {
        return Err(Error::Dimension(format!(
            "{} gold labels vs {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Empty("no labels to evaluate".into()));
    }
    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&g, &p) in gold.iter().zip(pred) {
        if g >= k || p >= k {
            return Err(Error::InvalidArgument(format!("label outside {k} classes")));
        }
        confusion[g][p] += 1;
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let per_class: Vec<ClassScore> = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let gold_c: usize = confusion[c].iter().sum();
            let pred_c: usize = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, pred_c);
            let recall = ratio(tp, gold_c);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                name: classes[c].to_string(),
                precision,
                recall,
                f1,
                support: gold_c,
                present: gold_c + pred_c > 0,
            }
        })
        .collect();
    let present: Vec<f64> = per_class
        .iter()
        .filter(|c| c.present)
        .map(|c| c.f1)
        .collect();
    Ok(MetricsReport {
        classes: classes.iter().map(|c| c.to_string()).collect(),
        accuracy: correct as f64 / gold.len() as f64,
        macro_f1: present.iter().sum::<f64>() / present.len() as f64,
        per_class,
        confusion,
        segmentation_accuracy: None,
        joint_accuracy: None,
    })
}

impl MetricsReport {
    /// Flat `key<TAB>value` report.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "accuracy\t{:.6}", self.accuracy);
        let _ = writeln!(out, "macro_f1\t{:.6}", self.macro_f1);
        if let Some(sa) = self.segmentation_accuracy {
            let _ = writeln!(out, "segmentation_accuracy\t{sa:.6}");
        }
        if let Some(ja) = self.joint_accuracy {
            let _ = writeln!(out, "joint_accuracy\t{ja:.6}");
        }
        for c in &self.per_class {
            let _ = writeln!(out, "f1.{}\t{:.6}", c.name, c.f1);
            let _ = writeln!(out, "precision.{}\t{:.6}", c.name, c.precision);
            let _ = writeln!(out, "recall.{}\t{:.6}", c.name, c.recall);
            let _ = writeln!(out, "support.{}\t{}", c.name, c.support);
        }
        out
    }

    /// Confusion matrix as CSV, gold classes as rows.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for c in &self.classes {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (name, row) in self.classes.iter().zip(&self.confusion) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}
