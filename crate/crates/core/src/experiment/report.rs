use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::ExperimentConfig;
use crate::classify::HeadTask;
use crate::error::{Error, Result};
use crate::metrics::{paired_t_test, MetricsReport};

/// One model's test scores on one head in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub ratio: f64,
    pub model: String,
    pub task: HeadTask,
    pub train_utterances: usize,
    pub epochs: usize,
    /// Auxiliary weight actually used (selected from the grid when one is given).
    pub alpha: f64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model: String,
    pub task: HeadTask,
    pub runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    /// Mean per-class F1 across runs, in class order.
    pub class_f1_mean: Vec<(String, f64)>,
    /// Confusion counts summed over runs.
    pub confusion: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub model_a: String,
    pub model_b: String,
    pub task: HeadTask,
    pub metric: &'static str,
    pub mean_difference: f64,
    pub t: f64,
    pub p: f64,
    pub df: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<ModelSummary>,
    pub significance: Vec<SignificanceRow>,
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn model_tasks(records: &[RunRecord]) -> Vec<(String, HeadTask)> {
    let mut out: Vec<(String, HeadTask)> = Vec::new();
    for r in records {
        if !out.iter().any(|(m, t)| *m == r.model && *t == r.task) {
            out.push((r.model.clone(), r.task));
        }
    }
    out
}

fn summarize(model: &str, task: HeadTask, recs: &[&RunRecord]) -> ModelSummary {
    let acc: Vec<f64> = recs.iter().map(|r| r.report.accuracy).collect();
    let f1: Vec<f64> = recs.iter().map(|r| r.report.macro_f1).collect();
    let (accuracy_mean, accuracy_std) = mean_std(&acc);
    let (macro_f1_mean, macro_f1_std) = mean_std(&f1);
    let first = &recs[0].report;
    let class_f1_mean = first
        .classes
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let xs: Vec<f64> = recs.iter().map(|r| r.report.per_class[k].f1).collect();
            (name.clone(), mean_std(&xs).0)
        })
        .collect();
    let mut confusion = first.clone();
    for r in &recs[1..] {
        for (row, other) in confusion.confusion.iter_mut().zip(&r.report.confusion) {
            for (a, b) in row.iter_mut().zip(other) {
                *a += b;
            }
        }
    }
    ModelSummary {
        model: model.to_string(),
        task,
        runs: recs.len(),
        accuracy_mean,
        accuracy_std,
        macro_f1_mean,
        macro_f1_std,
        class_f1_mean,
        confusion,
    }
}

impl ExperimentReport {
    pub(crate) fn build(
        config: &ExperimentConfig,
        records: Vec<RunRecord>,
    ) -> Result<ExperimentReport> {
        let summaries = model_tasks(&records)
            .into_iter()
            .map(|(m, t)| {
                let recs: Vec<&RunRecord> = records
                    .iter()
                    .filter(|r| r.model == m && r.task == t)
                    .collect();
                summarize(&m, t, &recs)
            })
            .collect();
        let mut significance = Vec::new();
        for (a, b) in &config.significance {
            for task in HeadTask::ALL {
                let scores = |id: &str| -> Vec<&RunRecord> {
                    records
                        .iter()
                        .filter(|r| r.model == id && r.task == task)
                        .collect()
                };
                let (ra, rb) = (scores(a), scores(b));
                if ra.is_empty() || rb.is_empty() {
                    continue;
                }
                let metrics: [(&'static str, fn(&MetricsReport) -> f64); 2] =
                    [("accuracy", |m| m.accuracy), ("macro_f1", |m| m.macro_f1)];
                for (metric, get) in metrics {
                    let xa: Vec<f64> = ra.iter().map(|r| get(&r.report)).collect();
                    let xb: Vec<f64> = rb.iter().map(|r| get(&r.report)).collect();
                    let test = paired_t_test(&xa, &xb)?;
                    let diffs: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| x - y).collect();
                    significance.push(SignificanceRow {
                        model_a: a.clone(),
                        model_b: b.clone(),
                        task,
                        metric,
                        mean_difference: mean_std(&diffs).0,
                        t: test.t,
                        p: test.p,
                        df: test.df,
                        degenerate: test.degenerate,
                    });
                }
            }
        }
        Ok(ExperimentReport {
            records,
            summaries,
            significance,
        })
    }

    pub fn summary(&self, model: &str, task: HeadTask) -> Option<&ModelSummary> {
        self.summaries
            .iter()
            .find(|s| s.model == model && s.task == task)
    }

    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("model,task,runs,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.model,
                s.task,
                s.runs,
                s.accuracy_mean,
                s.accuracy_std,
                s.macro_f1_mean,
                s.macro_f1_std
            );
        }
        out
    }

    pub fn per_run_csv(&self) -> String {
        per_run_csv(&self.records)
    }

    pub fn significance_csv(&self) -> String {
        let mut out =
            String::from("model_a,model_b,task,metric,mean_difference,t,p,df,degenerate\n");
        for s in &self.significance {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.model_a,
                s.model_b,
                s.task,
                s.metric,
                s.mean_difference,
                s.t,
                s.p,
                s.df,
                s.degenerate
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.summaries {
            let _ = writeln!(out, "{} / {} ({} runs)", s.model, s.task, s.runs);
            let _ = writeln!(
                out,
                "  accuracy  {:.4} ± {:.4}",
                s.accuracy_mean, s.accuracy_std
            );
            let _ = writeln!(
                out,
                "  macro-F1  {:.4} ± {:.4}",
                s.macro_f1_mean, s.macro_f1_std
            );
            for (name, f1) in &s.class_f1_mean {
                let _ = writeln!(out, "    F1 {name:<28} {f1:.4}");
            }
        }
        if !self.significance.is_empty() {
            let _ = writeln!(out, "paired t-tests");
            for s in &self.significance {
                let flag = if s.degenerate { " (zero variance)" } else { "" };
                let _ = writeln!(
                    out,
                    "  {} vs {} / {} / {}: diff {:+.4}, t = {:.4}, p = {:.4}, df = {}{flag}",
                    s.model_a, s.model_b, s.task, s.metric, s.mean_difference, s.t, s.p, s.df
                );
            }
        }
        out
    }

    /// Writes `report.txt`, `summary.csv`, `per_run.csv`,
    /// `significance.csv` and one summed confusion matrix per model/head.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("report.txt"), &self.to_text())?;
        write_file(&dir.join("summary.csv"), &self.summary_csv())?;
        write_file(&dir.join("per_run.csv"), &self.per_run_csv())?;
        write_file(&dir.join("significance.csv"), &self.significance_csv())?;
        for s in &self.summaries {
            let name = format!("confusion_{}_{}.csv", s.model, s.task);
            write_file(&dir.join(name), &s.confusion.confusion_csv())?;
        }
        Ok(())
    }
}

fn per_run_csv(records: &[RunRecord]) -> String {
    let mut out =
        String::from("run,seed,ratio,model,task,train_utterances,epochs,alpha,accuracy,macro_f1\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.run,
            r.seed,
            r.ratio,
            r.model,
            r.task,
            r.train_utterances,
            r.epochs,
            r.alpha,
            r.report.accuracy,
            r.report.macro_f1
        );
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Records from the runs that finished before a failure.
pub(crate) fn write_partial(dir: &Path, records: &[RunRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("per_run.partial.csv"), &per_run_csv(records))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub model: String,
    pub task: HeadTask,
    pub runs: usize,
    pub mean_train_utterances: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub records: Vec<RunRecord>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub(crate) fn build(
        _config: &ExperimentConfig,
        ratios: &[f64],
        records: Vec<RunRecord>,
    ) -> Result<SweepReport> {
        let mut rows = Vec::new();
        for &ratio in ratios {
            let at: Vec<RunRecord> = records
                .iter()
                .filter(|r| r.ratio == ratio)
                .cloned()
                .collect();
            for (m, t) in model_tasks(&at) {
                let recs: Vec<&RunRecord> =
                    at.iter().filter(|r| r.model == m && r.task == t).collect();
                let s = summarize(&m, t, &recs);
                let sizes: Vec<f64> = recs.iter().map(|r| r.train_utterances as f64).collect();
                rows.push(SweepRow {
                    ratio,
                    model: m,
                    task: t,
                    runs: s.runs,
                    mean_train_utterances: mean_std(&sizes).0,
                    accuracy_mean: s.accuracy_mean,
                    accuracy_std: s.accuracy_std,
                    macro_f1_mean: s.macro_f1_mean,
                    macro_f1_std: s.macro_f1_std,
                });
            }
        }
        Ok(SweepReport { records, rows })
    }

    pub fn row(&self, ratio: f64, model: &str, task: HeadTask) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.ratio == ratio && r.model == model && r.task == task)
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from(
            "ratio,model,task,runs,mean_train_utterances,accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.ratio,
                r.model,
                r.task,
                r.runs,
                r.mean_train_utterances,
                r.accuracy_mean,
                r.accuracy_std,
                r.macro_f1_mean,
                r.macro_f1_std
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "ratio {:<5} {} / {}: accuracy {:.4} ± {:.4}, macro-F1 {:.4} ± {:.4} ({:.1} training utterances)",
                r.ratio,
                r.model,
                r.task,
                r.accuracy_mean,
                r.accuracy_std,
                r.macro_f1_mean,
                r.macro_f1_std,
                r.mean_train_utterances
            );
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("sweep.txt"), &self.to_text())?;
        write_file(&dir.join("sweep.csv"), &self.curve_csv())?;
        write_file(&dir.join("per_run.csv"), &per_run_csv(&self.records))
    }
}
