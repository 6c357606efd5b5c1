//! Cross-view training: restricted-view student heads on the shared
//! biGRU encoder are fit to the full-view teacher's predictions on
//! unlabeled text with a KL consensus loss.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::classify::{
    drop, fit, init_model, prepare_examples, split_rng, Architecture, Body, Dense, Example, Input,
    Mode, Model, ModelConfig, TrainOutcome, UnlabeledSteps,
};
use crate::corpus::Corpus;
use crate::embeddings::EmbeddingSource;
use crate::error::{Error, Result};
use crate::tensor::{kl_divergence, AdamState, ParamSet, Tape, Tensor, Var};

const STUDENT_INIT_STREAM: u64 = 3;
const UNLABELED_ORDER_STREAM: u64 = 4;
const UNLABELED_NOISE_STREAM: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViewSpec {
    /// One student on the forward GRU's final state.
    Fwd,
    /// Two students, on the forward and on the backward final state.
    FwdBwd,
    /// The full biGRU over a copy of the input with each token vector
    /// zeroed independently with probability `rate`.
    WordDrop { rate: f64 },
}

impl ViewSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ViewSpec::WordDrop { rate } if !(0.0..1.0).contains(&rate) => Err(Error::Config(
                format!("word dropout rate {rate} outside [0, 1)"),
            )),
            _ => Ok(()),
        }
    }

    pub fn students(&self) -> usize {
        match self {
            ViewSpec::FwdBwd => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ViewSpec::Fwd => "fwd",
            ViewSpec::FwdBwd => "fwdbwd",
            ViewSpec::WordDrop { .. } => "worddrop",
        }
    }

    /// Parses `fwd`, `fwdbwd` or `worddrop` (rate 0.15).
    pub fn parse(name: &str) -> Result<ViewSpec> {
        match name {
            "fwd" => Ok(ViewSpec::Fwd),
            "fwdbwd" => Ok(ViewSpec::FwdBwd),
            "worddrop" => Ok(ViewSpec::WordDrop { rate: 0.15 }),
            other => Err(Error::UnknownLabel {
                field: "view",
                value: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiSupConfig {
    pub model: ModelConfig,
    pub view: ViewSpec,
    /// Unlabeled batches per labeled batch; fractional values accumulate.
    pub unlabeled_batch_ratio: f64,
    pub consensus_weight: f64,
}

impl SemiSupConfig {
    pub fn new(model: ModelConfig, view: ViewSpec) -> SemiSupConfig {
        SemiSupConfig {
            model,
            view,
            unlabeled_batch_ratio: 1.0,
            consensus_weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.view.validate()?;
        if self.model.architecture != Architecture::Bigru {
            return Err(Error::Config(
                "cross-view training needs the bigru architecture".into(),
            ));
        }
        if !(self.unlabeled_batch_ratio >= 0.0 && self.unlabeled_batch_ratio.is_finite()) {
            return Err(Error::Config(format!(
                "unlabeled batch ratio {} must be ≥ 0",
                self.unlabeled_batch_ratio
            )));
        }
        if !(self.consensus_weight >= 0.0 && self.consensus_weight.is_finite()) {
            return Err(Error::Config(format!(
                "consensus weight {} must be ≥ 0",
                self.consensus_weight
            )));
        }
        Ok(())
    }
}

/// Student input token vectors: a dropped copy for `worddrop`, the
/// original sequence otherwise.
pub fn make_views<R: Rng>(seq: &[Vec<f64>], view: &ViewSpec, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if seq.is_empty() {
        return Err(Error::Empty("view of an empty sequence".into()));
    }
    Ok(match *view {
        ViewSpec::WordDrop { rate } => seq
            .iter()
            .map(|row| {
                if rate > 0.0 && rng.gen::<f64>() < rate {
                    vec![0.0; row.len()]
                } else {
                    row.clone()
                }
            })
            .collect(),
        _ => seq.to_vec(),
    })
}

/// Mean over students of `KL(teacher ‖ student)`.
pub fn consensus_loss(teacher: &[f64], students: &[Vec<f64>]) -> Result<f64> {
    if students.is_empty() {
        return Err(Error::Empty("consensus over no students".into()));
    }
    let mut total = 0.0;
    for s in students {
        total += kl_divergence(teacher, s)?;
    }
    Ok(total / students.len() as f64)
}

/// Student output layers, appended after the teacher's parameters.
#[derive(Debug, Clone)]
pub(crate) struct Students {
    view: ViewSpec,
    heads: Vec<Dense>,
}

impl Students {
    pub(crate) fn init(model: &mut Model, view: ViewSpec) -> Result<Students> {
        let mut rng = split_rng(model.config.seed, STUDENT_INIT_STREAM);
        let c = model.config.primary_head().classes();
        let h = model.config.hidden_dim;
        let m = usize::from(model.config.use_meta);
        let inputs: Vec<(&str, usize)> = match view {
            ViewSpec::Fwd => vec![("fwd", h + m)],
            ViewSpec::FwdBwd => vec![("fwd", h + m), ("bwd", h + m)],
            ViewSpec::WordDrop { .. } => vec![("worddrop", model.representation_dim())],
        };
        let params: &mut ParamSet = &mut model.params;
        let heads = inputs
            .into_iter()
            .map(|(name, d)| {
                let w = params.add(format!("student.{name}.W"), Tensor::xavier(c, d, &mut rng))?;
                let b = params.add(format!("student.{name}.b"), Tensor::zeros(&[c]))?;
                Ok(Dense { w, b })
            })
            .collect::<Result<_>>()?;
        Ok(Students { view, heads })
    }

    fn dense(tape: &mut Tape, d: Dense, x: Var) -> Result<Var> {
        let (w, b) = (tape.param(d.w), tape.param(d.b));
        tape.linear(&[(w, x)], Some(b))
    }

    /// Student logits for one unlabeled example.
    pub(crate) fn logits(
        &self,
        model: &Model,
        tape: &mut Tape,
        ex: &Example,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Var>> {
        let (fwd, bwd) = match &model.body {
            Body::Bigru { fwd, bwd, .. } => (*fwd, *bwd),
            _ => {
                return Err(Error::Config(
                    "cross-view training needs the bigru architecture".into(),
                ))
            }
        };
        let rows = match &ex.input {
            Input::Seq(rows) => rows,
            Input::Bow(_) => {
                return Err(Error::InvalidArgument("students need token vectors".into()))
            }
        };
        let rate = model.config.dropout;
        let view_rows = make_views(rows, &self.view, rng)?;
        let xs: Vec<Var> = view_rows.into_iter().map(|r| tape.input(r)).collect();
        let with_meta = |tape: &mut Tape, s: Var| match model.meta_var(tape, ex.meta) {
            Some(m) => tape.concat(&[s, m]),
            None => s,
        };
        match self.view {
            ViewSpec::WordDrop { .. } => {
                let (f, b) = crate::tensor::bigru_states(tape, &xs, &fwd, &bwd)?;
                let enc = tape.concat(&[f, b]);
                let enc = drop(tape, enc, rate, &mut Mode::Train(rng))?;
                let rep = model.post_encoder(tape, enc, ex.meta)?;
                Ok(vec![Students::dense(tape, self.heads[0], rep)?])
            }
            ViewSpec::Fwd => {
                let f = fwd.run(tape, &xs, false)?;
                let f = drop(tape, f, rate, &mut Mode::Train(rng))?;
                let x = with_meta(tape, f);
                Ok(vec![Students::dense(tape, self.heads[0], x)?])
            }
            ViewSpec::FwdBwd => {
                let f = fwd.run(tape, &xs, false)?;
                let b = bwd.run(tape, &xs, true)?;
                let mut out = Vec::new();
                for (state, head) in [(f, self.heads[0]), (b, self.heads[1])] {
                    let s = drop(tape, state, rate, &mut Mode::Train(rng))?;
                    let x = with_meta(tape, s);
                    out.push(Students::dense(tape, head, x)?);
                }
                Ok(out)
            }
        }
    }

    /// Mean student KL against a constant teacher distribution.
    pub(crate) fn consensus(
        &self,
        model: &Model,
        tape: &mut Tape,
        ex: &Example,
        teacher: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<Var> {
        let logits = self.logits(model, tape, ex, rng)?;
        let w = 1.0 / logits.len() as f64;
        let mut terms = Vec::with_capacity(logits.len());
        for z in logits {
            terms.push((tape.kl_to_target(teacher, z)?, w));
        }
        tape.weighted_sum(&terms)
    }
}

struct ConsensusSteps<'a> {
    students: Students,
    unlabeled: &'a [Example],
    order: Vec<usize>,
    next: usize,
    order_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    ratio: f64,
    credit: f64,
    weight: f64,
}

impl ConsensusSteps<'_> {
    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut batch = Vec::with_capacity(size);
        while batch.len() < size.min(self.unlabeled.len()) {
            if self.next == 0 {
                self.order.shuffle(&mut self.order_rng);
            }
            batch.push(self.order[self.next]);
            self.next = (self.next + 1) % self.order.len();
        }
        batch
    }

    fn step(&mut self, model: &mut Model, adam: &mut AdamState) -> Result<()> {
        let batch = self.next_batch(model.config.batch_size);
        let task = model.config.primary_head();
        let teachers: Vec<Vec<f64>> = batch
            .iter()
            .map(|&i| {
                let p = model.predict_example(&self.unlabeled[i])?;
                Ok(p.distribution(task).expect("primary head present").to_vec())
            })
            .collect::<Result<_>>()?;
        let grads = {
            let mut tape = Tape::new(&model.params);
            let w = self.weight / batch.len() as f64;
            let mut terms = Vec::with_capacity(batch.len());
            for (&i, teacher) in batch.iter().zip(&teachers) {
                let l = self.students.consensus(
                    model,
                    &mut tape,
                    &self.unlabeled[i],
                    teacher,
                    &mut self.noise_rng,
                )?;
                terms.push((l, w));
            }
            let loss = tape.weighted_sum(&terms)?;
            if !tape.scalar(loss).is_finite() {
                return Err(Error::Diverged("non-finite consensus loss".into()));
            }
            tape.backward(loss)?
        };
        adam.update(&mut model.params, &grads)
    }
}

impl UnlabeledSteps for ConsensusSteps<'_> {
    fn after_batch(&mut self, model: &mut Model, adam: &mut AdamState) -> Result<()> {
        self.credit += self.ratio;
        while self.credit >= 1.0 {
            self.credit -= 1.0;
            self.step(model, adam)?;
        }
        Ok(())
    }
}

/// Supervised training on `labeled` interleaved with consensus steps on
/// `unlabeled`; returns the teacher with the student heads removed. With
/// a zero weight, a zero ratio or no unlabeled data this is exactly
/// supervised training.
pub fn train_semisup(
    config: &SemiSupConfig,
    labeled: &Corpus,
    val: &Corpus,
    unlabeled: &Corpus,
    source: &EmbeddingSource,
) -> Result<TrainOutcome> {
    config.validate()?;
    if labeled.is_empty() {
        return Err(Error::Empty("empty training set".into()));
    }
    let mut model = init_model(&config.model, labeled, source)?;
    let train_ex = prepare_examples(&model, labeled, source)?;
    let val_ex = prepare_examples(&model, val, source)?;
    let active = config.consensus_weight > 0.0
        && config.unlabeled_batch_ratio > 0.0
        && !unlabeled.is_empty();
    if !active {
        return fit(model, &train_ex, &val_ex, None);
    }
    let unlabeled_ex = prepare_examples(&model, unlabeled, source)?;
    let teacher_params = model.params.len();
    let students = Students::init(&mut model, config.view)?;
    let seed = config.model.seed;
    let mut steps = ConsensusSteps {
        students,
        unlabeled: &unlabeled_ex,
        order: (0..unlabeled_ex.len()).collect(),
        next: 0,
        order_rng: split_rng(seed, UNLABELED_ORDER_STREAM),
        noise_rng: split_rng(seed, UNLABELED_NOISE_STREAM),
        ratio: config.unlabeled_batch_ratio,
        credit: 0.0,
        weight: config.consensus_weight,
    };
    let mut outcome = fit(model, &train_ex, &val_ex, Some(&mut steps))?;
    outcome.model.params.truncate(teacher_params);
    Ok(outcome)
}

/// Attaches freshly initialized student heads, for gradient checks of the
/// consensus objective.
pub fn attach_students(model: &mut Model, view: ViewSpec) -> Result<StudentHeads> {
    Ok(StudentHeads(Students::init(model, view)?))
}

/// Opaque student heads attached to a model.
#[derive(Debug, Clone)]
pub struct StudentHeads(Students);

impl StudentHeads {
    /// Consensus term for one example on `tape`; `teacher` is a constant.
    pub fn consensus(
        &self,
        model: &Model,
        tape: &mut Tape,
        ex: &Example,
        teacher: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<Var> {
        self.0.consensus(model, tape, ex, teacher, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn consensus_examples() {
        let t = [0.2, 0.5, 0.3];
        assert_eq!(consensus_loss(&t, &[t.to_vec()]).unwrap(), 0.0);
        let l = consensus_loss(&[1.0, 0.0], &[vec![0.5, 0.5]]).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
        let a = kl_divergence(&t, &[0.1, 0.1, 0.8]).unwrap();
        let b = kl_divergence(&t, &[0.3, 0.3, 0.4]).unwrap();
        let mean = consensus_loss(&t, &[vec![0.1, 0.1, 0.8], vec![0.3, 0.3, 0.4]]).unwrap();
        assert!((mean - (a + b) / 2.0).abs() < 1e-12);
        assert!(consensus_loss(&t, &[vec![0.5, 0.5]]).is_err());
        assert!(consensus_loss(&t, &[]).is_err());
    }

    #[test]
    fn word_dropout_views() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let seq: Vec<Vec<f64>> = (0..1000).map(|i| vec![1.0 + i as f64, 2.0]).collect();
        assert_eq!(
            make_views(&seq, &ViewSpec::WordDrop { rate: 0.0 }, &mut rng).unwrap(),
            seq
        );
        let dropped = make_views(&seq, &ViewSpec::WordDrop { rate: 1.0 - 1e-9 }, &mut rng).unwrap();
        let zeros = dropped
            .iter()
            .filter(|r| r.iter().all(|&v| v == 0.0))
            .count();
        assert!(zeros >= 990);
        assert_eq!(make_views(&seq, &ViewSpec::Fwd, &mut rng).unwrap(), seq);
        assert!(make_views(&[], &ViewSpec::Fwd, &mut rng).is_err());
        assert_eq!(ViewSpec::FwdBwd.students(), 2);
        assert!(ViewSpec::WordDrop { rate: 1.0 }.validate().is_err());
    }
}
