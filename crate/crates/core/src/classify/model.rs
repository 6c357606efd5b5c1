use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Architecture, HeadTask, LinearLoss, ModelConfig};
use crate::corpus::{Party, Utterance};
use crate::embeddings::{embed, EmbeddingSource};
use crate::error::{Error, Result};
use crate::tensor::{argmax, softmax, GruParams, ModelFile, ParamId, ParamSet, Tape, Tensor, Var};
use crate::textfeat::{FeatureDictionary, FeatureVector};

/// Width of the model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputDims {
    Bow { vocab: usize },
    Embedding { dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Bow(FeatureVector),
    Seq(Vec<Vec<f64>>),
}

/// A prepared utterance: model input, speaker bit and gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Input,
    /// 0 for Labor, 1 for Liberal, 0.5 when unknown.
    pub meta: f64,
    /// Gold class per [`HeadTask::index`].
    pub labels: [Option<usize>; 2],
}

impl Example {
    pub fn label(&self, task: HeadTask) -> Option<usize> {
        self.labels[task.index()]
    }
}

/// Whether dropout is active; training draws masks from the given RNG.
pub enum Mode<'a> {
    Inference,
    Train(&'a mut ChaCha8Rng),
}

/// Logit variables per [`HeadTask::index`].
pub type HeadOutputs = [Option<Var>; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub speech_act: Option<Vec<f64>>,
    pub target: Option<Vec<f64>>,
}

impl Prediction {
    pub fn distribution(&self, task: HeadTask) -> Option<&[f64]> {
        match task {
            HeadTask::SpeechAct => self.speech_act.as_deref(),
            HeadTask::Target => self.target.as_deref(),
        }
    }

    /// Most probable class, lowest index on ties.
    pub fn label(&self, task: HeadTask) -> Option<usize> {
        self.distribution(task).map(argmax)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dense {
    pub w: ParamId,
    pub b: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Body {
    Linear,
    Mlp {
        table: ParamId,
        bias: ParamId,
        meta: Option<ParamId>,
    },
    Dan {
        hidden: Dense,
    },
    Gru {
        fwd: GruParams,
        meta_hidden: Option<Dense>,
    },
    Bigru {
        fwd: GruParams,
        bwd: GruParams,
        meta_hidden: Option<Dense>,
    },
}

/// Output layer. For `linear-bow`, `w` is a sparse `[vocab, classes]`
/// table and `meta` an optional `[classes, 1]` column; otherwise `w` is
/// `[classes, rep_dim]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Head {
    pub task: HeadTask,
    pub w: ParamId,
    pub b: ParamId,
    pub meta: Option<ParamId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub dims: InputDims,
    /// Frozen vocabulary for bag-of-words architectures.
    pub dictionary: Option<FeatureDictionary>,
    pub params: ParamSet,
    pub(crate) body: Body,
    pub(crate) heads: Vec<Head>,
}

fn dense(
    params: &mut ParamSet,
    name: &str,
    out: usize,
    inp: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Dense> {
    let w = params.add(format!("{name}.W"), Tensor::xavier(out, inp, rng))?;
    let b = params.add(format!("{name}.b"), Tensor::zeros(&[out]))?;
    Ok(Dense { w, b })
}

/// `[vocab, out]` table with the unknown-word row zeroed.
fn bow_table(
    params: &mut ParamSet,
    name: &str,
    vocab: usize,
    out: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ParamId> {
    let mut t = Tensor::xavier(vocab, out, rng);
    t.data_mut()[FeatureDictionary::UNK * out..(FeatureDictionary::UNK + 1) * out].fill(0.0);
    params.add(name, t)
}

pub(crate) fn drop(tape: &mut Tape, x: Var, rate: f64, mode: &mut Mode) -> Result<Var> {
    match mode {
        Mode::Train(rng) => tape.dropout(x, rate, &mut **rng),
        Mode::Inference => Ok(x),
    }
}

impl Model {
    /// Initializes parameters from `config.seed`: shared layers first,
    /// then the primary head, then the auxiliary head.
    pub fn build(config: &ModelConfig, dims: InputDims) -> Result<Model> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        let h = config.hidden_dim;
        let m = usize::from(config.use_meta);
        let arch = config.architecture;
        let (vocab, emb) = match (dims, arch.uses_bow()) {
            (InputDims::Bow { vocab }, true) if vocab > 0 => (vocab, 0),
            (InputDims::Embedding { dim }, false) if dim > 0 => (0, dim),
            _ => {
                return Err(Error::Config(format!(
                    "architecture {arch} cannot take input {dims:?}"
                )));
            }
        };
        let (body, rep_dim) = match arch {
            Architecture::LinearBow => (Body::Linear, 0),
            Architecture::MlpBow => {
                let table = bow_table(&mut params, "hidden.T", vocab, h, &mut rng)?;
                let meta = if config.use_meta {
                    Some(params.add("hidden.meta", Tensor::xavier(h, 1, &mut rng))?)
                } else {
                    None
                };
                let bias = params.add("hidden.b", Tensor::zeros(&[h]))?;
                (Body::Mlp { table, bias, meta }, h)
            }
            Architecture::Dan => {
                let hidden = dense(&mut params, "hidden", h, emb + m, &mut rng)?;
                (Body::Dan { hidden }, h)
            }
            Architecture::Gru => {
                let fwd = GruParams::init(&mut params, "gru.fwd", emb, h, &mut rng)?;
                let meta_hidden = if config.use_meta {
                    Some(dense(&mut params, "hidden", h, h + 1, &mut rng)?)
                } else {
                    None
                };
                (Body::Gru { fwd, meta_hidden }, h)
            }
            Architecture::Bigru => {
                let fwd = GruParams::init(&mut params, "gru.fwd", emb, h, &mut rng)?;
                let bwd = GruParams::init(&mut params, "gru.bwd", emb, h, &mut rng)?;
                let (meta_hidden, rep) = if config.use_meta {
                    (
                        Some(dense(&mut params, "hidden", h, 2 * h + 1, &mut rng)?),
                        h,
                    )
                } else {
                    (None, 2 * h)
                };
                (
                    Body::Bigru {
                        fwd,
                        bwd,
                        meta_hidden,
                    },
                    rep,
                )
            }
        };
        let mut heads = Vec::new();
        for task in config.heads() {
            let c = task.classes();
            let name = format!("head.{task}");
            let head = if arch == Architecture::LinearBow {
                let w = bow_table(&mut params, &format!("{name}.T"), vocab, c, &mut rng)?;
                let meta = if config.use_meta {
                    Some(params.add(format!("{name}.meta"), Tensor::xavier(c, 1, &mut rng))?)
                } else {
                    None
                };
                let b = params.add(format!("{name}.b"), Tensor::zeros(&[c]))?;
                Head { task, w, b, meta }
            } else {
                let d = dense(&mut params, &name, c, rep_dim, &mut rng)?;
                Head {
                    task,
                    w: d.w,
                    b: d.b,
                    meta: None,
                }
            };
            heads.push(head);
        }
        Ok(Model {
            config: config.clone(),
            dims,
            dictionary: None,
            params,
            body,
            heads,
        })
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_scalars()
    }

    /// Width of the vector the heads read (0 for `linear-bow`).
    pub fn representation_dim(&self) -> usize {
        let h = self.config.hidden_dim;
        match &self.body {
            Body::Linear => 0,
            Body::Bigru {
                meta_hidden: None, ..
            } => 2 * h,
            _ => h,
        }
    }

    pub fn heads(&self) -> Vec<HeadTask> {
        self.heads.iter().map(|h| h.task).collect()
    }

    pub(crate) fn meta_var(&self, tape: &mut Tape, meta: f64) -> Option<Var> {
        self.config.use_meta.then(|| tape.input(vec![meta]))
    }

    /// `relu(W [enc, m] + b)` when a meta hidden layer exists.
    pub(crate) fn post_encoder(&self, tape: &mut Tape, enc: Var, meta: f64) -> Result<Var> {
        let hidden = match &self.body {
            Body::Gru { meta_hidden, .. } | Body::Bigru { meta_hidden, .. } => *meta_hidden,
            _ => None,
        };
        match (hidden, self.meta_var(tape, meta)) {
            (Some(d), Some(m)) => {
                let input = tape.concat(&[enc, m]);
                let (w, b) = (tape.param(d.w), tape.param(d.b));
                let z = tape.linear(&[(w, input)], Some(b))?;
                Ok(tape.relu(z))
            }
            _ => Ok(enc),
        }
    }

    pub(crate) fn seq_vars(&self, tape: &mut Tape, input: &Input) -> Result<Vec<Var>> {
        match input {
            Input::Seq(rows) if !rows.is_empty() => {
                Ok(rows.iter().map(|r| tape.input(r.clone())).collect())
            }
            Input::Seq(_) => Err(Error::Empty("utterance without tokens".into())),
            Input::Bow(_) => Err(Error::InvalidArgument(
                "sequence model given a bag-of-words input".into(),
            )),
        }
    }

    fn bow<'e>(&self, input: &'e Input) -> Result<&'e FeatureVector> {
        match input {
            Input::Bow(x) => Ok(x),
            Input::Seq(_) => Err(Error::InvalidArgument(
                "bag-of-words model given a sequence input".into(),
            )),
        }
    }

    /// Shared representation fed to the heads; `None` for `linear-bow`.
    pub(crate) fn representation(
        &self,
        tape: &mut Tape,
        ex: &Example,
        mode: &mut Mode,
    ) -> Result<Option<Var>> {
        let rate = self.config.dropout;
        let rep = match &self.body {
            Body::Linear => return Ok(None),
            Body::Mlp { table, bias, meta } => {
                let x = self.bow(&ex.input)?;
                let (t, b) = (tape.param(*table), tape.param(*bias));
                let mut z = tape.sparse_linear(t, x, Some(b))?;
                if let Some(mw) = meta {
                    let mw = tape.param(*mw);
                    let m = tape.input(vec![ex.meta]);
                    let mz = tape.linear(&[(mw, m)], None)?;
                    z = tape.add(z, mz)?;
                }
                let a = tape.relu(z);
                drop(tape, a, rate, mode)?
            }
            Body::Dan { hidden } => {
                let xs = self.seq_vars(tape, &ex.input)?;
                let avg = tape.mean(&xs)?;
                let input = match self.meta_var(tape, ex.meta) {
                    Some(m) => tape.concat(&[avg, m]),
                    None => avg,
                };
                let (w, b) = (tape.param(hidden.w), tape.param(hidden.b));
                let z = tape.linear(&[(w, input)], Some(b))?;
                let a = tape.relu(z);
                drop(tape, a, rate, mode)?
            }
            Body::Gru { fwd, .. } => {
                let xs = self.seq_vars(tape, &ex.input)?;
                let h = fwd.run(tape, &xs, false)?;
                let h = drop(tape, h, rate, mode)?;
                self.post_encoder(tape, h, ex.meta)?
            }
            Body::Bigru { fwd, bwd, .. } => {
                let xs = self.seq_vars(tape, &ex.input)?;
                let (f, b) = crate::tensor::bigru_states(tape, &xs, fwd, bwd)?;
                let enc = tape.concat(&[f, b]);
                let enc = drop(tape, enc, rate, mode)?;
                self.post_encoder(tape, enc, ex.meta)?
            }
        };
        Ok(Some(rep))
    }

    fn head_logits(
        &self,
        tape: &mut Tape,
        head: &Head,
        rep: Option<Var>,
        ex: &Example,
    ) -> Result<Var> {
        let (w, b) = (tape.param(head.w), tape.param(head.b));
        match rep {
            Some(r) => tape.linear(&[(w, r)], Some(b)),
            None => {
                let x = self.bow(&ex.input)?;
                let mut z = tape.sparse_linear(w, x, Some(b))?;
                if let Some(mw) = head.meta {
                    let mw = tape.param(mw);
                    let m = tape.input(vec![ex.meta]);
                    let mz = tape.linear(&[(mw, m)], None)?;
                    z = tape.add(z, mz)?;
                }
                Ok(z)
            }
        }
    }

    /// Logits of every head.
    pub fn logits(&self, tape: &mut Tape, ex: &Example, mode: &mut Mode) -> Result<HeadOutputs> {
        let rep = self.representation(tape, ex, mode)?;
        let mut out = [None, None];
        for head in &self.heads {
            out[head.task.index()] = Some(self.head_logits(tape, head, rep, ex)?);
        }
        Ok(out)
    }

    pub(crate) fn class_loss(&self, tape: &mut Tape, logits: Var, gold: usize) -> Result<Var> {
        match self.config.loss {
            LinearLoss::Hinge => tape.multiclass_hinge(logits, gold),
            LinearLoss::Logistic => tape.softmax_xent(logits, gold),
        }
    }

    /// Supervised objective `L_primary + α L_aux` for one example; `None`
    /// when the example carries no label for any trained term. The
    /// auxiliary term is omitted entirely when `α = 0`.
    pub fn loss(&self, tape: &mut Tape, ex: &Example, mode: &mut Mode) -> Result<Option<Var>> {
        let logits = self.logits(tape, ex, mode)?;
        let mut terms = Vec::new();
        for (k, head) in self.heads.iter().enumerate() {
            let weight = if k == 0 { 1.0 } else { self.config.alpha };
            if weight == 0.0 {
                continue;
            }
            if let (Some(z), Some(gold)) = (logits[head.task.index()], ex.label(head.task)) {
                let l = self.class_loss(tape, z, gold)?;
                terms.push((l, weight));
            }
        }
        if terms.is_empty() {
            return Ok(None);
        }
        tape.weighted_sum(&terms).map(Some)
    }

    pub fn predict_example(&self, ex: &Example) -> Result<Prediction> {
        let mut tape = Tape::new(&self.params);
        let logits = self.logits(&mut tape, ex, &mut Mode::Inference)?;
        let dist = |z: Option<Var>| z.map(|z| softmax(tape.value(z)));
        Ok(Prediction {
            speech_act: dist(logits[HeadTask::SpeechAct.index()]),
            target: dist(logits[HeadTask::Target.index()]),
        })
    }

    /// Example from raw tokens; `vectors` is required for embedding models.
    pub fn prepare_tokens(
        &self,
        tokens: &[String],
        vectors: Option<Vec<Vec<f64>>>,
        speaker: Option<Party>,
        labels: [Option<usize>; 2],
    ) -> Result<Example> {
        let input = match self.dims {
            InputDims::Bow { .. } => {
                let dict = self.dictionary.as_ref().ok_or_else(|| {
                    Error::Config("bag-of-words model without a dictionary".into())
                })?;
                Input::Bow(dict.bow(tokens))
            }
            InputDims::Embedding { dim } => {
                let rows = vectors.ok_or_else(|| {
                    Error::InvalidArgument("embedding model needs token vectors".into())
                })?;
                if rows.len() != tokens.len() || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::Dimension(format!(
                        "expected {} rows of dim {dim} for the tokens",
                        tokens.len()
                    )));
                }
                Input::Seq(rows)
            }
        };
        Ok(Example {
            input,
            meta: speaker.and_then(Party::speaker_flag).unwrap_or(0.5),
            labels,
        })
    }

    pub fn prepare(&self, u: &Utterance, source: &EmbeddingSource) -> Result<Example> {
        let vectors = match self.dims {
            InputDims::Bow { .. } => None,
            InputDims::Embedding { .. } => Some(embed(source, u)?),
        };
        let labels = [HeadTask::SpeechAct.gold(u), HeadTask::Target.gold(u)];
        self.prepare_tokens(&u.tokens, vectors, u.speaker, labels)
    }

    pub fn to_model_file(&self) -> ModelFile {
        let mut config = self.config.to_pairs();
        let input = match self.dims {
            InputDims::Bow { vocab } => format!("bow:{vocab}"),
            InputDims::Embedding { dim } => format!("embedding:{dim}"),
        };
        config.push(("input".into(), input));
        ModelFile {
            config,
            dictionary: self.dictionary.clone(),
            params: self.params.clone(),
        }
    }

    pub fn from_model_file(file: ModelFile) -> Result<Model> {
        let config = ModelConfig::from_pairs(|k| file.config_value(k).map(str::to_string))?;
        let input = file
            .config_value("input")
            .ok_or_else(|| Error::Config("model file lacks `input`".into()))?;
        let dims = match input.split_once(':') {
            Some(("bow", n)) => n.parse().ok().map(|vocab| InputDims::Bow { vocab }),
            Some(("embedding", n)) => n.parse().ok().map(|dim| InputDims::Embedding { dim }),
            _ => None,
        }
        .ok_or_else(|| Error::Config(format!("bad input spec {input:?}")))?;
        let mut model = Model::build(&config, dims)?;
        if model.params.len() != file.params.len() {
            return Err(Error::Config(format!(
                "model file has {} tensors, configuration implies {}",
                file.params.len(),
                model.params.len()
            )));
        }
        for ((_, name, expected), (_, got_name, got)) in model.params.iter().zip(file.params.iter())
        {
            if name != got_name || expected.shape() != got.shape() {
                return Err(Error::Config(format!(
                    "tensor {got_name} {:?} where {name} {:?} was expected",
                    got.shape(),
                    expected.shape()
                )));
            }
        }
        if let InputDims::Bow { vocab } = dims {
            match &file.dictionary {
                Some(d) if d.len() == vocab => {}
                _ => {
                    return Err(Error::Config(
                        "bag-of-words model file needs its dictionary".into(),
                    ))
                }
            }
        }
        model.params = file.params;
        model.dictionary = file.dictionary;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_model_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        Model::from_model_file(ModelFile::load(path)?)
    }
}
