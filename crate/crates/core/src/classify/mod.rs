//! Speech-act and target-party classifiers: bag-of-words linear and MLP
//! models, deep averaging networks, GRU and biGRU encoders, optional
//! speaker meta-data and a shared-encoder multi-task variant.

mod model;
mod train;

pub(crate) use model::{drop, Body, Dense};
pub use model::{Example, HeadOutputs, Input, InputDims, Mode, Model, Prediction};
pub use train::{
    evaluate, predict, split_rng, train_supervised, Evaluation, TrainOutcome, TrainingHistory,
};
pub(crate) use train::{fit, init_model, prepare_examples, UnlabeledSteps};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Party, SpeechAct, Utterance};
use crate::error::{Error, Result};

macro_rules! named_enum {
    ($ty:ident, $what:literal, { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::UnknownLabel { field: $what, value: other.to_string() }),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    LinearBow,
    MlpBow,
    Dan,
    Gru,
    Bigru,
}

named_enum!(Architecture, "architecture", {
    LinearBow => "linear-bow",
    MlpBow => "mlp-bow",
    Dan => "dan",
    Gru => "gru",
    Bigru => "bigru",
});

impl Architecture {
    pub fn uses_bow(self) -> bool {
        matches!(self, Architecture::LinearBow | Architecture::MlpBow)
    }
}

/// One classification head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadTask {
    SpeechAct,
    Target,
}

named_enum!(HeadTask, "task", {
    SpeechAct => "speech_act",
    Target => "target",
});

impl HeadTask {
    pub const ALL: [HeadTask; 2] = [HeadTask::SpeechAct, HeadTask::Target];

    pub fn index(self) -> usize {
        match self {
            HeadTask::SpeechAct => 0,
            HeadTask::Target => 1,
        }
    }

    pub fn classes(self) -> usize {
        match self {
            HeadTask::SpeechAct => SpeechAct::COUNT,
            HeadTask::Target => Party::COUNT,
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            HeadTask::SpeechAct => SpeechAct::ALL.iter().map(|s| s.name()).collect(),
            HeadTask::Target => Party::ALL.iter().map(|p| p.name()).collect(),
        }
    }

    pub fn gold(self, u: &Utterance) -> Option<usize> {
        match self {
            HeadTask::SpeechAct => u.speech_act.map(SpeechAct::index),
            HeadTask::Target => u.target.map(Party::index),
        }
    }

    pub fn other(self) -> HeadTask {
        match self {
            HeadTask::SpeechAct => HeadTask::Target,
            HeadTask::Target => HeadTask::SpeechAct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    SpeechAct,
    Target,
    Both,
}

named_enum!(Task, "task", {
    SpeechAct => "speech_act",
    Target => "target",
    Both => "both",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    Hinge,
    Logistic,
}

named_enum!(LinearLoss, "loss", {
    Hinge => "hinge",
    Logistic => "logistic",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub task: Task,
    /// Head whose loss is unweighted and whose validation macro-F1 drives
    /// early stopping when `task = both`.
    pub primary: HeadTask,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub use_meta: bool,
    /// Weight of the auxiliary head's loss when `task = both`.
    pub alpha: f64,
    /// Only `linear-bow` may use the hinge loss.
    pub loss: LinearLoss,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub learning_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            architecture: Architecture::Bigru,
            task: Task::SpeechAct,
            primary: HeadTask::SpeechAct,
            hidden_dim: 128,
            dropout: 0.1,
            use_meta: false,
            alpha: 0.5,
            loss: LinearLoss::Logistic,
            seed: 0,
            epochs: 100,
            batch_size: 32,
            patience: 5,
            learning_rate: 1e-3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!(
                "alpha {} must be finite and non-negative",
                self.alpha
            ));
        }
        if self.loss == LinearLoss::Hinge && self.architecture != Architecture::LinearBow {
            return bad("hinge loss is only available for linear-bow".into());
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate {} must be positive",
                self.learning_rate
            ));
        }
        Ok(())
    }

    /// Heads in initialization order: primary first.
    pub fn heads(&self) -> Vec<HeadTask> {
        match self.task {
            Task::SpeechAct => vec![HeadTask::SpeechAct],
            Task::Target => vec![HeadTask::Target],
            Task::Both => vec![self.primary, self.primary.other()],
        }
    }

    pub fn primary_head(&self) -> HeadTask {
        self.heads()[0]
    }

    pub(crate) fn to_pairs(&self) -> Vec<(String, String)> {
        let pairs: [(&str, String); 13] = [
            ("architecture", self.architecture.to_string()),
            ("task", self.task.to_string()),
            ("primary", self.primary.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("dropout", format!("{:e}", self.dropout)),
            ("use_meta", self.use_meta.to_string()),
            ("alpha", format!("{:e}", self.alpha)),
            ("loss", self.loss.to_string()),
            ("seed", self.seed.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("patience", self.patience.to_string()),
            ("learning_rate", format!("{:e}", self.learning_rate)),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub(crate) fn from_pairs(get: impl Fn(&str) -> Option<String>) -> Result<ModelConfig> {
        fn field<T: FromStr>(get: &impl Fn(&str) -> Option<String>, key: &str) -> Result<T> {
            let raw = get(key).ok_or_else(|| Error::Config(format!("model file lacks `{key}`")))?;
            raw.parse()
                .map_err(|_| Error::Config(format!("bad value {raw:?} for `{key}`")))
        }
        let config = ModelConfig {
            architecture: field(&get, "architecture")?,
            task: field(&get, "task")?,
            primary: field(&get, "primary")?,
            hidden_dim: field(&get, "hidden_dim")?,
            dropout: field(&get, "dropout")?,
            use_meta: field(&get, "use_meta")?,
            alpha: field(&get, "alpha")?,
            loss: field(&get, "loss")?,
            seed: field(&get, "seed")?,
            epochs: field(&get, "epochs")?,
            batch_size: field(&get, "batch_size")?,
            patience: field(&get, "patience")?,
            learning_rate: field(&get, "learning_rate")?,
        };
        config.validate()?;
        Ok(config)
    }
}
