use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{BiLabel, Segmentation};
use crate::error::{Error, Result};
use crate::tensor::{AdamConfig, AdamState, Gradients, ParamId, ParamSet, Tensor};
use crate::textfeat::{crf_features, FeatureDictionary, FeatureVector};

pub const CRF_MAGIC: &str = "PRAGMACT-CRF v1";

/// Sentence with gold BI labels for CRF training.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfSentence {
    pub tokens: Vec<String>,
    pub pos: Option<Vec<String>>,
    pub dep: Option<Vec<String>>,
    pub labels: Vec<BiLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrfTrainConfig {
    /// L2 strength on all weights.
    pub lambda: f64,
    /// Full-batch Adam steps.
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for CrfTrainConfig {
    fn default() -> Self {
        CrfTrainConfig {
            lambda: 0.01,
            epochs: 150,
            learning_rate: 0.05,
        }
    }
}

/// Linear-chain CRF over {B, I}. Every admissible sequence starts with B.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    pub dictionary: FeatureDictionary,
    pub lambda: f64,
    params: ParamSet,
    state: ParamId,
    transition: ParamId,
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn check_columns(tokens: &[String], pos: Option<&[String]>, dep: Option<&[String]>) -> Result<()> {
    if tokens.is_empty() {
        return Err(Error::Empty("sentence without tokens".into()));
    }
    for (name, col) in [("pos", pos), ("dep", dep)] {
        if let Some(col) = col {
            if col.len() != tokens.len() {
                return Err(Error::Dimension(format!(
                    "{} {name} tags for {} tokens",
                    col.len(),
                    tokens.len()
                )));
            }
        }
    }
    Ok(())
}

/// Per-token indicator vectors using the dictionary's existing ids.
pub fn sentence_features(
    dictionary: &FeatureDictionary,
    tokens: &[String],
    pos: Option<&[String]>,
    dep: Option<&[String]>,
) -> Result<Vec<FeatureVector>> {
    check_columns(tokens, pos, dep)?;
    (0..tokens.len())
        .map(|i| {
            let names = crf_features(tokens, pos, dep, i)?;
            Ok(FeatureVector::indicators(
                names.iter().map(|n| dictionary.lookup(n)),
            ))
        })
        .collect()
}

impl CrfModel {
    /// All-zero weights over a frozen dictionary.
    pub fn zeros(mut dictionary: FeatureDictionary, lambda: f64) -> CrfModel {
        dictionary.freeze();
        let mut params = ParamSet::new();
        let state = params
            .add("state", Tensor::zeros(&[dictionary.len(), BiLabel::COUNT]))
            .expect("fresh parameter set");
        let transition = params
            .add(
                "transition",
                Tensor::zeros(&[BiLabel::COUNT, BiLabel::COUNT]),
            )
            .expect("fresh parameter set");
        CrfModel {
            dictionary,
            lambda,
            params,
            state,
            transition,
        }
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn state_weights_mut(&mut self) -> &mut [f64] {
        self.params.get_mut(self.state).data_mut()
    }

    pub fn transitions_mut(&mut self) -> &mut [f64] {
        self.params.get_mut(self.transition).data_mut()
    }

    pub fn transition(&self, prev: BiLabel, next: BiLabel) -> f64 {
        self.params.get(self.transition).data()[prev.index() * BiLabel::COUNT + next.index()]
    }

    pub fn state_score(&self, x: &FeatureVector, label: BiLabel) -> f64 {
        let w = self.params.get(self.state).data();
        x.entries()
            .iter()
            .filter(|(id, _)| *id < self.dictionary.len())
            .map(|&(id, v)| v * w[id * BiLabel::COUNT + label.index()])
            .sum()
    }

    fn state_scores(&self, feats: &[FeatureVector]) -> Vec<[f64; 2]> {
        feats
            .iter()
            .map(|x| {
                [
                    self.state_score(x, BiLabel::B),
                    self.state_score(x, BiLabel::I),
                ]
            })
            .collect()
    }

    fn transition_table(&self) -> [[f64; 2]; 2] {
        let t = self.params.get(self.transition).data();
        [[t[0], t[1]], [t[2], t[3]]]
    }

    /// `Σ_t state(t, y_t) + transition(y_{t−1}, y_t)`, no transition at t = 0.
    pub fn score_sequence(&self, feats: &[FeatureVector], labels: &[BiLabel]) -> Result<f64> {
        if feats.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} tokens vs {} labels",
                feats.len(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Empty("empty label sequence".into()));
        }
        if labels[0] != BiLabel::B {
            return Err(Error::InvalidArgument(
                "label sequence must start with B".into(),
            ));
        }
        let mut s = self.state_score(&feats[0], labels[0]);
        for t in 1..labels.len() {
            s = s
                + self.transition(labels[t - 1], labels[t])
                + self.state_score(&feats[t], labels[t]);
        }
        Ok(s)
    }

    fn forward(&self, s: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let tr = self.transition_table();
        let mut alpha = vec![[f64::NEG_INFINITY; 2]; s.len()];
        alpha[0][0] = s[0][0];
        for t in 1..s.len() {
            for b in 0..2 {
                let incoming = log_sum_exp(alpha[t - 1][0] + tr[0][b], alpha[t - 1][1] + tr[1][b]);
                alpha[t][b] = incoming + s[t][b];
            }
        }
        alpha
    }

    fn backward(&self, s: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let tr = self.transition_table();
        let n = s.len();
        let mut beta = vec![[0.0; 2]; n];
        for t in (0..n - 1).rev() {
            for a in 0..2 {
                beta[t][a] = log_sum_exp(
                    tr[a][0] + s[t + 1][0] + beta[t + 1][0],
                    tr[a][1] + s[t + 1][1] + beta[t + 1][1],
                );
            }
        }
        beta
    }

    /// `log Σ_y exp(score(y))` over sequences starting with B (forward pass).
    pub fn log_partition(&self, feats: &[FeatureVector]) -> Result<f64> {
        if feats.is_empty() {
            return Err(Error::Empty("log partition of an empty sentence".into()));
        }
        let alpha = self.forward(&self.state_scores(feats));
        let last = alpha[alpha.len() - 1];
        Ok(log_sum_exp(last[0], last[1]))
    }

    /// The same quantity by the backward recursion.
    pub fn log_partition_backward(&self, feats: &[FeatureVector]) -> Result<f64> {
        if feats.is_empty() {
            return Err(Error::Empty("log partition of an empty sentence".into()));
        }
        let s = self.state_scores(feats);
        let beta = self.backward(&s);
        Ok(s[0][0] + beta[0][0])
    }

    /// Highest-scoring admissible sequence. Ties go to fewer boundaries,
    /// then to I at each step.
    pub fn viterbi(&self, feats: &[FeatureVector]) -> Result<Vec<BiLabel>> {
        if feats.is_empty() {
            return Err(Error::Empty("decoding an empty sentence".into()));
        }
        let s = self.state_scores(feats);
        let tr = self.transition_table();
        let n = s.len();
        // (score, boundaries) per label; better = higher score, then fewer boundaries
        let better = |x: (f64, usize), y: (f64, usize)| x.0 > y.0 || (x.0 == y.0 && x.1 < y.1);
        let mut delta = vec![[(f64::NEG_INFINITY, usize::MAX); 2]; n];
        let mut back = vec![[1usize; 2]; n];
        delta[0][0] = (s[0][0], 1);
        for t in 1..n {
            for b in 0..2 {
                let add = usize::from(b == 0);
                let via = |a: usize| {
                    let prev = delta[t - 1][a];
                    (prev.0 + tr[a][b] + s[t][b], prev.1.saturating_add(add))
                };
                let (from_i, from_b) = (via(1), via(0));
                if better(from_b, from_i) {
                    delta[t][b] = from_b;
                    back[t][b] = 0;
                } else {
                    delta[t][b] = from_i;
                    back[t][b] = 1;
                }
            }
        }
        let mut y = if better(delta[n - 1][0], delta[n - 1][1]) {
            0
        } else {
            1
        };
        let mut labels = vec![BiLabel::B; n];
        for t in (0..n).rev() {
            labels[t] = BiLabel::from_index(y).expect("binary label");
            if t > 0 {
                y = back[t][y];
            }
        }
        Ok(labels)
    }

    /// `log p(labels | x)`, adding its gradient into `grads` (same layout as
    /// [`CrfModel::params`]) scaled by `scale`.
    pub fn log_likelihood_grad(
        &self,
        feats: &[FeatureVector],
        labels: &[BiLabel],
        scale: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let score = self.score_sequence(feats, labels)?;
        let s = self.state_scores(feats);
        let alpha = self.forward(&s);
        let beta = self.backward(&s);
        let n = s.len();
        let log_z = log_sum_exp(alpha[n - 1][0], alpha[n - 1][1]);
        let tr = self.transition_table();
        let vocab = self.dictionary.len();
        {
            let g = grads.get_mut(self.state);
            for t in 0..n {
                for y in 0..2 {
                    let marginal = (alpha[t][y] + beta[t][y] - log_z).exp();
                    let empirical = if labels[t].index() == y { 1.0 } else { 0.0 };
                    let d = scale * (empirical - marginal);
                    if d == 0.0 {
                        continue;
                    }
                    for &(id, v) in feats[t].entries() {
                        if id < vocab {
                            g[id * 2 + y] += d * v;
                        }
                    }
                }
            }
        }
        let g = grads.get_mut(self.transition);
        for t in 1..n {
            for a in 0..2 {
                for b in 0..2 {
                    let marginal =
                        (alpha[t - 1][a] + tr[a][b] + s[t][b] + beta[t][b] - log_z).exp();
                    let empirical = if labels[t - 1].index() == a && labels[t].index() == b {
                        1.0
                    } else {
                        0.0
                    };
                    g[a * 2 + b] += scale * (empirical - marginal);
                }
            }
        }
        Ok(score - log_z)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{CRF_MAGIC}\nlambda {:e}\nfeatures {}\ntransition",
            self.lambda,
            self.dictionary.len()
        );
        for v in self.params.get(self.transition).data() {
            let _ = write!(out, " {v:e}");
        }
        out.push('\n');
        for (k, &w) in self.params.get(self.state).data().iter().enumerate() {
            if w != 0.0 {
                let label = BiLabel::from_index(k % 2).expect("binary label");
                let _ = writeln!(out, "{} {label} {w:e}", k / 2);
            }
        }
        out
    }

    pub fn from_text(text: &str, dictionary: FeatureDictionary) -> Result<CrfModel> {
        let ctx = "crf model";
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(ctx, 0, format!("missing {what}")))
        };
        let (ln, magic) = next("header")?;
        if magic.trim() != CRF_MAGIC {
            return Err(Error::parse(
                ctx,
                ln,
                format!("expected header {CRF_MAGIC:?}"),
            ));
        }
        let field = |(ln, line): (usize, &str), key: &str| -> Result<Vec<String>> {
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::parse(ctx, ln, format!("expected `{key}` line")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let float = |ln: usize, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(ctx, ln, format!("bad number {s:?}")))
        };
        let l = next("lambda")?;
        let lambda_vals = field(l, "lambda")?;
        let lambda = float(l.0, lambda_vals.first().map_or("", |s| s))?;
        let l = next("features")?;
        let n_features: usize = field(l, "features")?
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(ctx, l.0, "bad feature count"))?;
        if n_features != dictionary.len() {
            return Err(Error::parse(
                ctx,
                l.0,
                format!(
                    "model has {n_features} features, dictionary {}",
                    dictionary.len()
                ),
            ));
        }
        let l = next("transition")?;
        let tr = field(l, "transition")?;
        if tr.len() != 4 {
            return Err(Error::parse(ctx, l.0, "transition needs 4 values"));
        }
        let mut model = CrfModel::zeros(dictionary, lambda);
        for (k, s) in tr.iter().enumerate() {
            model.transitions_mut()[k] = float(l.0, s)?;
        }
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::parse(ctx, ln, "expected `feature-id label weight`"));
            }
            let id: usize = parts[0]
                .parse()
                .ok()
                .filter(|&id| id < n_features)
                .ok_or_else(|| Error::parse(ctx, ln, format!("bad feature id {:?}", parts[0])))?;
            let label = match parts[1] {
                "B" => BiLabel::B,
                "I" => BiLabel::I,
                other => return Err(Error::parse(ctx, ln, format!("bad label {other:?}"))),
            };
            model.state_weights_mut()[id * 2 + label.index()] = float(ln, parts[2])?;
        }
        if !model.params.all_finite() {
            return Err(Error::parse(ctx, 0, "non-finite weight"));
        }
        Ok(model)
    }

    pub fn save(
        &self,
        model_path: impl AsRef<Path>,
        dictionary_path: impl AsRef<Path>,
    ) -> Result<()> {
        let model_path = model_path.as_ref();
        fs::write(model_path, self.to_text()).map_err(|e| Error::io(model_path, e))?;
        self.dictionary.save(dictionary_path)
    }

    pub fn load(
        model_path: impl AsRef<Path>,
        dictionary_path: impl AsRef<Path>,
    ) -> Result<CrfModel> {
        let dictionary = FeatureDictionary::load(dictionary_path)?;
        let model_path = model_path.as_ref();
        let text = fs::read_to_string(model_path).map_err(|e| Error::io(model_path, e))?;
        CrfModel::from_text(&text, dictionary)
    }
}

/// Maximizes `Σ log p(y | x) − λ‖w‖²` with full-batch Adam.
pub fn train_crf(sentences: &[CrfSentence], config: &CrfTrainConfig) -> Result<CrfModel> {
    if sentences.is_empty() {
        return Err(Error::Empty("no CRF training sentences".into()));
    }
    if !(config.lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {}",
            config.lambda
        )));
    }
    let mut dictionary = FeatureDictionary::new();
    for s in sentences {
        check_columns(&s.tokens, s.pos.as_deref(), s.dep.as_deref())?;
        if s.labels.len() != s.tokens.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} tokens",
                s.labels.len(),
                s.tokens.len()
            )));
        }
        if s.labels[0] != BiLabel::B {
            return Err(Error::InvalidArgument(
                "gold labels must start with B".into(),
            ));
        }
        for i in 0..s.tokens.len() {
            for name in crf_features(&s.tokens, s.pos.as_deref(), s.dep.as_deref(), i)? {
                dictionary.intern(&name);
            }
        }
    }
    let mut model = CrfModel::zeros(dictionary, config.lambda);
    let features: Vec<Vec<FeatureVector>> = sentences
        .iter()
        .map(|s| {
            sentence_features(
                &model.dictionary,
                &s.tokens,
                s.pos.as_deref(),
                s.dep.as_deref(),
            )
        })
        .collect::<Result<_>>()?;
    let mut adam = AdamState::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        &model.params,
    );
    for epoch in 0..config.epochs {
        let mut grads = Gradients::zeros_like(&model.params);
        // minimizing the negated objective
        for (x, s) in features.iter().zip(sentences) {
            model.log_likelihood_grad(x, &s.labels, -1.0, &mut grads)?;
        }
        for (id, _, tensor) in model.params.iter() {
            for (g, w) in grads.get_mut(id).iter_mut().zip(tensor.data()) {
                *g += 2.0 * config.lambda * w;
            }
        }
        if !grads.all_finite() {
            return Err(Error::Diverged(format!(
                "non-finite CRF gradient at epoch {epoch}"
            )));
        }
        adam.update(&mut model.params, &grads)?;
    }
    Ok(model)
}

/// Viterbi segmentation of one sentence.
pub fn segment_sentence(
    crf: &CrfModel,
    tokens: &[String],
    pos: Option<&[String]>,
    dep: Option<&[String]>,
) -> Result<Segmentation> {
    let feats = sentence_features(&crf.dictionary, tokens, pos, dep)?;
    Segmentation::from_labels(&crf.viterbi(&feats)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::check_flat_gradient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use BiLabel::{B, I};

    fn all_paths(n: usize) -> Vec<Vec<BiLabel>> {
        (0..1usize << (n - 1))
            .map(|mask| {
                (0..n)
                    .map(|t| {
                        if t == 0 || mask >> (t - 1) & 1 == 1 {
                            B
                        } else {
                            I
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn random_model(rng: &mut ChaCha8Rng, vocab: usize) -> CrfModel {
        let mut dict = FeatureDictionary::new();
        for k in 1..vocab {
            dict.intern(&format!("f{k}"));
        }
        let mut m = CrfModel::zeros(dict, 0.0);
        for w in m.state_weights_mut() {
            *w = rng.gen_range(-1.0..1.0);
        }
        for w in m.transitions_mut() {
            *w = rng.gen_range(-1.0..1.0);
        }
        m
    }

    fn random_feats(rng: &mut ChaCha8Rng, n: usize, vocab: usize) -> Vec<FeatureVector> {
        (0..n)
            .map(|_| FeatureVector::indicators((0..3).map(|_| rng.gen_range(0..vocab))))
            .collect()
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn zero_weights() {
        let m = CrfModel::zeros(FeatureDictionary::new(), 0.0);
        for n in 1..7 {
            let feats = vec![FeatureVector::indicators([0]); n];
            assert_eq!(m.score_sequence(&feats, &vec![B; n]).unwrap(), 0.0);
            let z = m.log_partition(&feats).unwrap();
            assert!((z - (n as f64 - 1.0) * 2f64.ln()).abs() < 1e-12);
            let mut expected = vec![I; n];
            expected[0] = B;
            assert_eq!(m.viterbi(&feats).unwrap(), expected);
        }
        assert!(m.score_sequence(&[FeatureVector::default()], &[I]).is_err());
        assert!(m
            .score_sequence(&[FeatureVector::default()], &[B, I])
            .is_err());
    }

    #[test]
    fn single_token_and_position_cue() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_model(&mut rng, 5);
        let feats = random_feats(&mut rng, 1, 5);
        let sb = m.state_score(&feats[0], B);
        assert_eq!(m.score_sequence(&feats, &[B]).unwrap(), sb);
        assert!((m.log_partition(&feats).unwrap() - sb).abs() < 1e-12);

        // feature 1 fires on token 2 only and favours B by +1
        let mut dict = FeatureDictionary::new();
        dict.intern("cue");
        let mut m = CrfModel::zeros(dict, 0.0);
        m.state_weights_mut()[2] = 1.0;
        let feats = vec![
            FeatureVector::indicators([0]),
            FeatureVector::indicators([0]),
            FeatureVector::indicators([1]),
        ];
        assert_eq!(m.viterbi(&feats).unwrap(), vec![B, I, B]);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let m = random_model(&mut rng, 6);
            for n in 1..=6 {
                let feats = random_feats(&mut rng, n, 6);
                let scores: Vec<(f64, Vec<BiLabel>)> = all_paths(n)
                    .into_iter()
                    .map(|p| (m.score_sequence(&feats, &p).unwrap(), p))
                    .collect();
                let mx = scores.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
                let z = mx + scores.iter().map(|s| (s.0 - mx).exp()).sum::<f64>().ln();
                assert!((m.log_partition(&feats).unwrap() - z).abs() < 1e-9);
                assert!((m.log_partition_backward(&feats).unwrap() - z).abs() < 1e-9);
                let best = scores.iter().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
                let path = m.viterbi(&feats).unwrap();
                assert_eq!(path, best.1);
                let p = (m.score_sequence(&feats, &path).unwrap() - z).exp();
                assert!(p > 0.0 && p <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_model(&mut rng, 5);
            let n = rng.gen_range(1..7);
            let feats = random_feats(&mut rng, n, 5);
            let mut labels: Vec<BiLabel> = (0..n)
                .map(|_| if rng.gen_bool(0.4) { B } else { I })
                .collect();
            labels[0] = B;
            let mut grads = Gradients::zeros_like(m.params());
            m.log_likelihood_grad(&feats, &labels, 1.0, &mut grads)
                .unwrap();
            let flat = |ps: &ParamSet| {
                ps.iter()
                    .flat_map(|(_, _, t)| t.data().to_vec())
                    .collect::<Vec<_>>()
            };
            let analytic: Vec<f64> = m
                .params()
                .iter()
                .flat_map(|(id, _, _)| grads.get(id).to_vec())
                .collect();
            let theta = flat(m.params());
            let report = check_flat_gradient(&theta, &analytic, 1e-5, |th| {
                let mut probe = m.clone();
                let split = probe.state_weights_mut().len();
                probe.state_weights_mut().copy_from_slice(&th[..split]);
                probe.transitions_mut().copy_from_slice(&th[split..]);
                probe.score_sequence(&feats, &labels).unwrap()
                    - probe.log_partition(&feats).unwrap()
            });
            assert!(report.max_rel_error < 1e-6, "{report:?}");
        }
    }

    #[test]
    fn heavy_regularization_keeps_weights_near_zero() {
        let sentences: Vec<CrfSentence> = (0..10)
            .map(|k| {
                let tokens = words(&format!("we will act {} and then | they fail", k));
                let labels = (0..tokens.len())
                    .map(|i| if i == 0 || i == 6 { B } else { I })
                    .collect();
                CrfSentence {
                    tokens,
                    pos: None,
                    dep: None,
                    labels,
                }
            })
            .collect();
        let config = CrfTrainConfig {
            lambda: 1e6,
            ..CrfTrainConfig::default()
        };
        let m = train_crf(&sentences, &config).unwrap();
        let max = m
            .params()
            .iter()
            .flat_map(|(_, _, t)| t.data().to_vec())
            .fold(0.0f64, |a, w| a.max(w.abs()));
        assert!(max < 1e-3, "max |w| = {max}");
    }

    #[test]
    fn learns_a_cue_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vocab = [
            "we", "will", "build", "roads", "schools", "now", "they", "cut", "jobs",
        ];
        let make = |rng: &mut ChaCha8Rng| {
            let mut tokens = Vec::new();
            let mut labels = Vec::new();
            for seg in 0..rng.gen_range(1..4) {
                if seg > 0 {
                    tokens.push("|".to_string());
                    labels.push(I);
                }
                for k in 0..rng.gen_range(2..5) {
                    tokens.push(vocab[rng.gen_range(0..vocab.len())].to_string());
                    labels.push(if k == 0 { B } else { I });
                }
            }
            CrfSentence {
                tokens,
                pos: None,
                dep: None,
                labels,
            }
        };
        let train: Vec<CrfSentence> = (0..50).map(|_| make(&mut rng)).collect();
        let m = train_crf(&train, &CrfTrainConfig::default()).unwrap();
        for _ in 0..30 {
            let s = make(&mut rng);
            let seg = segment_sentence(&m, &s.tokens, None, None).unwrap();
            assert_eq!(seg.labels(), s.labels);
        }
        let dir = tempfile::tempdir().unwrap();
        let (mp, dp) = (dir.path().join("crf.model"), dir.path().join("crf.dict"));
        m.save(&mp, &dp).unwrap();
        assert_eq!(CrfModel::load(&mp, &dp).unwrap(), m);
    }
}
