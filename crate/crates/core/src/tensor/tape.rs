use std::rc::Rc;

use rand::Rng;

use super::loss::{log_softmax, softmax, PROB_FLOOR};
use super::{Gradients, ParamId, ParamSet};
use crate::error::{Error, Result};
use crate::textfeat::FeatureVector;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    /// `Σ W_k x_k + b`, every `W_k` a parameter matrix `[out, in_k]`.
    Linear {
        terms: Vec<(Var, Var)>,
        bias: Option<Var>,
    },
    /// `Tᵀ x + b` for a sparse `x` and a parameter table `[vocab, out]`.
    SparseLinear {
        table: Var,
        x: FeatureVector,
        bias: Option<Var>,
    },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Rc<Vec<f64>>),
    /// `(1 − g) ⊙ from + g ⊙ to`
    Lerp {
        gate: Var,
        from: Var,
        to: Var,
    },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Concat(Vec<Var>),
    Mean(Vec<Var>),
    WeightedSum(Vec<(Var, f64)>),
    SumAll(Var),
    SoftmaxXent {
        logits: Var,
        gold: usize,
        probs: Vec<f64>,
    },
    Hinge {
        scores: Var,
        gold: usize,
        rival: usize,
    },
    KlToTarget {
        logits: Var,
        target: Rc<Vec<f64>>,
        probs: Vec<f64>,
        active: Vec<bool>,
    },
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// A single-threaded record of one forward computation over a borrowed
/// parameter set.
pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Tape<'p> {
        Tape {
            params,
            nodes: Vec::new(),
            param_vars: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match self.nodes[v.0].op {
            Op::Param(id) => self.params.get(id).data(),
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn input(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Input, false)
    }

    /// Registers a parameter; repeated calls return the same variable.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let v = self.push(Vec::new(), Op::Param(id), true);
        self.param_vars[id.0] = Some(v);
        v
    }

    fn matrix_dims(&self, w: Var) -> Result<(usize, usize)> {
        match self.nodes[w.0].op {
            Op::Param(id) => Ok(self.params.get(id).dims2()),
            _ => Err(Error::InvalidArgument(
                "linear weights must be parameters".into(),
            )),
        }
    }

    /// `Σ_k W_k x_k (+ b)`.
    pub fn linear(&mut self, terms: &[(Var, Var)], bias: Option<Var>) -> Result<Var> {
        let out = match (terms.first(), bias) {
            (Some(&(w, _)), _) => self.matrix_dims(w)?.0,
            (None, Some(b)) => self.value(b).len(),
            (None, None) => return Err(Error::InvalidArgument("empty linear layer".into())),
        };
        let mut y = match bias {
            Some(b) => {
                let bv = self.value(b);
                if bv.len() != out {
                    return Err(Error::Dimension(format!(
                        "bias of length {} for output {out}",
                        bv.len()
                    )));
                }
                bv.to_vec()
            }
            None => vec![0.0; out],
        };
        for &(w, x) in terms {
            let (rows, cols) = self.matrix_dims(w)?;
            let xv = self.value(x);
            if rows != out || cols != xv.len() {
                return Err(Error::Dimension(format!(
                    "matrix {rows}x{cols} applied to vector of length {} for output {out}",
                    xv.len()
                )));
            }
            let wv = self.value(w);
            for (o, yo) in y.iter_mut().enumerate() {
                let row = &wv[o * cols..(o + 1) * cols];
                *yo += row.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let needs = terms.iter().any(|&(w, x)| self.needs(w) || self.needs(x))
            || bias.is_some_and(|b| self.needs(b));
        Ok(self.push(
            y,
            Op::Linear {
                terms: terms.to_vec(),
                bias,
            },
            needs,
        ))
    }

    /// `Tᵀ x (+ b)` where `table` is `[vocab, out]` and `x` is sparse.
    pub fn sparse_linear(
        &mut self,
        table: Var,
        x: &FeatureVector,
        bias: Option<Var>,
    ) -> Result<Var> {
        let (vocab, out) = self.matrix_dims(table)?;
        let mut y = match bias {
            Some(b) => self.value(b).to_vec(),
            None => vec![0.0; out],
        };
        if y.len() != out {
            return Err(Error::Dimension(format!(
                "bias of length {} for output {out}",
                y.len()
            )));
        }
        let tv = self.value(table);
        for &(j, xj) in x.entries() {
            if j >= vocab {
                return Err(Error::Dimension(format!(
                    "feature id {j} outside table of {vocab} rows"
                )));
            }
            let row = &tv[j * out..(j + 1) * out];
            for (yo, t) in y.iter_mut().zip(row) {
                *yo += xj * t;
            }
        }
        let needs = self.needs(table) || bias.is_some_and(|b| self.needs(b));
        Ok(self.push(
            y,
            Op::SparseLinear {
                table,
                x: x.clone(),
                bias,
            },
            needs,
        ))
    }

    fn same_len(&self, a: Var, b: Var) -> Result<usize> {
        let (la, lb) = (self.value(a).len(), self.value(b).len());
        if la != lb {
            return Err(Error::Dimension(format!(
                "operands of length {la} and {lb}"
            )));
        }
        Ok(la)
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        self.same_len(a, b)?;
        let y = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| f(*x, *y))
            .collect();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(y, op, needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let y = self.value(a).iter().map(|x| x * c).collect();
        let needs = self.needs(a);
        self.push(y, Op::Scale(a, c), needs)
    }

    pub fn mul_const(&mut self, a: Var, mask: Vec<f64>) -> Result<Var> {
        if mask.len() != self.value(a).len() {
            return Err(Error::Dimension("mask length differs from operand".into()));
        }
        let y = self
            .value(a)
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        let needs = self.needs(a);
        Ok(self.push(y, Op::MulConst(a, Rc::new(mask)), needs))
    }

    /// `(1 − gate) ⊙ from + gate ⊙ to`.
    pub fn lerp(&mut self, gate: Var, from: Var, to: Var) -> Result<Var> {
        self.same_len(gate, from)?;
        self.same_len(gate, to)?;
        let (g, f, t) = (self.value(gate), self.value(from), self.value(to));
        let y = (0..g.len())
            .map(|i| (1.0 - g[i]) * f[i] + g[i] * t[i])
            .collect();
        let needs = self.needs(gate) || self.needs(from) || self.needs(to);
        Ok(self.push(y, Op::Lerp { gate, from, to }, needs))
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let y = self.value(a).iter().map(|&x| f(x)).collect();
        let needs = self.needs(a);
        self.push(y, op, needs)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut y = Vec::new();
        for &p in parts {
            y.extend_from_slice(self.value(p));
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        self.push(y, Op::Concat(parts.to_vec()), needs)
    }

    /// Element-wise mean of equal-length vectors.
    pub fn mean(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("mean of no vectors".into()))?;
        let n = self.value(first).len();
        let mut y = vec![0.0; n];
        for &p in parts {
            let v = self.value(p);
            if v.len() != n {
                return Err(Error::Dimension(
                    "mean over vectors of different lengths".into(),
                ));
            }
            for (a, b) in y.iter_mut().zip(v) {
                *a += b;
            }
        }
        let inv = 1.0 / parts.len() as f64;
        y.iter_mut().for_each(|a| *a *= inv);
        let needs = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(y, Op::Mean(parts.to_vec()), needs))
    }

    /// `Σ c_k v_k` over equal-length vectors (typically scalars).
    pub fn weighted_sum(&mut self, terms: &[(Var, f64)]) -> Result<Var> {
        let &(first, _) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("sum of no terms".into()))?;
        let n = self.value(first).len();
        let mut y = vec![0.0; n];
        for &(v, c) in terms {
            let vals = self.value(v);
            if vals.len() != n {
                return Err(Error::Dimension(
                    "sum over vectors of different lengths".into(),
                ));
            }
            for (a, b) in y.iter_mut().zip(vals) {
                *a += c * b;
            }
        }
        let needs = terms.iter().any(|&(v, _)| self.needs(v));
        Ok(self.push(y, Op::WeightedSum(terms.to_vec()), needs))
    }

    /// Sum of all elements, as a scalar.
    pub fn sum_all(&mut self, a: Var) -> Var {
        let total = self.value(a).iter().sum();
        let needs = self.needs(a);
        self.push(vec![total], Op::SumAll(a), needs)
    }

    /// Inverted dropout; `rate == 0` returns `x` unchanged.
    pub fn dropout<R: Rng>(&mut self, x: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if rate <= 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - rate;
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        self.mul_const(x, mask)
    }

    /// Cross-entropy of `softmax(logits)` against class `gold`.
    pub fn softmax_xent(&mut self, logits: Var, gold: usize) -> Result<Var> {
        let lv = self.value(logits);
        if gold >= lv.len() {
            return Err(Error::InvalidArgument(format!(
                "gold class {gold} outside {} logits",
                lv.len()
            )));
        }
        let lsm = log_softmax(lv);
        let probs = softmax(lv);
        let needs = self.needs(logits);
        Ok(self.push(
            vec![-lsm[gold]],
            Op::SoftmaxXent {
                logits,
                gold,
                probs,
            },
            needs,
        ))
    }

    /// Multi-class hinge `max(0, 1 + max_{j≠gold} s_j − s_gold)`.
    pub fn multiclass_hinge(&mut self, scores: Var, gold: usize) -> Result<Var> {
        let s = self.value(scores);
        if gold >= s.len() || s.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "gold class {gold} outside {} scores",
                s.len()
            )));
        }
        let rival = (0..s.len())
            .filter(|&j| j != gold)
            .fold(None::<usize>, |best, j| match best {
                Some(b) if s[b] >= s[j] => Some(b),
                _ => Some(j),
            })
            .expect("at least two classes");
        let loss = (1.0 + s[rival] - s[gold]).max(0.0);
        let needs = self.needs(scores);
        Ok(self.push(
            vec![loss],
            Op::Hinge {
                scores,
                gold,
                rival,
            },
            needs,
        ))
    }

    /// `KL(target ‖ softmax(logits))` with the target held constant and the
    /// student probabilities floored at [`PROB_FLOOR`].
    pub fn kl_to_target(&mut self, target: &[f64], logits: Var) -> Result<Var> {
        let lv = self.value(logits);
        if lv.len() != target.len() {
            return Err(Error::Dimension(format!(
                "target has {} classes, logits {}",
                target.len(),
                lv.len()
            )));
        }
        let lsm = log_softmax(lv);
        let probs = softmax(lv);
        let floor = PROB_FLOOR.ln();
        let active: Vec<bool> = lsm.iter().map(|&l| l > floor).collect();
        let mut loss = 0.0;
        for i in 0..target.len() {
            let p = target[i];
            if p > 0.0 {
                loss += p * (p.max(PROB_FLOOR).ln() - lsm[i].max(floor));
            }
        }
        let needs = self.needs(logits);
        Ok(self.push(
            vec![loss],
            Op::KlToTarget {
                logits,
                target: Rc::new(target.to_vec()),
                probs,
                active,
            },
            needs,
        ))
    }

    /// Reverse pass from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::Dimension("backward needs a scalar loss".into()));
        }
        let mut grads = Gradients::zeros_like(self.params);
        let mut g: Vec<Option<Vec<f64>>> = (0..=loss.0).map(|_| None).collect();
        g[loss.0] = Some(vec![1.0]);

        fn acc<'a>(g: &'a mut [Option<Vec<f64>>], v: Var, len: usize) -> &'a mut Vec<f64> {
            g[v.0].get_or_insert_with(|| vec![0.0; len])
        }

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(gy) = g[idx].take() else { continue };
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    for (a, b) in grads.get_mut(*id).iter_mut().zip(&gy) {
                        *a += b;
                    }
                }
                Op::Linear { terms, bias } => {
                    for &(w, x) in terms {
                        let (rows, cols) = self.matrix_dims(w)?;
                        let xv = self.value(x);
                        if self.needs(w) {
                            let gw = acc(&mut g, w, rows * cols);
                            for o in 0..rows {
                                let go = gy[o];
                                if go != 0.0 {
                                    for (gwi, xi) in gw[o * cols..(o + 1) * cols].iter_mut().zip(xv)
                                    {
                                        *gwi += go * xi;
                                    }
                                }
                            }
                        }
                        if self.needs(x) {
                            let wv = self.value(w);
                            let gx = acc(&mut g, x, cols);
                            for o in 0..rows {
                                let go = gy[o];
                                if go != 0.0 {
                                    for (gxi, wi) in
                                        gx.iter_mut().zip(&wv[o * cols..(o + 1) * cols])
                                    {
                                        *gxi += go * wi;
                                    }
                                }
                            }
                        }
                    }
                    if let Some(b) = *bias {
                        if self.needs(b) {
                            let gb = acc(&mut g, b, gy.len());
                            gb.iter_mut().zip(&gy).for_each(|(a, b)| *a += b);
                        }
                    }
                }
                Op::SparseLinear { table, x, bias } => {
                    if self.needs(*table) {
                        let (vocab, out) = self.matrix_dims(*table)?;
                        let gt = acc(&mut g, *table, vocab * out);
                        for &(j, xj) in x.entries() {
                            for (a, b) in gt[j * out..(j + 1) * out].iter_mut().zip(&gy) {
                                *a += xj * b;
                            }
                        }
                    }
                    if let Some(b) = *bias {
                        if self.needs(b) {
                            let gb = acc(&mut g, b, gy.len());
                            gb.iter_mut().zip(&gy).for_each(|(a, b)| *a += b);
                        }
                    }
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let sign = if matches!(node.op, Op::Sub(..)) {
                        -1.0
                    } else {
                        1.0
                    };
                    if self.needs(*a) {
                        acc(&mut g, *a, gy.len())
                            .iter_mut()
                            .zip(&gy)
                            .for_each(|(x, y)| *x += y);
                    }
                    if self.needs(*b) {
                        acc(&mut g, *b, gy.len())
                            .iter_mut()
                            .zip(&gy)
                            .for_each(|(x, y)| *x += sign * y);
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    if self.needs(*a) {
                        let ga = acc(&mut g, *a, gy.len());
                        for i in 0..gy.len() {
                            ga[i] += gy[i] * bv[i];
                        }
                    }
                    if self.needs(*b) {
                        let gb = acc(&mut g, *b, gy.len());
                        for i in 0..gy.len() {
                            gb[i] += gy[i] * av[i];
                        }
                    }
                }
                Op::Scale(a, c) => {
                    acc(&mut g, *a, gy.len())
                        .iter_mut()
                        .zip(&gy)
                        .for_each(|(x, y)| *x += c * y);
                }
                Op::MulConst(a, m) => {
                    let ga = acc(&mut g, *a, gy.len());
                    for i in 0..gy.len() {
                        ga[i] += gy[i] * m[i];
                    }
                }
                Op::Lerp { gate, from, to } => {
                    let (zv, fv, tv) = (self.value(*gate), self.value(*from), self.value(*to));
                    if self.needs(*gate) {
                        let gz = acc(&mut g, *gate, gy.len());
                        for i in 0..gy.len() {
                            gz[i] += gy[i] * (tv[i] - fv[i]);
                        }
                    }
                    if self.needs(*from) {
                        let gf = acc(&mut g, *from, gy.len());
                        for i in 0..gy.len() {
                            gf[i] += gy[i] * (1.0 - zv[i]);
                        }
                    }
                    if self.needs(*to) {
                        let gt = acc(&mut g, *to, gy.len());
                        for i in 0..gy.len() {
                            gt[i] += gy[i] * zv[i];
                        }
                    }
                }
                Op::Sigmoid(a) | Op::Tanh(a) | Op::Relu(a) => {
                    let y = &node.value;
                    let ga = acc(&mut g, *a, gy.len());
                    for i in 0..gy.len() {
                        let d = match node.op {
                            Op::Sigmoid(_) => y[i] * (1.0 - y[i]),
                            Op::Tanh(_) => 1.0 - y[i] * y[i],
                            _ => {
                                if y[i] > 0.0 {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                        };
                        ga[i] += gy[i] * d;
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.value(p).len();
                        if self.needs(p) {
                            acc(&mut g, p, n)
                                .iter_mut()
                                .zip(&gy[off..off + n])
                                .for_each(|(x, y)| *x += y);
                        }
                        off += n;
                    }
                }
                Op::Mean(parts) => {
                    let inv = 1.0 / parts.len() as f64;
                    for &p in parts {
                        if self.needs(p) {
                            acc(&mut g, p, gy.len())
                                .iter_mut()
                                .zip(&gy)
                                .for_each(|(x, y)| *x += inv * y);
                        }
                    }
                }
                Op::WeightedSum(terms) => {
                    for &(v, c) in terms {
                        if self.needs(v) {
                            acc(&mut g, v, gy.len())
                                .iter_mut()
                                .zip(&gy)
                                .for_each(|(x, y)| *x += c * y);
                        }
                    }
                }
                Op::SumAll(a) => {
                    let n = self.value(*a).len();
                    acc(&mut g, *a, n).iter_mut().for_each(|x| *x += gy[0]);
                }
                Op::SoftmaxXent {
                    logits,
                    gold,
                    probs,
                } => {
                    let gl = acc(&mut g, *logits, probs.len());
                    for (j, p) in probs.iter().enumerate() {
                        let target = if j == *gold { 1.0 } else { 0.0 };
                        gl[j] += gy[0] * (p - target);
                    }
                }
                Op::Hinge {
                    scores,
                    gold,
                    rival,
                } => {
                    if node.value[0] > 0.0 {
                        let n = self.value(*scores).len();
                        let gs = acc(&mut g, *scores, n);
                        gs[*rival] += gy[0];
                        gs[*gold] -= gy[0];
                    }
                }
                Op::KlToTarget {
                    logits,
                    target,
                    probs,
                    active,
                } => {
                    let mass: f64 = target
                        .iter()
                        .zip(active)
                        .filter(|(_, &a)| a)
                        .map(|(p, _)| p)
                        .sum();
                    let gl = acc(&mut g, *logits, probs.len());
                    for j in 0..probs.len() {
                        let own = if active[j] { target[j] } else { 0.0 };
                        gl[j] += gy[0] * (probs[j] * mass - own);
                    }
                }
            }
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn linear_forward_and_backward() {
        let mut ps = ParamSet::new();
        let w = ps
            .add(
                "w",
                Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            )
            .unwrap();
        let b = ps
            .add("b", Tensor::from_vec(&[2], vec![0.5, -0.5]).unwrap())
            .unwrap();
        let mut tape = Tape::new(&ps);
        let x = tape.input(vec![1.0, 0.0, -1.0]);
        let (wv, bv) = (tape.param(w), tape.param(b));
        let y = tape.linear(&[(wv, x)], Some(bv)).unwrap();
        assert_eq!(tape.value(y), &[-1.5, -2.5]);
        assert!(tape.backward(y).is_err());
        let loss = tape.sum_all(y);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(w), &[1.0, 0.0, -1.0, 1.0, 0.0, -1.0]);
        assert_eq!(grads.get(b), &[1.0, 1.0]);
    }

    #[test]
    fn dimension_errors_are_reported() {
        let mut ps = ParamSet::new();
        let w = ps.add("w", Tensor::zeros(&[2, 3])).unwrap();
        let mut tape = Tape::new(&ps);
        let x = tape.input(vec![1.0, 2.0]);
        let wv = tape.param(w);
        assert!(matches!(
            tape.linear(&[(wv, x)], None),
            Err(Error::Dimension(_))
        ));
        let a = tape.input(vec![1.0]);
        assert!(tape.add(a, x).is_err());
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input(vec![1.0, 2.0, 3.0]);
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        assert_eq!(tape.dropout(x, 0.0, &mut rng).unwrap(), x);
    }

    #[test]
    fn hinge_is_zero_beyond_margin() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let s = tape.input(vec![3.0, 1.0, 0.5]);
        let l = tape.multiclass_hinge(s, 0).unwrap();
        assert_eq!(tape.scalar(l), 0.0);
        let l = tape.multiclass_hinge(s, 2).unwrap();
        assert!((tape.scalar(l) - 3.5).abs() < 1e-12);
    }
}
