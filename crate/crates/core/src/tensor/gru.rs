use rand::Rng;

use super::{ParamId, ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Update / reset / candidate gate parameters of one GRU direction.
/// Input matrices are `[hidden, input]`, recurrent ones `[hidden, hidden]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GruParams {
    pub w_z: ParamId,
    pub w_r: ParamId,
    pub w_h: ParamId,
    pub u_z: ParamId,
    pub u_r: ParamId,
    pub u_h: ParamId,
    pub b_z: ParamId,
    pub b_r: ParamId,
    pub b_h: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl GruParams {
    /// Glorot-uniform matrices and zero biases, registered under `prefix`.
    pub fn init<R: Rng>(
        params: &mut ParamSet,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<GruParams> {
        let (i, h) = (input_dim, hidden_dim);
        let mut mat = |name: &str, cols: usize, rng: &mut R| {
            params.add(format!("{prefix}.{name}"), Tensor::xavier(h, cols, rng))
        };
        let w_z = mat("W_z", i, rng)?;
        let w_r = mat("W_r", i, rng)?;
        let w_h = mat("W_h", i, rng)?;
        let u_z = mat("U_z", h, rng)?;
        let u_r = mat("U_r", h, rng)?;
        let u_h = mat("U_h", h, rng)?;
        let b_z = params.add(format!("{prefix}.b_z"), Tensor::zeros(&[h]))?;
        let b_r = params.add(format!("{prefix}.b_r"), Tensor::zeros(&[h]))?;
        let b_h = params.add(format!("{prefix}.b_h"), Tensor::zeros(&[h]))?;
        Ok(GruParams {
            w_z,
            w_r,
            w_h,
            u_z,
            u_r,
            u_h,
            b_z,
            b_r,
            b_h,
            input_dim,
            hidden_dim,
        })
    }

    /// Re-binds to parameters already present in `params` under `prefix`.
    pub fn lookup(params: &ParamSet, prefix: &str) -> Result<GruParams> {
        let get = |name: &str| {
            params
                .id(&format!("{prefix}.{name}"))
                .ok_or_else(|| Error::Config(format!("missing parameter {prefix}.{name}")))
        };
        let w_z = get("W_z")?;
        let (hidden_dim, input_dim) = params.get(w_z).dims2();
        Ok(GruParams {
            w_z,
            w_r: get("W_r")?,
            w_h: get("W_h")?,
            u_z: get("U_z")?,
            u_r: get("U_r")?,
            u_h: get("U_h")?,
            b_z: get("b_z")?,
            b_r: get("b_r")?,
            b_h: get("b_h")?,
            input_dim,
            hidden_dim,
        })
    }

    pub fn num_scalars(&self) -> usize {
        3 * (self.input_dim * self.hidden_dim + self.hidden_dim * self.hidden_dim + self.hidden_dim)
    }

    /// One recurrence step:
    /// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
    /// `h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h)`, `h' = (1 − z) ⊙ h + z ⊙ h̃`.
    pub fn step(&self, tape: &mut Tape, x: Var, h: Var) -> Result<Var> {
        if tape.value(x).len() != self.input_dim || tape.value(h).len() != self.hidden_dim {
            return Err(Error::Dimension(format!(
                "GRU {}->{} got input {} and state {}",
                self.input_dim,
                self.hidden_dim,
                tape.value(x).len(),
                tape.value(h).len()
            )));
        }
        let [w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h] = [
            self.w_z, self.w_r, self.w_h, self.u_z, self.u_r, self.u_h, self.b_z, self.b_r,
            self.b_h,
        ]
        .map(|id| tape.param(id));
        let z_pre = tape.linear(&[(w_z, x), (u_z, h)], Some(b_z))?;
        let z = tape.sigmoid(z_pre);
        let r_pre = tape.linear(&[(w_r, x), (u_r, h)], Some(b_r))?;
        let r = tape.sigmoid(r_pre);
        let rh = tape.mul(r, h)?;
        let c_pre = tape.linear(&[(w_h, x), (u_h, rh)], Some(b_h))?;
        let candidate = tape.tanh(c_pre);
        tape.lerp(z, h, candidate)
    }

    /// Runs over `seq` from a zero state (right to left when `reverse`)
    /// and returns the final state.
    pub fn run(&self, tape: &mut Tape, seq: &[Var], reverse: bool) -> Result<Var> {
        let mut h = tape.input(vec![0.0; self.hidden_dim]);
        if reverse {
            for &x in seq.iter().rev() {
                h = self.step(tape, x, h)?;
            }
        } else {
            for &x in seq {
                h = self.step(tape, x, h)?;
            }
        }
        Ok(h)
    }
}

/// Forward and backward final states `(→h_T, ←h_1)` on a tape.
pub fn bigru_states(
    tape: &mut Tape,
    seq: &[Var],
    fwd: &GruParams,
    bwd: &GruParams,
) -> Result<(Var, Var)> {
    if seq.is_empty() {
        return Err(Error::Empty("biGRU input sequence".into()));
    }
    let f = fwd.run(tape, seq, false)?;
    let b = bwd.run(tape, seq, true)?;
    Ok((f, b))
}

/// Single GRU step on plain vectors.
pub fn gru_step(params: &ParamSet, p: &GruParams, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let mut tape = Tape::new(params);
    let xv = tape.input(x.to_vec());
    let hv = tape.input(h.to_vec());
    let out = p.step(&mut tape, xv, hv)?;
    Ok(tape.value(out).to_vec())
}

/// `[→h_T ; ←h_1]` for a non-empty sequence.
pub fn encode_bigru(
    params: &ParamSet,
    seq: &[Vec<f64>],
    fwd: &GruParams,
    bwd: &GruParams,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new(params);
    let xs: Vec<Var> = seq.iter().map(|x| tape.input(x.clone())).collect();
    let (f, b) = bigru_states(&mut tape, &xs, fwd, bwd)?;
    let out = tape.concat(&[f, b]);
    Ok(tape.value(out).to_vec())
}
