use super::{ParamSet, Tape, Var};
use crate::error::Result;

/// Denominator floor for relative errors: entries whose analytic and
/// numeric values are both below it are compared absolutely against it.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Parameter name and element index of the largest error.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares the tape gradient of `f` against central differences
/// `(f(θ+ε) − f(θ−ε)) / 2ε` for every parameter element.
pub fn grad_check<F>(params: &ParamSet, eps: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(params);
        let loss = f(&mut tape)?;
        tape.backward(loss)?
    };
    let eval = |ps: &ParamSet| -> Result<f64> {
        let mut tape = Tape::new(ps);
        let loss = f(&mut tape)?;
        Ok(tape.scalar(loss))
    };
    let mut probe = params.clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let ids: Vec<_> = params
        .iter()
        .map(|(id, name, _)| (id, name.to_string()))
        .collect();
    for (id, name) in ids {
        for k in 0..params.get(id).len() {
            let orig = params.get(id).data()[k];
            probe.get_mut(id).data_mut()[k] = orig + eps;
            let plus = eval(&probe)?;
            probe.get_mut(id).data_mut()[k] = orig - eps;
            let minus = eval(&probe)?;
            probe.get_mut(id).data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(analytic.get(id)[k], numeric);
            report.checked += 1;
            if err >= report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((name.clone(), k));
            }
        }
    }
    Ok(report)
}

/// Central-difference check for a function of a flat parameter vector.
pub fn check_flat_gradient<F>(theta: &[f64], analytic: &[f64], eps: f64, mut f: F) -> GradCheck
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = theta.to_vec();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for k in 0..theta.len() {
        probe[k] = theta[k] + eps;
        let plus = f(&probe);
        probe[k] = theta[k] - eps;
        let minus = f(&probe);
        probe[k] = theta[k];
        let err = relative_error(analytic[k], (plus - minus) / (2.0 * eps));
        report.checked += 1;
        if err >= report.max_rel_error {
            report.max_rel_error = err;
            report.worst = Some(("theta".to_string(), k));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_softmax_xent_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let mut ps = ParamSet::new();
            let w = ps.add("w", Tensor::xavier(4, 6, &mut rng)).unwrap();
            let b = ps
                .add(
                    "b",
                    Tensor::from_vec(&[4], (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect())
                        .unwrap(),
                )
                .unwrap();
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let gold = rng.gen_range(0..4);
            let report = grad_check(&ps, 1e-5, |tape| {
                let xv = tape.input(x.clone());
                let (wv, bv) = (tape.param(w), tape.param(b));
                let logits = tape.linear(&[(wv, xv)], Some(bv))?;
                tape.softmax_xent(logits, gold)
            })
            .unwrap();
            assert_eq!(report.checked, 28);
            assert!(report.max_rel_error < 1e-6, "{report:?}");
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let theta = [1.0, 2.0];
        let report = check_flat_gradient(&theta, &[2.0, 0.0], 1e-5, |t| t[0] * t[0] + t[1] * t[1]);
        assert!(report.max_rel_error > 0.5);
        assert_eq!(report.worst, Some(("theta".into(), 1)));
    }
}
