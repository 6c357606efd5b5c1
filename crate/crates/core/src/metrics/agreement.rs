use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::segment::Segmentation;

/// Cohen's kappa `(p_o − p_e) / (1 − p_e)`; 1.0 whenever `p_o = 1`.
pub fn cohens_kappa<L: Eq + Hash>(ann1: &[L], ann2: &[L]) -> Result<f64> {
    if ann1.len() != ann2.len() {
        return Err(Error::Dimension(format!(
            "{} vs {} annotations",
            ann1.len(),
            ann2.len()
        )));
    }
    if ann1.is_empty() {
        return Err(Error::Empty("kappa over no items".into()));
    }
    let n = ann1.len() as f64;
    let agree = ann1.iter().zip(ann2).filter(|(a, b)| a == b).count() as f64;
    let p_o = agree / n;
    if agree == n {
        return Ok(1.0);
    }
    let mut marg1: HashMap<&L, u64> = HashMap::new();
    let mut marg2: HashMap<&L, u64> = HashMap::new();
    for (a, b) in ann1.iter().zip(ann2) {
        *marg1.entry(a).or_default() += 1;
        *marg2.entry(b).or_default() += 1;
    }
    // integer products keep p_e exact and independent of annotator order
    let chance: u64 = marg1
        .iter()
        .map(|(label, c1)| c1 * marg2.get(label).copied().unwrap_or(0))
        .sum();
    let p_e = chance as f64 / (n * n);
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// One-vs-rest kappa for each class in `classes`.
pub fn per_class_kappa<L: Eq + Hash + Copy>(
    ann1: &[L],
    ann2: &[L],
    classes: &[L],
) -> Result<Vec<f64>> {
    classes
        .iter()
        .map(|c| {
            let a: Vec<bool> = ann1.iter().map(|x| x == c).collect();
            let b: Vec<bool> = ann2.iter().map(|x| x == c).collect();
            cohens_kappa(&a, &b)
        })
        .collect()
}

/// Krippendorff's alpha for two coders and nominal values, every unit
/// coded by both: `1 − (n − 1) Σ_{c≠k} o_ck / Σ_{c≠k} n_c n_k`.
pub fn krippendorff_alpha_nominal<L: Eq + Hash>(pairs: &[(L, L)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("alpha over no units".into()));
    }
    let mut marginals: HashMap<&L, f64> = HashMap::new();
    let mut disagreements = 0.0;
    for (a, b) in pairs {
        *marginals.entry(a).or_default() += 1.0;
        *marginals.entry(b).or_default() += 1.0;
        if a != b {
            // the unit contributes o_ab and o_ba
            disagreements += 2.0;
        }
    }
    if disagreements == 0.0 {
        return Ok(1.0);
    }
    let n = 2.0 * pairs.len() as f64;
    let sum_sq: f64 = marginals.values().map(|c| c * c).sum();
    let expected = n * n - sum_sq;
    Ok(1.0 - (n - 1.0) * disagreements / expected)
}

/// Alpha over binary boundary judgments at every inter-token gap
/// (positions 1..n−1) of each sentence.
pub fn krippendorff_alpha_boundaries(seg1: &[Segmentation], seg2: &[Segmentation]) -> Result<f64> {
    if seg1.len() != seg2.len() {
        return Err(Error::Dimension(format!(
            "{} vs {} sentences",
            seg1.len(),
            seg2.len()
        )));
    }
    let mut pairs = Vec::new();
    for (s1, s2) in seg1.iter().zip(seg2) {
        if s1.n_tokens() != s2.n_tokens() {
            return Err(Error::Dimension(format!(
                "sentence with {} vs {} tokens",
                s1.n_tokens(),
                s2.n_tokens()
            )));
        }
        let (b1, b2) = (s1.boundary_flags(), s2.boundary_flags());
        pairs.extend(b1.into_iter().zip(b2).skip(1));
    }
    if pairs.is_empty() {
        return Ok(1.0);
    }
    krippendorff_alpha_nominal(&pairs)
}
