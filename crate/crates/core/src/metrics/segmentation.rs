use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::segment::Segmentation;

/// Matched and total reference segments, for pooling across sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpanMatches {
    pub matched: usize,
    pub total: usize,
}

impl SpanMatches {
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }

    pub fn add(&mut self, other: SpanMatches) {
        self.matched += other.matched;
        self.total += other.total;
    }
}

fn check_lengths(reference: &Segmentation, hypothesis: &Segmentation) -> Result<()> {
    if reference.n_tokens() != hypothesis.n_tokens() {
        return Err(Error::Dimension(format!(
            "reference covers {} tokens, hypothesis {}",
            reference.n_tokens(),
            hypothesis.n_tokens()
        )));
    }
    Ok(())
}

/// Reference spans whose exact `(start, end)` appears in the hypothesis.
pub fn segmentation_accuracy(
    reference: &Segmentation,
    hypothesis: &Segmentation,
) -> Result<SpanMatches> {
    check_lengths(reference, hypothesis)?;
    let hyp: HashSet<_> = hypothesis.spans().iter().collect();
    Ok(SpanMatches {
        matched: reference.spans().iter().filter(|s| hyp.contains(s)).count(),
        total: reference.spans().len(),
    })
}

/// Reference spans matched exactly by a hypothesis span with the same label.
pub fn joint_accuracy<L: PartialEq>(
    reference: &Segmentation,
    reference_labels: &[L],
    hypothesis: &Segmentation,
    hypothesis_labels: &[L],
) -> Result<SpanMatches> {
    check_lengths(reference, hypothesis)?;
    if reference_labels.len() != reference.spans().len()
        || hypothesis_labels.len() != hypothesis.spans().len()
    {
        return Err(Error::Dimension("one label per span required".into()));
    }
    let matched = reference
        .spans()
        .iter()
        .zip(reference_labels)
        .filter(|(span, label)| {
            hypothesis
                .spans()
                .iter()
                .zip(hypothesis_labels)
                .any(|(h, hl)| h == *span && hl == *label)
        })
        .count();
    Ok(SpanMatches {
        matched,
        total: reference.spans().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seg(spans: &[(usize, usize)]) -> Segmentation {
        Segmentation::from_spans(spans.to_vec()).unwrap()
    }

    #[test]
    fn sa_examples() {
        let r = seg(&[(0, 3), (3, 5)]);
        assert_eq!(segmentation_accuracy(&r, &r).unwrap().ratio(), 1.0);
        assert_eq!(
            segmentation_accuracy(&r, &seg(&[(0, 5)])).unwrap().ratio(),
            0.0
        );
        assert_eq!(
            segmentation_accuracy(&r, &seg(&[(0, 3), (3, 4), (4, 5)]))
                .unwrap()
                .ratio(),
            0.5
        );
        assert!(segmentation_accuracy(&r, &seg(&[(0, 4)])).is_err());
    }

    #[test]
    fn ja_examples() {
        let r = seg(&[(0, 3), (3, 5)]);
        assert_eq!(
            joint_accuracy(&r, &[1, 2], &r, &[1, 2]).unwrap().ratio(),
            1.0
        );
        assert_eq!(
            joint_accuracy(&r, &[1, 2], &r, &[1, 0]).unwrap().ratio(),
            0.5
        );
    }

    #[test]
    fn ja_never_exceeds_sa() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let random_seg = |rng: &mut ChaCha8Rng, n: usize| {
            let flags: Vec<bool> = (0..n).map(|i| i == 0 || rng.gen_bool(0.3)).collect();
            Segmentation::from_boundary_flags(&flags).unwrap()
        };
        for _ in 0..1000 {
            let n = rng.gen_range(1..12);
            let r = random_seg(&mut rng, n);
            let h = random_seg(&mut rng, n);
            let rl: Vec<u8> = (0..r.spans().len()).map(|_| rng.gen_range(0..3)).collect();
            let hl: Vec<u8> = (0..h.spans().len()).map(|_| rng.gen_range(0..3)).collect();
            let sa = segmentation_accuracy(&r, &h).unwrap().ratio();
            let ja = joint_accuracy(&r, &rl, &h, &hl).unwrap().ratio();
            assert!((0.0..=1.0).contains(&sa) && (0.0..=1.0).contains(&ja));
            assert!(ja <= sa);
        }
    }
}
