use std::collections::HashSet;

use proptest::prelude::*;

use pragmact::corpus::{
    corpus_to_jsonl, parse_corpus, partition_sizes, split, CorpusKind, SplitSpec,
};
use pragmact::metrics::{
    accuracy_macro_f1, cohens_kappa, joint_accuracy, krippendorff_alpha_boundaries, paired_t_test,
    segmentation_accuracy,
};
use pragmact::segment::Segmentation;
use pragmact::synthetic::{generate, SyntheticConfig};
use pragmact::tensor::{ModelFile, ParamSet, Tensor};

fn segmentation(n: usize) -> impl Strategy<Value = Segmentation> {
    prop::collection::vec(any::<bool>(), n).prop_map(|mut flags| {
        flags[0] = true;
        Segmentation::from_boundary_flags(&flags).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_documents(seed in any::<u64>(), gen_seed in 0u64..50, n in 60usize..400) {
        let data = generate(&SyntheticConfig {
            seed: gen_seed,
            labeled_utterances: n,
            unlabeled_utterances: 0,
            embedding_dim: 2,
            ..SyntheticConfig::default()
        }).unwrap();
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let sp = split(&data.labeled, &spec).unwrap();
        let docs = |c: &pragmact::corpus::Corpus| c.documents().into_iter().map(String::from).collect::<HashSet<_>>();
        let (tr, va, te) = (docs(&sp.train), docs(&sp.val), docs(&sp.test));
        prop_assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
        prop_assert_eq!(tr.len() + va.len() + te.len(), data.labeled.documents().len());
        prop_assert_eq!(sp.train.len() + sp.val.len() + sp.test.len(), data.labeled.len());
        prop_assert_eq!((tr.len(), va.len(), te.len()), partition_sizes(data.labeled.documents().len(), &spec));
        prop_assert_eq!(&split(&data.labeled, &spec).unwrap(), &sp);
    }

    #[test]
    fn corpus_jsonl_round_trips(gen_seed in 0u64..1000, n in 1usize..200, sof in 0.0f64..1.0) {
        let data = generate(&SyntheticConfig {
            seed: gen_seed,
            labeled_utterances: n,
            unlabeled_utterances: n,
            speaker_only_fraction: sof,
            embedding_dim: 2,
            ..SyntheticConfig::default()
        }).unwrap();
        for (c, kind) in [(&data.labeled, CorpusKind::Labeled), (&data.unlabeled, CorpusKind::Unlabeled)] {
            let back = parse_corpus(&corpus_to_jsonl(c), kind, "roundtrip").unwrap();
            prop_assert_eq!(&back, c);
        }
    }

    #[test]
    fn model_file_round_trips_bit_exactly(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..40)) {
        let mut params = ParamSet::new();
        let n = values.len();
        params.add("w", Tensor::from_vec(&[n], values).unwrap()).unwrap();
        params.add("m", Tensor::from_vec(&[1, n], vec![-0.0; n]).unwrap()).unwrap();
        let file = ModelFile { config: vec![("k".into(), "v".into())], dictionary: None, params };
        let back = ModelFile::from_text(&file.to_text()).unwrap();
        for ((_, _, a), (_, _, b)) in file.params.iter().zip(back.params.iter()) {
            let bits = |t: &Tensor| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn segmentation_flags_round_trip(seg in (1usize..30).prop_flat_map(segmentation)) {
        let back = Segmentation::from_boundary_flags(&seg.boundary_flags()).unwrap();
        prop_assert_eq!(&back, &seg);
        prop_assert_eq!(Segmentation::from_labels(&seg.labels()).unwrap(), seg);
    }

    #[test]
    fn joint_accuracy_bounded_by_segmentation(
        (r, h) in (1usize..25).prop_flat_map(|n| (segmentation(n), segmentation(n))),
        seed in any::<u64>(),
    ) {
        let rl: Vec<u64> = (0..r.spans().len() as u64).map(|i| (seed ^ i) % 3).collect();
        let hl: Vec<u64> = (0..h.spans().len() as u64).map(|i| (seed.rotate_left(7) ^ i) % 3).collect();
        let sa = segmentation_accuracy(&r, &h).unwrap();
        let ja = joint_accuracy(&r, &rl, &h, &hl).unwrap();
        prop_assert!(ja.matched <= sa.matched && sa.matched <= sa.total);
        prop_assert!((0.0..=1.0).contains(&sa.ratio()) && ja.ratio() <= sa.ratio());
    }

    #[test]
    fn alpha_is_symmetric(
        pairs in prop::collection::vec((2usize..15).prop_flat_map(|n| (segmentation(n), segmentation(n))), 1..8)
    ) {
        let (a, b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let ab = krippendorff_alpha_boundaries(&a, &b);
        let ba = krippendorff_alpha_boundaries(&b, &a);
        match (ab, ba) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "asymmetric failure"),
        }
        prop_assert_eq!(krippendorff_alpha_boundaries(&a, &a).unwrap_or(1.0), 1.0);
    }

    #[test]
    fn kappa_at_most_one_and_symmetric(
        labels in prop::collection::vec((0u8..4, 0u8..4), 1..60)
    ) {
        let (a, b): (Vec<_>, Vec<_>) = labels.into_iter().unzip();
        let k = cohens_kappa(&a, &b).unwrap();
        prop_assert!(k <= 1.0 || k.is_nan());
        let k2 = cohens_kappa(&b, &a).unwrap();
        prop_assert!(k == k2 || (k.is_nan() && k2.is_nan()));
        prop_assert_eq!(k == 1.0, a == b);
    }

    #[test]
    fn macro_f1_invariant_under_class_permutation(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let classes = ["a", "b", "c", "d"];
        let (g, p): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let base = accuracy_macro_f1(&g, &p, &classes).unwrap();
        let pg: Vec<usize> = g.iter().map(|&x| perm[x]).collect();
        let pp: Vec<usize> = p.iter().map(|&x| perm[x]).collect();
        let moved = accuracy_macro_f1(&pg, &pp, &classes).unwrap();
        prop_assert_eq!(base.accuracy, moved.accuracy);
        prop_assert!((base.macro_f1 - moved.macro_f1).abs() < 1e-12);
    }

    #[test]
    fn t_statistic_is_antisymmetric(
        pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..20)
    ) {
        let (a, b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() <= 1e-12 * ab.t.abs().max(1.0));
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }
}
