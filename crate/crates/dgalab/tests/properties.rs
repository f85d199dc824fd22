//! Property tests for the structural invariants: parse/render round-trips,
//! edit-distance metric axioms against a reference DP oracle, split
//! partitioning, generator contracts and feature ranges.

use proptest::prelude::*;

use dgalab::charbot::{generate_batch, levenshtein, levenshtein_within, CharbotConfig};
use dgalab::domain::{parse_domain, split_train_test, Dataset, Label, LabeledExample};
use dgalab::eval::roc;
use dgalab::features::{extract, FeatureSchema, NgramTables, TldContext};
use dgalab::ngram::NgramTable;

/// Reference implementation: full DP matrix, no early exit, no row reuse.
fn levenshtein_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in m[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

fn sld_strategy() -> impl Strategy<Value = String> {
    "[a-z0-9]([a-z0-9-]{0,12}[a-z0-9])?"
}

fn tld_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("com".to_string()),
        Just("org".to_string()),
        Just("co.uk".to_string()),
        "[a-z]{2,5}",
    ]
}

proptest! {
    #[test]
    fn parse_render_roundtrip(sld in sld_strategy(), tld in tld_strategy()) {
        let raw = format!("{sld}.{tld}");
        let domain = parse_domain(&raw).unwrap();
        prop_assert_eq!(domain.render(), raw);
        let reparsed = parse_domain(&domain.render()).unwrap();
        prop_assert_eq!(reparsed, domain);
    }

    #[test]
    fn levenshtein_matches_oracle(a in "[a-z0-9]{0,10}", b in "[a-z0-9]{0,10}") {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein_oracle(&a, &b));
    }

    #[test]
    fn levenshtein_is_a_metric(
        a in "[a-z]{0,8}",
        b in "[a-z]{0,8}",
        c in "[a-z]{0,8}",
    ) {
        let ab = levenshtein(&a, &b);
        let ba = levenshtein(&b, &a);
        prop_assert_eq!(ab, ba); // symmetry
        prop_assert_eq!(ab == 0, a == b); // identity of indiscernibles
        let ac = levenshtein(&a, &c);
        let cb = levenshtein(&c, &b);
        prop_assert!(ab <= ac + cb); // triangle inequality
    }

    #[test]
    fn levenshtein_cutoff_agrees(
        a in "[a-z]{0,10}",
        b in "[a-z]{0,10}",
        max in 0usize..6,
    ) {
        let full = levenshtein(&a, &b);
        match levenshtein_within(&a, &b, max) {
            Some(d) => {
                prop_assert_eq!(d, full);
                prop_assert!(d <= max);
            }
            None => prop_assert!(full > max),
        }
    }

    #[test]
    fn split_partitions_for_all_seeds(
        n_benign in 2usize..40,
        n_malicious in 2usize..40,
        seed in any::<u64>(),
    ) {
        let mut ds = Dataset::new("prop");
        for i in 0..n_benign {
            ds.insert(LabeledExample::new(
                parse_domain(&format!("good{i}.com")).unwrap(),
                Label::Benign,
                "t",
            ));
        }
        for i in 0..n_malicious {
            ds.insert(LabeledExample::new(
                parse_domain(&format!("evil{i}.net")).unwrap(),
                Label::Malicious,
                "t",
            ));
        }
        let (train, test) = split_train_test(&ds, 0.75, seed).unwrap();
        prop_assert_eq!(train.len() + test.len(), ds.len());
        let mut all: Vec<String> = train
            .iter()
            .chain(test.iter())
            .map(|e| e.domain.render())
            .collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), ds.len()); // disjoint union

        // stratified to within one example per class
        let frac = 0.75;
        for label in [Label::Benign, Label::Malicious] {
            let total = ds.count_label(label) as f64;
            let got = train.count_label(label) as f64;
            prop_assert!((got - total * frac).abs() <= 1.0);
        }
    }

    #[test]
    fn batch_outputs_stay_within_contract(seed in any::<u64>(), n in 1usize..40) {
        let cfg = CharbotConfig::default();
        let sources: Vec<_> = ["google.com", "wikipedia.org", "facebook.com"]
            .iter()
            .map(|s| parse_domain(s).unwrap())
            .collect();
        let batch = generate_batch(&cfg, &sources, seed, n).unwrap();
        prop_assert_eq!(batch.len(), n);
        for rec in &batch {
            // Hamming distance exactly k implies edit distance in [1, k]
            let d = levenshtein(rec.source.sld(), rec.output.sld());
            prop_assert!(d >= 1 && d <= cfg.k());
            // output characters come from source chars plus the alphabet
            for c in rec.output.sld().chars() {
                prop_assert!(
                    rec.source.sld().contains(c) || cfg.alphabet().contains(&c)
                );
            }
        }
    }

    #[test]
    fn roc_invariant_under_permutation(
        scores in prop::collection::vec(0u8..=10, 4..60),
        perm_seed in any::<u64>(),
    ) {
        // quantized scores, alternating labels so both classes exist
        let scores: Vec<f64> = scores.iter().map(|&s| s as f64 / 10.0).collect();
        let labels: Vec<Label> = (0..scores.len())
            .map(|i| if i % 2 == 0 { Label::Benign } else { Label::Malicious })
            .collect();
        let base = roc(&scores, &labels).unwrap();

        let mut order: Vec<usize> = (0..scores.len()).collect();
        let mut rng = dgalab::SplitMix64::new(perm_seed);
        rng.shuffle(&mut order);
        let p_scores: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
        let p_labels: Vec<Label> = order.iter().map(|&i| labels[i]).collect();
        prop_assert_eq!(roc(&p_scores, &p_labels).unwrap(), base);
    }

    #[test]
    fn feature_ratios_stay_bounded(slds in prop::collection::vec("[a-z0-9]{3,15}", 3..8)) {
        let ds = Dataset::from_examples(
            "prop",
            slds.iter().map(|s| {
                LabeledExample::new(
                    parse_domain(&format!("{s}.com")).unwrap(),
                    Label::Benign,
                    "t",
                )
            }),
        );
        let tables = NgramTables::new(
            NgramTable::build(&ds, 2).unwrap(),
            NgramTable::build(&ds, 3).unwrap(),
        );
        let ctx = TldContext::new(["com".to_string()], ["tk".to_string()]);
        let schema = FeatureSchema::full();
        for example in ds.iter() {
            let fv = extract(&example.domain, &schema, &tables, &ctx).unwrap();
            for (id, v) in schema.columns().iter().zip(&fv.values) {
                prop_assert!(v.is_finite());
                let name = id.column_name();
                if name.ends_with("ratio") || name == "tld_hash" {
                    prop_assert!((0.0..=1.0).contains(v), "{} = {}", name, v);
                }
                if name == "gini_index" {
                    prop_assert!((0.0..1.0).contains(v) || *v == 0.0);
                }
                if name == "entropy" {
                    prop_assert!(*v >= 0.0);
                }
            }
        }
    }
}
