//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them). Heavy
//! artifacts — the desk-scale B-RF run and its feature tables — are built
//! once and shared.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dgalab::analysis::{compare_features, l1_distance, length_stats, AnalysisFeature};
use dgalab::charbot::{
    candidate_space_size, generate_batch, seed_from_date, CharbotConfig, DEFAULT_ALPHABET,
    DEFAULT_TLDS,
};
use dgalab::defense::{build_filter, plan_filter, FilterOptions, FilterVerdict};
use dgalab::domain::{
    load_alexa, parse_domain, split_train_test, Dataset, Domain, Label, LabeledExample,
};
use dgalab::eval::{
    partial_auc, roc, run_experiment, threshold_at_fpr, tpr_at_fpr, EvalError, ExperimentInputs,
    ModelKind, OperatingPoint, RocCurve,
};
use dgalab::features::{
    extract, featurize_dataset, FeatureMatrix, FeatureSchema, NgramTables, TldContext,
};
use dgalab::forest::{best_split, impurity, score_matrix, train_brf, Criterion, ForestModel};
use dgalab::rng::SplitMix64;

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn tld_context() -> TldContext {
    TldContext::from_files(
        &data_path("valid_tlds.txt"),
        &data_path("malicious_tlds.txt"),
    )
    .expect("bundled TLD lists load")
}

/// Synthetic uniform-random-string DGA: SLDs of 8..=20 characters over
/// a-z0-9, TLDs drawn from a short list.
fn uniform_dga(n: usize, seed: u64) -> Dataset {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    const TLDS: [&str; 6] = ["com", "net", "org", "info", "biz", "ru"];
    let mut rng = SplitMix64::new(seed);
    let mut ds = Dataset::new("uniform-dga");
    while ds.len() < n {
        let len = 8 + rng.next_below(13) as usize;
        let sld: String = (0..len)
            .map(|_| CHARS[rng.next_below(36) as usize] as char)
            .collect();
        let tld = TLDS[rng.next_below(6) as usize];
        let domain = parse_domain(&format!("{sld}.{tld}")).unwrap();
        ds.insert(LabeledExample::new(domain, Label::Malicious, "uniform"));
    }
    ds
}

fn batch_to_dataset(records: &[dgalab::charbot::PerturbationRecord], name: &str) -> Dataset {
    Dataset::from_examples(
        name,
        records
            .iter()
            .map(|r| LabeledExample::new(r.output.clone(), Label::Malicious, "charbot")),
    )
}

/// Desk-scale reference run shared by criteria 6, 7, 8, 9, 11 and 12.
struct SharedRun {
    base_train: Dataset,
    base_test: Dataset,
    tables: NgramTables,
    tld_ctx: TldContext,
    brf_model: ForestModel,
    test_curve: RocCurve,
    op_at_1pct: OperatingPoint,
    charbot_test: Dataset,
    charbot_detection_at_1pct: f64,
    train_and_eval_elapsed: Duration,
    charbot_elapsed: Duration,
}

static SHARED: OnceLock<SharedRun> = OnceLock::new();

fn shared() -> &'static SharedRun {
    SHARED.get_or_init(|| {
        let tld_ctx = tld_context();

        // 20k benign head + 20k uniform-random DGA, split 80/20
        let benign = load_alexa(&data_path("benign_head.csv"), 3, 20_000)
            .expect("benign corpus loads")
            .dataset;
        assert_eq!(benign.len(), 20_000);
        let dga = uniform_dga(20_000, 7777);
        let combined = benign.merged(&dga, "benign-vs-uniform");
        let (base_train, base_test) = split_train_test(&combined, 0.8, 2020).unwrap();

        let started = Instant::now();
        let train_benign = Dataset::from_examples(
            "train-benign",
            base_train
                .iter()
                .filter(|e| e.label == Label::Benign)
                .cloned(),
        );
        let tables = NgramTables::from_benign(&train_benign).unwrap();
        let schema = FeatureSchema::brf();
        let train_matrix = featurize_dataset(&base_train, &schema, &tables, &tld_ctx).unwrap();
        let test_matrix = featurize_dataset(&base_test, &schema, &tables, &tld_ctx).unwrap();
        let brf_model = train_brf(&train_matrix, 42).unwrap();
        let scores = score_matrix(&brf_model, &test_matrix).unwrap();
        let test_curve = roc(&scores, test_matrix.labels()).unwrap();
        let op_at_1pct = threshold_at_fpr(&test_curve, 0.01).unwrap();
        let train_and_eval_elapsed = started.elapsed();

        // CharBot test split: a disjoint seed date, as in a train/test pair
        let charbot_started = Instant::now();
        let sources = load_alexa(&data_path("benign_head.csv"), 6, 10_000)
            .unwrap()
            .dataset;
        let source_domains: Vec<Domain> = sources.iter().map(|e| e.domain.clone()).collect();
        let cfg = CharbotConfig::default();
        let records = generate_batch(
            &cfg,
            &source_domains,
            seed_from_date("2019-01-01").unwrap(),
            10_000,
        )
        .unwrap();
        let charbot_test = batch_to_dataset(&records, "charbot-test");
        let charbot_matrix = featurize_dataset(&charbot_test, &schema, &tables, &tld_ctx).unwrap();
        let charbot_scores = score_matrix(&brf_model, &charbot_matrix).unwrap();
        let charbot_detection_at_1pct = charbot_scores
            .iter()
            .filter(|&&s| s >= op_at_1pct.threshold)
            .count() as f64
            / charbot_scores.len() as f64;
        let charbot_elapsed = charbot_started.elapsed();

        SharedRun {
            base_train,
            base_test,
            tables,
            tld_ctx,
            brf_model,
            test_curve,
            op_at_1pct,
            charbot_test,
            charbot_detection_at_1pct,
            train_and_eval_elapsed,
            charbot_elapsed,
        }
    })
}

#[test]
fn c01_counting_identity() {
    // warm-up, then measure
    assert_eq!(
        candidate_space_size(10_000, 16, 40, 2).unwrap(),
        1_825_200_000
    );
    let started = Instant::now();
    let value = candidate_space_size(10_000, 16, 40, 2).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(value, 1_825_200_000);
    assert!(elapsed < Duration::from_millis(1), "took {elapsed:?}");
    println!("ACCEPTANCE C01 counting-identity: PASS ({value} in {elapsed:?})");
}

#[test]
fn c02_generator_contract() {
    let started = Instant::now();
    let sources = load_alexa(&data_path("benign_head.csv"), 6, 100)
        .unwrap()
        .dataset;
    assert_eq!(sources.len(), 100);
    let source_domains: Vec<Domain> = sources.iter().map(|e| e.domain.clone()).collect();
    let cfg = CharbotConfig::default();
    let batch = generate_batch(&cfg, &source_domains, 42, 10_000).unwrap();
    assert_eq!(batch.len(), 10_000);

    let mut seen = std::collections::HashSet::new();
    for rec in &batch {
        let src: Vec<char> = rec.source.sld().chars().collect();
        let out: Vec<char> = rec.output.sld().chars().collect();
        assert_eq!(src.len(), out.len());
        let hamming = src.iter().zip(&out).filter(|(a, b)| a != b).count();
        assert_eq!(hamming, 2, "{} vs {}", rec.source, rec.output);
        assert!(
            DEFAULT_TLDS.contains(&rec.output.tld()),
            "unexpected TLD {}",
            rec.output.tld()
        );
        assert!(seen.insert(rec.output.render()), "duplicate output");
    }

    let rerun = generate_batch(&cfg, &source_domains, 42, 10_000).unwrap();
    assert_eq!(batch, rerun);
    let mut bytes_a = Vec::new();
    let mut bytes_b = Vec::new();
    dgalab::charbot::write_provenance(&batch, &mut bytes_a).unwrap();
    dgalab::charbot::write_provenance(&rerun, &mut bytes_b).unwrap();
    assert_eq!(bytes_a, bytes_b);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!("ACCEPTANCE C02 generator-contract: PASS (10000 records in {elapsed:?})");
}

#[test]
fn c03_length_statistics() {
    let started = Instant::now();
    let sources = load_alexa(&data_path("benign_head.csv"), 6, 10_000)
        .unwrap()
        .dataset;
    let source_domains: Vec<Domain> = sources.iter().map(|e| e.domain.clone()).collect();
    let cfg = CharbotConfig::default();
    let batch = generate_batch(
        &cfg,
        &source_domains,
        seed_from_date("2018-12-04").unwrap(),
        10_000,
    )
    .unwrap();

    let outputs = batch_to_dataset(&batch, "charbot");
    let used_sources = Dataset::from_examples(
        "charbot-sources",
        batch
            .iter()
            .map(|r| LabeledExample::new(r.source.clone(), Label::Benign, "alexa")),
    );
    let out_stats = length_stats(&outputs).unwrap();
    let src_stats = length_stats(&used_sources).unwrap();
    let diff = (out_stats.mean - src_stats.mean).abs();
    assert!(
        diff <= 0.5,
        "batch mean {} vs source mean {}",
        out_stats.mean,
        src_stats.mean
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "ACCEPTANCE C03 length-statistics: PASS (batch {:.2} vs sources {:.2}, diff {:.3}, {elapsed:?})",
        out_stats.mean, src_stats.mean, diff
    );
}

#[test]
fn c04_metric_oracles() {
    // (a) partial_auc at target 1.0 equals an independently coded trapezoid
    fn full_auc_oracle(curve: &RocCurve) -> f64 {
        let mut area = 0.0;
        for pair in curve.points.windows(2) {
            area += (pair[1].fpr - pair[0].fpr) * (pair[0].tpr + pair[1].tpr) / 2.0;
        }
        area
    }
    let mut rng = SplitMix64::new(404);
    let mut max_diff: f64 = 0.0;
    for _ in 0..1000 {
        let n = 10 + rng.next_below(191) as usize;
        let scores: Vec<f64> = (0..n).map(|_| rng.next_below(50) as f64 / 50.0).collect();
        let labels: Vec<Label> = (0..n)
            .map(|i| {
                if i < 2 {
                    [Label::Benign, Label::Malicious][i]
                } else if rng.next_below(2) == 1 {
                    Label::Malicious
                } else {
                    Label::Benign
                }
            })
            .collect();
        let curve = roc(&scores, &labels).unwrap();
        let diff = (partial_auc(&curve, 1.0).unwrap() - full_auc_oracle(&curve)).abs();
        max_diff = max_diff.max(diff);
    }
    assert!(max_diff <= 1e-12, "max diff {max_diff}");

    // (b) the 4-point hand case matches its enumerated curve exactly
    let labels: Vec<Label> = [1u8, 0, 1, 0]
        .iter()
        .map(|&b| {
            if b == 1 {
                Label::Malicious
            } else {
                Label::Benign
            }
        })
        .collect();
    let curve = roc(&[0.9, 0.8, 0.4, 0.1], &labels).unwrap();
    let expected = [
        (0.0, 0.0, f64::INFINITY),
        (0.0, 0.5, 0.9),
        (0.5, 0.5, 0.8),
        (0.5, 1.0, 0.4),
        (1.0, 1.0, 0.1),
    ];
    assert_eq!(curve.points.len(), expected.len());
    for (p, (fpr, tpr, threshold)) in curve.points.iter().zip(expected) {
        assert_eq!((p.fpr, p.tpr, p.threshold), (fpr, tpr, threshold));
    }

    // (c) chance-level scores: TPR at 1% FPR within 3 binomial sigma of 0.01
    let mut rng = SplitMix64::new(606);
    let n = 100_000;
    let scores: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let labels: Vec<Label> = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                Label::Benign
            } else {
                Label::Malicious
            }
        })
        .collect();
    let curve = roc(&scores, &labels).unwrap();
    let tpr = tpr_at_fpr(&curve, 0.01).unwrap();
    let sigma = (0.01f64 * 0.99 / 50_000.0).sqrt();
    assert!(
        (tpr - 0.01).abs() <= 3.0 * sigma,
        "tpr {tpr} not within 3 sigma ({sigma}) of 0.01"
    );
    println!(
        "ACCEPTANCE C04 metric-oracles: PASS (max pAUC diff {max_diff:.2e}, chance TPR {tpr:.4})"
    );
}

#[test]
fn c05_tree_induction_oracle() {
    // exhaustive-search oracle, coded independently of the implementation
    fn oracle(
        m: &FeatureMatrix,
        rows: &[usize],
        subset: &[usize],
        criterion: Criterion,
    ) -> Option<(usize, f64, f64)> {
        let mut parent = [0usize; 2];
        for &r in rows {
            parent[m.label(r).as_u8() as usize] += 1;
        }
        let parent_imp = impurity(parent, criterion);
        let n = rows.len() as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        for &col in subset {
            let mut values: Vec<f64> = rows.iter().map(|&r| m.row(r)[col]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for pair in values.windows(2) {
                let mut threshold = (pair[0] + pair[1]) / 2.0;
                if threshold >= pair[1] {
                    threshold = pair[0];
                }
                let mut left = [0usize; 2];
                let mut right = [0usize; 2];
                for &r in rows {
                    if m.row(r)[col] <= threshold {
                        left[m.label(r).as_u8() as usize] += 1;
                    } else {
                        right[m.label(r).as_u8() as usize] += 1;
                    }
                }
                let nl = left[0] + left[1];
                let nr = right[0] + right[1];
                if nl == 0 || nr == 0 {
                    continue;
                }
                let gain = parent_imp
                    - (nl as f64 / n) * impurity(left, criterion)
                    - (nr as f64 / n) * impurity(right, criterion);
                if best.is_none_or(|(_, _, g)| gain > g) {
                    best = Some((col, threshold, gain));
                }
            }
        }
        best
    }

    let started = Instant::now();
    let schema = FeatureSchema::fanci();
    let width = schema.width();
    let mut rng = SplitMix64::new(505);
    for trial in 0..100 {
        let n_rows = 2 + rng.next_below(49) as usize;
        let n_cols = 1 + rng.next_below(3) as usize;
        let mut matrix = FeatureMatrix::new(schema.clone());
        for _ in 0..n_rows {
            let mut values = vec![0.0; width];
            for v in values.iter_mut().take(n_cols) {
                *v = rng.next_below(5) as f64;
            }
            let label = if rng.next_below(2) == 1 {
                Label::Malicious
            } else {
                Label::Benign
            };
            matrix.push(
                dgalab::features::FeatureVector {
                    schema: dgalab::features::SchemaName::Fanci,
                    values,
                },
                label,
                "t",
            );
        }
        let rows: Vec<usize> = (0..n_rows).collect();
        let subset: Vec<usize> = (0..n_cols).collect();
        for criterion in [Criterion::Gini, Criterion::Entropy] {
            let got = best_split(&matrix, &rows, &subset, criterion, 1);
            let want = oracle(&matrix, &rows, &subset, criterion);
            match (got, want) {
                (None, None) => {}
                (Some(g), Some((col, threshold, gain))) => {
                    assert_eq!(g.col, col, "trial {trial}");
                    assert_eq!(g.threshold, threshold, "trial {trial}");
                    assert_eq!(g.gain, gain, "trial {trial}");
                }
                other => panic!("trial {trial}: mismatch {other:?}"),
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!("ACCEPTANCE C05 tree-induction-oracle: PASS (100 trials in {elapsed:?})");
}

#[test]
fn c06_desk_scale_separability() {
    let run = shared();
    assert_eq!(run.brf_model.trees.len(), 100);
    let pauc = partial_auc(&run.test_curve, 0.01).unwrap();
    let tpr = run.op_at_1pct.tpr;
    assert!(pauc >= 0.90, "partial AUC at 1% FPR = {pauc}");
    assert!(tpr >= 0.90, "TPR at 1% FPR = {tpr}");
    assert!(
        run.train_and_eval_elapsed < Duration::from_secs(300),
        "took {:?}",
        run.train_and_eval_elapsed
    );
    println!(
        "ACCEPTANCE C06 desk-scale-separability: PASS (pAUC@1% {:.4}, TPR@1% {:.4}, {:?})",
        pauc, tpr, run.train_and_eval_elapsed
    );
}

#[test]
fn c07_evasion_reproduction() {
    let run = shared();
    let gap = run.op_at_1pct.tpr - run.charbot_detection_at_1pct;
    assert!(
        gap >= 0.30,
        "detection {} vs TPR {}: gap {gap}",
        run.charbot_detection_at_1pct,
        run.op_at_1pct.tpr
    );
    println!(
        "ACCEPTANCE C07 evasion-reproduction: PASS (CharBot detection {:.4} vs TPR {:.4}, gap {:.1} points, {:?})",
        run.charbot_detection_at_1pct,
        run.op_at_1pct.tpr,
        gap * 100.0,
        run.charbot_elapsed
    );
}

#[test]
fn c08_retraining_reproduction() {
    let run = shared();
    let started = Instant::now();
    let sources = load_alexa(&data_path("benign_head.csv"), 6, 10_000)
        .unwrap()
        .dataset;
    let source_domains: Vec<Domain> = sources.iter().map(|e| e.domain.clone()).collect();
    let cfg = CharbotConfig::default();
    let augmentation = batch_to_dataset(
        &generate_batch(
            &cfg,
            &source_domains,
            seed_from_date("2018-12-04").unwrap(),
            20_000,
        )
        .unwrap(),
        "charbot-train",
    );

    let inputs = ExperimentInputs {
        base_train: &run.base_train,
        base_test: &run.base_test,
        adversarial_train_sets: vec![("charbot".to_string(), &augmentation)],
        adversarial_test_sets: vec![("charbot".to_string(), &run.charbot_test)],
        model_kind: ModelKind::Brf,
        seed: 1212,
        target_fprs: vec![0.01],
        tables: &run.tables,
        tld_ctx: &run.tld_ctx,
    };
    let report = run_experiment(&inputs).unwrap();
    assert_eq!(report.rows.len(), 2);
    let detection = |row: usize| -> f64 {
        let entry = &report.rows[row].fpr_entries[0];
        assert!(entry.achievable, "row {row} unachievable");
        assert!(entry.achieved_fpr.unwrap() <= 0.01);
        entry.detections[0].rate.unwrap()
    };
    let baseline = detection(0);
    let augmented = detection(1);
    let lift = augmented - baseline;
    assert!(
        lift >= 0.15,
        "baseline {baseline}, augmented {augmented}, lift {lift}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    println!(
        "ACCEPTANCE C08 retraining-reproduction: PASS (detection {:.4} -> {:.4}, +{:.1} points, {elapsed:?})",
        baseline,
        augmented,
        lift * 100.0
    );
}

#[test]
fn c09_fanci_threshold_coarseness() {
    let run = shared();
    let schema = FeatureSchema::fanci();
    let train_matrix =
        featurize_dataset(&run.base_train, &schema, &run.tables, &run.tld_ctx).unwrap();
    let test_matrix =
        featurize_dataset(&run.base_test, &schema, &run.tables, &run.tld_ctx).unwrap();

    // scan training seeds for ones where no threshold reaches 0.1% FPR
    let mut unachievable_seeds = Vec::new();
    let total_runs = 12u64;
    for seed in 1..=total_runs {
        let model = dgalab::forest::train_fanci(&train_matrix, seed).unwrap();
        let scores = score_matrix(&model, &test_matrix).unwrap();
        let curve = roc(&scores, test_matrix.labels()).unwrap();
        match threshold_at_fpr(&curve, 0.001) {
            Ok(_) => {}
            Err(EvalError::Unachievable { .. }) => unachievable_seeds.push(seed),
            Err(e) => panic!("unexpected error: {e}"),
        }
    }
    assert!(
        !unachievable_seeds.is_empty(),
        "no seed in 1..={total_runs} produced an unachievable 0.1% FPR"
    );

    // the harness must report that as a marked cell, not a failure
    let inputs = ExperimentInputs {
        base_train: &run.base_train,
        base_test: &run.base_test,
        adversarial_train_sets: vec![],
        adversarial_test_sets: vec![],
        model_kind: ModelKind::Fanci,
        seed: unachievable_seeds[0],
        target_fprs: vec![0.001, 0.01],
        tables: &run.tables,
        tld_ctx: &run.tld_ctx,
    };
    let report = run_experiment(&inputs).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].status, "ok");
    let strict = &report.rows[0].fpr_entries[0];
    assert_eq!(strict.target_fpr, 0.001);
    assert!(!strict.achievable, "expected a marked unachievable cell");
    assert!(strict.threshold.is_none());
    println!(
        "ACCEPTANCE C09 fanci-threshold-coarseness: PASS (seeds {unachievable_seeds:?} of 1..={total_runs} unachievable at 0.1% FPR, reported as marked cells)"
    );
}

#[test]
fn c10_defense_soundness() {
    let started = Instant::now();
    let sources = load_alexa(&data_path("benign_head.csv"), 6, 100)
        .unwrap()
        .dataset;
    let source_domains: Vec<Domain> = sources.iter().map(|e| e.domain.clone()).collect();
    let target_fpr = 0.01;
    let options = FilterOptions::default();
    let plan = plan_filter(&source_domains, 2, &DEFAULT_ALPHABET, target_fpr, &options).unwrap();
    let filter = build_filter(&source_domains, &DEFAULT_ALPHABET, &plan).unwrap();
    assert_eq!(
        filter.inserted() as u128,
        plan.predicted_insertions,
        "plan/build insertion mismatch"
    );

    let cfg = CharbotConfig::default();
    let batch = generate_batch(&cfg, &source_domains, 31337, 10_000).unwrap();
    let mut hits = 0usize;
    for rec in &batch {
        if filter.check(&rec.output) == FilterVerdict::Hit {
            hits += 1;
        }
    }
    assert_eq!(hits, batch.len(), "false negatives: {}", batch.len() - hits);

    let mut rng = SplitMix64::new(808);
    let trials = 100_000;
    let mut false_hits = 0usize;
    for _ in 0..trials {
        let sld: String = (0..20)
            .map(|_| DEFAULT_ALPHABET[rng.next_below(36) as usize])
            .collect();
        if filter.check_sld(&sld) == FilterVerdict::Hit {
            false_hits += 1;
        }
    }
    let measured_fpr = false_hits as f64 / trials as f64;
    assert!(
        measured_fpr <= 2.0 * target_fpr,
        "measured FPR {measured_fpr}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    println!(
        "ACCEPTANCE C10 defense-soundness: PASS ({} insertions, 0 false negatives, measured FPR {:.4}, {elapsed:?})",
        filter.inserted(),
        measured_fpr
    );
}

#[test]
fn c11_feature_distribution_direction() {
    let run = shared();
    let alexa = load_alexa(&data_path("benign_head.csv"), 3, 4_000)
        .unwrap()
        .dataset;
    let sources = load_alexa(&data_path("benign_head.csv"), 6, 10_000)
        .unwrap()
        .dataset;
    let source_domains: Vec<Domain> = sources.iter().map(|e| e.domain.clone()).collect();
    let cfg = CharbotConfig::default();
    let charbot = batch_to_dataset(
        &generate_batch(&cfg, &source_domains, 1111, 4_000).unwrap(),
        "charbot",
    );
    let uniform = uniform_dga(4_000, 2222);

    let features = AnalysisFeature::standard_panels();
    let curves = compare_features(
        &[
            ("alexa", &alexa),
            ("charbot", &charbot),
            ("uniform", &uniform),
        ],
        &features,
        &run.tables,
    )
    .unwrap();
    assert_eq!(curves.len(), 18);

    let mut closer = 0usize;
    for feature in features {
        let get = |ds: &str| {
            curves
                .iter()
                .find(|c| c.dataset == ds && c.feature == feature.column_name())
                .unwrap()
        };
        let alexa_curve = get("alexa");
        assert!((alexa_curve.integral() - 1.0).abs() <= 1e-3, "{feature:?}");
        assert!(
            (get("charbot").integral() - 1.0).abs() <= 1e-3,
            "{feature:?}"
        );
        assert!(
            (get("uniform").integral() - 1.0).abs() <= 1e-3,
            "{feature:?}"
        );
        let d_charbot = l1_distance(alexa_curve, get("charbot")).unwrap();
        let d_uniform = l1_distance(alexa_curve, get("uniform")).unwrap();
        if d_charbot < d_uniform {
            closer += 1;
        }
        println!(
            "  panel {:<24} L1(alexa,charbot)={:.4} L1(alexa,uniform)={:.4}",
            feature.column_name(),
            d_charbot,
            d_uniform
        );
    }
    assert!(closer >= 5, "CharBot closer on only {closer}/6 panels");
    println!(
        "ACCEPTANCE C11 feature-distribution-direction: PASS (CharBot closer on {closer}/6 panels)"
    );
}

#[test]
fn c12_degenerate_feature_claim() {
    let run = shared();
    let sources = load_alexa(&data_path("benign_head.csv"), 6, 10_000)
        .unwrap()
        .dataset;
    let source_domains: Vec<Domain> = sources.iter().map(|e| e.domain.clone()).collect();
    let cfg = CharbotConfig::default();
    let batch = generate_batch(&cfg, &source_domains, 3333, 5_000).unwrap();

    let schema = FeatureSchema::full();
    let columns = [
        ("subdomain_count", 1.0),
        ("has_www_prefix", 0.0),
        ("has_single_char_label", 0.0),
        ("exclusive_prefix_repetition", 0.0),
        ("contains_tld_label", 0.0),
    ];
    let mut kept = 0usize;
    for rec in &batch {
        let sld = rec.output.sld();
        // the claim's scope: length >= 2, not "www", not itself a valid TLD
        if sld.len() < 2 || sld == "www" || run.tld_ctx.is_valid(sld) {
            continue;
        }
        kept += 1;
        let fv = extract(&rec.output, &schema, &run.tables, &run.tld_ctx).unwrap();
        for (name, expected) in columns {
            let idx = schema.column_index(name).unwrap();
            assert_eq!(
                fv.values[idx],
                expected,
                "{name} varied on {}",
                rec.output.render()
            );
        }
    }
    assert!(kept >= 4_900, "filter kept only {kept}");
    println!("ACCEPTANCE C12 degenerate-feature-claim: PASS ({kept} domains, 5 constant columns)");
}
