//! ROC construction, fixed-FPR operating points, adversarial detection
//! rates, and the baseline-vs-augmented experiment driver.
//!
//! Thresholds are chosen conservatively: the selected operating point never
//! exceeds the target false positive rate on the data it was chosen from,
//! and when even the strictest score cutoff overshoots the target the result
//! is an explicit `Unachievable` — a real outcome for coarse scorers (a
//! 9-tree forest emits at most ten distinct vote levels), reported as a
//! marked cell rather than an error.
//!
//! Partial AUC is normalized: the integral of TPR over FPR in `[0, target]`,
//! divided by `target`, so values are comparable across targets and read as
//! percentages of the ideal.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::date::Timestamp;
use crate::domain::{Dataset, Label};
use crate::features::{
    featurize_dataset, FeatureError, FeatureMatrix, FeatureSchema, NgramTables, TldContext,
};
use crate::forest::{score_matrix, train_forest, ForestError, ForestModel, TrainConfig};
use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("both classes must be present")]
    SingleClassData,
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("target FPR {0} must lie strictly between 0 and 1")]
    InvalidTarget(f64),
    #[error(
        "no threshold achieves FPR <= {target}: the strictest cutoff already yields {strictest_fpr}"
    )]
    Unachievable { target: f64, strictest_fpr: f64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// One ROC operating point: classify malicious when `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// A full ROC curve. Points run from `(0, 0)` at threshold `+inf` to
/// `(1, 1)` at the minimum score, with strictly decreasing thresholds and
/// non-decreasing rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub positives: usize,
    pub negatives: usize,
}

/// Build the ROC curve by sweeping distinct score thresholds in descending
/// order; tied scores collapse onto one threshold.
pub fn roc(scores: &[f64], labels: &[Label]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let positives = labels.iter().filter(|&&l| l == Label::Malicious).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClassData);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores checked finite")
    });
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            match labels[order[i]] {
                Label::Malicious => tp += 1,
                Label::Benign => fp += 1,
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }
    Ok(RocCurve {
        points,
        positives,
        negatives,
    })
}

/// A chosen operating point with the rates it actually achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub achieved_fpr: f64,
    pub tpr: f64,
}

/// Pick the most permissive threshold whose achieved FPR still does not
/// exceed `target`. The `(0,0)` sentinel does not count: a threshold that
/// classifies nothing positive is not an operating point.
pub fn threshold_at_fpr(curve: &RocCurve, target: f64) -> Result<OperatingPoint, EvalError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(EvalError::InvalidTarget(target));
    }
    let candidates = &curve.points[1..];
    let chosen = candidates.iter().rev().find(|p| p.fpr <= target);
    match chosen {
        Some(p) => Ok(OperatingPoint {
            threshold: p.threshold,
            achieved_fpr: p.fpr,
            tpr: p.tpr,
        }),
        None => Err(EvalError::Unachievable {
            target,
            strictest_fpr: candidates.first().map(|p| p.fpr).unwrap_or(1.0),
        }),
    }
}

/// TPR at the conservative fixed-FPR operating point.
pub fn tpr_at_fpr(curve: &RocCurve, target: f64) -> Result<f64, EvalError> {
    Ok(threshold_at_fpr(curve, target)?.tpr)
}

/// Normalized partial AUC: trapezoidal integral of TPR over FPR in
/// `[0, target]`, divided by `target`.
pub fn partial_auc(curve: &RocCurve, target: f64) -> Result<f64, EvalError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(EvalError::InvalidTarget(target));
    }
    let mut area = 0.0;
    for pair in curve.points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.fpr <= target {
            area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
        } else if a.fpr < target {
            // segment crosses the target: integrate the clipped piece
            let t_mid = a.tpr + (b.tpr - a.tpr) * (target - a.fpr) / (b.fpr - a.fpr);
            area += (target - a.fpr) * (a.tpr + t_mid) / 2.0;
            break;
        } else {
            break;
        }
    }
    Ok(area / target)
}

/// Fraction of scores at or above the threshold.
pub fn detection_rate_scores(scores: &[f64], threshold: f64) -> Result<f64, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    Ok(scores.iter().filter(|&&s| s >= threshold).count() as f64 / scores.len() as f64)
}

/// Fraction of an adversarial domain set scoring at or above `threshold`
/// under `model`. The threshold should come from `threshold_at_fpr` on the
/// model's base test split.
pub fn detection_rate(
    model: &ForestModel,
    adversarial: &Dataset,
    tables: &NgramTables,
    tld_ctx: &TldContext,
    threshold: f64,
) -> Result<f64, EvalError> {
    if adversarial.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let schema = FeatureSchema::of(model.schema);
    let matrix = featurize_dataset(adversarial, &schema, tables, tld_ctx)?;
    let scores = score_matrix(model, &matrix)?;
    detection_rate_scores(&scores, threshold)
}

/// Which forest configuration an experiment trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Fanci,
    Brf,
}

impl ModelKind {
    pub fn schema(self) -> FeatureSchema {
        match self {
            ModelKind::Fanci => FeatureSchema::fanci(),
            ModelKind::Brf => FeatureSchema::brf(),
        }
    }

    fn config(self, seed: u64, width: usize) -> TrainConfig {
        match self {
            ModelKind::Fanci => TrainConfig::fanci(seed),
            ModelKind::Brf => TrainConfig::brf(seed, width),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fanci" => Ok(ModelKind::Fanci),
            "brf" | "b-rf" => Ok(ModelKind::Brf),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

/// Inputs for the full baseline-vs-augmented grid.
pub struct ExperimentInputs<'a> {
    pub base_train: &'a Dataset,
    pub base_test: &'a Dataset,
    /// Named augmentation sets; each is folded into training as malicious.
    pub adversarial_train_sets: Vec<(String, &'a Dataset)>,
    /// Named adversarial test sets; detection rates are reported for each.
    pub adversarial_test_sets: Vec<(String, &'a Dataset)>,
    pub model_kind: ModelKind,
    pub seed: u64,
    pub target_fprs: Vec<f64>,
    pub tables: &'a NgramTables,
    pub tld_ctx: &'a TldContext,
}

pub const REPORT_VERSION: u32 = 1;

/// Detection rate of one adversarial set at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEntry {
    pub set_name: String,
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Metrics at one target FPR. `achievable == false` marks the cell where no
/// threshold meets the target; the partial AUC is still defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprEntry {
    pub target_fpr: f64,
    pub achievable: bool,
    pub threshold: Option<f64>,
    pub achieved_fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub partial_auc: f64,
    pub detections: Vec<DetectionEntry>,
}

/// One trained model's row of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model_id: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub fpr_entries: Vec<FprEntry>,
    /// `(fpr, tpr)` pairs clipped to `fpr <= 0.01` for low-FPR plotting.
    pub roc_points_low_fpr: Vec<(f64, f64)>,
}

/// The full experiment grid: a baseline row plus one row per augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub generated_at: String,
    pub model_kind: ModelKind,
    pub dataset_id: String,
    pub target_fprs: Vec<f64>,
    pub adversarial_test_names: Vec<String>,
    pub rows: Vec<ModelReport>,
}

const ROC_PLOT_MAX_FPR: f64 = 0.01;

/// Train the baseline and every augmented variant, then fill the metric and
/// detection grid. Per-row failures (degenerate retraining) and unachievable
/// FPR targets are recorded in the report; other rows proceed.
pub fn run_experiment(inputs: &ExperimentInputs) -> Result<ExperimentReport, EvalError> {
    let schema = inputs.model_kind.schema();
    let train_matrix =
        featurize_dataset(inputs.base_train, &schema, inputs.tables, inputs.tld_ctx)?;
    let test_matrix = featurize_dataset(inputs.base_test, &schema, inputs.tables, inputs.tld_ctx)?;
    let test_labels = test_matrix.labels().to_vec();

    let mut adv_matrices: Vec<(String, Result<FeatureMatrix, String>)> = Vec::new();
    for (name, ds) in &inputs.adversarial_test_sets {
        let result = featurize_dataset(ds, &schema, inputs.tables, inputs.tld_ctx)
            .map_err(|e| e.to_string());
        adv_matrices.push((name.clone(), result));
    }

    // the baseline trains under the caller's seed verbatim, so it matches a
    // direct train_* call with that seed; retrained rows get derived seeds
    let mut seed_stream = SplitMix64::new(inputs.seed);
    let mut row_specs: Vec<(String, Option<&Dataset>, u64)> =
        vec![("baseline".to_string(), None, inputs.seed)];
    for (name, ds) in &inputs.adversarial_train_sets {
        row_specs.push((
            format!("augmented+{name}"),
            Some(ds),
            seed_stream.next_u64(),
        ));
    }

    let mut rows = Vec::with_capacity(row_specs.len());
    for (model_id, augmentation, train_seed) in row_specs {
        let row = build_row(
            &model_id,
            augmentation,
            &train_matrix,
            &test_matrix,
            &test_labels,
            &adv_matrices,
            inputs,
            train_seed,
        );
        rows.push(match row {
            Ok(row) => row,
            Err(e) => ModelReport {
                model_id,
                status: "failed".to_string(),
                error: Some(e.to_string()),
                fpr_entries: Vec::new(),
                roc_points_low_fpr: Vec::new(),
            },
        });
    }

    Ok(ExperimentReport {
        version: REPORT_VERSION,
        generated_at: Timestamp::now().to_rfc3339(),
        model_kind: inputs.model_kind,
        dataset_id: inputs.base_train.name.clone(),
        target_fprs: inputs.target_fprs.clone(),
        adversarial_test_names: inputs
            .adversarial_test_sets
            .iter()
            .map(|(n, _)| n.clone())
            .collect(),
        rows,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_row(
    model_id: &str,
    augmentation: Option<&Dataset>,
    train_matrix: &FeatureMatrix,
    test_matrix: &FeatureMatrix,
    test_labels: &[Label],
    adv_matrices: &[(String, Result<FeatureMatrix, String>)],
    inputs: &ExperimentInputs,
    train_seed: u64,
) -> Result<ModelReport, EvalError> {
    let schema = inputs.model_kind.schema();
    let matrix = match augmentation {
        None => train_matrix.clone(),
        Some(ds) => {
            let relabeled = ds.relabeled(&ds.name, Label::Malicious, &ds.name);
            let extra = featurize_dataset(&relabeled, &schema, inputs.tables, inputs.tld_ctx)?;
            let mut combined = train_matrix.clone();
            combined.append(&extra)?;
            combined
        }
    };
    let config = inputs.model_kind.config(train_seed, matrix.width());
    let model = train_forest(&matrix, &config)?;
    let scores = score_matrix(&model, test_matrix)?;
    let curve = roc(&scores, test_labels)?;

    let mut fpr_entries = Vec::with_capacity(inputs.target_fprs.len());
    for &target in &inputs.target_fprs {
        let pauc = partial_auc(&curve, target)?;
        match threshold_at_fpr(&curve, target) {
            Ok(op) => {
                let mut detections = Vec::new();
                for (name, matrix) in adv_matrices {
                    let entry = match matrix {
                        Ok(m) => {
                            let adv_scores = score_matrix(&model, m)?;
                            match detection_rate_scores(&adv_scores, op.threshold) {
                                Ok(rate) => DetectionEntry {
                                    set_name: name.clone(),
                                    rate: Some(rate),
                                    error: None,
                                },
                                Err(e) => DetectionEntry {
                                    set_name: name.clone(),
                                    rate: None,
                                    error: Some(e.to_string()),
                                },
                            }
                        }
                        Err(e) => DetectionEntry {
                            set_name: name.clone(),
                            rate: None,
                            error: Some(e.clone()),
                        },
                    };
                    detections.push(entry);
                }
                fpr_entries.push(FprEntry {
                    target_fpr: target,
                    achievable: true,
                    threshold: Some(op.threshold),
                    achieved_fpr: Some(op.achieved_fpr),
                    tpr: Some(op.tpr),
                    partial_auc: pauc,
                    detections,
                });
            }
            Err(EvalError::Unachievable { .. }) => {
                fpr_entries.push(FprEntry {
                    target_fpr: target,
                    achievable: false,
                    threshold: None,
                    achieved_fpr: None,
                    tpr: None,
                    partial_auc: pauc,
                    detections: Vec::new(),
                });
            }
            Err(e) => return Err(e),
        }
    }

    let roc_points_low_fpr = curve
        .points
        .iter()
        .filter(|p| p.fpr <= ROC_PLOT_MAX_FPR)
        .map(|p| (p.fpr, p.tpr))
        .collect();

    Ok(ModelReport {
        model_id: model_id.to_string(),
        status: "ok".to_string(),
        error: None,
        fpr_entries,
        roc_points_low_fpr,
    })
}

/// Output format for `emit_report`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    RocPoints,
}

/// Serialize a report. JSON carries the whole structure; CSV flattens to one
/// row per (model, target FPR) cell; ROC points emit one `roc_<model>.csv`
/// per row, clipped to FPR <= 0.01. Returns the paths written.
pub fn emit_report(
    report: &ExperimentReport,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, EvalError> {
    let io_err = |path: &Path, e: std::io::Error| EvalError::Io {
        path: path.display().to_string(),
        source: e,
    };
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut written = Vec::new();
    match format {
        ReportFormat::Json => {
            let path = out_dir.join("report.json");
            fs::write(&path, serde_json::to_string_pretty(report)?)
                .map_err(|e| io_err(&path, e))?;
            written.push(path);
        }
        ReportFormat::Csv => {
            let path = out_dir.join("report.csv");
            fs::write(&path, report_csv(report)).map_err(|e| io_err(&path, e))?;
            written.push(path);
        }
        ReportFormat::RocPoints => {
            for row in &report.rows {
                let path = out_dir.join(format!("roc_{}.csv", sanitize(&row.model_id)));
                let mut text = String::from("fpr,tpr\n");
                for (fpr, tpr) in &row.roc_points_low_fpr {
                    text.push_str(&format!("{fpr},{tpr}\n"));
                }
                fs::write(&path, text).map_err(|e| io_err(&path, e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn report_csv(report: &ExperimentReport) -> String {
    let mut header = String::from(
        "model_id,target_fpr,status,achievable,threshold,achieved_fpr,tpr,partial_auc",
    );
    for name in &report.adversarial_test_names {
        header.push_str(&format!(",det_{name}"));
    }
    let mut out = header;
    out.push('\n');
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &report.rows {
        if row.status != "ok" {
            for &target in &report.target_fprs {
                out.push_str(&format!(
                    "{},{},failed,,,,,{}\n",
                    row.model_id,
                    target,
                    ",".repeat(report.adversarial_test_names.len())
                ));
            }
            continue;
        }
        for entry in &row.fpr_entries {
            out.push_str(&format!(
                "{},{},ok,{},{},{},{},{}",
                row.model_id,
                entry.target_fpr,
                entry.achievable,
                fmt_opt(entry.threshold),
                fmt_opt(entry.achieved_fpr),
                fmt_opt(entry.tpr),
                entry.partial_auc,
            ));
            for name in &report.adversarial_test_names {
                let rate = entry
                    .detections
                    .iter()
                    .find(|d| &d.set_name == name)
                    .and_then(|d| d.rate);
                out.push(',');
                out.push_str(&fmt_opt(rate));
            }
            out.push('\n');
        }
    }
    out
}
