//! Feature-distribution comparison and domain-length statistics, emitted as
//! plot-ready data.
//!
//! Density curves come from a Gaussian-kernel KDE with Silverman's
//! bandwidth. When several datasets are compared on one feature they share
//! one grid (spanning every dataset's range plus four bandwidths), so curve
//! distances reduce to an L1 integral over matching grids. Feature values
//! are taken from the same extraction pipeline the classifiers use, over
//! the SLD.

use std::fs;
use std::path::{Path, PathBuf};

use crate::domain::Dataset;
use crate::features::{extract, FeatureError, FeatureSchema, NgramTables, TldContext};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("degenerate data for {what}: {reason}")]
    DegenerateData { what: String, reason: String },
    #[error("empty dataset {0:?}")]
    EmptyDataset(String),
    #[error("curves are on different grids")]
    MismatchedGrids,
    #[error("dataset {dataset:?}, feature {feature:?}: {source}")]
    Curve {
        dataset: String,
        feature: String,
        #[source]
        source: FeatureError,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A kernel density estimate of one feature over one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub feature: String,
    pub dataset: String,
    pub grid: Vec<f64>,
    pub densities: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoidal integral over the grid; close to 1 whenever the grid
    /// spans the data by four bandwidths or more.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.densities)
    }

    /// Write as `x,density` rows to `kde_<dataset>_<feature>.csv`.
    pub fn save_csv(&self, dir: &Path) -> Result<PathBuf, AnalysisError> {
        let path = dir.join(format!("kde_{}_{}.csv", self.dataset, self.feature));
        let mut text = String::from("x,density\n");
        for (x, d) in self.grid.iter().zip(&self.densities) {
            text.push_str(&format!("{x},{d}\n"));
        }
        fs::write(&path, text).map_err(|e| AnalysisError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(path)
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

fn mean_and_pop_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Silverman bandwidth `1.06 * sigma * n^(-1/5)` over the population sigma.
fn silverman_bandwidth(values: &[f64]) -> f64 {
    let (_, std) = mean_and_pop_std(values);
    1.06 * std * (values.len() as f64).powf(-0.2)
}

/// Gaussian-kernel KDE on a uniform grid spanning the data plus four
/// bandwidths each side. Constant samples have no density curve; the caller
/// gets an error naming the point mass.
pub fn kde(values: &[f64], grid_points: usize) -> Result<DensityCurve, AnalysisError> {
    if values.len() < 2 {
        return Err(AnalysisError::DegenerateData {
            what: "kde input".to_string(),
            reason: format!("{} value(s); need at least 2", values.len()),
        });
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= 0.0 {
        return Err(AnalysisError::DegenerateData {
            what: "kde input".to_string(),
            reason: format!("zero variance: point mass at {}", values[0]),
        });
    }
    let bandwidth = silverman_bandwidth(values);
    let grid = uniform_grid(min - 4.0 * bandwidth, max + 4.0 * bandwidth, grid_points);
    let densities = densities_on_grid(values, bandwidth, &grid);
    Ok(DensityCurve {
        feature: String::new(),
        dataset: String::new(),
        grid,
        densities,
        bandwidth,
    })
}

fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

fn densities_on_grid(values: &[f64], bandwidth: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| {
                    let z = (x - v) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Mean and population standard deviation of rendered domain lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthStats {
    pub dataset: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

pub fn length_stats(dataset: &Dataset) -> Result<LengthStats, AnalysisError> {
    if dataset.is_empty() {
        return Err(AnalysisError::EmptyDataset(dataset.name.clone()));
    }
    let lengths: Vec<f64> = dataset
        .iter()
        .map(|e| e.domain.render().chars().count() as f64)
        .collect();
    let (mean, std) = mean_and_pop_std(&lengths);
    Ok(LengthStats {
        dataset: dataset.name.clone(),
        mean,
        std,
        count: lengths.len(),
    })
}

/// Write one `dataset,mean,std,count` CSV for a set of length statistics.
pub fn write_length_stats(stats: &[LengthStats], path: &Path) -> Result<(), AnalysisError> {
    let mut text = String::from("dataset,mean,std,count\n");
    for s in stats {
        text.push_str(&format!("{},{},{},{}\n", s.dataset, s.mean, s.std, s.count));
    }
    fs::write(path, text).map_err(|e| AnalysisError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// The features whose distributions are compared across datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisFeature {
    Entropy,
    Gini,
    TwoGramMedian,
    ThreeGramMedian,
    SymbolRatio,
    ConsecConsonantRatio,
}

impl AnalysisFeature {
    /// The six standard comparison panels.
    pub fn standard_panels() -> [AnalysisFeature; 6] {
        [
            AnalysisFeature::Entropy,
            AnalysisFeature::Gini,
            AnalysisFeature::TwoGramMedian,
            AnalysisFeature::ThreeGramMedian,
            AnalysisFeature::SymbolRatio,
            AnalysisFeature::ConsecConsonantRatio,
        ]
    }

    pub fn column_name(self) -> &'static str {
        match self {
            AnalysisFeature::Entropy => "entropy",
            AnalysisFeature::Gini => "gini_index",
            AnalysisFeature::TwoGramMedian => "ngram2_median",
            AnalysisFeature::ThreeGramMedian => "ngram3_median",
            AnalysisFeature::SymbolRatio => "symbol_ratio",
            AnalysisFeature::ConsecConsonantRatio => "consec_consonant_ratio",
        }
    }
}

impl std::str::FromStr for AnalysisFeature {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entropy" => Ok(AnalysisFeature::Entropy),
            "gini" | "gini_index" => Ok(AnalysisFeature::Gini),
            "2gram-median" | "ngram2_median" => Ok(AnalysisFeature::TwoGramMedian),
            "3gram-median" | "ngram3_median" => Ok(AnalysisFeature::ThreeGramMedian),
            "symbol-ratio" | "symbol_ratio" => Ok(AnalysisFeature::SymbolRatio),
            "consec-consonant-ratio" | "consec_consonant_ratio" => {
                Ok(AnalysisFeature::ConsecConsonantRatio)
            }
            other => Err(format!("unknown analysis feature {other:?}")),
        }
    }
}

const COMPARISON_GRID_MIN_POINTS: usize = 512;
const COMPARISON_GRID_MAX_POINTS: usize = 32_768;

/// Enough grid points that the narrowest kernel is sampled about three
/// times per bandwidth; otherwise near-point-mass curves (one dataset's
/// medians collapsing toward the unseen-n-gram default) would integrate
/// visibly below 1.
fn comparison_grid_points(span: f64, min_bandwidth: f64) -> usize {
    let needed = (span / (min_bandwidth / 3.0)).ceil();
    if !needed.is_finite() {
        return COMPARISON_GRID_MAX_POINTS;
    }
    (needed as usize).clamp(COMPARISON_GRID_MIN_POINTS, COMPARISON_GRID_MAX_POINTS)
}

/// One density curve per `(dataset, feature)` pair. Per feature, all curves
/// share one grid so they can be compared directly; feature values come from
/// the FULL-schema extraction over each domain's SLD.
pub fn compare_features(
    datasets: &[(&str, &Dataset)],
    features: &[AnalysisFeature],
    tables: &NgramTables,
) -> Result<Vec<DensityCurve>, AnalysisError> {
    let schema = FeatureSchema::full();
    let tld_ctx = TldContext::default(); // TLD membership plays no role here
    let mut per_dataset: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for (name, dataset) in datasets {
        if dataset.is_empty() {
            return Err(AnalysisError::EmptyDataset(name.to_string()));
        }
        let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(dataset.len()); features.len()];
        for example in dataset.iter() {
            let fv = extract(&example.domain, &schema, tables, &tld_ctx).map_err(|e| {
                AnalysisError::Curve {
                    dataset: name.to_string(),
                    feature: "extraction".to_string(),
                    source: e,
                }
            })?;
            for (slot, feature) in columns.iter_mut().zip(features) {
                let idx = schema
                    .column_index(feature.column_name())
                    .expect("panel features exist in the full schema");
                slot.push(fv.values[idx]);
            }
        }
        per_dataset.push((name.to_string(), columns));
    }

    let mut curves = Vec::with_capacity(datasets.len() * features.len());
    for (f_idx, feature) in features.iter().enumerate() {
        // shared grid: every dataset's span plus four of its own bandwidths
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut bandwidths = Vec::with_capacity(per_dataset.len());
        for (name, columns) in &per_dataset {
            let values = &columns[f_idx];
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if values.len() < 2 || max - min <= 0.0 {
                return Err(AnalysisError::DegenerateData {
                    what: format!("{name}/{}", feature.column_name()),
                    reason: "constant feature values".to_string(),
                });
            }
            let bandwidth = silverman_bandwidth(values);
            lo = lo.min(min - 4.0 * bandwidth);
            hi = hi.max(max + 4.0 * bandwidth);
            bandwidths.push(bandwidth);
        }
        let min_bandwidth = bandwidths.iter().cloned().fold(f64::INFINITY, f64::min);
        let points = comparison_grid_points(hi - lo, min_bandwidth);
        let grid = uniform_grid(lo, hi, points);
        for ((name, columns), bandwidth) in per_dataset.iter().zip(&bandwidths) {
            let densities = densities_on_grid(&columns[f_idx], *bandwidth, &grid);
            curves.push(DensityCurve {
                feature: feature.column_name().to_string(),
                dataset: name.clone(),
                grid: grid.clone(),
                densities,
                bandwidth: *bandwidth,
            });
        }
    }
    Ok(curves)
}

/// L1 distance between two curves on the same grid.
pub fn l1_distance(a: &DensityCurve, b: &DensityCurve) -> Result<f64, AnalysisError> {
    if a.grid != b.grid {
        return Err(AnalysisError::MismatchedGrids);
    }
    let diffs: Vec<f64> = a
        .densities
        .iter()
        .zip(&b.densities)
        .map(|(x, y)| (x - y).abs())
        .collect();
    Ok(trapezoid(&a.grid, &diffs))
}
