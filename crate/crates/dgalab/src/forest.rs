//! Decision-tree induction and the two random-forest configurations.
//!
//! Trees are CART-style: greedy axis-aligned binary splits at midpoints
//! between consecutive distinct feature values, maximizing impurity
//! decrease, with ties broken toward the lowest column index and then the
//! lowest threshold. Zero-gain splits are still taken while a node is impure
//! and separable, so structured patterns a greedy gain heuristic cannot see
//! (XOR-style data) are still fit exactly.
//!
//! The FANCI-style forest has 9 trees (7 Gini, 2 entropy) with per-tree
//! feature subsets of 2 to 18 columns; the B-RF-style forest has 100
//! entropy trees with subsets of at most 20 columns. Subsets are fixed per
//! tree, not re-drawn per split, and every tree trains on a bootstrap
//! resample. Scoring averages the malicious fraction of the reached leaves,
//! which keeps ROC thresholds fine-grained at low false positive rates.
//!
//! # Model file layout (version 1)
//!
//! All integers little-endian:
//!
//! ```text
//! magic "DGAF" | u32 version | u8 schema (0 fanci, 1 brf, 2 full)
//! u32 digest_len | digest bytes | u32 tree_count
//! per tree: u8 criterion (0 gini, 1 entropy)
//!           u32 subset_len | u32 column index ...
//!           pre-order nodes: 0x00 u32 col f64 threshold left right
//!                            0x01 f64 malicious_fraction u64 sample_count
//! ```

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::domain::Label;
use crate::features::{FeatureMatrix, FeatureVector, SchemaName};
use crate::hash::fnv1a64;
use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error)]
pub enum ForestError {
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("schema mismatch: expected {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("unsupported model version {found} (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
}

const MODEL_MAGIC: &[u8; 4] = b"DGAF";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Gini,
    Entropy,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Gini => write!(f, "gini"),
            Criterion::Entropy => write!(f, "entropy"),
        }
    }
}

/// Node impurity from per-class counts `[benign, malicious]`.
pub fn impurity(counts: [usize; 2], criterion: Criterion) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    match criterion {
        Criterion::Gini => {
            let mut sum = 0.0;
            for c in counts {
                let p = c as f64 / total;
                sum += p * p;
            }
            1.0 - sum
        }
        Criterion::Entropy => {
            let mut h = 0.0;
            for c in counts {
                if c > 0 {
                    let p = c as f64 / total;
                    h -= p * p.log2();
                }
            }
            h
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        col: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        malicious_fraction: f64,
        sample_count: usize,
    },
}

impl TreeNode {
    /// Walk a feature row to its leaf fraction. Values `<= threshold` go left.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf {
                    malicious_fraction, ..
                } => return *malicious_fraction,
                TreeNode::Internal {
                    col,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*col] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// The greedy split chosen for a set of rows, if any separating candidate
/// exists under the leaf-size constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub col: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Scan every candidate split (midpoints between consecutive distinct values
/// of each subset column, ascending) and return the first strict maximizer
/// of impurity decrease — i.e. ties resolve to the lowest column, then the
/// lowest threshold.
pub fn best_split(
    matrix: &FeatureMatrix,
    rows: &[usize],
    feature_subset: &[usize],
    criterion: Criterion,
    min_samples_leaf: usize,
) -> Option<Split> {
    let mut parent = [0usize; 2];
    for &r in rows {
        parent[matrix.label(r).as_u8() as usize] += 1;
    }
    let parent_impurity = impurity(parent, criterion);
    let n = rows.len() as f64;
    let mut best: Option<Split> = None;
    let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
    for &col in feature_subset {
        sorted.clear();
        sorted.extend(
            rows.iter()
                .map(|&r| (matrix.row(r)[col], matrix.label(r).as_u8())),
        );
        sorted.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("feature values are finite"));
        let mut left = [0usize; 2];
        let mut right = parent;
        for i in 0..sorted.len() - 1 {
            left[sorted[i].1 as usize] += 1;
            right[sorted[i].1 as usize] -= 1;
            if sorted[i].0 == sorted[i + 1].0 {
                continue;
            }
            let n_left = i + 1;
            let n_right = sorted.len() - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let mut threshold = (sorted[i].0 + sorted[i + 1].0) / 2.0;
            if threshold >= sorted[i + 1].0 {
                // adjacent floats: fall back to the left value so `<=`
                // routing reproduces the counted partition
                threshold = sorted[i].0;
            }
            let gain = parent_impurity
                - (n_left as f64 / n) * impurity(left, criterion)
                - (n_right as f64 / n) * impurity(right, criterion);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    col,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Grow one tree over `rows` (indices into the matrix, bootstrap duplicates
/// allowed). Recursion stops at purity, `max_depth`, the leaf-size floor, or
/// when no candidate split separates the rows.
pub fn train_tree(
    matrix: &FeatureMatrix,
    rows: &[usize],
    feature_subset: &[usize],
    criterion: Criterion,
    max_depth: Option<usize>,
    min_samples_leaf: usize,
) -> Result<TreeNode, ForestError> {
    if rows.is_empty() {
        return Err(ForestError::DegenerateData("no rows".to_string()));
    }
    if feature_subset.is_empty() {
        return Err(ForestError::DegenerateData(
            "empty feature subset".to_string(),
        ));
    }
    if feature_subset.iter().any(|&c| c >= matrix.width()) {
        return Err(ForestError::InvalidConfig(format!(
            "feature subset column out of range for width {}",
            matrix.width()
        )));
    }
    Ok(grow(
        matrix,
        rows.to_vec(),
        feature_subset,
        criterion,
        max_depth,
        min_samples_leaf,
        0,
    ))
}

fn grow(
    matrix: &FeatureMatrix,
    rows: Vec<usize>,
    feature_subset: &[usize],
    criterion: Criterion,
    max_depth: Option<usize>,
    min_samples_leaf: usize,
    depth: usize,
) -> TreeNode {
    let malicious = rows
        .iter()
        .filter(|&&r| matrix.label(r) == Label::Malicious)
        .count();
    let leaf = |rows: &[usize], malicious: usize| TreeNode::Leaf {
        malicious_fraction: malicious as f64 / rows.len() as f64,
        sample_count: rows.len(),
    };
    if malicious == 0 || malicious == rows.len() {
        return leaf(&rows, malicious);
    }
    if max_depth.is_some_and(|d| depth >= d) || rows.len() < 2 * min_samples_leaf {
        return leaf(&rows, malicious);
    }
    let Some(split) = best_split(matrix, &rows, feature_subset, criterion, min_samples_leaf) else {
        // feature-identical rows with mixed labels
        return leaf(&rows, malicious);
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| matrix.row(r)[split.col] <= split.threshold);
    TreeNode::Internal {
        col: split.col,
        threshold: split.threshold,
        left: Box::new(grow(
            matrix,
            left_rows,
            feature_subset,
            criterion,
            max_depth,
            min_samples_leaf,
            depth + 1,
        )),
        right: Box::new(grow(
            matrix,
            right_rows,
            feature_subset,
            criterion,
            max_depth,
            min_samples_leaf,
            depth + 1,
        )),
    }
}

/// Forest training parameters. `criteria` assigns one impurity criterion per
/// tree; subset sizes are drawn uniformly from the inclusive bounds.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub tree_count: usize,
    pub criteria: Vec<Criterion>,
    pub subset_size_min: usize,
    pub subset_size_max: usize,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// 9 trees: 7 Gini then 2 entropy, subsets of 2..=18 features.
    pub fn fanci(seed: u64) -> Self {
        let mut criteria = vec![Criterion::Gini; 7];
        criteria.extend([Criterion::Entropy; 2]);
        Self {
            tree_count: 9,
            criteria,
            subset_size_min: 2,
            subset_size_max: 18,
            bootstrap: true,
            max_depth: None,
            min_samples_leaf: 1,
            seed,
        }
    }

    /// 100 entropy trees, subsets of `min(20, width)` features.
    pub fn brf(seed: u64, width: usize) -> Self {
        let size = width.min(20);
        Self {
            tree_count: 100,
            criteria: vec![Criterion::Entropy; 100],
            subset_size_min: size,
            subset_size_max: size,
            bootstrap: true,
            max_depth: None,
            min_samples_leaf: 1,
            seed,
        }
    }

    fn digest(&self, schema: SchemaName) -> String {
        let criteria: String = self
            .criteria
            .iter()
            .map(|c| match c {
                Criterion::Gini => 'g',
                Criterion::Entropy => 'e',
            })
            .collect();
        let canonical = format!(
            "schema={schema} trees={} criteria={criteria} subset={}..{} bootstrap={} depth={:?} min_leaf={} seed={}",
            self.tree_count,
            self.subset_size_min,
            self.subset_size_max,
            self.bootstrap,
            self.max_depth,
            self.min_samples_leaf,
            self.seed,
        );
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

/// One trained tree with its criterion and fixed feature subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestTree {
    pub root: TreeNode,
    pub criterion: Criterion,
    pub feature_subset: Vec<usize>,
}

/// A trained ensemble. Immutable after training; scoring is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub schema: SchemaName,
    pub trees: Vec<ForestTree>,
    pub train_config_digest: String,
}

/// Train a forest under an explicit config. Per-tree randomness comes from
/// seeds pre-drawn off one master stream, so tree `i` is reproducible
/// regardless of how the others are scheduled.
pub fn train_forest(
    matrix: &FeatureMatrix,
    config: &TrainConfig,
) -> Result<ForestModel, ForestError> {
    if config.tree_count == 0 || config.criteria.len() != config.tree_count {
        return Err(ForestError::InvalidConfig(
            "criteria must assign exactly one entry per tree".to_string(),
        ));
    }
    if config.subset_size_min == 0
        || config.subset_size_min > config.subset_size_max
        || config.subset_size_max > matrix.width()
    {
        return Err(ForestError::InvalidConfig(format!(
            "subset bounds {}..={} invalid for width {}",
            config.subset_size_min,
            config.subset_size_max,
            matrix.width()
        )));
    }
    let n = matrix.n_rows();
    if n == 0 {
        return Err(ForestError::DegenerateData("no rows".to_string()));
    }
    let benign = matrix.count_label(Label::Benign);
    if benign == 0 || benign == n {
        return Err(ForestError::SingleClassData);
    }

    let mut master = SplitMix64::new(config.seed);
    let tree_seeds: Vec<u64> = (0..config.tree_count).map(|_| master.next_u64()).collect();

    let mut trees = Vec::with_capacity(config.tree_count);
    for (i, &tree_seed) in tree_seeds.iter().enumerate() {
        let mut rng = SplitMix64::new(tree_seed);
        let span = (config.subset_size_max - config.subset_size_min) as u64 + 1;
        let size = config.subset_size_min + rng.next_below(span) as usize;
        let feature_subset = rng.sample_indices(matrix.width(), size);
        let rows: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| rng.next_below(n as u64) as usize).collect()
        } else {
            (0..n).collect()
        };
        let root = train_tree(
            matrix,
            &rows,
            &feature_subset,
            config.criteria[i],
            config.max_depth,
            config.min_samples_leaf,
        )?;
        trees.push(ForestTree {
            root,
            criterion: config.criteria[i],
            feature_subset,
        });
    }
    Ok(ForestModel {
        schema: matrix.schema.name,
        trees,
        train_config_digest: config.digest(matrix.schema.name),
    })
}

fn require_schema(matrix: &FeatureMatrix, expected: SchemaName) -> Result<(), ForestError> {
    if matrix.schema.name != expected {
        return Err(ForestError::SchemaMismatch {
            expected: expected.to_string(),
            got: matrix.schema.name.to_string(),
        });
    }
    Ok(())
}

/// Train the 9-tree FANCI-style forest over a FANCI-schema matrix.
pub fn train_fanci(matrix: &FeatureMatrix, seed: u64) -> Result<ForestModel, ForestError> {
    require_schema(matrix, SchemaName::Fanci)?;
    train_forest(matrix, &TrainConfig::fanci(seed))
}

/// Train the 100-tree B-RF-style forest over a BRF-schema matrix.
pub fn train_brf(matrix: &FeatureMatrix, seed: u64) -> Result<ForestModel, ForestError> {
    require_schema(matrix, SchemaName::Brf)?;
    train_forest(matrix, &TrainConfig::brf(seed, matrix.width()))
}

/// Score one feature vector: the mean malicious fraction over all trees.
pub fn score(model: &ForestModel, fv: &FeatureVector) -> Result<f64, ForestError> {
    if fv.schema != model.schema {
        return Err(ForestError::SchemaMismatch {
            expected: model.schema.to_string(),
            got: fv.schema.to_string(),
        });
    }
    Ok(score_row(model, &fv.values))
}

fn score_row(model: &ForestModel, row: &[f64]) -> f64 {
    let sum: f64 = model.trees.iter().map(|t| t.root.predict(row)).sum();
    sum / model.trees.len() as f64
}

/// Score every row of a matrix (schema-checked once).
pub fn score_matrix(model: &ForestModel, matrix: &FeatureMatrix) -> Result<Vec<f64>, ForestError> {
    require_schema(matrix, model.schema)?;
    Ok((0..matrix.n_rows())
        .map(|i| score_row(model, matrix.row(i)))
        .collect())
}

impl ForestModel {
    pub fn save(&self, path: &Path) -> Result<(), ForestError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        fs::write(path, buf).map_err(|e| ForestError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ForestError> {
        let bytes = fs::read(path).map_err(|e| ForestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::read_from(&mut bytes.as_slice())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        w.write_all(&[schema_byte(self.schema)])?;
        let digest = self.train_config_digest.as_bytes();
        w.write_all(&(digest.len() as u32).to_le_bytes())?;
        w.write_all(digest)?;
        w.write_all(&(self.trees.len() as u32).to_le_bytes())?;
        for tree in &self.trees {
            w.write_all(&[match tree.criterion {
                Criterion::Gini => 0u8,
                Criterion::Entropy => 1u8,
            }])?;
            w.write_all(&(tree.feature_subset.len() as u32).to_le_bytes())?;
            for &col in &tree.feature_subset {
                w.write_all(&(col as u32).to_le_bytes())?;
            }
            // pre-order, iteratively: pop writes itself then pushes right, left
            let mut stack = vec![&tree.root];
            while let Some(node) = stack.pop() {
                match node {
                    TreeNode::Internal {
                        col,
                        threshold,
                        left,
                        right,
                    } => {
                        w.write_all(&[0u8])?;
                        w.write_all(&(*col as u32).to_le_bytes())?;
                        w.write_all(&threshold.to_le_bytes())?;
                        stack.push(right);
                        stack.push(left);
                    }
                    TreeNode::Leaf {
                        malicious_fraction,
                        sample_count,
                    } => {
                        w.write_all(&[1u8])?;
                        w.write_all(&malicious_fraction.to_le_bytes())?;
                        w.write_all(&(*sample_count as u64).to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, ForestError> {
        let corrupt = |msg: &str| ForestError::CorruptModel(msg.to_string());
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic, "magic")?;
        if &magic != MODEL_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = read_u32(r, "version")?;
        if version != MODEL_VERSION {
            return Err(ForestError::VersionMismatch {
                found: version,
                supported: MODEL_VERSION,
            });
        }
        let schema = match read_u8(r, "schema")? {
            0 => SchemaName::Fanci,
            1 => SchemaName::Brf,
            2 => SchemaName::Full,
            _ => return Err(corrupt("unknown schema byte")),
        };
        let digest_len = read_u32(r, "digest length")? as usize;
        if digest_len > 1024 {
            return Err(corrupt("digest length out of range"));
        }
        let mut digest = vec![0u8; digest_len];
        read_exact(r, &mut digest, "digest")?;
        let digest = String::from_utf8(digest).map_err(|_| corrupt("digest not UTF-8"))?;
        let tree_count = read_u32(r, "tree count")? as usize;
        if tree_count == 0 {
            return Err(corrupt("zero trees"));
        }
        let mut trees = Vec::with_capacity(tree_count.min(1 << 16));
        for _ in 0..tree_count {
            let criterion = match read_u8(r, "criterion")? {
                0 => Criterion::Gini,
                1 => Criterion::Entropy,
                _ => return Err(corrupt("unknown criterion byte")),
            };
            let subset_len = read_u32(r, "subset length")? as usize;
            if subset_len > 1 << 20 {
                return Err(corrupt("subset length out of range"));
            }
            let mut feature_subset = Vec::with_capacity(subset_len);
            for _ in 0..subset_len {
                feature_subset.push(read_u32(r, "subset column")? as usize);
            }
            let root = read_tree(r)?;
            trees.push(ForestTree {
                root,
                criterion,
                feature_subset,
            });
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe).map_err(|_| corrupt("trailing read"))? != 0 {
            return Err(corrupt("trailing bytes after last tree"));
        }
        Ok(Self {
            schema,
            trees,
            train_config_digest: digest,
        })
    }
}

fn schema_byte(schema: SchemaName) -> u8 {
    match schema {
        SchemaName::Fanci => 0,
        SchemaName::Brf => 1,
        SchemaName::Full => 2,
    }
}

/// Rebuild a pre-order encoded tree with an explicit stack, so a crafted
/// deeply-nested file cannot overflow the call stack.
fn read_tree<R: Read>(r: &mut R) -> Result<TreeNode, ForestError> {
    struct Partial {
        col: usize,
        threshold: f64,
        left: Option<TreeNode>,
    }
    let mut stack: Vec<Partial> = Vec::new();
    let mut budget: u64 = 1 << 26;
    loop {
        if budget == 0 {
            return Err(ForestError::CorruptModel("tree exceeds node budget".into()));
        }
        budget -= 1;
        let completed = match read_u8(r, "node tag")? {
            0 => {
                let col = read_u32(r, "split column")? as usize;
                let threshold = f64::from_le_bytes(read_n(r, "threshold")?);
                if !threshold.is_finite() {
                    return Err(ForestError::CorruptModel("non-finite threshold".into()));
                }
                stack.push(Partial {
                    col,
                    threshold,
                    left: None,
                });
                continue; // children follow in pre-order
            }
            1 => {
                let malicious_fraction = f64::from_le_bytes(read_n(r, "leaf fraction")?);
                let sample_count = u64::from_le_bytes(read_n(r, "leaf count")?) as usize;
                if !(0.0..=1.0).contains(&malicious_fraction) {
                    return Err(ForestError::CorruptModel(
                        "leaf fraction out of range".into(),
                    ));
                }
                TreeNode::Leaf {
                    malicious_fraction,
                    sample_count,
                }
            }
            _ => return Err(ForestError::CorruptModel("unknown node tag".into())),
        };
        // bubble the completed subtree up through any internal nodes that
        // just received their second child
        let mut node = completed;
        loop {
            match stack.last_mut() {
                None => return Ok(node),
                Some(p) if p.left.is_none() => {
                    p.left = Some(node);
                    break; // right child is read next
                }
                Some(_) => {
                    let p = stack.pop().expect("stack checked non-empty");
                    node = TreeNode::Internal {
                        col: p.col,
                        threshold: p.threshold,
                        left: Box::new(p.left.expect("left child present")),
                        right: Box::new(node),
                    };
                }
            }
        }
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), ForestError> {
    r.read_exact(buf)
        .map_err(|_| ForestError::CorruptModel(format!("truncated while reading {what}")))
}

fn read_u8<R: Read>(r: &mut R, what: &str) -> Result<u8, ForestError> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b, what)?;
    Ok(b[0])
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32, ForestError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_n<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N], ForestError> {
    let mut b = [0u8; N];
    read_exact(r, &mut b, what)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureSchema, FeatureVector};

    /// Tiny hand-made matrix: BRF schema is irrelevant to induction logic,
    /// so tests fabricate rows directly.
    fn toy_matrix(rows: &[(&[f64], Label)]) -> FeatureMatrix {
        // width is taken from the first row; pad a fake schema by reusing
        // FANCI and truncating feature subsets to the actual width.
        let schema = FeatureSchema::fanci();
        let width = schema.width();
        let mut m = FeatureMatrix::new(schema);
        for (values, label) in rows {
            let mut padded = values.to_vec();
            padded.resize(width, 0.0);
            m.push(
                FeatureVector {
                    schema: SchemaName::Fanci,
                    values: padded,
                },
                *label,
                "t",
            );
        }
        m
    }

    #[test]
    fn impurity_reference_values() {
        assert_eq!(impurity([10, 0], Criterion::Gini), 0.0);
        assert_eq!(impurity([10, 0], Criterion::Entropy), 0.0);
        assert!((impurity([5, 5], Criterion::Gini) - 0.5).abs() < 1e-12);
        assert!((impurity([5, 5], Criterion::Entropy) - 1.0).abs() < 1e-12);
        assert!((impurity([3, 1], Criterion::Gini) - 0.375).abs() < 1e-12);
        assert!((impurity([3, 1], Criterion::Entropy) - 0.8112781244591328).abs() < 1e-12);
    }

    #[test]
    fn separable_data_gives_depth_one_perfect_tree() {
        let m = toy_matrix(&[
            (&[1.0], Label::Benign),
            (&[2.0], Label::Benign),
            (&[8.0], Label::Malicious),
            (&[9.0], Label::Malicious),
        ]);
        let tree = train_tree(&m, &[0, 1, 2, 3], &[0], Criterion::Gini, None, 1).unwrap();
        assert_eq!(tree.depth(), 1);
        for i in 0..4 {
            let want = m.label(i).as_f64();
            assert_eq!(tree.predict(m.row(i)), want);
        }
    }

    #[test]
    fn single_class_data_is_one_leaf() {
        let m = toy_matrix(&[(&[1.0], Label::Benign), (&[2.0], Label::Benign)]);
        let tree = train_tree(&m, &[0, 1], &[0], Criterion::Gini, None, 1).unwrap();
        assert_eq!(
            tree,
            TreeNode::Leaf {
                malicious_fraction: 0.0,
                sample_count: 2
            }
        );
    }

    #[test]
    fn xor_data_is_fit_exactly_at_depth_two() {
        // No single split improves impurity, but the tree must still take a
        // zero-gain split and resolve the children.
        let m = toy_matrix(&[
            (&[0.0, 0.0], Label::Benign),
            (&[0.0, 1.0], Label::Malicious),
            (&[1.0, 0.0], Label::Malicious),
            (&[1.0, 1.0], Label::Benign),
        ]);
        let tree = train_tree(&m, &[0, 1, 2, 3], &[0, 1], Criterion::Gini, None, 1).unwrap();
        assert_eq!(tree.depth(), 2);
        for i in 0..4 {
            assert_eq!(tree.predict(m.row(i)), m.label(i).as_f64(), "row {i}");
        }
        // and the first split's tie resolves to column 0 at threshold 0.5
        match &tree {
            TreeNode::Internal { col, threshold, .. } => {
                assert_eq!(*col, 0);
                assert_eq!(*threshold, 0.5);
            }
            _ => panic!("expected internal root"),
        }
    }

    #[test]
    fn identical_rows_mixed_labels_become_a_leaf() {
        let m = toy_matrix(&[
            (&[3.0, 3.0], Label::Benign),
            (&[3.0, 3.0], Label::Malicious),
        ]);
        let tree = train_tree(&m, &[0, 1], &[0, 1], Criterion::Entropy, None, 1).unwrap();
        assert_eq!(
            tree,
            TreeNode::Leaf {
                malicious_fraction: 0.5,
                sample_count: 2
            }
        );
    }

    #[test]
    fn zero_rows_is_an_error() {
        let m = toy_matrix(&[(&[1.0], Label::Benign)]);
        assert!(matches!(
            train_tree(&m, &[], &[0], Criterion::Gini, None, 1),
            Err(ForestError::DegenerateData(_))
        ));
    }

    #[test]
    fn max_depth_and_min_leaf_respected() {
        let rows: Vec<(Vec<f64>, Label)> = (0..16)
            .map(|i| {
                (
                    vec![i as f64],
                    if i % 2 == 0 {
                        Label::Benign
                    } else {
                        Label::Malicious
                    },
                )
            })
            .collect();
        let borrowed: Vec<(&[f64], Label)> = rows.iter().map(|(v, l)| (v.as_slice(), *l)).collect();
        let m = toy_matrix(&borrowed);
        let all: Vec<usize> = (0..16).collect();
        let shallow = train_tree(&m, &all, &[0], Criterion::Gini, Some(2), 1).unwrap();
        assert!(shallow.depth() <= 2);
        let chunky = train_tree(&m, &all, &[0], Criterion::Gini, None, 4).unwrap();
        fn min_leaf_count(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { sample_count, .. } => *sample_count,
                TreeNode::Internal { left, right, .. } => {
                    min_leaf_count(left).min(min_leaf_count(right))
                }
            }
        }
        assert!(min_leaf_count(&chunky) >= 4);
    }

    fn separable_training_matrix(n_per_class: usize) -> FeatureMatrix {
        // two informative columns plus noise-free padding
        let mut rows: Vec<(Vec<f64>, Label)> = Vec::new();
        let mut rng = SplitMix64::new(99);
        for i in 0..n_per_class {
            rows.push((
                vec![i as f64 % 10.0, 0.2 + (i % 7) as f64 * 0.01],
                Label::Benign,
            ));
            rows.push((
                vec![10.0 + i as f64 % 10.0, 0.8 + (i % 5) as f64 * 0.01],
                Label::Malicious,
            ));
        }
        rng.shuffle(&mut rows);
        let borrowed: Vec<(&[f64], Label)> = rows.iter().map(|(v, l)| (v.as_slice(), *l)).collect();
        toy_matrix(&borrowed)
    }

    #[test]
    fn fanci_shape() {
        let m = separable_training_matrix(60);
        let model = train_fanci(&m, 7).unwrap();
        assert_eq!(model.trees.len(), 9);
        let gini = model
            .trees
            .iter()
            .filter(|t| t.criterion == Criterion::Gini)
            .count();
        assert_eq!(gini, 7);
        for t in &model.trees {
            assert!((2..=18).contains(&t.feature_subset.len()));
        }
        assert_eq!(model.schema, SchemaName::Fanci);
    }

    #[test]
    fn brf_shape() {
        let schema = FeatureSchema::brf();
        let width = schema.width();
        let mut m = FeatureMatrix::new(schema);
        let mut rng = SplitMix64::new(1);
        for i in 0..200 {
            let label = if i % 2 == 0 {
                Label::Benign
            } else {
                Label::Malicious
            };
            let base = label.as_f64() * 5.0;
            let values: Vec<f64> = (0..width).map(|_| base + rng.next_f64()).collect();
            m.push(
                FeatureVector {
                    schema: SchemaName::Brf,
                    values,
                },
                label,
                "t",
            );
        }
        let model = train_brf(&m, 3).unwrap();
        assert_eq!(model.trees.len(), 100);
        assert!(model
            .trees
            .iter()
            .all(|t| t.criterion == Criterion::Entropy));
        assert!(model.trees.iter().all(|t| t.feature_subset.len() == 20));
    }

    #[test]
    fn training_is_deterministic() {
        let m = separable_training_matrix(40);
        let a = train_fanci(&m, 1234).unwrap();
        let b = train_fanci(&m, 1234).unwrap();
        let mut bytes_a = Vec::new();
        let mut bytes_b = Vec::new();
        a.write_to(&mut bytes_a).unwrap();
        b.write_to(&mut bytes_b).unwrap();
        assert_eq!(bytes_a, bytes_b);
        let c = train_fanci(&m, 1235).unwrap();
        let mut bytes_c = Vec::new();
        c.write_to(&mut bytes_c).unwrap();
        assert_ne!(bytes_a, bytes_c);
    }

    #[test]
    fn single_class_forest_rejected() {
        let m = toy_matrix(&[(&[1.0], Label::Benign), (&[2.0], Label::Benign)]);
        assert!(matches!(
            train_fanci(&m, 0),
            Err(ForestError::SingleClassData)
        ));
    }

    #[test]
    fn schema_mismatch_rejected() {
        let m = separable_training_matrix(10); // FANCI schema
        assert!(matches!(
            train_brf(&m, 0),
            Err(ForestError::SchemaMismatch { .. })
        ));
        let model = train_fanci(&m, 0).unwrap();
        let fv = FeatureVector {
            schema: SchemaName::Brf,
            values: vec![0.0; 26],
        };
        assert!(matches!(
            score(&model, &fv),
            Err(ForestError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn scores_average_leaf_fractions() {
        let leaf = |f: f64| TreeNode::Leaf {
            malicious_fraction: f,
            sample_count: 1,
        };
        let model = ForestModel {
            schema: SchemaName::Fanci,
            trees: vec![
                ForestTree {
                    root: leaf(0.2),
                    criterion: Criterion::Gini,
                    feature_subset: vec![0],
                },
                ForestTree {
                    root: leaf(0.6),
                    criterion: Criterion::Gini,
                    feature_subset: vec![0],
                },
            ],
            train_config_digest: "test".to_string(),
        };
        let fv = FeatureVector {
            schema: SchemaName::Fanci,
            values: vec![0.0; 26],
        };
        assert!((score(&model, &fv).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn forest_training_accuracy_tracks_single_tree() {
        let m = separable_training_matrix(50);
        let all: Vec<usize> = (0..m.n_rows()).collect();
        let tree = train_tree(&m, &all, &[0, 1], Criterion::Gini, None, 1).unwrap();
        let tree_acc = (0..m.n_rows())
            .filter(|&i| (tree.predict(m.row(i)) >= 0.5) == (m.label(i) == Label::Malicious))
            .count() as f64
            / m.n_rows() as f64;
        assert_eq!(tree_acc, 1.0);
        let forest = train_fanci(&m, 5).unwrap();
        let scores = score_matrix(&forest, &m).unwrap();
        let forest_acc = scores
            .iter()
            .zip(m.labels())
            .filter(|(s, l)| (**s >= 0.5) == (**l == Label::Malicious))
            .count() as f64
            / m.n_rows() as f64;
        assert!(forest_acc >= tree_acc - 0.05, "forest_acc = {forest_acc}");
    }

    #[test]
    fn model_roundtrip_preserves_scores() {
        let m = separable_training_matrix(40);
        let model = train_fanci(&m, 77).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.save(&path).unwrap();
        let loaded = ForestModel::load(&path).unwrap();
        assert_eq!(model, loaded);
        let mut rng = SplitMix64::new(0);
        for _ in 0..1000 {
            let fv = FeatureVector {
                schema: SchemaName::Fanci,
                values: (0..26).map(|_| rng.next_f64() * 20.0).collect(),
            };
            assert_eq!(score(&model, &fv).unwrap(), score(&loaded, &fv).unwrap());
        }
    }

    #[test]
    fn truncated_and_versioned_files_rejected() {
        let m = separable_training_matrix(10);
        let model = train_fanci(&m, 2).unwrap();
        let mut bytes = Vec::new();
        model.write_to(&mut bytes).unwrap();

        let truncated = &bytes[..bytes.len() / 2];
        assert!(matches!(
            ForestModel::read_from(&mut &truncated[..]),
            Err(ForestError::CorruptModel(_))
        ));

        let mut future = bytes.clone();
        future[4..8].copy_from_slice(&99u32.to_le_bytes());
        assert!(matches!(
            ForestModel::read_from(&mut &future[..]),
            Err(ForestError::VersionMismatch { found: 99, .. })
        ));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(
            ForestModel::read_from(&mut &trailing[..]),
            Err(ForestError::CorruptModel(_))
        ));

        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(matches!(
            ForestModel::read_from(&mut &bad_magic[..]),
            Err(ForestError::CorruptModel(_))
        ));
    }

    #[test]
    fn greedy_split_matches_exhaustive_search() {
        // Independent oracle: enumerate every (column, midpoint) candidate
        // from scratch and compare the winner under identical tie-breaking.
        fn oracle(
            m: &FeatureMatrix,
            rows: &[usize],
            subset: &[usize],
            criterion: Criterion,
        ) -> Option<Split> {
            let mut parent = [0usize; 2];
            for &r in rows {
                parent[m.label(r).as_u8() as usize] += 1;
            }
            let parent_imp = impurity(parent, criterion);
            let n = rows.len() as f64;
            let mut best: Option<Split> = None;
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
                    if best.is_none_or(|b| gain > b.gain) {
                        best = Some(Split {
                            col,
                            threshold,
                            gain,
                        });
                    }
                }
            }
            best
        }

        let mut rng = SplitMix64::new(2024);
        for trial in 0..100 {
            let n_rows = 2 + rng.next_below(49) as usize;
            let n_cols = 1 + rng.next_below(3) as usize;
            let rows: Vec<(Vec<f64>, Label)> = (0..n_rows)
                .map(|_| {
                    // values on a small grid so ties and duplicates are common
                    let values: Vec<f64> = (0..n_cols).map(|_| rng.next_below(5) as f64).collect();
                    let label = if rng.next_below(2) == 0 {
                        Label::Benign
                    } else {
                        Label::Malicious
                    };
                    (values, label)
                })
                .collect();
            let borrowed: Vec<(&[f64], Label)> =
                rows.iter().map(|(v, l)| (v.as_slice(), *l)).collect();
            let m = toy_matrix(&borrowed);
            let all: Vec<usize> = (0..n_rows).collect();
            let subset: Vec<usize> = (0..n_cols).collect();
            for criterion in [Criterion::Gini, Criterion::Entropy] {
                let got = best_split(&m, &all, &subset, criterion, 1);
                let want = oracle(&m, &all, &subset, criterion);
                match (got, want) {
                    (None, None) => {}
                    (Some(g), Some(w)) => {
                        assert_eq!(g.col, w.col, "trial {trial}");
                        assert_eq!(g.threshold, w.threshold, "trial {trial}");
                        assert_eq!(g.gain, w.gain, "trial {trial}");
                    }
                    other => panic!("trial {trial}: mismatch {other:?}"),
                }
            }
        }
    }
}
