//! The lexical feature catalogue and its three schemas.
//!
//! Forty features are defined over an SLD/TLD pair; the FANCI schema uses 21
//! of them (with the n-gram distribution expanded into six mean/std
//! columns), the BRF schema 26, and FULL the union. Inputs are fixed as
//! follows: whole-domain features read the full rendering, TLD features the
//! TLD text, and everything else the SLD — which for two-part domains is
//! both the public-suffix-free domain and its dot-free form.
//!
//! Column order within a schema is part of the on-disk contract for feature
//! matrices and trained models; see the golden header test below.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::domain::{Dataset, Domain, Label};
use crate::hash::fnv1a64;
use crate::ngram::NgramTable;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("empty string")]
    EmptyString,
    #[error("string of length {len} is too short (needs {needed})")]
    StringTooShort { len: usize, needed: usize },
    #[error("empty dataset: {what}")]
    EmptyDataset { what: String },
    #[error("schema {schema} needs the {n}-gram table")]
    MissingTable { schema: SchemaName, n: usize },
    #[error("column {column}: {reason}")]
    Extraction { column: String, reason: String },
    #[error("{0} rows failed extraction; first: row {1}: {2}")]
    RowErrors(usize, usize, String),
    #[error("schema mismatch: expected {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
}

const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];

fn is_vowel(c: char) -> bool {
    VOWELS.contains(&c)
}

fn is_consonant(c: char) -> bool {
    c.is_ascii_lowercase() && !is_vowel(c)
}

fn is_hex(c: char) -> bool {
    c.is_ascii_digit() || ('a'..='f').contains(&c)
}

/// Shannon entropy in bits over the character distribution of `s`.
pub fn entropy(s: &str) -> Result<f64, FeatureError> {
    let counts = char_counts(s)?;
    let n = s.chars().count() as f64;
    Ok(counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum())
}

/// Gini impurity `1 - sum(p^2)` over the character distribution of `s`.
pub fn gini_index(s: &str) -> Result<f64, FeatureError> {
    let counts = char_counts(s)?;
    let n = s.chars().count() as f64;
    Ok(1.0
        - counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                p * p
            })
            .sum::<f64>())
}

/// `1 - max(p)` over the character distribution of `s`.
pub fn classification_error(s: &str) -> Result<f64, FeatureError> {
    let counts = char_counts(s)?;
    let n = s.chars().count() as f64;
    let max = counts.values().copied().max().unwrap_or(0) as f64;
    Ok(1.0 - max / n)
}

fn char_counts(s: &str) -> Result<BTreeMap<char, usize>, FeatureError> {
    if s.is_empty() {
        return Err(FeatureError::EmptyString);
    }
    // ordered map: summation order must not depend on hash state, or the
    // extracted values stop being bit-reproducible
    let mut counts = BTreeMap::new();
    for c in s.chars() {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    Ok(counts)
}

/// Valid/malicious TLD membership sets, loaded from one-TLD-per-line files.
#[derive(Debug, Clone, Default)]
pub struct TldContext {
    valid: HashSet<String>,
    malicious: HashSet<String>,
}

impl TldContext {
    pub fn new<I, J>(valid: I, malicious: J) -> Self
    where
        I: IntoIterator<Item = String>,
        J: IntoIterator<Item = String>,
    {
        let clean = |items: Vec<String>| -> HashSet<String> {
            items
                .into_iter()
                .map(|s| s.trim().trim_start_matches('.').to_ascii_lowercase())
                .filter(|s| !s.is_empty())
                .collect()
        };
        Self {
            valid: clean(valid.into_iter().collect()),
            malicious: clean(malicious.into_iter().collect()),
        }
    }

    pub fn from_files(valid_path: &Path, malicious_path: &Path) -> Result<Self, FeatureError> {
        Ok(Self::new(
            read_tld_lines(valid_path)?,
            read_tld_lines(malicious_path)?,
        ))
    }

    pub fn is_valid(&self, tld: &str) -> bool {
        self.valid.contains(tld)
    }

    pub fn is_malicious(&self, tld: &str) -> bool {
        self.malicious.contains(tld)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.len()
    }
}

fn read_tld_lines(path: &Path) -> Result<Vec<String>, FeatureError> {
    let text = fs::read_to_string(path).map_err(|e| FeatureError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Corpus n-gram tables an extraction may need. FANCI needs none; BRF and
/// FULL need both the bigram and trigram tables.
#[derive(Debug, Clone, Default)]
pub struct NgramTables {
    pub bigram: Option<NgramTable>,
    pub trigram: Option<NgramTable>,
}

impl NgramTables {
    pub fn new(bigram: NgramTable, trigram: NgramTable) -> Self {
        Self {
            bigram: Some(bigram),
            trigram: Some(trigram),
        }
    }

    /// Build both tables from a benign corpus.
    pub fn from_benign(benign: &Dataset) -> Result<Self, FeatureError> {
        Ok(Self::new(
            NgramTable::build(benign, 2)?,
            NgramTable::build(benign, 3)?,
        ))
    }

    pub fn none() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SchemaName {
    Fanci,
    Brf,
    Full,
}

impl fmt::Display for SchemaName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemaName::Fanci => write!(f, "fanci"),
            SchemaName::Brf => write!(f, "brf"),
            SchemaName::Full => write!(f, "full"),
        }
    }
}

impl std::str::FromStr for SchemaName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fanci" => Ok(SchemaName::Fanci),
            "brf" | "b-rf" => Ok(SchemaName::Brf),
            "full" => Ok(SchemaName::Full),
            other => Err(format!("unknown schema {other:?}")),
        }
    }
}

/// One feature column. The numbering follows the 40-row catalogue; the
/// n-gram distribution row expands into `NgramMean(n)`/`NgramStd(n)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureId {
    DomainLen,
    SldLen,
    TldLen,
    DomainUniqueChars,
    SldUniqueChars,
    TldUniqueChars,
    HasMaliciousTld,
    HasValidTld,
    TldHash,
    ContainsDigits,
    StartsWithDigit,
    UnderscoreRatio,
    SymbolRatio,
    HexRatio,
    DigitRatio,
    VowelRatio,
    ConsonantRatio,
    RepeatedCharRatio,
    ConsecConsonantRatio,
    ConsecDigitRatio,
    SldTokenCount,
    SldDigitCount,
    Entropy,
    GiniIndex,
    ClassificationError,
    NgramMean(u8),
    NgramStd(u8),
    NgramMedian2,
    NgramMedian3,
    NgramCircMedian2,
    NgramCircMedian3,
    SubdomainCount,
    LabelLenMean,
    HasWwwPrefix,
    HasSingleCharLabel,
    ExclusivePrefixRepetition,
    ContainsTldLabel,
    DigitOnlyLabelRatio,
    HexOnlyLabelRatio,
    IsIpAddress,
    AlphabetCardinality,
}

impl FeatureId {
    pub fn column_name(self) -> String {
        use FeatureId::*;
        match self {
            DomainLen => "domain_len".into(),
            SldLen => "sld_len".into(),
            TldLen => "tld_len".into(),
            DomainUniqueChars => "domain_unique_chars".into(),
            SldUniqueChars => "sld_unique_chars".into(),
            TldUniqueChars => "tld_unique_chars".into(),
            HasMaliciousTld => "has_malicious_tld".into(),
            HasValidTld => "has_valid_tld".into(),
            TldHash => "tld_hash".into(),
            ContainsDigits => "contains_digits".into(),
            StartsWithDigit => "starts_with_digit".into(),
            UnderscoreRatio => "underscore_ratio".into(),
            SymbolRatio => "symbol_ratio".into(),
            HexRatio => "hex_ratio".into(),
            DigitRatio => "digit_ratio".into(),
            VowelRatio => "vowel_ratio".into(),
            ConsonantRatio => "consonant_ratio".into(),
            RepeatedCharRatio => "repeated_char_ratio".into(),
            ConsecConsonantRatio => "consec_consonant_ratio".into(),
            ConsecDigitRatio => "consec_digit_ratio".into(),
            SldTokenCount => "sld_token_count".into(),
            SldDigitCount => "sld_digit_count".into(),
            Entropy => "entropy".into(),
            GiniIndex => "gini_index".into(),
            ClassificationError => "classification_error".into(),
            NgramMean(n) => format!("ngram{n}_mean"),
            NgramStd(n) => format!("ngram{n}_std"),
            NgramMedian2 => "ngram2_median".into(),
            NgramMedian3 => "ngram3_median".into(),
            NgramCircMedian2 => "ngram2_circ_median".into(),
            NgramCircMedian3 => "ngram3_circ_median".into(),
            SubdomainCount => "subdomain_count".into(),
            LabelLenMean => "label_len_mean".into(),
            HasWwwPrefix => "has_www_prefix".into(),
            HasSingleCharLabel => "has_single_char_label".into(),
            ExclusivePrefixRepetition => "exclusive_prefix_repetition".into(),
            ContainsTldLabel => "contains_tld_label".into(),
            DigitOnlyLabelRatio => "digit_only_label_ratio".into(),
            HexOnlyLabelRatio => "hex_only_label_ratio".into(),
            IsIpAddress => "is_ip_address".into(),
            AlphabetCardinality => "alphabet_cardinality".into(),
        }
    }
}

fn ngram_distribution_columns() -> Vec<FeatureId> {
    vec![
        FeatureId::NgramMean(1),
        FeatureId::NgramStd(1),
        FeatureId::NgramMean(2),
        FeatureId::NgramStd(2),
        FeatureId::NgramMean(3),
        FeatureId::NgramStd(3),
    ]
}

/// A named, ordered list of feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    pub name: SchemaName,
    columns: Vec<FeatureId>,
}

impl FeatureSchema {
    pub fn of(name: SchemaName) -> Self {
        match name {
            SchemaName::Fanci => Self::fanci(),
            SchemaName::Brf => Self::brf(),
            SchemaName::Full => Self::full(),
        }
    }

    /// The 21 FANCI rows, with the n-gram distribution expanded (26 columns).
    pub fn fanci() -> Self {
        use FeatureId::*;
        let mut columns = vec![
            DomainLen,
            HasValidTld,
            ContainsDigits,
            UnderscoreRatio,
            DigitRatio,
            VowelRatio,
            RepeatedCharRatio,
            ConsecConsonantRatio,
            ConsecDigitRatio,
            Entropy,
        ];
        columns.extend(ngram_distribution_columns());
        columns.extend([
            SubdomainCount,
            LabelLenMean,
            HasWwwPrefix,
            HasSingleCharLabel,
            ExclusivePrefixRepetition,
            ContainsTldLabel,
            DigitOnlyLabelRatio,
            HexOnlyLabelRatio,
            IsIpAddress,
            AlphabetCardinality,
        ]);
        Self {
            name: SchemaName::Fanci,
            columns,
        }
    }

    /// The 26 BRF rows.
    pub fn brf() -> Self {
        use FeatureId::*;
        Self {
            name: SchemaName::Brf,
            columns: vec![
                DomainLen,
                SldLen,
                TldLen,
                DomainUniqueChars,
                SldUniqueChars,
                TldUniqueChars,
                HasMaliciousTld,
                TldHash,
                StartsWithDigit,
                SymbolRatio,
                HexRatio,
                DigitRatio,
                VowelRatio,
                ConsonantRatio,
                RepeatedCharRatio,
                ConsecConsonantRatio,
                ConsecDigitRatio,
                SldTokenCount,
                SldDigitCount,
                Entropy,
                GiniIndex,
                ClassificationError,
                NgramMedian2,
                NgramMedian3,
                NgramCircMedian2,
                NgramCircMedian3,
            ],
        }
    }

    /// All 40 rows in catalogue order (45 columns).
    pub fn full() -> Self {
        use FeatureId::*;
        let mut columns = vec![
            DomainLen,
            SldLen,
            TldLen,
            DomainUniqueChars,
            SldUniqueChars,
            TldUniqueChars,
            HasMaliciousTld,
            HasValidTld,
            TldHash,
            ContainsDigits,
            StartsWithDigit,
            UnderscoreRatio,
            SymbolRatio,
            HexRatio,
            DigitRatio,
            VowelRatio,
            ConsonantRatio,
            RepeatedCharRatio,
            ConsecConsonantRatio,
            ConsecDigitRatio,
            SldTokenCount,
            SldDigitCount,
            Entropy,
            GiniIndex,
            ClassificationError,
        ];
        columns.extend(ngram_distribution_columns());
        columns.extend([
            NgramMedian2,
            NgramMedian3,
            NgramCircMedian2,
            NgramCircMedian3,
            SubdomainCount,
            LabelLenMean,
            HasWwwPrefix,
            HasSingleCharLabel,
            ExclusivePrefixRepetition,
            ContainsTldLabel,
            DigitOnlyLabelRatio,
            HexOnlyLabelRatio,
            IsIpAddress,
            AlphabetCardinality,
        ]);
        Self {
            name: SchemaName::Full,
            columns,
        }
    }

    pub fn columns(&self) -> &[FeatureId] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.column_name()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.column_name() == name)
    }

    fn needs_tables(&self) -> bool {
        !matches!(self.name, SchemaName::Fanci)
    }
}

/// One extracted row under a named schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: SchemaName,
    pub values: Vec<f64>,
}

/// Extract every column of `schema` for one domain.
pub fn extract(
    domain: &Domain,
    schema: &FeatureSchema,
    tables: &NgramTables,
    tld_ctx: &TldContext,
) -> Result<FeatureVector, FeatureError> {
    if schema.needs_tables() {
        if tables.bigram.is_none() {
            return Err(FeatureError::MissingTable {
                schema: schema.name,
                n: 2,
            });
        }
        if tables.trigram.is_none() {
            return Err(FeatureError::MissingTable {
                schema: schema.name,
                n: 3,
            });
        }
    }
    let mut values = Vec::with_capacity(schema.width());
    for &column in schema.columns() {
        let v = compute(column, domain, tables, tld_ctx).map_err(|e| FeatureError::Extraction {
            column: column.column_name(),
            reason: e.to_string(),
        })?;
        debug_assert!(v.is_finite(), "{}: non-finite value", column.column_name());
        values.push(v);
    }
    Ok(FeatureVector {
        schema: schema.name,
        values,
    })
}

fn compute(
    id: FeatureId,
    domain: &Domain,
    tables: &NgramTables,
    tld_ctx: &TldContext,
) -> Result<f64, FeatureError> {
    use FeatureId::*;
    let sld = domain.sld();
    let tld = domain.tld();
    let n = sld.len() as f64;
    let value = match id {
        DomainLen => (sld.len() + 1 + tld.len()) as f64,
        SldLen => n,
        TldLen => tld.len() as f64,
        DomainUniqueChars => {
            let set: HashSet<char> = domain.render().chars().filter(|&c| c != '.').collect();
            set.len() as f64
        }
        SldUniqueChars | AlphabetCardinality => sld.chars().collect::<HashSet<char>>().len() as f64,
        TldUniqueChars => tld.chars().collect::<HashSet<char>>().len() as f64,
        HasMaliciousTld => tld_ctx.is_malicious(tld) as u8 as f64,
        HasValidTld => tld_ctx.is_valid(tld) as u8 as f64,
        // folded to [0, 1) from the top 53 bits so the value stays below 1
        TldHash => (fnv1a64(tld.as_bytes()) >> 11) as f64 / (1u64 << 53) as f64,
        ContainsDigits => sld.chars().any(|c| c.is_ascii_digit()) as u8 as f64,
        StartsWithDigit => sld.starts_with(|c: char| c.is_ascii_digit()) as u8 as f64,
        UnderscoreRatio => sld.chars().filter(|&c| c == '_').count() as f64 / n,
        SymbolRatio => sld.chars().filter(|c| !c.is_ascii_lowercase()).count() as f64 / n,
        HexRatio => sld.chars().filter(|&c| is_hex(c)).count() as f64 / n,
        DigitRatio => sld.chars().filter(char::is_ascii_digit).count() as f64 / n,
        VowelRatio => sld.chars().filter(|&c| is_vowel(c)).count() as f64 / n,
        ConsonantRatio => sld.chars().filter(|&c| is_consonant(c)).count() as f64 / n,
        RepeatedCharRatio => {
            let counts = char_counts(sld)?;
            let repeated = counts.values().filter(|&&c| c >= 2).count();
            repeated as f64 / counts.len() as f64
        }
        ConsecConsonantRatio => run_length_total(sld, is_consonant) as f64 / n,
        ConsecDigitRatio => run_length_total(sld, |c| c.is_ascii_digit()) as f64 / n,
        SldTokenCount => sld.split('-').count() as f64,
        SldDigitCount => sld.chars().filter(char::is_ascii_digit).count() as f64,
        Entropy => entropy(sld)?,
        GiniIndex => gini_index(sld)?,
        ClassificationError => classification_error(sld)?,
        NgramMean(k) => within_string_ngram_stats(sld, k as usize).0,
        NgramStd(k) => within_string_ngram_stats(sld, k as usize).1,
        NgramMedian2 => tables.bigram.as_ref().unwrap().median(sld, false)?,
        NgramMedian3 => tables.trigram.as_ref().unwrap().median(sld, false)?,
        NgramCircMedian2 => tables.bigram.as_ref().unwrap().median(sld, true)?,
        NgramCircMedian3 => tables.trigram.as_ref().unwrap().median(sld, true)?,
        // The public-suffix-free domain of an SLD/TLD pair is the single
        // label `sld`, so the label-based features reduce as follows.
        SubdomainCount => 1.0,
        LabelLenMean => n,
        HasWwwPrefix => (sld == "www") as u8 as f64,
        HasSingleCharLabel => (sld.len() == 1) as u8 as f64,
        ExclusivePrefixRepetition => 0.0, // needs >= 2 identical labels
        ContainsTldLabel => tld_ctx.is_valid(sld) as u8 as f64,
        DigitOnlyLabelRatio => sld.chars().all(|c| c.is_ascii_digit()) as u8 as f64,
        HexOnlyLabelRatio => sld.chars().all(is_hex) as u8 as f64,
        IsIpAddress => is_ipv4_quad(&domain.render()) as u8 as f64,
    };
    Ok(value)
}

/// Total length of maximal runs of two or more matching characters.
fn run_length_total(s: &str, pred: impl Fn(char) -> bool) -> usize {
    let mut total = 0;
    let mut run = 0;
    for c in s.chars() {
        if pred(c) {
            run += 1;
        } else {
            if run >= 2 {
                total += run;
            }
            run = 0;
        }
    }
    if run >= 2 {
        total += run;
    }
    total
}

/// Mean and population standard deviation of the occurrence counts of the
/// distinct n-grams within `s`. Strings shorter than `n` yield (0, 0).
fn within_string_ngram_stats(s: &str, n: usize) -> (f64, f64) {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < n {
        return (0.0, 0.0);
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for window in chars.windows(n) {
        *counts.entry(window.iter().collect()).or_insert(0) += 1;
    }
    let k = counts.len() as f64;
    let mean = counts.values().sum::<usize>() as f64 / k;
    let var = counts
        .values()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / k;
    (mean, var.sqrt())
}

fn is_ipv4_quad(rendered: &str) -> bool {
    let parts: Vec<&str> = rendered.split('.').collect();
    parts.len() == 4
        && parts.iter().all(|p| {
            !p.is_empty()
                && p.len() <= 3
                && p.bytes().all(|b| b.is_ascii_digit())
                && p.parse::<u16>().map(|v| v <= 255).unwrap_or(false)
        })
}

/// A featurized dataset: one row per example, in dataset order, plus labels
/// and source tags.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
    source_tags: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(schema: FeatureSchema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
            labels: Vec::new(),
            source_tags: Vec::new(),
        }
    }

    pub fn push(&mut self, vector: FeatureVector, label: Label, source_tag: &str) {
        assert_eq!(vector.schema, self.schema.name);
        assert_eq!(vector.values.len(), self.schema.width());
        self.rows.push(vector.values);
        self.labels.push(label);
        self.source_tags.push(source_tag.to_string());
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.schema.width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn source_tag(&self, i: usize) -> &str {
        &self.source_tags[i]
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Append all rows of `other`; the schemas must match.
    pub fn append(&mut self, other: &FeatureMatrix) -> Result<(), FeatureError> {
        if other.schema.name != self.schema.name {
            return Err(FeatureError::SchemaMismatch {
                expected: self.schema.name.to_string(),
                got: other.schema.name.to_string(),
            });
        }
        self.rows.extend(other.rows.iter().cloned());
        self.labels.extend(other.labels.iter().copied());
        self.source_tags.extend(other.source_tags.iter().cloned());
        Ok(())
    }

    /// Write as CSV: column names plus `label` and `source_tag`, one row per
    /// example. Floats use the shortest representation that round-trips, so
    /// a save/load cycle is bit-exact.
    pub fn save_csv(&self, path: &Path) -> Result<(), FeatureError> {
        use std::io::Write;
        let mut out = Vec::new();
        writeln!(
            out,
            "{},label,source_tag",
            self.schema.column_names().join(",")
        )
        .unwrap();
        for i in 0..self.n_rows() {
            let values: Vec<String> = self.rows[i].iter().map(|v| format!("{v}")).collect();
            writeln!(
                out,
                "{},{},{}",
                values.join(","),
                self.labels[i].as_u8(),
                self.source_tags[i]
            )
            .unwrap();
        }
        fs::write(path, out).map_err(|e| FeatureError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load_csv(path: &Path) -> Result<Self, FeatureError> {
        let text = fs::read_to_string(path).map_err(|e| FeatureError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let bad = |line: usize, reason: String| FeatureError::Parse {
            path: path.display().to_string(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| bad(1, "empty matrix file".to_string()))?;
        let schema = schema_for_header(header).ok_or_else(|| FeatureError::SchemaMismatch {
            expected: "a fanci, brf or full header".to_string(),
            got: header.chars().take(60).collect(),
        })?;
        let width = schema.width();
        let mut matrix = FeatureMatrix::new(schema);
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width + 2 {
                return Err(bad(
                    idx + 1,
                    format!("expected {} fields, got {}", width + 2, fields.len()),
                ));
            }
            let mut values = Vec::with_capacity(width);
            for f in &fields[..width] {
                values.push(
                    f.parse::<f64>()
                        .map_err(|_| bad(idx + 1, format!("bad number {f:?}")))?,
                );
            }
            let label = match fields[width] {
                "0" => Label::Benign,
                "1" => Label::Malicious,
                other => return Err(bad(idx + 1, format!("bad label {other:?}"))),
            };
            matrix.rows.push(values);
            matrix.labels.push(label);
            matrix.source_tags.push(fields[width + 1].to_string());
        }
        Ok(matrix)
    }
}

fn schema_for_header(header: &str) -> Option<FeatureSchema> {
    for schema in [
        FeatureSchema::fanci(),
        FeatureSchema::brf(),
        FeatureSchema::full(),
    ] {
        let expected = format!("{},label,source_tag", schema.column_names().join(","));
        if header == expected {
            return Some(schema);
        }
    }
    None
}

/// Featurize a whole dataset. Row order matches dataset order; per-row
/// failures are aggregated and reported together.
pub fn featurize_dataset(
    dataset: &Dataset,
    schema: &FeatureSchema,
    tables: &NgramTables,
    tld_ctx: &TldContext,
) -> Result<FeatureMatrix, FeatureError> {
    let mut matrix = FeatureMatrix::new(schema.clone());
    let mut failures: Vec<(usize, String)> = Vec::new();
    for (i, example) in dataset.iter().enumerate() {
        match extract(&example.domain, schema, tables, tld_ctx) {
            Ok(v) => matrix.push(v, example.label, &example.source_tag),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if let Some((first_row, first_msg)) = failures.first() {
        return Err(FeatureError::RowErrors(
            failures.len(),
            *first_row,
            first_msg.clone(),
        ));
    }
    Ok(matrix)
}
