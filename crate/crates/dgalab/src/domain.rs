//! Domain parsing, dataset ingestion and the query-log weak labeler.
//!
//! A [`Domain`] is a second-level label plus a top-level suffix. Parsing
//! splits on the first dot, so `foo.co.uk` becomes `("foo", "co.uk")`: every
//! input is treated as an SLD/TLD pair and multi-label suffixes survive as a
//! unit inside the TLD.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::date::Timestamp;
use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("malformed domain {input:?}: {reason}")]
    MalformedDomain { input: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset {name:?} is empty after filtering")]
    EmptyDataset { name: String },
    #[error("{path} line {line}: {reason}")]
    ParseLine {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
}

fn io_err(path: &Path, source: std::io::Error) -> DomainError {
    DomainError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Class label for a training example. "Malicious" means generated by a DGA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Benign => 0.0,
            Label::Malicious => 1.0,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::Benign => 0,
            Label::Malicious => 1,
        }
    }
}

/// A parsed SLD/TLD pair. Both parts are lowercase; the SLD never starts or
/// ends with a hyphen and the TLD may itself contain dots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Domain {
    sld: String,
    tld: String,
}

const SLD_CHARS: &str = "abcdefghijklmnopqrstuvwxyz0123456789-";

impl Domain {
    /// Build from already-split parts, enforcing the character-set and
    /// hyphen-placement invariants.
    pub fn new(sld: &str, tld: &str) -> Result<Self, DomainError> {
        let sld = sld.to_ascii_lowercase();
        let tld = tld.to_ascii_lowercase();
        let fail = |reason: &str| DomainError::MalformedDomain {
            input: format!("{sld}.{tld}"),
            reason: reason.to_string(),
        };
        if sld.is_empty() {
            return Err(fail("empty second-level label"));
        }
        if tld.is_empty() {
            return Err(fail("empty top-level suffix"));
        }
        if let Some(c) = sld.chars().find(|c| !SLD_CHARS.contains(*c)) {
            return Err(fail(&format!("invalid character {c:?} in SLD")));
        }
        if sld.starts_with('-') || sld.ends_with('-') {
            return Err(fail("SLD begins or ends with a hyphen"));
        }
        if let Some(c) = tld.chars().find(|c| !SLD_CHARS.contains(*c) && *c != '.') {
            return Err(fail(&format!("invalid character {c:?} in TLD")));
        }
        Ok(Self { sld, tld })
    }

    pub fn sld(&self) -> &str {
        &self.sld
    }

    pub fn tld(&self) -> &str {
        &self.tld
    }

    /// `sld.tld` — re-parsing this string yields an equal `Domain`.
    pub fn render(&self) -> String {
        format!("{}.{}", self.sld, self.tld)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.sld, self.tld)
    }
}

/// Parse a raw domain string: lowercase, split on the FIRST dot, validate.
pub fn parse_domain(raw: &str) -> Result<Domain, DomainError> {
    let trimmed = raw.trim();
    match trimmed.split_once('.') {
        Some((sld, tld)) => Domain::new(sld, tld),
        None => Err(DomainError::MalformedDomain {
            input: trimmed.to_string(),
            reason: "no dot separating SLD and TLD".to_string(),
        }),
    }
}

/// One labeled domain with the feed it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub domain: Domain,
    pub label: Label,
    pub source_tag: String,
}

impl LabeledExample {
    pub fn new(domain: Domain, label: Label, source_tag: &str) -> Self {
        assert!(!source_tag.is_empty(), "source_tag must be non-empty");
        Self {
            domain,
            label,
            source_tag: source_tag.to_string(),
        }
    }
}

/// An ordered, deduplicated collection of labeled examples. No two entries
/// share a rendered domain string; insertion order is preserved.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    examples: Vec<LabeledExample>,
    seen: HashSet<String>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.examples == other.examples
    }
}

impl Dataset {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            examples: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn from_examples<I: IntoIterator<Item = LabeledExample>>(name: &str, items: I) -> Self {
        let mut ds = Self::new(name);
        for ex in items {
            ds.insert(ex);
        }
        ds
    }

    /// Insert unless a domain with the same rendering is already present.
    /// Returns whether the example was added.
    pub fn insert(&mut self, example: LabeledExample) -> bool {
        if self.seen.insert(example.domain.render()) {
            self.examples.push(example);
            true
        } else {
            false
        }
    }

    pub fn contains_rendering(&self, rendered: &str) -> bool {
        self.seen.contains(rendered)
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledExample> {
        self.examples.iter()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.examples.iter().filter(|e| e.label == label).count()
    }

    /// Same examples under a different label and tag (used when an
    /// adversarial feed is folded into training as malicious data).
    pub fn relabeled(&self, name: &str, label: Label, source_tag: &str) -> Dataset {
        Dataset::from_examples(
            name,
            self.examples
                .iter()
                .map(|e| LabeledExample::new(e.domain.clone(), label, source_tag)),
        )
    }

    /// Union preserving order; later duplicates are dropped.
    pub fn merged(&self, other: &Dataset, name: &str) -> Dataset {
        Dataset::from_examples(name, self.iter().chain(other.iter()).cloned())
    }
}

/// Result of loading a feed file: the surviving dataset plus how many lines
/// were skipped as unparseable.
#[derive(Debug)]
pub struct LoadSummary {
    pub dataset: Dataset,
    pub skipped_lines: usize,
}

/// Load an Alexa-style ranking file: `rank,domain` lines (a bare `domain`
/// per line is also accepted). A header line is skipped when its first field
/// is not numeric. Keeps the first `limit` parseable domains with an SLD of
/// at least `min_sld_len` characters, in file (rank) order, labeled benign.
pub fn load_alexa(
    path: &Path,
    min_sld_len: usize,
    limit: usize,
) -> Result<LoadSummary, DomainError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut dataset = Dataset::new("alexa");
    let mut skipped = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if dataset.len() >= limit {
            break;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = match line.split_once(',') {
            Some((rank, rest)) => {
                if rank.trim().parse::<u64>().is_err() {
                    if idx == 0 {
                        continue; // header
                    }
                    skipped += 1;
                    continue;
                }
                rest
            }
            None => line,
        };
        match parse_domain(field) {
            Ok(d) if d.sld().len() >= min_sld_len => {
                dataset.insert(LabeledExample::new(d, Label::Benign, "alexa"));
            }
            Ok(_) => {} // too short: filtered, not an error
            Err(_) => skipped += 1,
        }
    }
    if dataset.is_empty() {
        return Err(DomainError::EmptyDataset {
            name: "alexa".to_string(),
        });
    }
    Ok(LoadSummary {
        dataset,
        skipped_lines: skipped,
    })
}

/// Load a one-domain-per-line list (`#` starts a comment) under a fixed
/// label, deduplicated in file order.
pub fn load_domain_list(
    path: &Path,
    label: Label,
    source_tag: &str,
) -> Result<LoadSummary, DomainError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut dataset = Dataset::new(source_tag);
    let mut skipped = 0usize;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_domain(line) {
            Ok(d) => {
                dataset.insert(LabeledExample::new(d, label, source_tag));
            }
            Err(_) => skipped += 1,
        }
    }
    if dataset.is_empty() {
        return Err(DomainError::EmptyDataset {
            name: source_tag.to_string(),
        });
    }
    Ok(LoadSummary {
        dataset,
        skipped_lines: skipped,
    })
}

/// DNS response class recorded for one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryResponse {
    Resolved,
    NxDomain,
}

/// One passive-DNS observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLogRecord {
    pub domain: String,
    pub timestamp: Timestamp,
    pub response: QueryResponse,
}

/// Load a query log: CSV lines `domain,timestamp,response` with RFC 3339
/// timestamps and responses `RESOLVED` or `NXDOMAIN`. Malformed rows are
/// errors here — a silently dropped NXDOMAIN row would flip a weak label.
pub fn load_query_log(path: &Path) -> Result<Vec<QueryLogRecord>, DomainError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| DomainError::ParseLine {
            path: path.display().to_string(),
            line: idx + 1,
            reason: reason.to_string(),
        };
        let mut fields = line.split(',');
        let (domain, ts, resp) = match (fields.next(), fields.next(), fields.next()) {
            (Some(d), Some(t), Some(r)) if fields.next().is_none() => (d, t, r),
            _ => return Err(bad("expected domain,timestamp,response")),
        };
        let timestamp = Timestamp::parse_rfc3339(ts.trim())
            .ok_or_else(|| bad(&format!("bad timestamp {ts:?}")))?;
        let response = match resp.trim() {
            "RESOLVED" => QueryResponse::Resolved,
            "NXDOMAIN" => QueryResponse::NxDomain,
            other => return Err(bad(&format!("bad response {other:?}"))),
        };
        records.push(QueryLogRecord {
            domain: domain.trim().to_string(),
            timestamp,
            response,
        });
    }
    Ok(records)
}

/// Weak-label a query log: a domain is emitted as benign exactly when it has
/// at least two resolved queries, no NXDomain response at all, and the
/// calendar-day span between its first and last resolved query strictly
/// exceeds 30 days. Nothing is ever labeled malicious. Output is sorted by
/// rendered domain so the result is independent of record order.
pub fn weak_label(records: &[QueryLogRecord]) -> Dataset {
    #[derive(Default)]
    struct Tally {
        resolved: usize,
        nx: usize,
        first_day: i64,
        last_day: i64,
    }
    let mut per_domain: BTreeMap<&str, Tally> = BTreeMap::new();
    for rec in records {
        let t = per_domain.entry(rec.domain.as_str()).or_default();
        match rec.response {
            QueryResponse::Resolved => {
                let day = rec.timestamp.utc_date().days_from_epoch();
                if t.resolved == 0 {
                    t.first_day = day;
                    t.last_day = day;
                } else {
                    t.first_day = t.first_day.min(day);
                    t.last_day = t.last_day.max(day);
                }
                t.resolved += 1;
            }
            QueryResponse::NxDomain => t.nx += 1,
        }
    }
    let mut dataset = Dataset::new("qname");
    for (name, tally) in per_domain {
        if tally.resolved >= 2 && tally.nx == 0 && tally.last_day - tally.first_day > 30 {
            if let Ok(domain) = parse_domain(name) {
                dataset.insert(LabeledExample::new(domain, Label::Benign, "qname"));
            }
        }
    }
    dataset
}

/// Number of rendered domain strings appearing in both datasets.
pub fn overlap_count(a: &Dataset, b: &Dataset) -> usize {
    let small: HashSet<String> = a.iter().map(|e| e.domain.render()).collect();
    b.iter()
        .filter(|e| small.contains(&e.domain.render()))
        .count()
}

/// Deterministic stratified train/test split. Each class is shuffled under
/// the seed and cut at `round(n_class * train_fraction)`, so class
/// proportions are preserved to within one example per class.
pub fn split_train_test(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DomainError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DomainError::InvalidFraction(train_fraction));
    }
    let mut rng = SplitMix64::new(seed);
    let mut train = Dataset::new(&format!("{}-train", dataset.name));
    let mut test = Dataset::new(&format!("{}-test", dataset.name));
    for label in [Label::Benign, Label::Malicious] {
        let mut class: Vec<&LabeledExample> = dataset.iter().filter(|e| e.label == label).collect();
        if class.is_empty() {
            continue;
        }
        rng.shuffle(&mut class);
        let n_train = (class.len() as f64 * train_fraction).round() as usize;
        for (i, ex) in class.into_iter().enumerate() {
            if i < n_train {
                train.insert(ex.clone());
            } else {
                test.insert(ex.clone());
            }
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(DomainError::EmptyDataset {
            name: format!("{}-split", dataset.name),
        });
    }
    Ok((train, test))
}
