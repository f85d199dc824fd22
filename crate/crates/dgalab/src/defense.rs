//! Near-duplicate defense: pre-enumerate the substitution variants of a
//! protected domain list into a Bloom filter, then flag any queried SLD that
//! was enumerated. The filter has no false negatives, so every domain a
//! substitution generator can derive from the protected list is caught; the
//! price is the combinatorially exploding insertion count, which the build
//! plan computes up front and refuses to exceed a memory budget — surfacing
//! infeasibility as a first-class outcome instead of an OOM.
//!
//! Only SLDs are stored: the generator re-draws TLDs freely, so flagging on
//! SLD proximity is strictly more conservative.
//!
//! # Filter file layout (version 1)
//!
//! ```text
//! magic "DGTF" | u32 version | u64 m_bits | u32 hash_count | u64 inserted
//! u32 digest_len | digest bytes | bit array as little-endian u64 words
//! ```
//!
//! Hashes are pinned for portability: `h1 = fnv1a64(sld)`,
//! `h2 = mix64(h1 ^ 0x6A09E667F3BCC909) | 1`, probe `i` sets bit
//! `(h1 + i * h2) mod m_bits` (wrapping arithmetic).

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::charbot::levenshtein_within;
use crate::domain::Domain;
use crate::hash::{fnv1a64, mix64};

#[derive(Debug, thiserror::Error)]
pub enum DefenseError {
    #[error(
        "building this filter needs {needed_bytes} bytes ({predicted_insertions} insertions), over the {budget_bytes}-byte budget"
    )]
    InfeasiblePlan {
        plan: Box<FilterBuildPlan>,
        predicted_insertions: u128,
        needed_bytes: u64,
        budget_bytes: u64,
    },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("plan does not match build inputs: {0}")]
    PlanMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt filter file: {0}")]
    CorruptFilter(String),
    #[error("unsupported filter version {found} (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
}

const FILTER_MAGIC: &[u8; 4] = b"DGTF";
const FILTER_VERSION: u32 = 1;
const BLOOM_H2_SALT: u64 = 0x6A09_E667_F3BC_C909;

pub const DEFAULT_MEMORY_BUDGET_BYTES: u64 = 1 << 30; // 1 GiB

/// Which edit operations the enumeration covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantOps {
    /// Exactly `k` substitutions at distinct positions (the generator's
    /// default operation set): counts are exact and closed-form.
    SubstitutionOnly,
    /// Sequences of `k` edits, each a substitution, insertion or deletion.
    /// The predicted count is the number of edit sequences; distinct
    /// results may be fewer, so the filter is sized conservatively.
    WithInsertionsDeletions,
}

/// Build options beyond the core `(k, alphabet)` parameters.
#[derive(Debug, Clone, Copy)]
pub struct FilterOptions {
    pub include_original: bool,
    pub memory_budget_bytes: u64,
    pub ops: VariantOps,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            include_original: false,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET_BYTES,
            ops: VariantOps::SubstitutionOnly,
        }
    }
}

/// Everything decided before a build: the predicted insertion count and the
/// Bloom geometry derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBuildPlan {
    pub n_sources: usize,
    pub mean_sld_len: f64,
    pub alphabet_size: usize,
    pub k: usize,
    pub predicted_insertions: u128,
    pub target_fpr: f64,
    pub m_bits: u64,
    pub hash_count: u32,
    pub include_original: bool,
    pub ops: VariantOps,
    pub sources_digest: String,
}

fn sources_digest(sources: &[Domain]) -> String {
    let mut joined = String::new();
    for s in sources {
        joined.push_str(&s.render());
        joined.push('\n');
    }
    format!("{:016x}", fnv1a64(joined.as_bytes()))
}

fn alphabet_digest(alphabet: &[char]) -> String {
    let joined: String = alphabet.iter().collect();
    format!("{:016x}", fnv1a64(joined.as_bytes()))
}

/// `C(l, k) * (m - 1)^k`: exact count of distinct SLDs at substitution
/// distance exactly `k`.
fn substitution_variants(l: usize, m: usize, k: usize) -> Result<u128, DefenseError> {
    let overflow = || DefenseError::InvalidParameters("variant count exceeds u128".to_string());
    let mut choose: u128 = 1;
    for i in 1..=k {
        choose = choose
            .checked_mul((l - k + i) as u128)
            .ok_or_else(overflow)?
            / i as u128;
    }
    let mut result = choose;
    for _ in 0..k {
        result = result.checked_mul((m - 1) as u128).ok_or_else(overflow)?;
    }
    Ok(result)
}

/// Count of length-`k` edit sequences from a string of length `l` (the
/// mixed-ops analogue of the closed-form substitution count).
fn edit_sequences(l: usize, m: usize, k: usize) -> Result<u128, DefenseError> {
    if k == 0 {
        return Ok(1);
    }
    let overflow = || DefenseError::InvalidParameters("variant count exceeds u128".to_string());
    let subs = (l as u128)
        .checked_mul((m - 1) as u128)
        .ok_or_else(overflow)?
        .checked_mul(edit_sequences(l, m, k - 1)?)
        .ok_or_else(overflow)?;
    let ins = ((l + 1) as u128)
        .checked_mul(m as u128)
        .ok_or_else(overflow)?
        .checked_mul(edit_sequences(l + 1, m, k - 1)?)
        .ok_or_else(overflow)?;
    let del = if l > 1 {
        (l as u128)
            .checked_mul(edit_sequences(l - 1, m, k - 1)?)
            .ok_or_else(overflow)?
    } else {
        0
    };
    subs.checked_add(ins)
        .and_then(|v| v.checked_add(del))
        .ok_or_else(overflow)
}

/// Predict the insertion count and derive the Bloom geometry. Fails with
/// `InfeasiblePlan` — carrying the numbers — when the bit array would not
/// fit the memory budget.
pub fn plan_filter(
    sources: &[Domain],
    k: usize,
    alphabet: &[char],
    target_fpr: f64,
    options: &FilterOptions,
) -> Result<FilterBuildPlan, DefenseError> {
    if sources.is_empty() {
        return Err(DefenseError::InvalidParameters(
            "source list is empty".to_string(),
        ));
    }
    if alphabet.len() < 2 {
        return Err(DefenseError::InvalidParameters(
            "alphabet needs at least two characters".to_string(),
        ));
    }
    if !(target_fpr > 0.0 && target_fpr < 0.5) {
        return Err(DefenseError::InvalidParameters(format!(
            "target FPR {target_fpr} must lie in (0, 0.5)"
        )));
    }
    for s in sources {
        if s.sld().len() < k {
            return Err(DefenseError::InvalidParameters(format!(
                "source {} is shorter than k={k}",
                s.render()
            )));
        }
        // the closed-form count assumes m-1 replacement choices per position,
        // which requires every source character to be in the alphabet
        if let Some(c) = s.sld().chars().find(|c| !alphabet.contains(c)) {
            return Err(DefenseError::InvalidParameters(format!(
                "source {} contains {c:?}, which is outside the replacement alphabet",
                s.render()
            )));
        }
    }
    let m = alphabet.len();
    let mut predicted: u128 = 0;
    for s in sources {
        let l = s.sld().chars().count();
        let per_source = match options.ops {
            VariantOps::SubstitutionOnly => substitution_variants(l, m, k)?,
            VariantOps::WithInsertionsDeletions => edit_sequences(l, m, k)?,
        };
        predicted = predicted
            .checked_add(per_source)
            .ok_or_else(|| DefenseError::InvalidParameters("count exceeds u128".to_string()))?;
    }
    if options.include_original && k > 0 {
        predicted += sources.len() as u128;
    }

    // standard Bloom sizing: m = -n ln p / (ln 2)^2, h = (m / n) ln 2
    let n = predicted as f64;
    let ln2 = std::f64::consts::LN_2;
    let m_bits = ((-n * target_fpr.ln()) / (ln2 * ln2)).ceil().max(8.0) as u64;
    let hash_count = ((m_bits as f64 / n) * ln2).ceil().max(1.0) as u32;

    let plan = FilterBuildPlan {
        n_sources: sources.len(),
        mean_sld_len: sources
            .iter()
            .map(|s| s.sld().chars().count() as f64)
            .sum::<f64>()
            / sources.len() as f64,
        alphabet_size: m,
        k,
        predicted_insertions: predicted,
        target_fpr,
        m_bits,
        hash_count,
        include_original: options.include_original,
        ops: options.ops,
        sources_digest: sources_digest(sources),
    };
    let needed_bytes = m_bits.div_ceil(8);
    if needed_bytes > options.memory_budget_bytes {
        return Err(DefenseError::InfeasiblePlan {
            predicted_insertions: plan.predicted_insertions,
            needed_bytes,
            budget_bytes: options.memory_budget_bytes,
            plan: Box::new(plan),
        });
    }
    Ok(plan)
}

/// Verdict of a filter membership query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Hit,
    Miss,
}

impl fmt::Display for FilterVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterVerdict::Hit => write!(f, "HIT"),
            FilterVerdict::Miss => write!(f, "MISS"),
        }
    }
}

/// Bloom filter over enumerated SLD variants. No false negatives for
/// inserted strings; false positives bounded near the planned rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TyposquatFilter {
    bits: Vec<u64>,
    m_bits: u64,
    hash_count: u32,
    inserted: u64,
    params_digest: String,
}

impl TyposquatFilter {
    fn with_geometry(m_bits: u64, hash_count: u32, params_digest: String) -> Self {
        let words = (m_bits.div_ceil(64)) as usize;
        Self {
            bits: vec![0u64; words],
            m_bits,
            hash_count,
            inserted: 0,
            params_digest,
        }
    }

    fn probe(&self, h1: u64, h2: u64, i: u32) -> (usize, u64) {
        let idx = h1.wrapping_add((i as u64).wrapping_mul(h2)) % self.m_bits;
        ((idx / 64) as usize, 1u64 << (idx % 64))
    }

    fn insert(&mut self, sld: &str) {
        let h1 = fnv1a64(sld.as_bytes());
        let h2 = mix64(h1 ^ BLOOM_H2_SALT) | 1;
        for i in 0..self.hash_count {
            let (word, mask) = self.probe(h1, h2, i);
            self.bits[word] |= mask;
        }
        self.inserted += 1;
    }

    /// Membership query on the SLD: `Hit` means "within k substitutions of
    /// some protected SLD, probably".
    pub fn check(&self, domain: &Domain) -> FilterVerdict {
        self.check_sld(domain.sld())
    }

    pub fn check_sld(&self, sld: &str) -> FilterVerdict {
        let h1 = fnv1a64(sld.as_bytes());
        let h2 = mix64(h1 ^ BLOOM_H2_SALT) | 1;
        for i in 0..self.hash_count {
            let (word, mask) = self.probe(h1, h2, i);
            if self.bits[word] & mask == 0 {
                return FilterVerdict::Miss;
            }
        }
        FilterVerdict::Hit
    }

    pub fn m_bits(&self) -> u64 {
        self.m_bits
    }

    pub fn hash_count(&self) -> u32 {
        self.hash_count
    }

    /// Number of insert operations performed (duplicates counted).
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn params_digest(&self) -> &str {
        &self.params_digest
    }

    pub fn save(&self, path: &Path) -> Result<(), DefenseError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        fs::write(path, buf).map_err(|e| DefenseError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, DefenseError> {
        let bytes = fs::read(path).map_err(|e| DefenseError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::read_from(&mut bytes.as_slice())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(FILTER_MAGIC)?;
        w.write_all(&FILTER_VERSION.to_le_bytes())?;
        w.write_all(&self.m_bits.to_le_bytes())?;
        w.write_all(&self.hash_count.to_le_bytes())?;
        w.write_all(&self.inserted.to_le_bytes())?;
        let digest = self.params_digest.as_bytes();
        w.write_all(&(digest.len() as u32).to_le_bytes())?;
        w.write_all(digest)?;
        for word in &self.bits {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, DefenseError> {
        let corrupt = |msg: &str| DefenseError::CorruptFilter(msg.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| corrupt("truncated magic"))?;
        if &magic != FILTER_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)
            .map_err(|_| corrupt("truncated version"))?;
        let version = u32::from_le_bytes(b4);
        if version != FILTER_VERSION {
            return Err(DefenseError::VersionMismatch {
                found: version,
                supported: FILTER_VERSION,
            });
        }
        r.read_exact(&mut b8)
            .map_err(|_| corrupt("truncated m_bits"))?;
        let m_bits = u64::from_le_bytes(b8);
        if m_bits < 8 {
            return Err(corrupt("m_bits below minimum"));
        }
        r.read_exact(&mut b4)
            .map_err(|_| corrupt("truncated hash count"))?;
        let hash_count = u32::from_le_bytes(b4);
        if hash_count == 0 {
            return Err(corrupt("zero hash functions"));
        }
        r.read_exact(&mut b8)
            .map_err(|_| corrupt("truncated inserted count"))?;
        let inserted = u64::from_le_bytes(b8);
        r.read_exact(&mut b4)
            .map_err(|_| corrupt("truncated digest length"))?;
        let digest_len = u32::from_le_bytes(b4) as usize;
        if digest_len > 1024 {
            return Err(corrupt("digest length out of range"));
        }
        let mut digest = vec![0u8; digest_len];
        r.read_exact(&mut digest)
            .map_err(|_| corrupt("truncated digest"))?;
        let params_digest = String::from_utf8(digest).map_err(|_| corrupt("digest not UTF-8"))?;
        let words = m_bits.div_ceil(64) as usize;
        let mut bits = vec![0u64; words];
        for word in &mut bits {
            r.read_exact(&mut b8)
                .map_err(|_| corrupt("truncated bit array"))?;
            *word = u64::from_le_bytes(b8);
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe).map_err(|_| corrupt("trailing read"))? != 0 {
            return Err(corrupt("trailing bytes after bit array"));
        }
        Ok(Self {
            bits,
            m_bits,
            hash_count,
            inserted,
            params_digest,
        })
    }
}

/// Enumerate every variant and insert it. The insert-operation count equals
/// the plan's prediction exactly; the build rejects inputs that do not match
/// the plan's digest or geometry.
pub fn build_filter(
    sources: &[Domain],
    alphabet: &[char],
    plan: &FilterBuildPlan,
) -> Result<TyposquatFilter, DefenseError> {
    if sources_digest(sources) != plan.sources_digest {
        return Err(DefenseError::PlanMismatch(
            "source list differs from the planned one".to_string(),
        ));
    }
    if alphabet.len() != plan.alphabet_size {
        return Err(DefenseError::PlanMismatch(format!(
            "alphabet size {} differs from planned {}",
            alphabet.len(),
            plan.alphabet_size
        )));
    }
    let params = format!(
        "sources={} k={} alphabet={} original={} ops={:?}",
        plan.sources_digest,
        plan.k,
        alphabet_digest(alphabet),
        plan.include_original,
        plan.ops,
    );
    let digest = format!("{:016x}", fnv1a64(params.as_bytes()));
    let mut filter = TyposquatFilter::with_geometry(plan.m_bits, plan.hash_count, digest);

    for source in sources {
        let mut chars: Vec<char> = source.sld().chars().collect();
        match plan.ops {
            VariantOps::SubstitutionOnly => {
                if plan.include_original && plan.k > 0 {
                    filter.insert(source.sld());
                }
                enumerate_substitutions(&mut chars, 0, plan.k, alphabet, &mut filter);
            }
            VariantOps::WithInsertionsDeletions => {
                enumerate_edit_sequences(&mut chars, plan.k, alphabet, &mut filter);
                if plan.include_original && plan.k > 0 {
                    filter.insert(source.sld());
                }
            }
        }
    }
    debug_assert_eq!(filter.inserted as u128, plan.predicted_insertions);
    Ok(filter)
}

/// Substitute at exactly `remaining` distinct positions from `start`
/// onwards; each replacement differs from the character it displaces.
fn enumerate_substitutions(
    chars: &mut Vec<char>,
    start: usize,
    remaining: usize,
    alphabet: &[char],
    filter: &mut TyposquatFilter,
) {
    if remaining == 0 {
        let s: String = chars.iter().collect();
        filter.insert(&s);
        return;
    }
    if start + remaining > chars.len() {
        return;
    }
    for pos in start..=(chars.len() - remaining) {
        let original = chars[pos];
        for &c in alphabet {
            if c == original {
                continue;
            }
            chars[pos] = c;
            enumerate_substitutions(chars, pos + 1, remaining - 1, alphabet, filter);
        }
        chars[pos] = original;
    }
}

fn enumerate_edit_sequences(
    chars: &mut Vec<char>,
    remaining: usize,
    alphabet: &[char],
    filter: &mut TyposquatFilter,
) {
    if remaining == 0 {
        let s: String = chars.iter().collect();
        filter.insert(&s);
        return;
    }
    for pos in 0..chars.len() {
        let original = chars[pos];
        for &c in alphabet {
            if c == original {
                continue;
            }
            chars[pos] = c;
            enumerate_edit_sequences(chars, remaining - 1, alphabet, filter);
        }
        chars[pos] = original;
    }
    for pos in 0..=chars.len() {
        for &c in alphabet {
            chars.insert(pos, c);
            enumerate_edit_sequences(chars, remaining - 1, alphabet, filter);
            chars.remove(pos);
        }
    }
    if chars.len() > 1 {
        for pos in 0..chars.len() {
            let removed = chars.remove(pos);
            enumerate_edit_sequences(chars, remaining - 1, alphabet, filter);
            chars.insert(pos, removed);
        }
    }
}

/// The exact oracle behind the filter: linearly scan the protected list and
/// return the first source within `max_edit` of the queried SLD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NearMatch {
    pub source_index: usize,
    pub distance: usize,
}

pub fn near_match_scan(domain: &Domain, sources: &[Domain], max_edit: usize) -> Option<NearMatch> {
    for (i, source) in sources.iter().enumerate() {
        if let Some(distance) = levenshtein_within(domain.sld(), source.sld(), max_edit) {
            return Some(NearMatch {
                source_index: i,
                distance,
            });
        }
    }
    None
}
