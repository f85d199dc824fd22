//! The CharBot generator and its surrounding machinery.
//!
//! CharBot perturbs known-good domains: pick a source domain, replace `k`
//! characters of its SLD (at distinct positions, each replacement different
//! from the character it displaces), and append a TLD drawn from a fixed
//! list. The output is DNS-valid, close to its source in edit distance, and
//! overwhelmingly unregistered — which is exactly what makes it hard for
//! string-only classifiers.
//!
//! Everything here is deterministic given a seed: batches are pure functions
//! of `(config, sources, seed, n)`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::date::CivilDate;
use crate::domain::{Domain, DomainError};
use crate::hash::fnv1a64;
use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error)]
pub enum CharbotError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid date {0:?}: expected a valid YYYY-MM-DD calendar date")]
    InvalidDate(String),
    #[error("source {domain} has an SLD shorter than k={k}")]
    SourceTooShort { domain: String, k: usize },
    #[error("gave up after {attempts} attempts while generating {requested} unique domains")]
    ExhaustedAttempts { attempts: usize, requested: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("registration oracle unavailable: {0}")]
    OracleUnavailable(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The stock 22-TLD list appended to generated domains.
pub const DEFAULT_TLDS: [&str; 22] = [
    "com", "at", "uk", "pl", "be", "biz", "co", "jp", "cz", "de", "eu", "fr", "info", "it", "ru",
    "lv", "me", "name", "net", "nz", "org", "us",
];

/// The 37 DNS-valid replacement characters: a–z, 0–9 and the dash.
pub const DEFAULT_ALPHABET: [char; 37] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's',
    't', 'u', 'v', 'w', 'x', 'y', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', '-',
];

/// Generator configuration: which TLDs to append, how many characters to
/// replace, and the replacement alphabet. Insertions and deletions exist as
/// optional extended operations but are off by default; the plain generator
/// substitutes exactly `k` characters.
#[derive(Debug, Clone)]
pub struct CharbotConfig {
    tld_list: Vec<String>,
    k: usize,
    alphabet: Vec<char>,
    pub allow_insertions: bool,
    pub allow_deletions: bool,
}

impl CharbotConfig {
    pub fn new(tld_list: Vec<String>, k: usize, alphabet: Vec<char>) -> Result<Self, CharbotError> {
        let bad = |msg: &str| Err(CharbotError::InvalidConfig(msg.to_string()));
        if tld_list.is_empty() {
            return bad("TLD list is empty");
        }
        for tld in &tld_list {
            if tld.is_empty()
                || !tld
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '.')
            {
                return bad(&format!("invalid TLD {tld:?}"));
            }
        }
        if k == 0 {
            return bad("k must be at least 1");
        }
        if alphabet.len() < 2 {
            return bad("alphabet needs at least two characters");
        }
        let mut seen = HashSet::new();
        for &c in &alphabet {
            if !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-') {
                return bad(&format!("character {c:?} is not DNS-valid"));
            }
            if !seen.insert(c) {
                return bad(&format!("duplicate alphabet character {c:?}"));
            }
        }
        if alphabet.iter().filter(|&&c| c != '-').count() < 2 {
            return bad("alphabet needs at least two non-hyphen characters");
        }
        Ok(Self {
            tld_list,
            k,
            alphabet,
            allow_insertions: false,
            allow_deletions: false,
        })
    }

    pub fn tld_list(&self) -> &[String] {
        &self.tld_list
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }
}

impl Default for CharbotConfig {
    fn default() -> Self {
        Self::new(
            DEFAULT_TLDS.iter().map(|s| s.to_string()).collect(),
            2,
            DEFAULT_ALPHABET.to_vec(),
        )
        .expect("default config is valid")
    }
}

/// Full provenance of one generated domain.
///
/// For the default substitution-only configuration, `indices` are the `k`
/// distinct SLD positions edited (in draw order), `replacements` the
/// characters written there, and the output SLD differs from the source SLD
/// at exactly those positions. When extended operations are enabled the
/// `insertions`/`deletions` lists record those edits against the string as
/// it stood when each edit applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationRecord {
    pub source: Domain,
    pub output: Domain,
    pub indices: Vec<usize>,
    pub replacements: Vec<char>,
    pub insertions: Vec<(usize, char)>,
    pub deletions: Vec<usize>,
    pub seed: u64,
}

/// Answers "is this domain already registered?". Implementations must be
/// deterministic for a fixed backing set.
pub trait RegistrationOracle {
    fn is_registered(&self, domain: &Domain) -> Result<bool, String>;
}

/// Oracle backed by an in-memory set of rendered domains, typically loaded
/// from a one-domain-per-line file of known registrations.
#[derive(Debug, Clone, Default)]
pub struct SetOracle {
    registered: HashSet<String>,
}

impl SetOracle {
    pub fn from_renderings<I: IntoIterator<Item = String>>(items: I) -> Self {
        Self {
            registered: items
                .into_iter()
                .map(|s| s.trim().to_ascii_lowercase())
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CharbotError> {
        let text = fs::read_to_string(path).map_err(|e| CharbotError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(Self::from_renderings(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        ))
    }

    pub fn len(&self) -> usize {
        self.registered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registered.is_empty()
    }
}

impl RegistrationOracle for SetOracle {
    fn is_registered(&self, domain: &Domain) -> Result<bool, String> {
        Ok(self.registered.contains(&domain.render()))
    }
}

/// Cost of an adversarial perturbation: the edit distance when the result is
/// usable, infinite when the candidate is already registered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cost {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => write!(f, "inf"),
        }
    }
}

/// Map a `YYYY-MM-DD` date to a 64-bit seed: FNV-1a over the date text.
/// Stable across platforms; the same date always drives the same batch.
pub fn seed_from_date(date: &str) -> Result<u64, CharbotError> {
    let parsed =
        CivilDate::parse(date.trim()).ok_or_else(|| CharbotError::InvalidDate(date.to_string()))?;
    Ok(fnv1a64(parsed.to_string().as_bytes()))
}

fn check_sources(cfg: &CharbotConfig, sources: &[Domain]) -> Result<(), CharbotError> {
    if sources.is_empty() {
        return Err(CharbotError::InvalidParameters(
            "source list is empty".to_string(),
        ));
    }
    for s in sources {
        if s.sld().len() < cfg.k {
            return Err(CharbotError::SourceTooShort {
                domain: s.render(),
                k: cfg.k,
            });
        }
    }
    Ok(())
}

/// One generation step. Draws, in order: source, the k distinct edit
/// positions, one replacement per position, and the TLD.
pub fn generate_one(
    cfg: &CharbotConfig,
    sources: &[Domain],
    rng: &mut SplitMix64,
) -> Result<PerturbationRecord, CharbotError> {
    check_sources(cfg, sources)?;
    Ok(generate_unchecked(cfg, sources, rng))
}

fn generate_unchecked(
    cfg: &CharbotConfig,
    sources: &[Domain],
    rng: &mut SplitMix64,
) -> PerturbationRecord {
    if cfg.allow_insertions || cfg.allow_deletions {
        return generate_extended(cfg, sources, rng);
    }
    let source = &sources[rng.next_below(sources.len() as u64) as usize];
    let mut sld: Vec<char> = source.sld().chars().collect();
    let len = sld.len();

    // k distinct positions, uniformly without replacement, in draw order.
    let mut indices: Vec<usize> = Vec::with_capacity(cfg.k);
    while indices.len() < cfg.k {
        let i = rng.next_below(len as u64) as usize;
        if !indices.contains(&i) {
            indices.push(i);
        }
    }

    let mut replacements = Vec::with_capacity(cfg.k);
    for &i in &indices {
        let original = sld[i];
        let mut c = draw_replacement(&cfg.alphabet, original, rng);
        // A replacement may not leave the SLD starting or ending with '-';
        // re-draw from the alphabet without the hyphen.
        if (i == 0 || i == len - 1) && c == '-' {
            let reduced: Vec<char> = cfg.alphabet.iter().copied().filter(|&c| c != '-').collect();
            c = draw_replacement(&reduced, original, rng);
        }
        sld[i] = c;
        replacements.push(c);
    }

    let tld = &cfg.tld_list[rng.next_below(cfg.tld_list.len() as u64) as usize];
    let output_sld: String = sld.into_iter().collect();
    let output = Domain::new(&output_sld, tld).expect("substitution preserves validity");
    PerturbationRecord {
        source: source.clone(),
        output,
        indices,
        replacements,
        insertions: Vec::new(),
        deletions: Vec::new(),
        seed: rng.seed(),
    }
}

fn draw_replacement(alphabet: &[char], original: char, rng: &mut SplitMix64) -> char {
    loop {
        let c = alphabet[rng.next_below(alphabet.len() as u64) as usize];
        if c != original {
            return c;
        }
    }
}

/// Extended mode: each of the k edits is a substitution, insertion or
/// deletion drawn from the enabled set and applied to the current string.
/// Candidates that end up empty or hyphen-edged are regenerated.
fn generate_extended(
    cfg: &CharbotConfig,
    sources: &[Domain],
    rng: &mut SplitMix64,
) -> PerturbationRecord {
    #[derive(Clone, Copy)]
    enum Op {
        Sub,
        Ins,
        Del,
    }
    let mut ops = vec![Op::Sub];
    if cfg.allow_insertions {
        ops.push(Op::Ins);
    }
    if cfg.allow_deletions {
        ops.push(Op::Del);
    }
    loop {
        let source = &sources[rng.next_below(sources.len() as u64) as usize];
        let mut sld: Vec<char> = source.sld().chars().collect();
        let mut indices = Vec::new();
        let mut replacements = Vec::new();
        let mut insertions = Vec::new();
        let mut deletions = Vec::new();
        for _ in 0..cfg.k {
            match ops[rng.next_below(ops.len() as u64) as usize] {
                Op::Sub => {
                    let i = rng.next_below(sld.len() as u64) as usize;
                    let c = draw_replacement(&cfg.alphabet, sld[i], rng);
                    sld[i] = c;
                    indices.push(i);
                    replacements.push(c);
                }
                Op::Ins => {
                    let i = rng.next_below(sld.len() as u64 + 1) as usize;
                    let c = cfg.alphabet[rng.next_below(cfg.alphabet.len() as u64) as usize];
                    sld.insert(i, c);
                    insertions.push((i, c));
                }
                Op::Del => {
                    if sld.len() > 1 {
                        let i = rng.next_below(sld.len() as u64) as usize;
                        sld.remove(i);
                        deletions.push(i);
                    }
                }
            }
        }
        let candidate: String = sld.iter().collect();
        if candidate.is_empty() || candidate.starts_with('-') || candidate.ends_with('-') {
            continue;
        }
        let tld = &cfg.tld_list[rng.next_below(cfg.tld_list.len() as u64) as usize];
        let output = Domain::new(&candidate, tld).expect("edited SLD stays DNS-valid");
        return PerturbationRecord {
            source: source.clone(),
            output,
            indices,
            replacements,
            insertions,
            deletions,
            seed: rng.seed(),
        };
    }
}

/// Generate `n` unique domains from one seeded stream. Outputs that collide
/// with an earlier output or with a source rendering are discarded; gives up
/// after `100 * n` attempts.
pub fn generate_batch(
    cfg: &CharbotConfig,
    sources: &[Domain],
    seed: u64,
    n: usize,
) -> Result<Vec<PerturbationRecord>, CharbotError> {
    if n == 0 {
        return Err(CharbotError::InvalidParameters(
            "batch size must be at least 1".to_string(),
        ));
    }
    check_sources(cfg, sources)?;
    let source_renderings: HashSet<String> = sources.iter().map(|s| s.render()).collect();
    let mut rng = SplitMix64::new(seed);
    let mut seen: HashSet<String> = HashSet::with_capacity(n);
    let mut records = Vec::with_capacity(n);
    let max_attempts = n.saturating_mul(100);
    let mut attempts = 0usize;
    while records.len() < n {
        if attempts >= max_attempts {
            return Err(CharbotError::ExhaustedAttempts {
                attempts,
                requested: n,
            });
        }
        attempts += 1;
        let rec = generate_unchecked(cfg, sources, &mut rng);
        let rendered = rec.output.render();
        if source_renderings.contains(&rendered) || !seen.insert(rendered) {
            continue;
        }
        records.push(rec);
    }
    Ok(records)
}

/// Levenshtein (edit) distance: minimum insertions, deletions and
/// substitutions turning `a` into `b`.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (up + 1)
                .min(row[j] + 1)
                .min(diag + if ca == cb { 0 } else { 1 });
            diag = up;
        }
    }
    row[b.len()]
}

/// Levenshtein distance with an early cutoff: `Some(d)` when `d <= max`,
/// `None` as soon as the distance provably exceeds `max`.
pub fn levenshtein_within(a: &str, b: &str, max: usize) -> Option<usize> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    if a.is_empty() || b.is_empty() {
        let d = a.len().max(b.len());
        return (d <= max).then_some(d);
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        let mut row_min = row[0];
        for (j, &cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (up + 1)
                .min(row[j] + 1)
                .min(diag + if ca == cb { 0 } else { 1 });
            diag = up;
            row_min = row_min.min(row[j + 1]);
        }
        if row_min > max {
            return None;
        }
    }
    let d = row[b.len()];
    (d <= max).then_some(d)
}

/// Cost of substituting `x_tilde` for `x`: infinite when `x_tilde` is
/// registered (unusable for C&C), otherwise the edit distance between the
/// rendered domains.
pub fn adversarial_cost<O: RegistrationOracle + ?Sized>(
    x: &Domain,
    x_tilde: &Domain,
    oracle: &O,
) -> Result<Cost, CharbotError> {
    let registered = oracle
        .is_registered(x_tilde)
        .map_err(CharbotError::OracleUnavailable)?;
    if registered {
        Ok(Cost::Infinite)
    } else {
        Ok(Cost::Finite(levenshtein(&x.render(), &x_tilde.render())))
    }
}

/// Exact size of the candidate space `n * C(l, k) * (m - 1)^k`: `n` source
/// domains of length `l`, alphabet of size `m`, exactly `k` substitutions.
pub fn candidate_space_size(n: u64, l: u64, m: u64, k: u64) -> Result<u128, CharbotError> {
    if k > l {
        return Err(CharbotError::InvalidParameters(format!(
            "k={k} exceeds length l={l}"
        )));
    }
    if m < 2 {
        return Err(CharbotError::InvalidParameters(format!(
            "alphabet size m={m} must be at least 2"
        )));
    }
    let overflow = || CharbotError::InvalidParameters("candidate space exceeds u128".to_string());
    let mut choose: u128 = 1;
    for i in 1..=k {
        choose = choose
            .checked_mul((l - k + i) as u128)
            .ok_or_else(overflow)?
            / i as u128;
    }
    let mut power: u128 = 1;
    for _ in 0..k {
        power = power.checked_mul((m - 1) as u128).ok_or_else(overflow)?;
    }
    (n as u128)
        .checked_mul(choose)
        .and_then(|v| v.checked_mul(power))
        .ok_or_else(overflow)
}

/// Write the batch output file: one rendered domain per line.
pub fn write_domains<W: Write>(records: &[PerturbationRecord], mut w: W) -> io::Result<()> {
    for rec in records {
        writeln!(w, "{}", rec.output.render())?;
    }
    Ok(())
}

/// Write the provenance sidecar CSV: `output,source,indices,replacements,seed`
/// with multi-valued fields joined by `;`.
pub fn write_provenance<W: Write>(records: &[PerturbationRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "output,source,indices,replacements,seed")?;
    for rec in records {
        let indices: Vec<String> = rec.indices.iter().map(|i| i.to_string()).collect();
        let replacements: Vec<String> = rec.replacements.iter().map(|c| c.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{}",
            rec.output.render(),
            rec.source.render(),
            indices.join(";"),
            replacements.join(";"),
            rec.seed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::parse_domain;

    fn sources(names: &[&str]) -> Vec<Domain> {
        names.iter().map(|s| parse_domain(s).unwrap()).collect()
    }

    fn hamming(a: &str, b: &str) -> usize {
        assert_eq!(a.len(), b.len());
        a.chars().zip(b.chars()).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn seed_from_date_golden() {
        assert_eq!(seed_from_date("2018-12-04").unwrap(), 5662194355879909381);
        assert_eq!(seed_from_date("2019-01-01").unwrap(), 1890875036748324249);
        assert_eq!(
            seed_from_date("2018-12-04").unwrap(),
            seed_from_date("2018-12-04").unwrap()
        );
        assert_ne!(
            seed_from_date("2018-12-04").unwrap(),
            seed_from_date("2019-01-01").unwrap()
        );
        assert!(matches!(
            seed_from_date("2018-13-04"),
            Err(CharbotError::InvalidDate(_))
        ));
    }

    #[test]
    fn generate_one_hamming_distance_is_k() {
        let cfg = CharbotConfig::default();
        let srcs = sources(&["google.com", "wikipedia.org", "facebook.com"]);
        let mut rng = SplitMix64::new(7);
        for _ in 0..500 {
            let rec = generate_one(&cfg, &srcs, &mut rng).unwrap();
            assert_eq!(hamming(rec.source.sld(), rec.output.sld()), 2);
            assert_eq!(rec.indices.len(), 2);
            assert_ne!(rec.indices[0], rec.indices[1]);
            for (&i, &c) in rec.indices.iter().zip(&rec.replacements) {
                assert_eq!(rec.output.sld().chars().nth(i).unwrap(), c);
                assert_ne!(rec.source.sld().chars().nth(i).unwrap(), c);
            }
            assert!(cfg.tld_list().contains(&rec.output.tld().to_string()));
            assert!(!rec.output.sld().starts_with('-'));
            assert!(!rec.output.sld().ends_with('-'));
        }
    }

    #[test]
    fn generate_one_is_deterministic_from_state() {
        let cfg = CharbotConfig::default();
        let srcs = sources(&["google.com", "wikipedia.org"]);
        let a = generate_one(&cfg, &srcs, &mut SplitMix64::new(12)).unwrap();
        let b = generate_one(&cfg, &srcs, &mut SplitMix64::new(12)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generate_one_rejects_short_sources() {
        let cfg = CharbotConfig::default();
        let srcs = sources(&["a.com"]);
        assert!(matches!(
            generate_one(&cfg, &srcs, &mut SplitMix64::new(0)),
            Err(CharbotError::SourceTooShort { .. })
        ));
    }

    #[test]
    fn batch_is_unique_and_deterministic() {
        let cfg = CharbotConfig::default();
        let srcs = sources(&["google.com", "wikipedia.org", "youtube.com"]);
        let batch = generate_batch(&cfg, &srcs, 42, 200).unwrap();
        assert_eq!(batch.len(), 200);
        let renderings: HashSet<String> = batch.iter().map(|r| r.output.render()).collect();
        assert_eq!(renderings.len(), 200);
        for s in &srcs {
            assert!(!renderings.contains(&s.render()));
        }
        let again = generate_batch(&cfg, &srcs, 42, 200).unwrap();
        assert_eq!(batch, again);
        assert_eq!(generate_batch(&cfg, &srcs, 42, 1).unwrap().len(), 1);
    }

    #[test]
    fn batch_exhausts_when_space_is_tiny() {
        // One 2-char source over a 2-letter alphabet: k=2 gives exactly one
        // possible SLD variant per TLD, so asking for many must fail.
        let cfg = CharbotConfig::new(vec!["com".to_string()], 2, vec!['a', 'b']).unwrap();
        let srcs = sources(&["ab.com"]);
        let err = generate_batch(&cfg, &srcs, 1, 50).unwrap_err();
        assert!(matches!(err, CharbotError::ExhaustedAttempts { .. }));
    }

    #[test]
    fn extended_ops_stay_valid_and_close() {
        let cfg = CharbotConfig {
            allow_insertions: true,
            allow_deletions: true,
            ..CharbotConfig::default()
        };
        let srcs = sources(&["google.com", "wikipedia.org"]);
        let mut rng = SplitMix64::new(5);
        for _ in 0..300 {
            let rec = generate_one(&cfg, &srcs, &mut rng).unwrap();
            assert!(parse_domain(&rec.output.render()).is_ok());
            assert!(levenshtein(rec.source.sld(), rec.output.sld()) <= cfg.k());
        }
    }

    #[test]
    fn levenshtein_known_values() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("google", "g0ogl3"), 2);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
    }

    #[test]
    fn levenshtein_within_matches_full() {
        let pairs = [
            ("kitten", "sitting"),
            ("google", "g0ogl3"),
            ("abc", "abc"),
            ("abcdef", "zzzzzz"),
            ("a", "abcde"),
        ];
        for (a, b) in pairs {
            let d = levenshtein(a, b);
            for max in 0..8 {
                let got = levenshtein_within(a, b, max);
                if d <= max {
                    assert_eq!(got, Some(d), "{a} {b} max={max}");
                } else {
                    assert_eq!(got, None, "{a} {b} max={max}");
                }
            }
        }
    }

    #[test]
    fn cost_function_cases() {
        let oracle = SetOracle::from_renderings(vec!["taken.com".to_string()]);
        let x = parse_domain("google.com").unwrap();
        let registered = parse_domain("taken.com").unwrap();
        let free = parse_domain("g0ogl3.com").unwrap();
        assert_eq!(
            adversarial_cost(&x, &registered, &oracle).unwrap(),
            Cost::Infinite
        );
        assert_eq!(
            adversarial_cost(&x, &free, &oracle).unwrap(),
            Cost::Finite(2)
        );
        assert_eq!(adversarial_cost(&x, &x, &oracle).unwrap(), Cost::Finite(0));
    }

    #[test]
    fn oracle_loads_from_file() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"# registrations\ntaken.com\nAlso-Taken.NET\n\n")
            .unwrap();
        let oracle = SetOracle::from_file(f.path()).unwrap();
        assert_eq!(oracle.len(), 2);
        let taken = parse_domain("taken.com").unwrap();
        let also = parse_domain("also-taken.net").unwrap();
        let free = parse_domain("free.com").unwrap();
        assert!(oracle.is_registered(&taken).unwrap());
        assert!(oracle.is_registered(&also).unwrap());
        assert!(!oracle.is_registered(&free).unwrap());
    }

    #[test]
    fn oracle_failure_propagates() {
        struct Broken;
        impl RegistrationOracle for Broken {
            fn is_registered(&self, _: &Domain) -> Result<bool, String> {
                Err("backend offline".to_string())
            }
        }
        let x = parse_domain("google.com").unwrap();
        assert!(matches!(
            adversarial_cost(&x, &x, &Broken),
            Err(CharbotError::OracleUnavailable(_))
        ));
    }

    #[test]
    fn candidate_space_reference_values() {
        assert_eq!(
            candidate_space_size(10_000, 16, 40, 2).unwrap(),
            1_825_200_000
        );
        assert_eq!(candidate_space_size(1, 10, 37, 0).unwrap(), 1);
        assert_eq!(candidate_space_size(5, 10, 37, 2).unwrap(), 291_600);
        assert!(candidate_space_size(1, 2, 37, 3).is_err());
        assert!(candidate_space_size(1, 2, 1, 1).is_err());
    }

    #[test]
    fn candidate_space_matches_brute_force() {
        // Enumerate all exactly-2-substitution variants of a length-5 string
        // over a 4-character alphabet and count the distinct results.
        let alphabet = ['a', 'b', 'c', 'd'];
        let base: Vec<char> = "abcab".chars().collect();
        let mut variants = HashSet::new();
        for i in 0..base.len() {
            for j in (i + 1)..base.len() {
                for &ci in &alphabet {
                    if ci == base[i] {
                        continue;
                    }
                    for &cj in &alphabet {
                        if cj == base[j] {
                            continue;
                        }
                        let mut v = base.clone();
                        v[i] = ci;
                        v[j] = cj;
                        variants.insert(v.iter().collect::<String>());
                    }
                }
            }
        }
        assert_eq!(
            variants.len() as u128,
            candidate_space_size(1, 5, 4, 2).unwrap()
        );
    }

    #[test]
    fn provenance_sidecar_format() {
        let cfg = CharbotConfig::default();
        let srcs = sources(&["google.com"]);
        let batch = generate_batch(&cfg, &srcs, 3, 2).unwrap();
        let mut out = Vec::new();
        write_provenance(&batch, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "output,source,indices,replacements,seed"
        );
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[1], "google.com");
        assert_eq!(fields[4], "3");

        let mut out = Vec::new();
        write_domains(&batch, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
    }
}
