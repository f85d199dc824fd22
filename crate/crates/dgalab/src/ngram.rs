//! Character n-gram frequency tables derived from a benign corpus.
//!
//! Tables map each observed n-gram of the corpus SLDs to its relative
//! frequency. Unseen n-grams score `default_frequency` — half the smallest
//! observed frequency — rather than zero, so medians over strings containing
//! one novel n-gram do not collapse to a spike at zero.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::domain::Dataset;
use crate::features::FeatureError;

#[derive(Debug, Clone)]
pub struct NgramTable {
    n: usize,
    entries: HashMap<String, f64>,
    default_frequency: f64,
}

impl NgramTable {
    /// Count all contiguous n-grams over the SLDs of `benign` and normalize
    /// to relative frequencies.
    pub fn build(benign: &Dataset, n: usize) -> Result<Self, FeatureError> {
        assert!(n == 2 || n == 3, "tables are built for n = 2 or 3");
        if benign.is_empty() {
            return Err(FeatureError::EmptyDataset {
                what: "n-gram corpus".to_string(),
            });
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut total: u64 = 0;
        for example in benign.iter() {
            let chars: Vec<char> = example.domain.sld().chars().collect();
            if chars.len() < n {
                continue;
            }
            for window in chars.windows(n) {
                *counts.entry(window.iter().collect()).or_insert(0) += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(FeatureError::EmptyDataset {
                what: format!("no {n}-grams in corpus"),
            });
        }
        let entries: HashMap<String, f64> = counts
            .into_iter()
            .map(|(gram, c)| (gram, c as f64 / total as f64))
            .collect();
        let min = entries.values().fold(f64::INFINITY, |acc, &v| acc.min(v));
        Ok(Self {
            n,
            entries,
            default_frequency: min / 2.0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn default_frequency(&self) -> f64 {
        self.default_frequency
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Frequency of one n-gram, falling back to the default for unseen ones.
    pub fn frequency(&self, gram: &str) -> f64 {
        self.entries
            .get(gram)
            .copied()
            .unwrap_or(self.default_frequency)
    }

    pub fn frequency_sum(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Median frequency of the n-grams of `s`. Non-circular mode uses the
    /// `len - n + 1` contiguous windows and needs `len >= n`; circular mode
    /// wraps around and yields one n-gram per position for any non-empty
    /// string. Even-length lists take the mean of the two middle values.
    pub fn median(&self, s: &str, circular: bool) -> Result<f64, FeatureError> {
        let chars: Vec<char> = s.chars().collect();
        if chars.is_empty() {
            return Err(FeatureError::EmptyString);
        }
        let mut freqs: Vec<f64> = if circular {
            (0..chars.len())
                .map(|i| {
                    let gram: String = (0..self.n).map(|j| chars[(i + j) % chars.len()]).collect();
                    self.frequency(&gram)
                })
                .collect()
        } else {
            if chars.len() < self.n {
                return Err(FeatureError::StringTooShort {
                    len: chars.len(),
                    needed: self.n,
                });
            }
            chars
                .windows(self.n)
                .map(|w| self.frequency(&w.iter().collect::<String>()))
                .collect()
        };
        freqs.sort_by(|a, b| a.partial_cmp(b).expect("frequencies are finite"));
        let mid = freqs.len() / 2;
        Ok(if freqs.len() % 2 == 1 {
            freqs[mid]
        } else {
            (freqs[mid - 1] + freqs[mid]) / 2.0
        })
    }

    /// Write as `#n=<n> default=<f>` followed by sorted `gram<TAB>freq` lines.
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let mut lines: Vec<(&String, &f64)> = self.entries.iter().collect();
        lines.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = Vec::new();
        writeln!(out, "#n={} default={}", self.n, self.default_frequency).unwrap();
        for (gram, freq) in lines {
            writeln!(out, "{gram}\t{freq}").unwrap();
        }
        fs::write(path, out).map_err(|e| FeatureError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let text = fs::read_to_string(path).map_err(|e| FeatureError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let bad = |line: usize, reason: &str| FeatureError::Parse {
            path: path.display().to_string(),
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty table file"))?;
        let rest = header
            .strip_prefix("#n=")
            .ok_or_else(|| bad(1, "missing #n= header"))?;
        let (n_str, default_str) = rest
            .split_once(" default=")
            .ok_or_else(|| bad(1, "missing default= in header"))?;
        let n: usize = n_str.parse().map_err(|_| bad(1, "bad n"))?;
        let default_frequency: f64 = default_str.parse().map_err(|_| bad(1, "bad default"))?;
        let mut entries = HashMap::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (gram, freq) = line
                .split_once('\t')
                .ok_or_else(|| bad(idx + 1, "expected gram<TAB>freq"))?;
            let freq: f64 = freq.parse().map_err(|_| bad(idx + 1, "bad frequency"))?;
            entries.insert(gram.to_string(), freq);
        }
        Ok(Self {
            n,
            entries,
            default_frequency,
        })
    }
}
