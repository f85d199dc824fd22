//! dgalab: a laboratory for character-perturbation domain generation and the
//! string-feature classifiers meant to catch it.
//!
//! The crate provides, end to end:
//!
//! * [`domain`] — SLD/TLD parsing, feed ingestion (rank files, domain lists,
//!   query logs) and a weak labeler for passive-DNS data;
//! * [`charbot`] — the CharBot generator: perturb benign domains by a fixed
//!   number of character substitutions, with full provenance, plus the edit
//!   distance, an adversarial cost function and candidate-space counting;
//! * [`features`] / [`ngram`] — the 40-feature lexical catalogue under the
//!   FANCI, BRF and FULL schemas, with corpus-derived n-gram tables;
//! * [`forest`] — deterministic CART trees and the two random-forest
//!   configurations (9-tree FANCI-style, 100-tree B-RF-style);
//! * [`eval`] — ROC construction, thresholds/TPR/partial AUC at fixed false
//!   positive rates, adversarial detection rates and a baseline-vs-augmented
//!   experiment driver;
//! * [`defense`] — a Bloom-filter near-duplicate defense that pre-enumerates
//!   substitution variants of protected domains, with an exact edit-distance
//!   scan as its oracle;
//! * [`analysis`] — kernel density estimates of feature distributions and
//!   domain-length statistics, emitted as plot-ready data.
//!
//! All randomness flows through the pinned [`rng::SplitMix64`] generator, so
//! every pipeline is reproducible from explicit seeds.

pub mod analysis;
pub mod charbot;
pub mod date;
pub mod defense;
pub mod domain;
pub mod eval;
pub mod features;
pub mod forest;
pub mod hash;
pub mod ngram;
pub mod rng;

pub use charbot::{
    adversarial_cost, candidate_space_size, generate_batch, generate_one, levenshtein,
    seed_from_date, CharbotConfig, Cost, PerturbationRecord, RegistrationOracle, SetOracle,
};
pub use domain::{
    load_alexa, load_domain_list, load_query_log, overlap_count, parse_domain, split_train_test,
    weak_label, Dataset, Domain, DomainError, Label, LabeledExample, QueryLogRecord, QueryResponse,
};
pub use features::{
    extract, featurize_dataset, FeatureError, FeatureMatrix, FeatureSchema, NgramTables,
    SchemaName, TldContext,
};
pub use forest::{score, train_brf, train_fanci, Criterion, ForestModel, TrainConfig, TreeNode};
pub use rng::SplitMix64;
