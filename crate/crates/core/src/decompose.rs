//! Keyword decomposition of a document stream into subtopic components.
//!
//! A document belongs to subtopic `T_i` when any of its keyword phrases
//! occurs in the text as a whole-word match, ignoring case. Documents matching
//! several subtopics are counted once per subtopic; the per-day overcount is
//! tracked in a separate duplicates series so that
//!
//! ```text
//! main_t = sum_i sub_t(i) - duplicates_t + other_t
//! ```
//!
//! holds exactly for every day.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DailyTotals, DateRange, DocumentSet};

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("invalid subtopic query: {0}")]
    InvalidQuery(String),
    #[error("{path}: {message}")]
    QueryFile { path: String, message: String },
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("series length mismatch: {left} vs {right} days")]
    LengthMismatch { left: usize, right: usize },
    #[error("series start mismatch: {left} vs {right}")]
    StartMismatch { left: NaiveDate, right: NaiveDate },
    #[error("subtopic count exceeds main count on {day}")]
    ExceedsMain { day: NaiveDate },
    #[error("k_prime must lie in 1..={max}, got {k}")]
    KPrimeOutOfRange { k: usize, max: usize },
    #[error("threshold must lie in [0, 1], got {0}")]
    ThresholdOutOfRange(f64),
    #[error("queries do not match the decomposition subtopics")]
    QueryMismatch,
}

/// A narrow subtopic and the keyword phrases that identify it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtopicQuery {
    pub name: String,
    pub keywords: Vec<String>,
}

impl SubtopicQuery {
    pub fn new<S: Into<String>>(name: impl Into<String>, keywords: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            keywords: keywords.into_iter().map(Into::into).collect(),
        }
    }
}

/// Check names are unique and nonempty and every keyword has at least one word.
pub fn validate_queries(queries: &[SubtopicQuery]) -> Result<(), DecomposeError> {
    let mut names = BTreeSet::new();
    for q in queries {
        if q.name.trim().is_empty() {
            return Err(DecomposeError::InvalidQuery("empty subtopic name".into()));
        }
        if !names.insert(q.name.as_str()) {
            return Err(DecomposeError::InvalidQuery(format!("duplicate subtopic name {:?}", q.name)));
        }
        if q.keywords.is_empty() {
            return Err(DecomposeError::InvalidQuery(format!("subtopic {:?} has no keywords", q.name)));
        }
        if let Some(k) = q.keywords.iter().find(|k| tokenize(k).is_empty()) {
            return Err(DecomposeError::InvalidQuery(format!(
                "subtopic {:?} has an empty keyword {k:?}",
                q.name
            )));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QueryFile {
    Table { topics: Vec<SubtopicQuery> },
    List(Vec<SubtopicQuery>),
}

/// Parse a query config: JSON (`[{"name":..,"keywords":[..]}]` or
/// `{"topics":[..]}`) when `json` is set, otherwise TOML with `[[topics]]`.
pub fn parse_queries(src: &str, json: bool) -> Result<Vec<SubtopicQuery>, String> {
    let file: QueryFile = if json {
        serde_json::from_str(src).map_err(|e| e.to_string())?
    } else {
        toml::from_str(src).map_err(|e| e.to_string())?
    };
    Ok(match file {
        QueryFile::Table { topics } | QueryFile::List(topics) => topics,
    })
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<SubtopicQuery>, DecomposeError> {
    let path = path.as_ref();
    let err = |message: String| DecomposeError::QueryFile {
        path: path.display().to_string(),
        message,
    };
    let src = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let queries = parse_queries(&src, json).map_err(err)?;
    validate_queries(&queries)?;
    Ok(queries)
}

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// Pre-tokenized query set for repeated matching.
#[derive(Debug, Clone)]
pub struct Matcher {
    phrases: Vec<Vec<Vec<String>>>,
}

impl Matcher {
    pub fn new(queries: &[SubtopicQuery]) -> Self {
        let phrases = queries
            .iter()
            .map(|q| q.keywords.iter().map(|k| tokenize(k)).collect())
            .collect();
        Self { phrases }
    }

    /// Ascending indices of the matched subtopics.
    pub fn matches(&self, text: &str) -> Vec<usize> {
        let words = tokenize(text);
        self.phrases
            .iter()
            .enumerate()
            .filter(|(_, phrases)| phrases.iter().any(|p| contains_phrase(&words, p)))
            .map(|(i, _)| i)
            .collect()
    }
}

fn contains_phrase(words: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && words.windows(phrase.len()).any(|w| w == phrase)
}

/// Names of every subtopic with a keyword phrase in `text`. Empty means "other".
pub fn match_subtopics(text: &str, queries: &[SubtopicQuery]) -> BTreeSet<String> {
    Matcher::new(queries)
        .matches(text)
        .into_iter()
        .map(|i| queries[i].name.clone())
        .collect()
}

/// Integer day counts starting at `start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCounts {
    pub start: NaiveDate,
    pub values: Vec<u64>,
}

impl DailyCounts {
    pub fn zeros(start: NaiveDate, days: usize) -> Self {
        Self { start, values: vec![0; days] }
    }

    pub fn total(&self) -> u64 {
        self.values.iter().sum()
    }

    pub fn to_series(&self) -> DailySeries {
        DailySeries {
            start: self.start,
            values: self.values.iter().map(|&v| v as f64).collect(),
        }
    }
}

/// Real-valued day series starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl DailySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<&DailyCounts> for DailySeries {
    fn from(counts: &DailyCounts) -> Self {
        counts.to_series()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtopicComponent {
    pub name: String,
    pub series: DailyCounts,
    /// `N_i`, documents matching this subtopic.
    pub docs: u64,
}

/// Main, per-subtopic, other and duplicate series for one corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub range: DateRange,
    pub main: DailyCounts,
    /// In query order.
    pub subtopics: Vec<SubtopicComponent>,
    pub other: DailyCounts,
    pub duplicates: DailyCounts,
    /// `N`.
    pub total_docs: u64,
}

impl DecompositionResult {
    pub fn subtopic(&self, name: &str) -> Option<&SubtopicComponent> {
        self.subtopics.iter().find(|s| s.name == name)
    }

    /// First day on which the duplicate-corrected identity fails, if any.
    pub fn identity_violation(&self) -> Option<NaiveDate> {
        (0..self.range.days())
            .find(|&t| {
                let sum: u64 = self.subtopics.iter().map(|s| s.series.values[t]).sum();
                sum + self.other.values[t] != self.main.values[t] + self.duplicates.values[t]
            })
            .map(|t| self.range.day(t))
    }
}

pub fn build_decomposition(
    corpus: &DocumentSet,
    queries: &[SubtopicQuery],
) -> Result<DecompositionResult, DecomposeError> {
    validate_queries(queries)?;
    if corpus.is_empty() {
        return Err(DecomposeError::EmptyCorpus);
    }
    let matcher = Matcher::new(queries);
    let matched: Vec<Vec<usize>> = corpus
        .docs()
        .par_iter()
        .map(|doc| matcher.matches(&doc.text))
        .collect();

    let range = corpus.range();
    let days = range.days();
    let start = range.first();
    let mut main = DailyCounts::zeros(start, days);
    let mut other = DailyCounts::zeros(start, days);
    let mut duplicates = DailyCounts::zeros(start, days);
    let mut subs = vec![DailyCounts::zeros(start, days); queries.len()];

    for (doc, hits) in corpus.docs().iter().zip(&matched) {
        let t = range.index_of(doc.date).expect("document outside range");
        main.values[t] += 1;
        if hits.is_empty() {
            other.values[t] += 1;
        } else {
            duplicates.values[t] += hits.len() as u64 - 1;
            for &i in hits {
                subs[i].values[t] += 1;
            }
        }
    }

    let subtopics = queries
        .iter()
        .zip(subs)
        .map(|(q, series)| SubtopicComponent {
            name: q.name.clone(),
            docs: series.total(),
            series,
        })
        .collect();
    Ok(DecompositionResult {
        range,
        total_docs: main.total(),
        main,
        subtopics,
        other,
        duplicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub name: String,
    pub docs: u64,
    /// `N_i / N`.
    pub fraction: f64,
}

/// Share of all documents per subtopic, descending (ties by name).
pub fn contribution_coefficients(
    result: &DecompositionResult,
) -> Result<Vec<Contribution>, DecomposeError> {
    if result.total_docs == 0 {
        return Err(DecomposeError::EmptyCorpus);
    }
    let n = result.total_docs as f64;
    let mut rows: Vec<Contribution> = result
        .subtopics
        .iter()
        .map(|s| Contribution {
            name: s.name.clone(),
            docs: s.docs,
            fraction: s.docs as f64 / n,
        })
        .collect();
    rows.sort_by(|a, b| b.docs.cmp(&a.docs).then_with(|| a.name.cmp(&b.name)));
    Ok(rows)
}

fn check_aligned(a: &DailySeries, start: NaiveDate, len: usize) -> Result<(), DecomposeError> {
    if a.len() != len {
        return Err(DecomposeError::LengthMismatch { left: a.len(), right: len });
    }
    if a.start != start {
        return Err(DecomposeError::StartMismatch { left: a.start, right: start });
    }
    Ok(())
}

/// Divide by the daily scanned totals, removing the weekly publishing cycle.
pub fn normalize_series(
    counts: &DailySeries,
    totals: &DailyTotals,
) -> Result<DailySeries, DecomposeError> {
    check_aligned(counts, totals.range().first(), totals.len())?;
    Ok(DailySeries {
        start: counts.start,
        values: counts
            .values
            .iter()
            .zip(totals.counts())
            .map(|(&c, &n)| c / n as f64)
            .collect(),
    })
}

/// `p_t = sub_t / main_t`, with `p_t = 0` on days where `main_t = 0`.
pub fn contribution_series(
    sub: &DailySeries,
    main: &DailySeries,
) -> Result<DailySeries, DecomposeError> {
    check_aligned(sub, main.start, main.len())?;
    let mut values = Vec::with_capacity(main.len());
    for (t, (&s, &m)) in sub.values.iter().zip(&main.values).enumerate() {
        if s > m || s < 0.0 {
            return Err(DecomposeError::ExceedsMain {
                day: sub.start + chrono::Days::new(t as u64),
            });
        }
        values.push(if m == 0.0 { 0.0 } else { s / m });
    }
    Ok(DailySeries { start: sub.start, values })
}

/// Union of the `K'` largest subtopic streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedStream {
    pub selected: Vec<String>,
    /// `N'`, distinct documents matching at least one selected subtopic.
    pub distinct_docs: u64,
    /// `N' / N`.
    pub coverage: f64,
    pub threshold: f64,
    pub sufficient: bool,
}

pub const DEFAULT_COVERAGE_THRESHOLD: f64 = 0.8;

pub fn reduced_stream(
    result: &DecompositionResult,
    corpus: &DocumentSet,
    queries: &[SubtopicQuery],
    k_prime: usize,
    threshold: f64,
) -> Result<ReducedStream, DecomposeError> {
    let k = result.subtopics.len();
    if k_prime == 0 || k_prime > k {
        return Err(DecomposeError::KPrimeOutOfRange { k: k_prime, max: k });
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(DecomposeError::ThresholdOutOfRange(threshold));
    }
    if queries.len() != k || queries.iter().zip(&result.subtopics).any(|(q, s)| q.name != s.name) {
        return Err(DecomposeError::QueryMismatch);
    }
    if result.total_docs == 0 {
        return Err(DecomposeError::EmptyCorpus);
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (a, b) = (&result.subtopics[a], &result.subtopics[b]);
        b.docs.cmp(&a.docs).then_with(|| a.name.cmp(&b.name))
    });
    order.truncate(k_prime);
    let selected: Vec<SubtopicQuery> = order.iter().map(|&i| queries[i].clone()).collect();

    let matcher = Matcher::new(&selected);
    let distinct_docs = corpus
        .docs()
        .par_iter()
        .filter(|doc| !matcher.matches(&doc.text).is_empty())
        .count() as u64;
    let coverage = distinct_docs as f64 / result.total_docs as f64;
    Ok(ReducedStream {
        selected: selected.into_iter().map(|q| q.name).collect(),
        distinct_docs,
        coverage,
        threshold,
        sufficient: distinct_docs as f64 >= threshold * result.total_docs as f64,
    })
}
