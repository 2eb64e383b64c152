//! Synthetic series and corpora with known ground truth.
//!
//! Random generators use ChaCha8 seeded from a `u64`, so a seed names the
//! same output on every platform.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DailyTotals, DateRange, Document, DocumentSet};
use crate::decompose::{tokenize, SubtopicQuery};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("cascade weight must lie in (0.5, 1), got {0}")]
    CascadeWeight(f64),
    #[error("cascade levels must lie in 8..=24, got {0}")]
    CascadeLevels(u32),
    #[error("q must be nonzero")]
    ZeroQ,
    #[error("probability must lie in (0, 1), got {0}")]
    Probability(f64),
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
}

/// Deterministic binomial multiplicative cascade on `2^levels` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub a: f64,
    pub levels: u32,
}

impl CascadeSpec {
    pub fn new(a: f64, levels: u32) -> Result<Self, SynthError> {
        if !(a > 0.5 && a < 1.0) {
            return Err(SynthError::CascadeWeight(a));
        }
        if !(8..=24).contains(&levels) {
            return Err(SynthError::CascadeLevels(levels));
        }
        Ok(Self { a, levels })
    }
}

/// `x_k = a^(n - b(k)) (1 - a)^b(k)` with `b(k)` the number of set bits of the
/// zero-based index `k`.
pub fn binomial_cascade(spec: CascadeSpec) -> Vec<f64> {
    cascade_unchecked(spec.a, spec.levels)
}

pub(crate) fn cascade_unchecked(a: f64, levels: u32) -> Vec<f64> {
    let b = 1.0 - a;
    // powers[j] = a^(n - j) b^j
    let powers: Vec<f64> = (0..=levels)
        .map(|j| a.powi((levels - j) as i32) * b.powi(j as i32))
        .collect();
    (0u64..1 << levels)
        .map(|k| powers[k.count_ones() as usize])
        .collect()
}

/// `h(q) = 1/q - ln(a^q + (1 - a)^q) / (q ln 2)` for the binomial cascade.
pub fn analytic_hurst_binomial(q: f64, a: f64) -> Result<f64, SynthError> {
    if q == 0.0 {
        return Err(SynthError::ZeroQ);
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(SynthError::Probability(a));
    }
    Ok(1.0 / q - (a.powf(q) + (1.0 - a).powf(q)).ln() / (q * std::f64::consts::LN_2))
}

/// I.i.d. standard Gaussian samples.
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Cumulative sum of [`white_noise`].
pub fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    white_noise(n, seed)
        .into_iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Random permutation of `values`.
pub fn shuffled(values: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = values.to_vec();
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub partner: String,
    /// Probability that a document of this subtopic also carries the partner keyword.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSubtopic {
    pub name: String,
    pub keyword: String,
    /// Mean documents per day.
    pub intensity: f64,
    #[serde(default)]
    pub overlap: Option<Overlap>,
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 5, 1).expect("valid date")
}

fn default_scanned() -> f64 {
    2000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCorpusSpec {
    #[serde(default = "default_start")]
    pub start: NaiveDate,
    pub days: usize,
    pub subtopics: Vec<SimSubtopic>,
    /// Mean unmatched documents per day.
    pub background: f64,
    /// Mean off-topic documents scanned per day, used for simulated totals.
    #[serde(default = "default_scanned")]
    pub scanned: f64,
    pub seed: u64,
}

/// Words used for document filler; keywords may not collide with them.
const FILLER: &[&str] = &[
    "lorem", "ipsum", "dolor", "sit", "amet", "consectetur", "adipiscing", "elit", "sed", "do",
    "eiusmod", "tempor", "incididunt", "labore", "magna", "aliqua", "veniam", "quis", "nostrud",
    "ullamco", "laboris", "nisi", "aliquip", "commodo",
];

impl SimCorpusSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.days == 0 {
            return bad("days must be positive".into());
        }
        for v in [self.background, self.scanned] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("intensity {v} must be finite and non-negative"));
            }
        }
        let mut names = BTreeMap::new();
        for (i, s) in self.subtopics.iter().enumerate() {
            if names.insert(s.name.as_str(), i).is_some() {
                return bad(format!("duplicate subtopic {:?}", s.name));
            }
            if !(s.intensity >= 0.0 && s.intensity.is_finite()) {
                return bad(format!("subtopic {:?} intensity {}", s.name, s.intensity));
            }
            let words = tokenize(&s.keyword);
            if words.is_empty() {
                return bad(format!("subtopic {:?} has an empty keyword", s.name));
            }
            if let Some(w) = words.iter().find(|w| FILLER.contains(&w.as_str())) {
                return bad(format!("keyword {:?} uses reserved filler word {w:?}", s.keyword));
            }
        }
        for (i, s) in self.subtopics.iter().enumerate() {
            let words = tokenize(&s.keyword);
            for (j, other) in self.subtopics.iter().enumerate() {
                let other_words = tokenize(&other.keyword);
                if i != j && other_words.len() >= words.len() && other_words.windows(words.len()).any(|w| w == words) {
                    return bad(format!("keyword {:?} occurs inside {:?}", s.keyword, other.keyword));
                }
            }
            if let Some(o) = &s.overlap {
                if !(0.0..=1.0).contains(&o.fraction) {
                    return bad(format!("overlap fraction {} for {:?}", o.fraction, s.name));
                }
                match names.get(o.partner.as_str()) {
                    None => return bad(format!("unknown overlap partner {:?}", o.partner)),
                    Some(&j) if j == i => return bad(format!("{:?} overlaps itself", s.name)),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn range(&self) -> DateRange {
        let last = self.start + Days::new(self.days as u64 - 1);
        DateRange::new(self.start, last).expect("days >= 1")
    }

    /// One single-keyword query per subtopic.
    pub fn queries(&self) -> Vec<SubtopicQuery> {
        self.subtopics
            .iter()
            .map(|s| SubtopicQuery::new(s.name.clone(), [s.keyword.clone()]))
            .collect()
    }
}

/// Per-day counts emitted by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub start: NaiveDate,
    pub days: usize,
    pub main: Vec<u64>,
    pub subtopics: BTreeMap<String, Vec<u64>>,
    pub other: Vec<u64>,
    pub duplicates: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct SimulatedCorpus {
    pub corpus: DocumentSet,
    /// Assigned subtopic names per document, in corpus order.
    pub labels: Vec<Vec<String>>,
    pub truth: GroundTruth,
    pub totals: DailyTotals,
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}

fn filler(rng: &mut ChaCha8Rng, out: &mut String) {
    let words = rng.random_range(2..6);
    for _ in 0..words {
        out.push_str(FILLER[rng.random_range(0..FILLER.len())]);
        out.push(' ');
    }
}

/// Draw a corpus: per day, Poisson counts of documents per subtopic plus
/// background documents. A subtopic document also carries its partner's
/// keyword with the configured overlap probability.
pub fn simulate_corpus(spec: &SimCorpusSpec) -> Result<SimulatedCorpus, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let index: BTreeMap<&str, usize> = spec
        .subtopics
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let k = spec.subtopics.len();
    let mut docs = Vec::new();
    let mut labels = Vec::new();
    let mut sub_counts = vec![vec![0u64; spec.days]; k];
    let mut main = vec![0u64; spec.days];
    let mut other = vec![0u64; spec.days];
    let mut duplicates = vec![0u64; spec.days];
    let mut totals = Vec::with_capacity(spec.days);

    for t in 0..spec.days {
        let date = spec.start + Days::new(t as u64);
        let mut assignments: Vec<Vec<usize>> = Vec::new();
        for (i, s) in spec.subtopics.iter().enumerate() {
            for _ in 0..poisson(&mut rng, s.intensity) {
                let mut set = vec![i];
                if let Some(o) = &s.overlap {
                    if rng.random_bool(o.fraction) {
                        set.push(index[o.partner.as_str()]);
                    }
                }
                set.sort_unstable();
                assignments.push(set);
            }
        }
        for _ in 0..poisson(&mut rng, spec.background) {
            assignments.push(Vec::new());
        }
        for set in assignments {
            let mut text = String::new();
            filler(&mut rng, &mut text);
            for &i in &set {
                text.push_str(&spec.subtopics[i].keyword);
                text.push(' ');
                filler(&mut rng, &mut text);
            }
            let text = text.trim_end().to_string();
            main[t] += 1;
            if set.is_empty() {
                other[t] += 1;
            } else {
                duplicates[t] += set.len() as u64 - 1;
            }
            for &i in &set {
                sub_counts[i][t] += 1;
            }
            docs.push(Document { id: format!("sim-{}", docs.len()), date, text });
            labels.push(set.iter().map(|&i| spec.subtopics[i].name.clone()).collect());
        }
        totals.push(main[t] + poisson(&mut rng, spec.scanned) + 1);
    }

    let range = spec.range();
    let corpus = if docs.is_empty() {
        return Err(SynthError::InvalidSpec("simulation produced no documents".into()));
    } else {
        DocumentSet::within_range(docs, range)
            .map(|(set, _)| set)
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))?
    };
    let totals = DailyTotals::new(range, totals).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    Ok(SimulatedCorpus {
        corpus,
        labels,
        truth: GroundTruth {
            start: spec.start,
            days: spec.days,
            main,
            subtopics: spec.subtopics.iter().map(|s| s.name.clone()).zip(sub_counts).collect(),
            other,
            duplicates,
        },
        totals,
    })
}
