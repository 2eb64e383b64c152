//! Decomposition of thematic document streams into subtopic components and
//! multifractal comparison of the resulting daily series.
//!
//! - [`corpus`]: loading documents and daily scanned totals.
//! - [`decompose`]: keyword matching, duplicate-corrected daily series,
//!   contribution coefficients and reduced streams.
//! - [`mfdfa`]: multifractal detrended fluctuation analysis and the
//!   Legendre singularity spectrum.
//! - [`compare`]: spectral distances and subtopic ranking.
//! - [`synth`]: cascades, noise and simulated corpora with ground truth.

pub mod compare;
pub mod corpus;
pub mod decompose;
pub mod mfdfa;
pub mod synth;

pub use compare::{rank_subtopics, spectrum_distance, CompareError, RankingTable, SpectrumDistance, SubtopicSpectrum};
pub use corpus::{load_corpus, load_daily_totals, CorpusError, DailyTotals, DateRange, Document, DocumentSet};
pub use decompose::{
    build_decomposition, contribution_coefficients, contribution_series, match_subtopics, normalize_series,
    reduced_stream, DailyCounts, DailySeries, DecomposeError, DecompositionResult, ReducedStream, SubtopicQuery,
};
pub use mfdfa::{spectrum, validity_check, InsufficientData, MfdfaConfig, MfdfaError, MultifractalSpectrum, Validity};
pub use synth::{analytic_hurst_binomial, binomial_cascade, random_walk, simulate_corpus, white_noise, CascadeSpec, SimCorpusSpec};
