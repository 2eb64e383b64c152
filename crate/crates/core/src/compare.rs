//! Spectral similarity between subtopic components and the main stream.
//!
//! Two spectra are compared as parametric curves `q -> (alpha(q), f(q))` on a
//! shared q grid: the distance is the RMS Euclidean gap between matched
//! points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mfdfa::{InsufficientData, MultifractalSpectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("q grids differ ({left} vs {right} points or values)")]
    GridMismatch { left: usize, right: usize },
}

pub fn spectrum_distance(a: &MultifractalSpectrum, b: &MultifractalSpectrum) -> Result<f64, CompareError> {
    if a.q != b.q || a.alpha.len() != a.q.len() || b.alpha.len() != b.q.len() {
        return Err(CompareError::GridMismatch { left: a.q.len(), right: b.q.len() });
    }
    let sum: f64 = a
        .alpha
        .iter()
        .zip(&b.alpha)
        .zip(a.f.iter().zip(&b.f))
        .map(|((aa, ba), (af, bf))| (aa - ba).powi(2) + (af - bf).powi(2))
        .sum();
    Ok((sum / a.q.len() as f64).sqrt())
}

/// A subtopic's spectrum, or the reason none could be estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum SubtopicSpectrum {
    Valid(MultifractalSpectrum),
    Invalid(InsufficientData),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDistance {
    pub topic: String,
    /// `None` exactly when the subtopic has no valid spectrum.
    pub distance: Option<f64>,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankingTable {
    pub rows: Vec<SpectrumDistance>,
}

impl RankingTable {
    pub fn topics(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.topic.as_str()).collect()
    }

    /// `topic,distance,valid` with distances at three decimals and blank
    /// distance fields for invalid rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("topic,distance,valid\n");
        for row in &self.rows {
            let distance = row.distance.map(|d| format!("{d:.3}")).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", csv_field(&row.topic), distance, row.valid));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Valid subtopics ascending by distance to `main` (ties by name), then
/// invalid ones by name.
pub fn rank_subtopics<'a, I>(main: &MultifractalSpectrum, subs: I) -> Result<RankingTable, CompareError>
where
    I: IntoIterator<Item = (&'a str, &'a SubtopicSpectrum)>,
{
    let mut valid = Vec::new();
    let mut invalid = Vec::new();
    for (name, sub) in subs {
        match sub {
            SubtopicSpectrum::Valid(s) => valid.push((name, spectrum_distance(main, s)?)),
            SubtopicSpectrum::Invalid(_) => invalid.push(name),
        }
    }
    valid.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    invalid.sort();
    let rows = valid
        .into_iter()
        .map(|(name, d)| SpectrumDistance { topic: name.to_string(), distance: Some(d), valid: true })
        .chain(invalid.into_iter().map(|name| SpectrumDistance {
            topic: name.to_string(),
            distance: None,
            valid: false,
        }))
        .collect();
    Ok(RankingTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(h: &[f64]) -> MultifractalSpectrum {
        let q: Vec<f64> = vec![-2.0, -1.0, 1.0, 2.0];
        MultifractalSpectrum::from_hurst(q, h.to_vec(), vec![0.0; 4], vec![10, 20, 40, 80]).unwrap()
    }

    #[test]
    fn identical_spectra_have_zero_distance() {
        let a = spec(&[0.9, 0.8, 0.6, 0.5]);
        assert_eq!(spectrum_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn distance_is_symmetric() {
        let a = spec(&[0.9, 0.8, 0.6, 0.5]);
        let b = spec(&[0.5, 0.5, 0.5, 0.5]);
        let d = spectrum_distance(&a, &b).unwrap();
        assert!(d > 0.0);
        assert_eq!(d, spectrum_distance(&b, &a).unwrap());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = spec(&[0.9, 0.8, 0.6, 0.5]);
        let mut b = a.clone();
        b.q[0] = -3.0;
        assert!(spectrum_distance(&a, &b).is_err());
    }

    #[test]
    fn invalid_rows_go_last() {
        let main = spec(&[0.9, 0.8, 0.6, 0.5]);
        let subs = vec![
            ("FBI".to_string(), SubtopicSpectrum::Invalid(InsufficientData::Constant)),
            ("B".to_string(), SubtopicSpectrum::Valid(spec(&[0.5, 0.5, 0.5, 0.5]))),
            ("A".to_string(), SubtopicSpectrum::Valid(main.clone())),
        ];
        let table = rank_subtopics(&main, subs.iter().map(|(n, s)| (n.as_str(), s))).unwrap();
        assert_eq!(table.topics(), vec!["A", "B", "FBI"]);
        assert_eq!(table.rows[0].distance, Some(0.0));
        assert_eq!(table.rows[2].distance, None);
        assert!(!table.rows[2].valid);
        let csv = table.to_csv();
        assert!(csv.starts_with("topic,distance,valid\nA,0.000,true\n"));
        assert!(csv.ends_with("FBI,,false\n"));
    }
}
