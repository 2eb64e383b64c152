//! Multifractal detrended fluctuation analysis.
//!
//! The pipeline is
//!
//! 1. profile: `y_t = sum_{k<=t} (x_k - mean(x))`;
//! 2. for each scale `s`, split the profile into `N_s = floor(N/s)` segments
//!    from the start and another `N_s` from the end, remove a least-squares
//!    polynomial of order `m` from each and keep the mean squared residual
//!    `F^2(s, v)`;
//! 3. `F_q(s) = [ mean_v (F^2(s, v))^(q/2) ]^(1/q)` for every `q != 0`;
//! 4. `h(q)` is the slope of `ln F_q(s)` against `ln s`;
//! 5. `tau(q) = q h(q) - 1`, `alpha = tau'(q)`, `f = q alpha - tau(q)`.
//!
//! All reductions run in index order, so results do not depend on the number
//! of worker threads.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Why a series cannot support a spectrum estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum InsufficientData {
    TooShort { length: usize, min_length: usize },
    TooManyZeros { zero_fraction: f64, max_zero_fraction: f64 },
    Constant,
    NonFinite { index: usize },
}

impl fmt::Display for InsufficientData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooShort { length, min_length } => {
                write!(f, "series too short ({length} < {min_length})")
            }
            Self::TooManyZeros { zero_fraction, max_zero_fraction } => write!(
                f,
                "too many zeros (zero fraction {zero_fraction} > {max_zero_fraction})"
            ),
            Self::Constant => write!(f, "series is constant"),
            Self::NonFinite { index } => write!(f, "non-finite value at index {index}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MfdfaError {
    #[error("insufficient data: {0}")]
    InsufficientData(InsufficientData),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("series too short: {0} points")]
    TooShort(usize),
    #[error("scale {scale} out of range for length {length} and detrend order {order}")]
    ScaleOutOfRange { scale: usize, length: usize, order: usize },
    #[error("zero fluctuation in segment {segment} at scale {scale} with negative q")]
    DegenerateSegment { scale: usize, segment: usize },
    #[error("non-finite fluctuation at q = {q}, scale {scale}")]
    NonFinite { q: f64, scale: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

impl MfdfaError {
    /// Failures of the numerics on data that passed validation.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Self::DegenerateSegment { .. } | Self::NonFinite { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaConfig {
    /// Strictly increasing, zero excluded.
    pub q_grid: Vec<f64>,
    /// Explicit scales; `None` picks scales from the series length.
    pub scales: Option<Vec<usize>>,
    pub detrend_order: usize,
    pub min_length: usize,
    pub max_zero_fraction: f64,
}

impl Default for MfdfaConfig {
    fn default() -> Self {
        Self {
            q_grid: q_range(-5.0, 5.0, 0.5).expect("default q grid"),
            scales: None,
            detrend_order: 1,
            min_length: 128,
            max_zero_fraction: 0.5,
        }
    }
}

/// `q_min, q_min + step, ..., q_max` with `q = 0` removed.
pub fn q_range(q_min: f64, q_max: f64, step: f64) -> Result<Vec<f64>, MfdfaError> {
    if step.is_nan() || step <= 0.0 || !q_min.is_finite() || !q_max.is_finite() || q_min >= q_max {
        return Err(MfdfaError::InvalidConfig(format!(
            "bad q range {q_min}..{q_max} step {step}"
        )));
    }
    let count = ((q_max - q_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let q = q_min + k as f64 * step;
            (q * 1e9).round() / 1e9
        })
        .filter(|q| q.abs() > step * 1e-6)
        .collect())
}

/// Geometric scales `round(s_max * 2^(-j/k))` in `[max(10, m + 2), floor(n / 4)]`,
/// ascending. The ratio is one octave (`k = 1`) unless that leaves fewer than
/// four scales, in which case each octave is split into `k` steps with the
/// smallest such `k`.
pub fn default_scales(n: usize, detrend_order: usize) -> Vec<usize> {
    let lo = 10.max(detrend_order + 2);
    let hi = n / 4;
    if hi < lo {
        return Vec::new();
    }
    let mut scales = Vec::new();
    for per_octave in 1..=16u32 {
        scales = (0..)
            .map(|j| (hi as f64 * 2f64.powf(-(j as f64) / per_octave as f64)).round() as usize)
            .take_while(|&s| s >= lo)
            .collect();
        scales.reverse();
        scales.dedup();
        if scales.len() >= 4 {
            break;
        }
    }
    scales
}

impl MfdfaConfig {
    pub fn validate(&self) -> Result<(), MfdfaError> {
        let bad = |m: String| Err(MfdfaError::InvalidConfig(m));
        if self.q_grid.len() < 3 {
            return bad("q grid needs at least 3 points".into());
        }
        if self.q_grid.iter().any(|q| !q.is_finite() || *q == 0.0) {
            return bad("q grid must be finite and exclude 0".into());
        }
        if self.q_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("q grid must be strictly increasing".into());
        }
        if !(1..=3).contains(&self.detrend_order) {
            return bad(format!("detrend order must be 1..=3, got {}", self.detrend_order));
        }
        if !(0.0..=1.0).contains(&self.max_zero_fraction) {
            return bad(format!("max zero fraction must be in [0, 1], got {}", self.max_zero_fraction));
        }
        if let Some(scales) = &self.scales {
            if scales.windows(2).any(|w| w[0] >= w[1]) {
                return bad("scales must be strictly increasing".into());
            }
        }
        Ok(())
    }

    /// Scales to use for a series of length `n`.
    pub fn resolve_scales(&self, n: usize) -> Result<Vec<usize>, MfdfaError> {
        let m = self.detrend_order;
        let scales = match &self.scales {
            Some(s) => s.clone(),
            None => default_scales(n, m),
        };
        if scales.len() < 4 {
            return Err(MfdfaError::InvalidConfig(format!(
                "need at least 4 scales, got {} for length {n}",
                scales.len()
            )));
        }
        if let Some(&s) = scales.iter().find(|&&s| s <= m + 1 || s > n / 2) {
            return Err(MfdfaError::ScaleOutOfRange { scale: s, length: n, order: m });
        }
        Ok(scales)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Validity {
    Ok,
    InsufficientData(InsufficientData),
}

pub fn validity_check(series: &[f64], config: &MfdfaConfig) -> Validity {
    let insufficient = Validity::InsufficientData;
    if let Some(index) = series.iter().position(|v| !v.is_finite()) {
        return insufficient(InsufficientData::NonFinite { index });
    }
    if series.len() < config.min_length {
        return insufficient(InsufficientData::TooShort {
            length: series.len(),
            min_length: config.min_length,
        });
    }
    let zeros = series.iter().filter(|&&v| v == 0.0).count();
    let zero_fraction = zeros as f64 / series.len() as f64;
    if zero_fraction > config.max_zero_fraction {
        return insufficient(InsufficientData::TooManyZeros {
            zero_fraction,
            max_zero_fraction: config.max_zero_fraction,
        });
    }
    if series.iter().all(|&v| v == series[0]) {
        return insufficient(InsufficientData::Constant);
    }
    Validity::Ok
}

/// Cumulative sum of mean deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile(Vec<f64>);

impl Profile {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn profile(series: &[f64]) -> Result<Profile, MfdfaError> {
    if series.len() < 2 {
        return Err(MfdfaError::TooShort(series.len()));
    }
    let mut total = CompensatedSum::default();
    series.iter().for_each(|&v| total.add(v));
    let mean = total.value() / series.len() as f64;
    let mut acc = CompensatedSum::default();
    Ok(Profile(
        series
            .iter()
            .map(|&v| {
                acc.add(v - mean);
                acc.value()
            })
            .collect(),
    ))
}

/// Orthonormal polynomial basis of degree `0..=order` sampled on `len` equally
/// spaced points of `[-1, 1]`.
fn polynomial_basis(len: usize, order: usize) -> Vec<Vec<f64>> {
    let xs: Vec<f64> = (0..len)
        .map(|i| {
            if len == 1 {
                0.0
            } else {
                2.0 * i as f64 / (len - 1) as f64 - 1.0
            }
        })
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut v: Vec<f64> = xs.iter().map(|x| x.powi(k as i32)).collect();
        // Two Gram-Schmidt passes keep the basis orthogonal to rounding.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|vi| *vi /= norm);
        basis.push(v);
    }
    basis
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual_variance(segment: &[f64], basis: &[Vec<f64>], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(segment);
    for b in basis {
        let c = dot(scratch, b);
        scratch.iter_mut().zip(b).for_each(|(r, bi)| *r -= c * bi);
    }
    dot(scratch, scratch) / segment.len() as f64
}

/// Detrended variances `F^2(s, v)` for `v = 1..2 N_s`: the first `N_s` from
/// segments taken at the start of the profile, the rest from segments taken
/// at the end.
pub fn segment_variances(profile: &Profile, scale: usize, order: usize) -> Result<Vec<f64>, MfdfaError> {
    let n = profile.len();
    if scale < order + 2 || scale > n {
        return Err(MfdfaError::ScaleOutOfRange { scale, length: n, order });
    }
    let y = profile.values();
    let basis = polynomial_basis(scale, order);
    let segments = n / scale;
    let offset = n - segments * scale;
    let mut scratch = Vec::with_capacity(scale);
    let mut out = Vec::with_capacity(2 * segments);
    for v in 0..segments {
        out.push(residual_variance(&y[v * scale..(v + 1) * scale], &basis, &mut scratch));
    }
    for v in 0..segments {
        let start = offset + v * scale;
        out.push(residual_variance(&y[start..start + scale], &basis, &mut scratch));
    }
    Ok(out)
}

/// `F_q(s)` over the q grid and scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSurface {
    pub q_grid: Vec<f64>,
    pub scales: Vec<usize>,
    /// `ln F_q(s)`, indexed `[q][scale]`.
    pub log_values: Vec<Vec<f64>>,
    /// `2 N_s` per scale.
    pub segment_counts: Vec<usize>,
    /// Segments with zero fluctuation per scale (skipped for `q > 0`).
    pub degenerate_segments: Vec<usize>,
}

impl FluctuationSurface {
    pub fn value(&self, qi: usize, si: usize) -> f64 {
        self.log_values[qi][si].exp()
    }

    /// Largest violation of `F_q(s)` being nondecreasing in `q`, in log units.
    pub fn monotonicity_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for si in 0..self.scales.len() {
            for qi in 1..self.q_grid.len() {
                worst = worst.max(self.log_values[qi - 1][si] - self.log_values[qi][si]);
            }
        }
        worst
    }
}

/// `ln [ mean (F^2)^(q/2) ]^(1/q)` computed as a shifted log-sum-exp.
fn log_generalized_mean(log_f2: &[Option<f64>], q: f64) -> f64 {
    let half = q / 2.0;
    let peak = log_f2
        .iter()
        .flatten()
        .map(|&l| half * l)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_f2
        .iter()
        .flatten()
        .map(|&l| (half * l - peak).exp())
        .sum();
    (peak + (sum / log_f2.len() as f64).ln()) / q
}

pub fn fluctuation_function(profile: &Profile, config: &MfdfaConfig) -> Result<FluctuationSurface, MfdfaError> {
    config.validate()?;
    let scales = config.resolve_scales(profile.len())?;
    let peak = profile.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // Fluctuations below rounding level of the profile count as exact zeros.
    let zero_floor = (1e-12 * peak).powi(2);
    let per_scale: Vec<Vec<f64>> = scales
        .par_iter()
        .map(|&s| segment_variances(profile, s, config.detrend_order))
        .collect::<Result<_, _>>()?;

    let has_negative_q = config.q_grid.iter().any(|&q| q < 0.0);
    let mut log_values = vec![Vec::with_capacity(scales.len()); config.q_grid.len()];
    let mut segment_counts = Vec::with_capacity(scales.len());
    let mut degenerate_segments = Vec::with_capacity(scales.len());
    for (&s, f2) in scales.iter().zip(&per_scale) {
        let log_f2: Vec<Option<f64>> = f2
            .iter()
            .map(|&v| (v > zero_floor).then(|| v.ln()))
            .collect();
        let degenerate = log_f2.iter().filter(|l| l.is_none()).count();
        if degenerate > 0 && has_negative_q {
            let segment = log_f2.iter().position(Option::is_none).unwrap() + 1;
            return Err(MfdfaError::DegenerateSegment { scale: s, segment });
        }
        for (qi, &q) in config.q_grid.iter().enumerate() {
            let l = log_generalized_mean(&log_f2, q);
            if !l.is_finite() {
                return Err(MfdfaError::NonFinite { q, scale: s });
            }
            log_values[qi].push(l);
        }
        segment_counts.push(f2.len());
        degenerate_segments.push(degenerate);
    }
    Ok(FluctuationSurface {
        q_grid: config.q_grid.clone(),
        scales,
        log_values,
        segment_counts,
        degenerate_segments,
    })
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the residuals.
    pub residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit, MfdfaError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(MfdfaError::TooFewPoints { needed: 2, got: x.len().min(y.len()) });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    if sxx == 0.0 {
        return Err(MfdfaError::InvalidConfig("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    Ok(LineFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// `h(q)` with its log-log fit, one entry per q.
pub fn generalized_hurst(surface: &FluctuationSurface) -> Result<Vec<LineFit>, MfdfaError> {
    if surface.scales.len() < 4 {
        return Err(MfdfaError::TooFewPoints { needed: 4, got: surface.scales.len() });
    }
    let log_s: Vec<f64> = surface.scales.iter().map(|&s| (s as f64).ln()).collect();
    surface
        .log_values
        .iter()
        .zip(&surface.q_grid)
        .map(|(row, &q)| {
            if let Some(si) = row.iter().position(|v| !v.is_finite()) {
                return Err(MfdfaError::NonFinite { q, scale: surface.scales[si] });
            }
            fit_line(&log_s, row)
        })
        .collect()
}

/// `tau(q) = q h(q) - 1`.
pub fn scaling_function(q_grid: &[f64], hurst: &[f64]) -> Vec<f64> {
    q_grid.iter().zip(hurst).map(|(q, h)| q * h - 1.0).collect()
}

/// `alpha = tau'(q)` and `f = q alpha - tau`.
///
/// Interior derivatives use the three-point formula for uneven spacing,
/// exact for quadratics; the endpoints use one-sided differences.
pub fn legendre_spectrum(q_grid: &[f64], tau: &[f64]) -> Result<(Vec<f64>, Vec<f64>), MfdfaError> {
    let n = q_grid.len();
    if n < 3 || tau.len() != n {
        return Err(MfdfaError::TooFewPoints { needed: 3, got: n.min(tau.len()) });
    }
    let mut alpha = Vec::with_capacity(n);
    alpha.push((tau[1] - tau[0]) / (q_grid[1] - q_grid[0]));
    for k in 1..n - 1 {
        let h1 = q_grid[k] - q_grid[k - 1];
        let h2 = q_grid[k + 1] - q_grid[k];
        let d = (h1 * h1 * tau[k + 1] - h2 * h2 * tau[k - 1] + (h2 * h2 - h1 * h1) * tau[k])
            / (h1 * h2 * (h1 + h2));
        alpha.push(d);
    }
    alpha.push((tau[n - 1] - tau[n - 2]) / (q_grid[n - 1] - q_grid[n - 2]));
    let f = q_grid
        .iter()
        .zip(&alpha)
        .zip(tau)
        .map(|((q, a), t)| q * a - t)
        .collect();
    Ok((alpha, f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultifractalSpectrum {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    pub tau: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    /// RMS residual of each log-log fit.
    pub fit_residual: Vec<f64>,
    pub scales: Vec<usize>,
}

impl MultifractalSpectrum {
    /// Assemble a spectrum from `h(q)` alone.
    pub fn from_hurst(q: Vec<f64>, h: Vec<f64>, fit_residual: Vec<f64>, scales: Vec<usize>) -> Result<Self, MfdfaError> {
        let tau = scaling_function(&q, &h);
        let (alpha, f) = legendre_spectrum(&q, &tau)?;
        Ok(Self { q, h, tau, alpha, f, fit_residual, scales })
    }

    /// `max alpha - min alpha`.
    pub fn width(&self) -> f64 {
        let max = self.alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.alpha.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    pub fn hurst_at(&self, q: f64) -> Option<f64> {
        self.q.iter().position(|&x| (x - q).abs() < 1e-9).map(|i| self.h[i])
    }

    /// Largest discrete second difference of `tau` (positive means not concave).
    pub fn concavity_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for k in 1..self.q.len().saturating_sub(1) {
            let (h1, h2) = (self.q[k] - self.q[k - 1], self.q[k + 1] - self.q[k]);
            let second = 2.0
                * (h1 * self.tau[k + 1] - (h1 + h2) * self.tau[k] + h2 * self.tau[k - 1])
                / (h1 * h2 * (h1 + h2));
            worst = worst.max(second);
        }
        worst
    }
}

/// Full pipeline from a series to its singularity spectrum.
pub fn spectrum(series: &[f64], config: &MfdfaConfig) -> Result<MultifractalSpectrum, MfdfaError> {
    config.validate()?;
    if let Validity::InsufficientData(reason) = validity_check(series, config) {
        return Err(MfdfaError::InsufficientData(reason));
    }
    let profile = profile(series)?;
    let surface = fluctuation_function(&profile, config)?;
    let fits = generalized_hurst(&surface)?;
    MultifractalSpectrum::from_hurst(
        surface.q_grid,
        fits.iter().map(|f| f.slope).collect(),
        fits.iter().map(|f| f.residual).collect(),
        surface.scales,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_q_grid_skips_zero() {
        let q = MfdfaConfig::default().q_grid;
        assert_eq!(q.len(), 20);
        assert_eq!(q[0], -5.0);
        assert_eq!(q[9], -0.5);
        assert_eq!(q[10], 0.5);
        assert_eq!(q[19], 5.0);
    }

    #[test]
    fn default_scales_are_octaves_below_quarter_length() {
        assert_eq!(default_scales(1 << 14, 1), vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);
        // short series refine the ratio until there are four scales
        assert_eq!(default_scales(128, 1), vec![11, 16, 23, 32]);
        assert_eq!(default_scales(245, 1), vec![11, 15, 22, 31, 43, 61]);
        assert!(default_scales(30, 1).is_empty());
        for n in [128usize, 200, 245, 1000, 5000] {
            let s = default_scales(n, 3);
            assert!(s.len() >= 4, "{n}: {s:?}");
            assert!(s[0] >= 10 && *s.last().unwrap() == n / 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn validity_verdicts() {
        let cfg = MfdfaConfig::default();
        assert_eq!(
            validity_check(&[0.0; 200], &cfg),
            Validity::InsufficientData(InsufficientData::TooManyZeros {
                zero_fraction: 1.0,
                max_zero_fraction: 0.5
            })
        );
        assert!(matches!(
            validity_check(&[1.0; 64], &cfg),
            Validity::InsufficientData(InsufficientData::TooShort { length: 64, .. })
        ));
        assert_eq!(validity_check(&[2.0; 300], &cfg), Validity::InsufficientData(InsufficientData::Constant));
        let wiggle: Vec<f64> = (0..300).map(|i| (i as f64).sin()).collect();
        assert_eq!(validity_check(&wiggle, &cfg), Validity::Ok);
    }

    #[test]
    fn profile_hand_arithmetic() {
        assert_eq!(profile(&[1.0, 2.0, 3.0]).unwrap().values(), &[-1.0, -1.0, 0.0]);
        assert!(profile(&[5.0; 10]).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(matches!(profile(&[1.0]), Err(MfdfaError::TooShort(1))));
    }

    #[test]
    fn segments_tile_from_both_ends() {
        // N = 10, s = 4: forward {0..4},{4..8}, backward {2..6},{6..10}.
        let y: Vec<f64> = (0..10).map(|t| ((t * t) % 7) as f64).collect();
        let p = Profile(y.clone());
        let f2 = segment_variances(&p, 4, 1).unwrap();
        assert_eq!(f2.len(), 4);
        let basis = polynomial_basis(4, 1);
        let mut scratch = Vec::new();
        for (got, start) in f2.iter().zip([0, 4, 2, 6]) {
            assert_eq!(*got, residual_variance(&y[start..start + 4], &basis, &mut scratch));
        }
    }

    #[test]
    fn linear_profile_has_no_fluctuation() {
        let p = Profile((0..100).map(|t| 3.0 - 0.25 * t as f64).collect());
        for v in segment_variances(&p, 10, 1).unwrap() {
            assert!(v < 1e-24, "{v}");
        }
    }

    #[test]
    fn scale_bounds_are_enforced() {
        let p = Profile((0..20).map(|t| t as f64).collect());
        assert!(segment_variances(&p, 2, 1).is_err());
        assert!(segment_variances(&p, 21, 1).is_err());
        assert!(segment_variances(&p, 3, 1).is_ok());
    }

    #[test]
    fn exact_power_law_gives_exact_slope() {
        let scales = vec![10, 20, 40, 80, 160];
        let surface = FluctuationSurface {
            q_grid: vec![-1.0, 1.0, 2.0],
            log_values: vec![scales.iter().map(|&s| (3.0 * (s as f64).sqrt()).ln()).collect(); 3],
            segment_counts: vec![0; 5],
            degenerate_segments: vec![0; 5],
            scales,
        };
        for fit in generalized_hurst(&surface).unwrap() {
            assert_abs_diff_eq!(fit.slope, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(fit.residual, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_function_substitution() {
        assert_eq!(scaling_function(&[2.0], &[0.5]), vec![0.0]);
        let q = [-2.0, -1.0, 1.0, 3.0];
        let tau = scaling_function(&q, &[0.7; 4]);
        for (qi, ti) in q.iter().zip(&tau) {
            assert_abs_diff_eq!(*ti, 0.7 * qi - 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn legendre_of_affine_tau_is_a_point() {
        let q = MfdfaConfig::default().q_grid;
        let tau: Vec<f64> = q.iter().map(|q| 0.6 * q - 1.0).collect();
        let (alpha, f) = legendre_spectrum(&q, &tau).unwrap();
        for k in 0..q.len() {
            assert_abs_diff_eq!(alpha[k], 0.6, epsilon = 1e-12);
            assert_abs_diff_eq!(f[k], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn legendre_of_quadratic_is_exact_inside() {
        let q: Vec<f64> = (0..11).map(|k| -2.5 + 0.5 * k as f64).collect();
        let tau: Vec<f64> = q.iter().map(|q| q * q / 2.0).collect();
        let (alpha, f) = legendre_spectrum(&q, &tau).unwrap();
        for k in 1..q.len() - 1 {
            assert_abs_diff_eq!(alpha[k], q[k], epsilon = 1e-12);
            assert_abs_diff_eq!(f[k], q[k] * q[k] / 2.0, epsilon = 1e-12);
        }
        // uneven grid around the missing q = 0
        let q = MfdfaConfig::default().q_grid;
        let tau: Vec<f64> = q.iter().map(|q| q * q / 2.0).collect();
        let (alpha, _) = legendre_spectrum(&q, &tau).unwrap();
        assert_abs_diff_eq!(alpha[9], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha[10], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = MfdfaConfig::default();
        cfg.q_grid = vec![-1.0, 0.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg.q_grid = vec![1.0, -1.0, 2.0];
        assert!(cfg.validate().is_err());
        cfg = MfdfaConfig { detrend_order: 4, ..MfdfaConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = MfdfaConfig { scales: Some(vec![10, 20, 30]), ..MfdfaConfig::default() };
        assert!(cfg.resolve_scales(1000).is_err());
        cfg.scales = Some(vec![10, 20, 30, 600]);
        assert!(matches!(cfg.resolve_scales(1000), Err(MfdfaError::ScaleOutOfRange { scale: 600, .. })));
    }

    #[test]
    fn zero_segment_with_negative_q_is_degenerate() {
        // Piecewise-linear profile: first 200 points flat noise-free ramp.
        let mut x = vec![1.0; 200];
        x.extend((0..200).map(|i| ((i * 37) % 11) as f64));
        let p = profile(&x).unwrap();
        let cfg = MfdfaConfig { scales: Some(vec![10, 20, 40, 80]), ..MfdfaConfig::default() };
        assert!(matches!(
            fluctuation_function(&p, &cfg),
            Err(MfdfaError::DegenerateSegment { scale: 10, segment: 1 })
        ));
        let positive = MfdfaConfig { q_grid: vec![1.0, 2.0, 3.0], ..cfg };
        let surface = fluctuation_function(&p, &positive).unwrap();
        assert!(surface.degenerate_segments[0] > 0);
        assert!(surface.log_values.iter().flatten().all(|v| v.is_finite()));
    }
}
