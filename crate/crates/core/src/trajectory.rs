//! Life-normalized deletion-rate curves, two-phase linear fits, the quadrant
//! typology, and the Hi/Lo split on overall deletion fraction.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("too few posts: have {have}, need {need}")]
    TooFewPosts { have: usize, need: usize },
}

/// Per-bucket deletion rates over a user's life, buckets in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct LifeBuckets {
    pub rates: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Least-squares slope/intercept over each half of the bucket sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseFit {
    pub m1: f64,
    pub c1: f64,
    pub m2: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrant {
    /// Worsening in both halves (m1 > 0, m2 > 0).
    Q1,
    /// Improving then worsening (m1 <= 0, m2 > 0).
    Q2,
    /// Improving in both halves (m1 <= 0, m2 <= 0).
    Q3,
    /// Worsening then improving (m1 > 0, m2 <= 0).
    Q4,
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Quadrant::Q1 => "Q1",
            Quadrant::Q2 => "Q2",
            Quadrant::Q3 => "Q3",
            Quadrant::Q4 => "Q4",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FbuClass {
    Hi,
    Lo,
}

impl std::fmt::Display for FbuClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FbuClass::Hi => "hi",
            FbuClass::Lo => "lo",
        })
    }
}

/// Splits a time-ordered deletion-flag sequence into `n_buckets` contiguous
/// index groups of near-equal size (remainder spread over the earliest
/// buckets) and returns the per-bucket deletion rate.
pub fn bucket_deletion_rates(
    deleted_flags: &[bool],
    n_buckets: usize,
) -> Result<LifeBuckets, TrajectoryError> {
    let n = deleted_flags.len();
    if n < n_buckets || n_buckets == 0 {
        return Err(TrajectoryError::TooFewPosts { have: n, need: n_buckets });
    }
    let base = n / n_buckets;
    let remainder = n % n_buckets;
    let mut rates = Vec::with_capacity(n_buckets);
    let mut counts = Vec::with_capacity(n_buckets);
    let mut pos = 0;
    for b in 0..n_buckets {
        let size = base + usize::from(b < remainder);
        let deleted = deleted_flags[pos..pos + size].iter().filter(|&&d| d).count();
        rates.push(deleted as f64 / size as f64);
        counts.push(size);
        pos += size;
    }
    Ok(LifeBuckets { rates, counts })
}

fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    if points.len() < 2 {
        let y = points.first().map_or(0.0, |&(_, y)| y);
        return (0.0, y);
    }
    let mx = points.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let my = points.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let m = sxy / sxx;
    (m, my - m * mx)
}

/// Ordinary least squares of rate against the normalized bucket midpoint
/// `x_i = (i - 0.5) / B`, fit separately over the first and second half of
/// the buckets. With the standard 10 buckets each half has 5 points.
pub fn two_phase_fit(buckets: &LifeBuckets) -> TwoPhaseFit {
    let b = buckets.rates.len();
    let points: Vec<(f64, f64)> = buckets
        .rates
        .iter()
        .enumerate()
        .map(|(i, &r)| ((i as f64 + 0.5) / b as f64, r))
        .collect();
    let half = b / 2;
    let (m1, c1) = ols(&points[..half]);
    let (m2, c2) = ols(&points[half..]);
    TwoPhaseFit { m1, c1, m2, c2 }
}

/// Sign-pattern classification of the two slopes; zero slopes fall on the
/// non-increasing side.
pub fn classify_quadrant(fit: &TwoPhaseFit) -> Quadrant {
    match (fit.m1 > 0.0, fit.m2 > 0.0) {
        (true, true) => Quadrant::Q1,
        (false, true) => Quadrant::Q2,
        (false, false) => Quadrant::Q3,
        (true, false) => Quadrant::Q4,
    }
}

/// Hi when the overall deletion fraction is strictly above 0.5.
pub fn classify_hi_lo(deletion_fraction: f64) -> FbuClass {
    if deletion_fraction > 0.5 {
        FbuClass::Hi
    } else {
        FbuClass::Lo
    }
}
