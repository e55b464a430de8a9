//! Intensity histograms and cumulative moments.

use thiserror::Error;

use crate::image_io::{GrayImage, LEVELS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HistogramError {
    #[error("histogram of an empty image")]
    EmptyImage,
}

/// 256-bin pixel counts together with the normalized distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    counts: [u64; LEVELS],
    total: u64,
    prob: [f64; LEVELS],
}

impl Histogram {
    pub fn from_counts(counts: [u64; LEVELS]) -> Result<Self, HistogramError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(HistogramError::EmptyImage);
        }
        let mut prob = [0.0; LEVELS];
        for (p, &c) in prob.iter_mut().zip(counts.iter()) {
            *p = c as f64 / total as f64;
        }
        Ok(Self {
            counts,
            total,
            prob,
        })
    }

    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn prob(&self) -> &[f64; LEVELS] {
        &self.prob
    }

    /// Global mean intensity.
    pub fn mean(&self) -> f64 {
        self.prob
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum()
    }
}

pub fn build_histogram(img: &GrayImage) -> Result<Histogram, HistogramError> {
    if img.is_empty() {
        return Err(HistogramError::EmptyImage);
    }
    let mut counts = [0u64; LEVELS];
    for &px in img.pixels() {
        counts[px as usize] += 1;
    }
    Histogram::from_counts(counts)
}

/// Cumulative sums over the probability vector.
///
/// Index `k` holds the sum over bins `0..k`, so every array has `LEVELS + 1`
/// entries and the mass of the half-open class `[a, b)` is `mass[b] - mass[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixMoments {
    mass: Vec<f64>,
    first: Vec<f64>,
    /// Cumulative `p ln p`, with `0 ln 0 = 0`.
    plogp: Vec<f64>,
}

impl PrefixMoments {
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn plogp(&self) -> &[f64] {
        &self.plogp
    }

    /// Probability mass of `[a, b)`.
    #[inline]
    pub fn interval_mass(&self, a: usize, b: usize) -> f64 {
        self.mass[b] - self.mass[a]
    }

    /// Unnormalized first moment `sum i * p_i` over `[a, b)`.
    #[inline]
    pub fn interval_first(&self, a: usize, b: usize) -> f64 {
        self.first[b] - self.first[a]
    }

    #[inline]
    pub fn interval_plogp(&self, a: usize, b: usize) -> f64 {
        self.plogp[b] - self.plogp[a]
    }

    pub fn total_mean(&self) -> f64 {
        self.first[LEVELS]
    }
}

pub fn prefix_moments(h: &Histogram) -> PrefixMoments {
    let mut mass = Vec::with_capacity(LEVELS + 1);
    let mut first = Vec::with_capacity(LEVELS + 1);
    let mut plogp = Vec::with_capacity(LEVELS + 1);
    let (mut w, mut m, mut e) = (0.0f64, 0.0f64, 0.0f64);
    mass.push(w);
    first.push(m);
    plogp.push(e);
    for (i, &p) in h.prob().iter().enumerate() {
        w += p;
        m += i as f64 * p;
        if p > 0.0 {
            e += p * p.ln();
        }
        mass.push(w);
        first.push(m);
        plogp.push(e);
    }
    PrefixMoments { mass, first, plogp }
}
