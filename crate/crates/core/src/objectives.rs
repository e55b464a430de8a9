//! Otsu and Kapur thresholding criteria.
//!
//! A threshold vector `t_1 <= ... <= t_m` splits the gray range into the
//! half-open classes `[0, t_1), [t_1, t_2), ..., [t_m, 256)`. Both criteria
//! are sums of independent per-class scores, which is what the exact oracle
//! relies on. Empty classes score exactly zero.

use std::fmt;
use std::str::FromStr;

use crate::histogram::{prefix_moments, Histogram, PrefixMoments};
use crate::image_io::LEVELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectiveKind {
    Otsu,
    Kapur,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Otsu => "otsu",
            ObjectiveKind::Kapur => "kapur",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "otsu" => Ok(ObjectiveKind::Otsu),
            "kapur" => Ok(ObjectiveKind::Kapur),
            other => Err(format!(
                "unknown objective `{other}` (expected otsu or kapur)"
            )),
        }
    }
}

/// Sorted integer thresholds. Duplicates are allowed and induce empty classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ThresholdVector(Vec<u8>);

impl ThresholdVector {
    /// Builds a vector from arbitrary values, sorting them.
    pub fn new(mut values: Vec<u8>) -> Self {
        values.sort_unstable();
        Self(values)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// Number of thresholds `m`; the vector induces `m + 1` classes.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Class boundaries `0, t_1, ..., t_m, 256`.
    pub fn boundaries(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(0)
            .chain(self.0.iter().map(|&t| t as usize))
            .chain(std::iter::once(LEVELS))
    }

    /// Space separated, as used in reports.
    pub fn to_field(&self) -> String {
        self.0
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for ThresholdVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_field())
    }
}

impl From<Vec<u8>> for ThresholdVector {
    fn from(v: Vec<u8>) -> Self {
        Self::new(v)
    }
}

/// Clamp each coordinate to the gray range, round half away from zero and sort.
pub fn decode_position(raw: &[f64]) -> ThresholdVector {
    let max = (LEVELS - 1) as f64;
    let values = raw
        .iter()
        .map(|&x| {
            let x = if x.is_nan() { 0.0 } else { x };
            x.clamp(0.0, max).round() as u8
        })
        .collect();
    ThresholdVector::new(values)
}

/// A criterion bound to one histogram.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    moments: PrefixMoments,
    mu_total: f64,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, histogram: &Histogram) -> Self {
        Self::from_moments(kind, prefix_moments(histogram))
    }

    pub fn from_moments(kind: ObjectiveKind, moments: PrefixMoments) -> Self {
        let mu_total = moments.total_mean();
        Self {
            kind,
            moments,
            mu_total,
        }
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn moments(&self) -> &PrefixMoments {
        &self.moments
    }

    pub fn mu_total(&self) -> f64 {
        self.mu_total
    }

    /// Score of the class `[a, b)` under this criterion.
    #[inline]
    pub fn interval_score(&self, a: usize, b: usize) -> f64 {
        match self.kind {
            ObjectiveKind::Otsu => self.otsu_interval(a, b),
            ObjectiveKind::Kapur => self.kapur_interval(a, b),
        }
    }

    #[inline]
    fn otsu_interval(&self, a: usize, b: usize) -> f64 {
        let w = self.moments.interval_mass(a, b);
        if w <= 0.0 {
            return 0.0;
        }
        let mu = self.moments.interval_first(a, b) / w;
        let d = mu - self.mu_total;
        w * d * d
    }

    /// `-sum (p/w) ln(p/w) = ln w - (sum p ln p) / w`
    #[inline]
    fn kapur_interval(&self, a: usize, b: usize) -> f64 {
        let w = self.moments.interval_mass(a, b);
        if w <= 0.0 {
            return 0.0;
        }
        (w.ln() - self.moments.interval_plogp(a, b) / w).max(0.0)
    }

    fn sum_classes(&self, t: &ThresholdVector, score: impl Fn(usize, usize) -> f64) -> f64 {
        let bounds: Vec<usize> = t.boundaries().collect();
        let mut total = 0.0;
        for w in bounds.windows(2) {
            total += score(w[0], w[1]);
        }
        total
    }

    /// Maximization fitness for this spec's criterion.
    pub fn fitness(&self, t: &ThresholdVector) -> f64 {
        self.sum_classes(t, |a, b| self.interval_score(a, b))
    }

    /// Negated fitness, as consumed by the swarm minimizers.
    pub fn minimization_fitness(&self, t: &ThresholdVector) -> f64 {
        -self.fitness(t)
    }

    /// Class masses `omega_j` and means `mu_j` for `t` (mean 0 for empty classes).
    pub fn class_statistics(&self, t: &ThresholdVector) -> Vec<(f64, f64)> {
        let bounds: Vec<usize> = t.boundaries().collect();
        bounds
            .windows(2)
            .map(|w| {
                let mass = self.moments.interval_mass(w[0], w[1]);
                let mean = if mass > 0.0 {
                    self.moments.interval_first(w[0], w[1]) / mass
                } else {
                    0.0
                };
                (mass, mean)
            })
            .collect()
    }
}

/// Between-class variance `sum omega_j (mu_j - mu_T)^2`.
pub fn otsu_fitness(spec: &ObjectiveSpec, t: &ThresholdVector) -> f64 {
    spec.sum_classes(t, |a, b| spec.otsu_interval(a, b))
}

/// Sum of per-class Shannon entropies of the class-conditional distributions.
pub fn kapur_fitness(spec: &ObjectiveSpec, t: &ThresholdVector) -> f64 {
    spec.sum_classes(t, |a, b| spec.kapur_interval(a, b))
}

pub fn minimization_fitness(spec: &ObjectiveSpec, t: &ThresholdVector) -> f64 {
    spec.minimization_fitness(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::Histogram;
    use proptest::prelude::*;

    fn two_peak() -> Histogram {
        let mut counts = [0u64; LEVELS];
        counts[50] = 100;
        counts[200] = 100;
        Histogram::from_counts(counts).unwrap()
    }

    fn uniform() -> Histogram {
        Histogram::from_counts([1; LEVELS]).unwrap()
    }

    fn single_bin() -> Histogram {
        let mut counts = [0u64; LEVELS];
        counts[100] = 42;
        Histogram::from_counts(counts).unwrap()
    }

    fn tv(v: &[u8]) -> ThresholdVector {
        ThresholdVector::new(v.to_vec())
    }

    #[test]
    fn otsu_two_peak() {
        let spec = ObjectiveSpec::new(ObjectiveKind::Otsu, &two_peak());
        assert_eq!(otsu_fitness(&spec, &tv(&[120])), 5625.0);
        assert_eq!(spec.minimization_fitness(&tv(&[120])), -5625.0);
    }

    #[test]
    fn otsu_single_class_is_zero() {
        let spec = ObjectiveSpec::new(ObjectiveKind::Otsu, &two_peak());
        assert_eq!(otsu_fitness(&spec, &tv(&[0])), 0.0);
        assert_eq!(spec.minimization_fitness(&tv(&[0])), 0.0);
    }

    #[test]
    fn kapur_uniform_midpoint() {
        let spec = ObjectiveSpec::new(ObjectiveKind::Kapur, &uniform());
        let h = kapur_fitness(&spec, &tv(&[128]));
        assert!((h - 2.0 * 128f64.ln()).abs() < 1e-9, "{h}");
        assert!((h - 9.70406).abs() < 1e-5);
        assert!((spec.minimization_fitness(&tv(&[128])) + 9.70406).abs() < 1e-5);
    }

    #[test]
    fn kapur_single_bin_is_zero() {
        let spec = ObjectiveSpec::new(ObjectiveKind::Kapur, &single_bin());
        for t in [0u8, 50, 100, 101, 255] {
            assert_eq!(kapur_fitness(&spec, &tv(&[t])), 0.0);
        }
        assert_eq!(kapur_fitness(&spec, &tv(&[10, 100, 200])), 0.0);
    }

    #[test]
    fn decode_rounds_clamps_sorts() {
        assert_eq!(decode_position(&[99.4, 34.6]), tv(&[35, 99]));
        assert_eq!(decode_position(&[-3.0, 300.0]), tv(&[0, 255]));
        assert_eq!(decode_position(&[100.0, 100.2]).as_slice(), &[100, 100]);
        assert_eq!(decode_position(&[12.5]).as_slice(), &[13]);
    }

    #[test]
    fn spec_mean_matches_moments() {
        let spec = ObjectiveSpec::new(ObjectiveKind::Otsu, &two_peak());
        assert_eq!(spec.mu_total(), spec.moments().first_moment()[LEVELS]);
        assert_eq!(spec.mu_total(), 125.0);
    }

    fn arb_histogram() -> impl Strategy<Value = Histogram> {
        (proptest::collection::vec(0u64..500, LEVELS), 0usize..LEVELS).prop_map(|(c, bump)| {
            let mut arr = [0u64; LEVELS];
            arr.copy_from_slice(&c);
            arr[bump] += 1;
            Histogram::from_counts(arr).unwrap()
        })
    }

    proptest! {
        #[test]
        fn otsu_permutation_invariant(h in arb_histogram(), raw in proptest::collection::vec(0.0f64..255.0, 1..6)) {
            let spec = ObjectiveSpec::new(ObjectiveKind::Otsu, &h);
            let mut rev = raw.clone();
            rev.reverse();
            prop_assert_eq!(spec.fitness(&decode_position(&raw)), spec.fitness(&decode_position(&rev)));
        }

        #[test]
        fn otsu_two_class_form(h in arb_histogram(), t in 0u8..=255) {
            let spec = ObjectiveSpec::new(ObjectiveKind::Otsu, &h);
            let p = h.prob();
            let mu_t: f64 = (0..LEVELS).map(|i| i as f64 * p[i]).sum();
            let class = |a: usize, b: usize| {
                let w: f64 = p[a..b].iter().sum();
                if w == 0.0 { return 0.0; }
                let mu = (a..b).map(|i| i as f64 * p[i]).sum::<f64>() / w;
                w * (mu - mu_t).powi(2)
            };
            let expected = class(0, t as usize) + class(t as usize, LEVELS);
            let got = otsu_fitness(&spec, &tv(&[t]));
            prop_assert!((got - expected).abs() <= 1e-9 * expected.max(1.0));
        }

        #[test]
        fn kapur_bounds(h in arb_histogram(), raw in proptest::collection::vec(0.0f64..255.0, 1..6)) {
            let spec = ObjectiveSpec::new(ObjectiveKind::Kapur, &h);
            let t = decode_position(&raw);
            let v = kapur_fitness(&spec, &t);
            prop_assert!(v >= 0.0);
            prop_assert!(v <= (LEVELS as f64).ln() * (t.len() + 1) as f64);
        }

        #[test]
        fn duplicate_threshold_changes_nothing(h in arb_histogram(), raw in proptest::collection::vec(0u8..=255, 1..5), pick in 0usize..5) {
            for kind in [ObjectiveKind::Otsu, ObjectiveKind::Kapur] {
                let spec = ObjectiveSpec::new(kind, &h);
                let t = ThresholdVector::new(raw.clone());
                let mut dup = raw.clone();
                dup.push(raw[pick % raw.len()]);
                let td = ThresholdVector::new(dup);
                prop_assert_eq!(spec.fitness(&t), spec.fitness(&td));
            }
        }
    }
}
