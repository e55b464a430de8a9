//! Exact optimal thresholds by enumeration and by dynamic programming.
//!
//! Both solvers maximize over strictly increasing vectors in `[0, 255]^m`,
//! accumulate class scores left to right exactly like
//! [`ObjectiveSpec::fitness`], and break ties towards the lexicographically
//! smallest vector. That makes their results bit-identical to each other and
//! to a direct evaluation of the returned thresholds.

use thiserror::Error;

use crate::image_io::LEVELS;
use crate::objectives::{ObjectiveSpec, ThresholdVector};

/// Largest `m` the enumerating solver accepts.
pub const EXHAUSTIVE_MAX_M: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("exhaustive search over m = {0} thresholds is too expensive (max {EXHAUSTIVE_MAX_M})")]
    TooExpensive(usize),
    #[error("number of thresholds must be in 1..={max}, got {got}", max = LEVELS - 1)]
    InvalidLevels { got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub thresholds: ThresholdVector,
    pub fitness: f64,
    /// Interval-score lookups performed during the search.
    pub evaluations: u64,
}

/// Precomputed scores of every class `[a, b)`, `0 <= a <= b <= 256`.
struct IntervalTable {
    scores: Vec<f64>,
}

impl IntervalTable {
    const STRIDE: usize = LEVELS + 1;

    fn new(spec: &ObjectiveSpec) -> Self {
        let mut scores = vec![0.0; Self::STRIDE * Self::STRIDE];
        for a in 0..=LEVELS {
            for b in a..=LEVELS {
                scores[a * Self::STRIDE + b] = spec.interval_score(a, b);
            }
        }
        Self { scores }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> f64 {
        self.scores[a * Self::STRIDE + b]
    }
}

fn check_levels(m: usize) -> Result<(), OracleError> {
    if m == 0 || m >= LEVELS {
        return Err(OracleError::InvalidLevels { got: m });
    }
    Ok(())
}

/// Enumerates every strictly increasing threshold vector (`m <= 3`).
pub fn exhaustive_search(spec: &ObjectiveSpec, m: usize) -> Result<OracleResult, OracleError> {
    check_levels(m)?;
    if m > EXHAUSTIVE_MAX_M {
        return Err(OracleError::TooExpensive(m));
    }
    let table = IntervalTable::new(spec);
    let mut best = f64::NEG_INFINITY;
    let mut best_t: Vec<usize> = Vec::new();
    let mut evaluations = 0u64;
    let mut consider = |value: f64, t: &[usize]| {
        evaluations += 1;
        if value > best {
            best = value;
            best_t = t.to_vec();
        }
    };
    match m {
        1 => {
            for t1 in 0..LEVELS {
                consider(table.get(0, t1) + table.get(t1, LEVELS), &[t1]);
            }
        }
        2 => {
            for t1 in 0..LEVELS {
                let s1 = table.get(0, t1);
                for t2 in t1 + 1..LEVELS {
                    let s2 = s1 + table.get(t1, t2);
                    consider(s2 + table.get(t2, LEVELS), &[t1, t2]);
                }
            }
        }
        3 => {
            for t1 in 0..LEVELS {
                let s1 = table.get(0, t1);
                for t2 in t1 + 1..LEVELS {
                    let s2 = s1 + table.get(t1, t2);
                    for t3 in t2 + 1..LEVELS {
                        let s3 = s2 + table.get(t2, t3);
                        consider(s3 + table.get(t3, LEVELS), &[t1, t2, t3]);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(OracleResult {
        thresholds: ThresholdVector::new(best_t.into_iter().map(|t| t as u8).collect()),
        fitness: best,
        evaluations,
    })
}

/// Exact optimum for any `1 <= m <= 255` in `O(m * 256^2)`.
///
/// `layer[t]` holds the best score of the classes left of a `k`-th threshold
/// placed at `t`, together with the lexicographically smallest prefix that
/// attains it.
pub fn dp_search(spec: &ObjectiveSpec, m: usize) -> Result<OracleResult, OracleError> {
    check_levels(m)?;
    let table = IntervalTable::new(spec);
    let mut evaluations = 0u64;

    // k = 1: a single class [0, t).
    let mut layer: Vec<Option<(f64, Vec<u8>)>> = (0..LEVELS)
        .map(|t| {
            evaluations += 1;
            Some((table.get(0, t), vec![t as u8]))
        })
        .collect();

    for k in 2..=m {
        let mut next: Vec<Option<(f64, Vec<u8>)>> = vec![None; LEVELS];
        // the k-th threshold is at least k - 1
        for (t, slot) in next.iter_mut().enumerate().skip(k - 1) {
            let mut best: Option<(f64, &Vec<u8>)> = None;
            for (prev, entry) in layer.iter().enumerate().take(t) {
                let Some((score, prefix)) = entry else {
                    continue;
                };
                evaluations += 1;
                let value = score + table.get(prev, t);
                let better = match best {
                    None => true,
                    Some((b, bp)) => value > b || (value == b && prefix < bp),
                };
                if better {
                    best = Some((value, prefix));
                }
            }
            if let Some((value, prefix)) = best {
                let mut v = Vec::with_capacity(k);
                v.extend_from_slice(prefix);
                v.push(t as u8);
                *slot = Some((value, v));
            }
        }
        layer = next;
    }

    let mut best: Option<(f64, &Vec<u8>)> = None;
    for (t, entry) in layer.iter().enumerate() {
        let Some((score, prefix)) = entry else {
            continue;
        };
        evaluations += 1;
        let value = score + table.get(t, LEVELS);
        let better = match best {
            None => true,
            Some((b, bp)) => value > b || (value == b && prefix < bp),
        };
        if better {
            best = Some((value, prefix));
        }
    }
    let (fitness, thresholds) = best.expect("at least one feasible threshold vector");
    Ok(OracleResult {
        thresholds: ThresholdVector::new(thresholds.clone()),
        fitness,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::Histogram;
    use crate::objectives::ObjectiveKind;

    fn spec_from(counts: [u64; LEVELS], kind: ObjectiveKind) -> ObjectiveSpec {
        ObjectiveSpec::new(kind, &Histogram::from_counts(counts).unwrap())
    }

    fn two_peak(kind: ObjectiveKind) -> ObjectiveSpec {
        let mut counts = [0u64; LEVELS];
        counts[50] = 100;
        counts[200] = 100;
        spec_from(counts, kind)
    }

    #[test]
    fn two_peak_otsu_m1() {
        let spec = two_peak(ObjectiveKind::Otsu);
        let ex = exhaustive_search(&spec, 1).unwrap();
        assert_eq!(ex.fitness, 5625.0);
        assert_eq!(ex.thresholds.as_slice(), &[51]);
        assert_eq!(ex.evaluations, 256);
        let dp = dp_search(&spec, 1).unwrap();
        assert_eq!(dp.fitness, ex.fitness);
        assert_eq!(dp.thresholds, ex.thresholds);
    }

    #[test]
    fn uniform_kapur_m1() {
        let spec = spec_from([1; LEVELS], ObjectiveKind::Kapur);
        let ex = exhaustive_search(&spec, 1).unwrap();
        assert_eq!(ex.thresholds.as_slice(), &[128]);
        assert!((ex.fitness - 2.0 * 128f64.ln()).abs() < 1e-9);
        let dp = dp_search(&spec, 1).unwrap();
        assert_eq!(dp.thresholds, ex.thresholds);
        assert_eq!(dp.fitness, ex.fitness);
    }

    #[test]
    fn single_bin_ties_to_zero() {
        let mut counts = [0u64; LEVELS];
        counts[100] = 9;
        for kind in [ObjectiveKind::Otsu, ObjectiveKind::Kapur] {
            let spec = spec_from(counts, kind);
            let ex = exhaustive_search(&spec, 1).unwrap();
            assert_eq!(ex.fitness, 0.0);
            assert_eq!(ex.thresholds.as_slice(), &[0]);
            assert_eq!(
                dp_search(&spec, 1).unwrap(),
                OracleResult {
                    evaluations: dp_search(&spec, 1).unwrap().evaluations,
                    ..ex
                }
            );
        }
    }

    #[test]
    fn full_decomposition_recovers_total_variance() {
        let spec = spec_from([1; LEVELS], ObjectiveKind::Otsu);
        let dp = dp_search(&spec, 255).unwrap();
        let expected: Vec<u8> = (1..=255).collect();
        assert_eq!(dp.thresholds.as_slice(), expected.as_slice());
        let mu = spec.mu_total();
        let total_var: f64 = (0..LEVELS)
            .map(|i| (i as f64 - mu).powi(2) / LEVELS as f64)
            .sum();
        assert!((dp.fitness - total_var).abs() < 1e-9 * total_var);
    }

    #[test]
    fn guard_rails() {
        let spec = two_peak(ObjectiveKind::Otsu);
        assert_eq!(
            exhaustive_search(&spec, 4).unwrap_err(),
            OracleError::TooExpensive(4)
        );
        assert!(matches!(
            dp_search(&spec, 0),
            Err(OracleError::InvalidLevels { got: 0 })
        ));
        assert!(dp_search(&spec, 256).is_err());
    }

    #[test]
    fn dp_fitness_recomputes_exactly() {
        let mut counts = [0u64; LEVELS];
        for (i, c) in counts.iter_mut().enumerate() {
            *c = ((i * 37 + 11) % 23) as u64;
        }
        for kind in [ObjectiveKind::Otsu, ObjectiveKind::Kapur] {
            let spec = spec_from(counts, kind);
            let mut last = f64::NEG_INFINITY;
            for m in 1..=6 {
                let r = dp_search(&spec, m).unwrap();
                assert_eq!(spec.fitness(&r.thresholds), r.fitness);
                assert!(r.fitness >= last);
                last = r.fitness;
            }
        }
    }
}
