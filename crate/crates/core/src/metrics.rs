//! Segmentation quality and run-stability metrics.

use thiserror::Error;

use crate::image_io::GrayImage;
use crate::segmenter::SegmentedImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    /// `f64::INFINITY` for a perfect reconstruction.
    pub psnr_db: f64,
    pub uniformity: f64,
    pub misclassification_pct: f64,
    pub fitness: f64,
}

impl MetricReport {
    pub fn compute(
        original: &GrayImage,
        seg: &SegmentedImage,
        fitness: f64,
    ) -> Result<Self, MetricsError> {
        let mse = mse(original, &seg.reconstructed)?;
        let uniformity = uniformity(seg, original, seg.thresholds.len());
        Ok(Self {
            mse,
            psnr_db: psnr(mse),
            uniformity,
            misclassification_pct: misclassification_error(uniformity),
            fitness,
        })
    }
}

pub fn mse(original: &GrayImage, reconstructed: &GrayImage) -> Result<f64, MetricsError> {
    if original.width() != reconstructed.width() || original.height() != reconstructed.height() {
        return Err(MetricsError::DimensionMismatch(
            original.width(),
            original.height(),
            reconstructed.width(),
            reconstructed.height(),
        ));
    }
    let sum: u64 = original
        .pixels()
        .iter()
        .zip(reconstructed.pixels())
        .map(|(&a, &b)| {
            let d = a as i64 - b as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / original.len() as f64)
}

/// Peak signal-to-noise ratio in dB for 8-bit data.
pub fn psnr(mse_value: f64) -> f64 {
    if mse_value == 0.0 {
        return f64::INFINITY;
    }
    20.0 * (255.0 / mse_value.sqrt()).log10()
}

/// Region uniformity `1 - 2m * SS_within / (N (f_max - f_min)^2)`, clamped to `[0, 1]`.
pub fn uniformity(seg: &SegmentedImage, original: &GrayImage, m: usize) -> f64 {
    let px = original.pixels();
    let (lo, hi) = px
        .iter()
        .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return 1.0;
    }
    let within: f64 = px
        .iter()
        .zip(&seg.labels)
        .map(|(&f, &l)| {
            let d = f as f64 - seg.class_means[l as usize];
            d * d
        })
        .sum();
    let range = (hi - lo) as f64;
    let u = 1.0 - 2.0 * m as f64 * within / (px.len() as f64 * range * range);
    u.clamp(0.0, 1.0)
}

/// Distance from perfect uniformity, in percent.
pub fn misclassification_error(u: f64) -> f64 {
    (1.0 - u) * 100.0
}

/// Population standard deviation of the per-run best fitnesses.
pub fn run_std(best_fitnesses: &[f64]) -> f64 {
    if best_fitnesses.is_empty() {
        return 0.0;
    }
    let n = best_fitnesses.len() as f64;
    let mean = best_fitnesses.iter().sum::<f64>() / n;
    let var = best_fitnesses
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / n;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ThresholdVector;
    use crate::segmenter::segment;
    use proptest::prelude::*;

    fn four_px() -> GrayImage {
        GrayImage::new(2, 2, vec![0, 85, 170, 255]).unwrap()
    }

    #[test]
    fn mse_cases() {
        let a = four_px();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let zeros = GrayImage::filled(4, 4, 0).unwrap();
        let full = GrayImage::filled(4, 4, 255).unwrap();
        assert_eq!(mse(&zeros, &full).unwrap(), 65025.0);
        let rec = GrayImage::new(2, 2, vec![43, 43, 170, 255]).unwrap();
        assert_eq!(mse(&a, &rec).unwrap(), 903.25);
        assert!(mse(&a, &zeros).is_err());
    }

    #[test]
    fn psnr_cases() {
        assert_eq!(psnr(65025.0), 0.0);
        assert!((psnr(1.0) - 48.1308).abs() < 1e-4);
        assert_eq!(psnr(0.0), f64::INFINITY);
    }

    #[test]
    fn uniformity_cases() {
        let constant = GrayImage::filled(5, 5, 9).unwrap();
        let seg = segment(&constant, &ThresholdVector::new(vec![100]));
        assert_eq!(uniformity(&seg, &constant, 1), 1.0);

        let img = four_px();
        let seg = segment(&img, &ThresholdVector::new(vec![1, 86, 171]));
        assert_eq!(uniformity(&seg, &img, 3), 1.0);

        let seg = segment(&img, &ThresholdVector::new(vec![100, 200]));
        let u = uniformity(&seg, &img, 2);
        assert!((u - (1.0 - 14450.0 / 260100.0)).abs() < 1e-15);
        assert!((u - 0.94444).abs() < 1e-5);
        assert!((misclassification_error(u) - 5.556).abs() < 1e-3);
    }

    #[test]
    fn me_cases() {
        assert_eq!(misclassification_error(1.0), 0.0);
        assert_eq!(misclassification_error(0.0), 100.0);
    }

    #[test]
    fn std_cases() {
        assert_eq!(run_std(&[4.0; 50]), 0.0);
        assert_eq!(run_std(&[1.0, 3.0]), 1.0);
    }

    proptest! {
        #[test]
        fn psnr_decreasing(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            prop_assume!(a < b);
            prop_assert!(psnr(a) > psnr(b));
        }

        #[test]
        fn std_shift_invariant(xs in proptest::collection::vec(-1e3f64..1e3, 1..60), c in -1e3f64..1e3) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            prop_assert!((run_std(&xs) - run_std(&shifted)).abs() < 1e-8);
        }

        #[test]
        fn me_in_range(pixels in proptest::collection::vec(any::<u8>(), 2..100),
                       raw in proptest::collection::vec(any::<u8>(), 1..6)) {
            let img = GrayImage::new(pixels.len() as u32, 1, pixels).unwrap();
            let t = ThresholdVector::new(raw);
            let seg = segment(&img, &t);
            let me = misclassification_error(uniformity(&seg, &img, t.len()));
            prop_assert!((0.0..=100.0).contains(&me));
        }

        #[test]
        fn uniformity_ignores_label_names(pixels in proptest::collection::vec(any::<u8>(), 2..100),
                                          raw in proptest::collection::vec(any::<u8>(), 1..5)) {
            let img = GrayImage::new(pixels.len() as u32, 1, pixels).unwrap();
            let t = ThresholdVector::new(raw);
            let seg = segment(&img, &t);
            let k = seg.num_classes() as u8;
            let mut relabeled = seg.clone();
            relabeled.labels = seg.labels.iter().map(|&l| k - 1 - l).collect();
            relabeled.class_means.reverse();
            prop_assert_eq!(uniformity(&seg, &img, t.len()), uniformity(&relabeled, &img, t.len()));
        }
    }
}
