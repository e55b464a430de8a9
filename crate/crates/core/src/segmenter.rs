//! Applying a threshold vector to an image.

use crate::image_io::{GrayImage, LEVELS};
use crate::objectives::ThresholdVector;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedImage {
    /// Row-major class index in `0..=m` for each pixel.
    pub labels: Vec<u8>,
    /// Each pixel replaced by the rounded mean of its class.
    pub reconstructed: GrayImage,
    pub thresholds: ThresholdVector,
    /// Mean intensity per class; 0 for empty classes.
    pub class_means: Vec<f64>,
    pub class_sizes: Vec<u64>,
}

impl SegmentedImage {
    pub fn num_classes(&self) -> usize {
        self.class_means.len()
    }
}

/// Lookup from intensity to class: value `v` belongs to class `j` when
/// `t_j <= v < t_{j+1}`, so a value equal to a threshold goes to the upper class.
fn label_table(t: &ThresholdVector) -> [u8; LEVELS] {
    let mut table = [0u8; LEVELS];
    for (v, slot) in table.iter_mut().enumerate() {
        *slot = t
            .as_slice()
            .iter()
            .take_while(|&&th| th as usize <= v)
            .count() as u8;
    }
    table
}

pub fn segment(img: &GrayImage, t: &ThresholdVector) -> SegmentedImage {
    let table = label_table(t);
    let classes = t.len() + 1;
    let mut sums = vec![0u64; classes];
    let mut sizes = vec![0u64; classes];
    let labels: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&px| {
            let label = table[px as usize];
            sums[label as usize] += px as u64;
            sizes[label as usize] += 1;
            label
        })
        .collect();
    let class_means: Vec<f64> = sums
        .iter()
        .zip(&sizes)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s as f64 / n as f64 })
        .collect();
    let representative: Vec<u8> = class_means.iter().map(|m| m.round() as u8).collect();
    let pixels = labels.iter().map(|&l| representative[l as usize]).collect();
    let reconstructed = GrayImage::new(img.width(), img.height(), pixels)
        .expect("reconstruction keeps the source dimensions");
    SegmentedImage {
        labels,
        reconstructed,
        thresholds: t.clone(),
        class_means,
        class_sizes: sizes,
    }
}
