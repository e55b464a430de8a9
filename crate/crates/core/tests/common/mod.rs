//! Deterministic synthetic 256x256 grayscale test images.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use swarmthresh::{GrayImage, Histogram, LEVELS};

pub const SIZE: u32 = 256;

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn render(seed: u64, noise: f64, f: impl Fn(f64, f64) -> f64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).unwrap();
    let mut px = Vec::with_capacity((SIZE * SIZE) as usize);
    for y in 0..SIZE {
        for x in 0..SIZE {
            let u = x as f64 / (SIZE - 1) as f64 * 2.0 - 1.0;
            let v = y as f64 / (SIZE - 1) as f64 * 2.0 - 1.0;
            px.push(quantize(f(u, v) + normal.sample(&mut rng)));
        }
    }
    GrayImage::new(SIZE, SIZE, px).unwrap()
}

fn inside(u: f64, v: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> bool {
    let a = (u - cx) / rx;
    let b = (v - cy) / ry;
    a * a + b * b <= 1.0
}

/// Axial-slice-like phantom: background, skull, gray and white matter, ventricles.
pub fn head_phantom() -> GrayImage {
    render(1, 7.0, |u, v| {
        if !inside(u, v, 0.0, 0.0, 0.85, 0.95) {
            12.0
        } else if !inside(u, v, 0.0, 0.0, 0.78, 0.88) {
            215.0
        } else if inside(u, v, -0.12, -0.05, 0.07, 0.22) || inside(u, v, 0.12, -0.05, 0.07, 0.22) {
            55.0
        } else if inside(u, v, 0.0, 0.0, 0.55, 0.68) {
            150.0
        } else {
            105.0
        }
    })
}

/// Smooth blobs over a linear ramp.
pub fn blobs() -> GrayImage {
    render(2, 5.0, |u, v| {
        let g = |cx: f64, cy: f64, s: f64, a: f64| {
            a * (-((u - cx).powi(2) + (v - cy).powi(2)) / (2.0 * s * s)).exp()
        };
        30.0 + 25.0 * (u + 1.0)
            + g(-0.4, -0.4, 0.2, 120.0)
            + g(0.45, -0.3, 0.15, 170.0)
            + g(0.0, 0.45, 0.25, 90.0)
    })
}

/// Concentric rings of four tissue-like intensities.
pub fn rings() -> GrayImage {
    render(3, 9.0, |u, v| {
        let r = (u * u + v * v).sqrt();
        match (r * 6.0) as usize {
            0 => 230.0,
            1 | 4 => 170.0,
            2 | 5 => 90.0,
            3 => 130.0,
            _ => 25.0,
        }
    })
}

/// Interfering sinusoids, a continuous histogram without sharp modes.
pub fn waves() -> GrayImage {
    render(4, 4.0, |u, v| {
        128.0 + 55.0 * (5.0 * u).sin() + 40.0 * (7.0 * v + 1.0).cos() + 20.0 * (9.0 * (u + v)).sin()
    })
}

/// Pixels drawn independently from a five-component Gaussian mixture.
pub fn mixture() -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let comps = [
        (0.30, 30.0, 10.0),
        (0.20, 80.0, 12.0),
        (0.25, 125.0, 9.0),
        (0.15, 180.0, 14.0),
        (0.10, 225.0, 8.0),
    ];
    let px = (0..SIZE * SIZE)
        .map(|_| {
            let mut pick: f64 = rng.gen();
            let mut chosen = comps[comps.len() - 1];
            for c in comps {
                if pick < c.0 {
                    chosen = c;
                    break;
                }
                pick -= c.0;
            }
            quantize(Normal::new(chosen.1, chosen.2).unwrap().sample(&mut rng))
        })
        .collect();
    GrayImage::new(SIZE, SIZE, px).unwrap()
}

pub fn all_images() -> Vec<(&'static str, GrayImage)> {
    vec![
        ("head_phantom", head_phantom()),
        ("blobs", blobs()),
        ("rings", rings()),
        ("waves", waves()),
        ("mixture", mixture()),
    ]
}

pub fn two_peak() -> Histogram {
    let mut counts = [0u64; LEVELS];
    counts[50] = 100;
    counts[200] = 100;
    Histogram::from_counts(counts).unwrap()
}

pub fn uniform() -> Histogram {
    Histogram::from_counts([1; LEVELS]).unwrap()
}

/// Random histogram; roughly a third of the bins are empty.
pub fn random_histogram(rng: &mut impl Rng) -> Histogram {
    let mut counts = [0u64; LEVELS];
    for c in counts.iter_mut() {
        if rng.gen_bool(0.66) {
            *c = rng.gen_range(1..1000);
        }
    }
    counts[rng.gen_range(0..LEVELS)] += 1;
    Histogram::from_counts(counts).unwrap()
}
