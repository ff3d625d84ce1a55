//! Grayscale test images in [0, 1]. By default they are synthetic scenes
//! (shaded background, overlapping flat and striped shapes, mild blur and
//! noise) that have the piecewise-smooth structure of natural images.
//! `TASKDICT_IMAGES` may name a manifest of PGM files to use instead.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use taskdict::taskdict_core::data::Image;
use taskdict::{manifest, pgm};

pub const SIDE: usize = 256;

enum Shape {
    Disc { ci: f64, cj: f64, radius: f64 },
    Rect { ci: f64, cj: f64, hi: f64, hj: f64, angle: f64 },
    HalfPlane { ci: f64, cj: f64, angle: f64 },
}

impl Shape {
    fn contains(&self, i: f64, j: f64) -> bool {
        match *self {
            Shape::Disc { ci, cj, radius } => (i - ci).powi(2) + (j - cj).powi(2) <= radius * radius,
            Shape::Rect { ci, cj, hi, hj, angle } => {
                let (s, c) = angle.sin_cos();
                let (di, dj) = (i - ci, j - cj);
                (c * di + s * dj).abs() <= hi && (-s * di + c * dj).abs() <= hj
            }
            Shape::HalfPlane { ci, cj, angle } => {
                let (s, c) = angle.sin_cos();
                c * (i - ci) + s * (j - cj) >= 0.0
            }
        }
    }
}

fn box_blur(pixels: &[f64], side: usize) -> Vec<f64> {
    let mut out = vec![0.0; pixels.len()];
    for i in 0..side {
        for j in 0..side {
            let (mut sum, mut n) = (0.0, 0.0);
            for a in i.saturating_sub(1)..(i + 2).min(side) {
                for b in j.saturating_sub(1)..(j + 2).min(side) {
                    sum += pixels[a * side + b];
                    n += 1.0;
                }
            }
            out[i * side + j] = sum / n;
        }
    }
    out
}

pub fn synthetic(seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = SIDE as f64;
    let (base, gi, gj) = (rng.random_range(0.3..0.7), rng.random_range(-0.3..0.3) / n, rng.random_range(-0.3..0.3) / n);
    let mut px: Vec<f64> = (0..SIDE * SIDE).map(|k| base + gi * (k / SIDE) as f64 + gj * (k % SIDE) as f64).collect();
    for _ in 0..rng.random_range(35..50) {
        let (ci, cj) = (rng.random_range(0.0..n), rng.random_range(0.0..n));
        let shape = match rng.random_range(0..5) {
            0 | 1 => Shape::Disc { ci, cj, radius: rng.random_range(4.0..30.0) },
            2 | 3 => Shape::Rect {
                ci,
                cj,
                hi: rng.random_range(3.0..35.0),
                hj: rng.random_range(3.0..35.0),
                angle: rng.random_range(0.0..std::f64::consts::PI),
            },
            _ => Shape::HalfPlane { ci, cj, angle: rng.random_range(0.0..std::f64::consts::TAU) },
        };
        let level = rng.random_range(0.05..0.95);
        let striped = rng.random_bool(0.25);
        let (freq, theta) = (rng.random_range(0.3..1.2), rng.random_range(0.0..std::f64::consts::PI));
        let (s, c) = theta.sin_cos();
        let (si, sj) = (rng.random_range(-0.5..0.5) / n, rng.random_range(-0.5..0.5) / n);
        for (k, px) in px.iter_mut().enumerate() {
            let (i, j) = ((k / SIDE) as f64, (k % SIDE) as f64);
            if shape.contains(i, j) {
                *px = level + si * (i - ci) + sj * (j - cj);
                if striped {
                    *px += 0.2 * (freq * (c * i + s * j)).sin();
                }
            }
        }
    }
    let mut px = box_blur(&px, SIDE);
    for v in &mut px {
        *v = (*v + 0.01 * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0);
    }
    Image::new(SIDE, SIDE, px).unwrap()
}

/// `count` images: the manifest's first `count` when `TASKDICT_IMAGES` is
/// set, synthetic scenes otherwise. The second value describes the source.
pub fn load(count: usize) -> (Vec<Image>, String) {
    match std::env::var_os("TASKDICT_IMAGES") {
        Some(path) => {
            let entries = manifest::read(Path::new(&path)).expect("readable TASKDICT_IMAGES manifest");
            assert!(entries.len() >= count, "TASKDICT_IMAGES lists {} images, need {count}", entries.len());
            let images = entries[..count].iter().map(|e| pgm::read(&e.path).expect("readable PGM")).collect();
            (images, format!("images from {}", Path::new(&path).display()))
        }
        None => ((0..count as u64).map(|s| synthetic(1000 + s)).collect(), "synthetic images".into()),
    }
}
