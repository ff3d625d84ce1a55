//! Signals, patches, image helpers and the permuted cycling sampler.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::losses::Label;
use crate::Vector;

/// A labeled training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: Label,
    pub x: Vector,
}

impl Sample {
    pub fn new(label: Label, x: Vector) -> Self {
        Self { label, x }
    }
}

/// Grayscale image, row-major, intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(shape_err("image pixels", height * width, pixels.len()));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            pixels: vec![value; height * width],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchConfig {
    pub side: usize,
    pub stride: usize,
    pub zero_mean: bool,
    pub unit_norm: bool,
}

impl PatchConfig {
    /// Raw patches, no normalization.
    pub fn raw(side: usize, stride: usize) -> Self {
        Self {
            side,
            stride,
            zero_mean: false,
            unit_norm: false,
        }
    }

    pub fn normalized(side: usize, stride: usize) -> Self {
        Self {
            side,
            stride,
            zero_mean: true,
            unit_norm: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.side * self.side
    }
}

/// A patch and the position of its top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub row: usize,
    pub col: usize,
    pub values: Vector,
}

/// Sliding-window patches in row-major order of their corners. Each patch is
/// flattened row-major.
pub fn extract_patches(image: &Image, cfg: &PatchConfig) -> Result<Vec<Patch>> {
    if cfg.side == 0 || cfg.stride == 0 {
        return Err(Error::InvalidParameter("patch side and stride must be >= 1".into()));
    }
    let l = cfg.side;
    if image.height < l || image.width < l {
        return Err(Error::ImageTooSmall {
            h: image.height,
            w: image.width,
            side: l,
        });
    }
    let mut out = Vec::with_capacity(((image.height - l) / cfg.stride + 1) * ((image.width - l) / cfg.stride + 1));
    for row in (0..=image.height - l).step_by(cfg.stride) {
        for col in (0..=image.width - l).step_by(cfg.stride) {
            let mut v = Vector::zeros(l * l);
            for i in 0..l {
                let start = (row + i) * image.width + col;
                v.as_mut_slice()[i * l..(i + 1) * l].copy_from_slice(&image.pixels[start..start + l]);
            }
            if cfg.zero_mean {
                let mean = v.mean();
                v.add_scalar_mut(-mean);
            }
            if cfg.unit_norm {
                let n = v.norm();
                if n > NORM_FLOOR {
                    v /= n;
                } else {
                    v.fill(0.0);
                }
            }
            out.push(Patch { row, col, values: v });
        }
    }
    Ok(out)
}

const NORM_FLOOR: f64 = 1e-10;

/// Subtracts the mean and scales to unit norm; near-constant vectors map to 0.
pub fn normalize(x: &Vector) -> Vector {
    if x.is_empty() {
        return x.clone();
    }
    let centered = x.add_scalar(-x.mean());
    let n = centered.norm();
    if n > NORM_FLOOR {
        centered / n
    } else {
        Vector::zeros(x.len())
    }
}

/// Original image followed by its one-pixel shifts up, down, left and right,
/// zero-padded.
pub fn shift_augment(image: &Image) -> Result<[Image; 5]> {
    if image.height < 3 || image.width < 3 {
        return Err(Error::ImageTooSmall {
            h: image.height,
            w: image.width,
            side: 3,
        });
    }
    let shift = |dr: isize, dc: isize| {
        let mut out = Image::filled(image.height, image.width, 0.0);
        for r in 0..image.height {
            for c in 0..image.width {
                let (sr, sc) = (r as isize + dr, c as isize + dc);
                if sr >= 0 && sc >= 0 && (sr as usize) < image.height && (sc as usize) < image.width {
                    out.set(r, c, image.get(sr as usize, sc as usize));
                }
            }
        }
        out
    };
    Ok([image.clone(), shift(1, 0), shift(-1, 0), shift(0, 1), shift(0, -1)])
}

/// Raster-order Floyd-Steinberg error diffusion with threshold 0.5.
/// Input values outside `[0, 1]` are clamped first.
pub fn floyd_steinberg(image: &Image) -> Image {
    let (h, w) = (image.height, image.width);
    let mut clamped = 0usize;
    let mut buf: Vec<f64> = image
        .pixels
        .iter()
        .map(|&v| {
            let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            if c != v {
                clamped += 1;
            }
            c
        })
        .collect();
    if clamped > 0 {
        log::warn!("floyd_steinberg: clamped {clamped} pixels into [0, 1]");
    }
    for r in 0..h {
        for c in 0..w {
            let old = buf[r * w + c];
            let new = if old >= 0.5 { 1.0 } else { 0.0 };
            buf[r * w + c] = new;
            let err = old - new;
            if c + 1 < w {
                buf[r * w + c + 1] += err * 7.0 / 16.0;
            }
            if r + 1 < h {
                if c > 0 {
                    buf[(r + 1) * w + c - 1] += err * 3.0 / 16.0;
                }
                buf[(r + 1) * w + c] += err * 5.0 / 16.0;
                if c + 1 < w {
                    buf[(r + 1) * w + c + 1] += err / 16.0;
                }
            }
        }
    }
    Image {
        height: h,
        width: w,
        pixels: buf,
    }
}

/// Averages overlapping patch estimates back into an image.
pub fn reconstruct_image(patches: &[Patch], side: usize, height: usize, width: usize) -> Result<Image> {
    let mut sum = vec![0.0; height * width];
    let mut count = vec![0u32; height * width];
    for p in patches {
        if p.values.len() != side * side {
            return Err(shape_err("patch estimate", side * side, p.values.len()));
        }
        if p.row + side > height || p.col + side > width {
            return Err(shape_err("patch position", "inside the image", alloc::format!("({}, {})", p.row, p.col)));
        }
        for i in 0..side {
            for j in 0..side {
                let k = (p.row + i) * width + p.col + j;
                sum[k] += p.values[i * side + j];
                count[k] += 1;
            }
        }
    }
    if let Some(k) = count.iter().position(|&c| c == 0) {
        return Err(Error::Uncovered {
            row: k / width,
            col: k % width,
        });
    }
    let pixels = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    Image::new(height, width, pixels)
}

/// Cycles over a dataset in a fresh random order each epoch.
#[derive(Debug, Clone)]
pub struct SampleStream<'a, T> {
    data: &'a [T],
    rng: ChaCha8Rng,
    order: Vec<usize>,
    pos: usize,
    epoch: u64,
}

impl<'a, T> SampleStream<'a, T> {
    pub fn new(data: &'a [T], seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        Ok(Self {
            data,
            rng,
            order,
            pos: 0,
            epoch: 0,
        })
    }

    pub fn next_sample(&mut self) -> &'a T {
        if self.pos == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
            self.epoch += 1;
        }
        let item = &self.data[self.order[self.pos]];
        self.pos += 1;
        item
    }

    /// Completed epochs.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &'a [T] {
        self.data
    }
}

impl<'a, T> Iterator for SampleStream<'a, T> {
    type Item = &'a T;

    fn next(&mut self) -> Option<&'a T> {
        Some(self.next_sample())
    }
}
