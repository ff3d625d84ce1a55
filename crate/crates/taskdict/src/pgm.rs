//! Binary PGM (`P5`) images with 8-bit samples.

use std::fs;
use std::path::Path;

use taskdict_core::data::Image;

use crate::error::{CliError, Result};

/// Parses a `P5` image; samples are scaled to `[0, 1]` by `maxval`.
pub fn decode(bytes: &[u8]) -> std::result::Result<Image, String> {
    let mut pos = 0;
    let mut fields = [0usize; 3];
    let magic = token(bytes, &mut pos).ok_or("missing magic number")?;
    if magic != b"P5" {
        return Err(format!("expected P5, found {:?}", String::from_utf8_lossy(magic)));
    }
    for (i, name) in ["width", "height", "maxval"].iter().enumerate() {
        let t = token(bytes, &mut pos).ok_or_else(|| format!("missing {name}"))?;
        fields[i] = std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad {name} {:?}", String::from_utf8_lossy(t)))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format!("empty image {width}x{height}"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("maxval {maxval} unsupported (8-bit only)"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width * height;
    let raster = bytes.get(pos..pos + n).ok_or_else(|| format!("truncated raster: need {n} bytes"))?;
    let pixels = raster.iter().map(|&b| f64::from(b) / maxval as f64).collect();
    Image::new(height, width, pixels).map_err(|e| e.to_string())
}

fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &bytes[start..*pos])
}

/// Encodes with maxval 255; intensities are clamped to `[0, 1]` and rounded.
pub fn encode(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(image.pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn read(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|m| CliError::format(path, m))
}

pub fn write(path: &Path, image: &Image) -> Result<()> {
    fs::write(path, encode(image)).map_err(|e| CliError::io(path, e))
}
