//! Orthonormal Haar (Daubechies-1) transforms in one and two dimensions,
//! plus a minimal PGM codec for grayscale images.
//!
//! 1-D layout is the usual multiresolution one: [a_L | d_L | d_{L-1} | ... |
//! d_1], where level 1 details come from the finest scale. 2-D applies the
//! one-level transform to the rows and then the columns of the current
//! approximation block per level, leaving the coarse block in the top-left
//! corner. Both transforms are orthonormal, so they preserve energy and
//! compose cleanly with measurement ensembles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Transform parameters: the number of decomposition levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub levels: usize,
}

impl WaveletSpec {
    pub fn new(levels: usize) -> Self {
        WaveletSpec { levels }
    }

    /// Checks that a signal length supports `levels` halvings.
    fn check_len(&self, n: usize, what: &str) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Parameter("wavelet levels must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::Parameter(format!("{what} must be nonempty")));
        }
        let block = 1usize << self.levels;
        if !n.is_multiple_of(block) {
            return Err(Error::Parameter(format!(
                "{what} length {n} is not divisible by 2^levels = {block}"
            )));
        }
        Ok(())
    }
}

/// One analysis level over data[..len]: pairwise averages to the front,
/// differences to the back, both scaled by 1/sqrt(2).
fn analyze_level(data: &mut [f64], len: usize, scratch: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let a = data[2 * i];
        let b = data[2 * i + 1];
        scratch[i] = (a + b) * SQRT2_INV;
        scratch[half + i] = (a - b) * SQRT2_INV;
    }
    data[..len].copy_from_slice(&scratch[..len]);
}

/// One synthesis level: the inverse of `analyze_level`.
fn synthesize_level(data: &mut [f64], len: usize, scratch: &mut [f64]) {
    let half = len / 2;
    for i in 0..half {
        let a = data[i];
        let d = data[half + i];
        scratch[2 * i] = (a + d) * SQRT2_INV;
        scratch[2 * i + 1] = (a - d) * SQRT2_INV;
    }
    data[..len].copy_from_slice(&scratch[..len]);
}

/// Forward 1-D orthonormal Haar transform.
pub fn haar_forward_1d(x: &[f64], spec: &WaveletSpec) -> Result<Vec<f64>> {
    spec.check_len(x.len(), "signal")?;
    let mut data = x.to_vec();
    let mut scratch = vec![0.0; x.len()];
    let mut len = x.len();
    for _ in 0..spec.levels {
        analyze_level(&mut data, len, &mut scratch);
        len /= 2;
    }
    Ok(data)
}

/// Inverse 1-D orthonormal Haar transform.
pub fn haar_inverse_1d(c: &[f64], spec: &WaveletSpec) -> Result<Vec<f64>> {
    spec.check_len(c.len(), "coefficient vector")?;
    let mut data = c.to_vec();
    let mut scratch = vec![0.0; c.len()];
    let mut len = c.len() >> (spec.levels - 1);
    for _ in 0..spec.levels {
        synthesize_level(&mut data, len, &mut scratch);
        len *= 2;
    }
    Ok(data)
}

/// A dense row-major 2-D array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{height}x{width} grid needs {} entries, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Grid {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Grid {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.width + c] = v;
    }
}

/// Forward 2-D Haar transform: per level, one 1-D analysis pass over each row
/// of the current approximation block, then over each of its columns.
pub fn haar_forward_2d(image: &Grid, spec: &WaveletSpec) -> Result<Grid> {
    spec.check_len(image.height, "image height")?;
    spec.check_len(image.width, "image width")?;
    let mut out = image.clone();
    let mut scratch = vec![0.0; out.height.max(out.width)];
    let mut buf = vec![0.0; out.height.max(out.width)];
    let (mut h, mut w) = (out.height, out.width);
    for _ in 0..spec.levels {
        for r in 0..h {
            let row = &mut out.data[r * out.width..r * out.width + w];
            analyze_level(row, w, &mut scratch);
        }
        for c in 0..w {
            for (r, slot) in buf.iter_mut().enumerate().take(h) {
                *slot = out.get(r, c);
            }
            analyze_level(&mut buf, h, &mut scratch);
            for (r, &v) in buf.iter().enumerate().take(h) {
                out.set(r, c, v);
            }
        }
        h /= 2;
        w /= 2;
    }
    Ok(out)
}

/// Inverse 2-D Haar transform: exact reverse of `haar_forward_2d` (columns
/// then rows per level, coarsest block first).
pub fn haar_inverse_2d(coeffs: &Grid, spec: &WaveletSpec) -> Result<Grid> {
    spec.check_len(coeffs.height, "coefficient height")?;
    spec.check_len(coeffs.width, "coefficient width")?;
    let mut out = coeffs.clone();
    let mut scratch = vec![0.0; out.height.max(out.width)];
    let mut buf = vec![0.0; out.height.max(out.width)];
    for level in (0..spec.levels).rev() {
        let h = out.height >> level;
        let w = out.width >> level;
        for c in 0..w {
            for (r, slot) in buf.iter_mut().enumerate().take(h) {
                *slot = out.get(r, c);
            }
            synthesize_level(&mut buf, h, &mut scratch);
            for (r, &v) in buf.iter().enumerate().take(h) {
                out.set(r, c, v);
            }
        }
        for r in 0..h {
            let row = &mut out.data[r * out.width..r * out.width + w];
            synthesize_level(row, w, &mut scratch);
        }
    }
    Ok(out)
}

/// Parses an 8-bit PGM image (plain `P2` or raw `P5`) into a grid with
/// pixels mapped to [0, 1].
pub fn parse_pgm(bytes: &[u8]) -> Result<Grid> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)
        .ok_or_else(|| Error::Parameter("PGM data is empty".into()))?;
    let binary = match magic.as_slice() {
        b"P2" => false,
        b"P5" => true,
        _ => {
            return Err(Error::Parameter(
                "unsupported PGM magic (expected P2 or P5)".into(),
            ))
        }
    };
    let width = parse_header_int(bytes, &mut pos, "width")?;
    let height = parse_header_int(bytes, &mut pos, "height")?;
    let maxval = parse_header_int(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parameter(format!(
            "only 8-bit PGM supported (maxval {maxval})"
        )));
    }
    let count = width * height;
    let mut data = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        if bytes.len() < pos + count {
            return Err(Error::Parameter("PGM raster is truncated".into()));
        }
        data.extend(
            bytes[pos..pos + count]
                .iter()
                .map(|&b| b as f64 / maxval as f64),
        );
    } else {
        for _ in 0..count {
            let v = parse_header_int(bytes, &mut pos, "pixel")?;
            if v > maxval {
                return Err(Error::Parameter(format!(
                    "pixel value {v} exceeds maxval {maxval}"
                )));
            }
            data.push(v as f64 / maxval as f64);
        }
    }
    Grid::new(height, width, data)
}

/// Encodes a grid as plain (`P2`) 8-bit PGM; values are clamped to [0, 1]
/// and quantized to 0..=255, one image row per line.
pub fn encode_pgm(grid: &Grid) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n255\n", grid.width, grid.height);
    for r in 0..grid.height {
        let row: Vec<String> = (0..grid.width)
            .map(|c| {
                let v = (grid.get(r, c).clamp(0.0, 1.0) * 255.0).round() as u8;
                v.to_string()
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

/// Next whitespace-delimited token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
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
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(bytes[start..*pos].to_vec())
}

fn parse_header_int(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let token = next_token(bytes, pos)
        .ok_or_else(|| Error::Parameter(format!("PGM {what} is missing")))?;
    std::str::from_utf8(&token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parameter(format!("PGM {what} is not a valid integer")))
}
