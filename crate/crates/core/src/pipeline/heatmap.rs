//! Single-hue PNG rendering of a connectivity matrix.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;

/// Lightest colour (value 0).
const LIGHT: [f64; 3] = [247.0, 251.0, 255.0];
/// Darkest colour (largest |value|).
const DARK: [f64; 3] = [8.0, 48.0, 107.0];
/// Target image side in pixels; each cell is at least one pixel.
const TARGET_SIDE: usize = 512;

/// Pixels per matrix cell for a `p x p` matrix.
pub fn cell_size(p: usize) -> usize {
    (TARGET_SIDE / p.max(1)).clamp(1, 64)
}

/// Colour for `|v| / max`, interpolated linearly so that luminance falls
/// monotonically as the magnitude grows.
pub fn ramp(t: f64) -> [u8; 3] {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut out = [0u8; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        *slot = (LIGHT[c] + (DARK[c] - LIGHT[c]) * t).round() as u8;
    }
    out
}

/// RGB pixel buffer, row-major, with cell `(i, j)` at row block `i`.
pub fn heatmap_pixels(m: &SymMatrix) -> (usize, Vec<u8>) {
    let p = m.dim();
    let cell = cell_size(p);
    let side = p * cell;
    let max = m.as_array().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let colours: Vec<[u8; 3]> = m
        .as_array()
        .iter()
        .map(|v| {
            if max > 0.0 {
                ramp(v.abs() / max)
            } else {
                ramp(0.0)
            }
        })
        .collect();
    let mut buf = Vec::with_capacity(side * side * 3);
    for i in 0..p {
        let mut line = Vec::with_capacity(side * 3);
        for j in 0..p {
            for _ in 0..cell {
                line.extend_from_slice(&colours[i * p + j]);
            }
        }
        for _ in 0..cell {
            buf.extend_from_slice(&line);
        }
    }
    (side, buf)
}

/// PNG bytes for [`heatmap_pixels`]. Identical input gives identical bytes.
pub fn heatmap_png(m: &SymMatrix) -> Result<Vec<u8>> {
    let (side, pixels) = heatmap_pixels(m);
    let mut bytes = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut bytes, side as u32, side as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Png(e.to_string()))?;
        writer
            .write_image_data(&pixels)
            .map_err(|e| Error::Png(e.to_string()))?;
        writer.finish().map_err(|e| Error::Png(e.to_string()))?;
    }
    Ok(bytes)
}

pub fn render_heatmap(m: &SymMatrix, path: &Path) -> Result<()> {
    let bytes = heatmap_png(m)?;
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}
