//! Figure rendering: colormap tables embedded in the source for bit-stable
//! output, PNG writing, and the standard panel layouts (Vs images,
//! dispersion images with the velocity axis vertical, heatmap overlays,
//! signed attribution maps, side-by-side comparisons).

use std::path::Path;

use crate::dispersion::DispersionImage;
use crate::grid::Grid;
use crate::Result;

/// Piecewise-linear colormap over fixed RGB stops.
fn sample_stops(stops: &[[u8; 3]], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let i = (t.floor() as usize).min(stops.len() - 2);
    let f = t - i as f64;
    let mut out = [0u8; 3];
    for ch in 0..3 {
        let a = stops[i][ch] as f64;
        let b = stops[i + 1][ch] as f64;
        out[ch] = (a + (b - a) * f).round() as u8;
    }
    out
}

/// Cool-to-warm map for power and heatmap panels.
pub fn thermal(t: f64) -> [u8; 3] {
    const STOPS: [[u8; 3]; 6] = [
        [13, 8, 135],
        [84, 2, 163],
        [156, 23, 158],
        [216, 70, 121],
        [249, 140, 69],
        [240, 249, 33],
    ];
    sample_stops(&STOPS, t)
}

/// Signed diverging map: blue for negative, white at zero, red for positive.
/// Input in [-1, 1].
pub fn diverging(t: f64) -> [u8; 3] {
    const STOPS: [[u8; 3]; 3] = [[33, 102, 172], [247, 247, 247], [178, 24, 43]];
    sample_stops(&STOPS, (t.clamp(-1.0, 1.0) + 1.0) / 2.0)
}

pub fn write_png_rgb(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    assert_eq!(pixels.len(), width * height * 3);
    let file = std::fs::File::create(path)?;
    let mut encoder = png::Encoder::new(std::io::BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| crate::Error::Internal(format!("png: {e}")))?;
    writer
        .write_image_data(pixels)
        .map_err(|e| crate::Error::Internal(format!("png: {e}")))?;
    Ok(())
}

fn normalized(value: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Pixel-replicated colormapped image of a grid.
pub fn grid_to_rgb(g: &Grid<f64>, lo: f64, hi: f64, map: impl Fn(f64) -> [u8; 3], scale: usize) -> (usize, usize, Vec<u8>) {
    let width = g.cols() * scale;
    let height = g.rows() * scale;
    let mut pixels = vec![0u8; width * height * 3];
    for r in 0..height {
        for c in 0..width {
            let rgb = map(normalized(g.get(r / scale, c / scale), lo, hi));
            let off = (r * width + c) * 3;
            pixels[off..off + 3].copy_from_slice(&rgb);
        }
    }
    (width, height, pixels)
}

/// Vs image with the thermal map over its own range.
pub fn save_vs_image(g: &Grid<f64>, path: impl AsRef<Path>, scale: usize) -> Result<()> {
    let (w, h, px) = grid_to_rgb(g, g.min(), g.max(), thermal, scale);
    write_png_rgb(path, w, h, &px)
}

/// Dispersion image with the velocity axis vertical (fast at the top) and
/// frequency horizontal.
pub fn save_dispersion_image(img: &DispersionImage, path: impl AsRef<Path>, scale: usize) -> Result<()> {
    let p = &img.power;
    let flipped = Grid::from_fn(p.rows(), p.cols(), |r, c| p.get(p.rows() - 1 - r, c));
    let (w, h, px) = grid_to_rgb(&flipped, 0.0, 1.0, thermal, scale);
    write_png_rgb(path, w, h, &px)
}

/// Heatmap panel; optionally alpha-composited over the grayscale input image.
pub fn save_heatmap(
    heat: &Grid<f64>,
    over_input: Option<&DispersionImage>,
    alpha: f64,
    path: impl AsRef<Path>,
    scale: usize,
) -> Result<()> {
    let flip = |g: &Grid<f64>| Grid::from_fn(g.rows(), g.cols(), |r, c| g.get(g.rows() - 1 - r, c));
    let heat = flip(heat);
    let (w, h, mut px) = grid_to_rgb(&heat, 0.0, 1.0, thermal, scale);
    if let Some(img) = over_input {
        let base = flip(&img.power);
        for r in 0..h {
            for c in 0..w {
                let gray = 255.0 * normalized(base.get(r / scale, c / scale), 0.0, 1.0);
                let off = (r * w + c) * 3;
                for ch in 0..3 {
                    let v = px[off + ch] as f64;
                    px[off + ch] = (alpha * v + (1.0 - alpha) * gray).round() as u8;
                }
            }
        }
    }
    write_png_rgb(path, w, h, &px)
}

/// Signed attribution map on the diverging colormap, symmetric about zero.
pub fn save_attribution(map: &Grid<f64>, path: impl AsRef<Path>, scale: usize) -> Result<()> {
    let peak = map.data().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let flipped = Grid::from_fn(map.rows(), map.cols(), |r, c| map.get(map.rows() - 1 - r, c));
    let width = flipped.cols() * scale;
    let height = flipped.rows() * scale;
    let mut px = vec![0u8; width * height * 3];
    for r in 0..height {
        for c in 0..width {
            let v = if peak > 0.0 {
                flipped.get(r / scale, c / scale) / peak
            } else {
                0.0
            };
            let rgb = diverging(v);
            let off = (r * width + c) * 3;
            px[off..off + 3].copy_from_slice(&rgb);
        }
    }
    write_png_rgb(path, width, height, &px)
}

/// Truth and prediction side by side with a shared color scale.
pub fn save_side_by_side(truth: &Grid<f64>, pred: &Grid<f64>, path: impl AsRef<Path>, scale: usize) -> Result<()> {
    assert_eq!(truth.rows(), pred.rows());
    let lo = truth.min().min(pred.min());
    let hi = truth.max().max(pred.max());
    let gap = 2 * scale;
    let width = (truth.cols() + pred.cols()) * scale + gap;
    let height = truth.rows() * scale;
    let mut px = vec![255u8; width * height * 3];
    let blit = |g: &Grid<f64>, x0: usize, px: &mut Vec<u8>| {
        for r in 0..g.rows() * scale {
            for c in 0..g.cols() * scale {
                let rgb = thermal(normalized(g.get(r / scale, c / scale), lo, hi));
                let off = (r * width + x0 + c) * 3;
                px[off..off + 3].copy_from_slice(&rgb);
            }
        }
    };
    blit(truth, 0, &mut px);
    blit(pred, truth.cols() * scale + gap, &mut px);
    write_png_rgb(path, width, height, &px)
}
