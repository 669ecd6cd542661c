//! Time-coherent window stacks.
//!
//! Each image (after optional clamp resizing) is cut into `M` windows of
//! `(h, γh)` pixels whose per-image overlap comes from
//! [`geometry::overlap_square`]. The windows are ordered so consecutive
//! frames always share pixels, which lets the stack be read as a short video.

mod resize;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{self, GeometrySpec};
use crate::tensor::Tensor;

pub use resize::{bilinear_resize, clamp_resize, load_image, save_gray_png, SmallMode};

const ASPECT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlidingPattern {
    HorizontalSerpentine,
    VerticalSerpentine,
    SpiralInward,
}

impl SlidingPattern {
    pub const ALL: [SlidingPattern; 3] = [
        SlidingPattern::HorizontalSerpentine,
        SlidingPattern::VerticalSerpentine,
        SlidingPattern::SpiralInward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SlidingPattern::HorizontalSerpentine => "horizontal",
            SlidingPattern::VerticalSerpentine => "vertical",
            SlidingPattern::SpiralInward => "spiral",
        }
    }

    /// Visiting order over the `side × side` grid as `(grid_row, grid_col)`.
    pub fn grid_order(self, side: usize) -> Vec<(usize, usize)> {
        let serpentine = |major: usize, minor: usize| {
            if major.is_multiple_of(2) {
                minor
            } else {
                side - 1 - minor
            }
        };
        match self {
            SlidingPattern::HorizontalSerpentine => (0..side * side)
                .map(|n| (n / side, serpentine(n / side, n % side)))
                .collect(),
            SlidingPattern::VerticalSerpentine => (0..side * side)
                .map(|n| (serpentine(n / side, n % side), n / side))
                .collect(),
            SlidingPattern::SpiralInward => spiral(side),
        }
    }
}

/// Clockwise inward spiral starting at the top-left cell.
fn spiral(side: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(side * side);
    let (mut top, mut left) = (0isize, 0isize);
    let (mut bottom, mut right) = (side as isize - 1, side as isize - 1);
    while top <= bottom && left <= right {
        for c in left..=right {
            out.push((top, c));
        }
        for r in top + 1..=bottom {
            out.push((r, right));
        }
        if top < bottom {
            for c in (left..right).rev() {
                out.push((bottom, c));
            }
        }
        if left < right {
            for r in (top + 1..bottom).rev() {
                out.push((r, left));
            }
        }
        top += 1;
        left += 1;
        bottom -= 1;
        right -= 1;
    }
    out.into_iter()
        .map(|(r, c)| (r as usize, c as usize))
        .collect()
}

impl fmt::Display for SlidingPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SlidingPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" | "h" => Ok(SlidingPattern::HorizontalSerpentine),
            "vertical" | "v" => Ok(SlidingPattern::VerticalSerpentine),
            "spiral" | "s" => Ok(SlidingPattern::SpiralInward),
            _ => Err(invalid(format!("unknown sliding pattern '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImageMeta {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageMeta {
    pub fn of(image: &Tensor<f32>) -> Result<Self> {
        match *image.shape() {
            [channels, height, width] => Ok(ImageMeta {
                height,
                width,
                channels,
            }),
            _ => Err(invalid(format!(
                "image tensor must be (C, H, W), got {:?}",
                image.shape()
            ))),
        }
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.width as f64 / self.height as f64
    }

    pub fn check_aspect(&self, gamma: f64) -> Result<()> {
        let beta = self.aspect_ratio();
        if (beta - gamma).abs() > ASPECT_TOLERANCE * gamma {
            return Err(Error::Aspect(format!(
                "image {}x{} has aspect ratio {beta}, window aspect ratio is {gamma}",
                self.height, self.width
            )));
        }
        Ok(())
    }
}

/// Real-valued offsets `k·step` for `k = 0..side`.
fn exact_offsets(side: usize, step: f64) -> Vec<f64> {
    (0..side).map(|k| k as f64 * step).collect()
}

/// Integer offsets: round half-up, clamp to `[0, extent − window]`, and pin
/// the last one flush with the far edge.
fn pixel_offsets(side: usize, step: f64, extent: usize, window: usize) -> Vec<usize> {
    let far = extent - window;
    let mut out: Vec<usize> = exact_offsets(side, step)
        .into_iter()
        .map(|x| ((x + 0.5).floor().max(0.0) as usize).min(far))
        .collect();
    if let Some(last) = out.last_mut() {
        *last = far;
    }
    out
}

fn check_alpha(big_h: usize, h: usize, m: u32, alpha: f64) -> Result<()> {
    let expected = geometry::overlap_square(big_h as f64, h as f64, m)?;
    if (expected - alpha).abs() > geometry::TOLERANCE {
        return Err(invalid(format!(
            "overlap {alpha} is inconsistent with H = {big_h}, h = {h}, M = {m} (expected {expected})"
        )));
    }
    Ok(())
}

fn window_width(h: usize, gamma: f64) -> usize {
    (gamma * h as f64).round() as usize
}

/// Window origins `(row, col)` in visiting order.
pub fn window_origins(
    big_h: usize,
    big_w: usize,
    h: usize,
    gamma: f64,
    m: u32,
    alpha: f64,
    pattern: SlidingPattern,
) -> Result<Vec<(usize, usize)>> {
    check_alpha(big_h, h, m, alpha)?;
    let w = window_width(h, gamma);
    if w == 0 || w > big_w {
        return Err(invalid(format!(
            "window width {w} does not fit image width {big_w}"
        )));
    }
    let side = geometry::grid_side(m)? as usize;
    let rows = pixel_offsets(side, (1.0 - alpha) * h as f64, big_h, h);
    let cols = pixel_offsets(side, (1.0 - alpha) * gamma * h as f64, big_w, w);
    Ok(pattern
        .grid_order(side)
        .into_iter()
        .map(|(r, c)| (rows[r], cols[c]))
        .collect())
}

/// Unrounded origins, as real coordinates, in visiting order.
pub fn exact_window_origins(
    h: f64,
    gamma: f64,
    m: u32,
    alpha: f64,
    pattern: SlidingPattern,
) -> Result<Vec<(f64, f64)>> {
    let side = geometry::grid_side(m)? as usize;
    let rows = exact_offsets(side, (1.0 - alpha) * h);
    let cols = exact_offsets(side, (1.0 - alpha) * gamma * h);
    Ok(pattern
        .grid_order(side)
        .into_iter()
        .map(|(r, c)| (rows[r], cols[c]))
        .collect())
}

/// Intersection area over window area for every consecutive pair of
/// origins.
pub fn coherence_report(origins: &[(f64, f64)], h: f64, w: f64) -> Vec<f64> {
    origins
        .windows(2)
        .map(|p| {
            let dy = (h - (p[0].0 - p[1].0).abs()).max(0.0);
            let dx = (w - (p[0].1 - p[1].1).abs()).max(0.0);
            (dy * dx) / (h * w)
        })
        .collect()
}

/// Fixed-size `(M, C, h, w)` stack cut from one image.
#[derive(Clone, Debug)]
pub struct WindowStack {
    pub id: String,
    pub tensor: Tensor<f32>,
    /// Image size the windows were cut from (after clamp resizing).
    pub height: usize,
    pub width: usize,
    pub alpha: f64,
    pub pattern: SlidingPattern,
    pub origins: Vec<(usize, usize)>,
}

impl WindowStack {
    /// `id, H, W, alpha, pattern`
    pub fn log_line(&self) -> String {
        format!(
            "{}, {}, {}, {}, {}",
            self.id, self.height, self.width, self.alpha, self.pattern
        )
    }
}

/// Copies a `(C, h, w)` crop at `origin` out of a `(C, H, W)` image.
pub fn crop(
    image: &Tensor<f32>,
    origin: (usize, usize),
    h: usize,
    w: usize,
) -> Result<Tensor<f32>> {
    let meta = ImageMeta::of(image)?;
    let (r0, c0) = origin;
    if r0 + h > meta.height || c0 + w > meta.width {
        return Err(Error::Geometry(format!(
            "crop {h}x{w} at {origin:?} leaves image {}x{}",
            meta.height, meta.width
        )));
    }
    let mut data = Vec::with_capacity(meta.channels * h * w);
    for c in 0..meta.channels {
        let plane = &image.data()[c * meta.height * meta.width..];
        for r in r0..r0 + h {
            data.extend_from_slice(&plane[r * meta.width + c0..][..w]);
        }
    }
    Tensor::new(vec![meta.channels, h, w], data)
}

/// Cuts the window stack from an image that already lies in the clamp range.
pub fn extract_stack(
    id: &str,
    image: &Tensor<f32>,
    spec: &GeometrySpec,
    pattern: SlidingPattern,
) -> Result<WindowStack> {
    spec.validate()?;
    let meta = ImageMeta::of(image)?;
    meta.check_aspect(spec.gamma)?;
    let h = spec.h as usize;
    let w = window_width(h, spec.gamma);
    let alpha = geometry::overlap_square(meta.height as f64, h as f64, spec.m)
        .map_err(|e| Error::Geometry(format!("image {id}: {e}")))?;
    let origins = window_origins(
        meta.height,
        meta.width,
        h,
        spec.gamma,
        spec.m,
        alpha,
        pattern,
    )
    .map_err(|e| Error::Geometry(format!("image {id}: {e}")))?;
    let frames = origins
        .iter()
        .map(|&o| crop(image, o, h, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowStack {
        id: id.to_string(),
        tensor: Tensor::stack(&frames)?,
        height: meta.height,
        width: meta.width,
        alpha,
        pattern,
        origins,
    })
}

/// Clamp-resizes and then extracts the stack.
pub fn transform_image(
    id: &str,
    image: &Tensor<f32>,
    spec: &GeometrySpec,
    pattern: SlidingPattern,
    small_mode: SmallMode,
) -> Result<WindowStack> {
    ImageMeta::of(image)?.check_aspect(spec.gamma)?;
    let resized = clamp_resize(
        image,
        spec.h_min_clamp as usize,
        spec.h_max_clamp as usize,
        small_mode,
    )?;
    extract_stack(id, &resized, spec, pattern)
}

/// Loads and transforms every file; results keep the input order regardless
/// of how the work is scheduled.
pub fn transform_files(
    files: &[(String, std::path::PathBuf)],
    spec: &GeometrySpec,
    pattern: SlidingPattern,
    small_mode: SmallMode,
) -> Vec<Result<WindowStack>> {
    files
        .par_iter()
        .map(|(id, path)| {
            let image = load_image(Path::new(path))?;
            transform_image(id, &image, spec, pattern, small_mode)
        })
        .collect()
}
