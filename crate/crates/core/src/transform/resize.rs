use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, GrayImage};

use super::ImageMeta;
use crate::error::{invalid, Error, Result};
use crate::tensor::Tensor;

/// How images shorter than the lower clamp are brought up to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmallMode {
    /// Zero-pad symmetrically around the original pixels.
    Pad,
    /// Bilinear magnification.
    Magnify,
}

impl FromStr for SmallMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pad" => Ok(SmallMode::Pad),
            "magnify" => Ok(SmallMode::Magnify),
            _ => Err(invalid(format!("unknown small-image mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for SmallMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SmallMode::Pad => "pad",
            SmallMode::Magnify => "magnify",
        })
    }
}

/// Bilinear resampling of a `(C, H, W)` tensor with half-pixel centres.
pub fn bilinear_resize(image: &Tensor<f32>, new_h: usize, new_w: usize) -> Result<Tensor<f32>> {
    let m = ImageMeta::of(image)?;
    if new_h == 0 || new_w == 0 {
        return Err(invalid("resize target must be non-empty"));
    }
    let axis = |src: usize, dst: usize| -> Vec<(usize, usize, f32)> {
        let scale = src as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
                let i0 = x.floor() as usize;
                let i1 = (i0 + 1).min(src - 1);
                (i0, i1, (x - i0 as f64) as f32)
            })
            .collect()
    };
    let rows = axis(m.height, new_h);
    let cols = axis(m.width, new_w);
    let mut out = Vec::with_capacity(m.channels * new_h * new_w);
    for c in 0..m.channels {
        let plane = &image.data()[c * m.height * m.width..(c + 1) * m.height * m.width];
        for &(r0, r1, fy) in &rows {
            for &(c0, c1, fx) in &cols {
                let top = plane[r0 * m.width + c0] * (1.0 - fx) + plane[r0 * m.width + c1] * fx;
                let bot = plane[r1 * m.width + c0] * (1.0 - fx) + plane[r1 * m.width + c1] * fx;
                out.push(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    Tensor::new(vec![m.channels, new_h, new_w], out)
}

fn zero_pad(image: &Tensor<f32>, new_h: usize, new_w: usize) -> Result<Tensor<f32>> {
    let m = ImageMeta::of(image)?;
    let (top, left) = ((new_h - m.height) / 2, (new_w - m.width) / 2);
    let mut out = vec![0.0f32; m.channels * new_h * new_w];
    for c in 0..m.channels {
        for r in 0..m.height {
            let src = &image.data()[(c * m.height + r) * m.width..][..m.width];
            let dst = ((c * new_h) + top + r) * new_w + left;
            out[dst..dst + m.width].copy_from_slice(src);
        }
    }
    Tensor::new(vec![m.channels, new_h, new_w], out)
}

/// Shrinks images taller than `h_max` to `h_max`, brings images shorter than
/// `h_min` up to `h_min` per `mode`, and returns the rest untouched. Widths
/// follow the image aspect ratio.
pub fn clamp_resize(
    image: &Tensor<f32>,
    h_min: usize,
    h_max: usize,
    mode: SmallMode,
) -> Result<Tensor<f32>> {
    if h_min == 0 || h_min > h_max {
        return Err(invalid(format!("bad clamp range [{h_min}, {h_max}]")));
    }
    let m = ImageMeta::of(image)?;
    let width_for = |h: usize| ((m.aspect_ratio() * h as f64).round() as usize).max(1);
    if m.height > h_max {
        bilinear_resize(image, h_max, width_for(h_max))
    } else if m.height < h_min {
        let w = width_for(h_min).max(m.width);
        match mode {
            SmallMode::Pad => zero_pad(image, h_min, w),
            SmallMode::Magnify => bilinear_resize(image, h_min, w),
        }
    } else {
        Ok(image.clone())
    }
}

/// Loads an 8-bit grayscale or RGB(A) image as a `(C, H, W)` tensor with
/// samples in `[0, 1]`. Alpha is dropped.
pub fn load_image(path: &Path) -> Result<Tensor<f32>> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, raw) = match img {
        DynamicImage::ImageLuma8(g) => (1, g.into_raw()),
        DynamicImage::ImageLumaA8(_) => (1, img.to_luma8().into_raw()),
        other => (3, other.to_rgb8().into_raw()),
    };
    let mut data = vec![0.0f32; channels * h * w];
    for (i, &v) in raw.iter().enumerate() {
        let (pix, c) = (i / channels, i % channels);
        data[c * h * w + pix] = v as f32 / 255.0;
    }
    Tensor::new(vec![channels, h, w], data)
}

/// Writes a single-channel `(1, H, W)` tensor in `[0, 1]` as an 8-bit PNG.
pub fn save_gray_png(image: &Tensor<f32>, path: &Path) -> Result<()> {
    let m = ImageMeta::of(image)?;
    if m.channels != 1 {
        return Err(invalid("save_gray_png expects one channel"));
    }
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let img = GrayImage::from_raw(m.width as u32, m.height as u32, bytes)
        .ok_or_else(|| invalid("image buffer size mismatch"))?;
    img.save(path)?;
    Ok(())
}
