//! Procedural square grayscale images whose class is the stripe
//! orientation: class `k` of `N` uses angle `k·180°/N`. Period, phase,
//! contrast and noise vary per image; every image draws from its own
//! ChaCha stream, so output is independent of the thread count.

use std::fs;
use std::path::Path;

use image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

use super::manifest::{DatasetManifest, ManifestEntry, Split};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    /// Total image count; classes are assigned round-robin.
    pub count: usize,
    pub min_size: u32,
    pub max_size: u32,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 1 {
            return Err(invalid("at least one class is required"));
        }
        if self.min_size < 1 || self.min_size > self.max_size {
            return Err(invalid(format!(
                "bad size range {}..={}",
                self.min_size, self.max_size
            )));
        }
        Ok(())
    }
}

pub fn class_name(k: usize) -> String {
    format!("class{k}")
}

fn render(spec: &SynthSpec, index: usize, label: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64 + 1);
    let side = rng.gen_range(spec.min_size..=spec.max_size);
    let angle = std::f64::consts::PI * label as f64 / spec.classes as f64;
    let period = rng.gen_range(6.0..12.0);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let contrast = rng.gen_range(0.25..0.45);
    let (c, s) = (angle.cos(), angle.sin());
    GrayImage::from_fn(side, side, |x, y| {
        let u = x as f64 * c + y as f64 * s;
        let v = 0.5
            + contrast * (std::f64::consts::TAU * u / period + phase).sin()
            + rng.gen_range(-0.05..0.05);
        image::Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8])
    })
}

/// Writes `images/<id>.png` under `out_dir` plus `manifest.csv`, with all
/// entries in the train split.
pub fn synth_dataset(spec: &SynthSpec, out_dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    let images = out_dir.join("images");
    fs::create_dir_all(&images)?;
    let entries = (0..spec.count)
        .into_par_iter()
        .map(|i| {
            let label = i % spec.classes;
            let img = render(spec, i, label);
            let id = format!("img{i:05}");
            let rel = Path::new("images").join(format!("{id}.png"));
            img.save(out_dir.join(&rel))?;
            Ok(ManifestEntry {
                id,
                path: rel,
                label: class_name(label),
                height: img.height(),
                width: img.width(),
                split: Split::Train,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::new(entries)?;
    manifest.save(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
