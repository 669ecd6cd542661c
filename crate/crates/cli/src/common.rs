//! Helpers shared by the subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndpnn_core::dataset::{resolve, DatasetManifest, Split};
use ndpnn_core::engine::Sample;
use ndpnn_core::tensor::load;
use ndpnn_core::Error;

use crate::CliError;

/// Collects the resolved configuration and notes for `run.log`.
pub struct RunLog {
    text: String,
}

impl RunLog {
    pub fn new(command: &str, resolved: &[(String, String)]) -> Self {
        let mut text = format!("ndpnn {}\ncommand = {command}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in resolved {
            let _ = writeln!(text, "{k} = {v}");
        }
        RunLog { text }
    }

    pub fn note(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        fs::write(out.join("run.log"), &self.text).map_err(Error::from)?;
        Ok(())
    }
}

pub fn create_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(Error::from)?;
    Ok(())
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

/// The argument must name an existing file or directory.
/// Inputs are checked before the output directory is created, so a missing
/// one leaves nothing behind.
pub fn must_exist(paths: &[&Path]) -> Result<(), Error> {
    match paths.iter().find(|p| !p.exists()) {
        Some(p) => Err(Error::MissingArtifact(p.display().to_string())),
        None => Ok(()),
    }
}

/// Paths pass through the resolver as strings.
pub fn path_arg(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}

/// Network input for a stored tensor: window stacks `(M, C, h, w)` become
/// `(C, M, h, w)`; other ranks are used as stored.
pub fn network_input(t: ndpnn_core::Tensor<f32>) -> Result<ndpnn_core::Tensor<f32>, Error> {
    if t.rank() == 4 {
        t.swap_outer_axes()
    } else {
        Ok(t)
    }
}

/// Loads the tensors of one split, labelled by position in `classes`.
pub fn load_samples(
    manifest_path: &Path,
    manifest: &DatasetManifest,
    split: Split,
    classes: &[String],
) -> Result<Vec<Sample<f32>>, Error> {
    use rayon::prelude::*;
    let entries: Vec<_> = manifest.split(split).collect();
    entries
        .par_iter()
        .map(|e| {
            let label = classes.iter().position(|c| *c == e.label).ok_or_else(|| {
                Error::Evaluation(format!("label '{}' unknown to the model", e.label))
            })?;
            let path = resolve(manifest_path, e);
            if !path.exists() {
                return Err(Error::MissingArtifact(path.display().to_string()));
            }
            Ok(Sample {
                input: network_input(load(&path)?)?,
                label,
            })
        })
        .collect()
}

pub const CLASSES_FILE: &str = "classes.txt";

pub fn save_classes(model_dir: &Path, classes: &[String]) -> Result<(), CliError> {
    write(&model_dir.join(CLASSES_FILE), &(classes.join("\n") + "\n"))
}

pub fn load_classes(model_dir: &Path) -> Result<Vec<String>, Error> {
    let p = model_dir.join(CLASSES_FILE);
    if !p.exists() {
        return Err(Error::MissingArtifact(p.display().to_string()));
    }
    Ok(fs::read_to_string(p)?
        .lines()
        .map(str::to_string)
        .filter(|l| !l.is_empty())
        .collect())
}

/// Geometry checks shared by `plan` and `transform`.
pub fn check_overlaps(r: &mut crate::config::Resolver, m: u32, alpha_min: f64, alpha_max: f64) {
    r.check(
        ndpnn_core::geometry::grid_side(m).is_ok_and(|s| s >= 2),
        || format!("m: {m} is not a perfect square of at least 4"),
    );
    r.check((0.0..1.0).contains(&alpha_min), || {
        format!("alpha-min: {alpha_min} outside [0, 1)")
    });
    r.check((0.0..1.0).contains(&alpha_max), || {
        format!("alpha-max: {alpha_max} outside [0, 1)")
    });
    r.check(alpha_min <= alpha_max, || {
        format!("alpha-min ({alpha_min}) must not exceed alpha-max ({alpha_max})")
    });
}

/// Comma- or `x`-separated list of values, e.g. `4,8` or `1x2x2`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct List<T>(pub Vec<T>);

impl<T: std::str::FromStr> std::str::FromStr for List<T>
where
    T::Err: std::fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(List(Vec::new()));
        }
        s.split([',', 'x'])
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("'{p}': {e}")))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

impl<T: std::fmt::Display> std::fmt::Display for List<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(T::to_string).collect();
        f.write_str(&parts.join(","))
    }
}
