use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use ndpnn_core::dataset::{resolve, DatasetManifest, ManifestEntry, Split};
use ndpnn_core::geometry::GeometrySpec;
use ndpnn_core::tensor::save;
use ndpnn_core::transform::{transform_files, SlidingPattern, SmallMode};
use ndpnn_core::Error;

use crate::common::{check_overlaps, create_out, must_exist, path_arg, write, RunLog};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

/// Images transformed together before their stacks are written out.
const CHUNK: usize = 32;

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Directory of PNG images, or a manifest CSV.
    pub input: Option<PathBuf>,
    /// Window height in pixels.
    #[arg(long)]
    pub h: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    /// Window aspect ratio (width / height).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "alpha-min")]
    pub alpha_min: Option<f64>,
    #[arg(long = "alpha-max")]
    pub alpha_max: Option<f64>,
    /// Height clamp floor (defaults to h).
    #[arg(long)]
    pub hmin: Option<u32>,
    /// Height clamp ceiling (defaults to sqrt(m)·h).
    #[arg(long)]
    pub hmax: Option<u32>,
    /// horizontal | vertical | spiral
    #[arg(long)]
    pub pattern: Option<SlidingPattern>,
    /// How images below the clamp floor are enlarged: pad | magnify
    #[arg(long = "small-mode")]
    pub small_mode: Option<SmallMode>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Job {
    entry: ManifestEntry,
    source: PathBuf,
}

fn jobs(input: &Path) -> Result<Vec<Job>, Error> {
    if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .collect();
        files.sort();
        Ok(files
            .into_iter()
            .map(|p| {
                let id = p
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                Job {
                    entry: ManifestEntry {
                        path: PathBuf::new(),
                        label: "unlabeled".into(),
                        height: 0,
                        width: 0,
                        split: Split::Train,
                        id,
                    },
                    source: p,
                }
            })
            .collect())
    } else {
        let m = DatasetManifest::load(input)?;
        Ok(m.entries
            .iter()
            .map(|e| Job {
                source: resolve(input, e),
                entry: e.clone(),
            })
            .collect())
    }
}

pub fn run(a: TransformArgs, file: ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let input = PathBuf::from(r.required::<String>("input", path_arg(a.input)));
    let h: u32 = r.required("h", a.h);
    let m = r.value("m", a.m, 9);
    let gamma = r.value("gamma", a.gamma, 1.0);
    let alpha_min = r.value("alpha-min", a.alpha_min, 0.0);
    let alpha_max = r.value("alpha-max", a.alpha_max, 0.9);
    let side = (m as f64).sqrt().round() as u32;
    let hmin = r.value("hmin", a.hmin, h);
    let hmax = r.value("hmax", a.hmax, side.max(1) * h);
    let pattern = r.value("pattern", a.pattern, SlidingPattern::HorizontalSerpentine);
    let small_mode = r.value("small-mode", a.small_mode, SmallMode::Pad);
    let out = PathBuf::from(r.required::<String>("out", path_arg(a.out)));
    check_overlaps(&mut r, m, alpha_min, alpha_max);
    let spec = GeometrySpec {
        m,
        alpha_min,
        alpha_max,
        h,
        gamma,
        h_min_clamp: hmin,
        h_max_clamp: hmax,
    };
    if !r.has_errors() {
        if let Err(e) = spec.validate() {
            r.error(format!("geometry: {e}"));
        }
    }
    let resolved = r.finish()?;
    must_exist(&[&input])?;

    let jobs = jobs(&input)?;
    create_out(&out)?;
    let mut log = RunLog::new("transform", &resolved);
    let mut lines = String::new();
    let mut entries = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(CHUNK) {
        let files: Vec<(String, PathBuf)> = chunk
            .iter()
            .map(|j| (j.entry.id.clone(), j.source.clone()))
            .collect();
        for (job, res) in chunk
            .iter()
            .zip(transform_files(&files, &spec, pattern, small_mode))
        {
            let stack = res?;
            let name = format!("{}.ndt", job.entry.id);
            save(&stack.tensor, out.join(&name))?;
            let _ = writeln!(lines, "{}", stack.log_line());
            if stack.alpha < alpha_min - 1e-9 || stack.alpha > alpha_max + 1e-9 {
                log.note(format!(
                    "warning: {} has overlap {} outside the configured range",
                    stack.id, stack.alpha
                ));
            }
            let mut entry = job.entry.clone();
            entry.path = PathBuf::from(name);
            if entry.height == 0 {
                entry.height = stack.height as u32;
                entry.width = stack.width as u32;
            }
            entries.push(entry);
        }
    }
    write(&out.join("transform.log"), &lines)?;
    DatasetManifest::new(entries)?.save(&out.join("manifest.csv"))?;
    log.note(format!("stacks = {}", jobs.len()));
    log.write(&out)?;
    println!("wrote {} window stacks to {}", jobs.len(), out.display());
    Ok(())
}
