use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use ndpnn_core::dataset::{DatasetManifest, Split};
use ndpnn_core::engine::train::confusion;
use ndpnn_core::engine::{evaluate_metrics, load_model};
use ndpnn_core::Error;

use crate::commands::report::metrics_text;
use crate::common::{create_out, load_classes, load_samples, must_exist, path_arg, write, RunLog};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

pub const CONFUSION_FILE: &str = "confusion.csv";
pub const TIMING_FILE: &str = "timing.txt";

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// train | test
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: EvalArgs, file: ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let model_dir = PathBuf::from(r.required::<String>("model", path_arg(a.model)));
    let data = PathBuf::from(r.required::<String>("data", path_arg(a.data)));
    let split = r.value("split", a.split, Split::Test);
    let out = PathBuf::from(r.required::<String>("out", path_arg(a.out)));
    let resolved = r.finish()?;
    must_exist(&[&model_dir, &data])?;

    let model = load_model(&model_dir)?;
    let classes = load_classes(&model_dir)?;
    let manifest = DatasetManifest::load(&data)?;
    let samples = load_samples(&data, &manifest, split, &classes)?;
    if samples.is_empty() {
        return Err(Error::Evaluation(format!("the {split} split is empty")).into());
    }
    let start = Instant::now();
    let cm = confusion(&model, &samples)?;
    let per_sample = start.elapsed().as_secs_f64() / samples.len() as f64;
    let metrics = evaluate_metrics(&cm)?;

    create_out(&out)?;
    write(&out.join(CONFUSION_FILE), &cm.to_csv(&classes))?;
    let text = metrics_text(&metrics, &classes);
    write(&out.join("metrics.txt"), &text)?;
    let mut timing = String::new();
    let _ = writeln!(timing, "samples = {}", samples.len());
    let _ = writeln!(timing, "mean_inference_seconds = {per_sample:.9}");
    write(&out.join(TIMING_FILE), &timing)?;
    RunLog::new("eval", &resolved).write(&out)?;
    print!("{text}");
    Ok(())
}
