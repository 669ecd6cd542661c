use std::path::PathBuf;

use clap::Args;
use ndpnn_core::dataset::{DatasetManifest, Split};
use ndpnn_core::engine::train::accuracy;
use ndpnn_core::engine::{load_model, save_model};
use ndpnn_core::reduction::reduce_network;
use ndpnn_core::Error;

use crate::common::{
    create_out, load_classes, load_samples, must_exist, path_arg, save_classes, write, RunLog,
};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Trained model directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Manifest whose train split drives the bounds and the score.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Accepted drop in training accuracy relative to the unreduced model.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: ReduceArgs, file: ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let model_dir = PathBuf::from(r.required::<String>("model", path_arg(a.model)));
    let data = PathBuf::from(r.required::<String>("data", path_arg(a.data)));
    let tolerance = r.value("tolerance", a.tolerance, 0.0);
    let out = PathBuf::from(r.required::<String>("out", path_arg(a.out)));
    r.check(tolerance >= 0.0 && tolerance.is_finite(), || {
        format!("tolerance: {tolerance} must be >= 0")
    });
    let resolved = r.finish()?;
    must_exist(&[&model_dir, &data])?;

    let model = load_model(&model_dir)?;
    let classes = load_classes(&model_dir)?;
    let manifest = DatasetManifest::load(&data)?;
    let train_set = load_samples(&data, &manifest, Split::Train, &classes)?;
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("no training samples to reduce against".into()).into());
    }
    let baseline = accuracy(&model, &train_set)?;
    let threshold = baseline - tolerance;
    let inputs: Vec<_> = train_set.iter().map(|s| s.input.clone()).collect();
    let (reduced, plan) = reduce_network(&model, &inputs, |m| accuracy(m, &train_set), threshold)?;

    create_out(&out)?;
    let reduced_dir = out.join("model");
    save_model(&reduced, &reduced_dir)?;
    save_classes(&reduced_dir, &classes)?;
    let report = plan.report();
    write(&out.join("reduction.txt"), &report)?;
    let mut log = RunLog::new("reduce", &resolved);
    log.note(format!("baseline = {baseline:.6}"));
    log.note(format!("threshold = {threshold:.6}"));
    let bounds: Vec<String> = plan.bounds.iter().map(|b| format!("{b:.6}")).collect();
    log.note(format!("bounds = {}", bounds.join(",")));
    log.write(&out)?;
    print!("{report}");
    Ok(())
}
