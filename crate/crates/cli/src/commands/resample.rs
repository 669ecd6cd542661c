use std::path::PathBuf;

use clap::Args;
use ndpnn_core::dataset::{
    distribution_report, resolve, stratified_resplit, DatasetManifest, SizeBins,
};
use ndpnn_core::Error;

use crate::common::{create_out, must_exist, path_arg, write, RunLog};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

#[derive(Debug, Args)]
pub struct ResampleArgs {
    /// Input manifest CSV.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long = "train-ratio")]
    pub train_ratio: Option<f64>,
    /// Number of equal-width height bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Lower edge of the height bins (defaults to the smallest height).
    #[arg(long = "bin-min")]
    pub bin_min: Option<f64>,
    /// Upper edge of the height bins (defaults to the largest height).
    #[arg(long = "bin-max")]
    pub bin_max: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: ResampleArgs, file: ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let manifest_path = PathBuf::from(r.required::<String>("manifest", path_arg(a.manifest)));
    let ratio = r.value("train-ratio", a.train_ratio, 0.9);
    let bins = r.value("bins", a.bins, SizeBins::DEFAULT_COUNT);
    let bin_min = r.optional("bin-min", a.bin_min);
    let bin_max = r.optional("bin-max", a.bin_max);
    let seed = r.value("seed", a.seed, 0);
    let out = PathBuf::from(r.required::<String>("out", path_arg(a.out)));
    r.check(ratio > 0.0 && ratio < 1.0, || {
        format!("train-ratio: {ratio} not in (0, 1)")
    });
    r.check(bins >= 1, || "bins: must be positive".into());
    let resolved = r.finish()?;
    must_exist(&[&manifest_path])?;

    let manifest = DatasetManifest::load(&manifest_path)?;
    if manifest.is_empty() {
        return Err(Error::InvalidArgument("manifest is empty".into()).into());
    }
    let span = SizeBins::spanning(&manifest, bins)?;
    let bins = SizeBins::new(bin_min.unwrap_or(span.lo), bin_max.unwrap_or(span.hi), bins)
        .map_err(|e| CliError::Usage(vec![format!("bin-min/bin-max: {e}")]))?;
    let before = distribution_report(&manifest, &bins)?;
    let (mut split, warnings) = stratified_resplit(&manifest, ratio, &bins, seed)?;
    for e in &mut split.entries {
        e.path = std::path::absolute(resolve(&manifest_path, e)).map_err(Error::from)?;
    }
    let after = distribution_report(&split, &bins)?;

    create_out(&out)?;
    split.save(&out.join("manifest.csv"))?;
    write(&out.join("distribution_before.txt"), &before.to_text())?;
    write(&out.join("distribution_before.csv"), &before.to_csv())?;
    write(&out.join("distribution_after.txt"), &after.to_text())?;
    write(&out.join("distribution_after.csv"), &after.to_csv())?;
    let mut log = RunLog::new("resample", &resolved);
    for w in &warnings {
        log.note(format!("warning: {w}"));
    }
    log.write(&out)?;
    print!("{}", after.to_text());
    Ok(())
}
