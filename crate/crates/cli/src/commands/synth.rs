use std::path::PathBuf;

use clap::Args;
use ndpnn_core::dataset::{synth_dataset, SynthSpec};

use crate::common::{create_out, path_arg, RunLog};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    /// Total number of images.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long = "min-size")]
    pub min_size: Option<u32>,
    #[arg(long = "max-size")]
    pub max_size: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: SynthArgs, file: ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let classes = r.value("classes", a.classes, 2);
    let count = r.required("count", a.count);
    let min_size = r.required("min-size", a.min_size);
    let max_size = r.required("max-size", a.max_size);
    let seed = r.value("seed", a.seed, 0);
    let out: String = r.required("out", path_arg(a.out));
    r.check(classes >= 1, || "classes: must be positive".into());
    r.check(min_size >= 1 && min_size <= max_size, || {
        format!("min-size ({min_size}) and max-size ({max_size}) need 1 <= min-size <= max-size")
    });
    let resolved = r.finish()?;
    let out = PathBuf::from(out);
    let spec = SynthSpec {
        classes,
        count,
        min_size,
        max_size,
        seed,
    };
    create_out(&out)?;
    let manifest = synth_dataset(&spec, &out)?;
    let mut log = RunLog::new("synth", &resolved);
    log.note(format!("images = {}", manifest.len()));
    log.write(&out)?;
    println!(
        "wrote {} images and {}",
        manifest.len(),
        out.join("manifest.csv").display()
    );
    Ok(())
}
