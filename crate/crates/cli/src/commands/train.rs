use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ndpnn_core::dataset::{DatasetManifest, Split};
use ndpnn_core::engine::train::{accuracy, train};
use ndpnn_core::engine::{save_model, Architecture, TrainConfig};
use ndpnn_core::Error;

use crate::common::{
    create_out, load_samples, must_exist, path_arg, save_classes, write, List, RunLog,
};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

#[derive(Debug, Default, Args)]
pub struct TrainArgs {
    /// Manifest of window stacks (as written by `transform`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Architecture preset: desk | wsiscmc
    #[arg(long)]
    pub arch: Option<String>,
    /// Channels per polynomial layer, e.g. 4,8
    #[arg(long)]
    pub channels: Option<List<usize>>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub kernel: Option<usize>,
    /// Pooling window per spatial axis after each polynomial layer, e.g. 1x2x2
    #[arg(long)]
    pub pool: Option<List<usize>>,
    /// Hidden dense layer widths, e.g. 128
    #[arg(long)]
    pub dense: Option<List<usize>>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub(crate) struct Settings {
    pub data: PathBuf,
    pub arch: Architecture,
    pub channels: Option<List<usize>>,
    pub degree: Option<usize>,
    pub kernel: Option<usize>,
    pub pool: Option<List<usize>>,
    pub dense: Option<List<usize>>,
    pub cfg: TrainConfig,
    pub out: PathBuf,
}

pub(crate) fn resolve(
    a: TrainArgs,
    file: ConfigFile,
) -> Result<(Settings, Vec<(String, String)>), CliError> {
    let mut r = Resolver::new(file);
    let data = PathBuf::from(r.required::<String>("data", path_arg(a.data)));
    let arch_name = r.value("arch", a.arch, "desk".to_string());
    let channels = r.optional("channels", a.channels);
    let degree = r.optional("degree", a.degree);
    let kernel = r.optional("kernel", a.kernel);
    let pool = r.optional("pool", a.pool);
    let dense = r.optional("dense", a.dense);
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: r.value("lr", a.lr, defaults.learning_rate),
        batch_size: r.value("batch-size", a.batch_size, defaults.batch_size),
        epochs: r.value("epochs", a.epochs, defaults.epochs),
        beta1: r.value("beta1", a.beta1, defaults.beta1),
        beta2: r.value("beta2", a.beta2, defaults.beta2),
        epsilon: defaults.epsilon,
        seed: r.value("seed", a.seed, defaults.seed),
    };
    let out = PathBuf::from(r.required::<String>("out", path_arg(a.out)));
    for v in cfg.violations() {
        r.error(v);
    }
    let arch = match Architecture::preset(&arch_name, 3) {
        Ok(a) => a,
        Err(e) => {
            r.error(format!("arch: {e}"));
            Architecture::desk(3)
        }
    };
    let resolved = r.finish()?;
    must_exist(&[&data])?;
    Ok((
        Settings {
            data,
            arch,
            channels,
            degree,
            kernel,
            pool,
            dense,
            cfg,
            out,
        },
        resolved,
    ))
}

pub fn run(a: TrainArgs, file: ConfigFile) -> Result<(), CliError> {
    let (s, resolved) = resolve(a, file)?;
    let Settings {
        data,
        mut arch,
        channels,
        degree,
        kernel,
        pool,
        dense,
        cfg,
        out,
    } = s;

    let manifest = DatasetManifest::load(&data)?;
    let classes = manifest.classes();
    let train_set = load_samples(&data, &manifest, Split::Train, &classes)?;
    let test_set = load_samples(&data, &manifest, Split::Test, &classes)?;
    let first = train_set
        .first()
        .ok_or_else(|| Error::InvalidArgument("no training samples".into()))?;
    let input_shape = first.input.shape().to_vec();
    arch.rank = input_shape.len() - 1;
    if arch.pool.len() != arch.rank && !arch.pool.is_empty() {
        arch.pool = vec![2; arch.rank];
    }
    if let Some(c) = channels {
        arch.conv_channels = c.0;
    }
    if let Some(d) = degree {
        arch.degree = d;
    }
    if let Some(k) = kernel {
        arch.kernel = k;
    }
    if let Some(p) = pool {
        arch.pool = p.0;
    }
    if let Some(d) = dense {
        arch.dense_hidden = d.0;
    }
    let mut usage = Vec::new();
    if let Err(e) = arch.validate() {
        usage.push(format!("architecture: {e}"));
    }
    if let Err(e) = cfg.validate(train_set.len()) {
        usage.push(e.to_string());
    }
    if classes.len() < 2 {
        usage.push("data: at least two classes are needed".into());
    }
    if !usage.is_empty() {
        return Err(CliError::Usage(usage));
    }
    let mut counts = vec![0usize; classes.len()];
    for s in &train_set {
        counts[s.label] += 1;
    }
    // classes absent from training keep a tiny prior instead of -inf bias
    let priors: Vec<f64> = counts.iter().map(|&c| (c as f64).max(0.5)).collect();
    let model = arch.build(&input_shape, classes.len(), Some(&priors), cfg.seed)?;

    create_out(&out)?;
    let mut log = RunLog::new("train", &resolved);
    log.note(format!("input_shape = {input_shape:?}"));
    log.note(format!("parameters = {}", model.param_count()));
    let mut epochs = String::from("epoch, loss, train_acc, val_acc\n");
    let (trained, _) = train(&model, &train_set, &test_set, &cfg, |e| {
        println!("{e}");
        let _ = writeln!(epochs, "{e}");
    })?;
    let model_dir = out.join("model");
    save_model(&trained, &model_dir)?;
    save_classes(&model_dir, &classes)?;
    write(&out.join("epochs.log"), &epochs)?;
    let train_acc = accuracy(&trained, &train_set)?;
    log.note(format!("train_accuracy = {train_acc:.6}"));
    if !test_set.is_empty() {
        log.note(format!(
            "test_accuracy = {:.6}",
            accuracy(&trained, &test_set)?
        ));
    }
    log.write(&out)?;
    Ok(())
}
