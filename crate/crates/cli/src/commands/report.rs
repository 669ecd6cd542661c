use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use ndpnn_core::engine::{evaluate_metrics, load_model, ConfusionMatrix, Metrics};
use ndpnn_core::Error;

use crate::commands::eval::{CONFUSION_FILE, TIMING_FILE};
use crate::common::{create_out, path_arg, write, RunLog};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `eval`.
    #[arg(long = "eval")]
    pub eval_dir: Option<PathBuf>,
    /// Confusion matrix CSV (overrides the one in --eval).
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    /// Model before reduction.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Model after reduction.
    #[arg(long)]
    pub reduced: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn metrics_text(m: &Metrics, classes: &[String]) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "accuracy = {:.4}", m.accuracy);
    let _ = writeln!(t, "macro precision = {:.4}", m.macro_precision);
    let _ = writeln!(t, "macro recall = {:.4}", m.macro_recall);
    let _ = writeln!(t, "macro f1 = {:.4}", m.macro_f1);
    let _ = writeln!(t, "weighted precision = {:.4}", m.weighted_precision);
    let _ = writeln!(t, "weighted recall = {:.4}", m.weighted_recall);
    let _ = writeln!(t, "weighted f1 = {:.4}", m.weighted_f1);
    let _ = writeln!(t, "class, precision, recall, f1, support");
    for (c, k) in classes.iter().zip(&m.per_class) {
        let _ = writeln!(
            t,
            "{c}, {:.4}, {:.4}, {:.4}, {}",
            k.precision, k.recall, k.f1, k.support
        );
    }
    t
}

fn read_timing(dir: &Path) -> Option<String> {
    let text = fs::read_to_string(dir.join(TIMING_FILE)).ok()?;
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == "mean_inference_seconds")
        .map(|(_, v)| v.trim().to_string())
}

fn need(p: &Path) -> Result<(), Error> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(p.display().to_string()))
    }
}

pub fn run(a: ReportArgs, file: ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let eval_dir = r.optional("eval", path_arg(a.eval_dir)).map(PathBuf::from);
    let confusion = r
        .optional("confusion", path_arg(a.confusion))
        .map(PathBuf::from);
    let model = r.optional("model", path_arg(a.model)).map(PathBuf::from);
    let reduced = r
        .optional("reduced", path_arg(a.reduced))
        .map(PathBuf::from);
    let out = PathBuf::from(r.required::<String>("out", path_arg(a.out)));
    r.check(eval_dir.is_some() || confusion.is_some(), || {
        "one of --eval or --confusion is required".into()
    });
    let resolved = r.finish()?;

    let cm_path =
        confusion.unwrap_or_else(|| eval_dir.as_ref().expect("checked").join(CONFUSION_FILE));
    need(&cm_path)?;
    let (cm, classes) =
        ConfusionMatrix::from_csv(&fs::read_to_string(&cm_path).map_err(Error::from)?)?;
    let metrics = evaluate_metrics(&cm)?;
    let models = [("before", model), ("after", reduced)]
        .into_iter()
        .filter_map(|(tag, p)| p.map(|p| (tag, p)))
        .map(|(tag, p)| Ok((tag, load_model(&p)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let timing = eval_dir.as_deref().and_then(read_timing);

    let mut text = format!("samples = {}\n", cm.total());
    text.push_str(&metrics_text(&metrics, &classes));
    let mut csv = String::from("section,key,value\n");
    let _ = writeln!(csv, "metrics,samples,{}", cm.total());
    let _ = writeln!(csv, "metrics,accuracy,{:.6}", metrics.accuracy);
    for (k, v) in [
        ("macro_precision", metrics.macro_precision),
        ("macro_recall", metrics.macro_recall),
        ("macro_f1", metrics.macro_f1),
        ("weighted_precision", metrics.weighted_precision),
        ("weighted_recall", metrics.weighted_recall),
        ("weighted_f1", metrics.weighted_f1),
    ] {
        let _ = writeln!(csv, "metrics,{k},{v:.6}");
    }
    for (c, k) in classes.iter().zip(&metrics.per_class) {
        let _ = writeln!(csv, "class:{c},precision,{:.6}", k.precision);
        let _ = writeln!(csv, "class:{c},recall,{:.6}", k.recall);
        let _ = writeln!(csv, "class:{c},f1,{:.6}", k.f1);
        let _ = writeln!(csv, "class:{c},support,{}", k.support);
    }
    text.push_str("confusion matrix (rows actual, columns predicted)\n");
    text.push_str(&cm.to_csv(&classes));
    for (i, row) in cm.rows().iter().enumerate() {
        for (j, n) in row.iter().enumerate() {
            let _ = writeln!(csv, "confusion,{}->{},{n}", classes[i], classes[j]);
        }
    }
    for (tag, m) in &models {
        let degrees: Vec<String> = m.poly_degrees().iter().map(usize::to_string).collect();
        let _ = writeln!(text, "degrees {tag} = {}", degrees.join(" "));
        let _ = writeln!(text, "parameters {tag} = {}", m.param_count());
        let _ = writeln!(csv, "model,degrees_{tag},{}", degrees.join(" "));
        let _ = writeln!(csv, "model,parameters_{tag},{}", m.param_count());
    }
    if let [(_, a), (_, b)] = models.as_slice() {
        let ratio = a.param_count() as f64 / b.param_count() as f64;
        let _ = writeln!(text, "parameter ratio = {ratio:.4}");
        let _ = writeln!(csv, "model,parameter_ratio,{ratio:.6}");
    }
    if let Some(t) = &timing {
        let _ = writeln!(text, "mean inference time per sample = {t} s");
        let _ = writeln!(csv, "timing,mean_inference_seconds,{t}");
    }

    create_out(&out)?;
    write(&out.join("report.txt"), &text)?;
    write(&out.join("report.csv"), &csv)?;
    RunLog::new("report", &resolved).write(&out)?;
    print!("{text}");
    Ok(())
}
