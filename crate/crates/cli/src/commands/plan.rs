use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ndpnn_core::geometry::{
    feasible_window_height_range, max_height_ratio, overlap_square, oversampling_factor,
    validate_parameter_order, OrderCheck, ParameterOrder,
};
use ndpnn_core::Error;

use crate::common::{check_overlaps, create_out, path_arg, write, RunLog};
use crate::config::{ConfigFile, Resolver};
use crate::CliError;

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Smallest image height after clamping.
    #[arg(long)]
    pub hmin: Option<f64>,
    /// Largest image height after clamping.
    #[arg(long)]
    pub hmax: Option<f64>,
    /// Number of windows (a perfect square).
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long = "alpha-min")]
    pub alpha_min: Option<f64>,
    #[arg(long = "alpha-max")]
    pub alpha_max: Option<f64>,
    /// Window height to evaluate instead of the suggested one.
    #[arg(long)]
    pub h: Option<u32>,
    /// Also check the admissibility chain for this parameter order.
    #[arg(long)]
    pub order: Option<ParameterOrder>,
    /// Optional directory for `plan.txt` and `run.log`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: PlanArgs, file: ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let hmin: f64 = r.required("hmin", a.hmin);
    let hmax: f64 = r.required("hmax", a.hmax);
    let m = r.value("m", a.m, 9);
    let alpha_min = r.value("alpha-min", a.alpha_min, 0.1);
    let alpha_max = r.value("alpha-max", a.alpha_max, 0.9);
    let h = r.optional("h", a.h);
    let order = r.optional("order", a.order);
    let out = r.optional("out", path_arg(a.out)).map(PathBuf::from);
    r.check(hmin > 0.0 && hmin <= hmax, || {
        format!("hmin ({hmin}) and hmax ({hmax}) need 0 < hmin <= hmax")
    });
    check_overlaps(&mut r, m, alpha_min, alpha_max);
    let resolved = r.finish()?;

    let mut text = String::new();
    let mut failure = None;
    if let Some(order) = order {
        match validate_parameter_order(order, hmin, hmax, m, alpha_min, alpha_max)? {
            OrderCheck::Pass => {
                let _ = writeln!(text, "order {order}: pass");
            }
            OrderCheck::Fail(c) => {
                let _ = writeln!(text, "order {order}: fail ({c})");
                failure = Some(Error::Infeasible(format!(
                    "parameter order {order} violates {c}"
                )));
            }
        }
    }
    let range = feasible_window_height_range(hmin, hmax, m, alpha_min, alpha_max);
    match &range {
        Ok(range) => {
            let _ = writeln!(text, "h range: [{:.6}, {:.6}]", range.lo, range.hi);
            match range.suggest() {
                Some(s) => {
                    let _ = writeln!(text, "suggested h: {s}");
                }
                None => {
                    let _ = writeln!(text, "suggested h: none (no integer in range)");
                }
            }
        }
        Err(e) => {
            let _ = writeln!(text, "h range: empty ({e})");
        }
    }
    let chosen = h.or_else(|| range.as_ref().ok().and_then(|r| r.suggest()));
    if let Some(h) = chosen {
        let h = h as f64;
        for (name, big) in [("hmax", hmax), ("hmin", hmin)] {
            match overlap_square(big, h, m) {
                Ok(alpha) => {
                    let inside = alpha >= alpha_min - 1e-9 && alpha <= alpha_max + 1e-9;
                    let _ = writeln!(
                        text,
                        "alpha({name} = {big}) = {alpha:.9}{}",
                        if inside {
                            ""
                        } else {
                            " (outside [alpha-min, alpha-max])"
                        }
                    );
                    if !inside && failure.is_none() {
                        failure = Some(Error::Infeasible(format!(
                            "h = {h} gives alpha {alpha} at {name}"
                        )));
                    }
                }
                Err(e) => {
                    let _ = writeln!(text, "alpha({name} = {big}): {e}");
                    failure.get_or_insert(e);
                }
            }
        }
    }
    let _ = writeln!(
        text,
        "max hmax/hmin ratio: {:.6}",
        max_height_ratio(m, alpha_min, alpha_max)?
    );
    let _ = writeln!(
        text,
        "oversampling at alpha-max: {:.6}",
        oversampling_factor(alpha_max)?
    );
    print!("{text}");
    if let Some(out) = &out {
        create_out(out)?;
        write(&out.join("plan.txt"), &text)?;
        RunLog::new("plan", &resolved).write(out)?;
    }
    if let Err(e) = range {
        return Err(e.into());
    }
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
