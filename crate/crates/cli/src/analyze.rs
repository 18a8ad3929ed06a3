use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use psolab_core::analysis::{
    build_histogram, fit_exponential, fit_power_law, mean_curve, mean_std, positive_increments, Histogram,
    DEFAULT_BIN_SIZE, DEFAULT_RANGE,
};
use psolab_core::runner::{fmt_real, read_csv};
use psolab_core::Error;
use serde_json::{json, Value};

use crate::{emit, Failure};

pub const NO_INCREMENTS: &str = "no positive increments";

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Trace CSV files written by `run` or `batch`.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BIN_SIZE)]
    bin_size: f64,
    /// Histogram range as MIN MAX.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [DEFAULT_RANGE.0, DEFAULT_RANGE.1])]
    range: Vec<f64>,
    /// Report histogram points as (log10 centre, log10 count), empty bins dropped.
    #[arg(long)]
    log_log: bool,
    /// Include the mean fitness and MSD curves in the printed report.
    #[arg(long)]
    curves: bool,
    /// Also write curves.csv, histogram.csv and analysis.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn histogram_points(h: &Histogram, log_log: bool) -> Vec<[f64; 2]> {
    h.counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (h.bin_start(i) + h.bin_size / 2.0, c as f64))
        .filter(|(_, c)| !log_log || *c > 0.0)
        .map(|(x, c)| if log_log { [x.log10(), c.log10()] } else { [x, c] })
        .collect()
}

pub fn run(args: &AnalyzeArgs) -> Result<(), Failure> {
    let (lo, hi) = (args.range[0], args.range[1]);
    // Reject a bad binning before reading anything.
    Histogram::new(args.bin_size, lo, hi)?;

    let traces = args.files.iter().map(|f| read_csv(f)).collect::<Result<Vec<_>, _>>()?;
    let best: Vec<Vec<f64>> = traces.iter().map(|t| t.iter().map(|r| r.best_fitness).collect()).collect();
    let msd: Vec<Vec<f64>> = traces.iter().map(|t| t.iter().map(|r| r.msd).collect()).collect();
    let (mean_best, runs) = mean_curve(&best);
    let (mean_msd, _) = mean_curve(&msd);
    let finals: Vec<f64> = best.iter().filter_map(|c| c.last().copied()).collect();

    // Increments never straddle two files. A diverged swarm leaves infinite
    // or NaN steps, which are counted but kept out of the fit.
    let (increments, non_finite): (Vec<f64>, Vec<f64>) =
        msd.iter().flat_map(|c| positive_increments(c)).partition(|d| d.is_finite());

    let mut report = json!({
        "files": args.files.len(),
        "iterations": mean_best.len(),
        "final_fitness": mean_std(&finals).map(|(mean, std)| json!({
            "mean": mean,
            "std": std,
            "min": finals.iter().copied().fold(f64::INFINITY, f64::min),
            "max": finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })),
        "increments": increments.len(),
        "non_finite_increments": non_finite.len(),
        "histogram": Value::Null,
        "power_law": Value::Null,
        "exponential": Value::Null,
    });

    let mut histogram_csv = None;
    if increments.is_empty() {
        eprintln!("notice: {NO_INCREMENTS}");
        report["notice"] = json!(NO_INCREMENTS);
    } else {
        let h = build_histogram(&increments, args.bin_size, lo, hi)?;
        let points = histogram_points(&h, args.log_log);
        report["histogram"] = json!({
            "bin_size": h.bin_size,
            "range_min": h.range_min,
            "range_max": h.range_max,
            "log_log": args.log_log,
            "outside": increments.len() as u64 - h.total(),
            "counts": h.counts,
            "points": points,
        });
        let mut csv = String::from(if args.log_log { "log10_x,log10_count\n" } else { "x,count\n" });
        for [x, y] in &points {
            writeln!(csv, "{},{}", fmt_real(*x), fmt_real(*y)).expect("writing to a String");
        }
        histogram_csv = Some(csv);

        match fit_power_law(&increments) {
            Ok(fit) => {
                report["power_law"] = serde_json::to_value(fit).expect("fits serialize");
                match fit_exponential(&increments, fit.xmin_hat) {
                    Ok(exp) => report["exponential"] = serde_json::to_value(exp).expect("fits serialize"),
                    Err(e) => report["exponential_error"] = json!(e.to_string()),
                }
            }
            Err(e @ (Error::Degenerate(_) | Error::Domain(_))) => report["power_law_error"] = json!(e.to_string()),
            Err(e) => return Err(e.into()),
        }
    }

    let summary = serde_json::to_string(&report).expect("reports serialize") + "\n";
    if args.curves {
        report["curves"] = json!({
            "mean_best_fitness": mean_best,
            "mean_msd": mean_msd,
            "runs": runs,
        });
        emit(&(serde_json::to_string(&report).expect("reports serialize") + "\n"))?;
    } else {
        emit(&summary)?;
    }

    if let Some(dir) = &args.out_dir {
        let write = |name: &str, text: &str| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
        };
        fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
        let mut curves = String::from("iteration,mean_best_fitness,mean_msd,runs\n");
        for t in 0..mean_best.len() {
            writeln!(curves, "{},{},{},{}", t + 1, fmt_real(mean_best[t]), fmt_real(mean_msd[t]), runs[t])
                .expect("writing to a String");
        }
        write("curves.csv", &curves)?;
        if let Some(csv) = &histogram_csv {
            write("histogram.csv", csv)?;
        }
        write("analysis.json", &summary)?;
    }
    Ok(())
}
