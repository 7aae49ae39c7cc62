//! Benchmark CLI: run any solver/function/eps/d combination with exact
//! query accounting, emit per-run reports as CSV or JSON, and fit
//! query-count scaling exponents across an eps sweep.
//!
//! Exit code is 0 only if every run's stationarity claim verified.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Parser;

use flowtrap::catalog::catalog;
use flowtrap::flowverify::{integrate_flow, trace_to_csv};
use flowtrap::geometry::{HyperRect, Point};
use flowtrap::report::{audit_to_jsonl, RunReport, CSV_HEADER};
use flowtrap::runner::{sweep_and_fit, Algo, SweepSpec};

#[derive(Parser, Debug)]
#[command(
    name = "flowtrap",
    about = "Find eps-stationary points of smooth functions on the unit cube and account for every oracle query"
)]
struct Args {
    /// Algorithms to run
    #[arg(long = "algo", value_delimiter = ',', default_value = "gft")]
    algos: Vec<String>,

    /// Catalog functions: quadratic, trig_mix, separable_wells
    #[arg(long = "fn", value_delimiter = ',', default_value = "quadratic")]
    functions: Vec<String>,

    /// Tolerances, strictly decreasing when more than one
    #[arg(long = "eps", value_delimiter = ',', default_value = "1e-2")]
    eps: Vec<f64>,

    /// Dimensions
    #[arg(long = "dim", value_delimiter = ',', default_value = "2")]
    dims: Vec<usize>,

    /// Seed for the function catalog
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output format for the per-run table
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,

    /// Write the per-run table here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write certificate audit logs (JSON lines) next to the report, one
    /// file per run that produces a trail
    #[arg(long)]
    audit: bool,

    /// Integrate the constrained gradient flow from each returned point
    /// and dump the trace as CSV into this directory
    #[arg(long = "dump-flow")]
    dump_flow: Option<PathBuf>,

    /// Warm-start level override for the vavasis baseline
    #[arg(long)]
    delta: Option<f64>,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let algorithms = args
        .algos
        .iter()
        .map(|s| s.parse::<Algo>())
        .collect::<Result<Vec<_>, _>>()
        .context("parsing --algo")?;

    let spec = SweepSpec {
        algorithms,
        functions: args.functions.clone(),
        dims: args.dims.clone(),
        eps_list: args.eps.clone(),
        seed: args.seed,
        delta_override: args.delta,
    };
    let result = sweep_and_fit(&spec).context("running sweep")?;

    for failure in &result.failures {
        eprintln!("cell failed: {failure}");
    }

    if args.audit {
        for report in &result.reports {
            if report.audit.is_empty() {
                continue;
            }
            let path = audit_path(&args.out, report);
            fs::write(&path, audit_to_jsonl(&report.audit))
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("audit: {}", path.display());
        }
    }

    if let Some(dir) = &args.dump_flow {
        fs::create_dir_all(dir)?;
        for report in &result.reports {
            let f = catalog(&report.function, report.dim, args.seed)?;
            let start = Point::new(report.point.clone())?;
            let rect = final_rect(report);
            let trace = integrate_flow(
                f.as_ref(),
                &start,
                &rect,
                report.claim_level,
                (report.eps / 10.0).min(1e-3),
                5.0,
            );
            let path = dir.join(format!(
                "{}_{}_d{}_eps{}.flow.csv",
                report.algorithm, report.function, report.dim, report.eps
            ));
            fs::write(&path, trace_to_csv(&trace))?;
            eprintln!("flow trace: {}", path.display());
        }
    }

    let rendered = match args.format.as_str() {
        "csv" => render_csv(&result.reports, &result.fits),
        _ => render_json(&result.reports, &result.fits)?,
    };
    match &args.out {
        Some(path) => fs::write(path, rendered).with_context(|| format!("writing {path:?}"))?,
        None => print!("{rendered}"),
    }

    print_fit_summary(&result.fits);

    let unverified: Vec<&RunReport> = result.reports.iter().filter(|r| !r.verified).collect();
    for r in &unverified {
        eprintln!(
            "claim FAILED: {} {} d={} eps={}: |g| = {} > {}",
            r.algorithm, r.function, r.dim, r.eps, r.proj_grad_norm, r.claim_level
        );
    }
    if !unverified.is_empty() || !result.failures.is_empty() {
        bail!(
            "{} unverified claims, {} failed cells",
            unverified.len(),
            result.failures.len()
        );
    }
    Ok(())
}

fn audit_path(out: &Option<PathBuf>, report: &RunReport) -> PathBuf {
    let stem = format!(
        "{}_{}_d{}_eps{}.audit.jsonl",
        report.algorithm, report.function, report.dim, report.eps
    );
    match out {
        Some(path) => path.with_file_name(stem),
        None => PathBuf::from(stem),
    }
}

/// The tightest axis-aligned box the final audit record certifies; the
/// unit cube when the algorithm keeps no trail.
fn final_rect(report: &RunReport) -> HyperRect {
    report
        .audit
        .last()
        .and_then(|rec| HyperRect::new(rec.rect_lo.clone(), rec.rect_hi.clone()).ok())
        .unwrap_or_else(|| HyperRect::unit_cube(report.dim))
}

fn render_csv(reports: &[RunReport], _fits: &[flowtrap::runner::FitRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn render_json(
    reports: &[RunReport],
    fits: &[flowtrap::runner::FitRow],
) -> anyhow::Result<String> {
    let value = serde_json::json!({
        "schema_version": 1,
        "runs": reports,
        "fits": fits,
    });
    Ok(serde_json::to_string_pretty(&value)?)
}

fn print_fit_summary(fits: &[flowtrap::runner::FitRow]) {
    for fit in fits {
        match fit.exponent {
            Some(e) => eprintln!(
                "fit: {} {} d={}: queries ~ (1/eps)^{:.3} over {} runs",
                fit.algorithm, fit.function, fit.dim, e, fit.runs
            ),
            None => eprintln!(
                "fit: {} {} d={}: degenerate ({} runs; need 3)",
                fit.algorithm, fit.function, fit.dim, fit.runs
            ),
        }
    }
}
