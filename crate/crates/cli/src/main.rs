//! Batch front end: solve and verification pipelines driven by a config
//! file, with CSV/JSON/SVG artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mulab_cli::config::{parse_config, RunConfig};
use mulab_cli::pipeline::{self, CliError};
use mulab_cli::plot;

#[derive(Parser)]
#[command(
    name = "mulab",
    version,
    about = "Spectral laboratory for measure-geometric Laplacians on intervals and rectangles"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override (overrides [run] seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for kernel-matrix assembly.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Galerkin eigensolve: spectrum.csv, eigvec_<i>.csv, report.json.
    Solve(RunArgs),
    /// Solve plus nodal-domain counting and bound verdicts: nodal.csv.
    Nodal(RunArgs),
    /// Integral-operator route and kernel checks: green_report.json.
    Green(RunArgs),
    /// Closed-form and property fixtures: validate_report.json.
    Validate(RunArgs),
    /// Lower L-infinity dimension estimate with the spectral-hypothesis flag.
    Diminf(RunArgs),
    /// Render an eigenfunction heatmap with its zero set from a run directory.
    Plot {
        /// Directory holding the artifacts of a previous run.
        #[arg(long)]
        run: PathBuf,
        /// 1-based eigenfunction index.
        #[arg(long)]
        index: usize,
    },
}

fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    parse_config(&text, args.out.clone(), args.seed)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn threads(args: &RunArgs) -> usize {
    args.threads.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get().min(8)).unwrap_or(1)
    })
}

fn run() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Solve(args) => {
            let cfg = load_config(&args)?;
            let (report, _) = pipeline::cmd_solve(&cfg)?;
            let spectrum = report.spectrum.as_ref().expect("solve reports a spectrum");
            println!(
                "solve: {} eigenpairs on {} DOFs -> {}",
                spectrum.count,
                spectrum.dofs,
                cfg.out_dir.display()
            );
            for (i, l) in spectrum.lambdas.iter().enumerate() {
                println!("  lambda_{} = {l:.9}", i + 1);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Nodal(args) => {
            let cfg = load_config(&args)?;
            let (report, failed) = pipeline::cmd_nodal(&cfg)?;
            let nodal = report.nodal.as_ref().expect("nodal reports counts");
            for row in &nodal.rows {
                println!(
                    "  mode {}: lambda = {:.6}, m = {}, r = {}, bounds {}",
                    row.index,
                    row.lambda,
                    row.m,
                    row.r,
                    if row.lower_ok && row.upper_ok { "ok" } else { "VIOLATED" }
                );
            }
            println!("nodal: {} -> {}", nodal.verdict.status, cfg.out_dir.display());
            Ok(exit_verdict(failed))
        }
        Cmd::Green(args) => {
            let cfg = load_config(&args)?;
            let (report, failed) = pipeline::cmd_green(&cfg, threads(&args))?;
            if let Some(reason) = &report.skipped_reason {
                println!("green: SKIPPED ({reason})");
            } else {
                if let Some(agr) = &report.route_agreement {
                    for row in &agr.rows {
                        println!(
                            "  mode {}: galerkin {:.6} vs integral {:.6} ({:.3}%)",
                            row.index,
                            row.lambda_galerkin,
                            row.lambda_green,
                            100.0 * row.rel_diff
                        );
                    }
                }
                println!(
                    "green: {} -> {}",
                    if failed { "FAIL" } else { "PASS" },
                    cfg.out_dir.display()
                );
            }
            Ok(exit_verdict(failed))
        }
        Cmd::Validate(args) => {
            let cfg = load_config(&args)?;
            let (report, failed) = pipeline::cmd_validate(&cfg, threads(&args))?;
            for f in &report.fixtures {
                println!("  {}: {}", f.name, f.verdict.status);
            }
            println!(
                "validate: {} -> {}",
                if failed { "FAIL" } else { "PASS" },
                cfg.out_dir.display()
            );
            Ok(exit_verdict(failed))
        }
        Cmd::Diminf(args) => {
            let cfg = load_config(&args)?;
            let (report, failed) = pipeline::cmd_diminf(&cfg)?;
            let d = report.dim_inf.as_ref().expect("diminf reports an estimate");
            println!(
                "diminf: slope = {:.4}, hypothesis {}",
                d.slope,
                if d.hypothesis_violated { "VIOLATED" } else { "ok" }
            );
            Ok(exit_verdict(failed))
        }
        Cmd::Plot { run, index } => {
            let out = plot::cmd_plot(&run, index)?;
            println!("plot: {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_verdict(failed: bool) -> ExitCode {
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
