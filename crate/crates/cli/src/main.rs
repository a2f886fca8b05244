//! `marray`: run movable-antenna campaigns from TOML configs.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use marray_core::campaign::{
    aggregate, emit_manifest, parse_config_with, run_campaign, run_realization, write_campaign, write_layout,
    ArrayScheme, CampaignResult, CampaignSummary, ExperimentSpec,
};
use marray_core::geometry::ArrayLayout;
use marray_core::Error;

#[derive(Parser, Debug)]
#[command(name = "marray", version, about = "Movable-antenna multi-user MIMO campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full Monte Carlo campaign described by the config.
    Simulate(RunArgs),
    /// Optimize the movable array for a single realization.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
        /// Realization index.
        #[arg(long, default_value_t = 0)]
        realization: usize,
    },
    /// Run the campaign over a list of values of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// `key=v1,v2,...`, e.g. `S=1,10,50` or `rates.evm=0.02,0.1`.
        #[arg(long, value_name = "KEY=LIST")]
        param: String,
    },
    /// Write a benchmark array layout (or the movement regions' centers).
    ExportLayout {
        #[command(flatten)]
        common: CommonArgs,
        /// compact-upa, sparse-upa, staggered-ura or regions.
        #[arg(long)]
        array: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config, printing the resolved manifest.
    ValidateConfig(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// TOML config; Table I defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set K=16` or `--set rates.evm=[0.02,0.1]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Start from the reduced desk-scale run size.
    #[arg(long)]
    desk_scale: bool,
    /// More progress output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load_spec(common: &CommonArgs, extra: &[String]) -> Result<ExperimentSpec, Error> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut overrides = common.overrides.clone();
    overrides.extend_from_slice(extra);
    parse_config_with(&text, &overrides, common.desk_scale)
}

fn set_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn print_summary(summary: &CampaignSummary) {
    println!("point  array              optimized_for  scheme  mean_sum_rate");
    for s in &summary.series {
        println!(
            "{:<6} {:<18} {:<14} {:<7} {:.4}",
            s.point_index,
            s.array.as_str(),
            s.optimized_for.map_or("-", |o| o.as_str()),
            s.scheme.as_str(),
            s.mean_sum_rate
        );
    }
}

fn finish(spec: &ExperimentSpec, result: &CampaignResult, out: &Path, verbose: u8) -> Result<(), Error> {
    let summary = aggregate(result)?;
    write_campaign(out, spec, result, &summary)?;
    print_summary(&summary);
    if verbose > 0 {
        eprintln!("wrote results to {}", out.display());
    }
    Ok(())
}

fn run_campaign_command(run: &RunArgs, extra: &[String]) -> Result<(), Error> {
    let spec = load_spec(&run.common, extra)?;
    set_threads(run.threads)?;
    let v = run.common.verbose;
    if v > 0 {
        eprintln!(
            "{} realizations x {} sweep points, PSO {}x{}",
            spec.campaign.realizations,
            spec.sweep_points().len(),
            spec.pso.particles,
            spec.pso.iterations
        );
    }
    let start = Instant::now();
    let result = run_campaign(&spec)?;
    if v > 0 {
        eprintln!("campaign finished in {:.1} s", start.elapsed().as_secs_f64());
    }
    finish(&spec, &result, &run.out, v)
}

fn sweep_override(param: &str) -> Result<String, Error> {
    let (key, list) = param
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--param {param:?} is not of the form key=v1,v2,...")))?;
    let items: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Config(format!("--param {param:?} has no values")));
    }
    let quoted: Vec<String> = items
        .iter()
        .map(|s| if s.parse::<f64>().is_ok() { s.to_string() } else { format!("{s:?}") })
        .collect();
    Ok(format!("{}=[{}]", key.trim(), quoted.join(", ")))
}

fn export_layout(common: &CommonArgs, array: &str, out: Option<&Path>) -> Result<(), Error> {
    let spec = load_spec(common, &[])?;
    let wl = spec.wavelength();
    let layout = if array == "regions" {
        let centers = spec.regions()?.iter().map(|r| r.center()).collect();
        ArrayLayout::new(centers, wl)?
    } else {
        let scheme: ArrayScheme = array.parse()?;
        spec.benchmark_layout(scheme, wl)?
    };
    match out {
        Some(path) => write_layout(path, &layout),
        None => {
            print!("{}", layout.to_table());
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(run) => run_campaign_command(&run, &[]),
        Command::Sweep { run, param } => run_campaign_command(&run, &[sweep_override(&param)?]),
        Command::Optimize { run, realization } => {
            let spec = load_spec(&run.common, &[])?;
            set_threads(run.threads)?;
            let result = CampaignResult { realizations: vec![run_realization(&spec, realization)?] };
            for p in &result.realizations[0].points {
                for r in &p.pso {
                    let t = &r.trace;
                    eprintln!(
                        "point {} optimized for {}: best {:.4} bit/s/Hz after {} evaluations (feasible: {})",
                        p.point_index, r.optimized_for, t.best_value, t.evaluations, t.feasible
                    );
                }
            }
            finish(&spec, &result, &run.out, run.common.verbose)
        }
        Command::ExportLayout { common, array, out } => export_layout(&common, &array, out.as_deref()),
        Command::ValidateConfig(common) => {
            let spec = load_spec(&common, &[])?;
            print!("{}", emit_manifest(&spec));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
