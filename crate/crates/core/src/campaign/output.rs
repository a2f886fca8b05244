use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::{emit_manifest, ExperimentSpec};
use super::{ArrayScheme, CampaignResult, CampaignSummary};
use crate::error::{Error, Result};
use crate::geometry::ArrayLayout;
use crate::rates::RateScheme;

fn opt_name(o: Option<RateScheme>) -> &'static str {
    o.map_or("-", |s| s.as_str())
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Writes a layout table to `path`.
pub fn write_layout(path: &Path, layout: &ArrayLayout) -> Result<()> {
    write(path, &layout.to_table())
}

/// Writes all campaign artifacts into `dir`:
///
/// - `manifest.toml`: the resolved spec (re-running it reproduces every file)
/// - `seeds.csv`: realization seeds
/// - `points.csv`: sweep points by index
/// - `sum_rates.csv`, `user_rates.csv`, `fdd_rates.csv`: flat records
/// - `summary.json`: means and CDFs
/// - `layouts/`: benchmark layouts and every optimized layout
/// - `traces/`: PSO best-value traces
pub fn write_campaign(dir: &Path, spec: &ExperimentSpec, result: &CampaignResult, summary: &CampaignSummary) -> Result<()> {
    fs::create_dir_all(dir.join("layouts"))?;
    fs::create_dir_all(dir.join("traces"))?;
    write(&dir.join("manifest.toml"), &emit_manifest(spec))?;

    let mut seeds = String::from("realization,seed\n");
    for r in &result.realizations {
        let _ = writeln!(seeds, "{},{}", r.index, r.seed);
    }
    write(&dir.join("seeds.csv"), &seeds)?;

    let mut points = String::from("point,subcarriers,evm,users\n");
    for (j, p) in spec.sweep_points().iter().enumerate() {
        let _ = writeln!(points, "{j},{},{},{}", p.subcarriers, p.evm, p.users);
    }
    write(&dir.join("points.csv"), &points)?;

    let head = "realization,point,subcarriers,evm,users,array,optimized_for,scheme";
    let mut sums = format!("{head},sum_rate\n");
    let mut users = format!("{head},user,rate\n");
    let mut fdd = String::from("realization,point,subcarriers,evm,users,array,optimized_for,carrier_ghz,scheme,sum_rate\n");
    for real in &result.realizations {
        for p in &real.points {
            let pre = format!(
                "{},{},{},{},{}",
                real.index, p.point_index, p.point.subcarriers, p.point.evm, p.point.users
            );
            for r in &p.results {
                let key = format!("{pre},{},{},{}", r.array, opt_name(r.optimized_for), r.scheme);
                let _ = writeln!(sums, "{key},{}", r.sum_rate);
                for (k, v) in r.per_user.iter().enumerate() {
                    let _ = writeln!(users, "{key},{k},{v}");
                }
            }
            for f in &p.fdd {
                let _ = writeln!(
                    fdd,
                    "{pre},{},{},{},{},{}",
                    f.array,
                    opt_name(f.optimized_for),
                    f.carrier_ghz,
                    f.scheme,
                    f.sum_rate
                );
            }
            for run in &p.pso {
                let stem = format!("r{:04}_p{}_movable_{}", real.index, p.point_index, run.optimized_for);
                write_layout(&dir.join("layouts").join(format!("{stem}.txt")), &run.trace.best_layout)?;
                write(&dir.join("traces").join(format!("{stem}.csv")), &run.trace.to_csv())?;
            }
        }
    }
    write(&dir.join("sum_rates.csv"), &sums)?;
    write(&dir.join("user_rates.csv"), &users)?;
    if !spec.campaign.fdd_carriers_ghz.is_empty() {
        write(&dir.join("fdd_rates.csv"), &fdd)?;
    }

    let wl = spec.wavelength();
    for &a in spec.arrays.schemes.iter().filter(|a| a.is_fixed()) {
        write_layout(&dir.join("layouts").join(format!("{a}.txt")), &spec.benchmark_layout(a, wl)?)?;
    }
    if spec.arrays.schemes.contains(&ArrayScheme::Movable) {
        let mut regions = String::from("# region center_y_m center_z_m side_m\n");
        for (i, r) in spec.regions()?.iter().enumerate() {
            let _ = writeln!(regions, "{i} {} {} {}", r.center_y, r.center_z, r.side);
        }
        write(&dir.join("layouts").join("regions.txt"), &regions)?;
    }

    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Parse(e.to_string()))?;
    write(&dir.join("summary.json"), &(json + "\n"))
}
