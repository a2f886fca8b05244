//! Monte Carlo campaigns comparing movable and fixed arrays.
//!
//! A campaign is a pure function of its [`ExperimentSpec`]: every
//! realization draws its users from a seed derived from the master seed and
//! the realization index, every user from its own stream (so user-count
//! sweeps are nested), and every PSO run from a stream labelled by its
//! objective. Realizations run in parallel and are collected in index order.

pub mod config;
mod output;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_user_position, synthesize_paths, ChannelModel, OfdmGrid, PathSet, ScenarioKind};
use crate::error::{invalid, Result};
use crate::geometry::{
    make_compact_upa, make_move_regions, make_sparse_upa, make_staggered_ura_with_spacing, ArrayLayout,
    MoveRegion,
};
use crate::optimizer::{objective_adapter, pso_optimize, OptimizationTrace, PsoConfig};
use crate::rates::{scheme_sum_rate, ImpairedLinkConfig, RateReport, RateScheme};
use crate::seed::{derive_seed, stream_rng};
use crate::SPEED_OF_LIGHT;

pub use crate::rates::zero_interference_bound;
pub use config::{apply_override, emit_manifest, parse_config, parse_config_with, ExperimentSpec};
pub use output::{write_campaign, write_layout};

/// Antenna array under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrayScheme {
    Movable,
    CompactUpa,
    SparseUpa,
    StaggeredUra,
    /// Interference-free bound; not a physical array.
    ZeroInterference,
}

impl ArrayScheme {
    pub const ALL: [ArrayScheme; 5] =
        [Self::Movable, Self::CompactUpa, Self::SparseUpa, Self::StaggeredUra, Self::ZeroInterference];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Movable => "movable",
            Self::CompactUpa => "compact-upa",
            Self::SparseUpa => "sparse-upa",
            Self::StaggeredUra => "staggered-ura",
            Self::ZeroInterference => "zero-interference",
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Self::CompactUpa | Self::SparseUpa | Self::StaggeredUra)
    }
}

impl std::fmt::Display for ArrayScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ArrayScheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .map_or_else(|| invalid(format!("unknown array scheme {s:?}")), Ok)
    }
}

/// One combination of the swept parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub subcarriers: usize,
    pub evm: f64,
    pub users: usize,
}

impl ExperimentSpec {
    /// Factorial sweep, subcarriers outermost, then EVM, then user count.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &subcarriers in &self.grid.subcarriers {
            for &evm in &self.rates.evm {
                for &users in &self.rates.users {
                    out.push(SweepPoint { subcarriers, evm, users });
                }
            }
        }
        out
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (self.scenario.carrier_ghz * 1e9)
    }

    pub fn regions(&self) -> Result<Vec<MoveRegion>> {
        make_move_regions(self.arrays.rows, self.arrays.cols, self.arrays.region_side_wavelengths * self.wavelength())
    }

    /// Layout of a fixed benchmark array at wavelength `wavelength`.
    pub fn benchmark_layout(&self, array: ArrayScheme, wavelength: f64) -> Result<ArrayLayout> {
        let (rows, cols) = (self.arrays.rows, self.arrays.cols);
        let spacing = self.arrays.sparse_spacing_wavelengths * wavelength;
        match array {
            ArrayScheme::CompactUpa => make_compact_upa(rows, cols, wavelength),
            ArrayScheme::SparseUpa => make_sparse_upa(rows, cols, wavelength, Some(spacing)),
            ArrayScheme::StaggeredUra => make_staggered_ura_with_spacing(rows, cols, wavelength, spacing),
            other => invalid(format!("{other} is not a fixed array")),
        }
    }

    /// Uplink and downlink link configurations at a sweep point.
    pub fn links(&self, point: &SweepPoint) -> Result<LinkPair> {
        let spacing = self.grid.spacing_khz * 1e3;
        let noise = self.rates.noise_per_subcarrier(spacing);
        let (k, s) = (point.users, point.subcarriers);
        let ul = ImpairedLinkConfig::uniform(k, s, self.rates.ul_power_per_subcarrier(spacing), point.evm, noise)?;
        let dl_total = self.rates.dl_power_per_subcarrier(spacing) * s as f64;
        let dl = ImpairedLinkConfig::uniform(k, s, dl_total / (k * s) as f64, point.evm, noise)?
            .with_total_power(dl_total)?;
        Ok(LinkPair { ul, dl })
    }

    /// Paths of the first `users` users of realization `index`.
    pub fn draw_paths(&self, index: usize, users: usize) -> Result<PathSet> {
        let sc = self.scenario.to_config();
        let seed = realization_seed(self, index);
        let users = (0..users)
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64, "user");
                let pos = sample_user_position(&mut rng, &sc);
                synthesize_paths(&mut rng, &sc, pos)
            })
            .collect::<Result<Vec<_>>>()?;
        PathSet::new(users)
    }
}

pub fn realization_seed(spec: &ExperimentSpec, index: usize) -> u64 {
    derive_seed(spec.campaign.seed, index as u64, "realization")
}

/// Uplink powers and the downlink budget (with uniform dual powers).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPair {
    pub ul: ImpairedLinkConfig,
    pub dl: ImpairedLinkConfig,
}

impl LinkPair {
    pub fn for_scheme(&self, scheme: RateScheme) -> &ImpairedLinkConfig {
        if scheme.is_uplink() {
            &self.ul
        } else {
            &self.dl
        }
    }
}

/// Layout-independent channel model for a scenario kind.
pub fn channel_model(kind: ScenarioKind, paths: &PathSet, grid: &OfdmGrid, wavelength: f64) -> Result<ChannelModel> {
    match kind {
        ScenarioKind::Narrowband => ChannelModel::narrowband(paths, grid, wavelength),
        ScenarioKind::LosDominant | ScenarioKind::RichScattering => ChannelModel::wideband(paths, grid, wavelength),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub array: ArrayScheme,
    /// Objective of the PSO run for movable arrays.
    pub optimized_for: Option<RateScheme>,
    pub scheme: RateScheme,
    pub sum_rate: f64,
    pub per_user: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoRun {
    pub optimized_for: RateScheme,
    pub seed: u64,
    pub trace: OptimizationTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddRecord {
    pub array: ArrayScheme,
    pub optimized_for: Option<RateScheme>,
    pub carrier_ghz: f64,
    pub scheme: RateScheme,
    pub sum_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point_index: usize,
    pub point: SweepPoint,
    pub results: Vec<SchemeResult>,
    pub pso: Vec<PsoRun>,
    pub fdd: Vec<FddRecord>,
}

impl PointResult {
    pub fn get(&self, array: ArrayScheme, optimized_for: Option<RateScheme>, scheme: RateScheme) -> Option<&SchemeResult> {
        self.results
            .iter()
            .find(|r| r.array == array && r.optimized_for == optimized_for && r.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationResult {
    pub index: usize,
    pub seed: u64,
    pub points: Vec<PointResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub realizations: Vec<RealizationResult>,
}

/// Runs PSO for the movable array with `scheme` as objective, seeded with
/// the staggered URA.
#[allow(clippy::too_many_arguments)]
pub fn optimize_movable(
    spec: &ExperimentSpec,
    model: &ChannelModel,
    links: &LinkPair,
    scheme: RateScheme,
    seed: u64,
) -> Result<OptimizationTrace> {
    let wl = model.wavelength();
    let pso: PsoConfig = spec.pso.to_config(seed);
    let objective = objective_adapter(scheme, model, links.for_scheme(scheme), pso.penalty_weight);
    let staggered = spec.benchmark_layout(ArrayScheme::StaggeredUra, wl)?;
    pso_optimize(objective, &spec.regions()?, wl, &pso, Some(&staggered))
}

/// Outcome of optimizing for one scheme and evaluating with another.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEvaluation {
    pub optimize_scheme: RateScheme,
    pub evaluate_scheme: RateScheme,
    /// Rate of the returned layout under the optimization objective.
    pub optimized_value: f64,
    /// Rate of the same layout under the evaluation scheme.
    pub evaluated_value: f64,
    pub trace: OptimizationTrace,
}

/// Optimizes the movable array under `optimize_scheme` and evaluates the
/// layout under `evaluate_scheme` without re-optimizing. Uplink and downlink
/// share the channel (same carrier), so a layout optimized in one direction
/// is reused as-is in the other.
pub fn cross_evaluate(
    spec: &ExperimentSpec,
    model: &ChannelModel,
    links: &LinkPair,
    optimize_scheme: RateScheme,
    evaluate_scheme: RateScheme,
    seed: u64,
) -> Result<CrossEvaluation> {
    let trace = optimize_movable(spec, model, links, optimize_scheme, seed)?;
    let channels = model.channels(&trace.best_layout.positions);
    let optimized_value = scheme_sum_rate(optimize_scheme, &channels, links.for_scheme(optimize_scheme))?.sum_rate;
    let evaluated_value = scheme_sum_rate(evaluate_scheme, &channels, links.for_scheme(evaluate_scheme))?.sum_rate;
    Ok(CrossEvaluation { optimize_scheme, evaluate_scheme, optimized_value, evaluated_value, trace })
}

/// Evaluates `layout` at carrier `f_evaluated` (Hz) with the path geometry
/// held fixed. Only the wavelength changes: array responses and carrier
/// phases are recomputed, antenna positions are not touched.
#[allow(clippy::too_many_arguments)]
pub fn fdd_evaluate(
    layout: &ArrayLayout,
    paths: &PathSet,
    kind: ScenarioKind,
    grid: &OfdmGrid,
    f_optimized: f64,
    f_evaluated: f64,
    scheme: RateScheme,
    link: &ImpairedLinkConfig,
) -> Result<RateReport> {
    if !(f_optimized > 0.0) || !(f_evaluated > 0.0) {
        return invalid(format!("carrier frequencies must be positive, got {f_optimized} and {f_evaluated}"));
    }
    let model = channel_model(kind, paths, grid, SPEED_OF_LIGHT / f_evaluated)?;
    scheme_sum_rate(scheme, &model.channels(&layout.positions), link)
}

/// Runs every sweep point of one realization.
pub fn run_realization(spec: &ExperimentSpec, index: usize) -> Result<RealizationResult> {
    spec.validate()?;
    let seed = realization_seed(spec, index);
    let all_paths = spec.draw_paths(index, spec.max_users())?;
    let wl = spec.wavelength();
    let points = spec
        .sweep_points()
        .into_iter()
        .enumerate()
        .map(|(j, point)| run_point(spec, seed, &all_paths.truncated(point.users), j, point, wl))
        .collect::<Result<Vec<_>>>()?;
    Ok(RealizationResult { index, seed, points })
}

fn run_point(
    spec: &ExperimentSpec,
    seed: u64,
    paths: &PathSet,
    point_index: usize,
    point: SweepPoint,
    wl: f64,
) -> Result<PointResult> {
    let kind = spec.scenario.kind;
    let grid = spec.grid.grid(point.subcarriers)?;
    let model = channel_model(kind, paths, &grid, wl)?;
    let links = spec.links(&point)?;
    let arrays = &spec.arrays.schemes;

    let mut layouts: Vec<(ArrayScheme, Option<RateScheme>, ArrayLayout)> = Vec::new();
    for &a in arrays.iter().filter(|a| a.is_fixed()) {
        layouts.push((a, None, spec.benchmark_layout(a, wl)?));
    }
    let mut pso = Vec::new();
    if arrays.contains(&ArrayScheme::Movable) {
        let runs = spec
            .rates
            .optimize_for
            .par_iter()
            .map(|&opt| {
                let pso_seed = derive_seed(seed, point_index as u64, &format!("pso-{opt}"));
                optimize_movable(spec, &model, &links, opt, pso_seed)
                    .map(|trace| PsoRun { optimized_for: opt, seed: pso_seed, trace })
            })
            .collect::<Result<Vec<_>>>()?;
        for run in runs {
            layouts.push((ArrayScheme::Movable, Some(run.optimized_for), run.trace.best_layout.clone()));
            pso.push(run);
        }
    }

    let mut results = Vec::new();
    let mut zero_interference: Option<RateReport> = None;
    let want_zi = arrays.contains(&ArrayScheme::ZeroInterference);
    let mut candidates: Vec<&ArrayLayout> = layouts.iter().map(|l| &l.2).collect();
    let compact;
    if want_zi && candidates.is_empty() {
        compact = spec.benchmark_layout(ArrayScheme::CompactUpa, wl)?;
        candidates.push(&compact);
    }
    for (a, opt, layout) in &layouts {
        let channels = model.channels(&layout.positions);
        for &scheme in &spec.rates.schemes {
            let report = scheme_sum_rate(scheme, &channels, links.for_scheme(scheme))?;
            results.push(SchemeResult {
                array: *a,
                optimized_for: *opt,
                scheme,
                sum_rate: report.sum_rate,
                per_user: report.per_user(),
            });
        }
    }
    if want_zi {
        for layout in candidates {
            let report = zero_interference_bound(&model.channels(&layout.positions), &links.ul)?;
            if zero_interference.as_ref().is_none_or(|z| report.sum_rate > z.sum_rate) {
                zero_interference = Some(report);
            }
        }
        if let Some(zi) = zero_interference {
            for &scheme in spec.rates.schemes.iter().filter(|s| s.is_uplink()) {
                results.push(SchemeResult {
                    array: ArrayScheme::ZeroInterference,
                    optimized_for: None,
                    scheme,
                    sum_rate: zi.sum_rate,
                    per_user: zi.per_user(),
                });
            }
        }
    }

    let mut fdd = Vec::new();
    for &f in &spec.campaign.fdd_carriers_ghz {
        let fmodel = channel_model(kind, paths, &grid, SPEED_OF_LIGHT / (f * 1e9))?;
        for (a, opt, layout) in &layouts {
            let channels = fmodel.channels(&layout.positions);
            for &scheme in &spec.rates.schemes {
                let r = scheme_sum_rate(scheme, &channels, links.for_scheme(scheme))?;
                fdd.push(FddRecord { array: *a, optimized_for: *opt, carrier_ghz: f, scheme, sum_rate: r.sum_rate });
            }
        }
    }
    Ok(PointResult { point_index, point, results, pso, fdd })
}

/// Runs all realizations (in parallel) and returns them in index order.
pub fn run_campaign(spec: &ExperimentSpec) -> Result<CampaignResult> {
    spec.validate()?;
    let realizations = (0..spec.campaign.realizations)
        .into_par_iter()
        .map(|i| run_realization(spec, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignResult { realizations })
}

/// Sorted `(value, k/N)` pairs.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return invalid("empirical CDF of an empty sample");
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / n)).collect())
}

/// Mean computed over sorted values, so it does not depend on input order.
pub fn order_free_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return invalid("mean of an empty sample");
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v[0] == v[v.len() - 1] {
        return Ok(v[0]);
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub point_index: usize,
    pub point: SweepPoint,
    pub array: ArrayScheme,
    pub optimized_for: Option<RateScheme>,
    pub scheme: RateScheme,
    pub realizations: usize,
    pub mean_sum_rate: f64,
    pub mean_user_rates: Vec<f64>,
    pub sum_rate_cdf: Vec<(f64, f64)>,
    /// CDF of all per-user rates pooled over realizations.
    pub user_rate_cdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FddSummary {
    pub point_index: usize,
    pub array: ArrayScheme,
    pub optimized_for: Option<RateScheme>,
    pub carrier_ghz: f64,
    pub scheme: RateScheme,
    pub mean_sum_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub series: Vec<SeriesSummary>,
    pub fdd: Vec<FddSummary>,
}

impl CampaignSummary {
    pub fn find(
        &self,
        point_index: usize,
        array: ArrayScheme,
        optimized_for: Option<RateScheme>,
        scheme: RateScheme,
    ) -> Option<&SeriesSummary> {
        self.series.iter().find(|s| {
            s.point_index == point_index && s.array == array && s.optimized_for == optimized_for && s.scheme == scheme
        })
    }
}

type SeriesKey = (usize, ArrayScheme, Option<RateScheme>, RateScheme);

/// Means and CDFs per sweep point, array and scheme.
pub fn aggregate(result: &CampaignResult) -> Result<CampaignSummary> {
    if result.realizations.is_empty() {
        return invalid("no realizations to aggregate");
    }
    let mut groups: BTreeMap<SeriesKey, (SweepPoint, Vec<&SchemeResult>)> = BTreeMap::new();
    let mut fdd_groups: BTreeMap<(usize, ArrayScheme, Option<RateScheme>, u64, RateScheme), (f64, Vec<f64>)> =
        BTreeMap::new();
    for real in &result.realizations {
        for p in &real.points {
            for r in &p.results {
                groups
                    .entry((p.point_index, r.array, r.optimized_for, r.scheme))
                    .or_insert_with(|| (p.point, Vec::new()))
                    .1
                    .push(r);
            }
            for f in &p.fdd {
                fdd_groups
                    .entry((p.point_index, f.array, f.optimized_for, f.carrier_ghz.to_bits(), f.scheme))
                    .or_insert_with(|| (f.carrier_ghz, Vec::new()))
                    .1
                    .push(f.sum_rate);
            }
        }
    }
    let mut series = Vec::with_capacity(groups.len());
    for ((point_index, array, optimized_for, scheme), (point, rs)) in groups {
        let sums: Vec<f64> = rs.iter().map(|r| r.sum_rate).collect();
        let users = rs[0].per_user.len();
        let mean_user_rates = (0..users)
            .map(|k| order_free_mean(&rs.iter().map(|r| r.per_user[k]).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        let pooled: Vec<f64> = rs.iter().flat_map(|r| r.per_user.iter().copied()).collect();
        series.push(SeriesSummary {
            point_index,
            point,
            array,
            optimized_for,
            scheme,
            realizations: rs.len(),
            mean_sum_rate: order_free_mean(&sums)?,
            mean_user_rates,
            sum_rate_cdf: empirical_cdf(&sums)?,
            user_rate_cdf: empirical_cdf(&pooled)?,
        });
    }
    let fdd = fdd_groups
        .into_iter()
        .map(|((point_index, array, optimized_for, _, scheme), (carrier_ghz, v))| {
            Ok(FddSummary { point_index, array, optimized_for, carrier_ghz, scheme, mean_sum_rate: order_free_mean(&v)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignSummary { series, fdd })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentSpec {
        let mut spec = ExperimentSpec::default();
        spec.arrays.rows = 2;
        spec.arrays.cols = 2;
        spec.rates.users = vec![3];
        spec.rates.schemes = vec![RateScheme::UlLin, RateScheme::UlSic, RateScheme::DlLin];
        spec.pso.particles = 6;
        spec.pso.iterations = 4;
        spec.campaign.realizations = 2;
        spec.scenario.clusters = 2;
        spec.scenario.paths_per_cluster = 3;
        spec
    }

    #[test]
    fn cdf_and_mean() {
        assert_eq!(empirical_cdf(&[3.0, 1.0, 2.0]).unwrap(), vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
        assert_eq!(order_free_mean(&[0.7; 9]).unwrap(), 0.7);
        assert!(empirical_cdf(&[]).is_err());
        let a = order_free_mean(&[0.1, 0.2, 0.3, 1e10]).unwrap();
        let b = order_free_mean(&[1e10, 0.3, 0.1, 0.2]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(aggregate(&CampaignResult { realizations: vec![] }).is_err());
    }

    #[test]
    fn realization_is_deterministic_and_bounded() {
        let spec = tiny();
        let a = run_realization(&spec, 1).unwrap();
        let b = run_realization(&spec, 1).unwrap();
        assert_eq!(a, b);
        let p = &a.points[0];
        let zi = p.get(ArrayScheme::ZeroInterference, None, RateScheme::UlLin).unwrap().sum_rate;
        for r in p.results.iter().filter(|r| r.scheme == RateScheme::UlLin) {
            assert!(r.sum_rate <= zi + 1e-12);
        }
        // fixed arrays carry no PSO run, the movable one has exactly one
        assert_eq!(p.pso.len(), 1);
        assert!(p.results.iter().filter(|r| r.array.is_fixed()).all(|r| r.optimized_for.is_none()));
        let ma = p.get(ArrayScheme::Movable, Some(RateScheme::UlSic), RateScheme::UlSic).unwrap().sum_rate;
        let st = p.get(ArrayScheme::StaggeredUra, None, RateScheme::UlSic).unwrap().sum_rate;
        assert!(ma >= st);
    }

    #[test]
    fn user_sweeps_nest() {
        let spec = tiny();
        let small = spec.draw_paths(0, 2).unwrap();
        let large = spec.draw_paths(0, 5).unwrap();
        assert_eq!(large.truncated(2), small);
    }

    #[test]
    fn cross_and_fdd_identities() {
        let spec = tiny();
        let point = spec.sweep_points()[0];
        let paths = spec.draw_paths(0, point.users).unwrap();
        let grid = spec.grid.grid(point.subcarriers).unwrap();
        let wl = spec.wavelength();
        let model = channel_model(spec.scenario.kind, &paths, &grid, wl).unwrap();
        let links = spec.links(&point).unwrap();
        let same = cross_evaluate(&spec, &model, &links, RateScheme::UlLin, RateScheme::UlLin, 5).unwrap();
        assert_eq!(same.optimized_value, same.evaluated_value);
        assert_eq!(same.trace.best_value, same.optimized_value);

        let layout = same.trace.best_layout.clone();
        let f = spec.scenario.carrier_ghz * 1e9;
        let base = scheme_sum_rate(RateScheme::UlLin, &model.channels(&layout.positions), &links.ul).unwrap();
        let again = fdd_evaluate(&layout, &paths, spec.scenario.kind, &grid, f, f, RateScheme::UlLin, &links.ul).unwrap();
        assert_eq!(base, again);
        let shifted = fdd_evaluate(&layout, &paths, spec.scenario.kind, &grid, f, 2.7e9, RateScheme::UlLin, &links.ul).unwrap();
        assert!(shifted.sum_rate.is_finite());
        assert_eq!(layout, same.trace.best_layout);
    }

    #[test]
    fn campaign_aggregates_every_series() {
        let mut spec = tiny();
        spec.campaign.fdd_carriers_ghz = vec![3.0, 2.7];
        let res = run_campaign(&spec).unwrap();
        assert_eq!(res.realizations.len(), 2);
        let summary = aggregate(&res).unwrap();
        // 3 fixed + 1 movable layout, 3 schemes each, plus zero-interference for 2 uplink schemes
        assert_eq!(summary.series.len(), 4 * 3 + 2);
        assert!(summary.series.iter().all(|s| s.realizations == 2));
        assert_eq!(summary.fdd.len(), 2 * 4 * 3);
        let mut reversed = res.clone();
        reversed.realizations.reverse();
        assert_eq!(aggregate(&reversed).unwrap(), summary);
    }
}
