//! Experiment configuration files.
//!
//! Configs are TOML with one section per stage (`scenario`, `grid`,
//! `arrays`, `rates`, `pso`, `campaign`). Every physical key carries its unit
//! in the name. Omitted keys take the defaults of [`ExperimentSpec::default`]
//! (or of the chosen scenario kind); the resolved spec written by
//! [`emit_manifest`] parses back to the identical spec.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::ArrayScheme;
use crate::channel::{OfdmGrid, PathLossModel, ScenarioConfig, ScenarioKind};
use crate::error::{Error, Result};
use crate::optimizer::PsoConfig;
use crate::rates::RateScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathLossKind {
    UrbanMicro,
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    pub carrier_ghz: f64,
    pub rician_k_db: f64,
    pub clusters: usize,
    pub paths_per_cluster: usize,
    pub cluster_azimuth_spread_deg: f64,
    pub cluster_elevation_spread_deg: f64,
    pub path_angle_spread_deg: f64,
    pub max_delay_factor: f64,
    pub path_loss: PathLossKind,
    /// Only used by the normalized path-loss model.
    pub normalized_gain_db: f64,
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    pub bs_height_m: f64,
    pub user_height_m: f64,
}

impl ScenarioSection {
    pub fn for_kind(kind: ScenarioKind) -> Self {
        let sc = ScenarioConfig::for_kind(kind);
        let (path_loss, normalized_gain_db) = match sc.path_loss {
            PathLossModel::Normalized { gain_db } => (PathLossKind::Normalized, gain_db),
            PathLossModel::UrbanMicro { .. } => (PathLossKind::UrbanMicro, -90.0),
        };
        Self {
            kind,
            carrier_ghz: sc.carrier_frequency / 1e9,
            rician_k_db: sc.rician_k_db,
            clusters: sc.clusters,
            paths_per_cluster: sc.paths_per_cluster,
            cluster_azimuth_spread_deg: sc.cluster_azimuth_spread.to_degrees().round(),
            cluster_elevation_spread_deg: sc.cluster_elevation_spread.to_degrees().round(),
            path_angle_spread_deg: sc.path_angle_spread.to_degrees().round(),
            max_delay_factor: sc.max_delay_factor,
            path_loss,
            normalized_gain_db,
            r_min_m: sc.r_min,
            r_max_m: sc.r_max,
            phi_min_deg: -60.0,
            phi_max_deg: 60.0,
            bs_height_m: sc.bs_height,
            user_height_m: sc.user_height,
        }
    }

    /// The scenario in SI units.
    pub fn to_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            kind: self.kind,
            carrier_frequency: self.carrier_ghz * 1e9,
            rician_k_db: self.rician_k_db,
            clusters: self.clusters,
            paths_per_cluster: self.paths_per_cluster,
            cluster_azimuth_spread: self.cluster_azimuth_spread_deg.to_radians(),
            cluster_elevation_spread: self.cluster_elevation_spread_deg.to_radians(),
            path_angle_spread: self.path_angle_spread_deg.to_radians(),
            max_delay_factor: self.max_delay_factor,
            path_loss: match self.path_loss {
                PathLossKind::UrbanMicro => PathLossModel::URBAN_MICRO,
                PathLossKind::Normalized => PathLossModel::Normalized { gain_db: self.normalized_gain_db },
            },
            r_min: self.r_min_m,
            r_max: self.r_max_m,
            phi_min: self.phi_min_deg.to_radians(),
            phi_max: self.phi_max_deg.to_radians(),
            bs_height: self.bs_height_m,
            user_height: self.user_height_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Subcarrier counts to sweep.
    pub subcarriers: Vec<usize>,
    pub spacing_khz: f64,
}

impl GridSection {
    pub fn grid(&self, subcarriers: usize) -> Result<OfdmGrid> {
        OfdmGrid::new(subcarriers, self.spacing_khz * 1e3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraysSection {
    pub rows: usize,
    pub cols: usize,
    pub schemes: Vec<ArrayScheme>,
    /// Side of each movement square, in wavelengths.
    pub region_side_wavelengths: f64,
    /// Element spacing of the sparse UPA and aperture of the staggered URA,
    /// in wavelengths.
    pub sparse_spacing_wavelengths: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    /// Schemes every layout is evaluated with.
    pub schemes: Vec<RateScheme>,
    /// Objectives the movable array is optimized for; each gives its own
    /// layout, evaluated under every scheme in `schemes`.
    pub optimize_for: Vec<RateScheme>,
    pub evm: Vec<f64>,
    pub users: Vec<usize>,
    /// Noise power over `noise_bandwidth_mhz`.
    pub noise_pw: f64,
    pub noise_bandwidth_mhz: f64,
    pub ul_psd_mw_per_mhz: f64,
    pub dl_psd_mw_per_mhz: f64,
}

impl RatesSection {
    /// Noise power per subcarrier (W).
    pub fn noise_per_subcarrier(&self, spacing_hz: f64) -> f64 {
        self.noise_pw * 1e-12 * spacing_hz / (self.noise_bandwidth_mhz * 1e6)
    }

    /// Uplink transmit power per user and subcarrier (W).
    pub fn ul_power_per_subcarrier(&self, spacing_hz: f64) -> f64 {
        self.ul_psd_mw_per_mhz * 1e-9 * spacing_hz
    }

    /// Downlink power per subcarrier summed over users (W).
    pub fn dl_power_per_subcarrier(&self, spacing_hz: f64) -> f64 {
        self.dl_psd_mw_per_mhz * 1e-9 * spacing_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoSection {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub velocity_clamp: f64,
    pub penalty_weight_per_m2: f64,
}

impl PsoSection {
    pub fn to_config(&self, seed: u64) -> PsoConfig {
        PsoConfig {
            particles: self.particles,
            iterations: self.iterations,
            inertia: self.inertia,
            cognitive: self.cognitive,
            social: self.social,
            velocity_clamp: self.velocity_clamp,
            penalty_weight: self.penalty_weight_per_m2,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub realizations: usize,
    pub seed: u64,
    /// Carriers at which every layout is re-evaluated with the same paths.
    pub fdd_carriers_ghz: Vec<f64>,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSection,
    pub grid: GridSection,
    pub arrays: ArraysSection,
    pub rates: RatesSection,
    pub pso: PsoSection,
    pub campaign: CampaignSection,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let pso = PsoConfig::default();
        Self {
            scenario: ScenarioSection::for_kind(ScenarioKind::LosDominant),
            grid: GridSection { subcarriers: vec![1], spacing_khz: 15.0 },
            arrays: ArraysSection {
                rows: 4,
                cols: 4,
                schemes: ArrayScheme::ALL.to_vec(),
                region_side_wavelengths: 5.0,
                sparse_spacing_wavelengths: 20.0 / 3.0,
            },
            rates: RatesSection {
                schemes: vec![RateScheme::UlSic, RateScheme::UlLin],
                optimize_for: vec![RateScheme::UlSic],
                evm: vec![0.02],
                users: vec![10],
                noise_pw: 3.98,
                noise_bandwidth_mhz: 100.0,
                ul_psd_mw_per_mhz: 1.0,
                dl_psd_mw_per_mhz: 20.0,
            },
            pso: PsoSection {
                particles: pso.particles,
                iterations: pso.iterations,
                inertia: pso.inertia,
                cognitive: pso.cognitive,
                social: pso.social,
                velocity_clamp: pso.velocity_clamp,
                penalty_weight_per_m2: pso.penalty_weight,
            },
            campaign: CampaignSection { realizations: 100, seed: 1, fdd_carriers_ghz: Vec::new() },
        }
    }
}

impl ExperimentSpec {
    /// Reduced run size for quick runs: 50 particles, 30 iterations, 20
    /// realizations.
    pub fn desk_scale(mut self) -> Self {
        self.pso.particles = 50;
        self.pso.iterations = 30;
        self.campaign.realizations = 20;
        self
    }

    pub fn antennas(&self) -> usize {
        self.arrays.rows * self.arrays.cols
    }

    pub fn max_users(&self) -> usize {
        self.rates.users.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg))
            }
        }
        let s = &self.scenario;
        check(s.carrier_ghz > 0.0, format!("scenario.carrier_ghz must be > 0 (got {})", s.carrier_ghz))?;
        check(s.rician_k_db.is_finite(), "scenario.rician_k_db must be finite".into())?;
        check(s.max_delay_factor >= 1.0, format!("scenario.max_delay_factor must be >= 1 (got {})", s.max_delay_factor))?;
        check(s.r_min_m > 0.0, format!("scenario.r_min_m must be > 0 (got {})", s.r_min_m))?;
        check(s.r_max_m > s.r_min_m, format!("scenario.r_max_m must be > r_min_m (got {} <= {})", s.r_max_m, s.r_min_m))?;
        check(
            s.phi_min_deg <= s.phi_max_deg && s.phi_min_deg >= -180.0 && s.phi_max_deg <= 180.0,
            format!("scenario.phi_min_deg <= phi_max_deg within [-180, 180] (got {}, {})", s.phi_min_deg, s.phi_max_deg),
        )?;
        for (k, v) in [
            ("cluster_azimuth_spread_deg", s.cluster_azimuth_spread_deg),
            ("cluster_elevation_spread_deg", s.cluster_elevation_spread_deg),
            ("path_angle_spread_deg", s.path_angle_spread_deg),
        ] {
            check(v >= 0.0 && v.is_finite(), format!("scenario.{k} must be >= 0 (got {v})"))?;
        }
        check(s.normalized_gain_db.is_finite(), "scenario.normalized_gain_db must be finite".into())?;
        check(
            s.bs_height_m != s.user_height_m || s.r_min_m > 0.0,
            "users must not coincide with the array".into(),
        )?;

        check(!self.grid.subcarriers.is_empty(), "grid.subcarriers must not be empty".into())?;
        check(self.grid.subcarriers.iter().all(|&v| v >= 1), "grid.subcarriers entries must be >= 1".into())?;
        check(self.grid.spacing_khz > 0.0, format!("grid.spacing_khz must be > 0 (got {})", self.grid.spacing_khz))?;

        let a = &self.arrays;
        check(a.rows >= 1 && a.cols >= 1, format!("arrays.rows and arrays.cols must be >= 1 (got {}x{})", a.rows, a.cols))?;
        check(!a.schemes.is_empty(), "arrays.schemes must not be empty".into())?;
        check(a.region_side_wavelengths > 0.0, format!("arrays.region_side_wavelengths must be > 0 (got {})", a.region_side_wavelengths))?;
        check(a.sparse_spacing_wavelengths > 0.0, format!("arrays.sparse_spacing_wavelengths must be > 0 (got {})", a.sparse_spacing_wavelengths))?;

        let r = &self.rates;
        check(!r.schemes.is_empty(), "rates.schemes must not be empty".into())?;
        check(
            !a.schemes.contains(&ArrayScheme::Movable) || !r.optimize_for.is_empty(),
            "rates.optimize_for must not be empty when the movable array is requested".into(),
        )?;
        check(!r.evm.is_empty(), "rates.evm must not be empty".into())?;
        for &e in &r.evm {
            check((0.0..1.0).contains(&e), format!("rates.evm entries must lie in [0, 1) (got {e})"))?;
        }
        check(!r.users.is_empty(), "rates.users must not be empty".into())?;
        check(r.users.iter().all(|&k| k >= 1), "rates.users entries must be >= 1".into())?;
        check(r.noise_pw > 0.0 && r.noise_pw.is_finite(), format!("rates.noise_pw must be > 0 (got {})", r.noise_pw))?;
        check(r.noise_bandwidth_mhz > 0.0, format!("rates.noise_bandwidth_mhz must be > 0 (got {})", r.noise_bandwidth_mhz))?;
        check(r.ul_psd_mw_per_mhz > 0.0, format!("rates.ul_psd_mw_per_mhz must be > 0 (got {})", r.ul_psd_mw_per_mhz))?;
        check(r.dl_psd_mw_per_mhz > 0.0, format!("rates.dl_psd_mw_per_mhz must be > 0 (got {})", r.dl_psd_mw_per_mhz))?;

        let p = &self.pso;
        check(p.particles >= 1, "pso.particles must be >= 1".into())?;
        for (k, v) in [
            ("inertia", p.inertia),
            ("cognitive", p.cognitive),
            ("social", p.social),
            ("velocity_clamp", p.velocity_clamp),
            ("penalty_weight_per_m2", p.penalty_weight_per_m2),
        ] {
            check(v >= 0.0 && v.is_finite(), format!("pso.{k} must be >= 0 (got {v})"))?;
        }

        let c = &self.campaign;
        check(c.realizations >= 1, "campaign.realizations must be >= 1".into())?;
        check(c.seed <= i64::MAX as u64, format!("campaign.seed must be <= {} (got {})", i64::MAX, c.seed))?;
        for &f in &c.fdd_carriers_ghz {
            check(f > 0.0 && f.is_finite(), format!("campaign.fdd_carriers_ghz entries must be > 0 (got {f})"))?;
        }
        Ok(())
    }
}

/// Short override names accepted by [`apply_override`].
pub const ALIASES: [(&str, &str); 5] = [
    ("K", "rates.users"),
    ("S", "grid.subcarriers"),
    ("evm", "rates.evm"),
    ("N_pt", "pso.particles"),
    ("M", "arrays.rows/arrays.cols"),
];

fn to_table(spec: &ExperimentSpec) -> Table {
    Table::try_from(spec).expect("spec serializes to a TOML table")
}

fn unknown_keys(user: &Table, defaults: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in user {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (defaults.get(k), v) {
            (None, _) => out.push(path),
            (Some(Value::Table(d)), Value::Table(u)) => unknown_keys(u, d, &path, out),
            _ => {}
        }
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(table: &mut Table, path: &str, value: Value, defaults: &Table) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    let mut def = defaults;
    for p in &parts[..parts.len() - 1] {
        def = match def.get(*p) {
            Some(Value::Table(t)) => t,
            _ => return Err(Error::Config(format!("unknown config key {path:?}"))),
        };
    }
    let leaf = parts[parts.len() - 1];
    let Some(default) = def.get(leaf) else {
        return Err(Error::Config(format!("unknown config key {path:?}")));
    };
    let value = match (default, value) {
        (Value::Array(_), v @ Value::Array(_)) => v,
        (Value::Array(_), v) => Value::Array(vec![v]),
        (_, v) => v,
    };
    let mut node = table;
    for p in &parts[..parts.len() - 1] {
        node = match node.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(t) => t,
            _ => return Err(Error::Config(format!("config key {p:?} is not a section"))),
        };
    }
    node.insert(leaf.to_string(), value);
    Ok(())
}

/// Applies a `key=value` override to a raw config table. Keys are dotted
/// paths (`rates.evm=0.1`) or one of the [`ALIASES`]. A scalar given for a
/// list key becomes a one-element list.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(Error::Config(format!("override {assignment:?} is not of the form key=value")));
    };
    let (key, raw) = (key.trim(), raw.trim());
    let defaults = to_table(&ExperimentSpec::default());
    let value = parse_value(raw);
    if key == "M" {
        let m = value
            .as_integer()
            .filter(|&m| m >= 1)
            .ok_or_else(|| Error::Config(format!("M must be a positive integer (got {raw})")))?;
        // square arrays when possible, otherwise a single row
        let side = (m as f64).sqrt().round() as i64;
        let (rows, cols) = if side * side == m { (side, side) } else { (1, m) };
        set_path(table, "arrays.rows", Value::Integer(rows), &defaults)?;
        return set_path(table, "arrays.cols", Value::Integer(cols), &defaults);
    }
    let path = ALIASES.iter().find(|(a, _)| *a == key).map_or(key, |(_, p)| p);
    set_path(table, path, value, &defaults)
}

/// Resolves config text plus overrides into a validated spec.
///
/// Defaults come from [`ExperimentSpec::default`] (optionally at desk scale);
/// when the file picks a scenario kind, the scenario defaults of that kind
/// apply.
pub fn parse_config_with(text: &str, overrides: &[String], desk_scale: bool) -> Result<ExperimentSpec> {
    let mut user: Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut user, o)?;
    }
    let mut base = ExperimentSpec::default();
    if desk_scale {
        base = base.desk_scale();
    }
    let kind = user
        .get("scenario")
        .and_then(|s| s.get("kind"))
        .map(|k| {
            k.as_str()
                .ok_or_else(|| Error::Config("scenario.kind must be a string".into()))
                .and_then(|s| s.parse::<ScenarioKind>().map_err(|e| Error::Config(e.to_string())))
        })
        .transpose()?;
    if let Some(kind) = kind {
        base.scenario = ScenarioSection::for_kind(kind);
    }
    let mut table = to_table(&base);
    let mut unknown = Vec::new();
    unknown_keys(&user, &table, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown config keys: {}", unknown.join(", "))));
    }
    merge(&mut table, user);
    let spec: ExperimentSpec = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    parse_config_with(text, &[], false)
}

/// The resolved spec as config text.
pub fn emit_manifest(spec: &ExperimentSpec) -> String {
    toml::to_string(spec).expect("spec serializes to TOML")
}
