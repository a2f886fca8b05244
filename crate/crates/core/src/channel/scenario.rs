//! Propagation scenarios: user drops, path loss and multipath generation.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PathParams, UserPaths};
use crate::error::{invalid, Result};
use crate::geometry::Position3;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// One LoS path plus a few wide clusters of scattered paths.
    LosDominant,
    /// Many small clusters spread over all directions.
    RichScattering,
    /// LoS-dominant geometry with a frequency-flat channel.
    Narrowband,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::LosDominant => "los-dominant",
            Self::RichScattering => "rich-scattering",
            Self::Narrowband => "narrowband",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "los-dominant" => Ok(Self::LosDominant),
            "rich-scattering" => Ok(Self::RichScattering),
            "narrowband" => Ok(Self::Narrowband),
            other => invalid(format!(
                "unknown scenario kind {other:?} (expected los-dominant, rich-scattering or narrowband)"
            )),
        }
    }
}

/// Large-scale gain model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum PathLossModel {
    /// Log-distance law `PL_dB = intercept + slope·log10(d)` with separate
    /// LoS and NLoS constants (urban micro-cell style).
    UrbanMicro {
        los_intercept_db: f64,
        los_slope: f64,
        nlos_intercept_db: f64,
        nlos_slope: f64,
    },
    /// Distance-independent gain.
    Normalized { gain_db: f64 },
}

impl PathLossModel {
    pub const URBAN_MICRO: Self = Self::UrbanMicro {
        los_intercept_db: 30.18,
        los_slope: 26.0,
        nlos_intercept_db: 34.53,
        nlos_slope: 38.0,
    };

    pub const NORMALIZED: Self = Self::Normalized { gain_db: -90.0 };

    /// Linear power gain at 3D distance `distance` (m).
    pub fn gain(&self, distance: f64, los: bool) -> Result<f64> {
        if !(distance > 0.0) || !distance.is_finite() {
            return invalid(format!("path-loss distance must be positive, got {distance}"));
        }
        let pl_db = match *self {
            Self::UrbanMicro { los_intercept_db, los_slope, nlos_intercept_db, nlos_slope } => {
                if los {
                    los_intercept_db + los_slope * distance.log10()
                } else {
                    nlos_intercept_db + nlos_slope * distance.log10()
                }
            }
            Self::Normalized { gain_db } => -gain_db,
        };
        Ok(10f64.powf(-pl_db / 10.0))
    }
}

/// Linear path gain; see [`PathLossModel::gain`].
pub fn path_loss(distance: f64, los: bool, model: &PathLossModel) -> Result<f64> {
    model.gain(distance, los)
}

/// Scenario geometry and multipath parameters. Angles are in radians,
/// distances in meters, frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub carrier_frequency: f64,
    /// Rician factor in dB: LoS power over total scattered power.
    pub rician_k_db: f64,
    pub clusters: usize,
    pub paths_per_cluster: usize,
    /// Half-width of the cluster-center azimuth interval around the LoS.
    pub cluster_azimuth_spread: f64,
    /// Half-width of the cluster-center elevation interval around the LoS.
    pub cluster_elevation_spread: f64,
    /// Half-width of the per-path spread around the cluster center.
    pub path_angle_spread: f64,
    /// Scattered delays lie in `(τ_LoS, factor·τ_LoS]`.
    pub max_delay_factor: f64,
    pub path_loss: PathLossModel,
    pub r_min: f64,
    pub r_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub bs_height: f64,
    pub user_height: f64,
}

impl ScenarioConfig {
    pub fn los_dominant() -> Self {
        Self {
            kind: ScenarioKind::LosDominant,
            carrier_frequency: 3e9,
            rician_k_db: 10.0,
            clusters: 6,
            paths_per_cluster: 20,
            cluster_azimuth_spread: 40f64.to_radians(),
            cluster_elevation_spread: 20f64.to_radians(),
            path_angle_spread: 5f64.to_radians(),
            max_delay_factor: 10.0,
            path_loss: PathLossModel::URBAN_MICRO,
            r_min: 100.0,
            r_max: 300.0,
            phi_min: -PI / 3.0,
            phi_max: PI / 3.0,
            bs_height: 4.0,
            user_height: 1.25,
        }
    }

    pub fn rich_scattering() -> Self {
        Self {
            kind: ScenarioKind::RichScattering,
            rician_k_db: 0.0,
            clusters: 100,
            paths_per_cluster: 2,
            cluster_azimuth_spread: PI,
            cluster_elevation_spread: FRAC_PI_2,
            path_loss: PathLossModel::NORMALIZED,
            ..Self::los_dominant()
        }
    }

    pub fn narrowband() -> Self {
        Self { kind: ScenarioKind::Narrowband, ..Self::los_dominant() }
    }

    pub fn for_kind(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::LosDominant => Self::los_dominant(),
            ScenarioKind::RichScattering => Self::rich_scattering(),
            ScenarioKind::Narrowband => Self::narrowband(),
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0) || !(self.r_max > self.r_min) {
            return invalid(format!(
                "user radius bounds need r_max > r_min > 0, got [{}, {}]",
                self.r_min, self.r_max
            ));
        }
        if self.phi_min > self.phi_max {
            return invalid("phi_min must not exceed phi_max");
        }
        if !(self.carrier_frequency > 0.0) {
            return invalid("carrier frequency must be positive");
        }
        if !(self.max_delay_factor >= 1.0) {
            return invalid("max delay factor must be at least 1");
        }
        for (name, v) in [
            ("cluster azimuth spread", self.cluster_azimuth_spread),
            ("cluster elevation spread", self.cluster_elevation_spread),
            ("path angle spread", self.path_angle_spread),
        ] {
            if !(v >= 0.0) {
                return invalid(format!("{name} must be non-negative"));
            }
        }
        if !self.rician_k_db.is_finite() {
            return invalid("Rician factor must be finite");
        }
        Ok(())
    }

    /// Number of scattered paths per user.
    pub fn scattered_paths(&self) -> usize {
        self.clusters * self.paths_per_cluster
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Wraps an azimuth into `[-π, π]`.
fn wrap_azimuth(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    w.clamp(-PI, PI)
}

/// Draws a user location with uniform density over the annular sector.
pub fn sample_user_position<R: Rng + ?Sized>(rng: &mut R, scenario: &ScenarioConfig) -> Position3 {
    let phi = uniform(rng, scenario.phi_min, scenario.phi_max);
    let r = uniform(rng, scenario.r_min.powi(2), scenario.r_max.powi(2)).sqrt();
    Position3::new(r * phi.cos(), r * phi.sin(), scenario.user_height - scenario.bs_height)
}

/// Generates the paths of one user located at `user` (relative to the array
/// center).
///
/// The first path is the LoS path. Scattered paths share the power
/// `P_LoS·10^(-K/10)` equally; cluster centers are drawn around the LoS
/// direction within the configured spreads and individual paths within
/// `path_angle_spread` of their cluster center.
pub fn synthesize_paths<R: Rng + ?Sized>(
    rng: &mut R,
    scenario: &ScenarioConfig,
    user: Position3,
) -> Result<UserPaths> {
    scenario.validate()?;
    let distance = user.norm();
    if !(distance > 0.0) {
        return invalid("user must not coincide with the array center");
    }
    let los_az = user.y.atan2(user.x);
    let los_el = (user.z / distance).asin();
    let los_delay = distance / SPEED_OF_LIGHT;
    let los_power = scenario.path_loss.gain(distance, true)?;

    let n_scattered = scenario.scattered_paths();
    let mut paths = Vec::with_capacity(1 + n_scattered);
    paths.push(PathParams::new(los_power.sqrt(), los_delay, los_az, los_el)?);
    if n_scattered == 0 {
        return Ok(UserPaths { position: user, paths });
    }

    let scattered_power = los_power * 10f64.powf(-scenario.rician_k_db / 10.0);
    let amplitude = (scattered_power / n_scattered as f64).sqrt();
    let (center_az, center_el) = match scenario.kind {
        ScenarioKind::RichScattering => (0.0, 0.0),
        ScenarioKind::LosDominant | ScenarioKind::Narrowband => (los_az, los_el),
    };
    let max_delay = scenario.max_delay_factor * los_delay;
    let s = scenario.path_angle_spread;
    for _ in 0..scenario.clusters {
        let az_c = center_az
            + uniform(rng, -scenario.cluster_azimuth_spread, scenario.cluster_azimuth_spread);
        let el_c = (center_el
            + uniform(rng, -scenario.cluster_elevation_spread, scenario.cluster_elevation_spread))
        .clamp(-FRAC_PI_2, FRAC_PI_2);
        for _ in 0..scenario.paths_per_cluster {
            let az = wrap_azimuth(az_c + uniform(rng, -s, s));
            let el = (el_c + uniform(rng, -s, s)).clamp(-FRAC_PI_2, FRAC_PI_2);
            // (τ_LoS, max] : sample from the top end so the lower bound is open
            let delay = max_delay - (max_delay - los_delay) * rng.random::<f64>();
            paths.push(PathParams::new(amplitude, delay, az, el)?);
        }
    }
    Ok(UserPaths { position: user, paths })
}
