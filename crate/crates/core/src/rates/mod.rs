//! Sum rates with transmitter EVM distortion.
//!
//! A user transmitting with power `ρ` delivers `κρ` of useful signal and
//! `(1-κ)ρ = EVM²ρ` of distortion that is uncorrelated with the data, where
//! `κ = 1 - EVM²`. All rates are in bit/s/Hz, summed over users and averaged
//! over subcarriers.

mod downlink;
mod uplink;

use serde::{Deserialize, Serialize};

use crate::channel::SubcarrierChannels;
use crate::error::{invalid, Result};

pub use crate::linalg::logdet_hpd;
pub use downlink::{
    dl_dpc_sum_rate, dl_linear_sinr, dl_linear_sum_rate, dual_uplink_powers, duality_precoders,
    optimize_dual_powers,
    refine_precoder_powers, DpcSolution, PrecoderSet,
};
pub use uplink::{
    disturbance_covariance, high_snr_ceiling, mmse_combiner, mmse_combiners, ul_linear_sinr,
    ul_linear_sum_rate, ul_sic_per_user_rates, ul_sic_rate_at, ul_sic_sum_rate,
    zero_interference_bound,
};

/// Processing scheme a rate was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateScheme {
    /// Uplink, MMSE combining, interference treated as noise.
    UlLin,
    /// Uplink, successive interference cancellation.
    UlSic,
    /// Downlink, linear precoding.
    DlLin,
    /// Downlink, dirty paper coding.
    DlDpc,
}

impl RateScheme {
    pub const ALL: [RateScheme; 4] = [Self::UlLin, Self::UlSic, Self::DlLin, Self::DlDpc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::UlLin => "ul-lin",
            Self::UlSic => "ul-sic",
            Self::DlLin => "dl-lin",
            Self::DlDpc => "dl-dpc",
        }
    }

    pub fn is_uplink(&self) -> bool {
        matches!(self, Self::UlLin | Self::UlSic)
    }
}

impl std::fmt::Display for RateScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RateScheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .map_or_else(|| invalid(format!("unknown rate scheme {s:?}")), Ok)
    }
}

/// Sum rate of `scheme` with the default receivers/precoders: MMSE
/// combining, log-determinant SIC, duality precoders, optimized DPC.
pub fn scheme_sum_rate(
    scheme: RateScheme,
    channels: &SubcarrierChannels,
    cfg: &ImpairedLinkConfig,
) -> Result<RateReport> {
    match scheme {
        RateScheme::UlLin => ul_linear_sum_rate(channels, cfg),
        RateScheme::UlSic => ul_sic_sum_rate(channels, cfg),
        RateScheme::DlLin => dl_linear_sum_rate(channels, &duality_precoders(channels, cfg)?, cfg),
        RateScheme::DlDpc => dl_dpc_sum_rate(channels, cfg),
    }
}

/// Powers, impairment level and noise for one link evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairedLinkConfig {
    /// `powers[ν][k]`: transmit power of user `k` on subcarrier `ν` (W). In
    /// the downlink these are the dual uplink powers that shape the
    /// precoder directions.
    powers: Vec<Vec<f64>>,
    evm: f64,
    kappa: f64,
    /// Noise power per subcarrier (W).
    noise: f64,
    /// Downlink budget summed over users and subcarriers (W).
    total_power: f64,
}

impl ImpairedLinkConfig {
    pub fn new(powers: Vec<Vec<f64>>, evm: f64, noise: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&evm) {
            return invalid(format!("EVM must lie in [0, 1), got {evm}"));
        }
        if !(noise > 0.0) || !noise.is_finite() {
            return invalid(format!("noise power must be positive, got {noise}"));
        }
        if powers.is_empty() {
            return invalid("power table needs at least one subcarrier");
        }
        let k = powers[0].len();
        if powers.iter().any(|row| row.len() != k) {
            return invalid("power table rows have different user counts");
        }
        if powers.iter().flatten().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return invalid("transmit powers must be finite and non-negative");
        }
        let total_power = powers.iter().flatten().sum();
        let kappa = 1.0 - evm * evm;
        debug_assert!((kappa + evm * evm - 1.0).abs() < 1e-15);
        Ok(Self { powers, evm, kappa, noise, total_power })
    }

    /// Every user at power `power` on every subcarrier.
    pub fn uniform(users: usize, subcarriers: usize, power: f64, evm: f64, noise: f64) -> Result<Self> {
        Self::new(vec![vec![power; users]; subcarriers], evm, noise)
    }

    /// Sets the downlink budget (defaults to the sum of `powers`).
    pub fn with_total_power(mut self, total_power: f64) -> Result<Self> {
        if !(total_power > 0.0) || !total_power.is_finite() {
            return invalid(format!("total power must be positive, got {total_power}"));
        }
        self.total_power = total_power;
        Ok(self)
    }

    /// Same link with every power scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let powers = self.powers.iter().map(|r| r.iter().map(|p| p * factor).collect()).collect();
        Self::new(powers, self.evm, self.noise)?.with_total_power(self.total_power * factor)
    }

    pub fn evm(&self) -> f64 {
        self.evm
    }

    /// Fraction of useful signal power, `1 - EVM²`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn powers(&self, nu: usize) -> &[f64] {
        &self.powers[nu]
    }

    pub fn power_table(&self) -> &[Vec<f64>] {
        &self.powers
    }

    pub fn users(&self) -> usize {
        self.powers[0].len()
    }

    pub fn subcarriers(&self) -> usize {
        self.powers.len()
    }

    pub(crate) fn check(&self, channels: &SubcarrierChannels) -> Result<()> {
        if channels.subcarriers() != self.subcarriers() || channels.users() != self.users() {
            return invalid(format!(
                "link config is {}x{} (subcarriers x users), channels are {}x{}",
                self.subcarriers(),
                self.users(),
                channels.subcarriers(),
                channels.users()
            ));
        }
        Ok(())
    }
}

/// Per-user, per-subcarrier rates of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub scheme: RateScheme,
    /// `(1/S) Σ_ν Σ_k R_k[ν]`.
    pub sum_rate: f64,
    /// `rates[ν][k]`.
    pub rates: Vec<Vec<f64>>,
}

impl RateReport {
    pub(crate) fn from_rates(scheme: RateScheme, rates: Vec<Vec<f64>>) -> Self {
        let s = rates.len() as f64;
        let sum_rate = rates.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>() / s;
        Self { scheme, sum_rate, rates }
    }

    /// Subcarrier-averaged rate of each user.
    pub fn per_user(&self) -> Vec<f64> {
        let s = self.rates.len() as f64;
        let k = self.rates.first().map_or(0, Vec::len);
        (0..k).map(|i| self.rates.iter().map(|r| r[i]).sum::<f64>() / s).collect()
    }

    /// Sum over users on each subcarrier.
    pub fn per_subcarrier(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.iter().sum()).collect()
    }

    /// `(scheme, realization, subcarrier, user, rate)` rows.
    pub fn records(&self, realization: usize) -> Vec<(RateScheme, usize, usize, usize, f64)> {
        self.rates
            .iter()
            .enumerate()
            .flat_map(|(nu, row)| {
                row.iter().enumerate().map(move |(k, &r)| (self.scheme, realization, nu, k, r))
            })
            .collect()
    }

    pub fn to_csv(&self, realization: usize) -> String {
        let mut out = String::from("scheme,realization,subcarrier,user,rate\n");
        for (s, r, nu, k, v) in self.records(realization) {
            out.push_str(&format!("{s},{r},{nu},{k},{v}\n"));
        }
        out
    }
}
