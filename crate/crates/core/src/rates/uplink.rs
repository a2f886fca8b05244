use super::{ImpairedLinkConfig, RateReport, RateScheme};
use crate::channel::SubcarrierChannels;
use crate::error::{invalid, Error, Result};
use crate::linalg::{add_outer, inner, weighted_gram, CMat, CVec, Cholesky};

/// Interference-plus-distortion-plus-noise covariance seen by user `k` on
/// subcarrier `nu`:
/// `Σ_{i≠k} ρᵢ hᵢhᵢᴴ + (1-κ)ρₖ hₖhₖᴴ + σ²I`.
pub fn disturbance_covariance(
    channels: &SubcarrierChannels,
    nu: usize,
    k: usize,
    cfg: &ImpairedLinkConfig,
) -> Result<CMat> {
    cfg.check(channels)?;
    if k >= channels.users() || nu >= channels.subcarriers() {
        return invalid(format!("user {k} / subcarrier {nu} out of range"));
    }
    let mut weights = cfg.powers(nu).to_vec();
    weights[k] *= 1.0 - cfg.kappa();
    Ok(weighted_gram(&channels.matrices[nu], &weights, 1.0, cfg.noise()))
}

/// `Q⁻¹ hₖ`, the SINR-maximizing combiner of user `k`.
pub fn mmse_combiner(
    channels: &SubcarrierChannels,
    nu: usize,
    k: usize,
    cfg: &ImpairedLinkConfig,
) -> Result<CVec> {
    let q = disturbance_covariance(channels, nu, k, cfg)?;
    Ok(Cholesky::new(&q)?.solve(&channels.user(nu, k)))
}

/// MMSE combiner directions for all users on one subcarrier.
///
/// Uses `R⁻¹hₖ` with `R = Σᵢ ρᵢhᵢhᵢᴴ + σ²I`; since `Qₖ = R - κρₖhₖhₖᴴ`,
/// Sherman-Morrison gives `Qₖ⁻¹hₖ = R⁻¹hₖ / (1 - κρₖhₖᴴR⁻¹hₖ)`, the same
/// direction with one factorization per subcarrier.
pub fn mmse_combiners(
    channels: &SubcarrierChannels,
    nu: usize,
    cfg: &ImpairedLinkConfig,
) -> Result<Vec<CVec>> {
    cfg.check(channels)?;
    let h = &channels.matrices[nu];
    let r = weighted_gram(h, cfg.powers(nu), 1.0, cfg.noise());
    let chol = Cholesky::new(&r)?;
    Ok((0..h.ncols()).map(|k| chol.solve(&h.column(k).into_owned())).collect())
}

/// Uplink SINR of user `k` with an arbitrary combiner `w`.
pub fn ul_linear_sinr(
    w: &CVec,
    channels: &SubcarrierChannels,
    nu: usize,
    k: usize,
    cfg: &ImpairedLinkConfig,
) -> Result<f64> {
    cfg.check(channels)?;
    let wn = w.norm_squared();
    if !(wn > 0.0) {
        return invalid("combining vector must be nonzero");
    }
    Ok(sinr_with_combiner(w, wn, &channels.matrices[nu], cfg.powers(nu), k, cfg))
}

fn sinr_with_combiner(
    w: &CVec,
    w_norm_sq: f64,
    h: &CMat,
    powers: &[f64],
    k: usize,
    cfg: &ImpairedLinkConfig,
) -> f64 {
    let kappa = cfg.kappa();
    let mut signal = 0.0;
    let mut disturbance = cfg.noise() * w_norm_sq;
    for (i, &rho) in powers.iter().enumerate() {
        let g = rho * w.dotc(&h.column(i)).norm_sqr();
        if i == k {
            signal = kappa * g;
            disturbance += (1.0 - kappa) * g;
        } else {
            disturbance += g;
        }
    }
    signal / disturbance
}

/// Uplink sum rate with per-user MMSE combining.
pub fn ul_linear_sum_rate(channels: &SubcarrierChannels, cfg: &ImpairedLinkConfig) -> Result<RateReport> {
    cfg.check(channels)?;
    let mut rates = Vec::with_capacity(channels.subcarriers());
    for nu in 0..channels.subcarriers() {
        let h = &channels.matrices[nu];
        let combiners = mmse_combiners(channels, nu, cfg)?;
        rates.push(
            combiners
                .iter()
                .enumerate()
                .map(|(k, w)| {
                    let wn = w.norm_squared();
                    if wn == 0.0 {
                        return 0.0;
                    }
                    (1.0 + sinr_with_combiner(w, wn, h, cfg.powers(nu), k, cfg)).log2()
                })
                .collect(),
        );
    }
    Ok(RateReport::from_rates(RateScheme::UlLin, rates))
}

/// SIC sum rate on one subcarrier:
/// `log₂det(I + HDHᴴ/σ²) - log₂det(I + (1-κ)HDHᴴ/σ²)`.
pub fn ul_sic_rate_at(channels: &SubcarrierChannels, nu: usize, cfg: &ImpairedLinkConfig) -> Result<f64> {
    sic_rate_with_powers(&channels.matrices[nu], cfg.powers(nu), cfg.kappa(), cfg.noise())
}

pub(crate) fn sic_rate_with_powers(h: &CMat, powers: &[f64], kappa: f64, noise: f64) -> Result<f64> {
    let full = weighted_gram(h, powers, 1.0 / noise, 1.0);
    let ideal = Cholesky::new(&full)?.log2_det();
    if kappa == 1.0 {
        return Ok(ideal);
    }
    let dist = weighted_gram(h, powers, (1.0 - kappa) / noise, 1.0);
    Ok(ideal - Cholesky::new(&dist)?.log2_det())
}

/// Uplink sum rate with successive interference cancellation.
///
/// The sum is evaluated with the log-determinant expression; the per-user
/// split stored in the report follows ascending-index decoding (see
/// [`ul_sic_per_user_rates`]) and sums to the same value.
pub fn ul_sic_sum_rate(channels: &SubcarrierChannels, cfg: &ImpairedLinkConfig) -> Result<RateReport> {
    cfg.check(channels)?;
    let order: Vec<usize> = (0..channels.users()).collect();
    let mut sum = 0.0;
    let mut rates = Vec::with_capacity(channels.subcarriers());
    for nu in 0..channels.subcarriers() {
        sum += ul_sic_rate_at(channels, nu, cfg)?;
        rates.push(sic_chain(&channels.matrices[nu], cfg.powers(nu), cfg, &order)?);
    }
    let mut report = RateReport::from_rates(RateScheme::UlSic, rates);
    report.sum_rate = sum / channels.subcarriers() as f64;
    Ok(report)
}

/// Rates along a decoding order on one subcarrier; `out[k]` is user `k`'s
/// rate.
///
/// The user decoded at position `t` sees the data of users decoded after it
/// plus the distortion of every user, which is never cancelled:
/// `log₂(1 + κρₖhₖᴴ(κΣ_{later}ρᵢhᵢhᵢᴴ + (1-κ)Σ_{all}ρᵢhᵢhᵢᴴ + σ²I)⁻¹hₖ)`.
pub(crate) fn sic_chain(h: &CMat, powers: &[f64], cfg: &ImpairedLinkConfig, order: &[usize]) -> Result<Vec<f64>> {
    let kappa = cfg.kappa();
    let k = h.ncols();
    // start from the covariance seen by the last decoded user and walk back
    let mut cov = weighted_gram(h, powers, 1.0 - kappa, cfg.noise());
    let mut out = vec![0.0; k];
    for &user in order.iter().rev() {
        let hk = h.column(user).into_owned();
        let q = Cholesky::new(&cov)?.quad_form_inv(&hk);
        out[user] = (1.0 + kappa * powers[user] * q).log2();
        add_outer(&mut cov, &hk, kappa * powers[user]);
    }
    Ok(out)
}

/// Per-user SIC rates (averaged over subcarriers) for a decoding order.
pub fn ul_sic_per_user_rates(
    channels: &SubcarrierChannels,
    cfg: &ImpairedLinkConfig,
    decode_order: &[usize],
) -> Result<Vec<f64>> {
    cfg.check(channels)?;
    let k = channels.users();
    let mut seen = vec![false; k];
    if decode_order.len() != k
        || decode_order.iter().any(|&u| u >= k || std::mem::replace(&mut seen[u], true))
    {
        return invalid(format!("decode order {decode_order:?} is not a permutation of 0..{k}"));
    }
    let mut acc = vec![0.0; k];
    for nu in 0..channels.subcarriers() {
        let r = sic_chain(&channels.matrices[nu], cfg.powers(nu), cfg, decode_order)?;
        acc.iter_mut().zip(r).for_each(|(a, v)| *a += v);
    }
    let s = channels.subcarriers() as f64;
    Ok(acc.into_iter().map(|v| v / s).collect())
}

/// High-SNR limit `K·log₂(1/EVM²)` of the SIC sum rate.
pub fn high_snr_ceiling(users: usize, evm: f64) -> Result<f64> {
    if evm == 0.0 {
        return Err(Error::InvalidArgument(
            "EVM = 0 gives an unbounded high-SNR rate".into(),
        ));
    }
    if !(evm > 0.0 && evm <= 1.0) {
        return invalid(format!("EVM must lie in (0, 1], got {evm}"));
    }
    Ok(users as f64 * (1.0 / (evm * evm)).log2())
}

/// Interference-free bound: each user decoded with a matched filter as if
/// alone, `log₂(1 + κρₖ‖hₖ‖² / ((1-κ)ρₖ‖hₖ‖² + σ²))`.
///
/// Reported under the [`RateScheme::UlLin`] tag.
pub fn zero_interference_bound(channels: &SubcarrierChannels, cfg: &ImpairedLinkConfig) -> Result<RateReport> {
    cfg.check(channels)?;
    let kappa = cfg.kappa();
    let rates = (0..channels.subcarriers())
        .map(|nu| {
            let h = &channels.matrices[nu];
            cfg.powers(nu)
                .iter()
                .enumerate()
                .map(|(k, &rho)| {
                    let g = rho * h.column(k).norm_squared();
                    (1.0 + kappa * g / ((1.0 - kappa) * g + cfg.noise())).log2()
                })
                .collect()
        })
        .collect();
    Ok(RateReport::from_rates(RateScheme::UlLin, rates))
}

#[allow(dead_code)]
pub(crate) fn rayleigh_quotient_sinr(w: &CVec, h: &CVec, q: &CMat, kappa_rho: f64) -> f64 {
    let num = kappa_rho * inner(w, h).norm_sqr();
    let den = inner(w, &(q * w)).re;
    num / den
}
