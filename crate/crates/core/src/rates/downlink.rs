use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::uplink::{mmse_combiners, sic_chain, sic_rate_with_powers};
use super::{ImpairedLinkConfig, RateReport, RateScheme};
use crate::channel::SubcarrierChannels;
use crate::error::{invalid, Result};
use crate::linalg::{weighted_gram, CMat, CVec, Cholesky};

/// Downlink precoding vectors, `vectors[ν][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub vectors: Vec<Vec<CVec>>,
}

impl PrecoderSet {
    /// `Σ_ν Σ_k ‖p_k[ν]‖²`.
    pub fn total_power(&self) -> f64 {
        self.vectors.iter().flatten().map(|p| p.norm_squared()).sum()
    }

    /// `‖p_k[ν]‖²` table.
    pub fn power_table(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|r| r.iter().map(|p| p.norm_squared()).collect()).collect()
    }

    fn check(&self, channels: &SubcarrierChannels) -> Result<()> {
        let ok = self.vectors.len() == channels.subcarriers()
            && self.vectors.iter().all(|r| {
                r.len() == channels.users() && r.iter().all(|p| p.len() == channels.antennas())
            });
        if !ok {
            return invalid("precoder dimensions do not match the channels");
        }
        Ok(())
    }
}

/// Downlink SINR of user `k` on subcarrier `nu`.
pub fn dl_linear_sinr(
    precoders: &PrecoderSet,
    channels: &SubcarrierChannels,
    nu: usize,
    k: usize,
    cfg: &ImpairedLinkConfig,
) -> Result<f64> {
    precoders.check(channels)?;
    if k >= channels.users() || nu >= channels.subcarriers() {
        return invalid(format!("user {k} / subcarrier {nu} out of range"));
    }
    Ok(sinr_at(&precoders.vectors[nu], &channels.matrices[nu], k, cfg.kappa(), cfg.noise()))
}

fn sinr_at(p: &[CVec], h: &CMat, k: usize, kappa: f64, noise: f64) -> f64 {
    let hk = h.column(k);
    let mut signal = 0.0;
    let mut disturbance = noise;
    for (i, pi) in p.iter().enumerate() {
        let g = hk.dotc(pi).norm_sqr();
        if i == k {
            signal = kappa * g;
            disturbance += (1.0 - kappa) * g;
        } else {
            disturbance += g;
        }
    }
    signal / disturbance
}

/// Downlink sum rate with linear precoding. The precoders must respect the
/// configured total power budget.
pub fn dl_linear_sum_rate(
    channels: &SubcarrierChannels,
    precoders: &PrecoderSet,
    cfg: &ImpairedLinkConfig,
) -> Result<RateReport> {
    precoders.check(channels)?;
    let used = precoders.total_power();
    if used > cfg.total_power() * (1.0 + 1e-9) {
        return invalid(format!(
            "precoders use {used:e} W, budget is {:e} W",
            cfg.total_power()
        ));
    }
    Ok(RateReport::from_rates(RateScheme::DlLin, linear_rates(channels, precoders, cfg)))
}

fn linear_rates(channels: &SubcarrierChannels, precoders: &PrecoderSet, cfg: &ImpairedLinkConfig) -> Vec<Vec<f64>> {
    (0..channels.subcarriers())
        .map(|nu| {
            (0..channels.users())
                .map(|k| {
                    let s = sinr_at(&precoders.vectors[nu], &channels.matrices[nu], k, cfg.kappa(), cfg.noise());
                    (1.0 + s).log2()
                })
                .collect()
        })
        .collect()
}

/// Precoders along the uplink MMSE combiner directions.
///
/// The power of `(k, ν)` is proportional to the uplink power `ρ_k[ν]` of the
/// configuration (uniform if all are zero), scaled so the precoders use the
/// whole budget.
pub fn duality_precoders(channels: &SubcarrierChannels, cfg: &ImpairedLinkConfig) -> Result<PrecoderSet> {
    cfg.check(channels)?;
    let ul_total: f64 = cfg.power_table().iter().flatten().sum();
    let n = (channels.users() * channels.subcarriers()) as f64;
    let mut vectors = Vec::with_capacity(channels.subcarriers());
    for nu in 0..channels.subcarriers() {
        // the direction is only meaningful where the user transmits; fall
        // back to uniform weights so that a zero-power user still gets one
        let dir_cfg;
        let dir_cfg = if ul_total > 0.0 {
            cfg
        } else {
            dir_cfg = ImpairedLinkConfig::uniform(channels.users(), channels.subcarriers(), 1.0, cfg.evm(), cfg.noise())?;
            &dir_cfg
        };
        let combiners = mmse_combiners(channels, nu, dir_cfg)?;
        let row = combiners
            .into_iter()
            .enumerate()
            .map(|(k, w)| {
                let share = if ul_total > 0.0 { cfg.powers(nu)[k] / ul_total } else { 1.0 / n };
                let norm = w.norm();
                if norm == 0.0 || share == 0.0 {
                    CVec::zeros(channels.antennas())
                } else {
                    w * Complex64::new((share * cfg.total_power()).sqrt() / norm, 0.0)
                }
            })
            .collect();
        vectors.push(row);
    }
    Ok(PrecoderSet { vectors })
}

/// Coordinate ascent on the power scalars of fixed precoder directions.
///
/// Each sweep tries scaling one `(k, ν)` power up or down, renormalizes the
/// set to the budget and keeps the change if the sum rate improves; the step
/// shrinks when a sweep makes no progress. The sum rate never decreases.
pub fn refine_precoder_powers(
    channels: &SubcarrierChannels,
    precoders: &PrecoderSet,
    cfg: &ImpairedLinkConfig,
    sweeps: usize,
) -> Result<PrecoderSet> {
    precoders.check(channels)?;
    let budget = cfg.total_power();
    let rate = |p: &PrecoderSet| -> f64 {
        linear_rates(channels, p, cfg).iter().flatten().sum::<f64>()
    };
    let rescale = |p: &mut PrecoderSet| {
        let t = p.total_power();
        if t > 0.0 {
            let c = Complex64::new((budget / t).sqrt(), 0.0);
            p.vectors.iter_mut().flatten().for_each(|v| *v *= c);
        }
    };
    let mut best = precoders.clone();
    rescale(&mut best);
    let mut best_rate = rate(&best);
    let mut step = 2.0_f64;
    for _ in 0..sweeps {
        let mut improved = false;
        for nu in 0..channels.subcarriers() {
            for k in 0..channels.users() {
                if best.vectors[nu][k].norm_squared() == 0.0 {
                    continue;
                }
                for factor in [step, 1.0 / step] {
                    let mut trial = best.clone();
                    trial.vectors[nu][k] *= Complex64::new(factor.sqrt(), 0.0);
                    rescale(&mut trial);
                    let r = rate(&trial);
                    if r > best_rate {
                        best = trial;
                        best_rate = r;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step = step.sqrt();
            if step < 1.0 + 1e-6 {
                break;
            }
        }
    }
    Ok(best)
}

/// Uplink powers that reproduce the downlink SINRs of `precoders` with the
/// combiners set to the precoder directions (classical uplink-downlink
/// duality, applied per subcarrier). The returned table has the same total
/// power per subcarrier as the precoders.
pub fn dual_uplink_powers(
    channels: &SubcarrierChannels,
    precoders: &PrecoderSet,
    cfg: &ImpairedLinkConfig,
) -> Result<Vec<Vec<f64>>> {
    precoders.check(channels)?;
    let noise = cfg.noise();
    let mut out = Vec::with_capacity(channels.subcarriers());
    for nu in 0..channels.subcarriers() {
        let h = &channels.matrices[nu];
        let p = &precoders.vectors[nu];
        let active: Vec<usize> = (0..p.len()).filter(|&k| p[k].norm_squared() > 0.0).collect();
        let mut q = vec![0.0; p.len()];
        if !active.is_empty() {
            let n = active.len();
            // classical (distortion-free) SINR of each active user
            let gain = |k: usize, i: usize| h.column(k).dotc(&p[i]).norm_sqr() / p[i].norm_squared();
            let mut a = DMatrix::<f64>::zeros(n, n);
            for (r, &k) in active.iter().enumerate() {
                let interference: f64 = active.iter().filter(|&&i| i != k).map(|&i| h.column(k).dotc(&p[i]).norm_sqr()).sum();
                let sinr = h.column(k).dotc(&p[k]).norm_sqr() / (interference + noise);
                if sinr == 0.0 {
                    continue;
                }
                a[(r, r)] = gain(k, k) / sinr;
                for (c, &i) in active.iter().enumerate() {
                    if i != k {
                        // interference of user i on the combiner of user k
                        a[(r, c)] = -gain(i, k);
                    }
                }
            }
            let rhs = DVector::<f64>::from_element(n, noise);
            if let Some(sol) = a.lu().solve(&rhs) {
                for (r, &k) in active.iter().enumerate() {
                    q[k] = sol[r].max(0.0);
                }
            }
        }
        out.push(q);
    }
    Ok(out)
}

/// Optimized dual uplink power allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpcSolution {
    /// `powers[ν][k]`, summing to at most the budget.
    pub powers: Vec<Vec<f64>>,
    pub report: RateReport,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_ITERATIONS: usize = 500;
const REL_TOL: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;

struct DualObjective<'a> {
    channels: &'a SubcarrierChannels,
    budget: f64,
    kappa: f64,
    noise: f64,
}

impl DualObjective<'_> {
    fn value(&self, x: &[Vec<f64>]) -> Result<f64> {
        let mut acc = 0.0;
        for (h, row) in self.channels.matrices.iter().zip(x) {
            let d: Vec<f64> = row.iter().map(|v| v * self.budget).collect();
            acc += sic_rate_with_powers(h, &d, self.kappa, self.noise)?;
        }
        Ok(acc / x.len() as f64)
    }

    /// Gradient with respect to the budget fractions.
    fn gradient(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let s = x.len() as f64;
        let c = self.budget / (s * std::f64::consts::LN_2 * self.noise);
        let mut g = Vec::with_capacity(x.len());
        for (h, row) in self.channels.matrices.iter().zip(x) {
            let d: Vec<f64> = row.iter().map(|v| v * self.budget).collect();
            let a = Cholesky::new(&weighted_gram(h, &d, 1.0 / self.noise, 1.0))?;
            let b = Cholesky::new(&weighted_gram(h, &d, (1.0 - self.kappa) / self.noise, 1.0))?;
            g.push(
                (0..h.ncols())
                    .map(|k| {
                        let hk = h.column(k).into_owned();
                        c * (a.quad_form_inv(&hk) - (1.0 - self.kappa) * b.quad_form_inv(&hk))
                    })
                    .collect(),
            );
        }
        Ok(g)
    }
}

/// Euclidean projection onto `{x ≥ 0, Σx ≤ 1}`.
fn project_capped_simplex(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    if v.iter().sum::<f64>() <= 1.0 {
        return;
    }
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

fn flatten(x: &[Vec<f64>]) -> Vec<f64> {
    x.iter().flatten().copied().collect()
}

fn unflatten(v: &[f64], k: usize) -> Vec<Vec<f64>> {
    v.chunks(k).map(<[f64]>::to_vec).collect()
}

/// Maximizes the dual uplink SIC objective over diagonal power allocations
/// with `Σ_ν Σ_k d_k[ν] ≤ P_tot` by projected gradient ascent with
/// backtracking.
///
/// Starts from the uniform allocation and from every table in `warm_starts`
/// (rescaled into the budget if needed) and returns the best result.
pub fn optimize_dual_powers(
    channels: &SubcarrierChannels,
    cfg: &ImpairedLinkConfig,
    warm_starts: &[Vec<Vec<f64>>],
) -> Result<DpcSolution> {
    cfg.check(channels)?;
    let (s, k) = (channels.subcarriers(), channels.users());
    let budget = cfg.total_power();
    let obj = DualObjective { channels, budget, kappa: cfg.kappa(), noise: cfg.noise() };

    let mut starts = vec![vec![vec![1.0 / (k * s) as f64; k]; s]];
    for w in warm_starts {
        if w.len() != s || w.iter().any(|r| r.len() != k) {
            return invalid("warm-start power table does not match the channels");
        }
        let total: f64 = w.iter().flatten().sum();
        if total > 0.0 {
            let c = 1.0 / budget.max(total);
            starts.push(w.iter().map(|r| r.iter().map(|v| (v * c).max(0.0)).collect()).collect());
        }
    }

    let mut best: Option<(f64, Vec<Vec<f64>>, usize, bool)> = None;
    for x0 in starts {
        let run = ascend(&obj, x0, k)?;
        if best.as_ref().is_none_or(|b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (value, x, iterations, converged) = best.expect("at least the uniform start");
    let powers: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * budget).collect()).collect();
    let order: Vec<usize> = (0..k).collect();
    let rates = channels
        .matrices
        .iter()
        .zip(&powers)
        .map(|(h, d)| sic_chain(h, d, cfg, &order))
        .collect::<Result<Vec<_>>>()?;
    let mut report = RateReport::from_rates(RateScheme::DlDpc, rates);
    report.sum_rate = value;
    Ok(DpcSolution { powers, report, iterations, converged })
}

fn ascend(obj: &DualObjective, x0: Vec<Vec<f64>>, k: usize) -> Result<(f64, Vec<Vec<f64>>, usize, bool)> {
    let mut x = flatten(&x0);
    let mut f = obj.value(&x0)?;
    let mut step = f64::NAN;
    for it in 0..MAX_ITERATIONS {
        let g = flatten(&obj.gradient(&unflatten(&x, k))?);
        let gmax = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            return Ok((f, unflatten(&x, k), it, true));
        }
        if !step.is_finite() {
            step = 1.0 / gmax;
        }
        let mut accepted = None;
        while step * gmax > 1e-14 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            project_capped_simplex(&mut y);
            let ascent: f64 = g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
            let fy = obj.value(&unflatten(&y, k))?;
            if fy >= f + ARMIJO * ascent {
                accepted = Some((y, fy));
                break;
            }
            step *= 0.5;
        }
        let Some((y, fy)) = accepted else {
            return Ok((f, unflatten(&x, k), it, true));
        };
        let gain = fy - f;
        x = y;
        f = fy;
        step *= 2.0;
        if gain <= REL_TOL * f.abs() {
            return Ok((f, unflatten(&x, k), it + 1, true));
        }
    }
    Ok((f, unflatten(&x, k), MAX_ITERATIONS, false))
}

/// Downlink sum rate with dirty paper coding under the configured budget,
/// evaluated through the dual uplink.
///
/// Besides the uniform start, the optimizer is warm-started from the dual
/// powers of the default [`duality_precoders`], so the result is never
/// below the linear downlink rate of those precoders.
pub fn dl_dpc_sum_rate(channels: &SubcarrierChannels, cfg: &ImpairedLinkConfig) -> Result<RateReport> {
    let precoders = duality_precoders(channels, cfg)?;
    let warm = dual_uplink_powers(channels, &precoders, cfg)?;
    Ok(optimize_dual_powers(channels, cfg, &[warm])?.report)
}

#[cfg(test)]
mod tests {
    use super::super::{ul_linear_sinr, ul_sic_sum_rate};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cplx(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }

    fn random_channels(rng: &mut ChaCha8Rng, m: usize, k: usize, s: usize) -> SubcarrierChannels {
        SubcarrierChannels::new((0..s).map(|_| CMat::from_fn(m, k, |_, _| cplx(rng))).collect()).unwrap()
    }

    #[test]
    fn sinr_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = random_channels(&mut rng, 3, 2, 1);
        let p = PrecoderSet { vectors: vec![vec![CVec::from_fn(3, |_, _| cplx(&mut rng)), CVec::from_fn(3, |_, _| cplx(&mut rng))]] };
        let ideal = ImpairedLinkConfig::uniform(2, 1, 1.0, 0.0, 0.1).unwrap();
        let h0 = ch.user(0, 0);
        let classical = h0.dotc(&p.vectors[0][0]).norm_sqr() / (h0.dotc(&p.vectors[0][1]).norm_sqr() + 0.1);
        assert!((dl_linear_sinr(&p, &ch, 0, 0, &ideal).unwrap() - classical).abs() < 1e-12);

        // single user, matched precoder
        let ch1 = random_channels(&mut rng, 4, 1, 1);
        let h = ch1.user(0, 0);
        let power: f64 = 2.0;
        let pv = &h * Complex64::new(power.sqrt() / h.norm(), 0.0);
        let cfg = ImpairedLinkConfig::uniform(1, 1, power, 0.3, 0.05).unwrap();
        let kappa = cfg.kappa();
        let g = power * h.norm_squared();
        let expect = kappa * g / ((1.0 - kappa) * g + 0.05);
        let got = dl_linear_sinr(&PrecoderSet { vectors: vec![vec![pv]] }, &ch1, 0, 0, &cfg).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn orthogonal_precoder_and_zero_precoders() {
        let h = CMat::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let ch = SubcarrierChannels::new(vec![h]).unwrap();
        let cfg = ImpairedLinkConfig::uniform(1, 1, 1.0, 0.1, 1.0).unwrap();
        let p = PrecoderSet { vectors: vec![vec![CVec::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])]] };
        assert_eq!(dl_linear_sinr(&p, &ch, 0, 0, &cfg).unwrap(), 0.0);
        let zero = PrecoderSet { vectors: vec![vec![CVec::zeros(2)]] };
        assert_eq!(dl_linear_sum_rate(&ch, &zero, &cfg).unwrap().sum_rate, 0.0);
    }

    #[test]
    fn scalar_downlink() {
        let ch = SubcarrierChannels::new(vec![CMat::from_element(1, 1, Complex64::new(0.0, 1.5))]).unwrap();
        let cfg = ImpairedLinkConfig::uniform(1, 1, 2.0, 0.0, 0.5).unwrap();
        let expect = (1.0 + 2.0 * 2.25 / 0.5f64).log2();
        let p = duality_precoders(&ch, &cfg).unwrap();
        assert!((dl_linear_sum_rate(&ch, &p, &cfg).unwrap().sum_rate - expect).abs() < 1e-12);
        assert!((dl_dpc_sum_rate(&ch, &cfg).unwrap().sum_rate - expect).abs() < 1e-9);
    }

    #[test]
    fn budget_violation_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = random_channels(&mut rng, 2, 2, 1);
        let cfg = ImpairedLinkConfig::uniform(2, 1, 1.0, 0.0, 1.0).unwrap();
        let mut p = duality_precoders(&ch, &cfg).unwrap();
        p.vectors[0][0] *= Complex64::new(1.1, 0.0);
        assert!(dl_linear_sum_rate(&ch, &p, &cfg).is_err());
    }

    #[test]
    fn duality_precoders_saturate_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = random_channels(&mut rng, 4, 3, 5);
        let cfg = ImpairedLinkConfig::uniform(3, 5, 0.2, 0.1, 0.1).unwrap().with_total_power(7.0).unwrap();
        let p = duality_precoders(&ch, &cfg).unwrap();
        assert!((p.total_power() - 7.0).abs() < 1e-9 * 7.0);

        let ch1 = random_channels(&mut rng, 4, 1, 1);
        let cfg1 = ImpairedLinkConfig::uniform(1, 1, 1.0, 0.0, 0.1).unwrap();
        let p1 = duality_precoders(&ch1, &cfg1).unwrap();
        let h = ch1.user(0, 0);
        let v = &p1.vectors[0][0];
        let c = v[0] / h[0];
        assert!((v - &h * c).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_users_dual_sinrs_match() {
        let mut h = CMat::zeros(3, 2);
        h[(0, 0)] = Complex64::new(0.8, 0.3);
        h[(2, 1)] = Complex64::new(-0.2, 1.1);
        let ch = SubcarrierChannels::new(vec![h]).unwrap();
        let cfg = ImpairedLinkConfig::new(vec![vec![1.0, 3.0]], 0.0, 0.2).unwrap();
        let p = duality_precoders(&ch, &cfg).unwrap();
        for k in 0..2 {
            let w = mmse_combiners(&ch, 0, &cfg).unwrap().remove(k);
            let ul = ul_linear_sinr(&w, &ch, 0, k, &cfg).unwrap();
            let dl = dl_linear_sinr(&p, &ch, 0, k, &cfg).unwrap();
            assert!((ul - dl).abs() < 1e-12 * ul);
        }
    }

    #[test]
    fn dual_powers_reproduce_downlink_sinrs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = random_channels(&mut rng, 4, 3, 2);
        let cfg = ImpairedLinkConfig::uniform(3, 2, 1.0, 0.0, 0.05).unwrap();
        let p = duality_precoders(&ch, &cfg).unwrap();
        let q = dual_uplink_powers(&ch, &p, &cfg).unwrap();
        for nu in 0..2 {
            let dl_total: f64 = p.vectors[nu].iter().map(|v| v.norm_squared()).sum();
            assert!((q[nu].iter().sum::<f64>() - dl_total).abs() < 1e-9 * dl_total);
            let ul_cfg = ImpairedLinkConfig::new(q.clone(), 0.0, 0.05).unwrap();
            for k in 0..3 {
                let ul = ul_linear_sinr(&p.vectors[nu][k], &ch, nu, k, &ul_cfg).unwrap();
                let dl = dl_linear_sinr(&p, &ch, nu, k, &cfg).unwrap();
                assert!((ul - dl).abs() < 1e-8 * dl);
            }
        }
    }

    #[test]
    fn capped_simplex_projection() {
        let mut v = vec![0.2, -0.1, 0.3];
        project_capped_simplex(&mut v);
        assert_eq!(v, vec![0.2, 0.0, 0.3]);
        let mut v = vec![1.0, 1.0, 0.0];
        project_capped_simplex(&mut v);
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15 && v[2] == 0.0);
        let mut v = vec![3.0, 0.1];
        project_capped_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = random_channels(&mut rng, 3, 2, 2);
        let obj = DualObjective { channels: &ch, budget: 4.0, kappa: 0.9, noise: 0.1 };
        let x = vec![vec![0.1, 0.3], vec![0.2, 0.15]];
        let g = obj.gradient(&x).unwrap();
        let eps = 1e-6;
        for nu in 0..2 {
            for k in 0..2 {
                let mut up = x.clone();
                up[nu][k] += eps;
                let mut dn = x.clone();
                dn[nu][k] -= eps;
                let fd = (obj.value(&up).unwrap() - obj.value(&dn).unwrap()) / (2.0 * eps);
                assert!((fd - g[nu][k]).abs() < 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn dpc_beats_uniform_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for trial in 0..20 {
            let (m, k, s) = (2 + trial % 3, 2 + trial % 2, 1 + trial % 3);
            let ch = random_channels(&mut rng, m, k, s);
            let cfg = ImpairedLinkConfig::uniform(k, s, 10.0 / (k * s) as f64, 0.05 * (trial % 4) as f64, 0.05)
                .unwrap();
            let dpc = optimize_dual_powers(&ch, &cfg, &[]).unwrap();
            let uniform = ul_sic_sum_rate(&ch, &cfg).unwrap().sum_rate;
            assert!(dpc.report.sum_rate >= uniform - 1e-12);
            let total: f64 = dpc.powers.iter().flatten().sum();
            assert!(total <= cfg.total_power() * (1.0 + 1e-9));
            assert!(dpc.powers.iter().flatten().all(|&v| v >= 0.0));
            let lin = dl_linear_sum_rate(&ch, &duality_precoders(&ch, &cfg).unwrap(), &cfg).unwrap();
            assert!(dl_dpc_sum_rate(&ch, &cfg).unwrap().sum_rate >= lin.sum_rate - 1e-9);
        }
    }

    #[test]
    fn dpc_single_user_uses_full_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ch = random_channels(&mut rng, 3, 1, 1);
        let cfg = ImpairedLinkConfig::uniform(1, 1, 1.0, 0.0, 0.1).unwrap().with_total_power(5.0).unwrap();
        let r = dl_dpc_sum_rate(&ch, &cfg).unwrap().sum_rate;
        let expect = (1.0 + 5.0 * ch.user(0, 0).norm_squared() / 0.1).log2();
        assert!((r - expect).abs() < 1e-9);
    }

    #[test]
    fn dpc_approaches_ceiling() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = random_channels(&mut rng, 4, 2, 1);
        let evm = 0.1;
        let ceiling = 2.0 * (1.0 / (evm * evm) as f64).log2();
        let mut prev = 0.0;
        for dec in 0..8 {
            let p = 10f64.powi(dec - 2);
            let cfg = ImpairedLinkConfig::uniform(2, 1, p / 2.0, evm, 0.1).unwrap();
            let r = dl_dpc_sum_rate(&ch, &cfg).unwrap().sum_rate;
            assert!(r >= prev - 1e-9 && r <= ceiling + 1e-9);
            prev = r;
        }
        assert!(ceiling - prev < 0.05 * ceiling);
    }

    #[test]
    fn refinement_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = random_channels(&mut rng, 3, 3, 2);
        let cfg = ImpairedLinkConfig::uniform(3, 2, 1.0, 0.1, 0.05).unwrap();
        let p = duality_precoders(&ch, &cfg).unwrap();
        let base = dl_linear_sum_rate(&ch, &p, &cfg).unwrap().sum_rate;
        let refined = refine_precoder_powers(&ch, &p, &cfg, 20).unwrap();
        assert!((refined.total_power() - cfg.total_power()).abs() < 1e-9 * cfg.total_power());
        assert!(dl_linear_sum_rate(&ch, &refined, &cfg).unwrap().sum_rate >= base);
    }
}
