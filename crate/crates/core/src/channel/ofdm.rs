//! Tap-domain and subcarrier-domain channels.
//!
//! Each path contributes `b[ℓ] = α·e^{-j2π f_c (τ-η)}·f(ℓ + SΔ(η-τ))` to tap
//! `ℓ`, where `η` is the delay of the fastest path over all users and `f` the
//! triangular pulse. The carrier phase uses the layout's wavelength, so
//! re-evaluating a layout at another carrier only needs a new wavelength.
//!
//! Three routes produce subcarrier channels and must agree:
//! [`build_tap_channel`] followed by [`subcarrier_channels_from_taps`]
//! materializes every tap; [`subcarrier_channels`] transforms each path's
//! filter weights directly; [`ChannelModel`] caches the layout-independent
//! parts of a realization for repeated evaluation inside the optimizer.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{pulse_triangle, OfdmGrid, PathParams, PathSet};
use crate::error::{invalid, Result};
use crate::geometry::{response_for_wave_vector, wave_vector_unchecked, ArrayLayout, Position3};
use crate::linalg::{CMat, CVec};
use crate::SPEED_OF_LIGHT;

/// Per-subcarrier `M × K` channel matrices; column `i` of matrix `ν` is
/// `h̄ᵢ[ν]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierChannels {
    pub matrices: Vec<CMat>,
}

impl SubcarrierChannels {
    pub fn new(matrices: Vec<CMat>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return invalid("channel set needs at least one subcarrier");
        };
        let shape = first.shape();
        if matrices.iter().any(|m| m.shape() != shape) {
            return invalid("channel matrices have inconsistent dimensions");
        }
        Ok(Self { matrices })
    }

    pub fn subcarriers(&self) -> usize {
        self.matrices.len()
    }

    pub fn antennas(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn users(&self) -> usize {
        self.matrices[0].ncols()
    }

    pub fn user(&self, nu: usize, i: usize) -> CVec {
        self.matrices[nu].column(i).into_owned()
    }

    /// Keeps only the first `k` users.
    pub fn truncated(&self, k: usize) -> Self {
        Self { matrices: self.matrices.iter().map(|m| m.columns(0, k).into_owned()).collect() }
    }
}

/// Materialized FIR channel: `taps[i][ℓ]` is `hᵢ[ℓ]` for `ℓ = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TapChannel {
    pub eta: f64,
    pub tap_count: usize,
    pub taps: Vec<Vec<CVec>>,
}

/// Synchronization offset `η = min τ` and tap count `T = ⌈SΔ(max τ − η)⌉`.
pub fn sync_and_tap_count(paths: &PathSet, grid: &OfdmGrid) -> Result<(f64, usize)> {
    let mut it = paths.all_paths().map(|p| p.delay);
    let Some(first) = it.next() else {
        return invalid("no paths to synchronize to");
    };
    let (lo, hi) = it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d)));
    Ok((lo, (grid.bandwidth() * (hi - lo)).ceil() as usize))
}

#[inline]
fn carrier_phase(path: &PathParams, eta: f64, wavelength: f64) -> Complex64 {
    let f_c = SPEED_OF_LIGHT / wavelength;
    Complex64::from_polar(path.amplitude, -2.0 * PI * f_c * (path.delay - eta))
}

/// Tap weight `b[ℓ]` of one path.
pub fn tap_coefficient(
    path: &PathParams,
    ell: usize,
    eta: f64,
    grid: &OfdmGrid,
    wavelength: f64,
) -> Complex64 {
    let w = pulse_triangle(ell as f64 + grid.bandwidth() * (eta - path.delay));
    if w == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    carrier_phase(path, eta, wavelength) * w
}

/// Nonzero taps of a path: at most the two integers around `SΔ(τ-η)`.
fn path_support(path: &PathParams, eta: f64, grid: &OfdmGrid, tap_count: usize) -> impl Iterator<Item = usize> {
    let x = grid.bandwidth() * (path.delay - eta);
    let lo = x.floor().max(0.0) as usize;
    (lo..=lo + 1).filter(move |&l| l <= tap_count)
}

fn wave_vector_of(path: &PathParams, wavelength: f64) -> [f64; 3] {
    wave_vector_unchecked(path.azimuth, path.elevation, wavelength)
}

fn check_inputs(paths: &PathSet, layout: &ArrayLayout) -> Result<()> {
    if layout.is_empty() {
        return invalid("layout has no antennas");
    }
    if paths.users.is_empty() {
        return invalid("path set has no users");
    }
    paths.validate()
}

/// Builds every tap `hᵢ[ℓ] = Σₙ bᵢₙ[ℓ]·a_P(φᵢₙ, θᵢₙ)`.
pub fn build_tap_channel(paths: &PathSet, layout: &ArrayLayout, grid: &OfdmGrid) -> Result<TapChannel> {
    check_inputs(paths, layout)?;
    let (eta, tap_count) = sync_and_tap_count(paths, grid)?;
    let m = layout.len();
    let mut taps = Vec::with_capacity(paths.users.len());
    for user in &paths.users {
        let mut h = vec![CVec::zeros(m); tap_count + 1];
        for path in &user.paths {
            let a = response_for_wave_vector(&layout.positions, &wave_vector_of(path, layout.wavelength));
            for (ell, tap) in h.iter_mut().enumerate() {
                let b = tap_coefficient(path, ell, eta, grid, layout.wavelength);
                if b != Complex64::new(0.0, 0.0) {
                    tap.axpy(b, &a, Complex64::new(1.0, 0.0));
                }
            }
        }
        taps.push(h);
    }
    Ok(TapChannel { eta, tap_count, taps })
}

fn twiddles(s: usize) -> Vec<Complex64> {
    (0..s)
        .map(|q| Complex64::from_polar(1.0, -2.0 * PI * q as f64 / s as f64))
        .collect()
}

/// DFT of a tap channel: `h̄ᵢ[ν] = Σ_ℓ hᵢ[ℓ]·e^{-j2πℓν/S}`.
pub fn subcarrier_channels_from_taps(taps: &TapChannel, grid: &OfdmGrid) -> Result<SubcarrierChannels> {
    let s = grid.subcarriers;
    let k = taps.taps.len();
    let m = taps.taps.first().and_then(|t| t.first()).map_or(0, |v| v.len());
    let tw = twiddles(s);
    let mut mats = vec![CMat::zeros(m, k); s];
    for (nu, mat) in mats.iter_mut().enumerate() {
        for (i, user_taps) in taps.taps.iter().enumerate() {
            let mut col = mat.column_mut(i);
            for (ell, h) in user_taps.iter().enumerate() {
                col.axpy(tw[(ell * nu) % s], h, Complex64::new(1.0, 0.0));
            }
        }
    }
    SubcarrierChannels::new(mats)
}

/// Subcarrier channels computed path by path, transforming each path's
/// filter weights before combining with its array response.
pub fn subcarrier_channels(paths: &PathSet, layout: &ArrayLayout, grid: &OfdmGrid) -> Result<SubcarrierChannels> {
    check_inputs(paths, layout)?;
    let (eta, tap_count) = sync_and_tap_count(paths, grid)?;
    let s = grid.subcarriers;
    let tw = twiddles(s);
    let (m, k) = (layout.len(), paths.users.len());
    let mut mats = vec![CMat::zeros(m, k); s];
    for (i, user) in paths.users.iter().enumerate() {
        for path in &user.paths {
            let a = response_for_wave_vector(&layout.positions, &wave_vector_of(path, layout.wavelength));
            let support: Vec<(usize, Complex64)> = path_support(path, eta, grid, tap_count)
                .map(|ell| (ell, tap_coefficient(path, ell, eta, grid, layout.wavelength)))
                .collect();
            for (nu, mat) in mats.iter_mut().enumerate() {
                let weight: Complex64 = support.iter().map(|&(ell, b)| b * tw[(ell * nu) % s]).sum();
                mat.column_mut(i).axpy(weight, &a, Complex64::new(1.0, 0.0));
            }
        }
    }
    SubcarrierChannels::new(mats)
}

/// Frequency-flat channel `hᵢ = Σₙ αₙ e^{-j2π f_c(τₙ-η)} a_P(φₙ, θₙ)`.
pub fn narrowband_channel(paths: &PathSet, layout: &ArrayLayout) -> Result<Vec<CVec>> {
    check_inputs(paths, layout)?;
    let eta = paths.all_paths().map(|p| p.delay).fold(f64::INFINITY, f64::min);
    Ok(paths
        .users
        .iter()
        .map(|user| {
            let mut h = CVec::zeros(layout.len());
            for path in &user.paths {
                let a = response_for_wave_vector(&layout.positions, &wave_vector_of(path, layout.wavelength));
                h.axpy(carrier_phase(path, eta, layout.wavelength), &a, Complex64::new(1.0, 0.0));
            }
            h
        })
        .collect())
}

#[derive(Debug, Clone)]
struct PreparedPath {
    wave_vector: [f64; 3],
    /// Nonzero `(ℓ, b[ℓ])`, or a single `(0, α·phase)` for flat channels.
    taps: Vec<(usize, Complex64)>,
}

/// Layout-independent part of a realization, cached for repeated channel
/// evaluation at a fixed grid and wavelength.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    users: Vec<Vec<PreparedPath>>,
    subcarriers: usize,
    tap_count: usize,
    twiddles: Vec<Complex64>,
    wavelength: f64,
}

impl ChannelModel {
    /// Wideband model over `grid`.
    pub fn wideband(paths: &PathSet, grid: &OfdmGrid, wavelength: f64) -> Result<Self> {
        Self::build(paths, grid, wavelength, false)
    }

    /// Frequency-flat model replicated over the `grid.subcarriers`
    /// subcarriers.
    pub fn narrowband(paths: &PathSet, grid: &OfdmGrid, wavelength: f64) -> Result<Self> {
        Self::build(paths, grid, wavelength, true)
    }

    fn build(paths: &PathSet, grid: &OfdmGrid, wavelength: f64, flat: bool) -> Result<Self> {
        if !(wavelength > 0.0) {
            return invalid("wavelength must be positive");
        }
        if paths.users.is_empty() {
            return invalid("path set has no users");
        }
        paths.validate()?;
        let (eta, tap_count) = sync_and_tap_count(paths, grid)?;
        let tap_count = if flat { 0 } else { tap_count };
        let users = paths
            .users
            .iter()
            .map(|u| {
                u.paths
                    .iter()
                    .map(|p| PreparedPath {
                        wave_vector: wave_vector_of(p, wavelength),
                        taps: if flat {
                            vec![(0, carrier_phase(p, eta, wavelength))]
                        } else {
                            path_support(p, eta, grid, tap_count)
                                .map(|ell| (ell, tap_coefficient(p, ell, eta, grid, wavelength)))
                                .filter(|&(_, b)| b != Complex64::new(0.0, 0.0))
                                .collect()
                        },
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            users,
            subcarriers: grid.subcarriers,
            tap_count,
            twiddles: twiddles(grid.subcarriers),
            wavelength,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn users(&self) -> usize {
        self.users.len()
    }

    pub fn tap_count(&self) -> usize {
        self.tap_count
    }

    /// Channels for antennas at `positions`.
    pub fn channels(&self, positions: &[Position3]) -> SubcarrierChannels {
        let (m, k, s) = (positions.len(), self.users.len(), self.subcarriers);
        let one = Complex64::new(1.0, 0.0);
        let mut mats = vec![CMat::zeros(m, k); s];
        let mut taps = vec![CVec::zeros(m); self.tap_count + 1];
        for (i, user) in self.users.iter().enumerate() {
            taps.iter_mut().for_each(|t| t.fill(Complex64::new(0.0, 0.0)));
            for path in user {
                let a = response_for_wave_vector(positions, &path.wave_vector);
                for &(ell, b) in &path.taps {
                    taps[ell].axpy(b, &a, one);
                }
            }
            for (nu, mat) in mats.iter_mut().enumerate() {
                let mut col = mat.column_mut(i);
                for (ell, h) in taps.iter().enumerate() {
                    col.axpy(self.twiddles[(ell * nu) % s], h, one);
                }
            }
        }
        SubcarrierChannels { matrices: mats }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_user_position, synthesize_paths, ScenarioConfig, UserPaths};
    use crate::geometry::{make_compact_upa, make_staggered_ura};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const WL: f64 = 0.1;

    fn single(path: PathParams) -> PathSet {
        PathSet::new(vec![UserPaths { position: Position3::new(100.0, 0.0, 0.0), paths: vec![path] }]).unwrap()
    }

    fn rel_frob(a: &SubcarrierChannels, b: &SubcarrierChannels) -> f64 {
        let num: f64 = a.matrices.iter().zip(&b.matrices).map(|(x, y)| (x - y).norm_squared()).sum();
        let den: f64 = a.matrices.iter().map(|x| x.norm_squared()).sum();
        (num / den).sqrt()
    }

    fn random_set(seed: u64, users: usize, sc: &ScenarioConfig) -> PathSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PathSet::new(
            (0..users)
                .map(|_| {
                    let u = sample_user_position(&mut rng, sc);
                    synthesize_paths(&mut rng, sc, u).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn sync_examples() {
        let grid = OfdmGrid::new(64, 15e3).unwrap();
        let set = PathSet::new(vec![
            UserPaths { position: Position3::ORIGIN, paths: vec![PathParams::new(1.0, 1e-6, 0.0, 0.0).unwrap()] },
            UserPaths { position: Position3::ORIGIN, paths: vec![PathParams::new(1.0, 2e-6, 0.0, 0.0).unwrap()] },
        ])
        .unwrap();
        assert_eq!(sync_and_tap_count(&set, &grid).unwrap(), (1e-6, 1));

        let one = single(PathParams::new(1.0, 3e-7, 0.0, 0.0).unwrap());
        assert_eq!(sync_and_tap_count(&one, &grid).unwrap(), (3e-7, 0));

        let narrow = OfdmGrid::new(1, 15e3).unwrap();
        assert_eq!(sync_and_tap_count(&set, &narrow).unwrap().1, 1);
        assert!(sync_and_tap_count(&PathSet::default(), &grid).is_err());
    }

    #[test]
    fn tap_coefficient_examples() {
        let grid = OfdmGrid::new(4, 250e3).unwrap(); // SΔ = 1 MHz
        let p = PathParams::new(0.7, 2e-6, 0.0, 0.0).unwrap();
        let b = tap_coefficient(&p, 0, 2e-6, &grid, WL);
        assert_eq!(b, Complex64::new(0.7, 0.0));

        // SΔ(τ-η) = 1.5
        let eta = 2e-6 - 1.5e-6;
        let b1 = tap_coefficient(&p, 1, eta, &grid, WL);
        let phase = Complex64::from_polar(1.0, -2.0 * PI * SPEED_OF_LIGHT / WL * 1.5e-6);
        assert!((b1 - phase * 0.35).norm() < 1e-12);
        assert!(b1.norm() <= p.amplitude);
        assert_eq!(tap_coefficient(&p, 3, eta, &grid, WL), Complex64::new(0.0, 0.0));
        assert_eq!(tap_coefficient(&p, 0, eta, &grid, WL), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_path_origin_antenna() {
        let layout = ArrayLayout::new(vec![Position3::ORIGIN], WL).unwrap();
        let grid = OfdmGrid::new(8, 15e3).unwrap();
        let tc = build_tap_channel(&single(PathParams::new(0.3, 1e-6, 0.4, 0.1).unwrap()), &layout, &grid).unwrap();
        assert_eq!(tc.tap_count, 0);
        assert_eq!(tc.taps[0][0][0], Complex64::new(0.3, 0.0));
    }

    #[test]
    fn tap_shapes() {
        let sc = ScenarioConfig::los_dominant();
        let set = random_set(1, 3, &sc);
        let layout = make_compact_upa(2, 3, WL).unwrap();
        let grid = OfdmGrid::new(32, 15e3).unwrap();
        let tc = build_tap_channel(&set, &layout, &grid).unwrap();
        assert_eq!(tc.taps.len(), 3);
        for u in &tc.taps {
            assert_eq!(u.len(), tc.tap_count + 1);
            assert!(u.iter().all(|h| h.len() == 6));
        }
    }

    #[test]
    fn equal_delays_factorize_and_are_flat() {
        let layout = make_compact_upa(2, 2, WL).unwrap();
        let grid = OfdmGrid::new(16, 15e3).unwrap();
        let paths: Vec<PathParams> = (0..5)
            .map(|n| PathParams::new(0.1 * (n + 1) as f64, 1e-6, 0.2 * n as f64, -0.05 * n as f64).unwrap())
            .collect();
        let set = PathSet::new(vec![UserPaths { position: Position3::ORIGIN, paths: paths.clone() }]).unwrap();
        let tc = build_tap_channel(&set, &layout, &grid).unwrap();
        let sum_taps = tc.taps[0].iter().fold(CVec::zeros(4), |acc, h| acc + h);
        let mut expected = CVec::zeros(4);
        for p in &paths {
            let a = layout.response(crate::geometry::SteeringAngles::new(p.azimuth, p.elevation).unwrap()).unwrap();
            expected += a * Complex64::new(p.amplitude, 0.0);
        }
        // filter weights at x = 0 sum to f(0) = 1
        assert!((sum_taps - &expected).norm() < 1e-12);

        let ch = subcarrier_channels(&set, &layout, &grid).unwrap();
        for nu in 1..16 {
            assert!((&ch.matrices[nu] - &ch.matrices[0]).norm() < 1e-12);
        }
        let nb = narrowband_channel(&set, &layout).unwrap();
        assert!((&nb[0] - ch.user(0, 0)).norm() < 1e-12);
    }

    #[test]
    fn single_subcarrier_is_tap_sum() {
        let sc = ScenarioConfig::los_dominant();
        let set = random_set(2, 2, &sc);
        let layout = make_staggered_ura(2, 2, WL).unwrap();
        let grid = OfdmGrid::new(1, 15e3).unwrap();
        let tc = build_tap_channel(&set, &layout, &grid).unwrap();
        let ch = subcarrier_channels(&set, &layout, &grid).unwrap();
        assert_eq!(ch.subcarriers(), 1);
        for i in 0..2 {
            let s = tc.taps[i].iter().fold(CVec::zeros(4), |acc, h| acc + h);
            assert!((s - ch.user(0, i)).norm() <= 1e-12 * ch.user(0, i).norm());
        }
    }

    #[test]
    fn routes_agree() {
        for (seed, s) in [(3u64, 1usize), (4, 16), (5, 64)] {
            for sc in [ScenarioConfig::los_dominant(), ScenarioConfig::rich_scattering()] {
                let set = random_set(seed, 3, &sc);
                let layout = make_staggered_ura(4, 4, WL).unwrap();
                let grid = OfdmGrid::new(s, 15e3).unwrap();
                let via_taps = subcarrier_channels_from_taps(&build_tap_channel(&set, &layout, &grid).unwrap(), &grid).unwrap();
                let direct = subcarrier_channels(&set, &layout, &grid).unwrap();
                let cached = ChannelModel::wideband(&set, &grid, WL).unwrap().channels(&layout.positions);
                assert!(rel_frob(&via_taps, &direct) < 1e-10);
                assert!(rel_frob(&cached, &direct) < 1e-10);
            }
        }
    }

    #[test]
    fn narrowband_model_matches_eq17() {
        let sc = ScenarioConfig::narrowband();
        let set = random_set(6, 3, &sc);
        let layout = make_compact_upa(4, 4, WL).unwrap();
        let grid = OfdmGrid::new(3, 15e3).unwrap();
        let ch = ChannelModel::narrowband(&set, &grid, WL).unwrap().channels(&layout.positions);
        let nb = narrowband_channel(&set, &layout).unwrap();
        for nu in 0..3 {
            for i in 0..3 {
                assert!((ch.user(nu, i) - &nb[i]).norm() <= 1e-12 * nb[i].norm());
            }
        }
    }

    #[test]
    fn paths_do_not_depend_on_grid() {
        // paths are drawn without reference to the grid; wider grids only add taps
        let sc = ScenarioConfig::los_dominant();
        let set = random_set(7, 2, &sc);
        let layout = make_compact_upa(2, 2, WL).unwrap();
        let narrow = build_tap_channel(&set, &layout, &OfdmGrid::new(8, 15e3).unwrap()).unwrap();
        let wide = build_tap_channel(&set, &layout, &OfdmGrid::new(128, 15e3).unwrap()).unwrap();
        assert_eq!(narrow.eta, wide.eta);
        assert!(wide.tap_count >= narrow.tap_count);
        assert_eq!(set, random_set(7, 2, &sc));
    }
}
