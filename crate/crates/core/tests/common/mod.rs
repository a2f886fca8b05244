#![allow(dead_code)]

use marray_core::channel::SubcarrierChannels;
use marray_core::linalg::{CMat, CVec};
use marray_core::Complex64;
use rand::Rng;

/// Circularly-symmetric unit-variance complex Gaussian (Box-Muller).
pub fn cgauss<R: Rng>(rng: &mut R) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    let r = (-u1.ln()).sqrt();
    let t = 2.0 * std::f64::consts::PI * u2;
    Complex64::new(r * t.cos(), r * t.sin())
}

pub fn random_vec<R: Rng>(rng: &mut R, m: usize) -> CVec {
    CVec::from_fn(m, |_, _| cgauss(rng))
}

pub fn random_channels<R: Rng>(rng: &mut R, m: usize, k: usize, s: usize) -> SubcarrierChannels {
    SubcarrierChannels::new((0..s).map(|_| CMat::from_fn(m, k, |_, _| cgauss(rng))).collect()).unwrap()
}

/// Eigenvalues of the Hermitian matrix `H D Hᴴ`, computed by nalgebra.
pub fn gram_eigenvalues(h: &CMat, powers: &[f64]) -> Vec<f64> {
    let d = CMat::from_diagonal(&CVec::from_iterator(powers.len(), powers.iter().map(|&p| Complex64::new(p, 0.0))));
    let g = h * d * h.adjoint();
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    g.symmetric_eigenvalues().iter().copied().collect()
}

/// SIC sum rate on one subcarrier from the eigenvalues of `H D Hᴴ`.
pub fn sic_eigen_form(h: &CMat, powers: &[f64], kappa: f64, noise: f64) -> f64 {
    gram_eigenvalues(h, powers)
        .into_iter()
        .map(|l| {
            let l = l.max(0.0);
            ((1.0 + l / noise) / (1.0 + (1.0 - kappa) * l / noise)).log2()
        })
        .sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
