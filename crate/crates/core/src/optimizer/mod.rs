//! Particle swarm optimization of antenna positions.
//!
//! A particle holds the in-plane coordinates `(y, z)` of every antenna. Box
//! constraints are enforced by clamping after each move; the minimum spacing
//! is handled by a quadratic penalty folded into the objective (see
//! [`objective_adapter`]). The swarm keeps a separate record of the best
//! layout that satisfies the spacing rule, which is what gets returned.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::error::{invalid, Result};
use crate::geometry::{validate_layout, ArrayLayout, MoveRegion, Position3};
use crate::rates::{scheme_sum_rate, ImpairedLinkConfig, RateScheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    /// Inertia weight.
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Per-coordinate velocity limit as a fraction of the region side.
    pub velocity_clamp: f64,
    /// Spacing penalty weight, bit/s/Hz per m².
    pub penalty_weight: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 150,
            iterations: 100,
            inertia: 0.7298,
            cognitive: 1.4962,
            social: 1.4962,
            velocity_clamp: 0.5,
            penalty_weight: 1e3,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return invalid("PSO needs at least one particle");
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("velocity_clamp", self.velocity_clamp),
            ("penalty_weight", self.penalty_weight),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return invalid(format!("PSO {name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    /// `[y₀, z₀, y₁, z₁, …]`.
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    /// Global best objective after initialization (index 0) and after every
    /// iteration.
    pub best_values: Vec<f64>,
    /// Returned layout: the best spacing-feasible layout when one was seen,
    /// otherwise the global best.
    pub best_layout: ArrayLayout,
    /// Objective value of `best_layout`.
    pub best_value: f64,
    /// Whether `best_layout` satisfies the spacing rule.
    pub feasible: bool,
    /// Number of objective evaluations.
    pub evaluations: usize,
}

impl OptimizationTrace {
    /// `iteration,best_value` records.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,best_value\n");
        for (i, v) in self.best_values.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        out
    }
}

/// Clamps every antenna into its region. Positions are moved onto the array
/// plane.
pub fn repair_to_regions(positions: &[Position3], regions: &[MoveRegion]) -> Result<Vec<Position3>> {
    if positions.len() != regions.len() {
        return invalid(format!("{} positions for {} regions", positions.len(), regions.len()));
    }
    Ok(positions
        .iter()
        .zip(regions)
        .map(|(p, r)| {
            let (y, z) = r.clamp(p.y, p.z);
            Position3::on_plane(y, z)
        })
        .collect())
}

/// `weight · Σ (λ/2 − d)²` over pairs closer than `λ/2`.
pub fn spacing_penalty(positions: &[Position3], wavelength: f64, weight: f64) -> f64 {
    let half = wavelength / 2.0;
    let mut acc = 0.0;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = positions[i].distance(&positions[j]);
            if d < half {
                acc += (half - d) * (half - d);
            }
        }
    }
    weight * acc
}

/// Objective for the swarm: sum rate of `scheme` on one channel realization
/// minus the spacing penalty. Numerical failures score `-∞`.
pub fn objective_adapter<'a>(
    scheme: RateScheme,
    model: &'a ChannelModel,
    link: &'a ImpairedLinkConfig,
    penalty_weight: f64,
) -> impl Fn(&ArrayLayout) -> f64 + Sync + 'a {
    move |layout| {
        let channels = model.channels(&layout.positions);
        let rate = scheme_sum_rate(scheme, &channels, link).map_or(f64::NEG_INFINITY, |r| r.sum_rate);
        rate - spacing_penalty(&layout.positions, model.wavelength(), penalty_weight)
    }
}

fn layout_of(coords: &[f64], regions: &[MoveRegion], wavelength: f64) -> ArrayLayout {
    ArrayLayout {
        positions: coords.chunks(2).map(|c| Position3::on_plane(c[0], c[1])).collect(),
        wavelength,
        regions: Some(regions.to_vec()),
    }
}

/// Maximizes `objective` over antenna positions inside `regions`.
///
/// If `seed_layout` lies inside the regions and satisfies the spacing rule it
/// replaces the first random particle. Random draws happen serially in a
/// fixed order and objective evaluations run in parallel, so the result
/// only depends on the configuration and seed.
pub fn pso_optimize<F>(
    objective: F,
    regions: &[MoveRegion],
    wavelength: f64,
    cfg: &PsoConfig,
    seed_layout: Option<&ArrayLayout>,
) -> Result<OptimizationTrace>
where
    F: Fn(&ArrayLayout) -> f64 + Sync,
{
    cfg.validate()?;
    if regions.is_empty() {
        return invalid("no movement regions");
    }
    if let Some(r) = regions.iter().find(|r| !(r.side > 0.0)) {
        return invalid(format!("region side must be positive, got {}", r.side));
    }
    if !(wavelength > 0.0) {
        return invalid(format!("wavelength must be positive, got {wavelength}"));
    }
    let dim = 2 * regions.len();
    let lo: Vec<f64> = regions.iter().flat_map(|r| [r.center_y - r.side / 2.0, r.center_z - r.side / 2.0]).collect();
    let hi: Vec<f64> = regions.iter().flat_map(|r| [r.center_y + r.side / 2.0, r.center_z + r.side / 2.0]).collect();
    let vmax: Vec<f64> = regions.iter().flat_map(|r| [cfg.velocity_clamp * r.side; 2]).collect();

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut swarm: Vec<Particle> = (0..cfg.particles)
        .map(|_| {
            let position: Vec<f64> = (0..dim).map(|d| rng.random_range(lo[d]..=hi[d])).collect();
            let velocity: Vec<f64> = (0..dim).map(|d| rng.random_range(-vmax[d]..=vmax[d])).collect();
            Particle { best_position: position.clone(), position, velocity, best_value: f64::NEG_INFINITY }
        })
        .collect();
    if let Some(seed) = seed_layout {
        let candidate = ArrayLayout { regions: Some(regions.to_vec()), ..seed.clone() };
        if seed.positions.len() == regions.len() && validate_layout(&candidate).is_valid() {
            let pos: Vec<f64> = seed.positions.iter().flat_map(|p| [p.y, p.z]).collect();
            swarm[0].position = pos.clone();
            swarm[0].best_position = pos;
        }
    }

    let mut evaluations = 0;
    let mut best_values = Vec::with_capacity(cfg.iterations + 1);
    let mut global: (f64, Vec<f64>) = (f64::NEG_INFINITY, swarm[0].position.clone());
    let mut feasible_best: Option<(f64, Vec<f64>)> = None;

    for iter in 0..=cfg.iterations {
        if iter > 0 {
            for p in &mut swarm {
                for d in 0..dim {
                    let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                    let v = cfg.inertia * p.velocity[d]
                        + cfg.cognitive * r1 * (p.best_position[d] - p.position[d])
                        + cfg.social * r2 * (global.1[d] - p.position[d]);
                    p.velocity[d] = v.clamp(-vmax[d], vmax[d]);
                    p.position[d] = (p.position[d] + p.velocity[d]).clamp(lo[d], hi[d]);
                }
            }
        }
        let scored: Vec<(f64, bool)> = swarm
            .par_iter()
            .map(|p| {
                let layout = layout_of(&p.position, regions, wavelength);
                let v = objective(&layout);
                (if v.is_nan() { f64::NEG_INFINITY } else { v }, validate_layout(&layout).spacing_ok)
            })
            .collect();
        evaluations += scored.len();
        // reduction in particle order keeps ties deterministic
        for (p, &(v, ok)) in swarm.iter_mut().zip(&scored) {
            if v > p.best_value {
                p.best_value = v;
                p.best_position.clone_from(&p.position);
            }
            if v > global.0 {
                global = (v, p.position.clone());
            }
            if ok && feasible_best.as_ref().is_none_or(|(b, _)| v > *b) {
                feasible_best = Some((v, p.position.clone()));
            }
        }
        best_values.push(global.0);
    }

    let (best_value, coords, feasible) = match feasible_best {
        Some((v, c)) => (v, c, true),
        None => (global.0, global.1, false),
    };
    Ok(OptimizationTrace {
        best_values,
        best_layout: layout_of(&coords, regions, wavelength),
        best_value,
        feasible,
        evaluations,
    })
}
