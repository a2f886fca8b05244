//! Antenna array geometry: positions, movement regions, benchmark layouts
//! and plane-wave array responses.
//!
//! The array lies in the `x = 0` plane with its center at the origin; `y` is
//! horizontal and `z` vertical. Grid layouts are indexed row-major with rows
//! stacked along `z` and columns along `y`, so antenna `r * cols + c` sits in
//! row `r`, column `c`. Movement regions use the same indexing.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::CVec;

/// Absolute slack (meters) when testing closed-box membership.
const REGION_TOL: f64 = 1e-12;
/// Relative slack when comparing pair distances against `λ/2`.
const SPACING_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const ORIGIN: Self = Self { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Point on the array plane.
    pub fn on_plane(y: f64, z: f64) -> Self {
        Self { x: 0.0, y, z }
    }

    pub fn dot(&self, k: &[f64; 3]) -> f64 {
        self.x * k[0] + self.y * k[1] + self.z * k[2]
    }

    pub fn distance(&self, other: &Self) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.distance(&Self::ORIGIN)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Square region of side `side` in the array plane within which one antenna
/// may be placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveRegion {
    pub center_y: f64,
    pub center_z: f64,
    pub side: f64,
}

impl MoveRegion {
    pub fn new(center_y: f64, center_z: f64, side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return invalid(format!("region side must be positive, got {side}"));
        }
        Ok(Self { center_y, center_z, side })
    }

    /// Closed-box membership test.
    pub fn contains(&self, p: &Position3) -> bool {
        let h = 0.5 * self.side + REGION_TOL;
        p.x.abs() <= REGION_TOL
            && (p.y - self.center_y).abs() <= h
            && (p.z - self.center_z).abs() <= h
    }

    /// Clamps an in-plane coordinate pair into the box.
    pub fn clamp(&self, y: f64, z: f64) -> (f64, f64) {
        let h = 0.5 * self.side;
        (
            y.clamp(self.center_y - h, self.center_y + h),
            z.clamp(self.center_z - h, self.center_z + h),
        )
    }

    pub fn center(&self) -> Position3 {
        Position3::on_plane(self.center_y, self.center_z)
    }
}

/// Direction of arrival of a plane wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringAngles {
    /// Azimuth in `[-π, π]`.
    pub azimuth: f64,
    /// Elevation in `[-π/2, π/2]`.
    pub elevation: f64,
}

impl SteeringAngles {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !(-PI..=PI).contains(&azimuth) || !(-PI / 2.0..=PI / 2.0).contains(&elevation) {
            return invalid(format!(
                "angles out of range: azimuth {azimuth}, elevation {elevation}"
            ));
        }
        Ok(Self { azimuth, elevation })
    }
}

/// Wave vector `k(φ, θ) = (2π/λ)(cos φ cos θ, sin φ cos θ, sin θ)` in rad/m.
pub fn wave_vector(angles: SteeringAngles, wavelength: f64) -> Result<[f64; 3]> {
    if !(wavelength > 0.0) {
        return invalid(format!("wavelength must be positive, got {wavelength}"));
    }
    Ok(wave_vector_unchecked(angles.azimuth, angles.elevation, wavelength))
}

#[inline]
pub(crate) fn wave_vector_unchecked(azimuth: f64, elevation: f64, wavelength: f64) -> [f64; 3] {
    let k = 2.0 * PI / wavelength;
    let (sa, ca) = azimuth.sin_cos();
    let (se, ce) = elevation.sin_cos();
    [k * ca * ce, k * sa * ce, k * se]
}

/// An ordered set of antenna positions with optional movement regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub positions: Vec<Position3>,
    pub wavelength: f64,
    pub regions: Option<Vec<MoveRegion>>,
}

impl ArrayLayout {
    pub fn new(positions: Vec<Position3>, wavelength: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return invalid(format!("wavelength must be positive, got {wavelength}"));
        }
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return invalid(format!("non-finite antenna position {p:?}"));
        }
        Ok(Self { positions, wavelength, regions: None })
    }

    /// Attaches one movement region per antenna.
    pub fn with_regions(mut self, regions: Vec<MoveRegion>) -> Result<Self> {
        if regions.len() != self.positions.len() {
            return invalid(format!(
                "{} regions for {} antennas",
                regions.len(),
                self.positions.len()
            ));
        }
        self.regions = Some(regions);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same positions, different carrier wavelength.
    pub fn at_wavelength(&self, wavelength: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return invalid(format!("wavelength must be positive, got {wavelength}"));
        }
        Ok(Self { wavelength, ..self.clone() })
    }

    /// Array response vector `a_P(φ, θ)` with entries `exp(j pₘᵀ k)`.
    pub fn response(&self, angles: SteeringAngles) -> Result<CVec> {
        array_response(self, angles)
    }

    /// Plain-text table: a comment header then `index x y z` per antenna.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# wavelength_m {}", self.wavelength);
        let _ = writeln!(out, "# index x_m y_m z_m");
        for (i, p) in self.positions.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", p.x, p.y, p.z);
        }
        out
    }

    /// Parses the format written by [`ArrayLayout::to_table`]. A
    /// `# wavelength_m` header, when present, overrides `wavelength`.
    pub fn from_table(text: &str, wavelength: f64) -> Result<Self> {
        let mut wl = wavelength;
        let mut positions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("wavelength_m") {
                    if let Some(v) = it.next() {
                        wl = v.parse().map_err(|_| {
                            Error::Parse(format!("line {}: bad wavelength {v:?}", lineno + 1))
                        })?;
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 fields (index x y z), found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", lineno + 1)))
            };
            let index: usize = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad index", lineno + 1)))?;
            if index != positions.len() {
                return Err(Error::Parse(format!(
                    "line {}: index {index} out of order",
                    lineno + 1
                )));
            }
            positions.push(Position3::new(num(fields[1])?, num(fields[2])?, num(fields[3])?));
        }
        Self::new(positions, wl)
    }
}

/// Array response vector of `layout` towards `angles`.
pub fn array_response(layout: &ArrayLayout, angles: SteeringAngles) -> Result<CVec> {
    if layout.is_empty() {
        return invalid("array response of an empty layout");
    }
    let k = wave_vector(angles, layout.wavelength)?;
    Ok(response_for_wave_vector(&layout.positions, &k))
}

pub(crate) fn response_for_wave_vector(positions: &[Position3], k: &[f64; 3]) -> CVec {
    CVec::from_iterator(
        positions.len(),
        positions.iter().map(|p| Complex64::from_polar(1.0, p.dot(k))),
    )
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return invalid(format!("array dimensions must be nonzero, got {rows}x{cols}"));
    }
    Ok(())
}

/// Centered grid offsets `(i - (n-1)/2)·step`.
fn centered(i: usize, n: usize, step: f64) -> f64 {
    (i as f64 - (n as f64 - 1.0) / 2.0) * step
}

fn uniform_grid(rows: usize, cols: usize, spacing: f64) -> Vec<Position3> {
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            out.push(Position3::on_plane(centered(c, cols, spacing), centered(r, rows, spacing)));
        }
    }
    out
}

/// Uniform planar array with `λ/2` spacing.
pub fn make_compact_upa(rows: usize, cols: usize, wavelength: f64) -> Result<ArrayLayout> {
    check_dims(rows, cols)?;
    ArrayLayout::new(uniform_grid(rows, cols, wavelength / 2.0), wavelength)
}

/// Default sparse inter-element spacing, `20λ/3`.
pub fn default_sparse_spacing(wavelength: f64) -> f64 {
    20.0 * wavelength / 3.0
}

/// Uniform planar array with a wide spacing (default `20λ/3`).
pub fn make_sparse_upa(
    rows: usize,
    cols: usize,
    wavelength: f64,
    spacing: Option<f64>,
) -> Result<ArrayLayout> {
    check_dims(rows, cols)?;
    let spacing = spacing.unwrap_or_else(|| default_sparse_spacing(wavelength));
    if !(spacing > 0.0) {
        return invalid(format!("spacing must be positive, got {spacing}"));
    }
    ArrayLayout::new(uniform_grid(rows, cols, spacing), wavelength)
}

/// Rectangular array with staggered rows spanning the sparse-UPA aperture.
///
/// Projected onto the horizontal axis the `M` antennas form a uniform linear
/// array of step `(cols-1)·s/(M-1)` where `s` is the sparse spacing (`20λ/15`
/// for the 4×4 case). Antenna `(r, c)` takes projected index `r + rows·c`, so
/// every row contributes one antenna per column cell of the sparse grid.
pub fn make_staggered_ura(rows: usize, cols: usize, wavelength: f64) -> Result<ArrayLayout> {
    make_staggered_ura_with_spacing(rows, cols, wavelength, default_sparse_spacing(wavelength))
}

pub fn make_staggered_ura_with_spacing(
    rows: usize,
    cols: usize,
    wavelength: f64,
    sparse_spacing: f64,
) -> Result<ArrayLayout> {
    check_dims(rows, cols)?;
    if !(sparse_spacing > 0.0) {
        return invalid(format!("spacing must be positive, got {sparse_spacing}"));
    }
    let m = rows * cols;
    let width = (cols as f64 - 1.0) * sparse_spacing;
    let y_step = if m > 1 { width / (m as f64 - 1.0) } else { 0.0 };
    let mut out = Vec::with_capacity(m);
    for r in 0..rows {
        for c in 0..cols {
            let j = r + rows * c;
            let y = -width / 2.0 + j as f64 * y_step;
            out.push(Position3::on_plane(y, centered(r, rows, sparse_spacing)));
        }
    }
    ArrayLayout::new(out, wavelength)
}

/// Adjacent square movement regions tiling a `rows × cols` grid.
pub fn make_move_regions(rows: usize, cols: usize, side: f64) -> Result<Vec<MoveRegion>> {
    check_dims(rows, cols)?;
    uniform_grid(rows, cols, side)
        .into_iter()
        .map(|p| MoveRegion::new(p.y, p.z, side))
        .collect()
}

/// Outcome of [`validate_layout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutReport {
    /// Per-antenna region membership; `None` when the layout has no regions.
    pub in_region: Option<Vec<bool>>,
    /// Smallest pairwise distance, `None` for a single antenna.
    pub min_distance: Option<f64>,
    /// Indices of the closest pair.
    pub closest_pair: Option<(usize, usize)>,
    /// Whether every pair is at least `λ/2` apart.
    pub spacing_ok: bool,
}

impl LayoutReport {
    pub fn regions_ok(&self) -> bool {
        self.in_region.as_ref().is_none_or(|v| v.iter().all(|&b| b))
    }

    pub fn is_valid(&self) -> bool {
        self.regions_ok() && self.spacing_ok
    }
}

/// Checks region membership and the `λ/2` minimum spacing.
pub fn validate_layout(layout: &ArrayLayout) -> LayoutReport {
    let in_region = layout.regions.as_ref().map(|regions| {
        layout
            .positions
            .iter()
            .zip(regions)
            .map(|(p, r)| r.contains(p))
            .collect()
    });
    let mut closest: Option<(f64, (usize, usize))> = None;
    let pos = &layout.positions;
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            let d = pos[i].distance(&pos[j]);
            if closest.is_none_or(|(best, _)| d < best) {
                closest = Some((d, (i, j)));
            }
        }
    }
    let half = layout.wavelength / 2.0;
    LayoutReport {
        in_region,
        min_distance: closest.map(|c| c.0),
        closest_pair: closest.map(|c| c.1),
        spacing_ok: closest.is_none_or(|(d, _)| d >= half * (1.0 - SPACING_RTOL)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WL: f64 = 0.1;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wave_vector_examples() {
        let k = wave_vector(SteeringAngles::new(0.0, 0.0).unwrap(), WL).unwrap();
        assert!(approx(k[0], 62.831_853_071_795_86, 1e-12) && k[1] == 0.0 && k[2] == 0.0);
        let k = wave_vector(SteeringAngles::new(PI / 2.0, 0.0).unwrap(), WL).unwrap();
        assert!(approx(k[0], 0.0, 1e-12) && approx(k[1], 2.0 * PI / WL, 1e-12));
        let k = wave_vector(SteeringAngles::new(PI / 4.0, PI / 6.0).unwrap(), WL).unwrap();
        let s = 2.0 * PI / WL;
        // cos(π/4)cos(π/6) = √6/4
        let c = 6f64.sqrt() / 4.0;
        assert!(approx(k[0], s * c, 1e-12) && approx(k[1], s * c, 1e-12));
        assert!(approx(k[2], s * 0.5, 1e-12));
        assert!(approx(c, 0.6124, 1e-4));
        assert!(matches!(
            wave_vector(SteeringAngles::new(0.0, 0.0).unwrap(), 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn angle_ranges_enforced() {
        assert!(SteeringAngles::new(3.2, 0.0).is_err());
        assert!(SteeringAngles::new(0.0, -1.6).is_err());
        assert!(SteeringAngles::new(-PI, PI / 2.0).is_ok());
    }

    #[test]
    fn response_examples() {
        let origin = ArrayLayout::new(vec![Position3::ORIGIN; 3], WL).unwrap();
        let a = origin.response(SteeringAngles::new(0.3, -0.2).unwrap()).unwrap();
        assert!(a.iter().all(|z| *z == Complex64::new(1.0, 0.0)));

        let single = ArrayLayout::new(vec![Position3::on_plane(WL / 2.0, 0.0)], WL).unwrap();
        let a = single.response(SteeringAngles::new(PI / 2.0, 0.0).unwrap()).unwrap();
        assert!((a[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let empty = ArrayLayout::new(vec![], WL).unwrap();
        assert!(matches!(
            array_response(&empty, SteeringAngles::new(0.0, 0.0).unwrap()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn compact_upa() {
        let l = make_compact_upa(4, 4, WL).unwrap();
        assert_eq!(l.len(), 16);
        let rep = validate_layout(&l);
        assert!(approx(rep.min_distance.unwrap(), WL / 2.0, 1e-15));
        assert!(rep.spacing_ok);

        let one = make_compact_upa(1, 1, WL).unwrap();
        assert_eq!(one.positions, vec![Position3::ORIGIN]);

        let l = make_compact_upa(2, 2, WL).unwrap();
        for p in &l.positions {
            assert!(approx(p.y.abs(), 0.025, 1e-15) && approx(p.z.abs(), 0.025, 1e-15));
        }
        assert!(make_compact_upa(0, 4, WL).is_err());
    }

    #[test]
    fn sparse_upa() {
        let l = make_sparse_upa(4, 4, WL, None).unwrap();
        let ys: Vec<f64> = l.positions.iter().map(|p| p.y).collect();
        let span = ys.iter().cloned().fold(f64::MIN, f64::max) - ys.iter().cloned().fold(f64::MAX, f64::min);
        assert!(approx(span, 20.0 * WL, 1e-12));
        assert!(approx(validate_layout(&l).min_distance.unwrap(), 0.666_666_666_666_666_6, 1e-12));
        assert_eq!(make_sparse_upa(1, 1, WL, Some(1.0)).unwrap().positions, vec![Position3::ORIGIN]);
        assert!(make_sparse_upa(2, 2, WL, Some(-1.0)).is_err());
    }

    #[test]
    fn staggered_projection_is_uniform() {
        let l = make_staggered_ura(4, 4, WL).unwrap();
        let mut ys: Vec<f64> = l.positions.iter().map(|p| p.y).collect();
        ys.sort_by(f64::total_cmp);
        for w in ys.windows(2) {
            assert!(approx(w[1] - w[0], 20.0 * WL / 15.0, 1e-12));
        }
        assert_eq!(ys.len(), 16);
        assert_eq!(make_staggered_ura(1, 1, WL).unwrap().positions, vec![Position3::ORIGIN]);
        assert!(make_staggered_ura(4, 0, WL).is_err());
    }

    #[test]
    fn staggered_and_sparse_share_aperture() {
        for (r, c) in [(4, 4), (2, 3), (3, 5)] {
            let a = make_staggered_ura(r, c, WL).unwrap();
            let b = make_sparse_upa(r, c, WL, None).unwrap();
            let ext = |l: &ArrayLayout, f: fn(&Position3) -> f64| {
                let v: Vec<f64> = l.positions.iter().map(f).collect();
                (
                    v.iter().cloned().fold(f64::MAX, f64::min),
                    v.iter().cloned().fold(f64::MIN, f64::max),
                )
            };
            let (ay, by) = (ext(&a, |p| p.y), ext(&b, |p| p.y));
            let (az, bz) = (ext(&a, |p| p.z), ext(&b, |p| p.z));
            assert!(approx(ay.0, by.0, 1e-12) && approx(ay.1, by.1, 1e-12));
            assert!(approx(az.0, bz.0, 1e-12) && approx(az.1, bz.1, 1e-12));
            assert!(validate_layout(&a).spacing_ok);
        }
    }

    #[test]
    fn staggered_fits_default_regions() {
        let l = make_staggered_ura(4, 4, WL)
            .unwrap()
            .with_regions(make_move_regions(4, 4, 5.0 * WL).unwrap())
            .unwrap();
        assert!(validate_layout(&l).is_valid());
    }

    #[test]
    fn move_regions() {
        let regs = make_move_regions(4, 4, 5.0 * WL).unwrap();
        assert_eq!(regs.len(), 16);
        let lo = regs.iter().map(|r| r.center_y - r.side / 2.0).fold(f64::MAX, f64::min);
        let hi = regs.iter().map(|r| r.center_y + r.side / 2.0).fold(f64::MIN, f64::max);
        assert!(approx(hi - lo, 20.0 * WL, 1e-12));
        assert!(approx(regs[1].center_y - regs[0].center_y, 5.0 * WL, 1e-15));
        assert!(approx(regs[4].center_z - regs[0].center_z, 5.0 * WL, 1e-15));
        let one = make_move_regions(1, 1, 0.3).unwrap();
        assert_eq!((one[0].center_y, one[0].center_z), (0.0, 0.0));
        assert!(make_move_regions(2, 2, 0.0).is_err());
    }

    #[test]
    fn validation_reports_violations() {
        let l = ArrayLayout::new(vec![Position3::ORIGIN, Position3::ORIGIN], WL).unwrap();
        let rep = validate_layout(&l);
        assert!(!rep.spacing_ok);
        assert_eq!(rep.min_distance, Some(0.0));

        let region = MoveRegion::new(0.0, 0.0, 0.5).unwrap();
        let edge = ArrayLayout::new(vec![Position3::on_plane(0.25, 0.0)], WL)
            .unwrap()
            .with_regions(vec![region])
            .unwrap();
        assert!(validate_layout(&edge).regions_ok());
        let outside = ArrayLayout::new(vec![Position3::on_plane(0.25 + 1e-9, 0.0)], WL)
            .unwrap()
            .with_regions(vec![region])
            .unwrap();
        assert_eq!(validate_layout(&outside).in_region, Some(vec![false]));
    }

    #[test]
    fn table_round_trip() {
        let l = make_staggered_ura(4, 4, WL).unwrap();
        let back = ArrayLayout::from_table(&l.to_table(), 1.0).unwrap();
        assert_eq!(back, l);
        assert!(ArrayLayout::from_table("0 1 2", WL).is_err());
    }

    proptest! {
        #[test]
        fn response_has_unit_modulus(
            coords in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 1..12),
            az in -PI..PI, el in -PI / 2.0..PI / 2.0,
        ) {
            let pos = coords.iter().map(|&(x, y, z)| Position3::new(x, y, z)).collect();
            let l = ArrayLayout::new(pos, WL).unwrap();
            let a = l.response(SteeringAngles::new(az, el).unwrap()).unwrap();
            for z in a.iter() {
                prop_assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn translation_only_changes_common_phase(
            coords in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..8),
            shift in (-1.0f64..1.0, -1.0f64..1.0),
            az in -PI..PI, el in -PI / 2.0..PI / 2.0,
        ) {
            let angles = SteeringAngles::new(az, el).unwrap();
            let base: Vec<Position3> = coords.iter().map(|&(y, z)| Position3::on_plane(y, z)).collect();
            let moved: Vec<Position3> = base
                .iter()
                .map(|p| Position3::on_plane(p.y + shift.0, p.z + shift.1))
                .collect();
            let a = ArrayLayout::new(base, WL).unwrap().response(angles).unwrap();
            let b = ArrayLayout::new(moved, WL).unwrap().response(angles).unwrap();
            let common = b[0] / a[0];
            for m in 0..a.len() {
                prop_assert!((b[m] - a[m] * common).norm() < 1e-9);
            }
        }
    }
}
