//! Geometric multipath channels for OFDM.
//!
//! A realization is a [`PathSet`]: for every user a ground position and a
//! list of far-field paths. Paths never depend on the antenna layout or on
//! the OFDM grid, so the same realization can be evaluated for any array and
//! any bandwidth. [`ofdm`] turns paths into tap and subcarrier channels.

pub mod ofdm;
pub mod scenario;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Position3;

pub use ofdm::{
    build_tap_channel, narrowband_channel, subcarrier_channels, subcarrier_channels_from_taps,
    sync_and_tap_count, tap_coefficient, ChannelModel, SubcarrierChannels, TapChannel,
};
pub use scenario::{
    path_loss, sample_user_position, synthesize_paths, PathLossModel, ScenarioConfig,
    ScenarioKind,
};

/// Triangular pulse `f(t) = 1 - |t|` on `[-1, 1]`, zero elsewhere.
#[inline]
pub fn pulse_triangle(t: f64) -> f64 {
    let a = t.abs();
    if a <= 1.0 {
        1.0 - a
    } else {
        0.0
    }
}

/// One far-field propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// Linear amplitude.
    pub amplitude: f64,
    /// Delay in seconds.
    pub delay: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl PathParams {
    pub fn new(amplitude: f64, delay: f64, azimuth: f64, elevation: f64) -> Result<Self> {
        let p = Self { amplitude, delay, azimuth, elevation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::{FRAC_PI_2, PI};
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return invalid(format!("path amplitude must be >= 0, got {}", self.amplitude));
        }
        if !(self.delay >= 0.0) || !self.delay.is_finite() {
            return invalid(format!("path delay must be >= 0, got {}", self.delay));
        }
        if !(-PI..=PI).contains(&self.azimuth) || !(-FRAC_PI_2..=FRAC_PI_2).contains(&self.elevation)
        {
            return invalid(format!(
                "path angles out of range: azimuth {}, elevation {}",
                self.azimuth, self.elevation
            ));
        }
        Ok(())
    }

    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Paths of a single user. The first path is the line-of-sight path when the
/// scenario has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPaths {
    pub position: Position3,
    pub paths: Vec<PathParams>,
}

/// Multipath description of all users in one realization.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathSet {
    pub users: Vec<UserPaths>,
}

impl PathSet {
    pub fn new(users: Vec<UserPaths>) -> Result<Self> {
        let set = Self { users };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, u) in self.users.iter().enumerate() {
            if u.paths.is_empty() {
                return invalid(format!("user {i} has no paths"));
            }
            for p in &u.paths {
                p.validate()?;
            }
        }
        Ok(())
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// The first `k` users.
    pub fn truncated(&self, k: usize) -> Self {
        Self { users: self.users.iter().take(k).cloned().collect() }
    }

    pub fn all_paths(&self) -> impl Iterator<Item = &PathParams> {
        self.users.iter().flat_map(|u| u.paths.iter())
    }

    /// Text record with one path per line: `user amplitude delay azimuth
    /// elevation`. User positions are carried in `# user` comment lines. All
    /// numbers use shortest round-trip formatting, so parsing the record
    /// reproduces the set bit for bit.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# user x_m y_m z_m");
        for (i, u) in self.users.iter().enumerate() {
            let p = u.position;
            let _ = writeln!(out, "# user {i} {} {} {}", p.x, p.y, p.z);
        }
        let _ = writeln!(out, "user,amplitude,delay_s,azimuth_rad,elevation_rad");
        for (i, u) in self.users.iter().enumerate() {
            for p in &u.paths {
                let _ = writeln!(
                    out,
                    "{i},{},{},{},{}",
                    p.amplitude, p.delay, p.azimuth, p.elevation
                );
            }
        }
        out
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut users: Vec<UserPaths> = Vec::new();
        let err = |n: usize, msg: &str| Error::Parse(format!("line {}: {msg}", n + 1));
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("user,") {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# user") {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 4 {
                    // column legend
                    continue;
                }
                let idx: usize = f[0].parse().map_err(|_| err(n, "bad user index"))?;
                let num = |s: &str| s.parse::<f64>().map_err(|_| err(n, "bad coordinate"));
                if idx != users.len() {
                    return Err(err(n, "user positions out of order"));
                }
                users.push(UserPaths {
                    position: Position3::new(num(f[1])?, num(f[2])?, num(f[3])?),
                    paths: Vec::new(),
                });
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(err(n, "expected 5 comma-separated fields"));
            }
            let idx: usize = f[0].parse().map_err(|_| err(n, "bad user index"))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(n, "bad number"));
            let path = PathParams::new(num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])?)?;
            while users.len() <= idx {
                users.push(UserPaths { position: Position3::ORIGIN, paths: Vec::new() });
            }
            users[idx].paths.push(path);
        }
        Self::new(users)
    }
}

/// OFDM numerology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmGrid {
    pub subcarriers: usize,
    /// Subcarrier spacing in Hz.
    pub spacing: f64,
}

impl OfdmGrid {
    pub fn new(subcarriers: usize, spacing: f64) -> Result<Self> {
        if subcarriers == 0 {
            return invalid("OFDM grid needs at least one subcarrier");
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return invalid(format!("subcarrier spacing must be positive, got {spacing}"));
        }
        Ok(Self { subcarriers, spacing })
    }

    /// Sampling rate `SΔ`.
    pub fn bandwidth(&self) -> f64 {
        self.subcarriers as f64 * self.spacing
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_pulse() {
        assert_eq!(pulse_triangle(0.0), 1.0);
        assert_eq!(pulse_triangle(1.0), 0.0);
        assert_eq!(pulse_triangle(-1.0), 0.0);
        assert_eq!(pulse_triangle(0.5), 0.5);
        assert_eq!(pulse_triangle(-0.25), 0.75);
        assert_eq!(pulse_triangle(3.0), 0.0);
    }

    #[test]
    fn path_validation() {
        assert!(PathParams::new(-1.0, 0.0, 0.0, 0.0).is_err());
        assert!(PathParams::new(1.0, -1e-9, 0.0, 0.0).is_err());
        assert!(PathParams::new(1.0, 0.0, 4.0, 0.0).is_err());
        assert!(PathSet::new(vec![UserPaths { position: Position3::ORIGIN, paths: vec![] }]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(OfdmGrid::new(0, 15e3).is_err());
        assert!(OfdmGrid::new(4, 0.0).is_err());
        assert_eq!(OfdmGrid::new(64, 15e3).unwrap().bandwidth(), 960e3);
    }

    #[test]
    fn record_round_trip_is_exact() {
        let set = PathSet::new(vec![
            UserPaths {
                position: Position3::new(120.5, -33.25, -2.75),
                paths: vec![
                    PathParams::new(1.234e-5, 4.1e-7, 0.1, -0.02).unwrap(),
                    PathParams::new(3.3e-6, 1.7e-6, -2.9, 0.4).unwrap(),
                ],
            },
            UserPaths {
                position: Position3::new(200.0, 10.0, -2.75),
                paths: vec![PathParams::new(0.1 + 0.2, 1.0 / 3.0 * 1e-6, 1.0, 0.0).unwrap()],
            },
        ])
        .unwrap();
        assert_eq!(PathSet::from_record(&set.to_record()).unwrap(), set);
    }
}
