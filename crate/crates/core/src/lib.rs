//! Wideband multi-user MIMO simulation with movable antenna arrays.
//!
//! The crate covers the full pipeline used to compare movable-antenna base
//! stations against fixed planar arrays:
//!
//! - [`geometry`]: antenna positions, movement regions, benchmark arrays and
//!   array response vectors.
//! - [`channel`]: user placement, geometric multipath generation, OFDM tap
//!   channels and per-subcarrier channel matrices.
//! - [`rates`]: uplink and downlink sum rates with transmitter EVM
//!   distortion (MMSE, SIC, linear precoding, DPC through duality).
//! - [`optimizer`]: particle swarm optimization of antenna positions.
//! - [`campaign`]: Monte Carlo experiments, configuration files and
//!   reproducible result export.

pub mod campaign;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod optimizer;
pub mod rates;
pub mod seed;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
