//! Modeling toolkit for optical inter-satellite links (OISLs) in large LEO
//! constellations.
//!
//! The crate has four analysis areas plus shared plumbing:
//!
//! - [`orbital`]: Walker constellation kinematics — satellite positions and
//!   velocities, first-neighbor connection topologies, link geometry over
//!   time, and worst-case phase-factor searches.
//! - [`linkfeas`]: free-space link budget, shot/ASE-limited SNR, analytic BER
//!   models, pointing-jitter statistics, and FEC-margin feasibility tables.
//! - [`doppler`]: Doppler-shift time series, per-shell extrema, and the
//!   uniform-relative-motion upper bound.
//! - [`dsp`]: a dual-polarization coherent transmission simulator with
//!   two-stage carrier-frequency-offset compensation (spectral-symmetry
//!   coarse stage and Mth-power fine stage), adaptive equalization, blind
//!   phase search, and differential coding.
//!
//! All numerical conventions (rotation composition, responsivity-derived
//! quantum efficiency, usable-range limiting, logarithm bases, bandwidth
//! edge definitions) are documented on the items that implement them.

pub mod catalogue;
pub mod config;
pub mod constants;
pub mod doppler;
pub mod dsp;
pub mod golden;
pub mod linkfeas;
pub mod numerics;
pub mod orbital;
pub mod vec3;

pub use catalogue::{builtin_catalogue, parse_walker, CatalogueEntry};
pub use doppler::{DopplerExtrema, DopplerSample, UrmBound};
pub use dsp::{ChannelConfig, ComplexFrame, ReceiverConfig, SimResult};
pub use linkfeas::{FecSpec, LinkParams, MarginCell, ModulationScheme, NoiseRegime};
pub use orbital::{SatelliteIndex, ShellSpec, StateVector, Topology};
