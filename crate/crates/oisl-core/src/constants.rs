//! Physical constants used throughout the toolkit (SI units).

/// Newtonian gravitational constant, m³ kg⁻¹ s⁻².
pub const G_GRAV: f64 = 6.6743e-11;

/// Earth mass, kg.
pub const M_EARTH_KG: f64 = 5.972e24;

/// Mean Earth radius, m.
pub const R_EARTH_M: f64 = 6_371_000.0;

/// Standard gravitational parameter G·M⊕, m³ s⁻².
pub const MU_EARTH: f64 = G_GRAV * M_EARTH_KG;

/// Speed of light in vacuum, m/s.
pub const C_LIGHT_M_S: f64 = 299_792_458.0;

/// Planck constant, J·s.
pub const H_PLANCK_J_S: f64 = 6.62607004e-34;

/// Elementary charge, C.
pub const Q_ELECTRON_C: f64 = 1.602176634e-19;

/// Atmospheric clearance altitude for usable-range line-of-sight limiting, m.
///
/// Inter-satellite links whose chord would graze below this altitude are
/// treated as unusable; the longest usable link distance at orbit radius R
/// is the grazing chord 2·sqrt(R² − (R⊕ + clearance)²).
pub const ATMOSPHERIC_CLEARANCE_M: f64 = 80_000.0;
