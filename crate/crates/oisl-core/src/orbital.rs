//! Walker constellation kinematics: satellite positions and velocities,
//! first-neighbor connection topologies, link geometry over time, and the
//! worst-case phase-factor search.
//!
//! # Geometry convention
//!
//! A shell places `P` circular orbital planes of radius `R`, all inclined by
//! `θ`, with plane `i` at RAAN `ρ_i = 2πi/P`. Satellite `k` of plane `i`
//! sits at in-plane anomaly `Ω_ik(t) = ωt + 2π(k/S + iF/(PS))`, where `F`
//! is the integer phase factor. The position is the rotation composition
//!
//! ```text
//! r_ik(t) = Rz(ρ_i) · Rx(θ) · (R·cosΩ, R·sinΩ, 0)ᵀ
//!         = R · [ cosρ·cosΩ − cosθ·sinρ·sinΩ,
//!                 sinρ·cosΩ + cosθ·cosρ·sinΩ,
//!                 sinθ·sinΩ ]
//! ```
//!
//! which keeps `‖r‖ = R` exactly and pairs planes in the standard Walker
//! sense (plane i+1 ahead of plane i by the RAAN increment). The sign of the
//! `y` cross-term is `+`; flipping it instead of the `x` cross-term would
//! describe the mirror constellation and relabel every phase factor `F` as
//! `P − F`, which does not reproduce the reference worst-case geometry.

use crate::constants::{MU_EARTH, R_EARTH_M};
use crate::numerics::golden_max;
use crate::vec3::{self, Vec3};
use rayon::prelude::*;

/// Errors from constellation construction and indexing.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OrbitalError {
    /// A shell parameter violates its invariant.
    #[error("invalid shell parameter: {0}")]
    InvalidShell(String),
    /// A satellite index lies outside the shell's plane/slot bounds.
    #[error("satellite index (plane {plane}, slot {slot}) out of bounds for {planes}x{slots} shell")]
    IndexOutOfBounds {
        /// Offending plane index.
        plane: u32,
        /// Offending slot index.
        slot: u32,
        /// Number of planes in the shell.
        planes: u32,
        /// Number of slots per plane.
        slots: u32,
    },
}

/// A Walker shell: `P` planes × `S` satellites per plane at a common
/// altitude and inclination, with integer phase factor `F` in `[0, P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSpec {
    /// Orbit altitude above the mean Earth radius, km.
    pub altitude_km: f64,
    /// Orbital plane inclination, radians.
    pub inclination_rad: f64,
    /// Number of orbital planes `P` (≥ 1).
    pub planes: u32,
    /// Satellites per plane `S` (≥ 1).
    pub sats_per_plane: u32,
    /// Phase factor `F` in `[0, P)`.
    pub phase_factor: u32,
}

impl ShellSpec {
    /// Builds a validated shell.
    pub fn new(
        altitude_km: f64,
        inclination_rad: f64,
        planes: u32,
        sats_per_plane: u32,
        phase_factor: u32,
    ) -> Result<Self, OrbitalError> {
        if !(altitude_km.is_finite() && altitude_km > 0.0) {
            return Err(OrbitalError::InvalidShell(format!(
                "altitude must be positive, got {altitude_km} km"
            )));
        }
        if !inclination_rad.is_finite() {
            return Err(OrbitalError::InvalidShell("inclination must be finite".into()));
        }
        if planes == 0 {
            return Err(OrbitalError::InvalidShell("planes must be >= 1".into()));
        }
        if sats_per_plane == 0 {
            return Err(OrbitalError::InvalidShell("sats_per_plane must be >= 1".into()));
        }
        if phase_factor >= planes {
            return Err(OrbitalError::InvalidShell(format!(
                "phase factor {phase_factor} must be < planes {planes}"
            )));
        }
        Ok(Self {
            altitude_km,
            inclination_rad,
            planes,
            sats_per_plane,
            phase_factor,
        })
    }

    /// Same shell with a different phase factor.
    pub fn with_phase_factor(mut self, phase_factor: u32) -> Result<Self, OrbitalError> {
        if phase_factor >= self.planes {
            return Err(OrbitalError::InvalidShell(format!(
                "phase factor {phase_factor} must be < planes {}",
                self.planes
            )));
        }
        self.phase_factor = phase_factor;
        Ok(self)
    }

    /// Orbit radius `R = R⊕ + H`, meters.
    pub fn radius_m(&self) -> f64 {
        R_EARTH_M + self.altitude_km * 1e3
    }

    /// Circular-orbit angular velocity `ω = sqrt(G·M⊕ / R³)`, rad/s.
    pub fn angular_velocity_rad_s(&self) -> f64 {
        (MU_EARTH / self.radius_m().powi(3)).sqrt()
    }

    /// Orbital period `2π/ω`, seconds.
    pub fn period_s(&self) -> f64 {
        std::f64::consts::TAU / self.angular_velocity_rad_s()
    }

    /// Total satellite count `N = P·S`.
    pub fn total_satellites(&self) -> u32 {
        self.planes * self.sats_per_plane
    }

    /// Circular-orbit speed `sqrt(G·M⊕ / R)`, m/s.
    pub fn orbital_speed_m_s(&self) -> f64 {
        (MU_EARTH / self.radius_m()).sqrt()
    }

    fn check_index(&self, idx: SatelliteIndex) -> Result<(), OrbitalError> {
        if idx.plane >= self.planes || idx.slot >= self.sats_per_plane {
            return Err(OrbitalError::IndexOutOfBounds {
                plane: idx.plane,
                slot: idx.slot,
                planes: self.planes,
                slots: self.sats_per_plane,
            });
        }
        Ok(())
    }

    /// RAAN-like plane rotation angle `ρ_i = 2πi/P`.
    fn plane_angle(&self, plane: u32) -> f64 {
        std::f64::consts::TAU * plane as f64 / self.planes as f64
    }

    /// Constant part of the in-plane anomaly: `2π(k/S + iF/(PS))`.
    fn anomaly_offset(&self, idx: SatelliteIndex) -> f64 {
        let s = self.sats_per_plane as f64;
        let p = self.planes as f64;
        std::f64::consts::TAU
            * (idx.slot as f64 / s + idx.plane as f64 * self.phase_factor as f64 / (p * s))
    }
}

/// Identifies one satellite: plane `i` in `[0, P)`, slot `k` in `[0, S)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SatelliteIndex {
    /// Orbital plane index `i`.
    pub plane: u32,
    /// In-plane slot index `k`.
    pub slot: u32,
}

impl SatelliteIndex {
    /// Convenience constructor.
    pub fn new(plane: u32, slot: u32) -> Self {
        Self { plane, slot }
    }
}

/// Position and velocity of a satellite at an epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    /// ECI-like position, meters; `‖position‖ = R`.
    pub position: Vec3,
    /// Velocity, m/s; `‖velocity‖ = sqrt(G·M⊕/R)`.
    pub velocity: Vec3,
    /// Epoch, seconds.
    pub epoch: f64,
}

/// Link topology relative to a source satellite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// Same plane, next slot (`k+1 mod S`).
    IntraorbitalNext,
    /// Same plane, previous slot (`k−1 mod S`).
    IntraorbitalPrev,
    /// Next plane (`i+1 mod P`), same slot.
    InterorbitalKToK,
    /// Next plane (`i+1 mod P`), previous slot (`k−1 mod S`).
    InterorbitalKToKMinus1,
    /// Explicit destination, ignoring the first-neighbor patterns.
    General(SatelliteIndex),
}

impl Topology {
    /// True for the two same-plane first-neighbor kinds.
    pub fn is_intraorbital(&self) -> bool {
        matches!(self, Topology::IntraorbitalNext | Topology::IntraorbitalPrev)
    }
}

/// In-plane unit-circle position rotated by inclination (about x) and plane
/// angle (about z). `ct`/`st` are cos/sin of the inclination.
#[inline]
fn unit_position(ct: f64, st: f64, rho: f64, om: f64) -> Vec3 {
    let (sr, cr) = rho.sin_cos();
    let (so, co) = om.sin_cos();
    [
        cr * co - ct * sr * so,
        sr * co + ct * cr * so,
        st * so,
    ]
}

/// Derivative of [`unit_position`] with respect to the anomaly `om`.
#[inline]
fn unit_velocity(ct: f64, st: f64, rho: f64, om: f64) -> Vec3 {
    let (sr, cr) = rho.sin_cos();
    let (so, co) = om.sin_cos();
    [
        -cr * so - ct * sr * co,
        -sr * so + ct * cr * co,
        st * co,
    ]
}

/// Position of a satellite at time `t`, meters.
pub fn satellite_position(
    shell: &ShellSpec,
    idx: SatelliteIndex,
    t: f64,
) -> Result<Vec3, OrbitalError> {
    shell.check_index(idx)?;
    let om = shell.angular_velocity_rad_s() * t + shell.anomaly_offset(idx);
    let (st, ct) = shell.inclination_rad.sin_cos();
    Ok(vec3::scale(
        unit_position(ct, st, shell.plane_angle(idx.plane), om),
        shell.radius_m(),
    ))
}

/// Velocity of a satellite at time `t`, m/s (closed-form time derivative of
/// [`satellite_position`]).
pub fn satellite_velocity(
    shell: &ShellSpec,
    idx: SatelliteIndex,
    t: f64,
) -> Result<Vec3, OrbitalError> {
    shell.check_index(idx)?;
    let w = shell.angular_velocity_rad_s();
    let om = w * t + shell.anomaly_offset(idx);
    let (st, ct) = shell.inclination_rad.sin_cos();
    Ok(vec3::scale(
        unit_velocity(ct, st, shell.plane_angle(idx.plane), om),
        shell.radius_m() * w,
    ))
}

/// Position and velocity bundled with the epoch.
pub fn satellite_state(
    shell: &ShellSpec,
    idx: SatelliteIndex,
    t: f64,
) -> Result<StateVector, OrbitalError> {
    Ok(StateVector {
        position: satellite_position(shell, idx, t)?,
        velocity: satellite_velocity(shell, idx, t)?,
        epoch: t,
    })
}

/// Destination index for a topology, with modular wraparound in both the
/// plane and slot directions.
pub fn resolve_topology(shell: &ShellSpec, src: SatelliteIndex, topo: Topology) -> SatelliteIndex {
    let p = shell.planes;
    let s = shell.sats_per_plane;
    match topo {
        Topology::IntraorbitalNext => SatelliteIndex::new(src.plane, (src.slot + 1) % s),
        Topology::IntraorbitalPrev => SatelliteIndex::new(src.plane, (src.slot + s - 1) % s),
        Topology::InterorbitalKToK => SatelliteIndex::new((src.plane + 1) % p, src.slot),
        Topology::InterorbitalKToKMinus1 => {
            SatelliteIndex::new((src.plane + 1) % p, (src.slot + s - 1) % s)
        }
        Topology::General(dest) => dest,
    }
}

/// Instantaneous link length `‖r_dest(t) − r_src(t)‖`, meters.
pub fn link_distance(
    shell: &ShellSpec,
    src: SatelliteIndex,
    topo: Topology,
    t: f64,
) -> Result<f64, OrbitalError> {
    let dest = resolve_topology(shell, src, topo);
    let a = satellite_position(shell, src, t)?;
    let b = satellite_position(shell, dest, t)?;
    Ok(vec3::dist(a, b))
}

/// Chord length between same-plane slots separated by `slot_offset`.
pub fn intraorbital_chord_m(shell: &ShellSpec, slot_offset: u32) -> f64 {
    let s = shell.sats_per_plane as f64;
    2.0 * shell.radius_m() * (std::f64::consts::PI * slot_offset as f64 / s).sin()
}

/// Number of uniform time-grid samples per orbital period used by the
/// max-over-period searches (followed by golden-section refinement).
pub const PERIOD_GRID_SAMPLES: usize = 20_000;

/// Maximum link distance over one orbital period for the pair
/// (plane 0, slot 0) → (plane `di`, slot `dk`), with `di`/`dk` already
/// reduced modulo `P`/`S`. The constellation is homogeneous, so every pair
/// with the same offsets shares this maximum.
fn max_pair_distance_over_period(shell: &ShellSpec, di: u32, dk: u32) -> f64 {
    let r = shell.radius_m();
    let (st, ct) = shell.inclination_rad.sin_cos();
    let rho2 = shell.plane_angle(di);
    let phi2 = shell.anomaly_offset(SatelliteIndex::new(di, dk));
    // Squared unit-sphere separation as a function of the common anomaly wt.
    let d2 = |wt: f64| {
        let a = unit_position(ct, st, 0.0, wt);
        let b = unit_position(ct, st, rho2, wt + phi2);
        vec3::norm_sq(vec3::sub(a, b))
    };
    let n = PERIOD_GRID_SAMPLES;
    let step = std::f64::consts::TAU / n as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let v = d2(i as f64 * step);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // Refine inside the bracketing grid cells; tolerance equivalent to
    // 1e-6 s on the time axis.
    let w = shell.angular_velocity_rad_s();
    let center = best_i as f64 * step;
    let (_, d2max) = golden_max(d2, center - step, center + step, w * 1e-6);
    r * d2max.max(best).sqrt()
}

/// Plane/slot offsets of a topology as seen from source (0, 0).
fn topology_offsets(shell: &ShellSpec, topo: Topology) -> (u32, u32) {
    let dest = resolve_topology(shell, SatelliteIndex::new(0, 0), topo);
    (dest.plane, dest.slot)
}

/// Phase factor maximizing the maximum-over-one-period link distance, and
/// that distance in meters.
///
/// All `F` in `[0, P)` are searched; ties break toward the smallest `F`.
/// Intraorbital topologies (and any same-plane pair) are `F`-independent:
/// the constant chord is returned with `F = 0`. No line-of-sight masking is
/// applied here — the result is pure geometry; see
/// [`crate::linkfeas::usable_link_distance_m`] for the range-limited form.
pub fn worst_case_phase_factor(shell: &ShellSpec, topo: Topology) -> (u32, f64) {
    let (di, dk) = topology_offsets(shell, topo);
    if di == 0 {
        return (0, intraorbital_chord_m(shell, dk.min(shell.sats_per_plane - dk)));
    }
    let maxima: Vec<f64> = (0..shell.planes)
        .into_par_iter()
        .map(|f| {
            let s = shell
                .with_phase_factor(f)
                .expect("phase factor < planes by construction");
            max_pair_distance_over_period(&s, di, dk)
        })
        .collect();
    let mut best_f = 0u32;
    let mut best_d = f64::NEG_INFINITY;
    for (f, &d) in maxima.iter().enumerate() {
        // Strictly-greater with a 1 nm guard keeps the smallest F on ties.
        if d > best_d + 1e-9 {
            best_d = d;
            best_f = f as u32;
        }
    }
    (best_f, best_d)
}

/// True iff the straight segment `p1`–`p2` stays strictly outside the Earth
/// sphere of radius R⊕ (no occlusion).
pub fn line_of_sight(p1: Vec3, p2: Vec3) -> bool {
    let d = vec3::sub(p2, p1);
    let dd = vec3::norm_sq(d);
    let closest = if dd == 0.0 {
        p1
    } else {
        let tt = (-vec3::dot(p1, d) / dd).clamp(0.0, 1.0);
        vec3::add(p1, vec3::scale(d, tt))
    };
    vec3::norm(closest) > R_EARTH_M
}

/// Longest chord between two satellites at orbit radius `radius_m` whose
/// line of sight grazes the shell at `clearance_m` above the Earth surface:
/// `2·sqrt(R² − (R⊕ + clearance)²)`.
pub fn grazing_chord_m(radius_m: f64, clearance_m: f64) -> f64 {
    let hmin = R_EARTH_M + clearance_m;
    2.0 * (radius_m * radius_m - hmin * hmin).max(0.0).sqrt()
}
