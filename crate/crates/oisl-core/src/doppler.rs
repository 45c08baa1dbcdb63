//! Doppler-shift time series, per-shell/topology extrema over the phase
//! factor, and the closing-speed upper bound for head-on geometries.

use crate::constants::{C_LIGHT_M_S, MU_EARTH, R_EARTH_M};
use crate::numerics::golden_max;
use crate::orbital::{
    resolve_topology, satellite_state, OrbitalError, SatelliteIndex, ShellSpec, Topology,
    PERIOD_GRID_SAMPLES,
};
use crate::vec3;
use rayon::prelude::*;

/// Errors from Doppler evaluation.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DopplerError {
    /// Underlying constellation indexing failure.
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
    /// Source and destination occupy the same point (no line of sight
    /// direction exists).
    #[error("source and destination satellites are coincident at t = {t} s")]
    CoincidentSatellites {
        /// Evaluation time.
        t: f64,
    },
    /// Non-positive wavelength.
    #[error("wavelength must be positive, got {0} m")]
    InvalidWavelength(f64),
}

/// One sample of the Doppler trajectory of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerSample {
    /// Time, seconds.
    pub t: f64,
    /// Doppler shift, Hz.
    pub delta_f: f64,
    /// Time derivative of the shift, Hz/s.
    pub delta_f_dot: f64,
}

/// Worst-case Doppler figures of a (shell, topology) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerExtrema {
    /// Maximum |Δf| over one period and all phase factors, Hz.
    pub delta_f_max_hz: f64,
    /// Phase factor attaining `delta_f_max_hz`.
    pub f_at: u32,
    /// Maximum |dΔf/dt| at that same phase factor, Hz/s.
    pub delta_f_dot_max_hz_per_s: f64,
    /// Maximum |dΔf/dt| over all phase factors independently, Hz/s.
    pub delta_f_dot_independent_hz_per_s: f64,
    /// Phase factor attaining the independent derivative maximum.
    pub f_dot_at: u32,
}

/// Closing-speed bound on the Doppler shift at a given altitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrmBound {
    /// Altitude, km.
    pub altitude_km: f64,
    /// Head-on closing speed `2·sqrt(G·M⊕/(R⊕+H))`, m/s.
    pub closing_speed_mps: f64,
    /// Doppler bound `(closing speed / c)·f_s`, Hz.
    pub delta_f_bound_hz: f64,
}

/// Doppler shift of the link at time `t`:
///
/// ```text
/// Δf = (c/λ_s) · (d‖r‖/dt) / (c − ṙ_d·r̂),   r = r_d − r_s
/// ```
///
/// with the range rate `d‖r‖/dt = (ṙ_d − ṙ_s)·r̂` computed from analytic
/// velocities. Positive when the satellites separate.
pub fn doppler_shift(
    shell: &ShellSpec,
    src: SatelliteIndex,
    topo: Topology,
    t: f64,
    wavelength_m: f64,
) -> Result<f64, DopplerError> {
    if !(wavelength_m > 0.0) {
        return Err(DopplerError::InvalidWavelength(wavelength_m));
    }
    let dest = resolve_topology(shell, src, topo);
    let s = satellite_state(shell, src, t)?;
    let d = satellite_state(shell, dest, t)?;
    let r = vec3::sub(d.position, s.position);
    let dist = vec3::norm(r);
    if dist == 0.0 {
        return Err(DopplerError::CoincidentSatellites { t });
    }
    let rhat = vec3::scale(r, 1.0 / dist);
    let range_rate = vec3::dot(vec3::sub(d.velocity, s.velocity), rhat);
    let denom = C_LIGHT_M_S - vec3::dot(d.velocity, rhat);
    Ok((C_LIGHT_M_S / wavelength_m) * range_rate / denom)
}

/// Time derivative of [`doppler_shift`]: central finite difference with
/// step `h = 1e-3 s`, Richardson-extrapolated once (`(4·d_{h/2} − d_h)/3`).
/// The shift varies on ~100 s scales, so both truncation and rounding sit
/// far below the reported precision.
pub fn doppler_derivative(
    shell: &ShellSpec,
    src: SatelliteIndex,
    topo: Topology,
    t: f64,
    wavelength_m: f64,
) -> Result<f64, DopplerError> {
    let h = 1e-3;
    let f = |tt: f64| doppler_shift(shell, src, topo, tt, wavelength_m);
    let d1 = (f(t + h)? - f(t - h)?) / (2.0 * h);
    let d2 = (f(t + h / 2.0)? - f(t - h / 2.0)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Samples `Δf` and `dΔf/dt` at `n` uniform times over one orbital period.
pub fn doppler_series(
    shell: &ShellSpec,
    src: SatelliteIndex,
    topo: Topology,
    wavelength_m: f64,
    n: usize,
) -> Result<Vec<DopplerSample>, DopplerError> {
    let period = shell.period_s();
    (0..n)
        .map(|i| {
            let t = period * i as f64 / n as f64;
            Ok(DopplerSample {
                t,
                delta_f: doppler_shift(shell, src, topo, t, wavelength_m)?,
                delta_f_dot: doppler_derivative(shell, src, topo, t, wavelength_m)?,
            })
        })
        .collect()
}

/// Maximum of |f(t)| over one period: uniform grid then golden-section
/// refinement of the bracketing cell to 1e-6 s.
fn max_abs_over_period(f: &dyn Fn(f64) -> f64, period: f64) -> f64 {
    let n = PERIOD_GRID_SAMPLES;
    let step = period / n as f64;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(i as f64 * step).abs();
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let center = best_i as f64 * step;
    let (_, refined) = golden_max(|t| f(t).abs(), center - step, center + step, 1e-6);
    refined.max(best)
}

/// Worst-case Doppler extrema over the full phase-factor sweep.
///
/// For every `F` in `[0, P)` the maxima of |Δf| and |dΔf/dt| over one
/// period are located independently. The reported shift maximum is the
/// largest over `F` (ties toward smaller `F`); the derivative maximum is
/// reported both at that same `F` and as the independent maximum over all
/// `F`, because the two conventions genuinely differ for some shells.
/// Intraorbital topologies have identically zero Doppler and return zeros.
/// No line-of-sight masking is applied (worst-case figures are quoted even
/// for shells whose widest geometries are intermittently occluded).
pub fn extrema_search(shell: &ShellSpec, topo: Topology, wavelength_m: f64) -> DopplerExtrema {
    if topo.is_intraorbital() {
        return DopplerExtrema {
            delta_f_max_hz: 0.0,
            f_at: 0,
            delta_f_dot_max_hz_per_s: 0.0,
            delta_f_dot_independent_hz_per_s: 0.0,
            f_dot_at: 0,
        };
    }
    let src = SatelliteIndex::new(0, 0);
    let period = shell.period_s();
    let per_f: Vec<(f64, f64)> = (0..shell.planes)
        .into_par_iter()
        .map(|f| {
            let s = shell
                .with_phase_factor(f)
                .expect("phase factor < planes by construction");
            let shift = |t: f64| {
                doppler_shift(&s, src, topo, t, wavelength_m).expect("valid catalogue link")
            };
            let dot = |t: f64| {
                doppler_derivative(&s, src, topo, t, wavelength_m).expect("valid catalogue link")
            };
            (
                max_abs_over_period(&shift, period),
                max_abs_over_period(&dot, period),
            )
        })
        .collect();

    let mut out = DopplerExtrema {
        delta_f_max_hz: f64::NEG_INFINITY,
        f_at: 0,
        delta_f_dot_max_hz_per_s: 0.0,
        delta_f_dot_independent_hz_per_s: f64::NEG_INFINITY,
        f_dot_at: 0,
    };
    for (f, &(df, dfdot)) in per_f.iter().enumerate() {
        if df > out.delta_f_max_hz {
            out.delta_f_max_hz = df;
            out.f_at = f as u32;
            out.delta_f_dot_max_hz_per_s = dfdot;
        }
        if dfdot > out.delta_f_dot_independent_hz_per_s {
            out.delta_f_dot_independent_hz_per_s = dfdot;
            out.f_dot_at = f as u32;
        }
    }
    out
}

/// One row of the per-shell Doppler extrema table.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerTableRow {
    /// Shell name.
    pub shell: String,
    /// Topology label: `k2k` or `k2km1`.
    pub topology: &'static str,
    /// Worst-case figures.
    pub extrema: DopplerExtrema,
}

/// Extrema table over the built-in catalogue: 13 shells × the two
/// inter-plane topologies, shell-major.
pub fn doppler_table(wavelength_m: f64) -> Vec<DopplerTableRow> {
    let topos = [
        (Topology::InterorbitalKToK, "k2k"),
        (Topology::InterorbitalKToKMinus1, "k2km1"),
    ];
    crate::catalogue::builtin_catalogue()
        .iter()
        .flat_map(|e| {
            topos.iter().map(|&(topo, label)| DopplerTableRow {
                shell: e.name.clone(),
                topology: label,
                extrema: extrema_search(&e.shell, topo, wavelength_m),
            })
        })
        .collect()
}

/// Doppler bound for the head-on ("unfavorable relative motion") geometry:
/// two satellites at altitude `H` closing at twice the circular-orbit
/// speed, `Δf = (2v/c)·f_s` with `v = sqrt(G·M⊕/(R⊕+H))`.
pub fn urm_bound(altitude_km: f64, wavelength_m: f64) -> UrmBound {
    let r = R_EARTH_M + altitude_km * 1e3;
    let v = (MU_EARTH / r).sqrt();
    let f_s = C_LIGHT_M_S / wavelength_m;
    UrmBound {
        altitude_km,
        closing_speed_mps: 2.0 * v,
        delta_f_bound_hz: 2.0 * v / C_LIGHT_M_S * f_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::builtin_shell;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const LAMBDA: f64 = 1550e-9;

    #[test]
    fn intraorbital_doppler_is_null() {
        let sh = &builtin_shell("B2").unwrap().shell;
        for t in [0.0, 100.0, 2000.0] {
            let df = doppler_shift(sh, SatelliteIndex::new(3, 9), Topology::IntraorbitalNext, t, LAMBDA)
                .unwrap();
            assert_abs_diff_eq!(df, 0.0, epsilon = 1e-3);
            let dd =
                doppler_derivative(sh, SatelliteIndex::new(3, 9), Topology::IntraorbitalNext, t, LAMBDA)
                    .unwrap();
            assert_abs_diff_eq!(dd, 0.0, epsilon = 1.0);
        }
    }

    #[test]
    fn doppler_is_reciprocal_under_link_reversal() {
        // Swapping source and destination leaves the radial-velocity
        // numerator (ṙ_d − ṙ_s)·r̂ unchanged (both factors negate); only the
        // relativistic denominator changes, by O(v/c) ≈ 2.5e-5. The shift is
        // therefore reciprocal — same sign, equal to first order — not
        // antisymmetric.
        let sh = builtin_shell("A1").unwrap().shell.with_phase_factor(2).unwrap();
        let src = SatelliteIndex::new(0, 0);
        let dest = resolve_topology(&sh, src, Topology::InterorbitalKToK);
        for t in [50.0, 400.0, 1800.0] {
            let fwd = doppler_shift(&sh, src, Topology::InterorbitalKToK, t, LAMBDA).unwrap();
            let back = doppler_shift(&sh, dest, Topology::General(src), t, LAMBDA).unwrap();
            assert_relative_eq!(fwd, back, max_relative = 1e-4);
            assert!(
                (fwd - back).abs() > 0.0,
                "the O(v/c) denominator asymmetry should be visible"
            );
        }
    }

    #[test]
    fn doppler_vanishes_at_range_extremum() {
        let sh = builtin_shell("B2").unwrap().shell.with_phase_factor(5).unwrap();
        let src = SatelliteIndex::new(0, 0);
        // Locate the distance maximum on a fine grid; the range rate — and
        // with it the shift — must vanish there.
        let period = sh.period_s();
        let n = 200_000;
        let mut best = (0.0f64, f64::NEG_INFINITY);
        for i in 0..n {
            let t = period * i as f64 / n as f64;
            let d = crate::orbital::link_distance(&sh, src, Topology::InterorbitalKToK, t).unwrap();
            if d > best.1 {
                best = (t, d);
            }
        }
        let df = doppler_shift(&sh, src, Topology::InterorbitalKToK, best.0, LAMBDA).unwrap();
        assert_abs_diff_eq!(df, 0.0, epsilon = 5e4); // ≪ the ~0.4 GHz peak
    }

    #[test]
    fn extrema_frozen_values() {
        // (shell, topo, Δf_max GHz, F, Δf' GHz/s at that F)
        let cases = [
            ("A1", Topology::InterorbitalKToK, 1.0837, 2, 0.3655),
            ("C4", Topology::InterorbitalKToK, 6.3443, 3, 0.0962),
            ("D3", Topology::InterorbitalKToKMinus1, 0.7065, 13, 1.2562),
            ("C1", Topology::InterorbitalKToKMinus1, 0.3387, 59, 0.0360),
        ];
        for (name, topo, df_ghz, f_at, dfdot_ghz) in cases {
            let sh = &builtin_shell(name).unwrap().shell;
            let ex = extrema_search(sh, topo, LAMBDA);
            assert_eq!(ex.f_at, f_at, "{name}");
            assert_abs_diff_eq!(ex.delta_f_max_hz / 1e9, df_ghz, epsilon = 5e-4);
            assert_abs_diff_eq!(ex.delta_f_dot_max_hz_per_s / 1e9, dfdot_ghz, epsilon = 5e-4);
            // The independent derivative maximum can only be ≥ the same-F one.
            assert!(ex.delta_f_dot_independent_hz_per_s >= ex.delta_f_dot_max_hz_per_s - 1e-6);
        }
    }

    #[test]
    fn extrema_match_brute_force_on_synthetic_shell() {
        let base = crate::orbital::ShellSpec::new(700.0, 65f64.to_radians(), 3, 5, 0).unwrap();
        let got = extrema_search(&base, Topology::InterorbitalKToK, LAMBDA);
        let src = SatelliteIndex::new(0, 0);
        let mut best = (0u32, f64::NEG_INFINITY);
        for f in 0..3u32 {
            let sh = base.with_phase_factor(f).unwrap();
            let mut m = f64::NEG_INFINITY;
            for g in 0..100_000 {
                let t = sh.period_s() * g as f64 / 100_000.0;
                let df = doppler_shift(&sh, src, Topology::InterorbitalKToK, t, LAMBDA)
                    .unwrap()
                    .abs();
                m = m.max(df);
            }
            if m > best.1 {
                best = (f, m);
            }
        }
        assert_eq!(got.f_at, best.0);
        assert_relative_eq!(got.delta_f_max_hz, best.1, max_relative = 1e-4);
    }

    #[test]
    fn derivative_matches_series_slope() {
        let sh = builtin_shell("A1").unwrap().shell.with_phase_factor(2).unwrap();
        let src = SatelliteIndex::new(0, 0);
        let series =
            doppler_series(&sh, src, Topology::InterorbitalKToK, LAMBDA, 4000).unwrap();
        let dt = series[1].t - series[0].t;
        let scale = series
            .iter()
            .map(|s| s.delta_f_dot.abs())
            .fold(0.0f64, f64::max);
        for w in series.windows(3).step_by(97) {
            let slope = (w[2].delta_f - w[0].delta_f) / (2.0 * dt);
            assert_abs_diff_eq!(slope, w[1].delta_f_dot, epsilon = scale * 1e-3);
        }
    }

    #[test]
    fn urm_bound_reference_and_monotonicity() {
        let lam = C_LIGHT_M_S / 193.4e12;
        let b = urm_bound(400.0, lam);
        assert_relative_eq!(b.delta_f_bound_hz, 10.0e9, max_relative = 0.02);
        assert_abs_diff_eq!(b.delta_f_bound_hz / 1e9, 9.8992, epsilon = 1e-3);
        assert_abs_diff_eq!(b.closing_speed_mps, 2.0 * 7671.5, epsilon = 4.0);
        let mut prev = b.delta_f_bound_hz;
        for h in [600.0, 800.0, 1200.0, 2000.0] {
            let next = urm_bound(h, lam).delta_f_bound_hz;
            assert!(next < prev);
            prev = next;
        }
    }

    #[test]
    fn fnc_extrema_sit_below_urm_bound() {
        for name in ["A1", "C4", "D3"] {
            let sh = &builtin_shell(name).unwrap().shell;
            let bound = urm_bound(sh.altitude_km, LAMBDA).delta_f_bound_hz;
            for topo in [Topology::InterorbitalKToK, Topology::InterorbitalKToKMinus1] {
                let ex = extrema_search(sh, topo, LAMBDA);
                assert!(
                    ex.delta_f_max_hz < bound,
                    "{name}: {} ≥ bound {}",
                    ex.delta_f_max_hz,
                    bound
                );
            }
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let sh = &builtin_shell("A1").unwrap().shell;
        assert!(matches!(
            doppler_shift(sh, SatelliteIndex::new(0, 0), Topology::IntraorbitalNext, 0.0, -1.0),
            Err(DopplerError::InvalidWavelength(_))
        ));
        // Coincident: a degenerate one-per-plane shell linking a slot to itself.
        let tiny = crate::orbital::ShellSpec::new(550.0, 0.9, 2, 1, 0).unwrap();
        let same = Topology::General(SatelliteIndex::new(0, 0));
        assert!(matches!(
            doppler_shift(&tiny, SatelliteIndex::new(0, 0), same, 3.0, LAMBDA),
            Err(DopplerError::CoincidentSatellites { .. })
        ));
    }
}
