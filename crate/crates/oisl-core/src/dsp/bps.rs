//! Blind phase search (BPS) carrier-phase recovery.
//!
//! Each polarization is scanned independently against a grid of test
//! phases covering one period of the constellation's rotational symmetry
//! (π/2 for QPSK/16-QAM, π for BPSK). For every test phase the squared
//! distance to the nearest constellation point is summed over a sliding
//! symbol window (prefix sums make this O(1) per symbol); the per-symbol
//! winner is unwrapped by minimum phase jump so the trajectory follows the
//! laser phase walk instead of snapping back into the principal interval.

use super::symbols::hard_decision;
use super::{C64, ComplexFrame, DspError};
use crate::linkfeas::ModulationFormat;

/// Rotational symmetry period of a format's constellation, radians.
fn symmetry_period(format: ModulationFormat) -> Result<f64, DspError> {
    match format {
        ModulationFormat::Bpsk => Ok(std::f64::consts::PI),
        ModulationFormat::Qpsk | ModulationFormat::Square16Qam => {
            Ok(std::f64::consts::FRAC_PI_2)
        }
        ModulationFormat::Star8Qam => Err(DspError::UnsupportedFormat(format)),
    }
}

/// Wraps a phase difference into `[−period/2, period/2]`.
fn wrap_jump(delta: f64, period: f64) -> f64 {
    delta - period * (delta / period).round()
}

fn bps_single(
    symbols: &[C64],
    format: ModulationFormat,
    n_phases: usize,
    window_symbols: usize,
) -> Result<Vec<C64>, DspError> {
    let period = symmetry_period(format)?;
    let n = symbols.len();
    let phases: Vec<f64> = (0..n_phases)
        .map(|b| b as f64 * period / n_phases as f64)
        .collect();
    let rotors: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();

    // prefix[b][i] = Σ_{k<i} |rot_b·z_k − decision(rot_b·z_k)|²
    let mut prefix = vec![vec![0.0f64; n + 1]; n_phases];
    for (b, rot) in rotors.iter().enumerate() {
        let row = &mut prefix[b];
        for (k, z) in symbols.iter().enumerate() {
            let test = z * rot;
            let d = test - hard_decision(test, format);
            row[k + 1] = row[k] + d.norm_sqr();
        }
    }

    let half = window_symbols / 2;
    let mut raw = Vec::with_capacity(n);
    for k in 0..n {
        let lo = k.saturating_sub(half);
        let hi = (k + (window_symbols - half)).min(n);
        let mut best_b = 0;
        let mut best = f64::INFINITY;
        for (b, row) in prefix.iter().enumerate() {
            let cost = row[hi] - row[lo];
            if cost < best {
                best = cost;
                best_b = b;
            }
        }
        raw.push(phases[best_b]);
    }

    // Minimum-jump unwrapping across the symmetry period.
    let mut theta = Vec::with_capacity(n);
    let mut acc = raw.first().copied().unwrap_or(0.0);
    theta.push(acc);
    for k in 1..n {
        acc += wrap_jump(raw[k] - raw[k - 1], period);
        theta.push(acc);
    }

    Ok(symbols
        .iter()
        .zip(&theta)
        .map(|(z, &t)| z * C64::from_polar(1.0, t))
        .collect())
}

/// Runs BPS on both polarizations and returns the phase-compensated frame.
pub fn bps(
    frame: &ComplexFrame,
    format: ModulationFormat,
    n_phases: usize,
    window_symbols: usize,
) -> Result<ComplexFrame, DspError> {
    if n_phases == 0 || window_symbols == 0 {
        return Err(DspError::InvalidConfig(
            "BPS needs positive phase count and window".into(),
        ));
    }
    Ok(ComplexFrame {
        x: bps_single(&frame.x, format, n_phases, window_symbols)?,
        y: bps_single(&frame.y, format, n_phases, window_symbols)?,
        sample_rate_hz: frame.sample_rate_hz,
        samples_per_symbol: frame.samples_per_symbol,
    })
}
