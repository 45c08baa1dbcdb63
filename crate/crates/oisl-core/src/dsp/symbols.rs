//! Bit sources, Gray constellation mapping, hard decisions, and the
//! rotation-invariant differential coding layer.
//!
//! # Differential convention
//!
//! Every supported constellation is invariant under its phase symmetry
//! group (π for BPSK, π/2 for QPSK/16-QAM). Data is therefore carried in
//! symmetry-group *transitions*: for QPSK/16-QAM the two most significant
//! bits of each symbol select the quadrant increment `Δq` (Gray-coded:
//! 00→0, 01→1, 11→2, 10→3) and, for 16-QAM, the two least significant
//! bits select the point inside the rotated quadrant (a local frame
//! `w = z·e^(−jqπ/2)` that any constant constellation rotation leaves
//! untouched). BPSK toggles the sign on a 1 bit. Encode and decode both
//! start from reference state `q = 0` (BPSK: +1), so a constant rotation
//! can corrupt at most the first symbol's quadrant bits — which sit inside
//! the receiver's convergence preamble in every pipeline use.

use super::{C64, DspError};
use crate::linkfeas::ModulationFormat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 16-QAM axis scale so the constellation has unit mean energy.
const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/√10
/// QPSK axis scale (unit modulus points).
const QPSK_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn ensure_supported(format: ModulationFormat) -> Result<(), DspError> {
    match format {
        ModulationFormat::Star8Qam => Err(DspError::UnsupportedFormat(format)),
        _ => Ok(()),
    }
}

/// Deterministic equiprobable bit stream. `stream` separates independent
/// sources (e.g. the two polarizations) under one seed.
pub fn random_bits(n: usize, seed: u64, stream: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Gray level map for one 16-QAM axis: two bits → {−3, −1, +1, +3}.
fn qam16_axis_level(b1: u8, b0: u8) -> f64 {
    match (b1, b0) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        (1, 0) => 3.0,
        _ => unreachable!("bits are 0/1"),
    }
}

fn qam16_axis_bits(level: f64) -> (u8, u8) {
    if level < -2.0 {
        (0, 0)
    } else if level < 0.0 {
        (0, 1)
    } else if level < 2.0 {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// Maps a bit stream to Gray-coded unit-mean-energy constellation points
/// (non-differential). The bit count must be a multiple of the format's
/// bits per symbol.
pub fn map_symbols(bits: &[u8], format: ModulationFormat) -> Result<Vec<C64>, DspError> {
    ensure_supported(format)?;
    let b = format.bits_per_symbol() as usize;
    if bits.len() % b != 0 {
        return Err(DspError::InvalidConfig(format!(
            "bit count {} is not a multiple of {b} bits/symbol",
            bits.len()
        )));
    }
    let out = bits
        .chunks_exact(b)
        .map(|c| match format {
            ModulationFormat::Bpsk => C64::new(1.0 - 2.0 * c[0] as f64, 0.0),
            ModulationFormat::Qpsk => C64::new(
                (1.0 - 2.0 * c[0] as f64) * QPSK_SCALE,
                (1.0 - 2.0 * c[1] as f64) * QPSK_SCALE,
            ),
            ModulationFormat::Square16Qam => C64::new(
                qam16_axis_level(c[0], c[1]) * QAM16_SCALE,
                qam16_axis_level(c[2], c[3]) * QAM16_SCALE,
            ),
            ModulationFormat::Star8Qam => unreachable!("rejected above"),
        })
        .collect();
    Ok(out)
}

/// Inverse of [`map_symbols`] on ideal (or hard-decided) points.
pub fn symbols_to_bits(symbols: &[C64], format: ModulationFormat) -> Result<Vec<u8>, DspError> {
    ensure_supported(format)?;
    let mut bits = Vec::with_capacity(symbols.len() * format.bits_per_symbol() as usize);
    for z in symbols {
        match format {
            ModulationFormat::Bpsk => bits.push(if z.re < 0.0 { 1 } else { 0 }),
            ModulationFormat::Qpsk => {
                bits.push(if z.re < 0.0 { 1 } else { 0 });
                bits.push(if z.im < 0.0 { 1 } else { 0 });
            }
            ModulationFormat::Square16Qam => {
                let (i1, i0) = qam16_axis_bits(z.re / QAM16_SCALE);
                let (q1, q0) = qam16_axis_bits(z.im / QAM16_SCALE);
                bits.extend_from_slice(&[i1, i0, q1, q0]);
            }
            ModulationFormat::Star8Qam => unreachable!("rejected above"),
        }
    }
    Ok(bits)
}

/// Deterministic per-polarization Gray-mapped symbol sequences
/// (polarization X uses bit stream 0, Y stream 1).
pub fn generate_symbols(
    format: ModulationFormat,
    n_symbols: usize,
    seed: u64,
) -> Result<(Vec<C64>, Vec<C64>), DspError> {
    ensure_supported(format)?;
    if n_symbols == 0 {
        return Err(DspError::InvalidConfig("n_symbols must be positive".into()));
    }
    let b = format.bits_per_symbol() as usize;
    let x = map_symbols(&random_bits(n_symbols * b, seed, 0), format)?;
    let y = map_symbols(&random_bits(n_symbols * b, seed, 1), format)?;
    Ok((x, y))
}

fn quantize_axis(v: f64) -> f64 {
    if v < -2.0 {
        -3.0
    } else if v < 0.0 {
        -1.0
    } else if v < 2.0 {
        1.0
    } else {
        3.0
    }
}

/// Nearest ideal constellation point.
pub fn hard_decision(z: C64, format: ModulationFormat) -> C64 {
    match format {
        ModulationFormat::Bpsk => C64::new(if z.re < 0.0 { -1.0 } else { 1.0 }, 0.0),
        ModulationFormat::Qpsk => C64::new(
            if z.re < 0.0 { -QPSK_SCALE } else { QPSK_SCALE },
            if z.im < 0.0 { -QPSK_SCALE } else { QPSK_SCALE },
        ),
        ModulationFormat::Square16Qam => C64::new(
            quantize_axis(z.re / QAM16_SCALE) * QAM16_SCALE,
            quantize_axis(z.im / QAM16_SCALE) * QAM16_SCALE,
        ),
        ModulationFormat::Star8Qam => z,
    }
}

/// Counter-clockwise quadrant index of a point (0 = first quadrant).
fn quadrant(z: C64) -> u32 {
    match (z.re >= 0.0, z.im >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

/// e^{j·q·π/2} as an exact complex unit.
fn quadrant_phasor(q: u32) -> C64 {
    match q % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Gray code of a quadrant increment: data dibit → Δq.
fn dibit_to_dq(d1: u8, d0: u8) -> u32 {
    match (d1, d0) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        (1, 0) => 3,
        _ => unreachable!("bits are 0/1"),
    }
}

fn dq_to_dibit(dq: u32) -> (u8, u8) {
    match dq % 4 {
        0 => (0, 0),
        1 => (0, 1),
        2 => (1, 1),
        _ => (1, 0),
    }
}

/// First-quadrant local point of a 16-QAM symbol from its two LSBs.
fn qam16_local_point(d1: u8, d0: u8) -> C64 {
    C64::new(
        if d1 == 0 { 1.0 } else { 3.0 } * QAM16_SCALE,
        if d0 == 0 { 1.0 } else { 3.0 } * QAM16_SCALE,
    )
}

/// Differentially encodes a bit stream into constellation symbols.
pub fn diff_encode(bits: &[u8], format: ModulationFormat) -> Result<Vec<C64>, DspError> {
    ensure_supported(format)?;
    let b = format.bits_per_symbol() as usize;
    if bits.len() % b != 0 {
        return Err(DspError::InvalidConfig(format!(
            "bit count {} is not a multiple of {b} bits/symbol",
            bits.len()
        )));
    }
    let mut out = Vec::with_capacity(bits.len() / b);
    match format {
        ModulationFormat::Bpsk => {
            let mut level = 1.0;
            for c in bits.chunks_exact(1) {
                if c[0] == 1 {
                    level = -level;
                }
                out.push(C64::new(level, 0.0));
            }
        }
        ModulationFormat::Qpsk => {
            let first_quadrant = C64::new(QPSK_SCALE, QPSK_SCALE);
            let mut q = 0u32;
            for c in bits.chunks_exact(2) {
                q = (q + dibit_to_dq(c[0], c[1])) % 4;
                out.push(first_quadrant * quadrant_phasor(q));
            }
        }
        ModulationFormat::Square16Qam => {
            let mut q = 0u32;
            for c in bits.chunks_exact(4) {
                q = (q + dibit_to_dq(c[0], c[1])) % 4;
                out.push(qam16_local_point(c[2], c[3]) * quadrant_phasor(q));
            }
        }
        ModulationFormat::Star8Qam => unreachable!("rejected above"),
    }
    Ok(out)
}

/// Differentially decodes (noisy) symbols back into bits. Hard decisions
/// are taken internally; any constant rotation by the constellation's
/// symmetry group leaves all output bits unchanged except possibly the
/// first symbol's quadrant bits.
pub fn diff_decode(symbols: &[C64], format: ModulationFormat) -> Result<Vec<u8>, DspError> {
    ensure_supported(format)?;
    let b = format.bits_per_symbol() as usize;
    let mut bits = Vec::with_capacity(symbols.len() * b);
    match format {
        ModulationFormat::Bpsk => {
            let mut prev = 1.0;
            for z in symbols {
                let level = if z.re < 0.0 { -1.0 } else { 1.0 };
                bits.push(if level == prev { 0 } else { 1 });
                prev = level;
            }
        }
        ModulationFormat::Qpsk => {
            let mut q_prev = 0u32;
            for z in symbols {
                let q = quadrant(*z);
                let (d1, d0) = dq_to_dibit((q + 4 - q_prev) % 4);
                bits.extend_from_slice(&[d1, d0]);
                q_prev = q;
            }
        }
        ModulationFormat::Square16Qam => {
            let mut q_prev = 0u32;
            for z in symbols {
                let decided = hard_decision(*z, format);
                let q = quadrant(decided);
                let w = decided * quadrant_phasor((4 - q) % 4);
                let (d1, d0) = dq_to_dibit((q + 4 - q_prev) % 4);
                let d2 = u8::from(w.re > 2.0 * QAM16_SCALE);
                let d3 = u8::from(w.im > 2.0 * QAM16_SCALE);
                bits.extend_from_slice(&[d1, d0, d2, d3]);
                q_prev = q;
            }
        }
        ModulationFormat::Star8Qam => unreachable!("rejected above"),
    }
    Ok(bits)
}
