//! Channel and receiver front-end impairments: time-varying carrier
//! frequency offset, laser phase noise, additive white Gaussian noise, and
//! the receiver's analog bandwidth limit.

use super::{C64, ComplexFrame, DspError};
use crate::numerics::db_to_linear;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use std::f64::consts::TAU;

/// Applies a linearly drifting carrier frequency offset
/// `f(t) = f0 + slope·t` to both polarizations.
///
/// The multiplier phase is accumulated per sample,
/// `φ_n = Σ_{m=0..n} 2π·T_s·(f0 + slope·m·T_s)`, i.e. the discrete
/// integral of the instantaneous frequency including the first sample.
pub fn apply_doppler(frame: &mut ComplexFrame, f0_hz: f64, slope_hz_per_s: f64) {
    let ts = 1.0 / frame.sample_rate_hz;
    let mut phi = 0.0f64;
    for n in 0..frame.x.len() {
        phi += TAU * ts * (f0_hz + slope_hz_per_s * n as f64 * ts);
        let rot = C64::from_polar(1.0, phi);
        frame.x[n] *= rot;
        frame.y[n] *= rot;
    }
}

/// Applies combined transmit/LO laser phase noise as a Wiener process
/// shared by both polarizations (a single optical carrier), with
/// per-sample increment variance `2π·Δν·T_s` for combined linewidth `Δν`.
pub fn apply_phase_noise(frame: &mut ComplexFrame, combined_linewidth_hz: f64, seed: u64) {
    if combined_linewidth_hz <= 0.0 {
        return;
    }
    let ts = 1.0 / frame.sample_rate_hz;
    let sigma = (TAU * combined_linewidth_hz * ts).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = 0.0f64;
    for n in 0..frame.x.len() {
        let w: f64 = StandardNormal.sample(&mut rng);
        theta += sigma * w;
        let rot = C64::from_polar(1.0, theta);
        frame.x[n] *= rot;
        frame.y[n] *= rot;
    }
}

/// Adds circular complex AWGN sized so the requested SNR is the
/// symbol-rate-referenced Es/N0: with per-polarization mean sample power
/// `P` and `sps` samples per symbol, the per-sample complex noise variance
/// is `P·sps / snr`. The two polarizations receive independent noise
/// (streams 0 and 1 of the seeded generator).
pub fn add_awgn(frame: &mut ComplexFrame, snr_db: f64, seed: u64) {
    let snr = db_to_linear(snr_db);
    let sps = frame.samples_per_symbol as f64;
    for (stream, pol) in [(0u64, &mut frame.x), (1u64, &mut frame.y)] {
        let n = pol.len() as f64;
        let power: f64 = pol.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        let sigma = (power * sps / snr / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        for z in pol.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *z += C64::new(sigma * re, sigma * im);
        }
    }
}

/// Zero-phase super-Gaussian low-pass filter modelling the receiver's
/// analog bandwidth. `full_bandwidth_hz` is the full (double-sided) width
/// `B`; the amplitude response is `H(f) = exp(−½·(2f/B)^(2·order))`,
/// −4.34 dB at the band edges ±B/2.
pub fn bandlimit(
    frame: &mut ComplexFrame,
    full_bandwidth_hz: f64,
    order: u32,
) -> Result<(), DspError> {
    if full_bandwidth_hz <= 0.0 || order == 0 {
        return Err(DspError::InvalidConfig(format!(
            "bandlimit needs positive bandwidth and order (got {full_bandwidth_hz} Hz, order {order})"
        )));
    }
    let n = frame.x.len();
    if n == 0 {
        return Ok(());
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let half_width = full_bandwidth_hz / 2.0;
    let df = frame.sample_rate_hz / n as f64;
    let response: Vec<f64> = (0..n)
        .map(|k| {
            let f = if k <= n / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            };
            let x2 = (f / half_width).powi(2);
            (-0.5 * x2.powi(order as i32)).exp()
        })
        .collect();
    for pol in [&mut frame.x, &mut frame.y] {
        fwd.process(pol);
        for (z, h) in pol.iter_mut().zip(&response) {
            *z *= h;
        }
        inv.process(pol);
        let scale = 1.0 / n as f64;
        for z in pol.iter_mut() {
            *z *= scale;
        }
    }
    Ok(())
}
