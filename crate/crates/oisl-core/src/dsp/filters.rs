//! Discrete receive-path filters: the windowed-sinc low-pass used ahead of
//! the equalizer in the modified architecture.

use super::{C64, ComplexFrame, DspError};

/// Windowed-sinc (rectangular window) low-pass prototype with single-sided
/// cutoff `cutoff_hz`, normalized to unit DC gain.
pub fn lowpass_taps(cutoff_hz: f64, sample_rate_hz: f64, n_taps: usize) -> Result<Vec<f64>, DspError> {
    if n_taps == 0 {
        return Err(DspError::InvalidConfig("n_taps must be positive".into()));
    }
    if cutoff_hz <= 0.0 || cutoff_hz >= sample_rate_hz / 2.0 {
        return Err(DspError::InvalidConfig(format!(
            "cutoff {cutoff_hz} Hz outside (0, fs/2) for fs = {sample_rate_hz} Hz"
        )));
    }
    let fc = cutoff_hz / sample_rate_hz; // cycles per sample
    let center = (n_taps as f64 - 1.0) / 2.0;
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|k| {
            let t = k as f64 - center;
            let x = 2.0 * fc * t;
            if x.abs() < 1e-12 {
                2.0 * fc
            } else {
                2.0 * fc * (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
            }
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    for h in &mut taps {
        *h /= dc;
    }
    Ok(taps)
}

/// Applies the low-pass to both polarizations at the frame's sample rate.
///
/// For an even tap count the true group delay is `(n_taps−1)/2` samples —
/// a half-integer. The integer part is compensated here by advancing
/// `n_taps/2` samples; the residual half-sample shift is left for the
/// fractionally-spaced equalizer to absorb.
pub fn apply_lowpass(
    frame: &ComplexFrame,
    cutoff_hz: f64,
    n_taps: usize,
) -> Result<ComplexFrame, DspError> {
    let taps = lowpass_taps(cutoff_hz, frame.sample_rate_hz, n_taps)?;
    let shift = n_taps / 2;
    let filter = |signal: &[C64]| -> Vec<C64> {
        let n = signal.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, slot) in out.iter_mut().enumerate() {
            let full = i + shift;
            let k_lo = full.saturating_sub(n - 1);
            let k_hi = full.min(taps.len() - 1);
            let mut acc = C64::new(0.0, 0.0);
            for k in k_lo..=k_hi {
                acc += signal[full - k] * taps[k];
            }
            *slot = acc;
        }
        out
    };
    Ok(ComplexFrame {
        x: filter(&frame.x),
        y: filter(&frame.y),
        sample_rate_hz: frame.sample_rate_hz,
        samples_per_symbol: frame.samples_per_symbol,
    })
}
