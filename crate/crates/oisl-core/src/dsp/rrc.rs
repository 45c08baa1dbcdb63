//! Root-raised-cosine pulse shaping and matched filtering.
//!
//! Taps are generated in closed form (including the two removable
//! singularities), normalized to unit energy `Σh² = 1`, and applied by
//! direct linear convolution with the group delay of `(taps−1)/2` samples
//! compensated, so shaped and filtered frames stay aligned with their
//! symbol grid.

use super::{C64, ComplexFrame, DspError};

/// Root-raised-cosine filter taps.
///
/// `span_symbols` is the total filter span; the returned filter has
/// `span_symbols · samples_per_symbol + 1` taps, is symmetric, and is
/// normalized to unit energy.
pub fn rrc_taps(
    samples_per_symbol: usize,
    span_symbols: usize,
    roll_off: f64,
) -> Result<Vec<f64>, DspError> {
    if samples_per_symbol == 0 || span_symbols == 0 {
        return Err(DspError::InvalidConfig(
            "samples_per_symbol and span_symbols must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&roll_off) || roll_off == 0.0 {
        return Err(DspError::InvalidConfig(format!(
            "roll-off {roll_off} outside (0, 1]"
        )));
    }
    let n_taps = span_symbols * samples_per_symbol + 1;
    let half = (n_taps - 1) as i64 / 2;
    let beta = roll_off;
    let mut taps = Vec::with_capacity(n_taps);
    for k in -half..=half {
        let t = k as f64 / samples_per_symbol as f64; // time in symbols
        let h = if k == 0 {
            1.0 + beta * (4.0 / std::f64::consts::PI - 1.0)
        } else if (1.0 - (4.0 * beta * t).powi(2)).abs() < 1e-9 {
            // t = ±1/(4β): removable singularity of the general branch.
            let arg = std::f64::consts::PI / (4.0 * beta);
            (beta / std::f64::consts::SQRT_2)
                * ((1.0 + 2.0 / std::f64::consts::PI) * arg.sin()
                    + (1.0 - 2.0 / std::f64::consts::PI) * arg.cos())
        } else {
            let pi_t = std::f64::consts::PI * t;
            ((pi_t * (1.0 - beta)).sin() + 4.0 * beta * t * (pi_t * (1.0 + beta)).cos())
                / (pi_t * (1.0 - (4.0 * beta * t).powi(2)))
        };
        taps.push(h);
    }
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = energy.sqrt().recip();
    for h in &mut taps {
        *h *= scale;
    }
    Ok(taps)
}

/// Direct linear convolution with real taps, trimmed to the input length
/// with the filter's group delay `(taps−1)/2` compensated.
pub fn convolve_same(signal: &[C64], taps: &[f64]) -> Vec<C64> {
    let delay = (taps.len() - 1) / 2;
    let n = signal.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (i, slot) in out.iter_mut().enumerate() {
        // Output index i corresponds to full-convolution index i + delay.
        let full = i + delay;
        let mut acc = C64::new(0.0, 0.0);
        let k_lo = full.saturating_sub(n - 1);
        let k_hi = full.min(taps.len() - 1);
        for k in k_lo..=k_hi {
            acc += signal[full - k] * taps[k];
        }
        *slot = acc;
    }
    out
}

/// Upsamples symbols by zero insertion and applies the RRC shaping filter,
/// then normalizes each polarization to unit mean sample power.
pub fn pulse_shape_rrc(
    x_symbols: &[C64],
    y_symbols: &[C64],
    symbol_rate_baud: f64,
    samples_per_symbol: usize,
    span_symbols: usize,
    roll_off: f64,
) -> Result<ComplexFrame, DspError> {
    if x_symbols.len() != y_symbols.len() || x_symbols.is_empty() {
        return Err(DspError::InvalidConfig(
            "polarization symbol streams must be equal-length and non-empty".into(),
        ));
    }
    let taps = rrc_taps(samples_per_symbol, span_symbols, roll_off)?;
    let shape = |symbols: &[C64]| -> Vec<C64> {
        let mut up = vec![C64::new(0.0, 0.0); symbols.len() * samples_per_symbol];
        for (i, s) in symbols.iter().enumerate() {
            up[i * samples_per_symbol] = *s;
        }
        let mut shaped = convolve_same(&up, &taps);
        let power: f64 =
            shaped.iter().map(|z| z.norm_sqr()).sum::<f64>() / shaped.len() as f64;
        let scale = power.sqrt().recip();
        for z in &mut shaped {
            *z *= scale;
        }
        shaped
    };
    Ok(ComplexFrame {
        x: shape(x_symbols),
        y: shape(y_symbols),
        sample_rate_hz: symbol_rate_baud * samples_per_symbol as f64,
        samples_per_symbol,
    })
}

/// Applies the receive-side RRC matched filter (same span and roll-off as
/// the shaping filter) without changing the sample rate.
pub fn matched_filter(
    frame: &ComplexFrame,
    span_symbols: usize,
    roll_off: f64,
) -> Result<ComplexFrame, DspError> {
    let taps = rrc_taps(frame.samples_per_symbol, span_symbols, roll_off)?;
    Ok(ComplexFrame {
        x: convolve_same(&frame.x, &taps),
        y: convolve_same(&frame.y, &taps),
        sample_rate_hz: frame.sample_rate_hz,
        samples_per_symbol: frame.samples_per_symbol,
    })
}

/// Decimates an oversampled frame to one sample per symbol, keeping the
/// samples at `phase` within each symbol period.
pub fn decimate(frame: &ComplexFrame, phase: usize) -> Result<ComplexFrame, DspError> {
    let sps = frame.samples_per_symbol;
    if phase >= sps {
        return Err(DspError::InvalidConfig(format!(
            "decimation phase {phase} out of range for {sps} samples/symbol"
        )));
    }
    let pick = |v: &[C64]| -> Vec<C64> { v.iter().skip(phase).step_by(sps).copied().collect() };
    Ok(ComplexFrame {
        x: pick(&frame.x),
        y: pick(&frame.y),
        sample_rate_hz: frame.sample_rate_hz / sps as f64,
        samples_per_symbol: 1,
    })
}
