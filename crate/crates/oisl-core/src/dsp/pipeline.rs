//! End-to-end transmission runs: bits → differential encoding → pulse
//! shaping → channel impairments → receiver DSP → counted BER, plus SNR
//! sweeps and the SNR-penalty metric at a reference BER.

use super::bps::bps;
use super::cfe::{coarse_cfe, compensate, fine_cfe_mth_power};
use super::channel::{add_awgn, apply_doppler, apply_phase_noise, bandlimit};
use super::equalizer::{EqualizerConfig, equalize};
use super::filters::apply_lowpass;
use super::rrc::pulse_shape_rrc;
use super::symbols::{diff_decode, diff_encode, random_bits};
use super::{
    Architecture, ChannelConfig, DspError, ReceiverConfig, SimResult, TxConfig,
};
use crate::linkfeas::{ModulationFormat, required_snr};
use crate::numerics::{derive_seed, linear_to_db};
use rayon::prelude::*;

/// Front-end oversampling: the whole simulation runs at 2 samples/symbol.
const SPS: usize = 2;
/// Symbols dropped from the frame end before BER counting (filter tails
/// and partial final windows).
const TAIL_GUARD_SYMBOLS: usize = 256;
/// Alignment search range between decoded and transmitted symbols.
const LAG_SEARCH_SYMBOLS: i64 = 16;

/// Runs one full transmission at the configured SNR and offset.
///
/// The receiver follows the configured [`Architecture`]:
///
/// - `Evaluated` — the coarse estimator runs on the sampled (2 Sa/symbol)
///   signal in parallel with the equalizer, which therefore converges
///   under the full frequency offset; the coarse compensation is applied
///   to the equalizer's symbol-rate output, window for window.
/// - `Modified` — the coarse stage compensates right after sampling, a
///   low-pass filter then strips out-of-band noise before the equalizer.
///
/// Both variants finish with Mth-power fine CFE, blind phase search,
/// differential decoding, and aligned BER counting (the convergence
/// preamble and a tail guard are excluded).
pub fn run_pipeline(
    tx: &TxConfig,
    channel: &ChannelConfig,
    rx: &ReceiverConfig,
    n_symbols: usize,
    seed: u64,
) -> Result<SimResult, DspError> {
    rx.validate(SPS)?;
    if n_symbols <= rx.preamble_symbols + TAIL_GUARD_SYMBOLS {
        return Err(DspError::InvalidConfig(format!(
            "n_symbols = {n_symbols} leaves nothing to count after the \
             {}-symbol preamble and {TAIL_GUARD_SYMBOLS}-symbol tail guard",
            rx.preamble_symbols
        )));
    }
    let b = tx.format.bits_per_symbol() as usize;
    let data_seed = derive_seed(seed, 1);
    let bits_x = random_bits(n_symbols * b, data_seed, 0);
    let bits_y = random_bits(n_symbols * b, data_seed, 1);
    let sym_x = diff_encode(&bits_x, tx.format)?;
    let sym_y = diff_encode(&bits_y, tx.format)?;

    let mut frame = pulse_shape_rrc(
        &sym_x,
        &sym_y,
        tx.symbol_rate_baud,
        SPS,
        tx.rrc_span_symbols,
        tx.roll_off,
    )?;
    apply_doppler(&mut frame, channel.delta_f0_hz, channel.slope_hz_per_s);
    // Transmit and LO lasers contribute one combined Wiener walk.
    apply_phase_noise(&mut frame, 2.0 * channel.linewidth_hz, derive_seed(seed, 2));
    add_awgn(&mut frame, channel.snr_db, derive_seed(seed, 3));
    bandlimit(
        &mut frame,
        2.0 * channel.rx_bandwidth_hz,
        channel.rx_filter_order,
    )?;

    let eq_cfg = EqualizerConfig {
        taps: rx.eq_taps,
        algo: rx.eq_algo,
        step: rx.eq_step,
        preamble_symbols: rx.preamble_symbols,
    };

    let (coarse_estimates_hz, mut stream) = match rx.architecture {
        Architecture::Evaluated => {
            let ests = coarse_cfe(&frame, rx.alpha_hz, rx.coarse_fft_window)?;
            let mut eq_out = equalize(&frame, &eq_cfg)?;
            // Coarse windows at 2 Sa/symbol and fine windows in symbols
            // span the same symbol count (enforced by validate), so the
            // post-equalizer compensation reuses the estimates by index.
            compensate(&mut eq_out, &ests, rx.fine_fft_window);
            (ests, eq_out)
        }
        Architecture::Modified => {
            let ests = coarse_cfe(&frame, rx.alpha_hz, rx.coarse_fft_window)?;
            compensate(&mut frame, &ests, rx.coarse_fft_window);
            let filtered = apply_lowpass(&frame, rx.lpf_bandwidth_hz, rx.lpf_taps)?;
            let eq_out = equalize(&filtered, &eq_cfg)?;
            (ests, eq_out)
        }
    };

    let fine_estimates_hz = fine_cfe_mth_power(&stream, rx.fine_m, rx.fine_fft_window)?;
    compensate(&mut stream, &fine_estimates_hz, rx.fine_fft_window);
    let recovered = bps(&stream, tx.format, rx.bps_test_phases, rx.bps_window_symbols)?;

    // True window-mean offset minus estimate, per coarse window.
    let ts = 1.0 / (tx.symbol_rate_baud * SPS as f64);
    let w = rx.coarse_fft_window as f64;
    let residual_offsets_hz: Vec<f64> = coarse_estimates_hz
        .iter()
        .enumerate()
        .map(|(i, est)| {
            let t_mid = (i as f64 * w + (w - 1.0) / 2.0) * ts;
            channel.delta_f0_hz + channel.slope_hz_per_s * t_mid - est
        })
        .collect();

    let decoded_x = diff_decode(&recovered.x, tx.format)?;
    let decoded_y = diff_decode(&recovered.y, tx.format)?;
    let (bit_errors, bits_counted) = count_aligned_errors(
        &decoded_x,
        &decoded_y,
        &bits_x,
        &bits_y,
        b,
        rx.preamble_symbols,
        recovered.len(),
    );
    if bits_counted == 0 {
        return Err(DspError::InvalidConfig(
            "no bits left to count after alignment".into(),
        ));
    }

    Ok(SimResult {
        ber: bit_errors as f64 / bits_counted as f64,
        bit_errors,
        bits_counted,
        coarse_estimates_hz,
        residual_offsets_hz,
        fine_estimates_hz,
    })
}

/// Compares decoded bits against the transmitted reference over a symbol
/// lag search (the equalizer delay is a few symbols) and an optional
/// polarization swap (the butterfly may demux X onto the Y output), and
/// returns the error/total counts of the best alignment.
fn count_aligned_errors(
    decoded_x: &[u8],
    decoded_y: &[u8],
    ref_x: &[u8],
    ref_y: &[u8],
    bits_per_symbol: usize,
    preamble_symbols: usize,
    n_out_symbols: usize,
) -> (u64, u64) {
    let n_ref_symbols = ref_x.len() / bits_per_symbol;
    let start = preamble_symbols;
    let end = n_out_symbols.saturating_sub(TAIL_GUARD_SYMBOLS);
    let mut best: Option<(u64, u64)> = None;
    for lag in -LAG_SEARCH_SYMBOLS..=LAG_SEARCH_SYMBOLS {
        for swap in [false, true] {
            let (rx_bits, ry_bits) = if swap { (ref_y, ref_x) } else { (ref_x, ref_y) };
            let mut errors = 0u64;
            let mut total = 0u64;
            for k in start..end {
                let j = k as i64 + lag;
                if j < 0 || j >= n_ref_symbols as i64 {
                    continue;
                }
                let j = j as usize;
                for t in 0..bits_per_symbol {
                    errors += u64::from(decoded_x[k * bits_per_symbol + t]
                        != rx_bits[j * bits_per_symbol + t]);
                    errors += u64::from(decoded_y[k * bits_per_symbol + t]
                        != ry_bits[j * bits_per_symbol + t]);
                    total += 2;
                }
            }
            if total == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((be, bt)) => {
                    (errors as f64 / total as f64) < (be as f64 / bt as f64)
                }
            };
            if better {
                best = Some((errors, total));
            }
        }
    }
    best.unwrap_or((0, 0))
}

/// One point of an SNR sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Per-polarization Es/N0, dB.
    pub snr_db: f64,
    /// Full simulation outcome at this SNR.
    pub result: SimResult,
}

/// Runs the pipeline across an SNR grid (points in parallel, each with a
/// seed derived from `seed` and its grid index).
pub fn sweep_snr(
    tx: &TxConfig,
    channel: &ChannelConfig,
    rx: &ReceiverConfig,
    n_symbols: usize,
    snr_grid_db: &[f64],
    seed: u64,
) -> Result<Vec<SweepPoint>, DspError> {
    snr_grid_db
        .par_iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let point_channel = ChannelConfig { snr_db, ..*channel };
            let result = run_pipeline(
                tx,
                &point_channel,
                rx,
                n_symbols,
                derive_seed(seed, 1000 + i as u64),
            )?;
            Ok(SweepPoint { snr_db, result })
        })
        .collect()
}

/// SNR (dB) at which a measured BER curve crosses `reference_ber`,
/// interpolating linearly in (SNR dB, log10 BER). Zero-BER points cannot
/// be placed on the log scale and are skipped.
pub fn snr_at_ber(curve_db_ber: &[(f64, f64)], reference_ber: f64) -> Result<f64, DspError> {
    if !(reference_ber > 0.0 && reference_ber < 1.0) {
        return Err(DspError::InvalidConfig(format!(
            "reference BER {reference_ber} outside (0, 1)"
        )));
    }
    let mut points: Vec<(f64, f64)> = curve_db_ber
        .iter()
        .filter(|(_, ber)| *ber > 0.0)
        .map(|&(snr, ber)| (snr, ber.log10()))
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite SNR"));
    let target = reference_ber.log10();
    for pair in points.windows(2) {
        let (s0, l0) = pair[0];
        let (s1, l1) = pair[1];
        if (l0 - target) * (l1 - target) <= 0.0 && l0 != l1 {
            return Ok(s0 + (target - l0) * (s1 - s0) / (l1 - l0));
        }
    }
    Err(DspError::CurveDoesNotCross(reference_ber))
}

/// Analytic (non-differential) SNR in dB required for `ber` — the baseline
/// the penalty metric is measured against.
pub fn analytic_baseline_snr_db(
    format: ModulationFormat,
    ber: f64,
) -> Result<f64, DspError> {
    required_snr(format, ber)
        .map(linear_to_db)
        .map_err(|e| DspError::InvalidConfig(e.to_string()))
}

/// SNR penalty of a measured BER curve at `reference_ber`: measured
/// crossing minus the analytic baseline for the format.
pub fn penalty_at_ber(
    curve_db_ber: &[(f64, f64)],
    format: ModulationFormat,
    reference_ber: f64,
) -> Result<f64, DspError> {
    Ok(snr_at_ber(curve_db_ber, reference_ber)? - analytic_baseline_snr_db(format, reference_ber)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::ChannelConfig;
    use crate::linkfeas::ber;
    use approx::assert_abs_diff_eq;

    fn quiet_channel(snr_db: f64) -> ChannelConfig {
        ChannelConfig {
            delta_f0_hz: 0.0,
            slope_hz_per_s: 0.0,
            linewidth_hz: 0.0,
            snr_db,
            rx_bandwidth_hz: 28e9,
            rx_filter_order: 10,
        }
    }

    #[test]
    fn back_to_back_runs_are_error_free() {
        let tx = TxConfig::new(ModulationFormat::Qpsk, 32e9);
        let channel = quiet_channel(30.0);
        for arch in [Architecture::Evaluated, Architecture::Modified] {
            let rx = ReceiverConfig::for_format(tx.format, arch);
            let result = run_pipeline(&tx, &channel, &rx, 1 << 14, 5).unwrap();
            assert!(result.bits_counted > 10_000, "{arch:?}");
            assert_eq!(result.bit_errors, 0, "{arch:?}: ber = {}", result.ber);
        }
    }

    #[test]
    fn reference_offset_is_recovered_by_the_evaluated_receiver() {
        let tx = TxConfig::new(ModulationFormat::Qpsk, 32e9);
        let channel = ChannelConfig::new(10e9, 14.0);
        let rx = ReceiverConfig::for_format(tx.format, Architecture::Evaluated);
        let result = run_pipeline(&tx, &channel, &rx, 1 << 14, 7).unwrap();
        assert!(result.ber < 1e-3, "ber = {}", result.ber);
        // Every coarse residual must sit inside the fine pull-in range.
        let bound = tx.symbol_rate_baud / (2.0 * rx.fine_m as f64);
        let bad = result
            .residual_offsets_hz
            .iter()
            .filter(|r| r.abs() >= bound)
            .count();
        assert_eq!(bad, 0, "residuals out of range: {bad}");
        // Fine estimates stay inside their principal interval.
        for est in &result.fine_estimates_hz {
            assert!(est.abs() <= bound, "fine estimate {est:.3e}");
        }
    }

    #[test]
    fn modified_receiver_carries_16qam_at_moderate_snr() {
        let tx = TxConfig::new(ModulationFormat::Square16Qam, 32e9);
        let channel = ChannelConfig::new(10e9, 19.0);
        let rx = ReceiverConfig::for_format(tx.format, Architecture::Modified);
        let result = run_pipeline(&tx, &channel, &rx, 1 << 14, 11).unwrap();
        assert!(result.ber < 1e-2, "ber = {}", result.ber);
    }

    #[test]
    fn runs_are_deterministic_in_the_seed() {
        let tx = TxConfig::new(ModulationFormat::Qpsk, 32e9);
        let channel = ChannelConfig::new(5e9, 12.0);
        let rx = ReceiverConfig::for_format(tx.format, Architecture::Modified);
        let a = run_pipeline(&tx, &channel, &rx, 1 << 14, 42).unwrap();
        let b = run_pipeline(&tx, &channel, &rx, 1 << 14, 42).unwrap();
        let c = run_pipeline(&tx, &channel, &rx, 1 << 14, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.coarse_estimates_hz, c.coarse_estimates_hz);
    }

    #[test]
    fn rejects_frames_shorter_than_the_preamble() {
        let tx = TxConfig::new(ModulationFormat::Qpsk, 32e9);
        let rx = ReceiverConfig::for_format(tx.format, Architecture::Modified);
        assert!(run_pipeline(&tx, &quiet_channel(20.0), &rx, 4096, 1).is_err());
    }

    #[test]
    fn penalty_of_an_analytic_curve_is_zero() {
        // Feed the exact theoretical curve; the measured crossing must
        // land on the analytic baseline.
        let format = ModulationFormat::Qpsk;
        let curve: Vec<(f64, f64)> = (60..110)
            .map(|tenth| {
                let snr_db = tenth as f64 / 10.0;
                (snr_db, ber(format, crate::numerics::db_to_linear(snr_db)))
            })
            .collect();
        let p = penalty_at_ber(&curve, format, 4e-3).unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 0.01);
    }

    #[test]
    fn penalty_requires_a_crossing() {
        let curve = vec![(8.0, 1e-2), (9.0, 8e-3)];
        assert_eq!(
            penalty_at_ber(&curve, ModulationFormat::Qpsk, 4e-3),
            Err(DspError::CurveDoesNotCross(4e-3))
        );
        assert!(snr_at_ber(&[(8.0, 1e-2)], 0.0).is_err());
    }

    #[test]
    fn baseline_snrs_match_the_analytic_requirements() {
        assert_abs_diff_eq!(
            analytic_baseline_snr_db(ModulationFormat::Qpsk, 4e-3).unwrap(),
            8.4717,
            epsilon = 5e-4
        );
        assert_abs_diff_eq!(
            analytic_baseline_snr_db(ModulationFormat::Square16Qam, 4e-3).unwrap(),
            15.1322,
            epsilon = 5e-4
        );
    }
}
