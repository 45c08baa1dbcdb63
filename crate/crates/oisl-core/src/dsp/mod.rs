//! Dual-polarization coherent transmission simulator and receiver DSP.
//!
//! The transmit side differentially encodes Gray-mapped symbols, shapes
//! them with a root-raised-cosine filter at 2 samples/symbol, and the
//! channel applies a linearly drifting carrier frequency offset, a shared
//! Wiener laser phase walk, per-polarization AWGN, and a super-Gaussian
//! receiver bandwidth limitation. Two receiver architectures are modeled:
//!
//! - **Evaluated**: coarse spectral-symmetry CFE runs parallel to the
//!   adaptive equalizer (which therefore converges under the full offset);
//!   the coarse compensation is applied to the equalizer output, followed
//!   by Mth-power fine CFE, blind phase search, and differential decoding.
//! - **Modified**: the coarse stage estimates *and compensates* right after
//!   sampling, a low-pass filter then trims out-of-band noise, and the
//!   equalizer runs on the recentered signal before the same fine
//!   CFE → BPS → decision tail.
//!
//! The ADC is ideal: the whole simulation runs at exactly 2 samples/symbol
//! (sampling-clock and quantization effects are out of scope).

pub mod bps;
pub mod cfe;
pub mod channel;
pub mod equalizer;
pub mod filters;
pub mod pipeline;
pub mod rrc;
pub mod symbols;

use crate::linkfeas::ModulationFormat;

/// Complex sample type used throughout the simulator.
pub type C64 = num_complex::Complex64;

/// Errors from the DSP simulator.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DspError {
    /// A configuration value violates its invariant.
    #[error("invalid DSP configuration: {0}")]
    InvalidConfig(String),
    /// The format is not supported by the time-domain simulator.
    #[error("format {0:?} is not supported by the time-domain simulator")]
    UnsupportedFormat(ModulationFormat),
    /// A coarse-CFE window carried no power on one spectral half.
    #[error("degenerate coarse-CFE window {window}: one spectral half has zero power")]
    DegenerateCoarseWindow {
        /// Index of the offending window.
        window: usize,
    },
    /// The adaptive equalizer diverged.
    #[error("equalizer diverged at output symbol {at_symbol} (power ratio {power_ratio:.1})")]
    EqualizerDiverged {
        /// Output symbol index at which divergence was detected.
        at_symbol: usize,
        /// Output-to-input power ratio at detection.
        power_ratio: f64,
    },
    /// A BER-vs-SNR curve does not cross the requested reference BER.
    #[error("BER curve does not cross the reference BER {0:e}")]
    CurveDoesNotCross(f64),
    /// The α calibration found no admissible scale factor.
    #[error("alpha calibration failed: {0}")]
    CalibrationFailed(String),
}

/// A dual-polarization complex-baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    /// Polarization-X samples.
    pub x: Vec<C64>,
    /// Polarization-Y samples (same length as `x`).
    pub y: Vec<C64>,
    /// Sample rate, Hz.
    pub sample_rate_hz: f64,
    /// Samples per symbol (2 through the front end, 1 after equalization).
    pub samples_per_symbol: usize,
}

impl ComplexFrame {
    /// Number of samples per polarization.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// True when the frame holds no samples.
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Sample period `T_s = 1/sample_rate`, seconds.
    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Mean per-polarization power, averaged over both polarizations.
    pub fn mean_power(&self) -> f64 {
        let e: f64 = self
            .x
            .iter()
            .chain(self.y.iter())
            .map(|z| z.norm_sqr())
            .sum();
        e / (2.0 * self.len() as f64)
    }
}

/// Transmit-side scheme for the simulator: format plus symbol rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxConfig {
    /// Modulation format (BPSK, QPSK, or square 16-QAM).
    pub format: ModulationFormat,
    /// Symbol rate, Baud.
    pub symbol_rate_baud: f64,
    /// RRC roll-off factor.
    pub roll_off: f64,
    /// RRC span, symbols per side of the impulse response.
    pub rrc_span_symbols: usize,
}

impl TxConfig {
    /// Simulator default: 0.1 roll-off, 64-symbol RRC span.
    pub fn new(format: ModulationFormat, symbol_rate_baud: f64) -> Self {
        Self {
            format,
            symbol_rate_baud,
            roll_off: 0.1,
            rrc_span_symbols: 64,
        }
    }
}

/// Channel impairments applied between transmitter and receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Initial carrier frequency offset `Δf₀`, Hz.
    pub delta_f0_hz: f64,
    /// Linear offset drift `dΔf/dt`, Hz/s.
    pub slope_hz_per_s: f64,
    /// Linewidth of *each* laser, Hz; the Wiener walk uses the combined
    /// transmit + LO linewidth (twice this value).
    pub linewidth_hz: f64,
    /// Per-polarization SNR (Es/N0, noise referenced to the symbol rate), dB.
    pub snr_db: f64,
    /// Receiver front-end bandwidth (single-sided edge), Hz.
    pub rx_bandwidth_hz: f64,
    /// Super-Gaussian order of the front-end bandwidth limitation.
    pub rx_filter_order: u32,
}

impl ChannelConfig {
    /// Default impairment set: 1 THz/s drift, 100 kHz lasers, 28 GHz
    /// receiver edge, 10th-order limitation.
    pub fn new(delta_f0_hz: f64, snr_db: f64) -> Self {
        Self {
            delta_f0_hz,
            slope_hz_per_s: 1e12,
            linewidth_hz: 100e3,
            snr_db,
            rx_bandwidth_hz: 28e9,
            rx_filter_order: 10,
        }
    }
}

/// Receiver architecture variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// Coarse CFE parallel to the equalizer, compensation after it.
    Evaluated,
    /// Coarse CFE and compensation immediately after sampling, then LPF.
    Modified,
}

/// Adaptive-equalizer criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EqAlgo {
    /// Constant-modulus algorithm (single target radius).
    Cma,
    /// Radius-directed equalization (three 16-QAM radii).
    Rde,
}

/// Receiver DSP configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverConfig {
    /// Architecture variant.
    pub architecture: Architecture,
    /// Coarse-CFE scale factor `α`, Hz.
    pub alpha_hz: f64,
    /// Coarse-CFE FFT window, samples.
    pub coarse_fft_window: usize,
    /// Mth-power order of the fine CFE (2 for BPSK, 4 otherwise).
    pub fine_m: u32,
    /// Fine-CFE FFT window, symbols.
    pub fine_fft_window: usize,
    /// Equalizer taps per butterfly branch.
    pub eq_taps: usize,
    /// Equalizer criterion.
    pub eq_algo: EqAlgo,
    /// Equalizer step size during the convergence preamble (halved after).
    pub eq_step: f64,
    /// Convergence preamble, symbols (excluded from BER counting).
    pub preamble_symbols: usize,
    /// Number of BPS test phases.
    pub bps_test_phases: usize,
    /// BPS sliding-window length, symbols.
    pub bps_window_symbols: usize,
    /// Low-pass FIR length (Modified architecture), taps.
    pub lpf_taps: usize,
    /// Low-pass FIR cutoff (single-sided), Hz.
    pub lpf_bandwidth_hz: f64,
}

impl ReceiverConfig {
    /// Reference receiver for a format: α = 17 GHz over 1024-sample coarse
    /// windows, 512-symbol fine windows, 21-tap CMA (BPSK/QPSK, step 1e-3)
    /// or RDE (16-QAM, step 5e-4), 40-phase/30-symbol BPS, 40-tap
    /// 19.4 GHz low-pass.
    pub fn for_format(format: ModulationFormat, architecture: Architecture) -> Self {
        let (eq_algo, eq_step) = match format {
            ModulationFormat::Square16Qam => (EqAlgo::Rde, 5e-4),
            _ => (EqAlgo::Cma, 1e-3),
        };
        Self {
            architecture,
            alpha_hz: 17e9,
            coarse_fft_window: 1024,
            fine_m: if format == ModulationFormat::Bpsk { 2 } else { 4 },
            fine_fft_window: 512,
            eq_taps: 21,
            eq_algo,
            eq_step,
            preamble_symbols: 8000,
            bps_test_phases: 40,
            bps_window_symbols: 30,
            lpf_taps: 40,
            lpf_bandwidth_hz: 19.4e9,
        }
    }

    /// Checks the cross-field invariants, notably that the coarse window
    /// (in samples, at 2 samples/symbol) and the fine window (in symbols)
    /// span the same symbol count so the two compensation stages stay
    /// phase-aligned window for window.
    pub fn validate(&self, samples_per_symbol: usize) -> Result<(), DspError> {
        if self.coarse_fft_window != self.fine_fft_window * samples_per_symbol {
            return Err(DspError::InvalidConfig(format!(
                "coarse window ({} samples) must span the fine window ({} symbols) at {} samples/symbol",
                self.coarse_fft_window, self.fine_fft_window, samples_per_symbol
            )));
        }
        if self.eq_taps == 0 || self.eq_taps % 2 == 0 {
            return Err(DspError::InvalidConfig(format!(
                "equalizer taps must be odd and positive, got {}",
                self.eq_taps
            )));
        }
        if self.fine_m == 0 || self.bps_test_phases == 0 || self.bps_window_symbols == 0 {
            return Err(DspError::InvalidConfig(
                "fine_m, bps_test_phases, bps_window_symbols must be positive".into(),
            ));
        }
        if !(self.alpha_hz.is_finite() && self.alpha_hz > 0.0) {
            return Err(DspError::InvalidConfig(format!(
                "alpha must be positive, got {} Hz",
                self.alpha_hz
            )));
        }
        Ok(())
    }
}

/// Outcome of one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Counted post-decoding bit error ratio.
    pub ber: f64,
    /// Raw error count behind `ber`.
    pub bit_errors: u64,
    /// Bits compared behind `ber`.
    pub bits_counted: u64,
    /// Per-window coarse frequency estimates, Hz.
    pub coarse_estimates_hz: Vec<f64>,
    /// Per-window coarse residuals (true window-mean offset − estimate), Hz.
    pub residual_offsets_hz: Vec<f64>,
    /// Per-window fine frequency estimates, Hz.
    pub fine_estimates_hz: Vec<f64>,
}
