//! Run configuration: the human-readable TOML scenario file consumed by
//! the batch front-end.
//!
//! Every physical quantity carries an explicit unit suffix in its key
//! (`altitude_km`, `snr_db`, `delta_f0_ghz`, …) so a config file can never
//! be mis-read in the wrong unit. Unknown keys are rejected. Every section
//! is optional; its defaults reproduce the published reference scenarios.

use crate::dsp::cfe::CalibrationScenario;
use crate::dsp::{Architecture, ChannelConfig, ReceiverConfig, TxConfig};
use crate::linkfeas::{LinkParams, ModulationFormat, NoiseRegime};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Errors loading or interpreting a run configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// The file could not be read.
    #[error("cannot read config {path}: {source}")]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying IO error.
        #[source]
        source: std::io::Error,
    },
    /// The file is not valid TOML or has unknown/ill-typed keys.
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    /// A value is syntactically valid but semantically wrong.
    #[error("invalid config value: {0}")]
    Invalid(String),
}

/// Whole-file configuration; each subcommand reads its own section.
#[derive(Debug, Default, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `constellations` subcommand settings.
    pub constellations: ConstellationsConfig,
    /// `feasibility` subcommand settings.
    pub feasibility: FeasibilityConfig,
    /// `doppler` subcommand settings.
    pub doppler: DopplerConfig,
    /// `dsp` subcommand settings.
    pub dsp: DspScenarioConfig,
    /// `calibrate-alpha` subcommand settings.
    pub calibrate_alpha: CalibrateAlphaConfig,
}

impl RunConfig {
    /// Parses a TOML string.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Loads a TOML file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Settings for the catalogue listing.
#[derive(Debug, Default, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationsConfig {
    /// Optional TOML file with additional user-defined shells, appended
    /// after the 13 built-in ones.
    pub shell_file: Option<PathBuf>,
}

/// Link-budget overrides for the feasibility tables.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FeasibilityConfig {
    /// Transmit power, W.
    pub tx_power_w: f64,
    /// Transmitter optics loss, dB (≤ 0).
    pub tx_loss_db: f64,
    /// Pointing-jitter standard deviation, µrad.
    pub jitter_urad: f64,
    /// Beam divergence half-angle, µrad.
    pub divergence_half_angle_urad: f64,
    /// Carrier wavelength, nm.
    pub wavelength_nm: f64,
    /// Static pointing loss, dB (≤ 0).
    pub pointing_loss_db: f64,
    /// Receive aperture diameter, m.
    pub rx_diameter_m: f64,
    /// Receiver optics loss, dB (≤ 0).
    pub rx_loss_db: f64,
    /// Noise regimes to emit (`"shot"`, `"ase"`).
    pub regimes: Vec<String>,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        let p = LinkParams::default();
        Self {
            tx_power_w: p.tx_power_w,
            tx_loss_db: p.tx_loss_db,
            jitter_urad: p.jitter_rad * 1e6,
            divergence_half_angle_urad: p.divergence_half_angle_rad * 1e6,
            wavelength_nm: p.wavelength_m * 1e9,
            pointing_loss_db: p.pointing_loss_db,
            rx_diameter_m: p.rx_diameter_m,
            rx_loss_db: p.rx_loss_db,
            regimes: vec!["shot".into(), "ase".into()],
        }
    }
}

impl FeasibilityConfig {
    /// Converts the unit-suffixed keys into link parameters.
    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            tx_power_w: self.tx_power_w,
            tx_loss_db: self.tx_loss_db,
            jitter_rad: self.jitter_urad * 1e-6,
            divergence_half_angle_rad: self.divergence_half_angle_urad * 1e-6,
            wavelength_m: self.wavelength_nm * 1e-9,
            pointing_loss_db: self.pointing_loss_db,
            rx_diameter_m: self.rx_diameter_m,
            rx_loss_db: self.rx_loss_db,
        }
    }

    /// Parses the regime list. The shot-limited regime derives its quantum
    /// efficiency from the reference 0.7 A/W responsivity at the configured
    /// wavelength.
    pub fn noise_regimes(&self) -> Result<Vec<NoiseRegime>, ConfigError> {
        self.regimes
            .iter()
            .map(|r| match r.to_ascii_lowercase().as_str() {
                "shot" => Ok(NoiseRegime::shot_from_responsivity(
                    0.7,
                    self.wavelength_nm * 1e-9,
                )),
                "ase" => Ok(NoiseRegime::default_ase()),
                other => Err(ConfigError::Invalid(format!(
                    "unknown noise regime {other:?} (expected \"shot\" or \"ase\")"
                ))),
            })
            .collect()
    }
}

/// Settings for the Doppler extrema table and optional time series.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DopplerConfig {
    /// Carrier wavelength, nm.
    pub wavelength_nm: f64,
    /// Shell names to include; empty means all built-in shells.
    pub shells: Vec<String>,
    /// Emit a per-sample Doppler time series for each selected shell and
    /// topology in addition to the extrema table.
    pub emit_series: bool,
    /// Time-series length, seconds (one orbital period when 0).
    pub series_duration_s: f64,
    /// Time-series sample count.
    pub series_samples: usize,
}

impl Default for DopplerConfig {
    fn default() -> Self {
        Self {
            wavelength_nm: 1550.0,
            shells: Vec::new(),
            emit_series: false,
            series_duration_s: 0.0,
            series_samples: 2048,
        }
    }
}

impl DopplerConfig {
    /// Carrier wavelength in meters.
    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_nm * 1e-9
    }
}

/// Scenario for the time-domain transmission simulator.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DspScenarioConfig {
    /// Modulation format: `bpsk`, `qpsk`, or `16qam`.
    pub format: String,
    /// Symbol rate, GBaud.
    pub symbol_rate_gbaud: f64,
    /// Frame length, symbols.
    pub n_symbols: usize,
    /// Receiver architectures to run: `evaluated`, `modified`.
    pub architectures: Vec<String>,
    /// Initial carrier frequency offset, GHz.
    pub delta_f0_ghz: f64,
    /// Offset drift, THz/s.
    pub slope_thz_per_s: f64,
    /// Per-laser linewidth, kHz.
    pub linewidth_khz: f64,
    /// Receiver front-end bandwidth (single-sided edge), GHz.
    pub rx_bandwidth_ghz: f64,
    /// Super-Gaussian order of the front-end filter.
    pub rx_filter_order: u32,
    /// Es/N0 sweep grid, dB; empty selects a format-appropriate default.
    pub snr_grid_db: Vec<f64>,
    /// Coarse-CFE scale factor, GHz.
    pub alpha_ghz: f64,
    /// Reference BER at which the penalty is evaluated.
    pub reference_ber: f64,
}

impl Default for DspScenarioConfig {
    fn default() -> Self {
        Self {
            format: "qpsk".into(),
            symbol_rate_gbaud: 32.0,
            n_symbols: 1 << 16,
            architectures: vec!["evaluated".into(), "modified".into()],
            delta_f0_ghz: 10.0,
            slope_thz_per_s: 1.0,
            linewidth_khz: 100.0,
            rx_bandwidth_ghz: 28.0,
            rx_filter_order: 10,
            snr_grid_db: Vec::new(),
            alpha_ghz: 17.0,
            reference_ber: 4e-3,
        }
    }
}

/// Parses a modulation-format name (case-insensitive, with the common
/// aliases).
pub fn parse_format(name: &str) -> Result<ModulationFormat, ConfigError> {
    match name.to_ascii_lowercase().as_str() {
        "bpsk" => Ok(ModulationFormat::Bpsk),
        "qpsk" | "4qam" | "qam4" => Ok(ModulationFormat::Qpsk),
        "8qam" | "star8" | "star8qam" => Ok(ModulationFormat::Star8Qam),
        "16qam" | "qam16" => Ok(ModulationFormat::Square16Qam),
        other => Err(ConfigError::Invalid(format!(
            "unknown modulation format {other:?} (expected bpsk, qpsk, 8qam, or 16qam)"
        ))),
    }
}

/// Parses a receiver-architecture name.
pub fn parse_architecture(name: &str) -> Result<Architecture, ConfigError> {
    match name.to_ascii_lowercase().as_str() {
        "evaluated" => Ok(Architecture::Evaluated),
        "modified" => Ok(Architecture::Modified),
        other => Err(ConfigError::Invalid(format!(
            "unknown architecture {other:?} (expected \"evaluated\" or \"modified\")"
        ))),
    }
}

/// Default Es/N0 sweep grid bracketing the 4e-3 reference crossing.
pub fn default_snr_grid_db(format: ModulationFormat) -> Vec<f64> {
    let (lo, hi) = match format {
        ModulationFormat::Bpsk => (4.0, 9.0),
        ModulationFormat::Qpsk => (7.0, 12.0),
        ModulationFormat::Star8Qam => (10.0, 15.0),
        ModulationFormat::Square16Qam => (13.5, 18.5),
    };
    let mut grid = Vec::new();
    let mut snr = lo;
    while snr <= hi + 1e-9 {
        grid.push(snr);
        snr += 0.5;
    }
    grid
}

impl DspScenarioConfig {
    /// Modulation format.
    pub fn modulation_format(&self) -> Result<ModulationFormat, ConfigError> {
        parse_format(&self.format)
    }

    /// Architectures to run, in config order.
    pub fn architecture_list(&self) -> Result<Vec<Architecture>, ConfigError> {
        if self.architectures.is_empty() {
            return Err(ConfigError::Invalid(
                "dsp.architectures must name at least one architecture".into(),
            ));
        }
        self.architectures
            .iter()
            .map(|a| parse_architecture(a))
            .collect()
    }

    /// Transmit-side configuration.
    pub fn tx_config(&self) -> Result<TxConfig, ConfigError> {
        Ok(TxConfig::new(
            self.modulation_format()?,
            self.symbol_rate_gbaud * 1e9,
        ))
    }

    /// Channel configuration (the sweep overrides `snr_db` per point).
    pub fn channel_config(&self) -> ChannelConfig {
        ChannelConfig {
            delta_f0_hz: self.delta_f0_ghz * 1e9,
            slope_hz_per_s: self.slope_thz_per_s * 1e12,
            linewidth_hz: self.linewidth_khz * 1e3,
            snr_db: f64::NAN, // set per sweep point
            rx_bandwidth_hz: self.rx_bandwidth_ghz * 1e9,
            rx_filter_order: self.rx_filter_order,
        }
    }

    /// Receiver configuration for one architecture.
    pub fn receiver_config(&self, architecture: Architecture) -> Result<ReceiverConfig, ConfigError> {
        let mut rx = ReceiverConfig::for_format(self.modulation_format()?, architecture);
        rx.alpha_hz = self.alpha_ghz * 1e9;
        Ok(rx)
    }

    /// SNR sweep grid: the configured one, or the format default.
    pub fn snr_grid(&self) -> Result<Vec<f64>, ConfigError> {
        if self.snr_grid_db.is_empty() {
            Ok(default_snr_grid_db(self.modulation_format()?))
        } else {
            Ok(self.snr_grid_db.clone())
        }
    }
}

/// Scenario for the coarse-stage α calibration.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateAlphaConfig {
    /// Probe modulation format.
    pub format: String,
    /// Probe symbol rate, GBaud.
    pub symbol_rate_gbaud: f64,
    /// Probe Es/N0, dB.
    pub snr_db: f64,
    /// Receiver front-end bandwidth (single-sided edge), GHz.
    pub rx_bandwidth_ghz: f64,
    /// Probe length, symbols.
    pub n_symbols: usize,
    /// Coarse FFT window, samples.
    pub coarse_window_samples: usize,
    /// Smallest candidate α, GHz.
    pub alpha_min_ghz: f64,
    /// Largest candidate α, GHz.
    pub alpha_max_ghz: f64,
    /// Candidate spacing, GHz.
    pub alpha_step_ghz: f64,
    /// Offset grid spacing, GHz.
    pub shift_step_ghz: f64,
    /// Largest probed offset, GHz.
    pub max_shift_ghz: f64,
}

impl Default for CalibrateAlphaConfig {
    fn default() -> Self {
        let s = CalibrationScenario::default();
        Self {
            format: "qpsk".into(),
            symbol_rate_gbaud: s.symbol_rate_baud / 1e9,
            snr_db: s.snr_db,
            rx_bandwidth_ghz: s.rx_bandwidth_hz / 1e9,
            n_symbols: s.n_symbols,
            coarse_window_samples: s.coarse_window_samples,
            alpha_min_ghz: 15.0,
            alpha_max_ghz: 25.0,
            alpha_step_ghz: 1.0,
            shift_step_ghz: s.shift_step_hz / 1e9,
            max_shift_ghz: s.max_shift_hz / 1e9,
        }
    }
}

impl CalibrateAlphaConfig {
    /// Builds the calibration scenario (seed injected from the CLI).
    pub fn scenario(&self, seed: u64) -> Result<CalibrationScenario, ConfigError> {
        if self.alpha_step_ghz <= 0.0 || self.alpha_max_ghz < self.alpha_min_ghz {
            return Err(ConfigError::Invalid(format!(
                "alpha grid [{}, {}] GHz with step {} GHz is empty",
                self.alpha_min_ghz, self.alpha_max_ghz, self.alpha_step_ghz
            )));
        }
        let mut alpha_grid_hz = Vec::new();
        let mut a = self.alpha_min_ghz;
        while a <= self.alpha_max_ghz + 1e-9 {
            alpha_grid_hz.push(a * 1e9);
            a += self.alpha_step_ghz;
        }
        Ok(CalibrationScenario {
            format: parse_format(&self.format)?,
            symbol_rate_baud: self.symbol_rate_gbaud * 1e9,
            snr_db: self.snr_db,
            rx_bandwidth_hz: self.rx_bandwidth_ghz * 1e9,
            n_symbols: self.n_symbols,
            coarse_window_samples: self.coarse_window_samples,
            alpha_grid_hz,
            shift_step_hz: self.shift_step_ghz * 1e9,
            max_shift_hz: self.max_shift_ghz * 1e9,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_config_uses_reference_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        // Unit conversion (nm → m, µrad → rad) makes float round-trips
        // inexact at the ULP level, so compare field-wise.
        let params = cfg.feasibility.link_params();
        let reference = LinkParams::default();
        assert_relative_eq!(params.tx_power_w, reference.tx_power_w, max_relative = 1e-12);
        assert_relative_eq!(params.tx_loss_db, reference.tx_loss_db, max_relative = 1e-12);
        assert_relative_eq!(params.jitter_rad, reference.jitter_rad, max_relative = 1e-12);
        assert_relative_eq!(
            params.divergence_half_angle_rad,
            reference.divergence_half_angle_rad,
            max_relative = 1e-12
        );
        assert_relative_eq!(params.wavelength_m, reference.wavelength_m, max_relative = 1e-12);
        assert_relative_eq!(
            params.pointing_loss_db,
            reference.pointing_loss_db,
            max_relative = 1e-12
        );
        assert_relative_eq!(params.rx_diameter_m, reference.rx_diameter_m, max_relative = 1e-12);
        assert_relative_eq!(params.rx_loss_db, reference.rx_loss_db, max_relative = 1e-12);
        let scenario = cfg.calibrate_alpha.scenario(7).unwrap();
        assert_eq!(scenario, CalibrationScenario::default());
        assert_eq!(cfg.dsp.n_symbols, 65536);
        assert_relative_eq!(cfg.dsp.channel_config().slope_hz_per_s, 1e12);
    }

    #[test]
    fn unit_suffixed_overrides_convert_correctly() {
        let cfg = RunConfig::from_toml_str(
            r#"
            [feasibility]
            tx_power_w = 2.0
            jitter_urad = 3.0
            wavelength_nm = 1310.0

            [dsp]
            format = "16qam"
            delta_f0_ghz = 6.5
            linewidth_khz = 250.0
            architectures = ["modified"]
            snr_grid_db = [15.0, 16.0]

            [calibrate_alpha]
            snr_db = 14.0
            max_shift_ghz = 8.0
            "#,
        )
        .unwrap();
        let params = cfg.feasibility.link_params();
        assert_relative_eq!(params.tx_power_w, 2.0);
        assert_relative_eq!(params.jitter_rad, 3.0e-6);
        assert_relative_eq!(params.wavelength_m, 1310e-9);
        // Untouched keys keep their defaults.
        assert_relative_eq!(params.rx_diameter_m, 0.1);

        assert_eq!(
            cfg.dsp.modulation_format().unwrap(),
            ModulationFormat::Square16Qam
        );
        let ch = cfg.dsp.channel_config();
        assert_relative_eq!(ch.delta_f0_hz, 6.5e9);
        assert_relative_eq!(ch.linewidth_hz, 250e3);
        assert_eq!(
            cfg.dsp.architecture_list().unwrap(),
            vec![Architecture::Modified]
        );
        assert_eq!(cfg.dsp.snr_grid().unwrap(), vec![15.0, 16.0]);

        let scenario = cfg.calibrate_alpha.scenario(3).unwrap();
        assert_relative_eq!(scenario.snr_db, 14.0);
        assert_relative_eq!(scenario.max_shift_hz, 8e9);
        assert_eq!(scenario.alpha_grid_hz.len(), 11);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("[dsp]\nsymbol_rate = 32.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
        // Unit-less key name is not accepted in place of the suffixed one.
        assert!(RunConfig::from_toml_str("[feasibility]\ntx_power = 1.0\n").is_err());
    }

    #[test]
    fn bad_names_are_reported() {
        assert!(parse_format("64qam").is_err());
        assert!(parse_architecture("both").is_err());
        let cfg = RunConfig::from_toml_str("[feasibility]\nregimes = [\"thermal\"]\n").unwrap();
        assert!(cfg.feasibility.noise_regimes().is_err());
        let cfg = RunConfig::from_toml_str("[dsp]\narchitectures = []\n").unwrap();
        assert!(cfg.dsp.architecture_list().is_err());
    }

    #[test]
    fn default_snr_grids_bracket_the_reference_crossings() {
        use crate::dsp::pipeline::analytic_baseline_snr_db;
        for format in [
            ModulationFormat::Bpsk,
            ModulationFormat::Qpsk,
            ModulationFormat::Star8Qam,
            ModulationFormat::Square16Qam,
        ] {
            let grid = default_snr_grid_db(format);
            let baseline = analytic_baseline_snr_db(format, 4e-3).unwrap();
            assert!(grid.first().unwrap() < &baseline);
            assert!(grid.last().unwrap() > &(baseline + 1.0));
        }
    }
}
