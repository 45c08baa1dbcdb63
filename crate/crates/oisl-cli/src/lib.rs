//! Batch front-end: the four analyses as subcommands over a shared TOML
//! configuration, emitting CSV/JSON tables plus a run manifest with
//! per-file SHA-256 digests. Identical manifests (same subcommand, config,
//! seed) produce byte-identical outputs.

use clap::{Parser, Subcommand, ValueEnum};
use oisl_core::catalogue::{builtin_catalogue, load_catalogue_file, CatalogueEntry};
use oisl_core::config::{ConfigError, RunConfig};
use oisl_core::doppler::{doppler_derivative, doppler_shift, doppler_table, urm_bound};
use oisl_core::dsp::cfe::calibrate_alpha;
use oisl_core::dsp::pipeline::{analytic_baseline_snr_db, snr_at_ber, sweep_snr};
use oisl_core::dsp::{Architecture, DspError};
use oisl_core::golden::{verify_doppler, verify_margins, VerifyOutcome};
use oisl_core::linkfeas::{feasibility_table, FeasibilityRow, NoiseRegime};
use oisl_core::orbital::{SatelliteIndex, Topology};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Feasibility toolkit for optical inter-satellite links.
#[derive(Debug, Parser)]
#[command(name = "oisl", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for emitted files (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Base RNG seed; all randomness derives from it deterministically.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads for parallel sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Compare computed tables against the embedded frozen ones and exit
    /// nonzero on any deviation (feasibility and doppler subcommands).
    #[arg(long, global = true)]
    verify: bool,
    /// Table output format.
    #[arg(long, global = true, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

/// Output encoding of the emitted tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    /// Comma-separated tables (plot-ready).
    Csv,
    /// JSON records (full float precision).
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in shells plus any user-defined catalogue file.
    Constellations,
    /// Emit the modulation-feasibility margin tables per noise regime.
    Feasibility,
    /// Emit per-shell worst-case Doppler figures and optional time series.
    Doppler,
    /// Run the end-to-end transmission simulation across an SNR grid.
    Dsp,
    /// Calibrate the coarse-estimator scale factor α.
    CalibrateAlpha,
}

/// Process exit codes of the batch front-end.
pub const EXIT_OK: i32 = 0;
/// Exit code when `--verify` found deviations from the frozen tables.
pub const EXIT_VERIFY_FAILED: i32 = 1;
/// Exit code for configuration, usage, or environment errors.
pub const EXIT_CONFIG_ERROR: i32 = 2;

enum CliError {
    /// Bad configuration/usage/environment — exit 2.
    Config(String),
    /// `--verify` mismatch — exit 1.
    Verify(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DspError> for CliError {
    fn from(e: DspError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io error: {e}"))
    }
}

/// Parses argv and runs the selected command; returns the process exit
/// code. Splitting this from `main` keeps the whole front-end testable.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests print and succeed; usage errors are
            // configuration errors.
            let code = if e.use_stderr() { EXIT_CONFIG_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::Verify(msg)) => {
            eprintln!("verification failed:\n{msg}");
            EXIT_VERIFY_FAILED
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG_ERROR
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.workers > 0 {
        // Best effort: the global pool can only be configured once per
        // process (subsequent runs in tests reuse the existing pool).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global();
    }
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut out = OutputWriter::new(&cli.out)?;
    match cli.command {
        Command::Constellations => cmd_constellations(cli, &config, &mut out)?,
        Command::Feasibility => cmd_feasibility(cli, &config, &mut out)?,
        Command::Doppler => cmd_doppler(cli, &config, &mut out)?,
        Command::Dsp => cmd_dsp(cli, &config, &mut out)?,
        Command::CalibrateAlpha => cmd_calibrate_alpha(cli, &config, &mut out)?,
    }
    out.write_manifest(cli)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Run manifest and output plumbing

/// One emitted file with its content digest.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ManifestFile {
    /// File name relative to the output directory.
    pub path: String,
    /// SHA-256 of the file contents, lowercase hex.
    pub sha256: String,
}

/// Reproducibility record written alongside every run's outputs.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    /// Subcommand that produced the outputs.
    pub subcommand: String,
    /// Configuration file path, if one was given.
    pub config: Option<String>,
    /// Output directory.
    pub out_dir: String,
    /// Base RNG seed.
    pub seed: u64,
    /// Emitted files, sorted by path.
    pub files: Vec<ManifestFile>,
}

struct OutputWriter {
    dir: PathBuf,
    files: Vec<ManifestFile>,
}

impl OutputWriter {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let digest = Sha256::digest(bytes);
        let sha256 = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        std::fs::write(self.dir.join(name), bytes)?;
        self.files.push(ManifestFile {
            path: name.to_string(),
            sha256,
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes a CSV built from a header and preformatted record rows.
    fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)
            .and_then(|()| rows.iter().try_for_each(|r| w.write_record(r)))
            .map_err(|e| CliError::Config(format!("cannot write {name}: {e}")))?;
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Config(format!("cannot write {name}: {e}")))?;
        self.write_bytes(name, &bytes)
    }

    /// Emits a table under the selected format: `<stem>.csv` with the
    /// preformatted rows, or `<stem>.json` with the full-precision records.
    fn write_table<T: Serialize>(
        &mut self,
        format: TableFormat,
        stem: &str,
        header: &[&str],
        rows: &[Vec<String>],
        records: &T,
    ) -> Result<(), CliError> {
        match format {
            TableFormat::Csv => self.write_csv(&format!("{stem}.csv"), header, rows),
            TableFormat::Json => self.write_json(&format!("{stem}.json"), records),
        }
    }

    fn write_manifest(&mut self, cli: &Cli) -> Result<(), CliError> {
        let mut files = self.files.clone();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            subcommand: match cli.command {
                Command::Constellations => "constellations",
                Command::Feasibility => "feasibility",
                Command::Doppler => "doppler",
                Command::Dsp => "dsp",
                Command::CalibrateAlpha => "calibrate-alpha",
            }
            .to_string(),
            config: cli.config.as_ref().map(|p| p.display().to_string()),
            out_dir: cli.out.display().to_string(),
            seed: cli.seed,
            files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?;
        bytes.push(b'\n');
        std::fs::write(self.dir.join("manifest.json"), bytes)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// constellations

#[derive(Debug, Serialize)]
struct ShellRecord {
    name: String,
    altitude_km: f64,
    inclination_deg: f64,
    planes: u32,
    sats_per_plane: u32,
    total_satellites: u32,
}

impl From<&CatalogueEntry> for ShellRecord {
    fn from(e: &CatalogueEntry) -> Self {
        Self {
            name: e.name.clone(),
            altitude_km: e.shell.altitude_km,
            inclination_deg: e.shell.inclination_rad.to_degrees(),
            planes: e.shell.planes,
            sats_per_plane: e.shell.sats_per_plane,
            total_satellites: e.shell.total_satellites(),
        }
    }
}

fn cmd_constellations(cli: &Cli, config: &RunConfig, out: &mut OutputWriter) -> Result<(), CliError> {
    let mut entries: Vec<CatalogueEntry> = builtin_catalogue().to_vec();
    if let Some(path) = &config.constellations.shell_file {
        let user = load_catalogue_file(path).map_err(|e| CliError::Config(e.to_string()))?;
        entries.extend(user);
    }
    let records: Vec<ShellRecord> = entries.iter().map(ShellRecord::from).collect();

    println!("{:<8} {:>8} {:>8} {:>7} {:>11} {:>7}", "shell", "H_km", "incl_deg", "planes", "sats/plane", "total");
    for r in &records {
        println!(
            "{:<8} {:>8.1} {:>8.2} {:>7} {:>11} {:>7}",
            r.name, r.altitude_km, r.inclination_deg, r.planes, r.sats_per_plane, r.total_satellites
        );
    }

    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                format!("{:.1}", r.altitude_km),
                format!("{:.2}", r.inclination_deg),
                r.planes.to_string(),
                r.sats_per_plane.to_string(),
                r.total_satellites.to_string(),
            ]
        })
        .collect();
    out.write_table(
        cli.format,
        "constellations",
        &["name", "altitude_km", "inclination_deg", "planes", "sats_per_plane", "total_satellites"],
        &rows,
        &records,
    )
}

// ---------------------------------------------------------------------------
// feasibility

#[derive(Debug, Serialize)]
struct MarginRecord {
    shell: String,
    topology: &'static str,
    scheme: &'static str,
    margin_staircase_db: f64,
    margin_ofec_db: f64,
    classification: &'static str,
}

impl From<&FeasibilityRow> for MarginRecord {
    fn from(r: &FeasibilityRow) -> Self {
        Self {
            shell: r.shell.clone(),
            topology: r.topology,
            scheme: r.scheme,
            margin_staircase_db: r.cell.margin_staircase_db,
            margin_ofec_db: r.cell.margin_ofec_db,
            classification: r.cell.classification.label(),
        }
    }
}

fn cmd_feasibility(cli: &Cli, config: &RunConfig, out: &mut OutputWriter) -> Result<(), CliError> {
    let params = config.feasibility.link_params();
    let regimes: Vec<NoiseRegime> = config.feasibility.noise_regimes()?;
    let labels: Vec<String> = config
        .feasibility
        .regimes
        .iter()
        .map(|l| l.to_ascii_lowercase())
        .collect();
    {
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(CliError::Config(
                "feasibility.regimes lists a regime twice".into(),
            ));
        }
    }
    let mut verify_failures = Vec::new();

    for (label, regime) in labels.iter().zip(regimes) {
        let rows = feasibility_table(regime, &params).map_err(|e| CliError::Config(e.to_string()))?;
        let records: Vec<MarginRecord> = rows.iter().map(MarginRecord::from).collect();

        let (green, yellow, red) = records.iter().fold((0, 0, 0), |(g, y, r), rec| {
            match rec.classification {
                "green" => (g + 1, y, r),
                "yellow" => (g, y + 1, r),
                _ => (g, y, r + 1),
            }
        });
        println!(
            "{label}: {} rows ({green} green / {yellow} yellow / {red} red)",
            records.len()
        );

        let csv_rows: Vec<Vec<String>> = records
            .iter()
            .map(|r| {
                vec![
                    r.shell.clone(),
                    r.topology.to_string(),
                    r.scheme.to_string(),
                    format!("{:.2}", r.margin_staircase_db),
                    format!("{:.2}", r.margin_ofec_db),
                    r.classification.to_string(),
                ]
            })
            .collect();
        out.write_table(
            cli.format,
            &format!("margins_{label}"),
            &["shell", "topology", "scheme", "margin_staircase_db", "margin_ofec_db", "classification"],
            &csv_rows,
            &records,
        )?;

        if cli.verify {
            let outcome = verify_margins(label, &rows);
            report_verification(&format!("margins[{label}]"), &outcome);
            verify_failures.extend(outcome.failures);
        }
    }
    if cli.verify && !verify_failures.is_empty() {
        return Err(CliError::Verify(verify_failures.join("\n")));
    }
    Ok(())
}

fn report_verification(what: &str, outcome: &VerifyOutcome) {
    if outcome.passed() {
        println!("verify {what}: {} cells match", outcome.compared);
    } else {
        println!(
            "verify {what}: {} of {} cells deviate",
            outcome.failures.len(),
            outcome.compared
        );
    }
}

// ---------------------------------------------------------------------------
// doppler

#[derive(Debug, Serialize)]
struct DopplerRecord {
    shell: String,
    topology: &'static str,
    delta_f_max_ghz: f64,
    f_at: u32,
    delta_f_dot_max_ghz_per_s: f64,
    delta_f_dot_independent_ghz_per_s: f64,
    f_dot_at: u32,
}

fn cmd_doppler(cli: &Cli, config: &RunConfig, out: &mut OutputWriter) -> Result<(), CliError> {
    let wavelength_m = config.doppler.wavelength_m();
    if !(wavelength_m > 0.0) {
        return Err(CliError::Config(format!(
            "doppler.wavelength_nm must be positive, got {}",
            config.doppler.wavelength_nm
        )));
    }
    let filtered = !config.doppler.shells.is_empty();
    if cli.verify && filtered {
        return Err(CliError::Config(
            "--verify compares the full built-in table; remove the doppler.shells filter".into(),
        ));
    }
    let selected: Vec<&CatalogueEntry> = if filtered {
        config
            .doppler
            .shells
            .iter()
            .map(|name| {
                builtin_catalogue()
                    .iter()
                    .find(|e| e.name.eq_ignore_ascii_case(name))
                    .ok_or_else(|| CliError::Config(format!("unknown shell {name:?}")))
            })
            .collect::<Result<_, _>>()?
    } else {
        builtin_catalogue().iter().collect()
    };

    // The full table reuses the library search (also the verify target);
    // a filtered run searches only the selected shells.
    let table = if filtered {
        use oisl_core::doppler::{extrema_search, DopplerTableRow};
        let topos = [
            (Topology::InterorbitalKToK, "k2k"),
            (Topology::InterorbitalKToKMinus1, "k2km1"),
        ];
        selected
            .iter()
            .flat_map(|e| {
                topos.iter().map(|&(topo, label)| DopplerTableRow {
                    shell: e.name.clone(),
                    topology: label,
                    extrema: extrema_search(&e.shell, topo, wavelength_m),
                })
            })
            .collect()
    } else {
        doppler_table(wavelength_m)
    };

    let records: Vec<DopplerRecord> = table
        .iter()
        .map(|r| DopplerRecord {
            shell: r.shell.clone(),
            topology: r.topology,
            delta_f_max_ghz: r.extrema.delta_f_max_hz / 1e9,
            f_at: r.extrema.f_at,
            delta_f_dot_max_ghz_per_s: r.extrema.delta_f_dot_max_hz_per_s / 1e9,
            delta_f_dot_independent_ghz_per_s: r.extrema.delta_f_dot_independent_hz_per_s / 1e9,
            f_dot_at: r.extrema.f_dot_at,
        })
        .collect();

    println!(
        "{:<6} {:<6} {:>12} {:>5} {:>14} {:>14} {:>7}",
        "shell", "topo", "df_max_GHz", "F", "dfdot_GHz/s", "dfdot_ind", "F_dot"
    );
    for r in &records {
        println!(
            "{:<6} {:<6} {:>12.4} {:>5} {:>14.4} {:>14.4} {:>7}",
            r.shell, r.topology, r.delta_f_max_ghz, r.f_at, r.delta_f_dot_max_ghz_per_s,
            r.delta_f_dot_independent_ghz_per_s, r.f_dot_at
        );
    }
    let urm = urm_bound(400.0, wavelength_m);
    println!(
        "URM bound at {:.0} km: closing speed {:.1} m/s, Δf ≤ {:.4} GHz",
        urm.altitude_km,
        urm.closing_speed_mps,
        urm.delta_f_bound_hz / 1e9
    );

    let csv_rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.shell.clone(),
                r.topology.to_string(),
                format!("{:.4}", r.delta_f_max_ghz),
                r.f_at.to_string(),
                format!("{:.4}", r.delta_f_dot_max_ghz_per_s),
                format!("{:.4}", r.delta_f_dot_independent_ghz_per_s),
                r.f_dot_at.to_string(),
            ]
        })
        .collect();
    out.write_table(
        cli.format,
        "doppler_extrema",
        &[
            "shell",
            "topology",
            "delta_f_max_ghz",
            "f_at",
            "delta_f_dot_max_ghz_per_s",
            "delta_f_dot_independent_ghz_per_s",
            "f_dot_at",
        ],
        &csv_rows,
        &records,
    )?;

    if config.doppler.emit_series {
        emit_doppler_series(cli, config, &selected, wavelength_m, out)?;
    }

    if cli.verify {
        let outcome = verify_doppler(&table);
        report_verification("doppler", &outcome);
        if !outcome.passed() {
            return Err(CliError::Verify(outcome.failures.join("\n")));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SeriesRecord {
    t_s: f64,
    delta_f_ghz: f64,
    delta_f_dot_ghz_per_s: f64,
}

fn emit_doppler_series(
    cli: &Cli,
    config: &RunConfig,
    shells: &[&CatalogueEntry],
    wavelength_m: f64,
    out: &mut OutputWriter,
) -> Result<(), CliError> {
    let n = config.doppler.series_samples;
    if n == 0 {
        return Err(CliError::Config("doppler.series_samples must be positive".into()));
    }
    let src = SatelliteIndex::new(0, 0);
    for entry in shells {
        for (topo, label) in [
            (Topology::InterorbitalKToK, "k2k"),
            (Topology::InterorbitalKToKMinus1, "k2km1"),
        ] {
            let duration = if config.doppler.series_duration_s > 0.0 {
                config.doppler.series_duration_s
            } else {
                entry.shell.period_s()
            };
            let records: Vec<SeriesRecord> = (0..n)
                .map(|i| {
                    let t = duration * i as f64 / n as f64;
                    let delta_f = doppler_shift(&entry.shell, src, topo, t, wavelength_m)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    let delta_f_dot = doppler_derivative(&entry.shell, src, topo, t, wavelength_m)
                        .map_err(|e| CliError::Config(e.to_string()))?;
                    Ok(SeriesRecord {
                        t_s: t,
                        delta_f_ghz: delta_f / 1e9,
                        delta_f_dot_ghz_per_s: delta_f_dot / 1e9,
                    })
                })
                .collect::<Result<_, CliError>>()?;
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        format!("{:.3}", r.t_s),
                        format!("{:.6}", r.delta_f_ghz),
                        format!("{:.6}", r.delta_f_dot_ghz_per_s),
                    ]
                })
                .collect();
            out.write_table(
                cli.format,
                &format!("doppler_series_{}_{label}", entry.name),
                &["t_s", "delta_f_ghz", "delta_f_dot_ghz_per_s"],
                &rows,
                &records,
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// dsp

#[derive(Debug, Serialize)]
struct DspPointRecord {
    snr_db: f64,
    ber: f64,
    bit_errors: u64,
    bits_counted: u64,
    coarse_estimates_hz: Vec<f64>,
    residual_offsets_hz: Vec<f64>,
    fine_estimates_hz: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct DspArchRecord {
    architecture: String,
    baseline_snr_db: f64,
    crossing_snr_db: Option<f64>,
    penalty_db: Option<f64>,
    note: Option<String>,
    points: Vec<DspPointRecord>,
}

#[derive(Debug, Serialize)]
struct DspResultRecord {
    format: String,
    symbol_rate_gbaud: f64,
    n_symbols: usize,
    delta_f0_ghz: f64,
    slope_thz_per_s: f64,
    linewidth_khz: f64,
    rx_bandwidth_ghz: f64,
    rx_filter_order: u32,
    alpha_ghz: f64,
    reference_ber: f64,
    seed: u64,
    architectures: Vec<DspArchRecord>,
}

fn arch_label(a: Architecture) -> &'static str {
    match a {
        Architecture::Evaluated => "evaluated",
        Architecture::Modified => "modified",
    }
}

fn cmd_dsp(cli: &Cli, config: &RunConfig, out: &mut OutputWriter) -> Result<(), CliError> {
    let scenario = &config.dsp;
    let tx = scenario.tx_config()?;
    let channel = scenario.channel_config();
    let grid = scenario.snr_grid()?;
    let archs = scenario.architecture_list()?;
    {
        let mut labels: Vec<&str> = archs.iter().map(|&a| arch_label(a)).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != archs.len() {
            return Err(CliError::Config(
                "dsp.architectures lists an architecture twice".into(),
            ));
        }
    }
    let format = scenario.modulation_format()?;
    let baseline_snr_db = analytic_baseline_snr_db(format, scenario.reference_ber)?;

    let mut arch_records = Vec::new();
    for &arch in &archs {
        let rx = scenario.receiver_config(arch)?;
        let points = sweep_snr(&tx, &channel, &rx, scenario.n_symbols, &grid, cli.seed)?;
        let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.snr_db, p.result.ber)).collect();
        let (crossing, penalty, note) = match snr_at_ber(&curve, scenario.reference_ber) {
            Ok(snr) => (Some(snr), Some(snr - baseline_snr_db), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        let label = arch_label(arch);
        match penalty {
            Some(p) => println!(
                "{label}: penalty {p:.3} dB at BER {:.1e} (crossing {:.3} dB, baseline {baseline_snr_db:.3} dB)",
                scenario.reference_ber,
                crossing.unwrap_or(f64::NAN),
            ),
            None => println!(
                "{label}: curve does not cross BER {:.1e} on the swept grid",
                scenario.reference_ber
            ),
        }

        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| {
                vec![
                    format!("{}", p.snr_db),
                    format!("{:e}", p.result.ber),
                    p.result.bit_errors.to_string(),
                    p.result.bits_counted.to_string(),
                ]
            })
            .collect();
        out.write_csv(
            &format!("ber_vs_snr_{label}.csv"),
            &["snr_db", "ber", "bit_errors", "bits_counted"],
            &rows,
        )?;

        arch_records.push(DspArchRecord {
            architecture: label.to_string(),
            baseline_snr_db,
            crossing_snr_db: crossing,
            penalty_db: penalty,
            note,
            points: points
                .into_iter()
                .map(|p| DspPointRecord {
                    snr_db: p.snr_db,
                    ber: p.result.ber,
                    bit_errors: p.result.bit_errors,
                    bits_counted: p.result.bits_counted,
                    coarse_estimates_hz: p.result.coarse_estimates_hz,
                    residual_offsets_hz: p.result.residual_offsets_hz,
                    fine_estimates_hz: p.result.fine_estimates_hz,
                })
                .collect(),
        });
    }

    let record = DspResultRecord {
        format: scenario.format.clone(),
        symbol_rate_gbaud: scenario.symbol_rate_gbaud,
        n_symbols: scenario.n_symbols,
        delta_f0_ghz: scenario.delta_f0_ghz,
        slope_thz_per_s: scenario.slope_thz_per_s,
        linewidth_khz: scenario.linewidth_khz,
        rx_bandwidth_ghz: scenario.rx_bandwidth_ghz,
        rx_filter_order: scenario.rx_filter_order,
        alpha_ghz: scenario.alpha_ghz,
        reference_ber: scenario.reference_ber,
        seed: cli.seed,
        architectures: arch_records,
    };
    out.write_json("dsp_result.json", &record)
}

// ---------------------------------------------------------------------------
// calibrate-alpha

#[derive(Debug, Serialize)]
struct AlphaStatRecord {
    alpha_ghz: f64,
    admissible: bool,
    worst_abs_error_ghz: f64,
    mean_error_at_max_shift_ghz: f64,
}

#[derive(Debug, Serialize)]
struct CalibrationRecord {
    selected_alpha_ghz: f64,
    residual_bound_ghz: f64,
    seed: u64,
    stats: Vec<AlphaStatRecord>,
}

fn cmd_calibrate_alpha(cli: &Cli, config: &RunConfig, out: &mut OutputWriter) -> Result<(), CliError> {
    let scenario = config.calibrate_alpha.scenario(cli.seed)?;
    let calibration = calibrate_alpha(&scenario)?;
    let stats: Vec<AlphaStatRecord> = calibration
        .stats
        .iter()
        .map(|s| AlphaStatRecord {
            alpha_ghz: s.alpha_hz / 1e9,
            admissible: s.admissible,
            worst_abs_error_ghz: s.worst_abs_error_hz / 1e9,
            mean_error_at_max_shift_ghz: s.mean_error_at_max_shift_hz / 1e9,
        })
        .collect();

    let admissible: Vec<String> = stats
        .iter()
        .filter(|s| s.admissible)
        .map(|s| format!("{:.0}", s.alpha_ghz))
        .collect();
    println!(
        "selected α = {:.3} GHz (residual bound ±{:.3} GHz; admissible: {})",
        calibration.selected_alpha_hz / 1e9,
        calibration.residual_bound_hz / 1e9,
        admissible.join(", ")
    );

    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                format!("{}", s.alpha_ghz),
                s.admissible.to_string(),
                format!("{:.6}", s.worst_abs_error_ghz),
                format!("{:.6}", s.mean_error_at_max_shift_ghz),
            ]
        })
        .collect();
    out.write_table(
        cli.format,
        "alpha_stats",
        &["alpha_ghz", "admissible", "worst_abs_error_ghz", "mean_error_at_max_shift_ghz"],
        &rows,
        &stats,
    )?;
    out.write_json(
        "calibration.json",
        &CalibrationRecord {
            selected_alpha_ghz: calibration.selected_alpha_hz / 1e9,
            residual_bound_ghz: calibration.residual_bound_hz / 1e9,
            seed: cli.seed,
            stats,
        },
    )
}
