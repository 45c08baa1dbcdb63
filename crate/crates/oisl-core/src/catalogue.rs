//! Shell catalogue: the 13 built-in commercial LEO shells, user catalogue
//! files in TOML, and the Walker notation parser (`"θ: N/P/F"`).

use crate::orbital::{OrbitalError, ShellSpec};
use serde::Deserialize;
use std::path::Path;
use std::sync::OnceLock;

/// Errors from catalogue loading and Walker-string parsing.
#[derive(Debug, thiserror::Error)]
pub enum CatalogueError {
    /// File could not be read.
    #[error("cannot read catalogue file: {0}")]
    Io(#[from] std::io::Error),
    /// File is not valid TOML or misses required keys.
    #[error("malformed catalogue file: {0}")]
    Parse(#[from] toml::de::Error),
    /// An entry fails shell validation.
    #[error("shell '{name}': {source}")]
    InvalidShell {
        /// Name of the offending entry.
        name: String,
        /// Underlying validation failure.
        source: OrbitalError,
    },
    /// A Walker notation string does not match `"θ: N/P/F"`.
    #[error("malformed Walker string '{input}': {reason}")]
    BadWalker {
        /// The rejected input.
        input: String,
        /// What went wrong.
        reason: String,
    },
    /// A requested shell name is not in the catalogue.
    #[error("unknown shell '{0}' (built-ins: A1 A2 B1 B2 B3 C1 C2 C3 C4 C5 D1 D2 D3)")]
    UnknownShell(String),
}

/// A named shell from a catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogueEntry {
    /// Shell name, e.g. "B2".
    pub name: String,
    /// Validated parameters.
    pub shell: ShellSpec,
}

#[derive(Deserialize)]
struct ShellFile {
    shell: Vec<ShellFileEntry>,
}

#[derive(Deserialize)]
struct ShellFileEntry {
    name: String,
    altitude_km: f64,
    inclination_deg: f64,
    planes: u32,
    sats_per_plane: u32,
    #[serde(default)]
    phase_factor: u32,
}

fn parse_catalogue_toml(text: &str) -> Result<Vec<CatalogueEntry>, CatalogueError> {
    let file: ShellFile = toml::from_str(text)?;
    file.shell
        .into_iter()
        .map(|e| {
            let shell = ShellSpec::new(
                e.altitude_km,
                e.inclination_deg.to_radians(),
                e.planes,
                e.sats_per_plane,
                e.phase_factor,
            )
            .map_err(|source| CatalogueError::InvalidShell {
                name: e.name.clone(),
                source,
            })?;
            Ok(CatalogueEntry { name: e.name, shell })
        })
        .collect()
}

/// The 13 built-in shells, in catalogue order (A1 … D3).
pub fn builtin_catalogue() -> &'static [CatalogueEntry] {
    static CATALOGUE: OnceLock<Vec<CatalogueEntry>> = OnceLock::new();
    CATALOGUE.get_or_init(|| {
        parse_catalogue_toml(include_str!("../data/shells.toml"))
            .expect("embedded shell catalogue is valid")
    })
}

/// Looks up a built-in shell by name (case-insensitive).
pub fn builtin_shell(name: &str) -> Result<&'static CatalogueEntry, CatalogueError> {
    builtin_catalogue()
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| CatalogueError::UnknownShell(name.to_string()))
}

/// Loads a user catalogue file (same TOML schema as the built-in one).
pub fn load_catalogue_file(path: &Path) -> Result<Vec<CatalogueEntry>, CatalogueError> {
    parse_catalogue_toml(&std::fs::read_to_string(path)?)
}

/// Walker notation `"θ: N/P/F"`: inclination θ in degrees, `N` total
/// satellites across `P` planes, phase factor `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerNotation {
    /// Inclination, degrees.
    pub inclination_deg: f64,
    /// Total satellite count `N` (must divide evenly into `P` planes).
    pub total_satellites: u32,
    /// Plane count `P`.
    pub planes: u32,
    /// Phase factor `F`.
    pub phase_factor: u32,
}

impl WalkerNotation {
    /// Satellites per plane `S = N/P`.
    pub fn sats_per_plane(&self) -> u32 {
        self.total_satellites / self.planes
    }

    /// Completes the notation into a shell at the given altitude.
    pub fn to_shell(&self, altitude_km: f64) -> Result<ShellSpec, OrbitalError> {
        ShellSpec::new(
            altitude_km,
            self.inclination_deg.to_radians(),
            self.planes,
            self.sats_per_plane(),
            self.phase_factor,
        )
    }
}

/// Parses Walker notation `"θ: N/P/F"`, e.g. `"53: 1584/72/39"`.
pub fn parse_walker(input: &str) -> Result<WalkerNotation, CatalogueError> {
    let bad = |reason: &str| CatalogueError::BadWalker {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let (theta_part, rest) = input.split_once(':').ok_or_else(|| bad("missing ':'"))?;
    let inclination_deg: f64 = theta_part
        .trim()
        .parse()
        .map_err(|_| bad("inclination is not a number"))?;
    if !inclination_deg.is_finite() {
        return Err(bad("inclination is not finite"));
    }
    let fields: Vec<&str> = rest.split('/').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(bad("expected three '/'-separated fields N/P/F"));
    }
    let nums: Vec<u32> = fields
        .iter()
        .map(|f| f.parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("N, P, F must be non-negative integers"))?;
    let (n, p, f) = (nums[0], nums[1], nums[2]);
    if p == 0 {
        return Err(bad("plane count P must be >= 1"));
    }
    if n == 0 || n % p != 0 {
        return Err(bad("total count N must be a positive multiple of P"));
    }
    if f >= p {
        return Err(bad("phase factor F must be < P"));
    }
    Ok(WalkerNotation {
        inclination_deg,
        total_satellites: n,
        planes: p,
        phase_factor: f,
    })
}
