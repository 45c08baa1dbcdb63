//! Frozen expected outputs for the margin and Doppler tables, embedded at
//! build time, plus the verification routines behind `--verify`.
//!
//! The embedded tables are the cross-validated reference results for the
//! default parameter set (margins to 0.01 dB, Doppler figures to 1e-4 GHz
//! precision). Verification therefore uses tolerances just wide enough to
//! absorb the tables' rounding — any change in physics or search behavior
//! fails loudly.

use crate::doppler::DopplerTableRow;
use crate::linkfeas::FeasibilityRow;
use serde::Deserialize;
use std::sync::OnceLock;

/// One frozen margin-table row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GoldenMarginRow {
    /// Shell name.
    pub shell: String,
    /// Topology label (`intra`, `k2k`, `k2km1`).
    pub topology: String,
    /// Scheme label (`100G` … `800G`).
    pub scheme: String,
    /// Staircase-FEC margin, dB (rounded to 0.01 dB).
    pub margin_staircase_db: f64,
    /// oFEC margin, dB (rounded to 0.01 dB).
    pub margin_ofec_db: f64,
    /// Color classification (`green`/`yellow`/`red`).
    pub classification: String,
}

/// One frozen Doppler-extrema row.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GoldenDopplerRow {
    /// Shell name.
    pub shell: String,
    /// Topology label (`k2k`, `k2km1`).
    pub topology: String,
    /// Max |Δf| in GHz (rounded to 1e-4).
    pub delta_f_ghz: f64,
    /// Phase factor attaining the maximum.
    pub f_at: u32,
    /// Max |dΔf/dt| at that phase factor, GHz/s (rounded to 1e-4).
    pub delta_f_dot_ghz_per_s: f64,
}

fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Vec<T> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("embedded golden table parses")
}

/// Frozen margin table for a regime label (`"shot"` or `"ase"`).
pub fn golden_margin_rows(regime_label: &str) -> &'static [GoldenMarginRow] {
    static SHOT: OnceLock<Vec<GoldenMarginRow>> = OnceLock::new();
    static ASE: OnceLock<Vec<GoldenMarginRow>> = OnceLock::new();
    match regime_label {
        "shot" => SHOT.get_or_init(|| parse_csv(include_str!("../data/margins_shot.csv"))),
        "ase" => ASE.get_or_init(|| parse_csv(include_str!("../data/margins_ase.csv"))),
        other => panic!("unknown regime label {other:?} (expected \"shot\" or \"ase\")"),
    }
}

/// Frozen Doppler-extrema table (26 rows).
pub fn golden_doppler_rows() -> &'static [GoldenDopplerRow] {
    static ROWS: OnceLock<Vec<GoldenDopplerRow>> = OnceLock::new();
    ROWS.get_or_init(|| parse_csv(include_str!("../data/doppler_extrema.csv")))
}

/// Result of comparing computed tables against the frozen ones.
#[derive(Debug, Clone, Default)]
pub struct VerifyOutcome {
    /// Number of cells compared.
    pub compared: usize,
    /// Human-readable description of each deviation.
    pub failures: Vec<String>,
}

impl VerifyOutcome {
    /// True when every compared cell matched.
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Margin verification tolerance: absorbs the tables' 0.01 dB rounding.
pub const MARGIN_VERIFY_TOL_DB: f64 = 0.011;

/// Doppler verification tolerance: absorbs the tables' 1e-4 GHz rounding.
pub const DOPPLER_VERIFY_TOL_GHZ: f64 = 2e-4;

/// Compares a computed feasibility table against the frozen table for the
/// same regime. Rows must be in table order (topology-major, then shell,
/// then scheme).
pub fn verify_margins(regime_label: &str, rows: &[FeasibilityRow]) -> VerifyOutcome {
    let golden = golden_margin_rows(regime_label);
    let mut out = VerifyOutcome::default();
    if rows.len() != golden.len() {
        out.failures.push(format!(
            "{regime_label}: row count {} differs from expected {}",
            rows.len(),
            golden.len()
        ));
        return out;
    }
    for (got, want) in rows.iter().zip(golden) {
        out.compared += 1;
        let key = format!("{}/{}/{}/{}", regime_label, want.shell, want.topology, want.scheme);
        if got.shell != want.shell || got.topology != want.topology || got.scheme != want.scheme {
            out.failures.push(format!(
                "{key}: row order mismatch (computed {}/{}/{})",
                got.shell, got.topology, got.scheme
            ));
            continue;
        }
        let ds = (got.cell.margin_staircase_db - want.margin_staircase_db).abs();
        if ds > MARGIN_VERIFY_TOL_DB {
            out.failures.push(format!(
                "{key}: staircase margin {:.4} dB vs expected {:.2} dB",
                got.cell.margin_staircase_db, want.margin_staircase_db
            ));
        }
        let do_ = (got.cell.margin_ofec_db - want.margin_ofec_db).abs();
        if do_ > MARGIN_VERIFY_TOL_DB {
            out.failures.push(format!(
                "{key}: oFEC margin {:.4} dB vs expected {:.2} dB",
                got.cell.margin_ofec_db, want.margin_ofec_db
            ));
        }
        if got.cell.classification.label() != want.classification {
            out.failures.push(format!(
                "{key}: classification {} vs expected {}",
                got.cell.classification.label(),
                want.classification
            ));
        }
    }
    out
}

/// Compares a computed Doppler table against the frozen one. The frozen
/// derivative column is the same-F convention (|dΔf/dt| maximized at the
/// Δf-maximizing phase factor).
pub fn verify_doppler(rows: &[DopplerTableRow]) -> VerifyOutcome {
    let golden = golden_doppler_rows();
    let mut out = VerifyOutcome::default();
    if rows.len() != golden.len() {
        out.failures.push(format!(
            "doppler: row count {} differs from expected {}",
            rows.len(),
            golden.len()
        ));
        return out;
    }
    for (got, want) in rows.iter().zip(golden) {
        out.compared += 1;
        let key = format!("doppler/{}/{}", want.shell, want.topology);
        if got.shell != want.shell || got.topology != want.topology {
            out.failures.push(format!(
                "{key}: row order mismatch (computed {}/{})",
                got.shell, got.topology
            ));
            continue;
        }
        let df_ghz = got.extrema.delta_f_max_hz / 1e9;
        if (df_ghz - want.delta_f_ghz).abs() > DOPPLER_VERIFY_TOL_GHZ {
            out.failures.push(format!(
                "{key}: Δf {:.5} GHz vs expected {:.4} GHz",
                df_ghz, want.delta_f_ghz
            ));
        }
        if got.extrema.f_at != want.f_at {
            out.failures.push(format!(
                "{key}: F {} vs expected {}",
                got.extrema.f_at, want.f_at
            ));
        }
        let dd_ghz = got.extrema.delta_f_dot_max_hz_per_s / 1e9;
        if (dd_ghz - want.delta_f_dot_ghz_per_s).abs() > DOPPLER_VERIFY_TOL_GHZ {
            out.failures.push(format!(
                "{key}: Δf' {:.5} GHz/s vs expected {:.4} GHz/s",
                dd_ghz, want.delta_f_dot_ghz_per_s
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_tables_parse_with_expected_shapes() {
        assert_eq!(golden_margin_rows("shot").len(), 195);
        assert_eq!(golden_margin_rows("ase").len(), 195);
        assert_eq!(golden_doppler_rows().len(), 26);
        let first = &golden_margin_rows("shot")[0];
        assert_eq!(
            (first.shell.as_str(), first.topology.as_str(), first.scheme.as_str()),
            ("A1", "intra", "100G")
        );
        assert_eq!(first.margin_staircase_db, 6.41);
        assert_eq!(first.classification, "green");
    }

    #[test]
    fn computed_margin_tables_match_frozen_tables() {
        use crate::linkfeas::{feasibility_table, LinkParams, NoiseRegime};
        let params = LinkParams::default();
        for (regime, label) in [
            (NoiseRegime::default_shot(), "shot"),
            (NoiseRegime::default_ase(), "ase"),
        ] {
            let rows = feasibility_table(regime, &params).unwrap();
            let outcome = verify_margins(label, &rows);
            assert_eq!(outcome.compared, 195);
            assert!(
                outcome.passed(),
                "{label} margin table deviates:\n{}",
                outcome.failures.join("\n")
            );
        }
    }

    #[test]
    fn computed_doppler_table_matches_frozen_table() {
        let rows = crate::doppler::doppler_table(1550e-9);
        let outcome = verify_doppler(&rows);
        assert_eq!(outcome.compared, 26);
        assert!(
            outcome.passed(),
            "doppler table deviates:\n{}",
            outcome.failures.join("\n")
        );
    }

    #[test]
    fn verify_flags_a_perturbed_cell() {
        use crate::linkfeas::{feasibility_table, LinkParams, NoiseRegime};
        let mut rows = feasibility_table(NoiseRegime::default_shot(), &LinkParams::default())
            .unwrap();
        rows[7].cell.margin_staircase_db += 0.5;
        let outcome = verify_margins("shot", &rows);
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].contains("staircase"));
    }
}
