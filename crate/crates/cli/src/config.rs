//! Run configuration: defaults, then a TOML file, then `KLEIN_*` environment
//! variables, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use klein_core::immersion::KleinParams;
use klein_core::report::{fmt_complex, parse_complex, Section, Tolerances, VerifyOptions};
use num_complex::Complex64;
use serde::Deserialize;

use crate::exit::CliError;

pub const ENV_PREFIX: &str = "KLEIN_";

/// Tolerance on `sum Im b_k` against an odd multiple of `r/2` before snapping.
pub const PARITY_SNAP_TOL: f64 = 1e-9;

/// Config as written: flat keys, complex numbers as `re+imi` strings.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub r: f64,
    pub poles: Vec<String>,
    pub l: i64,
    pub p1: String,
    pub phi_poles: [usize; 2],
    pub grid: [usize; 2],
    pub condition_grid: usize,
    pub samples: usize,
    pub scan_n: usize,
    pub seed: u64,
    pub report: PathBuf,
    pub mesh: PathBuf,
    pub mesh_grid: [usize; 2],
    pub tol_symmetry: f64,
    pub tol_involution: f64,
    pub tol_chart_overlap: f64,
    pub tol_conformality: f64,
    pub tol_jet_agreement: f64,
    pub tol_wintgen: f64,
    pub tol_kperp_max: f64,
    pub tol_energy_rel: f64,
    pub tol_euler_abs: f64,
    pub tol_gauss_bonnet_abs: f64,
    pub tol_invariance_rel: f64,
}

impl Default for RawConfig {
    fn default() -> Self {
        let p = KleinParams::reference(1.0);
        let t = Tolerances::default();
        let o = VerifyOptions::default();
        Self {
            r: p.r,
            poles: p.poles.iter().map(|b| fmt_complex(*b)).collect(),
            l: 0,
            p1: fmt_complex(p.p1),
            phi_poles: p.phi_poles,
            grid: o.grid,
            condition_grid: o.condition_grid,
            samples: o.samples,
            scan_n: o.scan_n,
            seed: o.seed,
            report: PathBuf::from("klein-report.txt"),
            mesh: PathBuf::from("klein.obj"),
            mesh_grid: [128, 128],
            tol_symmetry: t.symmetry,
            tol_involution: t.involution,
            tol_chart_overlap: t.chart_overlap,
            tol_conformality: t.conformality,
            tol_jet_agreement: t.jet_agreement,
            tol_wintgen: t.wintgen,
            tol_kperp_max: t.kperp_max,
            tol_energy_rel: t.energy_rel,
            tol_euler_abs: t.euler_abs,
            tol_gauss_bonnet_abs: t.gauss_bonnet_abs,
            tol_invariance_rel: t.invariance_rel,
        }
    }
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: KleinParams,
    pub l: i64,
    pub verify: VerifyOptions,
    pub report: PathBuf,
    pub mesh: PathBuf,
    pub mesh_grid: [usize; 2],
}

/// Merge the file (if any) and `KLEIN_*` variables from `env` into a TOML table.
pub fn load_table(
    path: Option<&Path>,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<toml::Table, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| CliError::ConfigParse(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    let overrides: BTreeMap<String, String> = env
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_ascii_lowercase(), v)))
        .collect();
    for (key, raw) in overrides {
        // accept any TOML literal; anything else is taken as a bare string
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or(toml::Value::String(raw));
        table.insert(key, value);
    }
    Ok(table)
}

fn complex(key: &str, s: &str) -> Result<Complex64, CliError> {
    parse_complex(s).ok_or_else(|| CliError::ConfigInvalid(format!("{key}: cannot read '{s}' as re+imi")))
}

impl RawConfig {
    pub fn from_table(table: toml::Table) -> Result<Self, CliError> {
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::ConfigParse(e.to_string()))
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        if !(self.r.is_finite() && self.r > 0.0) {
            return bad(format!("r must be positive, got {}", self.r));
        }
        if self.poles.len() != 4 {
            return bad(format!("poles: expected 4 entries, got {}", self.poles.len()));
        }
        let mut poles = [Complex64::new(0.0, 0.0); 4];
        for (k, s) in self.poles.iter().enumerate() {
            poles[k] = complex("poles", s)?;
        }
        let [i, j] = self.phi_poles;
        if i == j || i > 3 || j > 3 {
            return bad(format!("phi_poles must be two distinct indices in 0..4, got [{i}, {j}]"));
        }
        let sum: f64 = poles.iter().map(|b| b.im).sum();
        let half_units = 2.0 * sum / self.r;
        let expected = (2 * self.l + 1) as f64;
        if (half_units - expected).abs() > PARITY_SNAP_TOL {
            return bad(format!(
                "parity: sum of pole heights {sum} must equal (2l + 1) r / 2 = {} for l = {}",
                expected * self.r / 2.0,
                self.l
            ));
        }
        for (k, v) in [("grid", self.grid), ("mesh_grid", self.mesh_grid)] {
            if v[0] < 2 || v[1] < 2 {
                return bad(format!("{k} must be at least 2 x 2"));
            }
        }
        let tol = Tolerances {
            symmetry: self.tol_symmetry,
            involution: self.tol_involution,
            chart_overlap: self.tol_chart_overlap,
            conformality: self.tol_conformality,
            jet_agreement: self.tol_jet_agreement,
            wintgen: self.tol_wintgen,
            kperp_max: self.tol_kperp_max,
            energy_rel: self.tol_energy_rel,
            euler_abs: self.tol_euler_abs,
            gauss_bonnet_abs: self.tol_gauss_bonnet_abs,
            invariance_rel: self.tol_invariance_rel,
        };
        Ok(RunConfig {
            params: KleinParams { r: self.r, poles, phi_poles: self.phi_poles, p1: complex("p1", &self.p1)? },
            l: self.l,
            verify: VerifyOptions {
                grid: self.grid,
                condition_grid: self.condition_grid,
                samples: self.samples,
                seed: self.seed,
                scan_n: self.scan_n,
                tol,
                ..VerifyOptions::default()
            },
            report: self.report.clone(),
            mesh: self.mesh.clone(),
            mesh_grid: self.mesh_grid,
        })
    }
}

impl RunConfig {
    /// The resolved values, in the same flat keys the file uses.
    pub fn write(&self, sec: &mut Section) {
        let p = &self.params;
        let v = &self.verify;
        sec.set("r", p.r);
        for (k, b) in p.poles.iter().enumerate() {
            sec.set(&format!("poles.{k}"), *b);
        }
        sec.set("l", self.l)
            .set("p1", p.p1)
            .set("phi_poles", format!("{},{}", p.phi_poles[0], p.phi_poles[1]))
            .set("grid", format!("{}x{}", v.grid[0], v.grid[1]))
            .set("condition_grid", v.condition_grid)
            .set("samples", v.samples)
            .set("scan_n", v.scan_n)
            .set("seed", v.seed)
            .set("report", self.report.display().to_string())
            .set("mesh", self.mesh.display().to_string())
            .set("mesh_grid", format!("{}x{}", self.mesh_grid[0], self.mesh_grid[1]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_resolve_to_the_reference() {
        let c = RawConfig::default().resolve().unwrap();
        assert_eq!(c.params, KleinParams::reference(1.0));
    }

    #[test]
    fn environment_overrides_file_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "r = 2.0\nseed = 5\np1 = \"0.2+0.6i\"\n").unwrap();
        let t = load_table(
            Some(&path),
            env(&[
                ("KLEIN_SEED", "9"),
                ("KLEIN_POLES", r#"["0.1+0.25i", "0.35+0.25i", "0.6+0.25i", "0.85+0.25i"]"#),
                ("KLEIN_REPORT", "out/r.txt"),
                ("OTHER", "1"),
            ]),
        )
        .unwrap();
        let c = RawConfig::from_table(t).unwrap().resolve().unwrap();
        assert_eq!(c.params.r, 2.0);
        assert_eq!(c.verify.seed, 9);
        assert_eq!(c.params.poles[0], Complex64::new(0.1, 0.25));
        assert_eq!(c.report, PathBuf::from("out/r.txt"));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let parse = |text: &str| RawConfig::from_table(text.parse().unwrap()).and_then(|c| c.resolve());
        assert!(matches!(parse("bogus = 1"), Err(CliError::ConfigParse(_))));
        assert!(matches!(parse("phi_poles = [1, 1]"), Err(CliError::ConfigInvalid(_))));
        assert!(matches!(parse("l = 1"), Err(CliError::ConfigInvalid(_))));
        assert!(matches!(parse("p1 = \"nonsense\""), Err(CliError::ConfigInvalid(_))));
        assert!(matches!(parse("r = -1.0"), Err(CliError::ConfigInvalid(_))));
    }
}
