use std::path::Path;
use std::process::{Command, Output};

use klein_core::mesh::{Mesh, MeshFormat};

fn klein(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_klein"));
    cmd.current_dir(dir).args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("KLEIN_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key} = ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("{key} missing from report:\n{report}"))
}

#[test]
fn verify_reference_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = klein(dir.path(), &["klein", "verify"], &[]);
    let report = std::fs::read_to_string(dir.path().join("klein-report.txt")).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report}");
    assert!(report.starts_with("# klein-report v1\n"));
    let w: f64 = value(&report, "W_cover_over_pi").parse().unwrap();
    assert!((w - 16.0).abs() < 16.0 * 1e-3);
    assert_eq!(value(&report, "e_nu_cover"), "-8");
    assert_eq!(value(&report, "e_nu_quotient"), "-4");
    assert_eq!(value(&report, "result"), "PASS");
    // the resolved config and tolerances are embedded
    assert!(report.contains("[config]") && report.contains("[tolerances]"));
    assert_eq!(value(&report, "poles.2"), "0.6+0.125i");
}

#[test]
fn hexagonal_involution_has_a_fixpoint() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["involution", "classify", "--lattice", "1,0.5+0.866i", "--a", "-1", "--b", "0.866i"];
    let out = klein(dir.path(), &args, &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(value(&report, "verdict"), "fixpoint detected");

    // a half-sized translation does not square to a lattice translation
    let args = ["involution", "classify", "--lattice", "1,0.5+0.866i", "--a", "-1", "--b", "0.433i"];
    let out = klein(dir.path(), &args, &[]);
    assert_eq!(out.status.code(), Some(21));
    let report = std::fs::read_to_string(dir.path().join("klein-report.txt")).unwrap();
    assert_eq!(value(&report, "verdict"), "invalid involution");
    assert_eq!(value(&report, "kind"), "construction");
}

#[test]
fn rectangular_involution_normal_form() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["involution", "classify", "--lattice", "1,1.3i", "--a", "1", "--b", "0.5+0.2i"];
    let out = klein(dir.path(), &args, &[]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report}");
    assert_eq!(value(&report, "verdict"), "fixpoint-free");
    assert_eq!(value(&report, "normal_form"), "TranslationType");
}

#[test]
fn reflected_veronese_pair_is_exceptional() {
    let dir = tempfile::tempdir().unwrap();
    let out = klein(dir.path(), &["glue", "check-forms", "--veronese-pair", "reflected"], &[]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report}");
    assert_eq!(value(&report, "verdict"), "Exceptional");
    assert_eq!(value(&report, "display"), "< 8π");

    let out = klein(dir.path(), &["glue", "check-forms", "--veronese-pair", "reflected", "--allow-reflection"], &[]);
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(value(&report, "verdict"), "Found");

    let out = klein(
        dir.path(),
        &["glue", "check-forms", "--p11", "1,0,0", "--p12", "0,1,0", "--q11", "0,0,1", "--q12", "1,0,0"],
        &[],
    );
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report}");
    let v: f64 = value(&report, "pairing").parse().unwrap();
    assert!(v > 0.0);
}

#[test]
fn config_errors_use_the_config_range() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "r = [").unwrap();
    let out = klein(dir.path(), &["--config", "bad.toml", "klein", "build"], &[]);
    assert_eq!(out.status.code(), Some(10));
    // the report is still written
    let report = std::fs::read_to_string(dir.path().join("klein-report.txt")).unwrap();
    assert_eq!(value(&report, "kind"), "config");

    std::fs::write(dir.path().join("odd.toml"), "poles = [\"0.1+0.1i\", \"0.3+0.1i\", \"0.5+0.1i\", \"0.7+0.1i\"]\n").unwrap();
    let out = klein(dir.path(), &["--config", "odd.toml", "klein", "build"], &[]);
    assert_eq!(out.status.code(), Some(11));

    let out = klein(dir.path(), &["klein", "build"], &[("KLEIN_PHI_POLES", "[2, 2]")]);
    assert_eq!(out.status.code(), Some(11));

    let out = klein(dir.path(), &["--config", "missing.toml", "klein", "build"], &[]);
    assert_eq!(out.status.code(), Some(40));
}

#[test]
fn construction_errors_use_the_construction_range() {
    let dir = tempfile::tempdir().unwrap();
    // heights sum to r/2, but one pole lies outside the fundamental domain
    let poles = r#"["1.4+0.125i", "0.35+0.125i", "0.6+0.125i", "0.85+0.125i"]"#;
    let out = klein(dir.path(), &["klein", "build"], &[("KLEIN_POLES", poles)]);
    assert_eq!(out.status.code(), Some(22));
}

#[test]
fn environment_overrides_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let env = [("KLEIN_GRID", "[64, 64]"), ("KLEIN_R", "1.3"), ("KLEIN_P1", "0.2+0.39i"),
        ("KLEIN_POLES", r#"["0.1+0.1625i", "0.35+0.1625i", "0.6+0.1625i", "0.85+0.1625i"]"#)];
    let out = klein(dir.path(), &["klein", "energy"], &env);
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{report}");
    assert_eq!(value(&report, "grid"), "64x64");
    assert_eq!(value(&report, "r"), "1.3");
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let env = [("KLEIN_GRID", "[64, 64]"), ("KLEIN_SAMPLES", "128"), ("KLEIN_SCAN_N", "60")];
    let a = klein(dir.path(), &["--seed", "7", "-o", "a.txt", "klein", "verify"], &env);
    let b = klein(dir.path(), &["--seed", "7", "--threads", "1", "-o", "b.txt", "klein", "verify"], &env);
    assert_eq!(a.status.code(), b.status.code());
    let ra = std::fs::read(dir.path().join("a.txt")).unwrap();
    let rb = std::fs::read(dir.path().join("b.txt")).unwrap();
    // only the report path differs
    let strip = |v: Vec<u8>| String::from_utf8(v).unwrap().lines().filter(|l| !l.starts_with("report =")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(ra), strip(rb));
}

#[test]
fn mesh_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [("k.obj", MeshFormat::Obj), ("k.ply", MeshFormat::Ply)] {
        let out = klein(dir.path(), &["klein", "mesh", "--out", name], &[("KLEIN_MESH_GRID", "[24, 20]")]);
        assert_eq!(out.status.code(), Some(0));
        let mesh = Mesh::read(&dir.path().join(name), format).unwrap();
        assert_eq!(mesh.vertices.len(), 24 * 20);
        assert_eq!(mesh.triangles.len(), 2 * 24 * 20);
        assert_eq!(mesh.euler_characteristic(), 0);
        assert!(mesh.header.iter().any(|h| h.starts_with("p1 = 0.2+0.3i")));
    }
}

#[test]
fn unwritable_report_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("file"), "").unwrap();
    let out = klein(dir.path(), &["-o", "file/report.txt", "glue", "bound", "--w1", "6", "--w2", "6"], &[]);
    assert_eq!(out.status.code(), Some(40));
}
