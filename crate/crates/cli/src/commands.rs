use std::f64::consts::PI;
use std::path::Path;

use klein_core::gluing::TracefreeForm;
use klein_core::grid::Execution;
use klein_core::immersion::KleinConstruction;
use klein_core::invariants::{integrate_checked, QuadratureSpec};
use klein_core::involution::{
    involution_fixpoints, involution_normalize, involution_validate, FixpointStatus, Involution,
};
use klein_core::lattice::{reduce_lattice, Lattice};
use klein_core::mesh::{Mesh, MeshFormat};
use klein_core::report::{
    check_forms, fmt_num, gluing_bound, veronese_form_pair, verify_klein, verify_veronese, Report,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::config::RunConfig;
use crate::exit::CliError;

/// Grid for the brute-force rotation oracle.
const ORACLE_GRID: usize = 180;

pub fn build(cfg: &RunConfig, report: &mut Report) -> Result<KleinConstruction, CliError> {
    let c = KleinConstruction::build(&cfg.params)?;
    if c.g.l != cfg.l {
        return Err(CliError::ConfigInvalid(format!("parity index: config has l = {}, poles give {}", cfg.l, c.g.l)));
    }
    let sec = report.section("construction");
    sec.set("r", c.params.r).set("l", c.g.l);
    for (k, b) in c.g.poles.iter().enumerate() {
        sec.set(&format!("pole_{k}"), *b);
    }
    for (k, z) in c.g.rep.zero_representatives().iter().enumerate() {
        sec.set(&format!("g_zero_{k}"), *z);
    }
    sec.set("g_constant", c.g.rep.constant_factor())
        .set("phi1_pole_0", c.g.poles[c.params.phi_poles[0]])
        .set("phi1_pole_1", c.g.poles[c.params.phi_poles[1]])
        .set("phi1_zero_0", c.phi1.zeros[0])
        .set("phi1_zero_1", c.phi1.zeros[1])
        .set("phi1_zero_perturbation", c.phi1.epsilon)
        .set("degree_g", c.g.rep.degree())
        .set("degree_phi1", c.phi1.rep.degree());
    let contained = c.immersion.triple.containments();
    sec.set("pole_containments", contained.iter().all(|b| *b));
    report.check("pole_containments", 0.0, "all hold", contained.iter().all(|b| *b));
    Ok(c)
}

pub fn klein_verify(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let c = build(cfg, report)?;
    verify_klein(&c, &cfg.verify, report)?;
    Ok(())
}

fn quadrature(cfg: &RunConfig) -> QuadratureSpec {
    let v = &cfg.verify;
    QuadratureSpec {
        n: v.grid[0],
        m: v.grid[1],
        tolerance: v.tol.energy_rel,
        execution: v.execution,
        ..QuadratureSpec::torus(cfg.params.r, v.grid[0])
    }
}

pub fn klein_energy(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let c = build(cfg, report)?;
    let (fine, coarse) = integrate_checked(&c.immersion, &quadrature(cfg))?;
    let w = fine.willmore;
    report
        .section("energy")
        .set("grid", format!("{}x{}", cfg.verify.grid[0], cfg.verify.grid[1]))
        .set("W_cover", w)
        .set("W_cover_over_pi", w / PI)
        .set("W_quotient_over_pi", w / (2.0 * PI))
        .set("W_half_grid_over_pi", coarse.willmore / PI)
        .set("W_minus_4pi_deg_g", (w - 4.0 * PI * c.g.rep.degree() as f64).abs() / w);
    report.check_max("W_cover_16pi", (w / (16.0 * PI) - 1.0).abs(), cfg.verify.tol.energy_rel);
    Ok(())
}

pub fn klein_euler(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let c = build(cfg, report)?;
    let (fine, _) = integrate_checked(&c.immersion, &quadrature(cfg))?;
    let raw = fine.kperp / (2.0 * PI);
    report
        .section("euler")
        .set("grid", format!("{}x{}", cfg.verify.grid[0], cfg.verify.grid[1]))
        .set("e_nu_cover_raw", raw)
        .set("e_nu_cover", raw.round() as i64)
        .set("e_nu_quotient", (raw / 2.0).round() as i64)
        .set("gauss_bonnet", fine.gauss);
    report.check_max("e_nu_cover_minus8", (raw + 8.0).abs(), cfg.verify.tol.euler_abs);
    report.check_max("gauss_bonnet_torus", fine.gauss.abs(), cfg.verify.tol.gauss_bonnet_abs);
    Ok(())
}

pub fn mesh_format(path: &Path, explicit: Option<MeshFormat>) -> Result<MeshFormat, CliError> {
    if let Some(f) = explicit {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("obj") => Ok(MeshFormat::Obj),
        Some("ply") => Ok(MeshFormat::Ply),
        _ => Err(CliError::ConfigInvalid(format!("cannot infer mesh format from {}", path.display()))),
    }
}

pub fn klein_mesh(
    cfg: &RunConfig,
    path: &Path,
    format: MeshFormat,
    exec: Execution,
    report: &mut Report,
) -> Result<(), CliError> {
    let c = build(cfg, report)?;
    let p = &c.params;
    let mut header = vec![
        "Klein bottle double cover, torus grid with seams identified".to_string(),
        format!("r = {}", fmt_num(p.r)),
    ];
    for (k, b) in c.g.poles.iter().enumerate() {
        header.push(format!("pole_{k} = {}", klein_core::report::fmt_complex(*b)));
    }
    header.push(format!("p1 = {}", klein_core::report::fmt_complex(p.p1)));
    header.push(format!("l = {}", c.g.l));
    let [n, m] = cfg.mesh_grid;
    let mesh = Mesh::torus_grid(&c.immersion, p.r, n, m, header, exec)?;
    mesh.write(path, format)?;
    let chi = mesh.euler_characteristic();
    report
        .section("mesh")
        .set("path", path.display().to_string())
        .set("format", if format == MeshFormat::Obj { "obj" } else { "ply" })
        .set("resolution", format!("{n}x{m}"))
        .set("vertices", mesh.vertices.len())
        .set("triangles", mesh.triangles.len())
        .set("euler_characteristic", chi);
    report.check("mesh_closed_torus", chi as f64, "= 0", chi == 0);
    Ok(())
}

pub fn veronese(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    verify_veronese(&cfg.verify, report)?;
    Ok(())
}

pub fn involution_classify(lattice: [Complex64; 2], a: Complex64, b: Complex64, seed: u64, report: &mut Report) -> Result<(), CliError> {
    let lat = Lattice::new(lattice[0], lattice[1])?;
    let canon = reduce_lattice(&lat);
    let v = involution_validate(a, b, &lat);
    let sec = report.section("involution");
    sec.set("omega1", lattice[0])
        .set("omega2", lattice[1])
        .set("a", a)
        .set("b", b)
        .set("canonical_tau", canon.tau)
        .set("rectangular", canon.is_rectangular())
        .set("unimodular", v.unimodular)
        .set("preserves_lattice", v.preserves_lattice)
        .set("translation_in_lattice", v.translation_in_lattice);
    for (k, d) in v.diagnostics.iter().enumerate() {
        sec.set(&format!("diagnostic_{k}"), d.as_str());
    }
    if !v.is_valid() {
        sec.set("verdict", "invalid involution");
        return Err(CliError::Involution(klein_core::error::InvolutionError::Invalid(v.diagnostics.join("; "))));
    }
    let inv = Involution::new(a, b);
    match involution_fixpoints(&inv, &lat)? {
        FixpointStatus::FixpointSet { witness, description } => {
            let residual = lat.torus_distance(inv.apply(witness), witness);
            report
                .section("involution")
                .set("verdict", "fixpoint detected")
                .set("witness", witness)
                .set("witness_residual", residual)
                .set("fixpoint_set", description.as_str());
            report.check_max("fixpoint_witness", residual, 1e-10);
        }
        FixpointStatus::FixpointFree => {
            let nf = involution_normalize(&inv, &lat)?;
            let m = nf.conjugating_map;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..200 {
                let w = nf.tau * rng.gen::<f64>() + rng.gen::<f64>();
                worst = worst.max(lat.torus_distance(inv.apply(m.apply(w)), m.apply(nf.apply(w))));
            }
            report
                .section("involution")
                .set("verdict", "fixpoint-free")
                .set("normal_form", format!("{:?}", nf.kind))
                .set("normal_tau", nf.tau)
                .set("conjugating_alpha", m.alpha)
                .set("conjugating_delta", m.delta)
                .set("normal_form_residual", worst);
            report.check_max("normal_form_pointwise", worst, 1e-10);
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum VeronesePair {
    /// The Veronese form against its mirror image.
    Reflected,
    /// The Veronese form against itself.
    Same,
}

pub struct FormsInput {
    pub pair: Option<VeronesePair>,
    pub forms: Option<(TracefreeForm, TracefreeForm)>,
    pub allow_reflection: bool,
}

pub fn glue_check_forms(input: FormsInput, report: &mut Report) -> Result<(), CliError> {
    let (p, q) = match (input.pair, input.forms) {
        (Some(pair), _) => {
            let (p, q) = veronese_form_pair()?;
            match pair {
                VeronesePair::Reflected => (p, q),
                VeronesePair::Same => (p.clone(), p),
            }
        }
        (None, Some(f)) => f,
        (None, None) => return Err(CliError::ConfigInvalid("give --veronese-pair or all of --p11 --p12 --q11 --q12".into())),
    };
    let sec = report.section("forms");
    sec.set("p11", join(&p.p11)).set("p12", join(&p.p12)).set("q11", join(&q.p11)).set("q12", join(&q.p12));
    check_forms(&p, &q, !input.allow_reflection, ORACLE_GRID, report)?;
    if input.pair.is_some() {
        gluing_bound(6.0 * PI, 6.0 * PI, report);
    }
    Ok(())
}

pub fn glue_bound(w1_over_pi: f64, w2_over_pi: f64, report: &mut Report) {
    gluing_bound(w1_over_pi * PI, w2_over_pi * PI, report);
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(",")
}

/// Everything at once: construction, Klein suite, Veronese suite, the exceptional gluing pair.
pub fn aggregate(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    klein_verify(cfg, report)?;
    verify_veronese(&cfg.verify, report)?;
    let (p, q) = veronese_form_pair()?;
    check_forms(&p, &q, true, ORACLE_GRID, report)?;
    gluing_bound(6.0 * PI, 6.0 * PI, report);
    Ok(())
}
