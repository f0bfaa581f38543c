//! Verification pipelines and the structured-text report they write.
//!
//! Format: a versioned header line, then `[section]` blocks of `key = value`
//! lines in insertion order. Floats use the shortest round-trip form and
//! complex numbers the `re+imi` form, so identical inputs give identical bytes.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divisor::klein_involution;
use crate::error::{GluingError, InvariantError};
use crate::geometry::{curvature, jet, wintgen_twistor_residuals, JetMethod, Surface, DEFAULT_FD_STEP};
use crate::gluing::{find_positive_rotation, pairing, predict_gluing_bound, rotate_form, RotationOutcome, TracefreeForm};
use crate::grid::{map_indices, Execution};
use crate::immersion::{self_intersection_scan, KleinConstruction, Projected, ScanOptions, VeroneseImmersion};
use crate::invariants::{
    consistency_report, convergence_factor, integrate, AmbientMap, QuadratureSpec,
};

pub const REPORT_HEADER: &str = "# klein-report v1";

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e7)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `re+imi` / `re-imi`.
pub fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", fmt_num(z.re), sign, fmt_num(z.im.abs()))
}

pub trait ReportValue {
    fn to_report(&self) -> String;
}

impl ReportValue for f64 {
    fn to_report(&self) -> String {
        fmt_num(*self)
    }
}

impl ReportValue for Complex64 {
    fn to_report(&self) -> String {
        fmt_complex(*self)
    }
}

macro_rules! display_value {
    ($($t:ty),*) => {
        $(impl ReportValue for $t {
            fn to_report(&self) -> String {
                self.to_string()
            }
        })*
    };
}
display_value!(i32, i64, u64, u32, usize, bool, str, String);

impl<T: ReportValue + ?Sized> ReportValue for &T {
    fn to_report(&self) -> String {
        (**self).to_report()
    }
}

/// Parse `re+imi`, `re-imi`, `re`, `imi` (and `i`, `-i`).
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not the leading one or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |t: &str| match t {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        t => t.parse().ok(),
    };
    match split {
        Some(k) => Some(Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn set(&mut self, key: &str, value: impl ReportValue) -> &mut Self {
        self.entries.push((key.to_string(), value.to_report()));
        self
    }

    pub fn set_complex(&mut self, key: &str, z: Complex64) -> &mut Self {
        self.set(key, z)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub sections: Vec<Section>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a section, or returns the existing one with that name.
    pub fn section(&mut self, name: &str) -> &mut Section {
        let k = match self.sections.iter().position(|s| s.name == name) {
            Some(k) => k,
            None => {
                self.sections.push(Section { name: name.to_string(), entries: Vec::new() });
                self.sections.len() - 1
            }
        };
        &mut self.sections[k]
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.iter().find(|s| s.name == section)?.get(key)
    }

    /// `value <= limit`.
    pub fn check_max(&mut self, name: &str, value: f64, limit: f64) {
        self.push_check(name, value, format!("<= {}", fmt_num(limit)), value <= limit);
    }

    pub fn check(&mut self, name: &str, value: f64, limit: impl Into<String>, pass: bool) {
        self.push_check(name, value, limit.into(), pass);
    }

    fn push_check(&mut self, name: &str, value: f64, limit: String, pass: bool) {
        self.checks.push(Check { name: name.to_string(), value, limit, pass: pass && !value.is_nan() });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self) -> String {
        let mut s = format!("{REPORT_HEADER}\n");
        for sec in &self.sections {
            let _ = writeln!(s, "\n[{}]", sec.name);
            for (k, v) in &sec.entries {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        if !self.checks.is_empty() {
            s.push_str("\n[checks]\n");
            for c in &self.checks {
                let verdict = if c.pass { "pass" } else { "FAIL" };
                let _ = writeln!(s, "{} = {verdict} (value {}, required {})", c.name, fmt_num(c.value), c.limit);
            }
            let _ = writeln!(s, "\n[status]\nresult = {}", if self.all_passed() { "PASS" } else { "FAIL" });
        }
        s
    }
}

/// Tolerance profile; every report embeds the one it was checked against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub symmetry: f64,
    pub involution: f64,
    pub chart_overlap: f64,
    pub conformality: f64,
    pub jet_agreement: f64,
    pub wintgen: f64,
    pub kperp_max: f64,
    pub energy_rel: f64,
    pub euler_abs: f64,
    pub gauss_bonnet_abs: f64,
    pub invariance_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-8,
            involution: 1e-10,
            chart_overlap: 1e-9,
            conformality: 1e-6,
            jet_agreement: 1e-6,
            wintgen: 1e-6,
            kperp_max: 1e-8,
            energy_rel: 1e-3,
            euler_abs: 1e-3,
            gauss_bonnet_abs: 1e-2,
            invariance_rel: 5e-3,
        }
    }
}

impl Tolerances {
    pub fn write(&self, sec: &mut Section) {
        sec.set("symmetry", self.symmetry)
            .set("involution", self.involution)
            .set("chart_overlap", self.chart_overlap)
            .set("conformality", self.conformality)
            .set("jet_agreement", self.jet_agreement)
            .set("wintgen", self.wintgen)
            .set("kperp_max", self.kperp_max)
            .set("energy_rel", self.energy_rel)
            .set("euler_abs", self.euler_abs)
            .set("gauss_bonnet_abs", self.gauss_bonnet_abs)
            .set("invariance_rel", self.invariance_rel);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Quadrature grid `(N, M)`.
    pub grid: [usize; 2],
    /// Grid side for the branch-point search.
    pub condition_grid: usize,
    /// Random pointwise samples.
    pub samples: usize,
    pub seed: u64,
    /// Self-intersection scan resolution (0 disables the scan).
    pub scan_n: usize,
    pub tol: Tolerances,
    pub execution: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid: [256, 256],
            condition_grid: 128,
            samples: 1024,
            seed: 1,
            scan_n: 200,
            tol: Tolerances::default(),
            execution: Execution::default(),
        }
    }
}

fn dist(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
    ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
}

/// Maxima of the pointwise conformality, jet-agreement and Wintgen/twistor residuals.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointwiseMaxima {
    pub conformality: f64,
    pub jet_agreement: f64,
    pub r1: f64,
    pub r2: f64,
    pub twistor: f64,
    pub twistor_abs: f64,
    pub kperp: f64,
    pub positive_sign_flags: usize,
}

pub fn pointwise_maxima<S: Surface + ?Sized>(
    s: &S,
    points: &[Complex64],
    exec: Execution,
) -> Result<PointwiseMaxima, InvariantError> {
    let rows = map_indices(exec, points.len(), |k| -> Result<[f64; 8], InvariantError> {
        let z = points[k];
        let j = jet(s, z, JetMethod::DualNumber)?;
        let fd = jet(s, z, JetMethod::FiniteDifference(DEFAULT_FD_STEP))?;
        let cs = curvature(&j)?;
        let w = wintgen_twistor_residuals(&cs)?;
        let (c1, c2) = cs.conformality();
        Ok([
            c1.max(c2),
            j.relative_deviation(&fd),
            w.r1,
            w.r2,
            w.twistor_residual,
            w.twistor_residual_abs,
            cs.kperp,
            (w.sign_flag > 0) as u8 as f64,
        ])
    });
    let mut m = PointwiseMaxima { kperp: f64::NEG_INFINITY, ..Default::default() };
    for r in rows {
        let r = r?;
        m.conformality = m.conformality.max(r[0]);
        m.jet_agreement = m.jet_agreement.max(r[1]);
        m.r1 = m.r1.max(r[2]);
        m.r2 = m.r2.max(r[3]);
        m.twistor = m.twistor.max(r[4]);
        m.twistor_abs = m.twistor_abs.max(r[5]);
        m.kperp = m.kperp.max(r[6]);
        m.positive_sign_flags += r[7] as usize;
    }
    Ok(m)
}

fn write_pointwise(report: &mut Report, m: &PointwiseMaxima, tol: &Tolerances, prefix: &str) {
    report
        .section(&format!("{prefix}pointwise"))
        .set("max_conformality", m.conformality)
        .set("max_jet_deviation", m.jet_agreement)
        .set("max_r1", m.r1)
        .set("max_r2", m.r2)
        .set("max_twistor_residual", m.twistor)
        .set("max_twistor_residual_abs", m.twistor_abs)
        .set("max_kperp", m.kperp)
        .set("positive_kperp_samples", m.positive_sign_flags);
    report.check_max(&format!("{prefix}conformality"), m.conformality, tol.conformality);
    report.check_max(&format!("{prefix}jet_cross_method"), m.jet_agreement, tol.jet_agreement);
    report.check_max(&format!("{prefix}wintgen_r1"), m.r1, tol.wintgen);
    report.check_max(&format!("{prefix}wintgen_r2"), m.r2, tol.wintgen);
    report.check_max(&format!("{prefix}twistor_residual"), m.twistor, tol.wintgen);
    report.check_max(&format!("{prefix}kperp_nonpositive"), m.kperp, tol.kperp_max);
}

/// The full invariant suite for a Klein construction.
pub fn verify_klein(c: &KleinConstruction, opts: &VerifyOptions, report: &mut Report) -> Result<(), InvariantError> {
    let imm = &c.immersion;
    let r = c.params.r;
    let tol = &opts.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<Complex64> = (0..opts.samples).map(|_| Complex64::new(rng.gen(), rng.gen::<f64>() * r)).collect();

    let g = &c.g.rep;
    let deg = g.degree();
    let deg_ap = g.degree_by_argument_principle().ok();
    let sec = report.section("construction");
    sec.set("r", r).set("l", c.g.l);
    for (k, b) in c.g.poles.iter().enumerate() {
        sec.set_complex(&format!("pole_{k}"), *b);
    }
    sec.set_complex("phi1_zero_0", c.phi1.zeros[0])
        .set_complex("phi1_zero_1", c.phi1.zeros[1])
        .set("phi1_zero_perturbation", c.phi1.epsilon)
        .set("degree_g_poles", deg)
        .set("degree_g_argument_principle", deg_ap.map_or("failed".to_string(), |d| d.to_string()));
    report.check("degree_g", deg as f64, "= 4 by both counts", deg == 4 && deg_ap == Some(4));

    let sym = points
        .iter()
        .map(|&z| (g.value(klein_involution(z)) * g.value(z).conj() + 1.0).norm())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let inv = points
        .iter()
        .map(|&z| dist(imm.evaluate_f(klein_involution(z)), imm.evaluate_f(z)))
        .fold(0.0, f64::max);
    let mut overlap = 0.0f64;
    let mut overlap_samples = 0usize;
    for &z in &points {
        let gz = g.value(z).norm();
        if (0.5..=2.0).contains(&gz) {
            overlap = overlap.max(dist(imm.evaluate_primary(z), imm.evaluate_pole_chart(z)));
            overlap_samples += 1;
        }
    }
    let n = opts.condition_grid;
    let (cmin, at) = imm.immersion_condition_min(n, n, opts.execution);
    let (refined, _) = imm.refine_condition_min(at, 1.0 / n as f64);
    report
        .section("symmetry")
        .set("samples", points.len())
        .set("max_g_identity_residual", sym)
        .set("max_involution_residual", inv)
        .set("chart_overlap_samples", overlap_samples)
        .set("max_chart_overlap_residual", overlap)
        .set("immersion_condition_grid", n)
        .set("immersion_condition_min", cmin)
        .set_complex("immersion_condition_argmin", at)
        .set("immersion_condition_refined", refined);
    report.check_max("g_symmetry", sym, tol.symmetry);
    report.check_max("f_involution_invariance", inv, tol.involution);
    report.check_max("chart_overlap", overlap, tol.chart_overlap);
    report.check("immersion_condition", refined, "> 0", refined > 0.0);

    let pm = pointwise_maxima(imm, &points, opts.execution)?;
    write_pointwise(report, &pm, tol, "");

    let spec = QuadratureSpec {
        n: opts.grid[0],
        m: opts.grid[1],
        tolerance: tol.energy_rel,
        execution: opts.execution,
        ..QuadratureSpec::torus(r, opts.grid[0])
    };
    let inv_report = consistency_report(imm, &spec, deg, 0)?;
    let conv = convergence_factor(imm, &QuadratureSpec { n: 64, m: 64, ..spec }, 16.0 * PI)?;
    let sec = report.section("energy");
    sec.set("grid", format!("{}x{}", opts.grid[0], opts.grid[1]))
        .set("W_cover", inv_report.w_cover)
        .set("W_cover_over_pi", inv_report.w_cover / PI)
        .set("W_quotient_over_pi", inv_report.w_quotient / PI)
        .set("W_grid_change", inv_report.w_grid_change)
        .set("convergence_error_64", conv.coarse_error)
        .set("convergence_error_128", conv.fine_error)
        .set("convergence_factor_64_128", conv.factor)
        .set("convergence_saturated", conv.saturated())
        .set("area", inv_report.area)
        .set("e_nu_cover_raw", inv_report.e_nu_cover_raw)
        .set("e_nu_cover", inv_report.e_nu_cover)
        .set("e_nu_quotient", inv_report.e_nu_quotient)
        .set("gauss_bonnet", inv_report.gauss_bonnet)
        .set("chi", inv_report.chi)
        .set("wintgen_bound_holds", inv_report.wintgen_bound_holds);
    for (k, v) in &inv_report.identity_residuals {
        sec.set(k, v);
    }
    let w_rel = (inv_report.w_cover / (16.0 * PI) - 1.0).abs();
    report.check_max("W_cover_16pi", w_rel, tol.energy_rel);
    report.check(
        "convergence_factor",
        conv.factor,
        ">= 4 or 64x64 error below 1e-10",
        conv.factor >= 4.0 || conv.saturated(),
    );
    let e_dev = (inv_report.e_nu_cover_raw + 8.0).abs();
    report.check_max("e_nu_cover_minus8", e_dev, tol.euler_abs);
    report.check("e_nu_quotient", inv_report.e_nu_quotient as f64, "= -4", inv_report.e_nu_quotient == -4);
    report.check_max("gauss_bonnet_torus", inv_report.gauss_bonnet.abs(), tol.gauss_bonnet_abs);
    report.check("wintgen_bound", inv_report.w_cover, ">= 2pi(chi + |e|)", inv_report.wintgen_bound_holds);

    let refl = crate::invariants::Transformed { surface: imm, map: AmbientMap::Reflection { axis: 3 } };
    let e_refl = integrate(&refl, &QuadratureSpec { n: 128, m: 128, ..spec })?.kperp / (2.0 * PI);
    report.section("energy").set("e_nu_reflected_raw", e_refl);
    report.check_max("e_nu_reflected_plus8", (e_refl - 8.0).abs(), tol.euler_abs);

    if opts.scan_n > 0 {
        let so = ScanOptions { n: opts.scan_n, ..ScanOptions::default() };
        let scan = imm.self_intersection_scan(so, opts.execution);
        let lattice = imm.lattice();
        let control = self_intersection_scan(&Projected(imm), &lattice, Some(&klein_involution), so, opts.execution);
        let sec = report.section("embedding");
        sec.set("samples", scan.samples)
            .set("eps", scan.eps)
            .set("flagged", scan.flagged)
            .set("control_projection_flagged", control.flagged);
        for (k, (a, b, d)) in scan.pairs.iter().take(10).enumerate() {
            sec.set(&format!("pair_{k}"), format!("{} {} {}", fmt_complex(*a), fmt_complex(*b), fmt_num(*d)));
        }
        report.check("embedding_scan_empty", scan.flagged as f64, "= 0", scan.is_empty());
        report.check("projection_control_flagged", control.flagged as f64, "> 0", !control.is_empty());
    }
    Ok(())
}

/// The Veronese immersion of `RP^2`, integrated over the doubled unit disk.
pub fn verify_veronese(opts: &VerifyOptions, report: &mut Report) -> Result<(), InvariantError> {
    let tol = &opts.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<Complex64> = (0..opts.samples)
        .map(|_| Complex64::from_polar(rng.gen::<f64>().sqrt() * 0.999, rng.gen::<f64>() * 2.0 * PI))
        .collect();
    let inv = points
        .iter()
        .map(|&z| {
            let f = VeroneseImmersion::evaluate(Some(z));
            dist(VeroneseImmersion::evaluate(Some(VeroneseImmersion::involution(z))), f)
                / (1.0 + f[0].norm() + f[1].norm())
        })
        .fold(0.0, f64::max);
    let cond = VeroneseImmersion::immersion_condition_min(opts.condition_grid);
    let pm = pointwise_maxima(&VeroneseImmersion, &points, opts.execution)?;
    let spec = QuadratureSpec {
        n: opts.grid[0],
        m: opts.grid[1],
        tolerance: tol.energy_rel,
        execution: opts.execution,
        ..QuadratureSpec::disk(opts.grid[0])
    };
    let i = integrate(&VeroneseImmersion, &spec)?;
    let e = i.kperp / (2.0 * PI);
    report
        .section("veronese")
        .set("grid", format!("{}x{}", opts.grid[0], opts.grid[1]))
        .set("samples", points.len())
        .set("max_involution_residual", inv)
        .set("immersion_condition_min", cond)
        .set("W_cover_over_pi", i.willmore / PI)
        .set("W_quotient_over_pi", i.willmore / (2.0 * PI))
        .set("e_nu_cover_raw", e)
        .set("e_nu_cover", e.round())
        .set("e_nu_quotient", (e / 2.0).round())
        .set("gauss_bonnet_over_pi", i.gauss / PI);
    report.check_max("veronese_involution", inv, 1e-12);
    report.check("veronese_immersion_condition", cond, "> 0", cond > 0.0);
    write_pointwise(report, &pm, tol, "veronese_");
    report.check_max("veronese_W_12pi", (i.willmore / (12.0 * PI) - 1.0).abs(), tol.energy_rel);
    report.check_max("veronese_e_nu_minus4", (e + 4.0).abs(), tol.euler_abs);
    report.check_max("veronese_gauss_bonnet_4pi", (i.gauss / (4.0 * PI) - 1.0).abs(), tol.energy_rel);
    Ok(())
}

/// Trace-free second fundamental forms of the Veronese surface at `z = 0`,
/// in normal coordinates, together with the mirror image `x4 -> -x4`.
pub fn veronese_form_pair() -> Result<(TracefreeForm, TracefreeForm), GluingError> {
    let z = Complex64::new(0.0, 0.0);
    let cs = curvature(&jet(&VeroneseImmersion, z, JetMethod::DualNumber).expect("finite jet")).expect("regular point");
    let p11 = cs.normal_coords(&cs.a011);
    let p12 = cs.normal_coords(&cs.a012);
    let p = TracefreeForm::new(p11.to_vec(), p12.to_vec())?;
    // reflection of the surface reverses the orientation of the normal plane
    let q = TracefreeForm::new(vec![p11[0], -p11[1]], vec![p12[0], -p12[1]])?;
    Ok((p, q))
}

/// Search for a positive-pairing rotation; the verdict is confirmed on an
/// angle grid (`SO(2) x SO(2)` when `special`, a reflection in `T` allowed otherwise).
pub fn check_forms(
    p: &TracefreeForm,
    q: &TracefreeForm,
    special: bool,
    oracle_n: usize,
    report: &mut Report,
) -> Result<(), GluingError> {
    let outcome = find_positive_rotation(p, q, special)?;
    let oracle = grid_oracle(p, q, special, oracle_n)?;
    let sec = report.section("gluing");
    sec.set("k", p.k()).set("restrict_special", special).set("grid_oracle_max", oracle);
    match outcome {
        RotationOutcome::Found { s, value, near_exceptional, .. } => {
            sec.set("verdict", "Found").set("pairing", value).set("s_angle", s[(1, 0)].atan2(s[(0, 0)]));
            sec.set("near_exceptional", near_exceptional);
            report.check("positive_pairing", value, "> 0", value > 0.0);
        }
        RotationOutcome::Exceptional => {
            sec.set("verdict", "Exceptional");
            report.check_max("exceptional_oracle_max", oracle, 1e-9);
        }
    }
    Ok(())
}

/// Brute-force maximum of the pairing over rotations (codimension 2 only; `NaN` otherwise).
pub fn grid_oracle(p: &TracefreeForm, q: &TracefreeForm, special: bool, n: usize) -> Result<f64, GluingError> {
    use crate::gluing::rotation2;
    use nalgebra::DMatrix;
    if p.k() != 2 {
        return Ok(f64::NAN);
    }
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let s = rotation2(PI * i as f64 / n as f64);
        for j in 0..n {
            let t2 = rotation2(2.0 * PI * j as f64 / n as f64);
            let mut ts = vec![t2];
            if !special {
                ts.push(t2 * nalgebra::Matrix2::new(1.0, 0.0, 0.0, -1.0));
            }
            for t in ts {
                let t = DMatrix::from_fn(2, 2, |a, b| t[(a, b)]);
                best = best.max(pairing(&rotate_form(p, &s, &t)?, q)?);
            }
        }
    }
    Ok(best)
}

/// The connected-sum bound for two summands.
pub fn gluing_bound(w1: f64, w2: f64, report: &mut Report) {
    let b = predict_gluing_bound(w1, w2);
    let sec = report.section("gluing_bound");
    sec.set("W1_over_pi", w1 / PI).set("W2_over_pi", w2 / PI).set("bound", b.bound).set("display", &b.display);
    if let Some(note) = &b.note {
        sec.set("note", note);
    }
}
