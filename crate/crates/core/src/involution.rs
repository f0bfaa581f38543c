//! Antiholomorphic involutions `z -> a conj(z) + b` of a torus `C / Gamma`.
//!
//! Decisions are made in canonical coordinates: with `Gamma = s (Z + tau Z)`
//! the map `w -> z / s` conjugates the involution to
//! `w -> a (conj(s)/s) conj(w) + b/s` on the canonical lattice.

use num_complex::Complex64;

use crate::error::InvolutionError;
use crate::lattice::{maps_onto, reduce_lattice, CanonicalBasis, Lattice};

pub const VALIDATION_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Involution {
    pub a: Complex64,
    pub b: Complex64,
}

impl Involution {
    pub fn new(a: Complex64, b: Complex64) -> Self {
        Self { a, b }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.a * z.conj() + self.b
    }
}

/// `z -> alpha z + delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoebiusMap {
    pub alpha: Complex64,
    pub delta: Complex64,
}

impl MoebiusMap {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.alpha * z + self.delta
    }

    pub fn inverse(&self) -> Self {
        let alpha = self.alpha.inv();
        Self { alpha, delta: -self.delta * alpha }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub unimodular: bool,
    pub preserves_lattice: bool,
    pub translation_in_lattice: bool,
    pub diagnostics: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.unimodular && self.preserves_lattice && self.translation_in_lattice
    }
}

/// Checks `|a| = 1`, `a conj(Gamma) = Gamma` and `a conj(b) + b in Gamma`.
pub fn involution_validate(a: Complex64, b: Complex64, lattice: &Lattice) -> ValidationReport {
    let mut diagnostics = Vec::new();
    let unimodular = a.is_finite() && (a.norm() - 1.0).abs() <= VALIDATION_TOL;
    if !unimodular {
        diagnostics.push(format!("|a| = {} differs from 1", a.norm()));
    }
    let preserves_lattice = unimodular && maps_onto(lattice, |z| a * z.conj());
    if unimodular && !preserves_lattice {
        diagnostics.push(format!("a * conj(Gamma) != Gamma for a = {a}"));
    }
    let t = a * b.conj() + b;
    let translation_in_lattice = b.is_finite() && lattice.vector_of(t, VALIDATION_TOL).is_some();
    if !translation_in_lattice {
        diagnostics.push(format!("a * conj(b) + b = {t} is not a lattice point"));
    }
    ValidationReport { unimodular, preserves_lattice, translation_in_lattice, diagnostics }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FixpointStatus {
    FixpointFree,
    FixpointSet { witness: Complex64, description: String },
}

impl FixpointStatus {
    pub fn has_fixpoints(&self) -> bool {
        matches!(self, FixpointStatus::FixpointSet { .. })
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() <= ROOT_TOL
}

fn near(u: Complex64, v: Complex64) -> bool {
    (u - v).norm() <= ROOT_TOL
}

/// Canonical-coordinate data for an involution.
struct Canonical {
    basis: CanonicalBasis,
    a: Complex64,
    b: Complex64,
}

fn to_canonical(inv: &Involution, lattice: &Lattice) -> Canonical {
    let basis = reduce_lattice(lattice);
    let s = basis.scale;
    Canonical { basis, a: inv.a * s.conj() / s, b: inv.b / s }
}

/// Fixpoint witness in canonical coordinates, or `None` when fixpoint-free.
fn canonical_fixpoint(tau: Complex64, a: Complex64, b: Complex64) -> Result<Option<(Complex64, String)>, InvolutionError> {
    let one = Complex64::new(1.0, 0.0);
    if near(a, one) {
        // fixpoint iff Re b = -(n + m Re tau); Re tau is 0 or 1/2 on a real lattice
        for m in 0..2 {
            let n = -b.re - m as f64 * tau.re;
            if is_integer(n) {
                let gamma = n.round() + tau * m as f64;
                return Ok(Some(((b + gamma) * 0.5, "a = 1: Re(b) lies in the real projection of the lattice".into())));
            }
        }
        return Ok(None);
    }
    if near(a, -one) {
        let m = b.im / tau.im;
        if is_integer(m) {
            let gamma = -tau * m.round();
            return Ok(Some(((b + gamma) * 0.5, "a = -1: Im(b) is an integer multiple of Im(tau)".into())));
        }
        return Ok(None);
    }
    let unit_tau = (tau.norm() - 1.0).abs() <= ROOT_TOL;
    if unit_tau && (near(a, tau) || near(a, -tau)) {
        // a = +-tau always has a fixpoint: find gamma with (b + gamma) conj(sqrt a) imaginary
        let half = Complex64::from_polar(1.0, -a.arg() / 2.0);
        let mut best: Option<(f64, Complex64)> = None;
        for n in -3..=3 {
            for m in -3..=3 {
                let gamma = Complex64::new(n as f64, 0.0) + tau * m as f64;
                let res = ((b + gamma) * half).re.abs();
                if best.is_none_or(|(r, _)| res < r) {
                    best = Some((res, gamma));
                }
            }
        }
        let (_, gamma) = best.expect("search box is non-empty");
        return Ok(Some(((b + gamma) * 0.5, "a = +-tau on |tau| = 1: always has a fixpoint".into())));
    }
    let hexagonal = near(tau, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3));
    if hexagonal {
        for l in [2i32, 4, 5] {
            if near(a, tau.powi(l)) {
                // conjugate by w -> alpha w with conj(alpha) = tau^k: a becomes tau^(l + 2k)
                let k = if l == 5 { -2 } else { (6 - l) / 2 };
                let alpha = tau.powi(k).conj();
                let a_hat = a * alpha.conj() / alpha;
                let b_hat = b / alpha;
                let inner = canonical_fixpoint(tau, a_hat, b_hat)?
                    .expect("every involution of the hexagonal torus has a fixpoint");
                return Ok(Some((alpha * inner.0, format!("hexagonal a = tau^{l}: reduced by tau^{k}; {}", inner.1))));
            }
        }
    }
    Err(InvolutionError::UnsupportedA(a))
}

/// Decide whether `a conj(z) + b = z` has a solution modulo the lattice.
pub fn involution_fixpoints(inv: &Involution, lattice: &Lattice) -> Result<FixpointStatus, InvolutionError> {
    let report = involution_validate(inv.a, inv.b, lattice);
    if !report.is_valid() {
        return Err(InvolutionError::Invalid(report.diagnostics.join("; ")));
    }
    let c = to_canonical(inv, lattice);
    Ok(match canonical_fixpoint(c.basis.tau, c.a, c.b)? {
        None => FixpointStatus::FixpointFree,
        Some((w, description)) => FixpointStatus::FixpointSet { witness: w * c.basis.scale, description },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalFormKind {
    /// `z -> conj(z) + 1/2`
    TranslationType,
    /// `z -> -conj(z) + tau/2`
    GlideType,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvolutionNormalForm {
    pub kind: NormalFormKind,
    /// Canonical, purely imaginary `tau`.
    pub tau: Complex64,
    /// Sends the normal-form torus `C / (Z + tau Z)` to the original one.
    pub conjugating_map: MoebiusMap,
}

impl InvolutionNormalForm {
    pub fn apply(&self, z: Complex64) -> Complex64 {
        match self.kind {
            NormalFormKind::TranslationType => z.conj() + 0.5,
            NormalFormKind::GlideType => -z.conj() + self.tau * 0.5,
        }
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(Complex64::new(1.0, 0.0), self.tau).expect("canonical tau is non-real")
    }
}

/// Conjugate a fixpoint-free involution to `conj(z) + 1/2` or `-conj(z) + tau/2`.
pub fn involution_normalize(inv: &Involution, lattice: &Lattice) -> Result<InvolutionNormalForm, InvolutionError> {
    let report = involution_validate(inv.a, inv.b, lattice);
    if !report.is_valid() {
        return Err(InvolutionError::Invalid(report.diagnostics.join("; ")));
    }
    let c = to_canonical(inv, lattice);
    if !c.basis.is_rectangular() {
        return Err(InvolutionError::NonRectangularLattice(c.basis.tau));
    }
    if let Some((w, _)) = canonical_fixpoint(c.basis.tau, c.a, c.b)? {
        return Err(InvolutionError::HasFixpoints(w * c.basis.scale));
    }
    let tau = Complex64::new(0.0, c.basis.tau.im);
    // translation w -> w + delta turns a conj(w) + b into a conj(w) + b + a conj(delta) - delta
    let (kind, delta) = if c.a.re > 0.0 {
        (NormalFormKind::TranslationType, Complex64::new(0.0, c.b.im / 2.0))
    } else {
        (NormalFormKind::GlideType, Complex64::new(c.b.re / 2.0, 0.0))
    };
    let s = c.basis.scale;
    Ok(InvolutionNormalForm { kind, tau, conjugating_map: MoebiusMap { alpha: s, delta: s * delta } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rect() -> Lattice {
        Lattice::rectangular(1.5).unwrap()
    }

    /// Independent check: a conj(z) + b = z + gamma is solvable iff
    /// (b + gamma) exp(-i arg(a)/2) is imaginary for some lattice point gamma.
    fn brute_force_fixpoint(inv: &Involution, lattice: &Lattice) -> bool {
        let half = Complex64::from_polar(1.0, -inv.a.arg() / 2.0);
        (-6..=6).any(|m| {
            (-6..=6).any(|n| {
                let gamma = lattice.omega1() * m as f64 + lattice.omega2() * n as f64;
                ((inv.b + gamma) * half).re.abs() < 1e-9
            })
        })
    }

    fn assert_witness(inv: &Involution, lattice: &Lattice, status: &FixpointStatus) {
        if let FixpointStatus::FixpointSet { witness, .. } = status {
            assert!(lattice.vector_of(inv.apply(*witness) - witness, 1e-10).is_some());
        }
    }

    #[test]
    fn validation_examples() {
        assert!(involution_validate(c(1.0, 0.0), c(0.5, 0.0), &rect()).is_valid());
        let r = involution_validate(c(1.0, 0.0), c(0.25, 0.0), &rect());
        assert!(!r.is_valid() && !r.translation_in_lattice && r.preserves_lattice);
        let r = involution_validate(c(0.0, 1.0), c(0.0, 0.0), &rect());
        assert!(!r.preserves_lattice);
        assert!(!involution_validate(c(2.0, 0.0), c(0.0, 0.0), &rect()).unimodular);
    }

    #[test]
    fn fixpoint_examples() {
        let l = rect();
        let f = |a, b| involution_fixpoints(&Involution::new(a, b), &l).unwrap();
        assert_eq!(f(c(1.0, 0.0), c(0.5, 0.0)), FixpointStatus::FixpointFree);
        match f(c(1.0, 0.0), c(0.0, 0.0)) {
            FixpointStatus::FixpointSet { witness, .. } => assert!(witness.norm() < 1e-12),
            s => panic!("{s:?}"),
        }
        assert_eq!(f(c(-1.0, 0.0), c(0.0, 0.75)), FixpointStatus::FixpointFree);
    }

    #[test]
    fn normal_form_examples() {
        let l = rect();
        let n = involution_normalize(&Involution::new(c(1.0, 0.0), c(0.5, 0.3)), &l).unwrap();
        assert_eq!(n.kind, NormalFormKind::TranslationType);
        assert!((n.conjugating_map.delta - c(0.0, 0.15)).norm() < 1e-15);
        let n = involution_normalize(&Involution::new(c(-1.0, 0.0), c(0.2, 0.75)), &l).unwrap();
        assert_eq!(n.kind, NormalFormKind::GlideType);
        let e = involution_normalize(&Involution::new(c(1.0, 0.0), c(0.0, 0.0)), &l);
        assert!(matches!(e, Err(InvolutionError::HasFixpoints(_))));
    }

    #[test]
    fn hexagonal_involutions_all_have_fixpoints() {
        let tau = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let l = Lattice::new(c(1.0, 0.0), tau).unwrap();
        let mut checked = 0;
        for k in 0..6 {
            let a = tau.powi(k);
            for m in -2..=2 {
                for n in -2..=2 {
                    // b = t/2 with t in the lattice and a conj(t) = t keeps a conj(b) + b = t
                    let t = c(m as f64, 0.0) + tau * n as f64;
                    let b = t * 0.5;
                    let inv = Involution::new(a, b);
                    if !involution_validate(a, b, &l).is_valid() {
                        continue;
                    }
                    let s = involution_fixpoints(&inv, &l).unwrap();
                    assert!(s.has_fixpoints(), "a = tau^{k}, b = {b}");
                    assert_witness(&inv, &l, &s);
                    assert!(matches!(involution_normalize(&inv, &l), Err(InvolutionError::NonRectangularLattice(_))));
                    checked += 1;
                }
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn square_lattice_rotations_have_fixpoints() {
        let l = Lattice::rectangular(1.0).unwrap();
        for a in [c(0.0, 1.0), c(0.0, -1.0)] {
            for b in [c(0.0, 0.0), c(0.5, 0.5), c(1.0, -1.0), c(0.3, 0.3)] {
                let inv = Involution::new(a, b);
                if !involution_validate(a, b, &l).is_valid() {
                    continue;
                }
                let s = involution_fixpoints(&inv, &l).unwrap();
                assert!(s.has_fixpoints());
                assert_witness(&inv, &l, &s);
            }
        }
    }

    #[test]
    fn random_rectangular_lattices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let r = rng.gen_range(1.0..3.0);
            let s = Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU));
            // a random unimodular change of generators
            let (p, q) = (rng.gen_range(-2..=2) as f64, 1.0);
            let w1 = s;
            let w2 = s * (c(p, 0.0) + c(0.0, r) * q);
            let l = Lattice::new(w1, w2).unwrap();
            let glide = rng.gen_bool(0.5);
            let (a_can, b_can) = if glide {
                let k = rng.gen_range(-2..=2) as f64 + 0.5;
                (c(-1.0, 0.0), c(rng.gen_range(0.0..1.0), k * r))
            } else {
                (c(1.0, 0.0), c(0.5 + rng.gen_range(-2..=2) as f64, rng.gen_range(0.0..r)))
            };
            let inv = Involution::new(a_can * s / s.conj(), b_can * s);
            assert!(involution_validate(inv.a, inv.b, &l).is_valid());
            let status = involution_fixpoints(&inv, &l).unwrap();
            assert!(!status.has_fixpoints());
            assert!(!brute_force_fixpoint(&inv, &l));
            let nf = involution_normalize(&inv, &l).unwrap();
            assert_eq!(nf.kind == NormalFormKind::GlideType, glide);
            let phi = nf.conjugating_map;
            let canon = nf.lattice();
            for _ in 0..20 {
                let z = c(rng.gen(), rng.gen::<f64>() * r);
                let lhs = phi.inverse().apply(inv.apply(phi.apply(z)));
                assert!(canon.vector_of(lhs - nf.apply(z), 1e-10).is_some(), "{lhs} vs {}", nf.apply(z));
            }
        }
    }

    #[test]
    fn fixpoint_decision_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let lattices = [
            Lattice::rectangular(1.5).unwrap(),
            Lattice::new(c(1.0, 0.0), c(0.5, 1.7)).unwrap(),
            Lattice::rectangular(1.0).unwrap(),
        ];
        for l in &lattices {
            for _ in 0..200 {
                let a = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)][rng.gen_range(0..4)];
                let half = |v: f64| (v * 4.0).round() / 4.0;
                let b = l.omega1() * half(rng.gen_range(-1.0..1.0)) + l.omega2() * half(rng.gen_range(-1.0..1.0));
                let inv = Involution::new(a, b);
                if !involution_validate(a, b, l).is_valid() {
                    continue;
                }
                let s = involution_fixpoints(&inv, l).unwrap();
                assert_eq!(s.has_fixpoints(), brute_force_fixpoint(&inv, l), "a={a} b={b}");
                assert_witness(&inv, l, &s);
            }
        }
    }
}
