//! The immersion `f: C / Gamma -> R^4 = C^2` attached to a triple
//! `(g, (phi1, phi2), (psi1, psi2))`:
//!
//! ```text
//! f = ( (phi1 conj(g) - conj(psi1)) / (1 + |g|^2),  (conj(psi1) g + phi1) / (1 + |g|^2) )
//! ```
//!
//! Where `|g| > 1` the same point is computed in the chart `u = 1/g` from
//! `phi2 = phi1/g`, `psi2 = psi1/g`:
//!
//! ```text
//! f = ( (phi2 - u conj(psi2)) / (1 + |u|^2),  (conj(psi2) + conj(u) phi2) / (1 + |u|^2) )
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::{Complex, Complex64};

use crate::divisor::{
    build_phi1, build_symmetric_g, derive_triple, klein_involution, EllipticFunctionRep, ImmersionTriple, Phi1,
    SymmetricG, ZeroPlacement,
};
use crate::elliptic::EllipticContext;
use crate::error::DivisorError;
use crate::geometry::{Surface, R4};
use crate::grid::{map_indices, Execution};
use crate::jet::{cadd, cconj, cdiv, cmul, cnorm_sqr, creal, csub, CJet, Dual2, Real};
use crate::lattice::Lattice;

pub const CHART_THRESHOLD: f64 = 1.0;

fn primary<T: Real>(g: Complex<T>, phi1: Complex<T>, psi1: Complex<T>) -> [Complex<T>; 2] {
    let d = creal(cnorm_sqr(g) + 1.0);
    let psib = cconj(psi1);
    [
        cdiv(csub(cmul(phi1, cconj(g)), psib), d),
        cdiv(cadd(cmul(psib, g), phi1), d),
    ]
}

fn pole_chart<T: Real>(u: Complex<T>, phi2: Complex<T>, psi2: Complex<T>) -> [Complex<T>; 2] {
    let d = creal(cnorm_sqr(u) + 1.0);
    let psib = cconj(psi2);
    [
        cdiv(csub(phi2, cmul(u, psib)), d),
        cdiv(cadd(psib, cmul(cconj(u), phi2)), d),
    ]
}

fn to_r4<T: Copy>(f: [Complex<T>; 2]) -> [T; 4] {
    [f[0].re, f[0].im, f[1].re, f[1].im]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    Primary,
    Pole,
}

/// Parameters of the reference construction on the rectangular torus `(1, i r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KleinParams {
    pub r: f64,
    pub poles: [Complex64; 4],
    /// Indices into `poles` of the two poles of `phi1`.
    pub phi_poles: [usize; 2],
    pub p1: Complex64,
}

impl KleinParams {
    /// The reference family member used throughout the tests, scaled to `r`.
    pub fn reference(r: f64) -> Self {
        let y = r / 8.0;
        Self {
            r,
            poles: [
                Complex64::new(0.1, y),
                Complex64::new(0.35, y),
                Complex64::new(0.6, y),
                Complex64::new(0.85, y),
            ],
            phi_poles: [0, 1],
            p1: Complex64::new(0.2, 0.3 * r),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KleinImmersion {
    pub triple: ImmersionTriple,
    pub g_recip: EllipticFunctionRep,
    pub r: f64,
    pub chart_threshold: f64,
}

/// Everything produced while building a Klein immersion.
#[derive(Clone, Debug)]
pub struct KleinConstruction {
    pub params: KleinParams,
    pub g: SymmetricG,
    pub phi1: Phi1,
    pub immersion: KleinImmersion,
}

impl KleinConstruction {
    pub fn build(params: &KleinParams) -> Result<Self, DivisorError> {
        let lattice = Lattice::rectangular(params.r).map_err(crate::error::EllipticError::from)?;
        let ctx = Arc::new(EllipticContext::new(lattice)?);
        let g = build_symmetric_g(params.poles, ctx)?;
        let [i, j] = params.phi_poles;
        if i == j || i > 3 || j > 3 {
            return Err(DivisorError::DegenerateChoice(format!("phi poles must be two distinct indices, got {i}, {j}")));
        }
        let phi1 = build_phi1(g.poles[i], g.poles[j], ZeroPlacement::Free(params.p1), &g.rep)?;
        let triple = derive_triple(&g.rep, &phi1.rep);
        let immersion = KleinImmersion::new(triple, params.r);
        Ok(Self { params: params.clone(), g, phi1, immersion })
    }
}

impl KleinImmersion {
    pub fn new(triple: ImmersionTriple, r: f64) -> Self {
        let g_recip = triple.g.recip();
        Self { triple, g_recip, r, chart_threshold: CHART_THRESHOLD }
    }

    pub fn lattice(&self) -> Lattice {
        *self.triple.g.context().lattice()
    }

    pub fn chart(&self, z: Complex64) -> Chart {
        // |g| <= 1 iff |1/g| >= 1; the reciprocal is finite at poles of g
        let u = self.g_recip.value(z);
        if u.is_finite() && u.norm() < 1.0 / self.chart_threshold {
            Chart::Pole
        } else {
            Chart::Primary
        }
    }

    pub fn evaluate_primary(&self, z: Complex64) -> [Complex64; 2] {
        let t = &self.triple;
        primary(t.g.value(z), t.phi1.value(z), t.psi1.value(z))
    }

    pub fn evaluate_pole_chart(&self, z: Complex64) -> [Complex64; 2] {
        let t = &self.triple;
        pole_chart(self.g_recip.value(z), t.phi2.value(z), t.psi2.value(z))
    }

    pub fn evaluate_f(&self, z: Complex64) -> [Complex64; 2] {
        match self.chart(z) {
            Chart::Primary => self.evaluate_primary(z),
            Chart::Pole => self.evaluate_pole_chart(z),
        }
    }

    /// `|d phi| + |d psi|` in the chart used at `z`.
    pub fn immersion_quantity(&self, z: Complex64) -> f64 {
        let t = &self.triple;
        match self.chart(z) {
            Chart::Primary => t.phi1.jet(z).d1.norm() + t.psi1.jet(z).d1.norm(),
            Chart::Pole => t.phi2.jet(z).d1.norm() + t.psi2.jet(z).d1.norm(),
        }
    }

    /// Minimum of [`Self::immersion_quantity`] over an `n x m` grid of the fundamental cell.
    pub fn immersion_condition_min(&self, n: usize, m: usize, exec: Execution) -> (f64, Complex64) {
        let r = self.r;
        let vals = map_indices(exec, n * m, |k| {
            let z = Complex64::new((k % n) as f64 / n as f64, (k / n) as f64 * r / m as f64);
            (self.immersion_quantity(z), z)
        });
        vals.into_iter()
            .fold((f64::INFINITY, Complex64::new(0.0, 0.0)), |a, b| if b.0 < a.0 { b } else { a })
    }

    /// Compass search for a local minimum of the immersion quantity, starting
    /// at `seed` with initial step `step` (typically the grid spacing).
    pub fn refine_condition_min(&self, seed: Complex64, step: f64) -> (f64, Complex64) {
        let mut z = seed;
        let mut best = self.immersion_quantity(z);
        let mut h = step;
        let dirs = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        while h > 1e-13 {
            let trial = dirs
                .iter()
                .map(|d| (self.immersion_quantity(z + d * h), z + d * h))
                .fold((f64::INFINITY, z), |a, b| if b.0 < a.0 { b } else { a });
            if trial.0 < best {
                (best, z) = trial;
            } else {
                h *= 0.5;
            }
        }
        (best, z)
    }
}

impl Surface for KleinImmersion {
    fn point(&self, z: Complex64) -> R4 {
        to_r4(self.evaluate_f(z))
    }

    fn point_near(&self, center: Complex64, z: Complex64) -> R4 {
        to_r4(match self.chart(center) {
            Chart::Primary => self.evaluate_primary(z),
            Chart::Pole => self.evaluate_pole_chart(z),
        })
    }

    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        let t = &self.triple;
        let lift = |f: &EllipticFunctionRep| f.jet(z).to_xy();
        let f = match self.chart(z) {
            Chart::Primary => primary(lift(&t.g), lift(&t.phi1), lift(&t.psi1)),
            Chart::Pole => pole_chart(lift(&self.g_recip), lift(&t.phi2), lift(&t.psi2)),
        };
        to_r4(f)
    }
}

/// `f(z) = (conj(z)(|z|^4 - 1), z^2 (|z|^2 + 1)) / (|z|^6 + 1)`, invariant under `z -> -1/conj(z)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct VeroneseImmersion;

impl VeroneseImmersion {
    fn eval<T: Real>(z: Complex<T>) -> [Complex<T>; 2] {
        let q = cnorm_sqr(z);
        let d = creal(q * q * q + 1.0);
        [
            cdiv(cmul(cconj(z), creal(q * q - 1.0)), d),
            cdiv(cmul(cmul(z, z), creal(q + 1.0)), d),
        ]
    }

    /// `None` stands for the point at infinity.
    pub fn evaluate(z: Option<Complex64>) -> [Complex64; 2] {
        match z {
            Some(z) => Self::eval(z),
            None => Self::eval(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn involution(z: Complex64) -> Complex64 {
        -z.conj().inv()
    }

    /// The same immersion through the triple `g = z^3, phi1 = z^2, psi1 = z`.
    pub fn evaluate_from_triple(z: Complex64) -> [Complex64; 2] {
        primary(z * z * z, z * z, z)
    }

    /// `|d phi1| + |d psi1| = |2z| + 1`, minimized over a polar grid of the unit disk.
    pub fn immersion_condition_min(n: usize) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for k in 0..n {
                let z = Complex64::from_polar(i as f64 / n as f64, std::f64::consts::TAU * k as f64 / n as f64);
                let (phi, psi) = (CJet::variable(z) * CJet::variable(z), CJet::variable(z));
                best = best.min(phi.d1.norm() + psi.d1.norm());
            }
        }
        best
    }
}

impl Surface for VeroneseImmersion {
    fn point(&self, z: Complex64) -> R4 {
        to_r4(Self::eval(z))
    }
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        to_r4(Self::eval(Complex::new(Dual2::x(z.re), Dual2::y(z.im))))
    }
}

/// Orthogonal projection to the first three coordinates (fourth set to zero).
pub struct Projected<S>(pub S);

impl<S: Surface> Surface for Projected<S> {
    fn point(&self, z: Complex64) -> R4 {
        let p = self.0.point(z);
        [p[0], p[1], p[2], 0.0]
    }
    fn point_near(&self, center: Complex64, z: Complex64) -> R4 {
        let p = self.0.point_near(center, z);
        [p[0], p[1], p[2], 0.0]
    }
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        let p = self.0.dual_jet(z);
        [p[0], p[1], p[2], Dual2::cst(0.0)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub n: usize,
    pub delta: f64,
    /// Spatial tolerance; `None` selects half the minimum grid-neighbour spacing.
    pub eps: Option<f64>,
    pub max_reported: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { n: 200, delta: 0.05, eps: None, max_reported: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    pub samples: usize,
    pub eps: f64,
    /// Total number of flagged pairs (each unordered pair once).
    pub flagged: usize,
    /// Up to `max_reported` witnesses `(z, w, |f(z) - f(w)|)`.
    pub pairs: Vec<(Complex64, Complex64, f64)>,
}

impl ScanReport {
    pub fn is_empty(&self) -> bool {
        self.flagged == 0
    }
}

/// Sample `f` on an `n x n` grid of `(1, i r)` and report near-coincident,
/// parameter-separated pairs, ignoring pairs related by `involution`.
pub fn self_intersection_scan<S: Surface>(
    surface: &S,
    lattice: &Lattice,
    involution: Option<&(dyn Fn(Complex64) -> Complex64 + Sync)>,
    opts: ScanOptions,
    exec: Execution,
) -> ScanReport {
    let n = opts.n;
    let (w1, w2) = (lattice.omega1(), lattice.omega2());
    let param = |k: usize| w1 * ((k % n) as f64 / n as f64) + w2 * ((k / n) as f64 / n as f64);
    let pts: Vec<R4> = map_indices(exec, n * n, |k| surface.point(param(k)));
    let dist = |a: &R4, b: &R4| ((0..4).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>()).sqrt();
    let eps = opts.eps.unwrap_or_else(|| {
        let spacing = map_indices(exec, n * n, |k| {
            let (i, j) = (k % n, k / n);
            let right = (i + 1) % n + j * n;
            let up = i + ((j + 1) % n) * n;
            dist(&pts[k], &pts[right]).min(dist(&pts[k], &pts[up]))
        });
        0.5 * spacing.into_iter().fold(f64::INFINITY, f64::min)
    });
    let cell = |p: &R4| p.map(|x| (x / eps).floor() as i64);
    let mut buckets: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    for (k, p) in pts.iter().enumerate() {
        buckets.entry(cell(p)).or_default().push(k);
    }
    let hits: Vec<Vec<(usize, usize, f64)>> = map_indices(exec, n * n, |k| {
        let c = cell(&pts[k]);
        let z = param(k);
        let iz = involution.map(|i| i(z));
        let mut out = Vec::new();
        for off in 0..81usize {
            let mut key = c;
            let mut o = off;
            for slot in key.iter_mut() {
                *slot += (o % 3) as i64 - 1;
                o /= 3;
            }
            let Some(list) = buckets.get(&key) else { continue };
            for &q in list {
                if q <= k {
                    continue;
                }
                let d = dist(&pts[k], &pts[q]);
                if d >= eps {
                    continue;
                }
                let w = param(q);
                if lattice.torus_distance(z, w) <= opts.delta {
                    continue;
                }
                if iz.is_some_and(|iz| lattice.torus_distance(iz, w) <= opts.delta) {
                    continue;
                }
                out.push((k, q, d));
            }
        }
        out
    });
    let all: Vec<(usize, usize, f64)> = hits.into_iter().flatten().collect();
    ScanReport {
        samples: n * n,
        eps,
        flagged: all.len(),
        pairs: all.iter().take(opts.max_reported).map(|&(k, q, d)| (param(k), param(q), d)).collect(),
    }
}

impl KleinImmersion {
    pub fn self_intersection_scan(&self, opts: ScanOptions, exec: Execution) -> ScanReport {
        self_intersection_scan(self, &self.lattice(), Some(&klein_involution), opts, exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{curvature, jet, wintgen_twistor_residuals, JetMethod};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> KleinImmersion {
        KleinConstruction::build(&KleinParams::reference(1.0)).unwrap().immersion
    }

    fn dist(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
        ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
    }

    #[test]
    fn charts_agree_on_overlap() {
        let imm = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut tested = 0;
        while tested < 100 {
            let z = c(rng.gen(), rng.gen());
            let g = imm.triple.g.value(z).norm();
            if !(2.0..=10.0).contains(&g) {
                continue;
            }
            assert!(dist(imm.evaluate_primary(z), imm.evaluate_pole_chart(z)) < 1e-9);
            tested += 1;
        }
    }

    #[test]
    fn invariant_under_the_involution_and_periodic() {
        let imm = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let z = c(rng.gen(), rng.gen());
            let f = imm.evaluate_f(z);
            assert!(dist(imm.evaluate_f(klein_involution(z)), f) < 1e-10);
            assert!(dist(imm.evaluate_f(z + 1.0), f) < 1e-9);
            assert!(dist(imm.evaluate_f(z + c(0.0, 1.0)), f) < 1e-9);
        }
    }

    #[test]
    fn finite_at_poles_of_g() {
        let imm = reference();
        for b in KleinParams::reference(1.0).poles {
            let at = imm.evaluate_f(b);
            assert!(at[0].is_finite() && at[1].is_finite());
            for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                let h = 1e-8;
                assert!(dist(imm.evaluate_f(b + dir * h), imm.evaluate_f(b - dir * h)) < 1e-7);
            }
        }
    }

    #[test]
    fn no_branch_points_on_grid() {
        let (min, _) = reference().immersion_condition_min(128, 128, Execution::default());
        assert!(min > 0.0);
    }

    #[test]
    fn broken_triple_is_detected() {
        let imm = reference();
        let g = imm.triple.g.clone();
        let broken = KleinImmersion::new(derive_triple(&g, &g), 1.0);
        let (min, at) = broken.immersion_condition_min(128, 128, Execution::default());
        let (refined, _) = broken.refine_condition_min(at, 1.0 / 128.0);
        assert!(refined < 1e-8 && refined <= min, "refined {refined} from {min} at {at}");
        let (good, at) = imm.immersion_condition_min(128, 128, Execution::default());
        let (good_refined, _) = imm.refine_condition_min(at, 1.0 / 128.0);
        assert!(good_refined > 1e-3 * good, "{good_refined} vs {good}");
    }

    #[test]
    fn veronese_closed_form_and_symmetry() {
        assert_eq!(VeroneseImmersion::evaluate(Some(c(0.0, 0.0))), [c(0.0, 0.0); 2]);
        assert_eq!(VeroneseImmersion::evaluate(Some(c(1.0, 0.0))), [c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(VeroneseImmersion::evaluate(None), [c(0.0, 0.0); 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let f = VeroneseImmersion::evaluate(Some(z));
            assert!(dist(VeroneseImmersion::evaluate(Some(VeroneseImmersion::involution(z))), f) < 1e-12);
            assert!(dist(VeroneseImmersion::evaluate_from_triple(z), f) < 1e-12);
        }
        assert!(VeroneseImmersion::immersion_condition_min(64) > 0.0);
    }

    #[test]
    fn veronese_is_wintgen_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let z = c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let cs = curvature(&jet(&VeroneseImmersion, z, JetMethod::DualNumber).unwrap()).unwrap();
            let w = wintgen_twistor_residuals(&cs).unwrap();
            assert!(w.r1 < 1e-6 && w.r2 < 1e-6, "{w:?}");
        }
    }

    #[test]
    fn dual_jet_matches_finite_differences() {
        let imm = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let z = c(rng.gen(), rng.gen());
            let a = jet(&imm, z, JetMethod::DualNumber).unwrap();
            let b = jet(&imm, z, JetMethod::FiniteDifference(1e-5)).unwrap();
            assert!(a.relative_deviation(&b) < 1e-6, "{}", a.relative_deviation(&b));
        }
    }
}
