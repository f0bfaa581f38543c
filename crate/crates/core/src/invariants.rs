//! Global invariants by quadrature: Willmore energy, Euler normal number,
//! total Gauss curvature, plus cross-identities and transformation checks.
//!
//! Torus integrals use the periodic trapezoid rule on `[0,1] x [0,r]`.
//! Sphere integrals use a polar grid on the closed unit disk (trapezoid in
//! the radius with half weight on the rim) and are doubled, which is exact
//! for surfaces with `f(-1/conj(z)) = f(z)` or with a reflection symmetry
//! exchanging the disk and its exterior.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{GeometryError, InvariantError};
use crate::geometry::{curvature, jet, JetMethod, Surface, R4};
use crate::grid::{map_indices, pairwise_sum, Execution};
use crate::jet::{Dual2, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// Fundamental cell of the lattice `(1, i r)`.
    Torus { r: f64 },
    /// Unit disk, doubled.
    Disk,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub n: usize,
    pub m: usize,
    pub domain: Domain,
    /// Relative reporting tolerance; doubling may change values by at most 10x this.
    pub tolerance: f64,
    pub execution: Execution,
}

impl QuadratureSpec {
    pub fn torus(r: f64, n: usize) -> Self {
        Self { n, m: n, domain: Domain::Torus { r }, tolerance: 1e-3, execution: Execution::default() }
    }

    pub fn disk(n: usize) -> Self {
        Self { n, m: n, domain: Domain::Disk, tolerance: 1e-3, execution: Execution::default() }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn halved(&self) -> Self {
        Self { n: self.n / 2, m: self.m / 2, ..*self }
    }

    /// Nodes and weights, in a fixed order.
    fn nodes(&self) -> Vec<(Complex64, f64)> {
        let (n, m) = (self.n, self.m);
        match self.domain {
            Domain::Torus { r } => {
                let w = r / (n * m) as f64;
                (0..n * m)
                    .map(|k| (Complex64::new((k % n) as f64 / n as f64, r * (k / n) as f64 / m as f64), w))
                    .collect()
            }
            Domain::Disk => {
                let mut out = Vec::with_capacity(n * m);
                // the origin has zero weight in polar coordinates
                for i in 1..=n {
                    let rho = i as f64 / n as f64;
                    let wr = if i == n { 0.5 } else { 1.0 } / n as f64;
                    for k in 0..m {
                        let z = Complex64::from_polar(rho, TAU * k as f64 / m as f64);
                        out.push((z, 2.0 * rho * wr * TAU / m as f64));
                    }
                }
                out
            }
        }
    }
}

/// Raw integrals over the (doubled) domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrals {
    pub area: f64,
    /// `(1/4) int |H|^2`
    pub willmore: f64,
    /// `int K^perp`
    pub kperp: f64,
    /// `int K`
    pub gauss: f64,
}

pub fn integrate<S: Surface + ?Sized>(s: &S, spec: &QuadratureSpec) -> Result<Integrals, InvariantError> {
    if spec.n < 16 || spec.m < 16 {
        return Err(InvariantError::GridTooSmall);
    }
    let nodes = spec.nodes();
    let samples: Vec<Result<[f64; 4], GeometryError>> = map_indices(spec.execution, nodes.len(), |k| {
        let (z, w) = nodes[k];
        let cs = curvature(&jet(s, z, JetMethod::DualNumber)?)?;
        let da = cs.conf_factor * w;
        Ok([da, 0.25 * cs.mean_curvature_sq() * da, cs.kperp * da, cs.k * da])
    });
    let mut cols = [Vec::with_capacity(nodes.len()), Vec::new(), Vec::new(), Vec::new()];
    for c in cols.iter_mut().skip(1) {
        c.reserve(nodes.len());
    }
    for s in samples {
        let s = s?;
        for (c, v) in cols.iter_mut().zip(s) {
            c.push(v);
        }
    }
    Ok(Integrals {
        area: pairwise_sum(&cols[0]),
        willmore: pairwise_sum(&cols[1]),
        kperp: pairwise_sum(&cols[2]),
        gauss: pairwise_sum(&cols[3]),
    })
}

/// Integrals on `spec` and on the half-resolution grid, with a convergence check
/// on the Willmore energy.
pub fn integrate_checked<S: Surface + ?Sized>(s: &S, spec: &QuadratureSpec) -> Result<(Integrals, Integrals), InvariantError> {
    let fine = integrate(s, spec)?;
    let coarse = integrate(s, &spec.halved()).or_else(|e| match e {
        InvariantError::GridTooSmall => Ok(fine),
        e => Err(e),
    })?;
    let change = (fine.willmore - coarse.willmore).abs() / fine.willmore.abs().max(1e-300);
    let allowed = 10.0 * spec.tolerance;
    if change > allowed {
        return Err(InvariantError::QuadratureNotConverged { change, allowed });
    }
    Ok((fine, coarse))
}

pub fn willmore_energy<S: Surface + ?Sized>(s: &S, spec: &QuadratureSpec) -> Result<f64, InvariantError> {
    Ok(integrate_checked(s, spec)?.0.willmore)
}

/// `(1/2 pi) int K^perp` and its nearest integer.
pub fn euler_normal_number<S: Surface + ?Sized>(s: &S, spec: &QuadratureSpec) -> Result<(f64, i64), InvariantError> {
    let raw = integrate(s, spec)?.kperp / TAU;
    rounded(raw)
}

fn rounded(raw: f64) -> Result<(f64, i64), InvariantError> {
    if (raw - raw.round()).abs() >= 1e-2 || !raw.is_finite() {
        return Err(InvariantError::NotNearInteger(raw));
    }
    Ok((raw, raw.round() as i64))
}

pub fn gauss_bonnet<S: Surface + ?Sized>(s: &S, spec: &QuadratureSpec) -> Result<f64, InvariantError> {
    Ok(integrate_checked(s, spec)?.0.gauss)
}

/// Relative errors at `spec` and at the doubled grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    pub coarse_error: f64,
    pub fine_error: f64,
    /// `coarse_error / fine_error`, with both floored at [`Convergence::SATURATION`].
    pub factor: f64,
}

impl Convergence {
    /// Below this relative error the quadrature has reached rounding level
    /// and further doubling cannot show a reduction.
    pub const SATURATION: f64 = 1e-10;

    pub fn saturated(&self) -> bool {
        self.coarse_error < Self::SATURATION
    }
}

/// Observed error reduction in W when doubling the grid, against a reference value.
pub fn convergence_factor<S: Surface + ?Sized>(s: &S, spec: &QuadratureSpec, exact: f64) -> Result<Convergence, InvariantError> {
    let coarse = integrate(s, spec)?.willmore;
    let fine = integrate(s, &QuadratureSpec { n: spec.n * 2, m: spec.m * 2, ..*spec })?.willmore;
    let coarse_error = (coarse - exact).abs() / exact.abs();
    let fine_error = (fine - exact).abs() / exact.abs();
    let floor = Convergence::SATURATION;
    Ok(Convergence { coarse_error, fine_error, factor: coarse_error.max(floor) / fine_error.max(floor) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantReport {
    pub w_cover: f64,
    pub w_quotient: f64,
    pub e_nu_cover_raw: f64,
    pub e_nu_cover: i64,
    pub e_nu_quotient: i64,
    pub gauss_bonnet: f64,
    pub chi: i64,
    pub degree_g: u32,
    pub area: f64,
    /// Relative change of W between the half and full grids.
    pub w_grid_change: f64,
    pub identity_residuals: BTreeMap<String, f64>,
    pub wintgen_bound_holds: bool,
}

/// W, e(nu), int K and the identities `W = 4 pi deg g`, `W = 2 pi (chi - e)`.
pub fn consistency_report<S: Surface + ?Sized>(
    s: &S,
    spec: &QuadratureSpec,
    degree_g: u32,
    chi: i64,
) -> Result<InvariantReport, InvariantError> {
    let (fine, coarse) = integrate_checked(s, spec)?;
    let w = fine.willmore;
    let (raw, e) = rounded(fine.kperp / TAU)?;
    let mut res = BTreeMap::new();
    res.insert("W_minus_4pi_deg_g".to_string(), (w - 4.0 * PI * degree_g as f64).abs() / w);
    res.insert("W_minus_2pi_chi_minus_e".to_string(), (w - TAU * (chi as f64 - raw)).abs() / w);
    res.insert("e_nu_integrality".to_string(), (raw - raw.round()).abs());
    res.insert("gauss_bonnet_minus_2pi_chi".to_string(), (fine.gauss - TAU * chi as f64).abs());
    let bound = TAU * (chi as f64 + raw.abs());
    Ok(InvariantReport {
        w_cover: w,
        w_quotient: w / 2.0,
        e_nu_cover_raw: raw,
        e_nu_cover: e,
        e_nu_quotient: e / 2,
        gauss_bonnet: fine.gauss,
        chi,
        degree_g,
        area: fine.area,
        w_grid_change: (fine.willmore - coarse.willmore).abs() / w,
        identity_residuals: res,
        wintgen_bound_holds: w >= bound - spec.tolerance * w,
    })
}

/// Conformal transformations of R^4 applied after the immersion.
#[derive(Clone, Debug, PartialEq)]
pub enum AmbientMap {
    /// `x -> scale * Q x + t` with `Q` orthogonal.
    Similarity { q: Matrix4<f64>, scale: f64, translation: R4 },
    /// Inversion in the sphere of radius `radius` about `center`.
    Inversion { center: R4, radius: f64 },
    /// Negate one coordinate.
    Reflection { axis: usize },
}

impl AmbientMap {
    fn apply<T: Real>(&self, x: [T; 4]) -> [T; 4] {
        match self {
            AmbientMap::Similarity { q, scale, translation } => {
                let mut out = [T::cst(0.0); 4];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = T::cst(translation[i]);
                    for (k, xk) in x.iter().enumerate() {
                        acc += *xk * (q[(i, k)] * scale);
                    }
                    *o = acc;
                }
                out
            }
            AmbientMap::Inversion { center, radius } => {
                let d: Vec<T> = (0..4).map(|i| x[i] - center[i]).collect();
                let q = d.iter().fold(T::cst(0.0), |a, v| a + *v * *v);
                let k = T::cst(radius * radius) / q;
                [d[0] * k + center[0], d[1] * k + center[1], d[2] * k + center[2], d[3] * k + center[3]]
            }
            AmbientMap::Reflection { axis } => {
                let mut out = x;
                out[*axis] = -out[*axis];
                out
            }
        }
    }

    /// Whether the map preserves the orientation of R^4.
    pub fn preserves_orientation(&self) -> bool {
        match self {
            AmbientMap::Similarity { q, .. } => q.determinant() > 0.0,
            AmbientMap::Inversion { .. } | AmbientMap::Reflection { .. } => false,
        }
    }

    pub fn name(&self) -> String {
        match self {
            AmbientMap::Similarity { scale, q, .. } => {
                format!("similarity(scale={scale:.6}, det={:+.0})", q.determinant())
            }
            AmbientMap::Inversion { center, radius } => format!(
                "inversion(center=[{:.4},{:.4},{:.4},{:.4}], radius={radius:.4})",
                center[0], center[1], center[2], center[3]
            ),
            AmbientMap::Reflection { axis } => format!("reflection(axis={axis})"),
        }
    }

    /// Random orientation-preserving similarity.
    pub fn random_similarity<R: Rng>(rng: &mut R) -> Self {
        Self::Similarity {
            q: random_rotation(rng),
            scale: rng.gen_range(0.3..3.0),
            translation: [0.0; 4].map(|_: f64| rng.gen_range(-2.0..2.0)),
        }
    }
}

/// Haar-distributed element of SO(4) via QR of a Gaussian-like matrix.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let a = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0f64) + rng.gen_range(-1.0..1.0f64));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..4 {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut q = Matrix4::from_fn(|i, j| q[(i, j)]);
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// `map o surface`.
pub struct Transformed<'a, S: ?Sized> {
    pub surface: &'a S,
    pub map: AmbientMap,
}

impl<S: Surface + ?Sized> Surface for Transformed<'_, S> {
    fn point(&self, z: Complex64) -> R4 {
        self.map.apply(self.surface.point(z))
    }
    fn point_near(&self, center: Complex64, z: Complex64) -> R4 {
        self.map.apply(self.surface.point_near(center, z))
    }
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        self.map.apply(self.surface.dual_jet(z))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceRow {
    pub transform: String,
    pub w: f64,
    pub rel_dw: f64,
    pub e_nu_raw: f64,
    pub e_nu: i64,
    pub expected_e_nu: i64,
    pub ok: bool,
}

/// Recompute W and e(nu) after each transform; inversion centres must stay
/// at distance > 0.1 from the sampled surface.
pub fn invariance_suite<S: Surface + ?Sized>(
    s: &S,
    spec: &QuadratureSpec,
    transforms: &[AmbientMap],
    max_rel_dw: f64,
) -> Result<Vec<InvarianceRow>, InvariantError> {
    let base = integrate(s, spec)?;
    let (_, e0) = rounded(base.kperp / TAU)?;
    let nodes = spec.nodes();
    let mut rows = Vec::with_capacity(transforms.len());
    for t in transforms {
        if let AmbientMap::Inversion { center, .. } = t {
            let d = map_indices(spec.execution, nodes.len(), |k| {
                let p = s.point(nodes[k].0);
                (0..4).map(|i| (p[i] - center[i]).powi(2)).sum::<f64>().sqrt()
            })
            .into_iter()
            .fold(f64::INFINITY, f64::min);
            if d <= 0.1 {
                return Err(InvariantError::CenterTooClose(d));
            }
        }
        let ts = Transformed { surface: s, map: t.clone() };
        let it = integrate(&ts, spec)?;
        let raw = it.kperp / TAU;
        let e = raw.round() as i64;
        let expected = if t.preserves_orientation() { e0 } else { -e0 };
        let rel_dw = (it.willmore - base.willmore).abs() / base.willmore;
        rows.push(InvarianceRow {
            transform: t.name(),
            w: it.willmore,
            rel_dw,
            e_nu_raw: raw,
            e_nu: e,
            expected_e_nu: expected,
            ok: rel_dw < max_rel_dw && e == expected && (raw - raw.round()).abs() < 1e-2,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CliffordTorus, RoundSphere};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_sphere_energy_and_total_curvature() {
        for rho in [0.7, 2.0] {
            let s = RoundSphere { rho };
            let spec = QuadratureSpec::disk(128);
            let w = willmore_energy(&s, &spec).unwrap();
            assert!((w / (4.0 * PI) - 1.0).abs() < 1e-3, "W = {w}");
            let k = gauss_bonnet(&s, &spec).unwrap();
            assert!((k / (4.0 * PI) - 1.0).abs() < 1e-3);
            let area = integrate(&s, &spec).unwrap().area;
            assert!((area / (4.0 * PI * rho * rho) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn clifford_torus_energy() {
        // circles of radii 1/2pi and r/2pi: |H|^2 = 4 pi^2 (1 + 1/r^2), area r
        let r = 1.3;
        let spec = QuadratureSpec::torus(r, 32);
        let w = willmore_energy(&CliffordTorus { r }, &spec).unwrap();
        let exact = PI * PI * (r + 1.0 / r);
        assert!((w - exact).abs() < 1e-10 * exact, "{w} vs {exact}");
        let (_, e) = euler_normal_number(&CliffordTorus { r }, &spec).unwrap();
        assert_eq!(e, 0);
    }

    #[test]
    fn grid_too_small() {
        assert!(matches!(
            integrate(&RoundSphere { rho: 1.0 }, &QuadratureSpec::disk(8)),
            Err(InvariantError::GridTooSmall)
        ));
    }

    #[test]
    fn random_rotations_are_special_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let q = random_rotation(&mut rng);
            assert!((q.transpose() * q - Matrix4::identity()).norm() < 1e-12);
            assert!((q.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_energy_is_invariant() {
        let s = RoundSphere { rho: 1.0 };
        let spec = QuadratureSpec::disk(64);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let maps = vec![
            AmbientMap::random_similarity(&mut rng),
            AmbientMap::Inversion { center: [0.0, 0.0, 0.0, 0.5], radius: 1.0 },
            AmbientMap::Reflection { axis: 3 },
        ];
        let rows = invariance_suite(&s, &spec, &maps, 5e-3).unwrap();
        assert!(rows.iter().all(|r| r.ok), "{rows:#?}");
        let close = [AmbientMap::Inversion { center: [1.0, 0.0, 0.0, 0.0], radius: 1.0 }];
        assert!(matches!(invariance_suite(&s, &spec, &close, 5e-3), Err(InvariantError::CenterTooClose(_))));
    }
}
