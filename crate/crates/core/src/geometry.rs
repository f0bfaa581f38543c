//! Pointwise extrinsic geometry of a conformally parametrized surface in R^4.
//!
//! Conventions: `A(v, w) = (D_v w)^perp`, `H = A11 + A22` in an orthonormal
//! tangent frame, `A° = A - H/2 <.,.>`. The frame `{E1, E2, N1, N2}` is
//! positively oriented and the twistor rotation acts on normals by
//! `N1 -> -N2`, `N2 -> N1`.

use num_complex::Complex64;

use crate::error::GeometryError;
use crate::jet::{Dual2, Real};

pub type R4 = [f64; 4];

/// A parametrized surface `f: C (or a domain) -> R^4`.
pub trait Surface: Sync {
    fn point(&self, z: Complex64) -> R4;
    /// Exact second-order jet in `(x, y)`, `z = x + iy`.
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4];
    /// `f(z)` evaluated the way it is evaluated at `center`; surfaces built
    /// from several charts keep a finite-difference stencil in one chart.
    fn point_near(&self, _center: Complex64, z: Complex64) -> R4 {
        self.point(z)
    }
}

impl<S: Surface + ?Sized> Surface for &S {
    fn point(&self, z: Complex64) -> R4 {
        (**self).point(z)
    }
    fn point_near(&self, center: Complex64, z: Complex64) -> R4 {
        (**self).point_near(center, z)
    }
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        (**self).dual_jet(z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JetMethod {
    DualNumber,
    /// Central differences with one Richardson level; second partials use step `sqrt(h)`.
    FiniteDifference(f64),
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetSample {
    pub z: Complex64,
    pub f: R4,
    pub fx: R4,
    pub fy: R4,
    pub fxx: R4,
    pub fxy: R4,
    pub fyy: R4,
}

pub(crate) fn dot(a: &R4, b: &R4) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub(crate) fn norm(a: &R4) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &R4, y: &R4) -> R4 {
    [alpha * x[0] + y[0], alpha * x[1] + y[1], alpha * x[2] + y[2], alpha * x[3] + y[3]]
}

fn scale(alpha: f64, x: &R4) -> R4 {
    [alpha * x[0], alpha * x[1], alpha * x[2], alpha * x[3]]
}

fn lincomb(terms: &[(f64, R4)]) -> R4 {
    let mut out = [0.0; 4];
    for (c, v) in terms {
        out = axpy(*c, v, &out);
    }
    out
}

fn det4(m: [R4; 4]) -> f64 {
    let minor = |r: [usize; 3], c: [usize; 3]| {
        m[r[0]][c[0]] * (m[r[1]][c[1]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[1]])
            - m[r[0]][c[1]] * (m[r[1]][c[0]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[0]])
            + m[r[0]][c[2]] * (m[r[1]][c[0]] * m[r[2]][c[1]] - m[r[1]][c[1]] * m[r[2]][c[0]])
    };
    let rows = [1, 2, 3];
    m[0][0] * minor(rows, [1, 2, 3]) - m[0][1] * minor(rows, [0, 2, 3]) + m[0][2] * minor(rows, [0, 1, 3])
        - m[0][3] * minor(rows, [0, 1, 2])
}

/// Determinant of the matrix with the given vectors as rows.
pub fn orientation(vs: [R4; 4]) -> f64 {
    det4(vs)
}

impl JetSample {
    pub fn from_dual(z: Complex64, d: [Dual2; 4]) -> Self {
        let pick = |f: fn(&Dual2) -> f64| [f(&d[0]), f(&d[1]), f(&d[2]), f(&d[3])];
        Self {
            z,
            f: pick(|d| d.v),
            fx: pick(|d| d.dx),
            fy: pick(|d| d.dy),
            fxx: pick(|d| d.dxx),
            fxy: pick(|d| d.dxy),
            fyy: pick(|d| d.dyy),
        }
    }

    fn finite_difference<S: Surface + ?Sized>(s: &S, z: Complex64, h: f64) -> Self {
        let f = |dx: f64, dy: f64| s.point_near(z, z + Complex64::new(dx, dy));
        let first = |h: f64, dir: Complex64| {
            let p = f(h * dir.re, h * dir.im);
            let m = f(-h * dir.re, -h * dir.im);
            scale(0.5 / h, &axpy(-1.0, &m, &p))
        };
        let f0 = f(0.0, 0.0);
        let second = |h: f64, dir: Complex64| {
            let p = f(h * dir.re, h * dir.im);
            let m = f(-h * dir.re, -h * dir.im);
            scale(1.0 / (h * h), &lincomb(&[(1.0, p), (-2.0, f0), (1.0, m)]))
        };
        let mixed = |h: f64| {
            let v = lincomb(&[(1.0, f(h, h)), (-1.0, f(h, -h)), (-1.0, f(-h, h)), (1.0, f(-h, -h))]);
            scale(1.0 / (4.0 * h * h), &v)
        };
        let richardson = |coarse: R4, fine: R4| lincomb(&[(4.0 / 3.0, fine), (-1.0 / 3.0, coarse)]);
        // two extrapolation levels: O(s^6) truncation at steps s, s/2, s/4
        let romberg = |d: &dyn Fn(f64) -> R4, s: f64| {
            let (a, b, c) = (d(s), d(s / 2.0), d(s / 4.0));
            let (ab, bc) = (richardson(a, b), richardson(b, c));
            lincomb(&[(16.0 / 15.0, bc), (-1.0 / 15.0, ab)])
        };
        let (ex, ey) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
        let h2 = h.sqrt();
        Self {
            z,
            f: f0,
            fx: richardson(first(h, ex), first(h / 2.0, ex)),
            fy: richardson(first(h, ey), first(h / 2.0, ey)),
            fxx: romberg(&|s| second(s, ex), h2),
            fxy: romberg(&mixed, h2),
            fyy: romberg(&|s| second(s, ey), h2),
        }
    }

    /// Largest relative deviation between two jets, per derivative order.
    pub fn relative_deviation(&self, other: &Self) -> f64 {
        let group = |a: [&R4; 3], b: [&R4; 3]| {
            let s = a.iter().map(|v| norm(v)).fold(0.0, f64::max).max(1e-300);
            a.iter().zip(b.iter()).map(|(u, v)| norm(&axpy(-1.0, v, u)) / s).fold(0.0, f64::max)
        };
        let d1 = group([&self.fx, &self.fy, &self.fx], [&other.fx, &other.fy, &other.fx]);
        let d2 = group([&self.fxx, &self.fxy, &self.fyy], [&other.fxx, &other.fxy, &other.fyy]);
        d1.max(d2)
    }
}

pub fn jet<S: Surface + ?Sized>(s: &S, z: Complex64, method: JetMethod) -> Result<JetSample, GeometryError> {
    let j = match method {
        JetMethod::DualNumber => JetSample::from_dual(z, s.dual_jet(z)),
        JetMethod::FiniteDifference(h) => JetSample::finite_difference(s, z, h),
    };
    let all = [j.f, j.fx, j.fy, j.fxx, j.fxy, j.fyy];
    if all.iter().flatten().any(|v| !v.is_finite()) || norm(&j.fx) == 0.0 || norm(&j.fy) == 0.0 {
        return Err(GeometryError::NumericalBreakdown(z));
    }
    Ok(j)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureSample {
    pub z: Complex64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub e1: R4,
    pub e2: R4,
    pub n1: R4,
    pub n2: R4,
    pub a11: R4,
    pub a12: R4,
    pub a22: R4,
    pub h: R4,
    pub a011: R4,
    pub a012: R4,
    pub k: f64,
    pub kperp: f64,
    /// Area element `sqrt(EG - F^2)`.
    pub conf_factor: f64,
}

/// Deterministic normal frame: Gram–Schmidt on the standard basis vectors
/// least aligned with the tangent plane, oriented so `det(E1, E2, N1, N2) = +1`.
fn normal_frame(e1: &R4, e2: &R4) -> Option<(R4, R4)> {
    let basis = |i: usize| {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        v
    };
    let mut order: Vec<(f64, usize)> = (0..4).map(|i| (e1[i] * e1[i] + e2[i] * e2[i], i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut normals: Vec<R4> = Vec::with_capacity(2);
    for &(_, i) in &order {
        let mut v = basis(i);
        for u in [e1, e2].into_iter().chain(normals.iter()) {
            v = axpy(-dot(&v, u), u, &v);
        }
        // second pass for orthogonality at rounding level
        for u in [e1, e2].into_iter().chain(normals.iter()) {
            v = axpy(-dot(&v, u), u, &v);
        }
        let n = norm(&v);
        if n > 1e-3 {
            normals.push(scale(1.0 / n, &v));
        }
        if normals.len() == 2 {
            break;
        }
    }
    if normals.len() < 2 {
        return None;
    }
    let (n1, mut n2) = (normals[0], normals[1]);
    if det4([*e1, *e2, n1, n2]) < 0.0 {
        n2 = scale(-1.0, &n2);
    }
    Some((n1, n2))
}

pub fn curvature(j: &JetSample) -> Result<CurvatureSample, GeometryError> {
    let (e, f, g) = (dot(&j.fx, &j.fx), dot(&j.fx, &j.fy), dot(&j.fy, &j.fy));
    if e * g - f * f < 1e-14 * (e + g) * (e + g) {
        return Err(GeometryError::DegenerateMetric(j.z));
    }
    let a = e.sqrt();
    let e1 = scale(1.0 / a, &j.fx);
    let b = dot(&j.fy, &e1);
    let w = axpy(-b, &e1, &j.fy);
    let c = norm(&w);
    let e2 = scale(1.0 / c, &w);
    let (n1, n2) = normal_frame(&e1, &e2).ok_or(GeometryError::NumericalBreakdown(j.z))?;
    Ok(curvature_in_frame(j, e, f, g, (e1, e2), (n1, n2), (a, b, c)))
}

fn curvature_in_frame(
    j: &JetSample,
    e: f64,
    f: f64,
    g: f64,
    (e1, e2): (R4, R4),
    (n1, n2): (R4, R4),
    (a, b, c): (f64, f64, f64),
) -> CurvatureSample {
    let perp = |v: &R4| lincomb(&[(dot(v, &n1), n1), (dot(v, &n2), n2)]);
    let (pxx, pxy, pyy) = (perp(&j.fxx), perp(&j.fxy), perp(&j.fyy));
    let t = b / a;
    let a11 = scale(1.0 / (a * a), &pxx);
    let a12 = scale(1.0 / (a * c), &axpy(-t, &pxx, &pxy));
    let a22 = scale(1.0 / (c * c), &lincomb(&[(1.0, pyy), (-2.0 * t, pxy), (t * t, pxx)]));
    let h = lincomb(&[(1.0, a11), (1.0, a22)]);
    let a011 = axpy(-0.5, &h, &a11);
    let a012 = a12;
    let k = dot(&a11, &a22) - dot(&a12, &a12);
    let kperp = 2.0 * (dot(&a011, &n1) * dot(&a012, &n2) - dot(&a011, &n2) * dot(&a012, &n1));
    CurvatureSample {
        z: j.z,
        e,
        f,
        g,
        e1,
        e2,
        n1,
        n2,
        a11,
        a12,
        a22,
        h,
        a011,
        a012,
        k,
        kperp,
        conf_factor: (e * g - f * f).sqrt(),
    }
}

impl CurvatureSample {
    /// Same quantities with the normal frame rotated by `angle`.
    pub fn rotate_normals(&self, j: &JetSample, angle: f64) -> CurvatureSample {
        let (s, co) = angle.sin_cos();
        let n1 = lincomb(&[(co, self.n1), (s, self.n2)]);
        let n2 = lincomb(&[(-s, self.n1), (co, self.n2)]);
        let a = self.e.sqrt();
        let b = dot(&j.fy, &self.e1);
        let c = norm(&axpy(-b, &self.e1, &j.fy));
        curvature_in_frame(j, self.e, self.f, self.g, (self.e1, self.e2), (n1, n2), (a, b, c))
    }

    pub fn mean_curvature_sq(&self) -> f64 {
        dot(&self.h, &self.h)
    }

    /// Normal components `(<v, N1>, <v, N2>)`.
    pub fn normal_coords(&self, v: &R4) -> [f64; 2] {
        [dot(v, &self.n1), dot(v, &self.n2)]
    }

    pub fn conformality(&self) -> (f64, f64) {
        ((self.e - self.g).abs() / self.e, self.f.abs() / self.e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WintgenResiduals {
    /// `||A°11|^2 - |A°12|^2| / (|A°11|^2 + |A°12|^2)`
    pub r1: f64,
    /// `|<A°11, A°12>| / (|A°11| |A°12|)`
    pub r2: f64,
    /// Sign of `K^perp` (-1, 0 or 1).
    pub sign_flag: i8,
    /// `|F A°11 - A°12| / (|A°11| + |A°12|)`
    pub twistor_residual: f64,
    /// Unnormalized `|F A°11 - A°12|`.
    pub twistor_residual_abs: f64,
}

pub fn wintgen_twistor_residuals(cs: &CurvatureSample) -> Result<WintgenResiduals, GeometryError> {
    let (p, q) = (norm(&cs.a011), norm(&cs.a012));
    if p + q < 1e-12 {
        return Err(GeometryError::UmbilicPoint);
    }
    let r1 = (p * p - q * q).abs() / (p * p + q * q);
    let r2 = if p * q > 0.0 { dot(&cs.a011, &cs.a012).abs() / (p * q) } else { 1.0 };
    let [al, be] = cs.normal_coords(&cs.a011);
    let [ga, de] = cs.normal_coords(&cs.a012);
    // F(al N1 + be N2) = be N1 - al N2
    let abs = ((be - ga).powi(2) + (-al - de).powi(2)).sqrt();
    let sign_flag = if cs.kperp > 0.0 {
        1
    } else if cs.kperp < 0.0 {
        -1
    } else {
        0
    };
    Ok(WintgenResiduals { r1, r2, sign_flag, twistor_residual: abs / (p + q), twistor_residual_abs: abs })
}

/// Evaluate a surface formula on `f64` or [`Dual2`] coordinates.
fn dual_of<F>(z: Complex64, eval: F) -> [Dual2; 4]
where
    F: Fn(Dual2, Dual2) -> [Dual2; 4],
{
    eval(Dual2::x(z.re), Dual2::y(z.im))
}

/// `f(x + iy) = (x, y, 0, 0)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Plane;

impl Surface for Plane {
    fn point(&self, z: Complex64) -> R4 {
        [z.re, z.im, 0.0, 0.0]
    }
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        dual_of(z, |x, y| [x, y, Dual2::cst(0.0), Dual2::cst(0.0)])
    }
}

/// Round sphere of radius `rho` in `R^3 x {0}` via inverse stereographic projection.
#[derive(Clone, Copy, Debug)]
pub struct RoundSphere {
    pub rho: f64,
}

impl RoundSphere {
    fn eval<T: Real>(&self, x: T, y: T) -> [T; 4] {
        let q = x * x + y * y;
        let d = (q + 1.0) / self.rho;
        [x * 2.0 / d, y * 2.0 / d, (q - 1.0) / d, T::cst(0.0)]
    }
}

impl Surface for RoundSphere {
    fn point(&self, z: Complex64) -> R4 {
        self.eval(z.re, z.im)
    }
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        dual_of(z, |x, y| self.eval(x, y))
    }
}

/// Flat product torus `(cos 2 pi x, sin 2 pi x, rho cos(2 pi y / r), rho sin(2 pi y / r)) / 2 pi`
/// on the lattice `(1, i r)`, conformal when `rho = r`.
#[derive(Clone, Copy, Debug)]
pub struct CliffordTorus {
    pub r: f64,
}

impl CliffordTorus {
    fn eval<T: Real>(&self, x: T, y: T) -> [T; 4] {
        let tp = std::f64::consts::TAU;
        let (u, v) = (x * tp, y * (tp / self.r));
        let k = 1.0 / tp;
        [u.cos() * k, u.sin() * k, v.cos() * (self.r * k), v.sin() * (self.r * k)]
    }
}

impl Surface for CliffordTorus {
    fn point(&self, z: Complex64) -> R4 {
        self.eval(z.re, z.im)
    }
    fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
        dual_of(z, |x, y| self.eval(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plane_jet() {
        let j = jet(&Plane, c(0.3, 0.4), JetMethod::DualNumber).unwrap();
        assert_eq!(j.fx, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(j.fy, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!([j.fxx, j.fxy, j.fyy], [[0.0; 4]; 3]);
        let cs = curvature(&j).unwrap();
        assert_eq!(cs.k, 0.0);
        assert!(matches!(wintgen_twistor_residuals(&cs), Err(GeometryError::UmbilicPoint)));
    }

    #[test]
    fn round_sphere_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for rho in [1.0, 2.5] {
            let s = RoundSphere { rho };
            for _ in 0..20 {
                let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let cs = curvature(&jet(&s, z, JetMethod::DualNumber).unwrap()).unwrap();
                assert!((cs.k - 1.0 / (rho * rho)).abs() < 1e-6);
                assert!(cs.kperp.abs() < 1e-6);
                assert!((norm(&cs.h) - 2.0 / rho).abs() < 1e-6);
                let (ce, cf) = cs.conformality();
                assert!(ce < 1e-12 && cf < 1e-12);
                assert!(matches!(wintgen_twistor_residuals(&cs), Err(GeometryError::UmbilicPoint)));
            }
        }
    }

    #[test]
    fn clifford_torus_is_flat() {
        let s = CliffordTorus { r: 1.3 };
        let cs = curvature(&jet(&s, c(0.2, 0.7), JetMethod::DualNumber).unwrap()).unwrap();
        assert!(cs.k.abs() < 1e-6);
        assert!(cs.kperp.abs() < 1e-6);
    }

    #[test]
    fn frame_is_orthonormal_and_positive() {
        let s = RoundSphere { rho: 1.0 };
        let cs = curvature(&jet(&s, c(0.4, -0.3), JetMethod::DualNumber).unwrap()).unwrap();
        let fr = [cs.e1, cs.e2, cs.n1, cs.n2];
        for i in 0..4 {
            for k in 0..4 {
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((dot(&fr[i], &fr[k]) - want).abs() < 1e-12);
            }
        }
        assert!((orientation(fr) - 1.0).abs() < 1e-12);
        for a in [cs.a11, cs.a12, cs.a22] {
            assert!(dot(&a, &cs.e1).abs() < 1e-12 && dot(&a, &cs.e2).abs() < 1e-12);
        }
        let tr = lincomb(&[(1.0, cs.a011), (1.0, axpy(-0.5, &cs.h, &cs.a22))]);
        assert!(norm(&tr) < 1e-12);
    }

    #[test]
    fn finite_differences_match_dual_numbers() {
        let s = RoundSphere { rho: 1.7 };
        let z = c(0.3, 0.8);
        let a = jet(&s, z, JetMethod::DualNumber).unwrap();
        let b = jet(&s, z, JetMethod::FiniteDifference(DEFAULT_FD_STEP)).unwrap();
        assert!(a.relative_deviation(&b) < 1e-6, "{}", a.relative_deviation(&b));
    }

    #[test]
    fn curvatures_do_not_depend_on_the_normal_frame() {
        // a generic non-umbilic surface: graph of a quadratic with a twist
        struct Twisted;
        impl Twisted {
            fn eval<T: Real>(x: T, y: T) -> [T; 4] {
                [x, y, x * x - y * y * 0.5, x * y * 2.0 + x * x * x * 0.3]
            }
        }
        impl Surface for Twisted {
            fn point(&self, z: Complex64) -> R4 {
                Self::eval(z.re, z.im)
            }
            fn dual_jet(&self, z: Complex64) -> [Dual2; 4] {
                dual_of(z, Self::eval)
            }
        }
        let j = jet(&Twisted, c(0.2, -0.4), JetMethod::DualNumber).unwrap();
        let cs = curvature(&j).unwrap();
        for angle in [0.3, 1.7, -2.2] {
            let rot = cs.rotate_normals(&j, angle);
            assert!((rot.k - cs.k).abs() < 1e-12);
            assert!((rot.kperp - cs.kperp).abs() < 1e-12);
            assert!((norm(&rot.h) - norm(&cs.h)).abs() < 1e-12);
        }
    }
}
