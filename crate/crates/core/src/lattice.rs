//! Lattices in the complex plane and their canonical bases.

use num_complex::Complex64;

use crate::error::LatticeError;

/// Absolute tolerance for lattice membership in generator coordinates.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A lattice `{ m * omega1 + n * omega2 }`.
///
/// The pair is stored with `Im(omega2 / omega1) > 0`; a negatively oriented
/// input has its second generator negated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    omega1: Complex64,
    omega2: Complex64,
}

/// An element of a lattice given by integer coordinates against its generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct LatticeVector {
    pub m: i64,
    pub n: i64,
}

impl LatticeVector {
    pub const ZERO: Self = Self { m: 0, n: 0 };

    pub fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }
}

impl std::ops::Add for LatticeVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.m + o.m, self.n + o.n)
    }
}

impl Lattice {
    pub fn new(omega1: Complex64, omega2: Complex64) -> Result<Self, LatticeError> {
        if !(omega1.is_finite() && omega2.is_finite()) || omega1.norm() == 0.0 {
            return Err(LatticeError::DegenerateLattice);
        }
        let ratio = omega2 / omega1;
        if ratio.im.abs() <= 1e-12 * ratio.norm().max(1.0) {
            return Err(LatticeError::DegenerateLattice);
        }
        let omega2 = if ratio.im < 0.0 { -omega2 } else { omega2 };
        Ok(Self { omega1, omega2 })
    }

    /// The rectangular lattice generated by `(1, i r)`.
    pub fn rectangular(r: f64) -> Result<Self, LatticeError> {
        if !(r.is_finite() && r > 0.0) {
            return Err(LatticeError::DegenerateLattice);
        }
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, r))
    }

    pub fn omega1(&self) -> Complex64 {
        self.omega1
    }

    pub fn omega2(&self) -> Complex64 {
        self.omega2
    }

    /// `omega2 / omega1`, always in the upper half plane.
    pub fn tau(&self) -> Complex64 {
        self.omega2 / self.omega1
    }

    pub fn point(&self, v: LatticeVector) -> Complex64 {
        self.omega1 * v.m as f64 + self.omega2 * v.n as f64
    }

    /// Real coordinates `(s, t)` with `z = s * omega1 + t * omega2`.
    pub fn coords(&self, z: Complex64) -> (f64, f64) {
        let (a, b) = (self.omega1, self.omega2);
        let det = a.re * b.im - a.im * b.re;
        let s = (z.re * b.im - z.im * b.re) / det;
        let t = (a.re * z.im - a.im * z.re) / det;
        (s, t)
    }

    /// The lattice vector nearest to `z` in generator coordinates, if within `tol`.
    pub fn vector_of(&self, z: Complex64, tol: f64) -> Option<LatticeVector> {
        let (s, t) = self.coords(z);
        let (m, n) = (s.round(), t.round());
        if (s - m).abs() <= tol && (t - n).abs() <= tol {
            Some(LatticeVector::new(m as i64, n as i64))
        } else {
            None
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.vector_of(z, MEMBERSHIP_TOL).is_some()
    }

    /// Representative of `z` modulo the lattice with coordinates in `[0, 1)^2`.
    pub fn reduce(&self, z: Complex64) -> Complex64 {
        let (s, t) = self.coords(z);
        let s = wrap_unit(s);
        let t = wrap_unit(t);
        self.omega1 * s + self.omega2 * t
    }

    /// Representative of `z` modulo the lattice nearest to the origin in coordinates.
    pub fn reduce_centered(&self, z: Complex64) -> (Complex64, LatticeVector) {
        let (s, t) = self.coords(z);
        let v = LatticeVector::new(s.round() as i64, t.round() as i64);
        (z - self.point(v), v)
    }

    /// Distance from `z - w` to the lattice, measured in the plane.
    pub fn torus_distance(&self, z: Complex64, w: Complex64) -> f64 {
        let (d, _) = self.reduce_centered(z - w);
        let mut best = d.norm();
        for dm in -1..=1 {
            for dn in -1..=1 {
                let c = d - self.point(LatticeVector::new(dm, dn));
                best = best.min(c.norm());
            }
        }
        best
    }

    pub fn is_rectangular(&self) -> bool {
        let tau = self.tau();
        tau.re.abs() <= 1e-12 * tau.norm()
    }

    /// `conj(Gamma) == Gamma`.
    pub fn is_real(&self) -> bool {
        maps_onto(self, |w| w.conj())
    }
}

fn wrap_unit(s: f64) -> f64 {
    let w = s - s.floor();
    // floor can leave exactly 1.0 after rounding for tiny negative inputs
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Whether the real-linear map `phi` sends the lattice onto itself.
pub(crate) fn maps_onto(lattice: &Lattice, phi: impl Fn(Complex64) -> Complex64) -> bool {
    let (a, b) = (phi(lattice.omega1), phi(lattice.omega2));
    match (
        lattice.vector_of(a, MEMBERSHIP_TOL),
        lattice.vector_of(b, MEMBERSHIP_TOL),
    ) {
        (Some(u), Some(v)) => (u.m * v.n - u.n * v.m).abs() == 1,
        _ => false,
    }
}

/// Result of reducing a lattice to its canonical basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalBasis {
    /// `omega' / omega` for the canonical pair.
    pub tau: Complex64,
    /// Integer matrix with `(omega, omega') = M (omega1, omega2)`, `det M = ±1`.
    pub basis_change: [[i64; 2]; 2],
    /// The first canonical generator `omega`; `Gamma = scale * (Z + tau Z)`.
    pub scale: Complex64,
}

impl CanonicalBasis {
    pub fn canonical_lattice(&self) -> Lattice {
        Lattice::new(Complex64::new(1.0, 0.0), self.tau).expect("canonical tau is non-real")
    }

    pub fn is_rectangular(&self) -> bool {
        self.tau.re.abs() <= BOUNDARY_TOL
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

/// Reduce a lattice to the canonical basis: `Im tau > 0`, `-1/2 < Re tau <= 1/2`,
/// `|tau| >= 1`, and `Re tau >= 0` when `|tau| = 1`.
pub fn reduce_lattice(lattice: &Lattice) -> CanonicalBasis {
    let mut w1 = lattice.omega1();
    let mut w2 = lattice.omega2();
    // rows express (w1, w2) in terms of the stored generators
    let mut m = [[1i64, 0], [0, 1]];

    for _ in 0..200 {
        let tau = w2 / w1;
        let k = tau.re.round();
        if k != 0.0 {
            w2 -= w1 * k;
            let k = k as i64;
            m[1][0] -= k * m[0][0];
            m[1][1] -= k * m[0][1];
        }
        let tau = w2 / w1;
        if tau.norm_sqr() < 1.0 - BOUNDARY_TOL {
            // (w1, w2) -> (w2, -w1) keeps the orientation
            let (nw1, nw2) = (w2, -w1);
            w1 = nw1;
            w2 = nw2;
            m = [m[1], [-m[0][0], -m[0][1]]];
        } else {
            break;
        }
    }

    let mut tau = w2 / w1;
    if (tau.re + 0.5).abs() <= BOUNDARY_TOL {
        w2 += w1;
        m[1][0] += m[0][0];
        m[1][1] += m[0][1];
        tau = w2 / w1;
    }
    if (tau.norm() - 1.0).abs() <= BOUNDARY_TOL && tau.re < -BOUNDARY_TOL {
        let (nw1, nw2) = (w2, -w1);
        w1 = nw1;
        w2 = nw2;
        m = [m[1], [-m[0][0], -m[0][1]]];
        tau = w2 / w1;
    }
    if tau.re.abs() <= BOUNDARY_TOL {
        tau.re = 0.0;
    }
    CanonicalBasis { tau, basis_change: m, scale: w1 }
}
