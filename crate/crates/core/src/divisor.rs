//! Elliptic functions with prescribed divisor, built as sigma quotients
//!
//! ```text
//! f(z) = c * exp(lambda z) * prod sigma(z - a_k) / prod sigma(z - b_k)
//! ```
//!
//! where `a_k` are zero representatives, `b_k` pole representatives and
//! `lambda = -eta(sum b_k - sum a_k)`. Representatives are kept exactly as
//! supplied (not reduced), since the closed-form constants of the symmetric
//! construction refer to particular representatives. [`Divisor`] is the
//! reduced, comparison-friendly view.

use std::sync::Arc;

use num_complex::Complex64;

use crate::elliptic::EllipticContext;
use crate::error::DivisorError;
use crate::jet::{CJet, Holo};
use crate::lattice::{LatticeVector, MEMBERSHIP_TOL};

/// Radius around a pole orbit inside which evaluation reports infinity.
pub const POLE_RADIUS: f64 = 1e-8;
/// Minimum distance between distinct poles of a constructed function.
pub const MIN_POLE_SEPARATION: f64 = 1e-3;

/// Points on the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SphereValue {
    Finite(Complex64),
    Infinity,
}

impl SphereValue {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            SphereValue::Finite(v) => Some(v),
            SphereValue::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, SphereValue::Infinity)
    }
}

/// Zeros and poles with orders, reduced to the fundamental cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    pub poles: Vec<(Complex64, u32)>,
    pub zeros: Vec<(Complex64, u32)>,
}

impl Divisor {
    pub fn new(poles: Vec<(Complex64, u32)>, zeros: Vec<(Complex64, u32)>) -> Self {
        Self { poles, zeros }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new())
    }

    pub fn pole_degree(&self) -> u32 {
        self.poles.iter().map(|p| p.1).sum()
    }

    pub fn zero_degree(&self) -> u32 {
        self.zeros.iter().map(|p| p.1).sum()
    }

    /// `sum(order * pole) - sum(order * zero)`.
    pub fn abel_sum(&self) -> Complex64 {
        let s = |v: &[(Complex64, u32)]| v.iter().map(|(p, k)| p * *k as f64).sum::<Complex64>();
        s(&self.poles) - s(&self.zeros)
    }
}

fn expand(points: &[(Complex64, u32)]) -> Vec<Complex64> {
    points
        .iter()
        .flat_map(|(p, k)| std::iter::repeat_n(*p, *k as usize))
        .collect()
}

fn sign_of(v: LatticeVector) -> f64 {
    if (v.m + v.n + v.m * v.n).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A doubly periodic meromorphic function in sigma-quotient form.
#[derive(Clone, Debug)]
pub struct EllipticFunctionRep {
    ctx: Arc<EllipticContext>,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    lambda: Complex64,
    c: Complex64,
    omega0: LatticeVector,
}

impl EllipticFunctionRep {
    /// Build from explicit representatives; the Abel defect must be a lattice vector.
    pub fn from_representatives(
        ctx: Arc<EllipticContext>,
        zeros: Vec<Complex64>,
        poles: Vec<Complex64>,
        c: Complex64,
    ) -> Result<Self, DivisorError> {
        if zeros.len() != poles.len() {
            return Err(DivisorError::DegreeMismatch {
                poles: poles.len() as u32,
                zeros: zeros.len() as u32,
            });
        }
        let defect: Complex64 = poles.iter().sum::<Complex64>() - zeros.iter().sum::<Complex64>();
        let omega0 = ctx
            .lattice()
            .vector_of(defect, MEMBERSHIP_TOL)
            .ok_or(DivisorError::AbelViolation(defect))?;
        let lambda = -ctx.eta(omega0);
        let mut rep = Self { ctx, zeros, poles, lambda, c, omega0 };
        rep.cancel_common();
        Ok(rep)
    }

    pub fn constant(ctx: Arc<EllipticContext>, c: Complex64) -> Self {
        Self {
            ctx,
            zeros: Vec::new(),
            poles: Vec::new(),
            lambda: Complex64::new(0.0, 0.0),
            c,
            omega0: LatticeVector::ZERO,
        }
    }

    pub fn context(&self) -> &Arc<EllipticContext> {
        &self.ctx
    }

    pub fn zero_representatives(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn pole_representatives(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn constant_factor(&self) -> Complex64 {
        self.c
    }

    /// Abel defect `sum poles - sum zeros` of the representatives.
    pub fn omega0(&self) -> LatticeVector {
        self.omega0
    }

    pub fn exponent_slope(&self) -> Complex64 {
        self.lambda
    }

    /// Sum of pole orders.
    pub fn degree(&self) -> u32 {
        self.poles.len() as u32
    }

    /// Reduced divisor with merged multiplicities.
    pub fn divisor(&self) -> Divisor {
        let lat = *self.ctx.lattice();
        let group = |pts: &[Complex64]| {
            let mut out: Vec<(Complex64, u32)> = Vec::new();
            for p in pts {
                let r = lat.reduce(*p);
                match out.iter_mut().find(|(q, _)| lat.torus_distance(*q, r) < MEMBERSHIP_TOL) {
                    Some(e) => e.1 += 1,
                    None => out.push((r, 1)),
                }
            }
            out
        };
        Divisor::new(group(&self.poles), group(&self.zeros))
    }

    /// Remove zero/pole representative pairs that agree modulo the lattice.
    fn cancel_common(&mut self) {
        let lat = *self.ctx.lattice();
        let mut i = 0;
        while i < self.zeros.len() {
            let a = self.zeros[i];
            let hit = self
                .poles
                .iter()
                .position(|b| lat.vector_of(a - b, MEMBERSHIP_TOL).is_some());
            match hit {
                Some(j) => {
                    let b = self.poles.remove(j);
                    self.zeros.remove(i);
                    let w = lat.vector_of(a - b, MEMBERSHIP_TOL).unwrap();
                    // sigma(z-a)/sigma(z-b) = eps * exp(-eta(w)(z - b - w/2))
                    let eta_w = self.ctx.eta(w);
                    let wp = lat.point(w);
                    self.lambda -= eta_w;
                    self.c *= (eta_w * (b + wp * 0.5)).exp() * sign_of(w);
                    if w != LatticeVector::ZERO {
                        self.omega0 = LatticeVector::new(self.omega0.m + w.m, self.omega0.n + w.n);
                    }
                }
                None => i += 1,
            }
        }
    }

    /// Product of two functions on the same lattice.
    pub fn mul(&self, other: &Self) -> Self {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        let mut poles = self.poles.clone();
        poles.extend_from_slice(&other.poles);
        let mut rep = Self {
            ctx: self.ctx.clone(),
            zeros,
            poles,
            lambda: self.lambda + other.lambda,
            c: self.c * other.c,
            omega0: self.omega0 + other.omega0,
        };
        rep.cancel_common();
        rep
    }

    /// `1 / f`, through the swapped divisor.
    pub fn recip(&self) -> Self {
        Self {
            ctx: self.ctx.clone(),
            zeros: self.poles.clone(),
            poles: self.zeros.clone(),
            lambda: -self.lambda,
            c: self.c.inv(),
            omega0: LatticeVector::new(-self.omega0.m, -self.omega0.n),
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let mut rep = self.clone();
        rep.c *= k;
        rep
    }

    /// `z -> conj(f(a conj(z) + b))` for an antiholomorphic map preserving the lattice.
    ///
    /// Uses `conj(sigma(u)) = sigma(conj(u))` on real lattices, extended through
    /// `sigma_{a L}(a u) = a sigma_L(u)` for unimodular `a` with `a conj(L) = L`.
    pub fn conj_compose(&self, a: Complex64, b: Complex64) -> Self {
        let map = |p: &Complex64| a * (p.conj() - b.conj());
        let zeros: Vec<Complex64> = self.zeros.iter().map(map).collect();
        let poles: Vec<Complex64> = self.poles.iter().map(map).collect();
        let lambda = self.lambda.conj() * a.conj();
        let c = self.c.conj() * (self.lambda.conj() * b.conj()).exp();
        let defect: Complex64 = poles.iter().sum::<Complex64>() - zeros.iter().sum::<Complex64>();
        let omega0 = self
            .ctx
            .lattice()
            .vector_of(defect, 1e-6)
            .expect("antiholomorphic image of an Abel defect is a lattice vector");
        Self { ctx: self.ctx.clone(), zeros, poles, lambda, c, omega0 }
    }

    /// Evaluate on any holomorphic carrier; no pole guard.
    pub fn eval_raw<T: Holo>(&self, z: T) -> T {
        let mut num = T::constant(self.c);
        let mut expo = z * self.lambda;
        for a in &self.zeros {
            let s = self.ctx.sigma_parts(z - *a);
            num = num * s.mantissa;
            expo = expo + s.exponent;
        }
        let mut den = T::constant(Complex64::new(1.0, 0.0));
        for b in &self.poles {
            let s = self.ctx.sigma_parts(z - *b);
            den = den * s.mantissa;
            expo = expo - s.exponent;
        }
        num / den * expo.exp()
    }

    /// Distance from `z` to the nearest pole orbit.
    pub fn pole_distance(&self, z: Complex64) -> f64 {
        let lat = self.ctx.lattice();
        self.poles
            .iter()
            .map(|b| lat.torus_distance(z, *b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Value on the Riemann sphere.
    pub fn eval(&self, z: Complex64) -> SphereValue {
        if self.pole_distance(z) < POLE_RADIUS {
            return SphereValue::Infinity;
        }
        let v = self.eval_raw(z);
        if v.is_finite() {
            SphereValue::Finite(v)
        } else {
            SphereValue::Infinity
        }
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        self.eval_raw(z)
    }

    /// `(f, f', f'')` at `z`.
    pub fn jet(&self, z: Complex64) -> CJet {
        self.eval_raw(CJet::variable(z))
    }

    /// Logarithmic derivative `f'/f`.
    pub fn log_derivative(&self, z: Complex64) -> Complex64 {
        let mut acc = self.lambda;
        for a in &self.zeros {
            acc += self.ctx.zeta(z - *a);
        }
        for b in &self.poles {
            acc -= self.ctx.zeta(z - *b);
        }
        acc
    }

    /// Newton refinement of a zero from a nearby seed.
    pub fn refine_zero(&self, seed: Complex64) -> Option<Complex64> {
        newton(|z| {
            let j = self.jet(z);
            (j.v, j.d1)
        }, seed)
    }

    /// Newton refinement of a pole, run on the reciprocal.
    pub fn refine_pole(&self, seed: Complex64) -> Option<Complex64> {
        self.recip().refine_zero(seed)
    }

    /// Degree from an argument-principle scan, independent of the stored divisor.
    ///
    /// The periodic line integral `I(y) = (1/2 pi i) int_0^1 f'/f(x + iy) dx` is
    /// piecewise constant in `y` and jumps by the order of every zero or pole it
    /// crosses. Positive jumps accumulate the zero count. The scan is repeated
    /// along the second generator and the larger count is taken, which resolves
    /// a zero and a pole sharing a band in one direction.
    pub fn degree_by_argument_principle(&self) -> Result<u32, DivisorError> {
        let lat = *self.ctx.lattice();
        let (w1, w2) = (lat.omega1(), lat.omega2());
        let a = self.scan_direction(w1, w2)?;
        let b = self.scan_direction(w2, -w1)?;
        Ok(a.max(b))
    }

    fn scan_direction(&self, along: Complex64, across: Complex64) -> Result<u32, DivisorError> {
        const LINES: usize = 64;
        const SAMPLES: usize = 2048;
        const SHIFTS: usize = 10;
        let line_integral = |t: f64| -> Option<i64> {
            let base = across * t;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..SAMPLES {
                let z = base + along * (k as f64 / SAMPLES as f64);
                let v = self.log_derivative(z);
                if !v.is_finite() {
                    return None;
                }
                acc += v;
            }
            let winding = acc * along / SAMPLES as f64 / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
            let k = winding.re.round();
            ((winding - k).norm() < 0.05).then_some(k as i64)
        };
        'shift: for attempt in 0..SHIFTS {
            let offset = (0.5 + attempt as f64 * 0.618_033_988_749_895).fract() / LINES as f64;
            let mut counts = Vec::with_capacity(LINES + 1);
            for l in 0..=LINES {
                let t = offset + l as f64 / LINES as f64;
                match line_integral(t) {
                    Some(k) => counts.push(k),
                    None => continue 'shift,
                }
            }
            if counts.first() != counts.last() {
                continue;
            }
            let up: i64 = counts.windows(2).map(|w| (w[0] - w[1]).max(0)).sum();
            return Ok(up as u32);
        }
        Err(DivisorError::ContourThroughSingularity(SHIFTS))
    }
}

fn newton(f: impl Fn(Complex64) -> (Complex64, Complex64), seed: Complex64) -> Option<Complex64> {
    let mut z = seed;
    for _ in 0..60 {
        let (v, d) = f(z);
        if !(v.is_finite() && d.is_finite()) || d.norm() == 0.0 {
            return None;
        }
        let step = v / d;
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    Some(z)
}

/// General constructor: function with the given divisor, scaled by `c`.
pub fn build_elliptic(
    divisor: &Divisor,
    ctx: Arc<EllipticContext>,
    c: Complex64,
) -> Result<EllipticFunctionRep, DivisorError> {
    let (np, nz) = (divisor.pole_degree(), divisor.zero_degree());
    if np != nz {
        return Err(DivisorError::DegreeMismatch { poles: np, zeros: nz });
    }
    let lat = *ctx.lattice();
    let reduce = |v: &[(Complex64, u32)]| -> Vec<(Complex64, u32)> {
        v.iter().map(|(p, k)| (lat.reduce(*p), *k)).collect()
    };
    let zeros = expand(&reduce(&divisor.zeros));
    let poles = expand(&reduce(&divisor.poles));
    EllipticFunctionRep::from_representatives(ctx, zeros, poles, c)
}

/// The degree-4 function `g` with `g(conj(z) + 1/2) * conj(g(z)) = -1`.
///
/// Zeros are placed at `conj(b_k) + 1/2`; the constant is
/// `c = exp(-eta(1)(1 + R)/2)` with `R = sum Re b_k`.
#[derive(Clone, Debug)]
pub struct SymmetricG {
    pub rep: EllipticFunctionRep,
    pub poles: [Complex64; 4],
    /// Parity index `l` in `sum Im b_k = (2l + 1) r / 2`.
    pub l: i64,
    pub r: f64,
}

pub fn build_symmetric_g(
    poles: [Complex64; 4],
    ctx: Arc<EllipticContext>,
) -> Result<SymmetricG, DivisorError> {
    let lat = *ctx.lattice();
    let one = Complex64::new(1.0, 0.0);
    if (lat.omega1() - one).norm() > 1e-15 || lat.omega2().re.abs() > 1e-15 {
        return Err(DivisorError::NotRectangular);
    }
    let r = lat.omega2().im;
    for b in &poles {
        let inside = (-1e-12..=1.0 + 1e-12).contains(&b.re) && (-1e-12..=r + 1e-12).contains(&b.im);
        if !(inside && b.is_finite()) {
            return Err(DivisorError::PoleOutsideDomain(*b));
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let d = lat.torus_distance(poles[i], poles[j]);
            if d > 0.0 && d < MIN_POLE_SEPARATION {
                return Err(DivisorError::PolesTooClose(poles[i], poles[j]));
            }
        }
    }
    let sum_im: f64 = poles.iter().map(|b| b.im).sum();
    let half_units = 2.0 * sum_im / r;
    let k = half_units.round();
    let odd = (k as i64).rem_euclid(2) == 1;
    if (half_units - k).abs() > 1e-9 || !odd {
        return Err(DivisorError::ParityViolation { sum: sum_im, r });
    }
    // snap onto the exact constraint
    let shift = (k * r / 2.0 - sum_im) / 4.0;
    let mut snapped = poles;
    for b in snapped.iter_mut() {
        b.im += shift;
    }
    let l = (k as i64 - 1) / 2;
    let zeros: Vec<Complex64> = snapped.iter().map(|b| b.conj() + 0.5).collect();
    let big_r: f64 = snapped.iter().map(|b| b.re).sum();
    let eta1 = ctx.eta(LatticeVector::new(1, 0));
    let c = (-eta1 * 0.5 * (1.0 + big_r)).exp();
    let rep = EllipticFunctionRep::from_representatives(ctx, zeros, snapped.to_vec(), c)?;
    Ok(SymmetricG { rep, poles: snapped, l, r })
}

/// How the two zeros of `phi1` are chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZeroPlacement {
    /// Free first zero `p1`; the second is `b1 + b2 - p1`.
    Free(Complex64),
    /// A double zero at the given point.
    Double(Complex64),
}

/// The degree-2 function `phi1` with poles `b1, b2` and the chosen zeros.
#[derive(Clone, Debug)]
pub struct Phi1 {
    pub rep: EllipticFunctionRep,
    /// Zeros actually used, after any collision perturbation.
    pub zeros: [Complex64; 2],
    /// Perturbation applied to the zeros (0 when none was needed).
    pub epsilon: f64,
}

pub fn build_phi1(
    b1: Complex64,
    b2: Complex64,
    placement: ZeroPlacement,
    g: &EllipticFunctionRep,
) -> Result<Phi1, DivisorError> {
    let ctx = g.context().clone();
    let lat = *ctx.lattice();
    for b in [b1, b2] {
        if g.pole_distance(b) > MEMBERSHIP_TOL {
            return Err(DivisorError::DegenerateChoice(format!("{b} is not a pole of g")));
        }
    }
    if b1 == b2 {
        let mult = g.pole_representatives().iter().filter(|p| lat.torus_distance(**p, b1) < MEMBERSHIP_TOL).count();
        if mult < 2 {
            return Err(DivisorError::DegenerateChoice(format!(
                "double pole requested at {b1}, which is a simple pole of g"
            )));
        }
    }
    let (p1, p2) = match placement {
        ZeroPlacement::Free(p1) => {
            if lat.torus_distance(p1, b1) < MEMBERSHIP_TOL || lat.torus_distance(p1, b2) < MEMBERSHIP_TOL {
                return Err(DivisorError::DegenerateChoice(format!("p1 = {p1} coincides with a pole")));
            }
            (p1, b1 + b2 - p1)
        }
        ZeroPlacement::Double(p) => {
            let defect = b1 + b2 - p * 2.0;
            if lat.vector_of(defect, MEMBERSHIP_TOL).is_none() {
                return Err(DivisorError::DegenerateChoice(format!(
                    "no elliptic function with poles {b1}, {b2} and a double zero at {p}: \
                     b1 + b2 - 2p = {defect} is not a lattice vector"
                )));
            }
            (p, p + lat.point(lat.vector_of(defect, MEMBERSHIP_TOL).unwrap()))
        }
    };
    let separated = |p: Complex64| g.pole_distance(p) >= MIN_POLE_SEPARATION;
    let mut eps = 0.0;
    let (mut q1, mut q2) = (p1, p2);
    if !(separated(q1) && separated(q2)) {
        if matches!(placement, ZeroPlacement::Double(_)) {
            return Err(DivisorError::DegenerateChoice("double zero lies on a pole of g".into()));
        }
        eps = 1e-4;
        loop {
            q1 = p1 + eps;
            q2 = p2 - eps;
            if separated(q1) && separated(q2) {
                break;
            }
            eps *= 2.0;
            if eps > 1e-2 {
                return Err(DivisorError::DegenerateChoice(
                    "no perturbation up to 1e-2 separates the zeros from the poles of g".into(),
                ));
            }
        }
    }
    let rep = EllipticFunctionRep::from_representatives(ctx, vec![q1, q2], vec![b1, b2], Complex64::new(1.0, 0.0))?;
    Ok(Phi1 { rep, zeros: [q1, q2], epsilon: eps })
}

/// The full set `(g, phi1, phi2, psi1, psi2)` for the involution `z -> conj(z) + 1/2`.
#[derive(Clone, Debug)]
pub struct ImmersionTriple {
    pub g: EllipticFunctionRep,
    pub phi1: EllipticFunctionRep,
    pub phi2: EllipticFunctionRep,
    pub psi1: EllipticFunctionRep,
    pub psi2: EllipticFunctionRep,
}

/// Klein involution on a rectangular torus.
pub fn klein_involution(z: Complex64) -> Complex64 {
    z.conj() + 0.5
}

/// `phi2 = phi1 / g`, `psi2 = conj(phi1 o I)`, `psi1 = -conj(phi2 o I)`.
pub fn derive_triple(g: &EllipticFunctionRep, phi1: &EllipticFunctionRep) -> ImmersionTriple {
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let phi2 = phi1.div(g);
    let psi2 = phi1.conj_compose(one, half);
    let psi1 = phi2.conj_compose(one, half).scale(-one);
    ImmersionTriple { g: g.clone(), phi1: phi1.clone(), phi2, psi1, psi2 }
}

/// Pole set of `f` contained in the pole (or zero) set of `g`, order by order.
pub fn poles_contained(f: &EllipticFunctionRep, target: &Divisor, use_zeros: bool) -> bool {
    let lat = *f.context().lattice();
    let set = if use_zeros { &target.zeros } else { &target.poles };
    f.divisor().poles.iter().all(|(p, k)| {
        set.iter()
            .any(|(q, kq)| lat.torus_distance(*p, *q) < MEMBERSHIP_TOL && k <= kq)
    })
}

impl ImmersionTriple {
    /// The four pole containments: poles of phi1, psi1 inside poles of g and
    /// poles of phi2, psi2 inside zeros of g, with orders bounded.
    pub fn containments(&self) -> [bool; 4] {
        let gd = self.g.divisor();
        [
            poles_contained(&self.phi1, &gd, false),
            poles_contained(&self.phi2, &gd, true),
            poles_contained(&self.psi1, &gd, false),
            poles_contained(&self.psi2, &gd, true),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx(r: f64) -> Arc<EllipticContext> {
        Arc::new(EllipticContext::new(Lattice::rectangular(r).unwrap()).unwrap())
    }

    fn reference_poles() -> [Complex64; 4] {
        [c(0.1, 0.125), c(0.35, 0.125), c(0.6, 0.125), c(0.85, 0.125)]
    }

    #[test]
    fn constant_function() {
        let f = build_elliptic(&Divisor::empty(), ctx(1.0), c(5.0, 0.0)).unwrap();
        assert_eq!(f.eval(c(0.3, 0.2)), SphereValue::Finite(c(5.0, 0.0)));
        assert_eq!(f.degree(), 0);
    }

    #[test]
    fn abel_violation_and_degree_mismatch() {
        let d = Divisor::new(vec![(c(0.3, 0.0), 1)], vec![(c(0.0, 0.0), 1)]);
        assert!(matches!(build_elliptic(&d, ctx(1.0), c(1.0, 0.0)), Err(DivisorError::AbelViolation(_))));
        let d = Divisor::new(vec![(c(0.3, 0.0), 2)], vec![(c(0.0, 0.0), 1)]);
        assert!(matches!(build_elliptic(&d, ctx(1.0), c(1.0, 0.0)), Err(DivisorError::DegreeMismatch { .. })));
    }

    #[test]
    fn degree_two_function_is_periodic() {
        let (b, z0) = (c(0.2, 0.3), c(0.1, 0.1));
        let d = Divisor::new(vec![(b, 1), (-b, 1)], vec![(z0, 1), (-z0, 1)]);
        let f = build_elliptic(&d, ctx(1.0), c(1.0, 0.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let z = c(rng.gen(), rng.gen());
            let v = f.value(z);
            assert!((f.value(z + 1.0) - v).norm() < 1e-9 * (1.0 + v.norm()));
            assert!((f.value(z + c(0.0, 1.0)) - v).norm() < 1e-9 * (1.0 + v.norm()));
        }
        assert_eq!(f.degree(), 2);
        assert!(f.eval(b).is_infinite());
    }

    #[test]
    fn reciprocal_multiplies_to_one() {
        let g = build_symmetric_g(reference_poles(), ctx(1.0)).unwrap().rep;
        let inv = g.recip();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let z = c(rng.gen(), rng.gen());
            assert!((g.value(z) * inv.value(z) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn symmetric_g_identity() {
        for (r, poles) in [
            (1.0, reference_poles()),
            (1.5, [c(0.2, 0.2), c(0.4, 0.3), c(0.6, 0.1), c(0.8, 0.15)]),
        ] {
            let g = build_symmetric_g(poles, ctx(r)).unwrap();
            assert_eq!(g.l, 0);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..200 {
                let z = c(rng.gen(), rng.gen::<f64>() * r);
                let h = g.rep.value(klein_involution(z)) * g.rep.value(z).conj();
                assert!((h + 1.0).norm() < 1e-8, "r={r} z={z} h={h}");
            }
            assert_eq!(g.rep.degree(), 4);
        }
    }

    #[test]
    fn parity_violation() {
        let mut p = reference_poles();
        p[0] = c(0.1, 0.1);
        assert!(matches!(build_symmetric_g(p, ctx(1.0)), Err(DivisorError::ParityViolation { .. })));
        let mut p = reference_poles();
        p[0] = c(1.4, 0.125);
        assert!(matches!(build_symmetric_g(p, ctx(1.0)), Err(DivisorError::PoleOutsideDomain(_))));
    }

    #[test]
    fn phi1_reference_zeros() {
        let g = build_symmetric_g(reference_poles(), ctx(1.0)).unwrap().rep;
        let phi = build_phi1(c(0.1, 0.125), c(0.35, 0.125), ZeroPlacement::Free(c(0.2, 0.3)), &g).unwrap();
        assert_eq!(phi.epsilon, 0.0);
        assert!((phi.zeros[1] - c(0.25, -0.05)).norm() < 1e-15);
        assert_eq!(phi.rep.degree(), 2);
        assert!(phi.rep.value(c(0.2, 0.3)).norm() < 1e-12);
        assert!(phi.rep.value(c(0.25, 0.95)).norm() < 1e-12);
    }

    #[test]
    fn phi1_collision_is_perturbed() {
        let g = build_symmetric_g(reference_poles(), ctx(1.0)).unwrap().rep;
        let (b1, b2) = (c(0.1, 0.125), c(0.35, 0.125));
        // p2 = b1 + b2 - p1 lands on the pole b3
        let p1 = b1 + b2 - c(0.6, 0.125);
        let phi = build_phi1(b1, b2, ZeroPlacement::Free(p1), &g).unwrap();
        assert!(phi.epsilon > 0.0 && phi.epsilon <= 1e-2);
        let s = phi.zeros[0] + phi.zeros[1];
        assert!((s - (b1 + b2)).norm() < 1e-15);
        assert!(g.pole_distance(phi.zeros[1]) >= MIN_POLE_SEPARATION);
    }

    #[test]
    fn quadruple_pole_has_no_double_zero_partner() {
        let b = c(0.3, 0.125);
        let g = build_symmetric_g([b; 4], ctx(1.0)).unwrap().rep;
        let err = build_phi1(b, b, ZeroPlacement::Double(klein_involution(b)), &g);
        assert!(matches!(err, Err(DivisorError::DegenerateChoice(_))));
    }

    #[test]
    fn triple_identities() {
        let g = build_symmetric_g(reference_poles(), ctx(1.0)).unwrap().rep;
        let phi = build_phi1(c(0.1, 0.125), c(0.35, 0.125), ZeroPlacement::Free(c(0.2, 0.3)), &g).unwrap();
        let t = derive_triple(&g, &phi.rep);
        assert_eq!(t.containments(), [true; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let z = c(rng.gen(), rng.gen());
            let iz = klein_involution(z);
            let scale = 1.0 + t.phi1.value(iz).norm();
            assert!((t.phi1.value(iz) - t.psi2.value(z).conj()).norm() / scale < 1e-9);
            let scale = 1.0 + t.psi1.value(iz).norm();
            assert!((t.psi1.value(iz) + t.phi2.value(z).conj()).norm() / scale < 1e-9);
            let scale = 1.0 + t.psi1.value(z).norm();
            assert!((t.psi1.value(z) - t.psi2.value(z) * g.value(z)).norm() / scale < 1e-9);
        }
    }

    #[test]
    fn argument_principle_degree() {
        let g = build_symmetric_g(reference_poles(), ctx(1.0)).unwrap().rep;
        assert_eq!(g.degree_by_argument_principle().unwrap(), 4);
        let phi = build_phi1(c(0.1, 0.125), c(0.35, 0.125), ZeroPlacement::Free(c(0.2, 0.3)), &g).unwrap();
        assert_eq!(phi.rep.degree_by_argument_principle().unwrap(), 2);
        let k = EllipticFunctionRep::constant(ctx(1.0), c(2.0, 0.0));
        assert_eq!(k.degree_by_argument_principle().unwrap(), 0);
    }
}
