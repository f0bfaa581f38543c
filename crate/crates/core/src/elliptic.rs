//! Weierstrass sigma function and the eta quasi-period homomorphism.
//!
//! Sigma is evaluated through the Jacobi theta function `theta_1` in the nome
//! `q = exp(i pi tau)` on the normalized lattice `Z + tau Z`:
//!
//! ```text
//! sigma(z) = (1/pi) exp(eta(1) z^2 / 2) theta_1(pi z) / theta_1'(0)
//! eta(1)   = -(pi^2 / 3) theta_1'''(0) / theta_1'(0)
//! ```
//!
//! Arguments are first reduced to the cell centred at the origin and the
//! quasi-periodicity factor `-exp(eta(w)(z + w/2))` is applied exactly, so the
//! series only ever sees `|Im z| <= Im(tau)/2`.
//!
//! Values are returned in split form `mantissa * exp(exponent)`; products and
//! quotients of many sigma factors add exponents before exponentiating once.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::EllipticError;
use crate::jet::Holo;
use crate::lattice::{Lattice, LatticeVector, MEMBERSHIP_TOL};

pub const DEFAULT_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 2000;

/// `value = mantissa * exp(exponent)`.
#[derive(Clone, Copy, Debug)]
pub struct SigmaParts<T> {
    pub mantissa: T,
    pub exponent: T,
}

impl<T: Holo> SigmaParts<T> {
    pub fn value(self) -> T {
        self.mantissa * self.exponent.exp()
    }
}

/// Immutable evaluation context for sigma and eta on one lattice.
#[derive(Clone, Debug)]
pub struct EllipticContext {
    lattice: Lattice,
    tau: Complex64,
    /// eta(1), eta(tau) on the normalized lattice `Z + tau Z`.
    eta1: Complex64,
    eta_tau: Complex64,
    /// theta_1 coefficients `(-1)^n q^{(n+1/2)^2}`, length = nome truncation.
    coeffs: Vec<Complex64>,
    theta1_prime0: Complex64,
    tol: f64,
    legendre_residual: f64,
}

impl EllipticContext {
    pub fn new(lattice: Lattice) -> Result<Self, EllipticError> {
        Self::with_tol(lattice, DEFAULT_TOL)
    }

    pub fn with_tol(lattice: Lattice, tol: f64) -> Result<Self, EllipticError> {
        let tau = lattice.tau();
        let im = tau.im;
        // magnitude of the n-th theta_1 term at |Im z| = Im(tau)/2
        let log_term = |n: usize| {
            let h = n as f64 + 0.5;
            -PI * im * h * h + (2.0 * n as f64 + 1.0) * PI * im / 2.0
        };
        let log_max = (0..MAX_TERMS)
            .map(log_term)
            .take_while(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut terms = None;
        for n in 1..MAX_TERMS {
            if log_term(n) < tol.ln() + log_max {
                terms = Some(n);
                break;
            }
        }
        let terms = terms.ok_or(EllipticError::SeriesNotConverged { tol, terms: MAX_TERMS })?;

        let i_pi_tau = Complex64::new(0.0, PI) * tau;
        let coeffs: Vec<Complex64> = (0..terms)
            .map(|n| {
                let h = n as f64 + 0.5;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                (i_pi_tau * h * h).exp() * sign
            })
            .collect();
        let mut t1 = Complex64::new(0.0, 0.0);
        let mut t3 = Complex64::new(0.0, 0.0);
        for (n, c) in coeffs.iter().enumerate() {
            let k = 2.0 * n as f64 + 1.0;
            t1 += c * k;
            t3 -= c * k * k * k;
        }
        let theta1_prime0 = 2.0 * t1;
        let theta1_triple0 = 2.0 * t3;
        let eta1 = -(PI * PI / 3.0) * theta1_triple0 / theta1_prime0;

        let mut ctx = Self {
            lattice,
            tau,
            eta1,
            eta_tau: Complex64::new(0.0, 0.0),
            coeffs,
            theta1_prime0,
            tol,
            legendre_residual: 0.0,
        };
        // eta(tau) = 2 zeta(tau/2), with zeta = sigma'/sigma from the series
        let half = tau * 0.5;
        let (th, dth) = ctx.theta1_and_derivative(PI * half);
        ctx.eta_tau = eta1 * tau + 2.0 * PI * dth / th;
        ctx.legendre_residual =
            (ctx.eta1 * tau - ctx.eta_tau - Complex64::new(0.0, 2.0 * PI)).norm();
        if ctx.legendre_residual > tol.max(1e-10) * (1.0 + ctx.eta1.norm()) {
            return Err(EllipticError::LegendreResidual(ctx.legendre_residual));
        }
        Ok(ctx)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Number of retained theta_1 terms.
    pub fn nome_truncation(&self) -> usize {
        self.coeffs.len()
    }

    /// `|eta(1) tau - eta(tau) - 2 pi i|` on the normalized lattice.
    pub fn legendre_residual(&self) -> f64 {
        self.legendre_residual
    }

    /// eta of the first generator.
    pub fn eta_omega1(&self) -> Complex64 {
        self.eta1 / self.lattice.omega1()
    }

    /// eta of the second generator.
    pub fn eta_omega2(&self) -> Complex64 {
        self.eta_tau / self.lattice.omega1()
    }

    /// eta is additive: `eta(m omega1 + n omega2) = m eta(omega1) + n eta(omega2)`.
    pub fn eta(&self, v: LatticeVector) -> Complex64 {
        self.eta_omega1() * v.m as f64 + self.eta_omega2() * v.n as f64
    }

    /// eta at integer coordinates given as floats; non-integral input is rejected.
    pub fn eta_coords(&self, m: f64, n: f64) -> Result<Complex64, EllipticError> {
        if (m - m.round()).abs() > MEMBERSHIP_TOL || (n - n.round()).abs() > MEMBERSHIP_TOL {
            return Err(EllipticError::NotLatticeVector(m, n));
        }
        Ok(self.eta(LatticeVector::new(m.round() as i64, n.round() as i64)))
    }

    /// eta of a lattice point given in the plane.
    pub fn eta_at(&self, omega: Complex64) -> Result<Complex64, EllipticError> {
        let (s, t) = self.lattice.coords(omega);
        self.eta_coords(s, t)
    }

    fn theta1_and_derivative(&self, v: Complex64) -> (Complex64, Complex64) {
        let mut th = Complex64::new(0.0, 0.0);
        let mut dth = Complex64::new(0.0, 0.0);
        for (n, c) in self.coeffs.iter().enumerate() {
            let k = 2.0 * n as f64 + 1.0;
            let kv = v * k;
            th += c * kv.sin();
            dth += c * k * kv.cos();
        }
        (2.0 * th, 2.0 * dth)
    }

    /// Split-form sigma on any holomorphic carrier.
    pub fn sigma_parts<T: Holo>(&self, z: T) -> SigmaParts<T> {
        let w1 = self.lattice.omega1();
        let z0 = z * w1.inv();
        let zv = z0.value();
        let n = (zv.im / self.tau.im).round();
        let m = (zv - self.tau * n).re.round();
        let omega = Complex64::new(m, 0.0) + self.tau * n;
        let w = z0 - omega;

        let pi_w = w * Complex64::new(PI, 0.0);
        let mut theta = T::constant(Complex64::new(0.0, 0.0));
        for (k, c) in self.coeffs.iter().enumerate() {
            let kk = 2.0 * k as f64 + 1.0;
            theta = theta + (pi_w * Complex64::new(kk, 0.0)).sin() * *c;
        }
        let (mi, ni) = (m as i64, n as i64);
        let parity = (mi + ni + mi * ni).rem_euclid(2);
        let eps = if parity == 0 { 1.0 } else { -1.0 };
        let scale = Complex64::new(2.0 * eps, 0.0) * w1 / (self.theta1_prime0 * PI);
        let eta_omega = self.eta1 * m + self.eta_tau * n;
        let exponent = w * w * (self.eta1 * 0.5) + (w + omega * 0.5) * eta_omega;
        SigmaParts { mantissa: theta * scale, exponent }
    }

    /// Weierstrass sigma at `z`.
    pub fn sigma(&self, z: Complex64) -> Result<Complex64, EllipticError> {
        if !z.is_finite() {
            return Err(EllipticError::SeriesNotConverged { tol: self.tol, terms: self.coeffs.len() });
        }
        Ok(self.sigma_parts(z).value())
    }

    /// `zeta = sigma'/sigma`.
    pub fn zeta(&self, z: Complex64) -> Complex64 {
        let j = self.sigma_parts(crate::jet::CJet::variable(z));
        // d/dz log(mantissa * exp(exponent))
        j.mantissa.d1 / j.mantissa.v + j.exponent.d1
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

    fn square() -> EllipticContext {
        EllipticContext::new(Lattice::rectangular(1.0).unwrap()).unwrap()
    }

    #[test]
    fn sigma_vanishes_at_origin_with_unit_slope() {
        let ctx = square();
        assert_eq!(ctx.sigma(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let h = 1e-6;
        let slope = (ctx.sigma(c(h, 0.0)).unwrap() - ctx.sigma(c(-h, 0.0)).unwrap()) / (2.0 * h);
        assert!((slope - 1.0).norm() < 1e-8);
    }

    #[test]
    fn quasi_periodicity_square() {
        let ctx = square();
        let z = c(0.3, 0.4);
        let eta1 = ctx.eta(LatticeVector::new(1, 0));
        let lhs = ctx.sigma(z + 1.0).unwrap() + (eta1 * (z + 0.5)).exp() * ctx.sigma(z).unwrap();
        assert!(lhs.norm() < 1e-10, "{lhs}");
    }

    #[test]
    fn conjugation_symmetry_on_real_lattice() {
        let ctx = square();
        let z = c(0.3, 0.4);
        let a = ctx.sigma(z.conj()).unwrap();
        let b = ctx.sigma(z).unwrap().conj();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn eta_homomorphism() {
        let ctx = EllipticContext::new(Lattice::rectangular(2.0).unwrap()).unwrap();
        assert_eq!(ctx.eta(LatticeVector::ZERO), c(0.0, 0.0));
        let lhs = ctx.eta(LatticeVector::new(1, 0)) * c(0.0, 2.0) - ctx.eta(LatticeVector::new(0, 1));
        assert!((lhs - c(0.0, 2.0 * PI)).norm() < 1e-10);
        assert!(matches!(ctx.eta_coords(0.5, 1.0), Err(EllipticError::NotLatticeVector(..))));
        let a = LatticeVector::new(3, -2);
        let b = LatticeVector::new(-1, 5);
        // identical up to the rounding of the integer multiples
        assert!((ctx.eta(a + b) - (ctx.eta(a) + ctx.eta(b))).norm() <= 1e-14 * ctx.eta(a + b).norm());
    }

    #[test]
    fn rectangular_eta_reality() {
        for r in [1.0, 1.3, 2.0, 3.0] {
            let ctx = EllipticContext::new(Lattice::rectangular(r).unwrap()).unwrap();
            assert!(ctx.eta_omega1().im.abs() < 1e-12);
            assert!(ctx.eta_omega2().re.abs() < 1e-12);
        }
    }

    #[test]
    fn general_lattice_quasi_periodicity() {
        let lat = Lattice::new(c(1.3, 0.4), c(-0.2, 1.7)).unwrap();
        let ctx = EllipticContext::new(lat).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let z = lat.omega1() * rng.gen::<f64>() + lat.omega2() * rng.gen::<f64>();
            for v in [LatticeVector::new(1, 0), LatticeVector::new(0, 1), LatticeVector::new(1, 1)] {
                let w = lat.point(v);
                let s = ctx.sigma(z).unwrap();
                let lhs = ctx.sigma(z + w).unwrap() + (ctx.eta(v) * (z + w * 0.5)).exp() * s;
                let scale = ctx.sigma(z + w).unwrap().norm().max(1.0);
                assert!(lhs.norm() / scale < 1e-10);
            }
        }
    }

    #[test]
    fn zeta_matches_finite_difference_of_log_sigma() {
        let ctx = EllipticContext::new(Lattice::rectangular(1.3).unwrap()).unwrap();
        let z = c(0.21, 0.37);
        let h = 1e-5;
        let fd = (ctx.sigma(z + h).unwrap().ln() - ctx.sigma(z - h).unwrap().ln()) / (2.0 * h);
        assert!((ctx.zeta(z) - fd).norm() < 1e-7);
    }

    #[test]
    fn non_finite_input_is_an_error() {
        assert!(square().sigma(c(f64::NAN, 0.0)).is_err());
    }
}
