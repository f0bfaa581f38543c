//! Second-order forward-mode jets.
//!
//! Two carriers are used throughout the crate:
//!
//! * [`CJet`] is a truncated Taylor expansion `(h, h', h'')` of a holomorphic
//!   function of one complex variable. Meromorphic building blocks (sigma
//!   quotients, polynomials) are evaluated on it to get exact derivatives.
//! * [`Dual2`] is a real second-order jet in the two real coordinates `x, y`
//!   of `z = x + iy`. Expressions that mix a function with its complex
//!   conjugate are evaluated on `Complex<Dual2>`, where conjugation simply
//!   negates the imaginary carrier.
//!
//! [`Holo`] and [`Real`] abstract over the plain scalar and the jet so the
//! same evaluation code serves both value-only and differentiated paths.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::{Complex, Complex64};

/// Scalar field used by holomorphic evaluation code.
pub trait Holo:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<Complex64, Output = Self>
    + Sub<Complex64, Output = Self>
    + Mul<Complex64, Output = Self>
{
    fn constant(c: Complex64) -> Self;
    /// The point value, with derivative information dropped.
    fn value(&self) -> Complex64;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn recip(self) -> Self {
        Self::constant(Complex64::new(1.0, 0.0)) / self
    }
}

impl Holo for Complex64 {
    #[inline]
    fn constant(c: Complex64) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> Complex64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    #[inline]
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
}

/// Truncated Taylor jet `(h, h', h'')` of a holomorphic function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CJet {
    pub v: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl CJet {
    pub const fn new(v: Complex64, d1: Complex64, d2: Complex64) -> Self {
        Self { v, d1, d2 }
    }

    /// The identity function seeded at `z`.
    pub fn variable(z: Complex64) -> Self {
        Self::new(z, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Apply a scalar function given its value and first two derivatives at `self.v`.
    #[inline]
    fn chain(self, f0: Complex64, f1: Complex64, f2: Complex64) -> Self {
        Self::new(f0, f1 * self.d1, f2 * self.d1 * self.d1 + f1 * self.d2)
    }

    /// Lift to the real `(x, y)` jet of `h(x + iy)` using the Cauchy–Riemann relations.
    pub fn to_xy(self) -> Complex<Dual2> {
        let i = Complex64::new(0.0, 1.0);
        let hx = self.d1;
        let hy = i * self.d1;
        let hxx = self.d2;
        let hxy = i * self.d2;
        let hyy = -self.d2;
        Complex::new(
            Dual2 {
                v: self.v.re,
                dx: hx.re,
                dy: hy.re,
                dxx: hxx.re,
                dxy: hxy.re,
                dyy: hyy.re,
            },
            Dual2 {
                v: self.v.im,
                dx: hx.im,
                dy: hy.im,
                dxx: hxx.im,
                dxy: hxy.im,
                dyy: hyy.im,
            },
        )
    }
}

impl Add for CJet {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for CJet {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for CJet {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }
}

impl Div for CJet {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.v.inv();
        let r = inv;
        let r1 = -o.d1 * inv * inv;
        let r2 = (2.0 * o.d1 * o.d1 * inv - o.d2) * inv * inv;
        self * Self::new(r, r1, r2)
    }
}

impl Neg for CJet {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d1, -self.d2)
    }
}

impl Add<Complex64> for CJet {
    type Output = Self;
    #[inline]
    fn add(self, c: Complex64) -> Self {
        Self::new(self.v + c, self.d1, self.d2)
    }
}

impl Sub<Complex64> for CJet {
    type Output = Self;
    #[inline]
    fn sub(self, c: Complex64) -> Self {
        Self::new(self.v - c, self.d1, self.d2)
    }
}

impl Mul<Complex64> for CJet {
    type Output = Self;
    #[inline]
    fn mul(self, c: Complex64) -> Self {
        Self::new(self.v * c, self.d1 * c, self.d2 * c)
    }
}

impl Holo for CJet {
    fn constant(c: Complex64) -> Self {
        Self::new(c, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }
    #[inline]
    fn value(&self) -> Complex64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn sin(self) -> Self {
        let s = self.v.sin();
        let c = self.v.cos();
        self.chain(s, c, -s)
    }
}

/// Real scalar used by code that must run both on `f64` and on [`Dual2`].
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn cst(c: f64) -> Self;
    fn val(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn cst(c: f64) -> Self {
        c
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

/// Real second-order jet in the two coordinates `(x, y)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Dual2 {
    pub fn x(x: f64) -> Self {
        Self { v: x, dx: 1.0, ..Default::default() }
    }

    pub fn y(y: f64) -> Self {
        Self { v: y, dy: 1.0, ..Default::default() }
    }

    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f0,
            dx: f1 * self.dx,
            dy: f1 * self.dy,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxy: f2 * self.dx * self.dy + f1 * self.dxy,
            dyy: f2 * self.dy * self.dy + f1 * self.dyy,
        }
    }
}

impl Add for Dual2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Dual2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        self * o.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Add<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl Sub<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn mul(self, c: f64) -> Self {
        Self {
            v: self.v * c,
            dx: self.dx * c,
            dy: self.dy * c,
            dxx: self.dxx * c,
            dxy: self.dxy * c,
            dyy: self.dyy * c,
        }
    }
}

impl Div<f64> for Dual2 {
    type Output = Self;
    #[inline]
    fn div(self, c: f64) -> Self {
        self * (1.0 / c)
    }
}

impl AddAssign for Dual2 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for Dual2 {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign for Dual2 {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl Real for Dual2 {
    fn cst(c: f64) -> Self {
        Self { v: c, ..Default::default() }
    }
    #[inline]
    fn val(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
}

/// Complex arithmetic helpers on a [`Real`] carrier.
pub fn cmul<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    Complex::new(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)
}

pub fn cdiv<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    let d = b.re * b.re + b.im * b.im;
    Complex::new(
        (a.re * b.re + a.im * b.im) / d,
        (a.im * b.re - a.re * b.im) / d,
    )
}

pub fn cadd<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    Complex::new(a.re + b.re, a.im + b.im)
}

pub fn csub<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    Complex::new(a.re - b.re, a.im - b.im)
}

pub fn cconj<T: Real>(a: Complex<T>) -> Complex<T> {
    Complex::new(a.re, -a.im)
}

pub fn cnorm_sqr<T: Real>(a: Complex<T>) -> T {
    a.re * a.re + a.im * a.im
}

pub fn creal<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::cst(0.0))
}

pub fn cconst<T: Real>(c: Complex64) -> Complex<T> {
    Complex::new(T::cst(c.re), T::cst(c.im))
}
