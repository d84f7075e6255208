#![allow(clippy::approx_constant, clippy::excessive_precision)]

//! Double-double complex arithmetic and series evaluations of `J_n`, `Y_n`.
//!
//! Roughly 31 significant digits per operation. Used as an independent
//! reference for the f64 special functions; shares no code with them.

#![allow(dead_code)]

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: 3.141592653589793,
        lo: 1.2246467991473532e-16,
    };
    pub const LN2: Dd = Dd {
        hi: 0.6931471805599453,
        lo: 2.3190468138462996e-17,
    };
    pub const GAMMA: Dd = Dd {
        hi: 0.5772156649015329,
        lo: -4.942915152430645e-18,
    };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn scale(self, s: f64) -> Dd {
        self * Dd::new(s)
    }

    pub fn sqr(self) -> Dd {
        self * self
    }

    pub fn exp(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi / Dd::LN2.hi).round();
        let r = (self - Dd::LN2.scale(k)).scale(1.0 / 1024.0);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for i in 1..40 {
            term = term * r / Dd::new(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum.sqr();
        }
        sum.scale(2f64.powi(k as i32))
    }

    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0);
        let mut y = Dd::new(self.hi.ln());
        for _ in 0..3 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    /// `(sin x, cos x)` for moderate `|x|`.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let r = self.scale(1.0 / 16.0);
        let r2 = r.sqr();
        let mut term = r;
        let mut s = r;
        let mut i = 1.0;
        loop {
            term = -(term * r2) / Dd::new((i + 1.0) * (i + 2.0));
            s = s + term;
            i += 2.0;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        let mut c = (Dd::ONE - s.sqr()).sqrt();
        for _ in 0..4 {
            let s2 = (s * c).scale(2.0);
            c = Dd::ONE - s.sqr().scale(2.0);
            s = s2;
        }
        (s, c)
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = Dd::new(self.hi.sqrt());
        x + (self - x.sqr()) / x.scale(2.0)
    }

    /// Two-argument arctangent.
    pub fn atan2(y: Dd, x: Dd) -> Dd {
        let mut t = Dd::new(y.hi.atan2(x.hi));
        for _ in 0..2 {
            let (s, c) = t.sin_cos();
            t = t + (y * c - x * s) / (x * c + y * s);
        }
        t
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi));
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::new(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::new(q2);
        let q3 = r.hi / b.hi;
        Dd::new(q1) + Dd::new(q2) + Dd::new(q3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: Cdd = Cdd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };
    pub const I: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ONE,
    };

    pub fn from_c64(z: Complex64) -> Cdd {
        Cdd {
            re: Dd::new(z.re),
            im: Dd::new(z.im),
        }
    }

    pub fn real(x: Dd) -> Cdd {
        Cdd { re: x, im: Dd::ZERO }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn scale(self, s: Dd) -> Cdd {
        Cdd {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re.sqr() + self.im.sqr()
    }

    pub fn ln(self) -> Cdd {
        Cdd {
            re: self.norm_sqr().ln().scale(0.5),
            im: Dd::atan2(self.im, self.re),
        }
    }

    pub fn exp(self) -> Cdd {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Cdd {
            re: m * c,
            im: m * s,
        }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re + b.re,
            im: self.im + b.im,
        }
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re - b.re,
            im: self.im - b.im,
        }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re * b.re - self.im * b.im,
            im: self.re * b.im + self.im * b.re,
        }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, b: Cdd) -> Cdd {
        let d = b.norm_sqr();
        Cdd {
            re: (self.re * b.re + self.im * b.im) / d,
            im: (self.im * b.re - self.re * b.im) / d,
        }
    }
}

fn factorial(n: usize) -> Dd {
    (1..=n).fold(Dd::ONE, |acc, k| acc * Dd::new(k as f64))
}

fn harmonic(n: usize) -> Dd {
    (1..=n).fold(Dd::ZERO, |acc, k| acc + Dd::ONE / Dd::new(k as f64))
}

fn powi(z: Cdd, n: usize) -> Cdd {
    (0..n).fold(Cdd::ONE, |acc, _| acc * z)
}

/// `J_n(z)` by the ascending series in double-double.
pub fn bessel_j(n: usize, z: Complex64) -> Cdd {
    let half = Cdd::from_c64(z).scale(Dd::new(0.5));
    let q = -(half * half);
    let mut term = Cdd::real(Dd::ONE / factorial(n));
    let mut sum = term;
    let mut largest = term.norm_sqr().hi;
    for k in 1..400 {
        term = term * q / Cdd::real(Dd::new((k * (n + k)) as f64));
        sum = sum + term;
        let t = term.norm_sqr().hi;
        largest = largest.max(t);
        if t < 1e-70 * largest && k > 5 {
            break;
        }
    }
    sum * powi(half, n)
}

/// `Y_n(z)` by the integer-order Neumann series in double-double.
pub fn bessel_y(n: usize, z: Complex64) -> Cdd {
    let zz = Cdd::from_c64(z);
    let half = zz.scale(Dd::new(0.5));
    let q = -(half * half);
    let inv_pi = Dd::ONE / Dd::PI;

    let mut finite = Cdd::ZERO;
    if n > 0 {
        let inv_half_n = Cdd::ONE / powi(half, n);
        let mut hp = Cdd::ONE;
        for k in 0..n {
            let c = factorial(n - k - 1) / factorial(k);
            finite = finite + (hp * inv_half_n).scale(c);
            hp = hp * half * half;
        }
    }

    let log_term = (half.ln()).scale(Dd::new(2.0)) * bessel_j(n, z);

    let mut term = Cdd::real(Dd::ONE / factorial(n));
    let mut sum = Cdd::ZERO;
    let mut largest = 0.0f64;
    for k in 0..400 {
        if k > 0 {
            term = term * q / Cdd::real(Dd::new((k * (n + k)) as f64));
        }
        let psi = harmonic(k) + harmonic(n + k) - Dd::GAMMA.scale(2.0);
        let t = term.scale(psi);
        sum = sum + t;
        let m = t.norm_sqr().hi;
        largest = largest.max(m);
        if k > 5 && m < 1e-70 * largest {
            break;
        }
    }
    let series = sum * powi(half, n);
    (log_term - finite - series).scale(inv_pi)
}

pub fn hankel1(n: usize, z: Complex64) -> Cdd {
    bessel_j(n, z) + Cdd::I * bessel_y(n, z)
}

/// `d/dz H_n^{(1)}` from the order recurrence, with `H_{-1} = -H_1`.
pub fn hankel1_prime(n: usize, z: Complex64) -> Cdd {
    let zz = Cdd::from_c64(z);
    if n == 0 {
        return -hankel1(1, z);
    }
    hankel1(n - 1, z) - hankel1(n, z).scale(Dd::new(n as f64)) / zz
}

pub fn bessel_j_prime(n: usize, z: Complex64) -> Cdd {
    let zz = Cdd::from_c64(z);
    if n == 0 {
        return -bessel_j(1, z);
    }
    bessel_j(n - 1, z) - bessel_j(n, z).scale(Dd::new(n as f64)) / zz
}

pub fn rel_err(a: Complex64, b: Cdd) -> f64 {
    let b = b.to_c64();
    (a - b).norm() / b.norm()
}
