//! Integer-order Bessel and Hankel functions of complex argument.
//!
//! `J_n` comes from the ascending series for small `|z|` and from Miller's
//! backward recurrence otherwise (normalized with `e^{±iz} = J_0 + 2 Σ (±i)^k J_k`,
//! picking the sign whose exponential does not decay). Near the real axis
//! `H_0^{(1)}`, `H_1^{(1)}` come from Neumann's expansion of `Y_0`, `Y_1` below
//! [`ASYMPTOTIC_SWITCH`] and from the Hankel asymptotic expansion above it.
//! Where `H^{(1)}` is recessive (upper half-plane) it is taken from its integral
//! representation so that `J + iY` never has to cancel. Higher orders follow by
//! forward recurrence.
//!
//! All branch cuts are the principal ones (cut along the negative real axis).

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

type C64 = Complex64;

/// Largest order accepted by the public functions.
pub const MAX_ORDER: usize = 60;
/// Smallest supported `|z|`.
pub const MIN_ABS_ARG: f64 = 1e-8;
/// Largest supported `|z|`.
pub const MAX_ABS_ARG: f64 = 100.0;
/// Above this modulus `H_0`, `H_1` use the asymptotic expansion.
pub const ASYMPTOTIC_SWITCH: f64 = 17.0;
/// Below this modulus `J_n` uses the ascending series.
const SERIES_SWITCH: f64 = 2.0;
/// Beyond this `|Im z|` the Hankel integral replaces `J + iY` for recessive values.
const SPLIT_IM: f64 = 2.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_AT: f64 = 1e250;
const TINY: f64 = 1e-300;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpecfunError {
    #[error("order {order} with |z| = {abs_arg:e} is outside the supported range")]
    Range { order: usize, abs_arg: f64 },
    #[error("argument z = 0 is a singular point")]
    Domain,
    #[error("H^(1)_{order} vanishes to working precision at z = {arg}")]
    Pole { order: usize, arg: C64 },
}

pub type Result<T> = std::result::Result<T, SpecfunError>;

/// A Hankel function value together with its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelEval {
    pub order: usize,
    pub argument: C64,
    pub value: C64,
    pub derivative: C64,
}

impl HankelEval {
    pub fn new(order: usize, argument: C64) -> Result<Self> {
        let seq = hankel1_seq(order, argument)?;
        let value = seq[order];
        let derivative = derivative_from_seq(&seq, order, argument);
        Ok(Self {
            order,
            argument,
            value,
            derivative,
        })
    }
}

fn check_argument(order: usize, z: C64) -> Result<()> {
    let a = z.norm();
    if a == 0.0 {
        return Err(SpecfunError::Domain);
    }
    if !a.is_finite() || !(MIN_ABS_ARG..=MAX_ABS_ARG).contains(&a) || order > MAX_ORDER {
        return Err(SpecfunError::Range { order, abs_arg: a });
    }
    Ok(())
}

fn representable(order: usize, z: C64, v: C64) -> Result<C64> {
    let m = v.norm();
    if m.is_finite() && m > TINY {
        Ok(v)
    } else {
        Err(SpecfunError::Range {
            order,
            abs_arg: z.norm(),
        })
    }
}

/// `J_n(z)`.
pub fn bessel_j(n: usize, z: C64) -> Result<C64> {
    check_argument(n, z)?;
    let v = if z.norm() <= SERIES_SWITCH {
        j_series(n, z)
    } else {
        miller_j(z, n)[n]
    };
    representable(n, z, v)
}

/// `Y_n(z)`.
pub fn bessel_y(n: usize, z: C64) -> Result<C64> {
    check_argument(n, z)?;
    let h = hankel1_seq(n, z)?[n];
    let j = bessel_j(n, z)?;
    representable(n, z, (h - j) * (-I))
}

/// `H^{(1)}_n(z) = J_n(z) + i Y_n(z)`.
pub fn hankel1(n: usize, z: C64) -> Result<C64> {
    check_argument(n, z)?;
    representable(n, z, hankel1_seq(n, z)?[n])
}

/// `H^{(1)'}_n(z) = H^{(1)}_{n-1}(z) - (n/z) H^{(1)}_n(z)`, with `H^{(1)'}_0 = -H^{(1)}_1`.
pub fn hankel1_prime(n: usize, z: C64) -> Result<C64> {
    check_argument(n, z)?;
    let seq = hankel1_seq(n.max(1), z)?;
    representable(n, z, derivative_from_seq(&seq, n, z))
}

/// `J_n'(z)`.
pub fn bessel_j_prime(n: usize, z: C64) -> Result<C64> {
    check_argument(n + 1, z)?;
    if n == 0 {
        return Ok(-bessel_j(1, z)?);
    }
    Ok(bessel_j(n - 1, z)? - bessel_j(n, z)? * (n as f64) / z)
}

/// `H^{(1)}_{n-1}(z) / H^{(1)}_n(z)` for `n >= 1`.
///
/// Evaluated by the forward ratio recurrence `r_{k+1} = 1 / (2k/z - r_k)`
/// started from `H_0/H_1`, so it stays finite when `H_n` itself overflows.
pub fn hankel_ratio(n: usize, z: C64) -> Result<C64> {
    assert!(n >= 1, "hankel_ratio needs n >= 1");
    check_argument(n.min(MAX_ORDER), z)?;
    hankel_ratios(n, z).map(|r| r[n])
}

/// Ratios `r_k = H_{k-1}/H_k` for `k = 1..=n_max`; index 0 of the result holds
/// `H_{-1}/H_0 = -H_1/H_0`.
pub(crate) fn hankel_ratios(n_max: usize, z: C64) -> Result<Vec<C64>> {
    let direct = hankel1_seq(n_max.clamp(1, MAX_ORDER), z)?;
    let mut r = Vec::with_capacity(n_max + 1);
    for k in 0..direct.len() {
        let (num, den) = if k == 0 {
            (-direct[1], direct[0])
        } else {
            (direct[k - 1], direct[k])
        };
        if !(num.is_finite() && den.is_finite()) || num.norm() < TINY {
            break;
        }
        if den.norm() < TINY {
            return Err(SpecfunError::Pole { order: k, arg: z });
        }
        r.push(num / den);
    }
    if r.len() < 2 {
        return Err(SpecfunError::Pole { order: 1, arg: z });
    }
    while r.len() <= n_max {
        let k = r.len() - 1;
        let den = C64::new(2.0 * k as f64, 0.0) / z - r[k];
        if !(den.norm() > TINY) || !den.is_finite() {
            return Err(SpecfunError::Pole {
                order: k + 1,
                arg: z,
            });
        }
        r.push(den.inv());
    }
    r.truncate(n_max + 1);
    Ok(r)
}

fn derivative_from_seq(seq: &[C64], n: usize, z: C64) -> C64 {
    if n == 0 {
        -seq[1]
    } else {
        seq[n - 1] - seq[n] * (n as f64) / z
    }
}

/// `H^{(1)}_k(z)` for `k = 0..=n_max` (at least two entries).
///
/// Deep in the lower half-plane `H^{(1)}_0` carries a large `J`-like part, and
/// recurring upward from it would amplify rounding by about `e^{2|Im z|}`.
/// There the sequence is formed as `2 J_k - H^{(2)}_k` instead, with `H^{(2)}`
/// recurred from its own (recessive in `|z|`) starting values.
pub fn hankel1_seq(n_max: usize, z: C64) -> Result<Vec<C64>> {
    check_argument(1, z)?;
    let len = n_max.max(1) + 1;
    if z.im < -SPLIT_IM {
        let w = z.conj();
        let mut h2 = vec![hankel1_upper(0, w).conj(), hankel1_upper(1, w).conj()];
        recur_up(&mut h2, len, z);
        let j = miller_j(z, len - 1);
        return Ok((0..len).map(|k| j[k] * 2.0 - h2[k]).collect());
    }
    let (h0, h1) = hankel01(z)?;
    let mut h = vec![h0, h1];
    recur_up(&mut h, len, z);
    Ok(h)
}

fn recur_up(h: &mut Vec<C64>, len: usize, z: C64) {
    h.reserve(len.saturating_sub(h.len()));
    while h.len() < len {
        let k = h.len() - 1;
        let next = h[k] * (2.0 * k as f64) / z - h[k - 1];
        h.push(next);
    }
}

/// `(H_0^{(1)}(z), H_1^{(1)}(z))`.
fn hankel01(z: C64) -> Result<(C64, C64)> {
    check_argument(1, z)?;
    if z.im > SPLIT_IM || z.norm() >= ASYMPTOTIC_SWITCH {
        return Ok((hankel1_upper(0, z), hankel1_upper(1, z)));
    }
    let j = miller_j(z, 1);
    let (y0, y1) = neumann_y01(z, &j);
    Ok((j[0] + I * y0, j[1] + I * y1))
}

/// `H^{(1)}_ν(z)` without forming `J + iY`; `Im z > SPLIT_IM` or `|z|` large.
fn hankel1_upper(nu: usize, z: C64) -> C64 {
    if z.norm() >= ASYMPTOTIC_SWITCH {
        hankel_large(nu, z)
    } else {
        hankel_integral(nu, z)
    }
}

/// `H^{(1)}_ν(z) = (2 e^{-iνπ/2} / (πi)) ∫_0^∞ e^{iz cosh t} cosh(νt) dt` for
/// `0 < arg z < π`, by the trapezoid rule (spectrally accurate for this even,
/// entire integrand; the step follows the width of the strip of decay).
fn hankel_integral(nu: usize, z: C64) -> C64 {
    let arg = z.arg();
    let d = 0.5 * arg.min(PI - arg);
    let h = 2.0 * PI * d / 40.0;
    let nu_f = nu as f64;
    let f = |t: f64| (I * z * t.cosh()).exp() * (nu_f * t).cosh();
    let mut sum = f(0.0) * 0.5;
    let mut largest = sum.norm();
    let mut j = 1;
    loop {
        let t = j as f64 * h;
        let v = f(t);
        sum += v;
        let m = v.norm();
        largest = largest.max(m);
        if (m < 1e-18 * largest && z.im * t.cosh() > 40.0) || j > 200_000 {
            break;
        }
        j += 1;
    }
    let phase = C64::from_polar(1.0, -nu_f * FRAC_PI_2);
    phase * sum * h * (2.0 / PI) / I
}

/// `H^{(1)}_ν(z)` for large `|z|`. The left half-plane goes through the
/// reflections `H^{(1)}_ν(z) = (-1)^ν [2 H^{(1)}_ν(-z) + H^{(2)}_ν(-z)]`
/// (`Im z < 0`) and `H^{(1)}_ν(z) = -(-1)^ν H^{(2)}_ν(-z)` (`Im z >= 0`), since the
/// expansion itself picks up a Stokes contribution as `arg z -> -π`.
fn hankel_large(nu: usize, z: C64) -> C64 {
    if z.re >= 0.0 {
        return hankel_asymptotic(nu, z);
    }
    let w = -z;
    let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
    let h2 = hankel_asymptotic(nu, w.conj()).conj();
    if z.im < 0.0 {
        (hankel_asymptotic(nu, w) * 2.0 + h2) * sign
    } else {
        -h2 * sign
    }
}

/// Hankel's expansion, used for `|arg z| <= π/2`.
fn hankel_asymptotic(nu: usize, z: C64) -> C64 {
    let mu = 4.0 * (nu * nu) as f64;
    let omega = z - C64::new(nu as f64 * FRAC_PI_2 + FRAC_PI_4, 0.0);
    let prefactor = (C64::new(2.0 / PI, 0.0) / z).sqrt() * (I * omega).exp();
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= I * ((mu - odd * odd) / (8.0 * k as f64)) / z;
        let m = term.norm();
        if m > last {
            break;
        }
        sum += term;
        if m < 1e-17 * sum.norm() {
            break;
        }
        last = m;
    }
    prefactor * sum
}

/// Neumann expansions of `Y_0` and `Y_1` in terms of the full Miller sequence.
fn neumann_y01(z: C64, j: &[C64]) -> (C64, C64) {
    let log_term = (z * 0.5).ln() + EULER_GAMMA;
    let mut s0 = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0);
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += j[2 * k] * (sign / k as f64);
        s1 += (j[2 * k - 1] - j[2 * k + 1]) * (sign / k as f64);
        k += 1;
    }
    let y0 = (log_term * j[0]) * (2.0 / PI) - s0 * (4.0 / PI);
    let y1 = -(j[0] / z) * (2.0 / PI) + (log_term * j[1]) * (2.0 / PI) + s1 * (2.0 / PI);
    (y0, y1)
}

/// `J_n` by the ascending power series.
fn j_series(n: usize, z: C64) -> C64 {
    let half = z * 0.5;
    let mut lead = C64::new(1.0, 0.0);
    for k in 1..=n {
        lead *= half / k as f64;
    }
    let q = -half * half;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..200 {
        term *= q / ((k * (n + k)) as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    lead * sum
}

fn miller_start(n: usize, z: C64) -> usize {
    let top = (n as f64).max(z.norm());
    let m = (top + 20.0 + (40.0 * top).sqrt()).ceil() as usize;
    m + (m % 2)
}

/// Normalized `J_k(z)` for `k = 0..=M` by Miller's algorithm, where `M >= n`
/// is the starting order.
fn miller_j(z: C64, n: usize) -> Vec<C64> {
    let start = miller_start(n, z);
    let mut j = vec![C64::new(0.0, 0.0); start + 1];
    let mut next = C64::new(0.0, 0.0);
    let mut cur = C64::new(1e-30, 0.0);
    j[start] = cur;
    for k in (1..=start).rev() {
        let prev = cur * (2.0 * k as f64) / z - next;
        next = cur;
        cur = prev;
        j[k - 1] = cur;
        if cur.norm() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            for v in j[k - 1..].iter_mut() {
                *v *= s;
            }
            cur *= s;
            next *= s;
        }
    }
    // e^{iσz} = J_0 + 2 Σ (iσ)^k J_k with σ chosen so that |e^{iσz}| >= 1.
    let unit = if z.im <= 0.0 { I } else { -I };
    let mut power = C64::new(1.0, 0.0);
    let mut sum = j[0];
    for v in j.iter().skip(1) {
        power *= unit;
        sum += power * *v * 2.0;
    }
    // Divide through the modulus first: |sum|^2 may overflow.
    let m = sum.norm();
    let scale = (unit * z).exp() / m / (sum / m);
    for v in j.iter_mut() {
        *v *= scale;
    }
    j
}
