//! Angular-momentum special functions.
//!
//! Conventions used throughout the crate:
//!
//! * Condon–Shortley phase for Clebsch–Gordan coefficients and spherical
//!   harmonics.
//! * z–y–z Euler angles with active rotations,
//!   `D^j_{m',m}(α, β, γ) = e^{-i m' α} d^j_{m',m}(β) e^{-i m γ}`.
//! * Basis vectors ordered by descending projection (`m = +j` first).
//!
//! Coefficients are evaluated from closed-form sums with log-factorial
//! prefactors, which keeps intermediate values finite up to `j = 50`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Largest spin accepted by the special-function routines.
pub const MAX_TWICE_J: u32 = 100;

/// A non-negative spin quantum number stored as `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinValue(u32);

impl SpinValue {
    pub const ZERO: SpinValue = SpinValue(0);
    pub const HALF: SpinValue = SpinValue(1);
    pub const ONE: SpinValue = SpinValue(2);

    pub const fn from_twice(twice_j: u32) -> Self {
        SpinValue(twice_j)
    }

    pub const fn integer(j: u32) -> Self {
        SpinValue(2 * j)
    }

    /// Spin whose multiplet has `dim` states.
    pub fn from_dim(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("spin multiplet dimension must be positive"));
        }
        Ok(SpinValue((dim - 1) as u32))
    }

    #[inline]
    pub const fn twice(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// Integer value of an integer spin (tensor rank), `None` for half-integers.
    pub const fn as_integer(self) -> Option<u32> {
        if self.is_integer() {
            Some(self.0 / 2)
        } else {
            None
        }
    }

    /// Allowed projections, descending from `+j` to `-j`.
    pub fn projections(self) -> impl DoubleEndedIterator<Item = Projection> + ExactSizeIterator {
        let tj = self.0 as i32;
        (0..self.0 as i32 + 1).map(move |k| Projection(tj - 2 * k))
    }

    /// Row/column index of `m` in the descending basis.
    pub fn index_of(self, m: Projection) -> Result<usize> {
        check_pair(self, m)?;
        Ok(((self.0 as i32 - m.0) / 2) as usize)
    }

    pub fn projection_at(self, index: usize) -> Projection {
        Projection(self.0 as i32 - 2 * index as i32)
    }
}

impl fmt::Display for SpinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for SpinValue {
    type Err = Error;

    /// Accepts `"3/2"`, `"1"`, or a decimal such as `"1.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("cannot parse spin value {s:?}"));
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            return match den.trim() {
                "2" => Ok(SpinValue(num)),
                "1" => Ok(SpinValue(2 * num)),
                _ => Err(bad()),
            };
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        let twice = 2.0 * x;
        if !(twice >= 0.0) || (twice - twice.round()).abs() > 1e-12 {
            return Err(bad());
        }
        Ok(SpinValue(twice.round() as u32))
    }
}

/// A spin projection stored as `2m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Projection(i32);

impl Projection {
    pub const fn from_twice(twice_m: i32) -> Self {
        Projection(twice_m)
    }

    pub const fn integer(m: i32) -> Self {
        Projection(2 * m)
    }

    #[inline]
    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl std::ops::Add for Projection {
    type Output = Projection;
    fn add(self, rhs: Projection) -> Projection {
        Projection(self.0 + rhs.0)
    }
}

impl std::ops::Neg for Projection {
    type Output = Projection;
    fn neg(self) -> Projection {
        Projection(-self.0)
    }
}

/// z–y–z Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub const IDENTITY: EulerAngles = EulerAngles { alpha: 0.0, beta: 0.0, gamma: 0.0 };

    pub const fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        EulerAngles { alpha, beta, gamma }
    }

    pub fn from_degrees(alpha: f64, beta: f64, gamma: f64) -> Self {
        EulerAngles::new(alpha.to_radians(), beta.to_radians(), gamma.to_radians())
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite() && self.gamma.is_finite()
    }
}

/// Checks that `m` is an allowed projection of `j`.
pub fn check_pair(j: SpinValue, m: Projection) -> Result<()> {
    if j.0 > MAX_TWICE_J {
        return Err(Error::invalid(format!("spin {j} exceeds the supported maximum {}", MAX_TWICE_J / 2)));
    }
    let tj = j.0 as i32;
    if m.0.abs() > tj {
        return Err(Error::invalid(format!("|m| = {} exceeds j = {j}", m.value().abs())));
    }
    if (tj - m.0).rem_euclid(2) != 0 {
        return Err(Error::invalid(format!("projection {} has wrong parity for j = {j}", m.value())));
    }
    Ok(())
}

/// `|j1 - j2| <= J <= j1 + j2` with `j1 + j2 + J` integral.
pub fn triangle(j1: SpinValue, j2: SpinValue, j: SpinValue) -> bool {
    let (a, b, c) = (j1.0 as i64, j2.0 as i64, j.0 as i64);
    (a + b + c) % 2 == 0 && c >= (a - b).abs() && c <= a + b
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 4 * MAX_TWICE_J as usize + 8;
        let mut t = Vec::with_capacity(n);
        t.push(0.0);
        let mut exact = 1.0_f64;
        for k in 1..n {
            // Exact products are representable up to 22!; beyond, accumulate logs.
            if k <= 22 {
                exact *= k as f64;
                t.push(exact.ln());
            } else {
                let prev = t[k - 1];
                t.push(prev + (k as f64).ln());
            }
        }
        t
    })
}

#[inline]
fn lf(n: i64) -> f64 {
    debug_assert!(n >= 0);
    ln_factorial_table()[n as usize]
}

/// Pairwise summation of a slice.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Clebsch–Gordan coefficient `<j1 m1; j2 m2 | J M>` (Condon–Shortley).
///
/// Vanishes when `m1 + m2 != M` or the triangle rule fails. Malformed
/// `(j, m)` pairs are rejected.
pub fn clebsch_gordan(
    j1: SpinValue,
    m1: Projection,
    j2: SpinValue,
    m2: Projection,
    jj: SpinValue,
    mm: Projection,
) -> Result<f64> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(jj, mm)?;
    Ok(cg_unchecked(j1, m1, j2, m2, jj, mm))
}

/// As [`clebsch_gordan`] but assumes the pairs are valid.
pub(crate) fn cg_unchecked(
    j1: SpinValue,
    m1: Projection,
    j2: SpinValue,
    m2: Projection,
    jj: SpinValue,
    mm: Projection,
) -> f64 {
    if m1.0 + m2.0 != mm.0 || !triangle(j1, j2, jj) {
        return 0.0;
    }
    let (tj1, tj2, tj) = (j1.0 as i64, j2.0 as i64, jj.0 as i64);
    let (tm1, tm2, tm) = (m1.0 as i64, m2.0 as i64, mm.0 as i64);

    let a1 = (tj1 + tj2 - tj) / 2;
    let a2 = (tj1 - tj2 + tj) / 2;
    let a3 = (-tj1 + tj2 + tj) / 2;
    let a4 = (tj1 + tj2 + tj) / 2 + 1;
    let j1p = (tj1 + tm1) / 2;
    let j1m = (tj1 - tm1) / 2;
    let j2p = (tj2 + tm2) / 2;
    let j2m = (tj2 - tm2) / 2;
    let jp = (tj + tm) / 2;
    let jm = (tj - tm) / 2;

    let ln_pre = ((tj + 1) as f64).ln() + lf(a2) + lf(a3) + lf(a1) - lf(a4)
        + lf(jp) + lf(jm) + lf(j1m) + lf(j1p) + lf(j2m) + lf(j2p);

    let b1 = (tj - tj2 + tm1) / 2;
    let b2 = (tj - tj1 - tm2) / 2;
    let kmin = 0.max(-b1).max(-b2);
    let kmax = a1.min(j1m).min(j2p);
    if kmin > kmax {
        return 0.0;
    }
    let terms: Vec<f64> = (kmin..=kmax)
        .map(|k| {
            let ln_den = lf(k) + lf(a1 - k) + lf(j1m - k) + lf(j2p - k) + lf(b1 + k) + lf(b2 + k);
            let mag = (0.5 * ln_pre - ln_den).exp();
            if k % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// Wigner small-d function `d^j_{m_to, m_from}(β)`.
pub fn wigner_small_d(j: SpinValue, m_to: Projection, m_from: Projection, beta: f64) -> Result<f64> {
    check_pair(j, m_to)?;
    check_pair(j, m_from)?;
    Ok(small_d_unchecked(j, m_to, m_from, beta))
}

pub(crate) fn small_d_unchecked(j: SpinValue, m_to: Projection, m_from: Projection, beta: f64) -> f64 {
    let tj = j.0 as i64;
    let (mp, m) = (m_to.0 as i64, m_from.0 as i64);
    let jpm = (tj + m) / 2;
    let jmm = (tj - m) / 2;
    let jpmp = (tj + mp) / 2;
    let jmmp = (tj - mp) / 2;
    let diff = (m - mp) / 2; // m - m'

    let ln_pre = 0.5 * (lf(jpmp) + lf(jmmp) + lf(jpm) + lf(jmm));
    let (s, c) = (0.5 * beta).sin_cos();
    let kmin = 0.max(diff);
    let kmax = jpm.min(jmmp);
    let terms: Vec<f64> = (kmin..=kmax)
        .map(|k| {
            let ln_den = lf(jpm - k) + lf(k) + lf(jmmp - k) + lf(k - diff);
            let coeff = (ln_pre - ln_den).exp();
            let cos_pow = (tj + diff - 2 * k) as i32; // 2j + m - m' - 2k
            let sin_pow = (2 * k - diff) as i32; // 2k - m + m'
            let sign = if (k - diff).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * coeff * c.powi(cos_pow) * s.powi(sin_pow)
        })
        .collect();
    pairwise_sum(&terms)
}

/// Wigner D-function `D^j_{m_to, m_from}(α, β, γ)`.
#[allow(non_snake_case)]
pub fn wigner_D(j: SpinValue, m_to: Projection, m_from: Projection, angles: EulerAngles) -> Result<Complex64> {
    check_pair(j, m_to)?;
    check_pair(j, m_from)?;
    Ok(big_d_unchecked(j, m_to, m_from, angles))
}

pub(crate) fn big_d_unchecked(j: SpinValue, m_to: Projection, m_from: Projection, angles: EulerAngles) -> Complex64 {
    let d = small_d_unchecked(j, m_to, m_from, angles.beta);
    let phase = -(m_to.value() * angles.alpha + m_from.value() * angles.gamma);
    Complex64::from_polar(d, phase)
}

/// Full rotation matrix in the spin-`j` representation, rows and columns
/// ordered by descending projection.
#[allow(non_snake_case)]
pub fn wigner_D_matrix(j: SpinValue, angles: EulerAngles) -> CMatrix {
    let n = j.dim();
    let mut out = CMatrix::zeros(n);
    for (r, mp) in j.projections().enumerate() {
        for (c, m) in j.projections().enumerate() {
            out[(r, c)] = big_d_unchecked(j, mp, m, angles);
        }
    }
    out
}

/// Real small-d matrix, descending ordering.
pub fn wigner_small_d_matrix(j: SpinValue, beta: f64) -> Vec<Vec<f64>> {
    j.projections()
        .map(|mp| j.projections().map(|m| small_d_unchecked(j, mp, m, beta)).collect())
        .collect()
}

/// Spherical harmonic `Y_{l,m}(θ, φ)`, Condon–Shortley phase, unit-normalized
/// on the sphere. `l` must be an integer spin.
pub fn spherical_harmonic(l: SpinValue, m: Projection, theta: f64, phi: f64) -> Result<Complex64> {
    let l_int = l
        .as_integer()
        .ok_or_else(|| Error::invalid(format!("spherical harmonic degree must be an integer, got {l}")))?;
    check_pair(l, m)?;
    let m_int = m.0 / 2;
    let ma = m_int.unsigned_abs();
    let p = normalized_legendre(l_int, ma, theta.cos(), theta.sin().abs());
    // sin θ enters P_l^m as a magnitude; restore its sign for θ outside [0, π].
    let sin_sign = if theta.sin() < 0.0 && ma % 2 == 1 { -1.0 } else { 1.0 };
    let y = Complex64::from_polar(sin_sign * p, ma as f64 * phi);
    if m_int >= 0 {
        Ok(y)
    } else if ma % 2 == 0 {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// `sqrt((2l+1)/4π · (l-m)!/(l+m)!) P_l^m(x)` for `m >= 0`, including the
/// Condon–Shortley factor.
fn normalized_legendre(l: u32, m: u32, x: f64, sin_theta: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        let k = k as f64;
        pmm *= -((2.0 * k + 1.0) / (2.0 * k)).sqrt() * sin_theta;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut p_prev = pmm;
    let mut p_curr = (2.0 * mf + 3.0).sqrt() * x * pmm;
    let coef = |ll: f64| ((4.0 * ll * ll - 1.0) / (ll * ll - mf * mf)).sqrt();
    for ll in (m + 2)..=l {
        let llf = ll as f64;
        let a = coef(llf);
        let a_prev = coef(llf - 1.0);
        let next = a * (x * p_curr - p_prev / a_prev);
        p_prev = p_curr;
        p_curr = next;
    }
    p_curr
}
