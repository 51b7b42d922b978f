//! Radial kernels `k_s`, the fundamental-solution kernel `K_{d-2}` and the
//! Riesz normalization constant `c_d`.
//!
//! With these conventions `c_d · Δ K_{d-2}(·, x) = δ_x` in every dimension, so
//! the potential of a measure has that measure as its Riesz measure.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Neg;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps `±inf` floats onto the infinite variants. NaN is rejected.
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::domain("NaN is not an extended real"))
        } else if v == f64::INFINITY {
            Ok(ExtReal::PosInf)
        } else if v == f64::NEG_INFINITY {
            Ok(ExtReal::NegInf)
        } else {
            Ok(ExtReal::Finite(v))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// The value as an IEEE double (infinities map to `±inf`).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Extended addition; `(+inf) + (-inf)` is an error.
    pub fn try_add(self, other: ExtReal) -> Result<ExtReal> {
        use ExtReal::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::InfinityClash),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
        }
    }

    pub fn try_sub(self, other: ExtReal) -> Result<ExtReal> {
        self.try_add(-other)
    }

    /// Scaling by a real factor, with the measure-theoretic `0 · (±inf) = 0`.
    pub fn scale(self, factor: f64) -> ExtReal {
        use ExtReal::*;
        match self {
            Finite(v) => Finite(v * factor),
            _ if factor == 0.0 => Finite(0.0),
            PosInf if factor > 0.0 => PosInf,
            NegInf if factor < 0.0 => PosInf,
            _ => NegInf,
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl From<f64> for ExtReal {
    /// Lossy for NaN, which becomes `Finite(NaN)`; prefer [`ExtReal::from_f64`].
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v).unwrap_or(ExtReal::Finite(v))
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::NegInf => s.serialize_str("-inf"),
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::Finite(v)),
            Repr::Str(s) => match s.as_str() {
                "-inf" => Ok(ExtReal::NegInf),
                "+inf" | "inf" => Ok(ExtReal::PosInf),
                other => Err(de::Error::custom(format!("invalid extended real {other:?}"))),
            },
        }
    }
}

/// Compensated accumulator over extended reals.
///
/// Finite terms are summed with Neumaier's algorithm; infinite terms are
/// tracked separately so `+inf` and `-inf` never meet inside the float sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtSum {
    sum: f64,
    comp: f64,
    pos_inf: bool,
    neg_inf: bool,
}

impl ExtSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_f64(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn add(&mut self, v: ExtReal) {
        match v {
            ExtReal::Finite(x) => self.add_f64(x),
            ExtReal::PosInf => self.pos_inf = true,
            ExtReal::NegInf => self.neg_inf = true,
        }
    }

    pub fn value(&self) -> Result<ExtReal> {
        match (self.pos_inf, self.neg_inf) {
            (true, true) => Err(Error::InfinityClash),
            (true, false) => Ok(ExtReal::PosInf),
            (false, true) => Ok(ExtReal::NegInf),
            (false, false) => Ok(ExtReal::Finite(self.sum + self.comp)),
        }
    }
}

/// Neumaier-compensated sum of finite terms.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = ExtSum::new();
    for t in terms {
        acc.add_f64(t);
    }
    acc.sum + acc.comp
}

/// Spatial dimension `d ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            Err(Error::domain("dimension must be at least 1"))
        } else {
            Ok(Dimension(d))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// The kernel index `s = d - 2`.
    pub fn kernel_index(self) -> f64 {
        self.0 as f64 - 2.0
    }

    pub fn check(self, point: &[f64]) -> Result<()> {
        if point.len() == self.0 {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.0,
                found: point.len(),
            })
        }
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(d: usize) -> Result<Self> {
        Dimension::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `k_s(t)`: `ln t` for `s = 0`, else `-sgn(s) t^{-s}`. Strictly increasing in `t`.
pub fn radial_kernel(s: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("radial kernel needs t > 0, got {t}")));
    }
    Ok(radial_kernel_unchecked(s, t))
}

#[inline]
pub(crate) fn radial_kernel_unchecked(s: f64, t: f64) -> f64 {
    if s == 0.0 {
        t.ln()
    } else if s == 1.0 {
        -1.0 / t
    } else if s == -1.0 {
        t
    } else {
        -s.signum() * t.powf(-s)
    }
}

/// Relative size below which two points are treated as coincident.
pub const DIAGONAL_EPS: f64 = 1e-14;

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
fn coordinate_scale(a: &[f64], b: &[f64]) -> f64 {
    a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()))
}

/// Whether `|y - x|` is below the diagonal threshold for these coordinates.
#[inline]
pub fn on_diagonal(y: &[f64], x: &[f64]) -> bool {
    distance(y, x) < DIAGONAL_EPS * coordinate_scale(y, x)
}

/// `K_{d-2}(y, x)`. On the diagonal: `-inf` for `d ≥ 2`, `0` for `d = 1`.
pub fn spatial_kernel(d: Dimension, y: &[f64], x: &[f64]) -> Result<ExtReal> {
    d.check(y)?;
    d.check(x)?;
    Ok(spatial_kernel_unchecked(d, y, x))
}

#[inline]
pub(crate) fn spatial_kernel_unchecked(d: Dimension, y: &[f64], x: &[f64]) -> ExtReal {
    let r = distance(y, x);
    if d.get() >= 2 && r < DIAGONAL_EPS * coordinate_scale(y, x) {
        return ExtReal::NegInf;
    }
    if r == 0.0 {
        // d = 1
        return ExtReal::ZERO;
    }
    ExtReal::Finite(radial_kernel_unchecked(d.kernel_index(), r))
}

/// `c_d = Γ(d/2) / (2 π^{d/2} max{1, d-2})`.
pub fn riesz_constant(d: Dimension) -> f64 {
    let half = d.get() as f64 / 2.0;
    let denom = 2.0 * PI.powf(half) * (d.get() as f64 - 2.0).max(1.0);
    gamma(half) / denom
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function by the Lanczos approximation (g = 7, n = 9), with reflection
/// for arguments below one half.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS_COEFFS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}
