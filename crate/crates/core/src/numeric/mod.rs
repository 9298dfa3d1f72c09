//! Numeric kernels shared by every other module.
//!
//! Two representations coexist behind [`Scalar`]: exact rationals over
//! arbitrary-precision integers, used wherever an identity has to hold
//! bit-for-bit, and a signed log-magnitude float ([`LogValue`]) for cuts
//! far beyond what exact arithmetic can reach in reasonable time.

mod combinatorics;
mod logsum;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub use combinatorics::{binomial_exact, log_factorial, CombinatoricsTable};
pub use logsum::{signed_log_sum, LogSum, CANCELLATION_RATIO};

/// Largest cut index for which [`NumericMode::auto`] selects exact arithmetic.
pub const EXACT_MODE_MAX_N: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericMode {
    Exact,
    LogSpace,
}

impl NumericMode {
    /// Exact for `n <= 64`, log-space above.
    pub fn auto(n: u64) -> Self {
        if n <= EXACT_MODE_MAX_N {
            NumericMode::Exact
        } else {
            NumericMode::LogSpace
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }

    fn mul(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }

    fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }
}

/// A real number stored as `sign * exp(ln_abs)`.
///
/// When `sign` is [`Sign::Zero`] the magnitude field carries no meaning and
/// is normalized to negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: Sign,
    ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: Sign::Zero,
        ln_abs: f64::NEG_INFINITY,
    };

    pub const ONE: LogValue = LogValue {
        sign: Sign::Positive,
        ln_abs: 0.0,
    };

    pub fn new(sign: Sign, ln_abs: f64) -> Self {
        if sign == Sign::Zero || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign, ln_abs }
        }
    }

    pub fn positive(ln_abs: f64) -> Self {
        Self::new(Sign::Positive, ln_abs)
    }

    pub fn from_f64(x: f64) -> Self {
        match x.partial_cmp(&0.0) {
            Some(Ordering::Greater) => Self::positive(x.ln()),
            Some(Ordering::Less) => Self::new(Sign::Negative, (-x).ln()),
            _ => Self::ZERO,
        }
    }

    pub fn from_rational(q: &BigRational) -> Self {
        let sign = match q.numer().sign() {
            BigSign::Minus => Sign::Negative,
            BigSign::NoSign => return Self::ZERO,
            BigSign::Plus => Sign::Positive,
        };
        let ln = ln_biguint(q.numer().magnitude()) - ln_biguint(q.denom().magnitude());
        Self::new(sign, ln)
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn to_f64(&self) -> f64 {
        match self.sign {
            Sign::Zero => 0.0,
            s => s.as_f64() * self.ln_abs.exp(),
        }
    }

    /// Square root of a nonnegative value.
    pub fn sqrt(&self) -> Option<Self> {
        match self.sign {
            Sign::Negative => None,
            Sign::Zero => Some(Self::ZERO),
            Sign::Positive => Some(Self::positive(0.5 * self.ln_abs)),
        }
    }

    pub fn powi(&self, exp: i32) -> Self {
        if exp == 0 {
            return Self::ONE;
        }
        let sign = if exp % 2 == 0 && self.sign != Sign::Zero {
            Sign::Positive
        } else {
            self.sign
        };
        Self::new(sign, self.ln_abs * f64::from(exp))
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    // multiplication is addition of logs
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue::new(self.sign.mul(rhs.sign), self.ln_abs + rhs.ln_abs)
    }
}

impl Neg for LogValue {
    type Output = LogValue;

    fn neg(self) -> LogValue {
        LogValue::new(self.sign.flip(), self.ln_abs)
    }
}

impl Add for LogValue {
    type Output = LogValue;

    fn add(self, rhs: LogValue) -> LogValue {
        signed_log_sum(&[self, rhs]).value
    }
}

/// Dual-mode real number.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Log(LogValue),
}

impl Scalar {
    pub fn zero(mode: NumericMode) -> Self {
        match mode {
            NumericMode::Exact => Scalar::Exact(BigRational::zero()),
            NumericMode::LogSpace => Scalar::Log(LogValue::ZERO),
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn mode(&self) -> NumericMode {
        match self {
            Scalar::Exact(_) => NumericMode::Exact,
            Scalar::Log(_) => NumericMode::LogSpace,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Log(_) => None,
        }
    }

    pub fn into_exact(self) -> Option<BigRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Log(_) => None,
        }
    }

    pub fn to_log(&self) -> LogValue {
        match self {
            Scalar::Exact(q) => LogValue::from_rational(q),
            Scalar::Log(l) => *l,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => rational_to_f64(q),
            Scalar::Log(l) => l.to_f64(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Log(l) => l.is_zero(),
        }
    }

    pub fn sign(&self) -> Sign {
        match self {
            Scalar::Exact(q) if q.is_positive() => Sign::Positive,
            Scalar::Exact(q) if q.is_negative() => Sign::Negative,
            Scalar::Exact(_) => Sign::Zero,
            Scalar::Log(l) => l.sign(),
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;

    fn add(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            (a, b) => Scalar::Log(a.to_log() + b.to_log()),
        }
    }
}

impl Sub for Scalar {
    type Output = Scalar;

    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Mul for Scalar {
    type Output = Scalar;

    fn mul(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            (a, b) => Scalar::Log(a.to_log() * b.to_log()),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;

    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Log(l) => Scalar::Log(-l),
        }
    }
}

impl From<BigRational> for Scalar {
    fn from(q: BigRational) -> Self {
        Scalar::Exact(q)
    }
}

impl From<LogValue> for Scalar {
    fn from(l: LogValue) -> Self {
        Scalar::Log(l)
    }
}

impl fmt::Display for Scalar {
    /// Exact values print as `p/q` (always with a denominator); log values
    /// print their float value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Scalar::Log(l) => write!(f, "{}", l.to_f64()),
        }
    }
}

/// Natural log of a positive big integer, accurate to a few ulps at any size.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 960 {
        x.to_f64().map_or(f64::INFINITY, f64::ln)
    } else {
        let shift = bits - 128;
        let head = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
        head.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Float value of a rational whose numerator and denominator may each
/// overflow `f64` on their own.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(x) = q.to_f64() {
        if x.is_finite() && (x != 0.0 || q.is_zero()) {
            return x;
        }
    }
    LogValue::from_rational(q).to_f64()
}
