//! Exact dyadic rationals and the two-mode scalar used for coordinates.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;

/// An exact dyadic rational `mantissa * 2^exp`.
///
/// Values are kept normalized: the mantissa is odd, or the value is zero with
/// `exp == 0`. Normalization makes structural equality coincide with numeric
/// equality.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Dyadic {
    mantissa: i64,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { mantissa: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { mantissa: 1, exp: 0 };

    pub fn new(mantissa: i64, exp: i32) -> Self {
        Self::normalized(mantissa as i128, exp).expect("dyadic overflow")
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(n, 0)
    }

    /// `2^exp`.
    pub fn pow2(exp: i32) -> Self {
        Dyadic { mantissa: 1, exp }
    }

    /// Exact conversion; every finite `f64` is a dyadic rational.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::ZERO);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1i128 } else { -1i128 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1i128 << 52), raw_exp - 1075)
        };
        Self::normalized(sign * m, e)
    }

    fn normalized(mut m: i128, mut e: i32) -> Option<Self> {
        if m == 0 {
            return Some(Self::ZERO);
        }
        let tz = m.trailing_zeros() as i32;
        m >>= tz;
        e = e.checked_add(tz)?;
        let mantissa = i64::try_from(m).ok()?;
        Some(Dyadic { mantissa, exp: e })
    }

    pub fn mantissa(self) -> i64 {
        self.mantissa
    }

    pub fn exp(self) -> i32 {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0
    }

    pub fn abs(self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exp: self.exp,
        }
    }

    /// Multiplication by `2^k`, always exact.
    pub fn mul_pow2(self, k: i32) -> Self {
        if self.is_zero() {
            return self;
        }
        Dyadic {
            mantissa: self.mantissa,
            exp: self.exp + k,
        }
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        if self.is_zero() {
            return Some(other);
        }
        if other.is_zero() {
            return Some(self);
        }
        let e = self.exp.min(other.exp);
        let a = shl_i128(self.mantissa as i128, (self.exp - e) as u32)?;
        let b = shl_i128(other.mantissa as i128, (other.exp - e) as u32)?;
        Self::normalized(a.checked_add(b)?, e)
    }

    pub fn checked_mul(self, other: Self) -> Option<Self> {
        let m = (self.mantissa as i128).checked_mul(other.mantissa as i128)?;
        Self::normalized(m, self.exp.checked_add(other.exp)?)
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 * (self.exp as f64).exp2()
    }

    /// Exact decimal expansion, never in scientific notation.
    pub fn to_decimal_string(self) -> String {
        if self.exp >= 0 {
            return (BigInt::from(self.mantissa) << self.exp as usize).to_string();
        }
        let k = (-self.exp) as u32;
        // m / 2^k == m * 5^k / 10^k
        let digits = (BigInt::from(self.mantissa.unsigned_abs()) * BigInt::from(5u8).pow(k)).to_string();
        let k = k as usize;
        let (int_part, frac_part) = if digits.len() > k {
            let split = digits.len() - k;
            (digits[..split].to_string(), digits[split..].to_string())
        } else {
            ("0".to_string(), format!("{}{}", "0".repeat(k - digits.len()), digits))
        };
        let frac_part = frac_part.trim_end_matches('0');
        let sign = if self.mantissa < 0 { "-" } else { "" };
        if frac_part.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }
}

fn shl_i128(m: i128, k: u32) -> Option<i128> {
    if k >= 127 {
        return if m == 0 { Some(0) } else { None };
    }
    let r = m.checked_shl(k)?;
    if (r >> k) == m {
        Some(r)
    } else {
        None
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        self.checked_add(rhs).expect("dyadic overflow in addition")
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mantissa: -self.mantissa,
            exp: self.exp,
        }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        self.checked_mul(rhs).expect("dyadic overflow in multiplication")
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = *self - *other;
        d.mantissa.cmp(&0)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

/// A coordinate value, either exact or floating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    Exact(Dyadic),
    Float(f64),
}

impl Scalar {
    pub fn to_f64(self) -> f64 {
        match self {
            Scalar::Exact(d) => d.to_f64(),
            Scalar::Float(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_zero(self) -> bool {
        match self {
            Scalar::Exact(d) => d.is_zero(),
            Scalar::Float(x) => x == 0.0,
        }
    }

    /// Decimal rendering: exact expansion for dyadic values, shortest
    /// round-trip form for floats.
    pub fn render(self) -> String {
        match self {
            Scalar::Exact(d) => d.to_decimal_string(),
            Scalar::Float(x) => format!("{x}"),
        }
    }
}

impl From<Dyadic> for Scalar {
    fn from(d: Dyadic) -> Self {
        Scalar::Exact(d)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a + b),
            (a, b) => Scalar::Float(a.to_f64() + b.to_f64()),
        }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a - b),
            (a, b) => Scalar::Float(a.to_f64() - b.to_f64()),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a * b),
            (a, b) => Scalar::Float(a.to_f64() * b.to_f64()),
        }
    }
}
