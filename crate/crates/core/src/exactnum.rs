//! Exact dyadic arithmetic and big-integer bit utilities.
//!
//! Every weight, bias and activation the constructions produce is a dyadic
//! rational `±m·2^e`. [`Dyadic`] keeps such values in canonical form (odd
//! mantissa, or the single zero), so structural equality is value equality.
//!
//! Bit strings follow the MSB-first convention: bit 1 is the most significant
//! bit of a value padded with leading zeros to an explicit width.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision natural number.
pub type BigNat = BigUint;

/// Number of bits in the binary representation; `len(0) = 0`.
pub fn len(n: &BigNat) -> u64 {
    n.bits()
}

/// Bits `i..=j` (1-based, MSB first) of `n` padded to `width` bits, read as an integer.
pub fn bin_range(n: &BigNat, i: u64, j: u64, width: u64) -> Result<BigNat> {
    if i == 0 || i > j || j > width {
        return Err(Error::Index(format!(
            "bit range {i}..={j} invalid for width {width}"
        )));
    }
    if len(n) > width {
        return Err(Error::Index(format!(
            "value has {} bits, exceeds padded width {width}",
            len(n)
        )));
    }
    let count = j - i + 1;
    let shifted = n >> (width - j);
    let mask = (BigNat::one() << count) - 1u32;
    Ok(shifted & mask)
}

/// Concatenates fixed-width blocks, block 0 in the most significant position.
pub fn pack_blocks(values: &[BigNat], block_width: u64) -> Result<BigNat> {
    let mut acc = BigNat::zero();
    for v in values {
        if len(v) > block_width {
            return Err(Error::Overflow {
                needed: len(v),
                width: block_width,
            });
        }
        acc = (acc << block_width) | v;
    }
    Ok(acc)
}

/// An exact value `mantissa · 2^exponent`, kept canonical.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Dyadic {
    // odd, or zero with exp == 0
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        if mant.is_zero() {
            return Self::zero();
        }
        let tz = mant.trailing_zeros().unwrap_or(0);
        if tz == 0 {
            return Dyadic { mant, exp };
        }
        Dyadic {
            mant: mant >> tz,
            exp: exp + tz as i64,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            mant: BigInt::one(),
            exp: 0,
        }
    }

    pub fn from_int(v: i64) -> Self {
        Self::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Self::new(v, 0)
    }

    pub fn from_nat(v: &BigNat) -> Self {
        Self::new(BigInt::from(v.clone()), 0)
    }

    /// `2^e`.
    pub fn pow2(e: i64) -> Self {
        Dyadic {
            mant: BigInt::one(),
            exp: e,
        }
    }

    /// `m / 2^k`.
    pub fn ratio_pow2(m: i64, k: i64) -> Self {
        Self::new(BigInt::from(m), -k)
    }

    /// Exact conversion; `None` when the denominator is not a power of two.
    pub fn from_rational(r: &BigRational) -> Option<Self> {
        let den = r.denom();
        if den.is_zero() {
            return None;
        }
        let tz = den.trailing_zeros().unwrap_or(0);
        if (den >> tz) != BigInt::one() {
            return None;
        }
        Some(Self::new(r.numer().clone(), -(tz as i64)))
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            return Some(Self::zero());
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Some(Self::new(BigInt::from(m) * sign, e))
    }

    pub fn sign(&self) -> i8 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    /// Magnitude of the (odd) mantissa.
    pub fn mantissa(&self) -> BigNat {
        self.mant.magnitude().clone()
    }

    pub fn signed_mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// Bits of the mantissa; the exponent is accounted for separately.
    pub fn bit_complexity(&self) -> u64 {
        self.mant.bits()
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.exp >= 0
    }

    pub fn relu(self) -> Self {
        if self.is_negative() {
            Self::zero()
        } else {
            self
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Dyadic {
            mant: self.mant.clone(),
            exp: self.exp + k,
        }
    }

    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << self.exp as u64
        } else {
            // arithmetic shift rounds toward -inf
            &self.mant >> (-self.exp) as u64
        }
    }

    /// The value as an integer, if it is one.
    pub fn to_bigint(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.floor())
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as u64)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    /// Nearest `f64` (mantissa rounded once, then scaled).
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let (top, shift) = if bits > 64 {
            let s = bits - 64;
            // sticky bit keeps the rounding of the truncated tail correct
            let t = self.mant.abs() >> s as u64;
            let mask: BigInt = (BigInt::one() << s as u64) - 1;
            let dropped = (self.mant.abs() & mask).is_zero();
            let t = if dropped { t } else { t | BigInt::one() };
            (t.to_f64().unwrap_or(f64::INFINITY), s)
        } else {
            (self.mant.abs().to_f64().unwrap_or(f64::INFINITY), 0)
        };
        let v = ldexp(top, shift + self.exp);
        if self.is_negative() {
            -v
        } else {
            v
        }
    }

    fn align(a: &Dyadic, b: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = a.exp.min(b.exp);
        (
            &a.mant << (a.exp - e) as u64,
            &b.mant << (b.exp - e) as u64,
            e,
        )
    }
}

fn ldexp(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
        if v.is_infinite() {
            return v;
        }
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
        if v == 0.0 {
            return v;
        }
    }
    v * 2f64.powi(e as i32)
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (s, o) = (self.sign(), other.sign());
        if s != o {
            return s.cmp(&o);
        }
        if s == 0 {
            return Ordering::Equal;
        }
        let (a, b, _) = Dyadic::align(self, other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &'a Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a + b, e)
    }
}

impl<'a> Sub<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &'a Dyadic) -> Dyadic {
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a - b, e)
    }
}

impl<'a> Mul<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &'a Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero();
        }
        // odd * odd is odd: already canonical
        Dyadic {
            mant: &self.mant * &rhs.mant,
            exp: self.exp + rhs.exp,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -(self.clone())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: &'a Dyadic) -> Dyadic {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::from_int(v)
    }
}

/// Exact decimal expansion (every dyadic has a finite one).
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp >= 0 {
            return write!(f, "{}", &self.mant << self.exp as u64);
        }
        let k = (-self.exp) as usize;
        // m / 2^k = m * 5^k / 10^k
        let scaled = self.mant.abs() * num_traits::pow(BigInt::from(5), k);
        let digits = scaled.to_string();
        let (int_part, frac_part) = if digits.len() > k {
            let split = digits.len() - k;
            (digits[..split].to_string(), digits[split..].to_string())
        } else {
            ("0".to_string(), format!("{}{}", "0".repeat(k - digits.len()), digits))
        };
        let sign = if self.is_negative() { "-" } else { "" };
        write!(f, "{sign}{int_part}.{frac_part}")
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({}·2^{})", self.mant, self.exp)
    }
}

#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    s: i8,
    m: String,
    e: i64,
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        DyadicRepr {
            s: self.sign(),
            m: self.mant.magnitude().to_str_radix(16),
            e: self.exp,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = DyadicRepr::deserialize(de)?;
        let mag = BigUint::parse_bytes(r.m.as_bytes(), 16)
            .ok_or_else(|| D::Error::custom(format!("bad hex mantissa {:?}", r.m)))?;
        let sign = match r.s {
            -1 => Sign::Minus,
            0 => Sign::NoSign,
            1 => Sign::Plus,
            s => return Err(D::Error::custom(format!("bad sign {s}"))),
        };
        if (sign == Sign::NoSign) != mag.is_zero() {
            return Err(D::Error::custom("sign and mantissa disagree"));
        }
        if !mag.is_zero() && mag.is_even() {
            return Err(D::Error::custom("mantissa not canonical (even)"));
        }
        Ok(Dyadic::new(BigInt::from_biguint(sign, mag), r.e))
    }
}

/// Parses `"3"`, `"-1.25"`, `"7/8"` or `"1e-3"`-free decimal strings into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not an exact number: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_s, frac_s) = body.split_once('.').unwrap_or((body, ""));
    if int_s.is_empty() && frac_s.is_empty() {
        return Err(bad());
    }
    if !int_s.chars().chain(frac_s.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_s}{frac_s}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let d = num_traits::pow(BigInt::from(10), frac_s.len());
    let r = BigRational::new(if neg { -n } else { n }, d);
    Ok(r)
}

/// Exact string for a rational: integer, decimal when dyadic, else `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    match Dyadic::from_rational(r) {
        Some(d) => d.to_string(),
        None => format!("{}/{}", r.numer(), r.denom()),
    }
}

/// `⌈log2 n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: u64) -> u64 {
    assert!(n >= 1, "ceil_log2(0)");
    64 - (n - 1).leading_zeros() as u64
}
