//! Exact fractions over `i128`.
//!
//! Every threshold decision in this crate goes through integers. A
//! [`Rational`] is always stored in lowest terms with a positive
//! denominator, so equality is structural. Ordering cross-multiplies into a
//! 256-bit product and therefore never overflows, whatever the operands.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("rational magnitude exceeds 128-bit storage")]
    Overflow,
    #[error("malformed rational `{0}`: expected `p/q`, an integer, or a finite decimal")]
    Parse(alloc::string::String),
}

/// A fraction `num/den` in lowest terms with `den > 0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i128,
    den: i128,
}

pub(crate) fn gcd_u128(mut x: u128, mut y: u128) -> u128 {
    while y != 0 {
        let r = x % y;
        x = y;
        y = r;
    }
    x
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    /// Builds `num/den` reduced to lowest terms.
    pub fn new(num: i128, den: i128) -> Result<Self, RationalError> {
        if den == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        if num == 0 {
            return Ok(Self::ZERO);
        }
        let g = gcd_u128(num.unsigned_abs(), den.unsigned_abs());
        let negative = (num < 0) != (den < 0);
        let n = num.unsigned_abs() / g;
        let d = den.unsigned_abs() / g;
        let d = i128::try_from(d).map_err(|_| RationalError::Overflow)?;
        let n = if negative {
            0i128.checked_sub_unsigned(n).ok_or(RationalError::Overflow)?
        } else {
            i128::try_from(n).map_err(|_| RationalError::Overflow)?
        };
        Ok(Self { num: n, den: d })
    }

    pub const fn from_integer(value: i128) -> Self {
        Self { num: value, den: 1 }
    }

    #[inline]
    pub const fn numer(&self) -> i128 {
        self.num
    }

    #[inline]
    pub const fn denom(&self) -> i128 {
        self.den
    }

    pub const fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub const fn is_positive(&self) -> bool {
        self.num > 0
    }

    pub const fn is_integer(&self) -> bool {
        self.den == 1
    }

    /// Smallest integer `>= self`.
    pub fn ceil(&self) -> i128 {
        let q = self.num.div_euclid(self.den);
        if self.num.rem_euclid(self.den) == 0 {
            q
        } else {
            q + 1
        }
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> i128 {
        self.num.div_euclid(self.den)
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        let g = gcd_u128(self.den as u128, rhs.den as u128) as i128;
        let left_scale = rhs.den / g;
        let right_scale = self.den / g;
        let num = self
            .num
            .checked_mul(left_scale)?
            .checked_add(rhs.num.checked_mul(right_scale)?)?;
        let den = self.den.checked_mul(left_scale)?;
        Self::new(num, den).ok()
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.checked_add(rhs.checked_neg()?)
    }

    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        // Cross-cancel first so the products stay as small as possible.
        let g1 = gcd_u128(self.num.unsigned_abs(), rhs.den as u128).max(1) as i128;
        let g2 = gcd_u128(rhs.num.unsigned_abs(), self.den as u128).max(1) as i128;
        let num = (self.num / g1).checked_mul(rhs.num / g2)?;
        let den = (self.den / g2).checked_mul(rhs.den / g1)?;
        Self::new(num, den).ok()
    }

    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        self.checked_mul(rhs.checked_recip()?)
    }

    pub fn checked_neg(self) -> Option<Self> {
        Some(Self {
            num: self.num.checked_neg()?,
            den: self.den,
        })
    }

    pub fn checked_recip(self) -> Option<Self> {
        if self.num == 0 {
            return None;
        }
        Self::new(self.den, self.num).ok()
    }

    /// Nearest-ish `f64`; only for reporting and aggregation, never for decisions.
    pub fn to_f64(&self) -> f64 {
        if self.num.unsigned_abs() < (1u128 << 53) && self.den < (1i128 << 53) {
            return self.num as f64 / self.den as f64;
        }
        let whole = self.num.div_euclid(self.den);
        let frac = self.num.rem_euclid(self.den);
        whole as f64 + frac as f64 / self.den as f64
    }

    /// Parses a decimal literal (`0.95`, `-1.5`, `.25`, `3`) exactly.
    fn parse_decimal(text: &str) -> Result<Self, RationalError> {
        let err = || RationalError::Parse(text.into());
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        let digits_ok = |s: &str| s.bytes().all(|c| c.is_ascii_digit());
        if !digits_ok(int_part) || !digits_ok(frac_part) {
            return Err(err());
        }
        let mut num: i128 = 0;
        for c in int_part.bytes().chain(frac_part.bytes()) {
            num = num
                .checked_mul(10)
                .and_then(|v| v.checked_add(i128::from(c - b'0')))
                .ok_or(RationalError::Overflow)?;
        }
        let exp = u32::try_from(frac_part.len()).map_err(|_| RationalError::Overflow)?;
        let den = 10i128.checked_pow(exp).ok_or(RationalError::Overflow)?;
        Self::new(if negative { -num } else { num }, den)
    }
}

/// Magnitude of a 256-bit product as `(high, low)` limbs.
fn wide_mul(x: u128, y: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (x_hi, x_lo) = (x >> 64, x & MASK);
    let (y_hi, y_lo) = (y >> 64, y & MASK);
    let lo_lo = x_lo * y_lo;
    let hi_lo = x_hi * y_lo;
    let lo_hi = x_lo * y_hi;
    let hi_hi = x_hi * y_hi;
    let cross = (lo_lo >> 64) + (hi_lo & MASK) + (lo_hi & MASK);
    let low = (cross << 64) | (lo_lo & MASK);
    let high = hi_hi + (hi_lo >> 64) + (lo_hi >> 64) + (cross >> 64);
    (high, low)
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let sign = |v: i128| v.signum();
        match sign(self.num).cmp(&sign(other.num)) {
            Ordering::Equal => {}
            unequal => return unequal,
        }
        if self.num == 0 {
            return Ordering::Equal;
        }
        let left = wide_mul(self.num.unsigned_abs(), other.den as u128);
        let right = wide_mul(other.num.unsigned_abs(), self.den as u128);
        let magnitude = left.cmp(&right);
        if self.num < 0 {
            magnitude.reverse()
        } else {
            magnitude
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact ordering of `x` against `y`.
pub fn compare(x: &Rational, y: &Rational) -> Ordering {
    x.cmp(y)
}

impl Default for Rational {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<i64> for Rational {
    fn from(value: i64) -> Self {
        Self::from_integer(i128::from(value))
    }
}

macro_rules! panicking_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$checked(rhs).expect(concat!(
                    "rational ",
                    stringify!($method),
                    " overflowed or divided by zero"
                ))
            }
        }
    };
}

panicking_op!(Add, add, checked_add);
panicking_op!(Sub, sub, checked_sub);
panicking_op!(Mul, mul, checked_mul);
panicking_op!(Div, div, checked_div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        self.checked_neg().expect("rational negation overflowed")
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rational {
    type Err = RationalError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        match text.split_once('/') {
            Some((p, q)) => {
                let parse = |s: &str| {
                    let s = s.trim();
                    let unsigned = s.strip_prefix(['-', '+']).unwrap_or(s);
                    if unsigned.is_empty() || !unsigned.bytes().all(|c| c.is_ascii_digit()) {
                        return Err(RationalError::Parse(text.into()));
                    }
                    s.parse::<i128>().map_err(|_| RationalError::Overflow)
                };
                Self::new(parse(p)?, parse(q)?)
            }
            None => Self::parse_decimal(text),
        }
    }
}

/// Parses `p/q` or a finite decimal into an exact fraction.
pub fn parse_rational(text: &str) -> Result<Rational, RationalError> {
    text.parse()
}

#[cfg(feature = "serde")]
impl serde::Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = <alloc::string::String as serde::Deserialize>::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn normalizes_on_construction() {
        assert_eq!(r(2, 7), Rational { num: 2, den: 7 });
        assert_eq!(r(3, -6), Rational { num: -1, den: 2 });
        assert_eq!(r(10, 100), Rational { num: 1, den: 10 });
        assert_eq!(r(0, -5), Rational::ZERO);
        assert_eq!(Rational::new(1, 0), Err(RationalError::ZeroDenominator));
    }

    #[test]
    fn extreme_magnitudes() {
        assert_eq!(Rational::new(i128::MIN, 1), Ok(Rational { num: i128::MIN, den: 1 }));
        assert_eq!(Rational::new(1, i128::MIN), Err(RationalError::Overflow));
        assert_eq!(Rational::new(i128::MIN, -1), Err(RationalError::Overflow));
        assert_eq!(Rational::new(i128::MIN, 2), Ok(r(i128::MIN / 2, 1)));
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("2/7").unwrap(), r(2, 7));
        assert_eq!(parse_rational("0.95").unwrap(), r(19, 20));
        assert_eq!(parse_rational("0.4").unwrap(), r(2, 5));
        assert_eq!(parse_rational(" -3/6 ").unwrap(), r(-1, 2));
        assert_eq!(parse_rational(".25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("1").unwrap(), Rational::ONE);
        assert_eq!(parse_rational("1.000").unwrap(), Rational::ONE);
        for bad in ["", "abc", "1/0", "1/", "/2", "0.9.1", "1e-3", "0x10", ".", "-", "1/-"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should not parse");
        }
        assert_eq!(parse_rational("3/0"), Err(RationalError::ZeroDenominator));
    }

    #[test]
    fn compares_exactly() {
        // 0.9 / 8 against alpha = 1/10
        assert_eq!(compare(&r(9, 80), &r(1, 10)), Ordering::Greater);
        assert_eq!(compare(&r(1, 2), &r(1, 2)), Ordering::Equal);
        assert_eq!(compare(&r(3, 7), &r(1, 2)), Ordering::Less);
        assert!(r(-1, 2) < r(1, 3));
        assert!(r(-1, 2) < r(-1, 3));
        assert!(Rational::ZERO > r(-1, 1000));
    }

    #[test]
    fn compares_near_the_128_bit_limit() {
        let big = i128::MAX;
        let a = r(big, big - 1);
        let b = r(big - 1, big - 2);
        // (M)/(M-1) < (M-1)/(M-2) since M(M-2) = (M-1)^2 - 1
        assert!(a < b);
        assert!(r(big, 3) > r(big - 1, 3));
        assert!(r(-big, 3) < r(-(big - 1), 3));
        assert_eq!(r(big, big), Rational::ONE);
    }

    #[test]
    fn wide_mul_matches_known_products() {
        assert_eq!(wide_mul(u128::MAX, u128::MAX), (u128::MAX - 1, 1));
        assert_eq!(wide_mul(1 << 64, 1 << 64), (1, 0));
        assert_eq!(wide_mul(12345, 6789), (0, 12345 * 6789));
    }

    #[test]
    fn arithmetic_and_rounding() {
        assert_eq!(r(1, 2) + r(1, 3), r(5, 6));
        assert_eq!(r(1, 2) - r(1, 3), r(1, 6));
        assert_eq!(r(3, 2) * r(2, 7), r(3, 7));
        assert_eq!(r(9, 10) / r(8, 1), r(9, 80));
        assert_eq!(-r(1, 2), r(-1, 2));
        assert_eq!(r(17, 2).ceil(), 9);
        assert_eq!(r(-17, 2).ceil(), -8);
        assert_eq!(r(-17, 2).floor(), -9);
        assert_eq!(r(18, 2).ceil(), 9);
        assert!(Rational::from_integer(i128::MAX).checked_add(Rational::ONE).is_none());
        assert!(Rational::ZERO.checked_recip().is_none());
    }

    #[test]
    fn display_round_trips() {
        for v in [r(2, 7), r(-1, 2), Rational::ONE, Rational::ZERO] {
            let text = alloc::format!("{v}");
            assert_eq!(text.parse::<Rational>().unwrap(), v);
        }
        assert_eq!(alloc::format!("{}", r(19, 20)), "19/20");
    }

    /// sign(x - y) = sign(xn·yd - yn·xd) · sign(xd·yd), evaluated in i128
    /// on unreduced i64 operands.
    fn oracle_cmp(x: (i64, i64), y: (i64, i64)) -> Ordering {
        let (xn, xd) = (x.0 as i128, x.1 as i128);
        let (yn, yd) = (y.0 as i128, y.1 as i128);
        let s = xd.signum() * yd.signum();
        (xn * yd * s).cmp(&(yn * xd * s))
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(n in -1_000_000i128..1_000_000, d in 1i128..1_000_000, k in prop_oneof![-1000i128..-1, 1i128..1000]) {
            let base = r(n, d);
            prop_assert_eq!(r(base.numer() * k, base.denom() * k), base);
            prop_assert!(base.den > 0);
            if base.num == 0 {
                prop_assert_eq!(base.den, 1);
            } else {
                prop_assert_eq!(gcd_u128(base.num.unsigned_abs(), base.den as u128), 1);
            }
        }

        #[test]
        fn ordering_matches_cross_multiplication(xn in any::<i64>(), xd in any::<i64>().prop_filter("nonzero", |v| *v != 0),
                                                 yn in any::<i64>(), yd in any::<i64>().prop_filter("nonzero", |v| *v != 0)) {
            let x = r(xn.into(), xd.into());
            let y = r(yn.into(), yd.into());
            prop_assert_eq!(compare(&x, &y), oracle_cmp((xn, xd), (yn, yd)));
        }

        #[test]
        fn decimal_fraction_digits(digits in "[0-9]{1,30}") {
            let parsed = parse_rational(&alloc::format!("0.{digits}")).unwrap();
            let num: i128 = digits.parse().unwrap();
            let den = 10i128.pow(digits.len() as u32);
            prop_assert_eq!(parsed, r(num, den));
        }
    }
}
