//! Real-scalar backends.
//!
//! Every stepper is generic over [`Real`]. Two backends are provided: `f64`
//! and [`DoubleDouble`](crate::dd::DoubleDouble), an unevaluated sum of two
//! `f64` values carrying roughly 31 significant digits.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub trait Real:
    Copy
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Backend name used in reports ("double" or "extended").
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    /// Correctly rounded image of an exact rational.
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;
    /// Unit roundoff of the backend.
    fn epsilon() -> f64;
    fn pi() -> Self;

    fn from_i64(i: i64) -> Self {
        Self::from_f64(i as f64)
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    /// Sum of `terms`, accumulated in the order given.
    fn sum(terms: &[Self]) -> Self {
        terms.iter().fold(Self::zero(), |acc, &t| acc + t)
    }

    /// `Σ weights[i] * values[i]`, accumulated in index order.
    fn dot(weights: &[Self], values: &[Self]) -> Self {
        debug_assert_eq!(weights.len(), values.len());
        weights
            .iter()
            .zip(values)
            .fold(Self::zero(), |acc, (&w, &x)| acc + w * x)
    }
}

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    let e = (a - (s - v)) + (b - v);
    (s, e)
}

/// Error-free product: `a * b = p + e` exactly (barring underflow).
#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Real for f64 {
    const NAME: &'static str = "double";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }

    // Neumaier summation.
    fn sum(terms: &[Self]) -> Self {
        let mut s = 0.0;
        let mut c = 0.0;
        for &t in terms {
            let (ns, e) = two_sum(s, t);
            s = ns;
            c += e;
        }
        s + c
    }

    // Dot2 (Ogita, Rump, Oishi): roughly twice the working precision.
    fn dot(weights: &[Self], values: &[Self]) -> Self {
        debug_assert_eq!(weights.len(), values.len());
        let mut s = 0.0;
        let mut c = 0.0;
        for (&w, &x) in weights.iter().zip(values) {
            let (p, pe) = two_prod(w, x);
            let (ns, se) = two_sum(s, p);
            s = ns;
            c += pe + se;
        }
        s + c
    }
}

/// Round an exact rational to the nearest `f64` (ties to even).
///
/// Results outside the normal range saturate to infinity or flush through the
/// subnormal range by a final (possibly double-rounded) scaling; none of the
/// coefficients this crate converts come anywhere near those limits.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.numer().is_zero() {
        return 0.0;
    }
    let negative = r.numer().sign() == Sign::Minus;
    let num: BigUint = r.numer().magnitude().clone();
    let den: BigUint = r.denom().magnitude().clone();

    // Scale so the integer quotient carries at least 55 significant bits.
    let shift = 55 - (num.bits() as i64 - den.bits() as i64);
    let (scaled_num, scaled_den) = if shift >= 0 {
        (num << shift as usize, den)
    } else {
        (num, den << (-shift) as usize)
    };
    let (quot, rem) = scaled_num.div_rem(&scaled_den);
    let sticky = !rem.is_zero();

    let extra = quot.bits() as i64 - 53;
    debug_assert!(extra >= 1);
    let low_mask = (BigUint::one() << extra as usize) - 1u32;
    let low = &quot & &low_mask;
    let half = BigUint::one() << (extra - 1) as usize;
    let mut mantissa = u64::try_from(&quot >> extra as usize).expect("53-bit mantissa");
    let round_up = low > half || (low == half && (sticky || mantissa & 1 == 1));
    let mut exponent = extra - shift;
    if round_up {
        mantissa += 1;
        if mantissa == 1 << 53 {
            mantissa >>= 1;
            exponent += 1;
        }
    }
    let magnitude = scale_by_pow2(mantissa as f64, exponent);
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

fn scale_by_pow2(mut x: f64, mut exp: i64) -> f64 {
    while exp > 1000 {
        x *= 2f64.powi(1000);
        exp -= 1000;
    }
    while exp < -1000 {
        x *= 2f64.powi(-1000);
        exp += 1000;
    }
    x * 2f64.powi(exp as i32)
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite f64")
}

pub(crate) fn rational_from_ints(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_rationals_round_correctly() {
        assert_eq!(rational_to_f64(&rational_from_ints(-1, 3)), -1.0 / 3.0);
        assert_eq!(rational_to_f64(&rational_from_ints(81, 40)), 81.0 / 40.0);
        assert_eq!(
            rational_to_f64(&rational_from_ints(390625, 72576)),
            390625.0 / 72576.0
        );
        assert_eq!(rational_to_f64(&rational_from_ints(1, 1)), 1.0);
        assert_eq!(rational_to_f64(&rational_from_ints(0, 7)), 0.0);
    }

    #[test]
    fn ties_go_to_even() {
        // 2^53 + 1 sits halfway between 2^53 and 2^53 + 2.
        let big = BigRational::from_integer(BigInt::from((1u64 << 53) + 1));
        assert_eq!(rational_to_f64(&big), 9007199254740992.0);
        let big = BigRational::from_integer(BigInt::from((1u64 << 53) + 3));
        assert_eq!(rational_to_f64(&big), 9007199254740996.0);
    }

    #[test]
    fn exact_floats_round_trip() {
        for &x in &[0.1, -2.5e-300, 1.0e300, std::f64::consts::PI, 1.0 / 3.0] {
            assert_eq!(rational_to_f64(&f64_to_rational(x)), x);
        }
    }

    #[test]
    fn compensated_dot_recovers_cancellation() {
        let w = [1.0, 1.0, -1.0];
        let x = [1.0e16, 1.0, 1.0e16];
        assert_eq!(<f64 as Real>::dot(&w, &x), 1.0);
        assert_eq!(<f64 as Real>::sum(&[1.0e16, 1.0, -1.0e16]), 1.0);
    }

    proptest! {
        // IEEE division of two exactly representable integers is correctly rounded.
        #[test]
        fn matches_ieee_division(p in -(1i64 << 52)..(1i64 << 52), q in 1i64..(1i64 << 52)) {
            let r = rational_from_ints(p, q);
            prop_assert_eq!(rational_to_f64(&r), p as f64 / q as f64);
        }
    }
}
