use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::Value;

pub type Rational = BigRational;

/// Scalar coefficients of group-ring elements.
///
/// Implemented for exact rationals, `f64` and [`Interval`]. Each mode is a
/// distinct type, so mixing modes requires an explicit conversion.
pub trait Coefficient: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    /// Short name used in serialized files.
    const MODE: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// `|x|`; for intervals an enclosure of `{|t| : t ∈ x}`.
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;
}

impl Coefficient for Rational {
    const MODE: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Option<Self> {
        Rational::from_str(v.as_str()?).ok()
    }
}

impl Coefficient for f64 {
    const MODE: &'static str = "float";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(q: &Rational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_json(&self) -> Value {
        Value::String(format_f64(*self))
    }
    fn from_json(v: &Value) -> Option<Self> {
        v.as_str()?.parse().ok()
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Closed interval `[lo, hi]` of reals with `f64` endpoints.
///
/// Every operation returns an enclosure of the exact result: endpoints are
/// computed in double precision and pushed outward by one ulp, except when
/// an error-free transformation shows the floating-point result is exact
/// (or gives the direction of its rounding error).
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

// Below this magnitude the fma error term of a product may itself be
// rounded, so it no longer certifies exactness.
const TINY: f64 = 1e-290;

fn sum_bounds(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() {
        return (s.next_down(), s.next_up());
    }
    // TwoSum: a + b = s + e exactly.
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    match e.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Equal) => (s, s),
        Some(std::cmp::Ordering::Greater) => (s, s.next_up()),
        Some(std::cmp::Ordering::Less) => (s.next_down(), s),
        None => (f64::NEG_INFINITY, f64::INFINITY),
    }
}

fn product_bounds(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 || b == 0.0 {
        return (0.0, 0.0);
    }
    let p = a * b;
    if !p.is_finite() || p.abs() < TINY {
        return (p.next_down(), p.next_up());
    }
    let e = a.mul_add(b, -p);
    if e == 0.0 {
        (p, p)
    } else if e > 0.0 {
        (p, p.next_up())
    } else {
        (p.next_down(), p)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Exact containment test against a rational.
    pub fn contains_rational(&self, q: &Rational) -> bool {
        match (Rational::from_float(self.lo), Rational::from_float(self.hi)) {
            (Some(lo), Some(hi)) => &lo <= q && q <= &hi,
            _ => false,
        }
    }
}

impl Coefficient for Interval {
    const MODE: &'static str = "interval";

    fn zero() -> Self {
        Interval::point(0.0)
    }
    fn one() -> Self {
        Interval::point(1.0)
    }
    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }
    fn from_rational(q: &Rational) -> Self {
        let approx = q.to_f64().unwrap_or(0.0);
        let exact = |x: f64| Rational::from_float(x);
        if exact(approx).as_ref() == Some(q) {
            return Interval::point(approx);
        }
        let (mut lo, mut hi) = (approx.next_down(), approx.next_up());
        while exact(lo).is_some_and(|l| &l > q) {
            lo = lo.next_down();
        }
        while exact(hi).is_some_and(|h| &h < q) {
            hi = hi.next_up();
        }
        Interval { lo, hi }
    }
    fn add(&self, other: &Self) -> Self {
        Interval { lo: sum_bounds(self.lo, other.lo).0, hi: sum_bounds(self.hi, other.hi).1 }
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        let cands = [
            product_bounds(self.lo, other.lo),
            product_bounds(self.lo, other.hi),
            product_bounds(self.hi, other.lo),
            product_bounds(self.hi, other.hi),
        ];
        let lo = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let hi = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }
    fn neg(&self) -> Self {
        Interval { lo: -self.hi, hi: -self.lo }
    }
    fn abs(&self) -> Self {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            self.neg()
        } else {
            Interval { lo: 0.0, hi: self.hi.max(-self.lo) }
        }
    }
    fn is_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }
    fn to_json(&self) -> Value {
        Value::Array(vec![Value::String(format_f64(self.lo)), Value::String(format_f64(self.hi))])
    }
    fn from_json(v: &Value) -> Option<Self> {
        let a = v.as_array()?;
        if a.len() != 2 {
            return None;
        }
        let lo: f64 = a[0].as_str()?.parse().ok()?;
        let hi: f64 = a[1].as_str()?.parse().ok()?;
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

/// Exact rational value of a finite `f64`.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn rational_from_i64(x: i64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exact_operations_stay_points() {
        let a = Interval::from_i64(5);
        let b = Interval::from_i64(-3);
        assert_eq!(a.add(&b), Interval::point(2.0));
        assert_eq!(a.mul(&b), Interval::point(-15.0));
        assert!(Interval::zero().mul(&Interval::new(-1.0, 1.0)).is_zero());
    }

    #[test]
    fn inexact_operations_widen() {
        let third = Interval::from_rational(&q(1, 3));
        assert!(third.width() > 0.0);
        assert!(third.contains_rational(&q(1, 3)));
        let tenth = Interval::point(0.1);
        let s = tenth.add(&Interval::point(0.2));
        let exact = rational_from_f64(0.1).unwrap() + rational_from_f64(0.2).unwrap();
        assert!(s.contains_rational(&exact));
        assert!(s.width() > 0.0);
    }

    #[test]
    fn abs_enclosures() {
        assert_eq!(Interval::new(-2.0, 1.0).abs(), Interval::new(0.0, 2.0));
        assert_eq!(Interval::new(-2.0, -1.0).abs(), Interval::new(1.0, 2.0));
    }

    #[test]
    fn rational_json_roundtrip() {
        let x = q(-7, 12);
        assert_eq!(Rational::from_json(&x.to_json()), Some(x));
        let f = 0.1 + 0.2;
        assert_eq!(f64::from_json(&f.to_json()), Some(f));
    }

    fn dyadic() -> impl Strategy<Value = f64> {
        (-1_000_000i64..1_000_000, 0u32..40).prop_map(|(m, e)| m as f64 / (1u64 << e) as f64)
    }

    fn any_finite() -> impl Strategy<Value = f64> {
        prop_oneof![dyadic(), -1e6f64..1e6, -1e-3f64..1e-3]
    }

    proptest! {
        #[test]
        fn operations_enclose_exact(a in any_finite(), b in any_finite(), c in any_finite()) {
            let (ia, ib, ic) = (Interval::point(a), Interval::point(b), Interval::point(c));
            let (ra, rb, rc) = (rational_from_f64(a).unwrap(), rational_from_f64(b).unwrap(), rational_from_f64(c).unwrap());
            prop_assert!(ia.add(&ib).contains_rational(&(&ra + &rb)));
            prop_assert!(ia.sub(&ib).contains_rational(&(&ra - &rb)));
            prop_assert!(ia.mul(&ib).contains_rational(&(&ra * &rb)));
            let e = ia.mul(&ib).add(&ic).mul(&ia.sub(&ic));
            let r = (&ra * &rb + &rc) * (&ra - &rc);
            prop_assert!(e.contains_rational(&r));
            prop_assert!(ia.sub(&ib).abs().contains_rational(&Signed::abs(&(&ra - &rb))));
        }

        #[test]
        fn rational_conversion_encloses(n in -1_000_000i64..1_000_000, d in 1i64..100_000) {
            let x = q(n, d);
            prop_assert!(Interval::from_rational(&x).contains_rational(&x));
        }
    }
}
