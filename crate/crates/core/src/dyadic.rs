//! Exact binary fractions.
//!
//! Every finite `f64` is a dyadic rational and midpoints of dyadic rationals
//! are dyadic again, so bisection coordinates can be kept exact. Arithmetic
//! panics on `i128` overflow, which needs far more than the 40 refinement
//! levels the mesh budget allows.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// The value `num / 2^exp`, normalized so that `num` is odd unless it is zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Dyadic {
    num: i128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, exp: 0 };

    pub fn new(num: i128, exp: u32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let tz = num.trailing_zeros().min(exp);
        Dyadic { num: num >> tz, exp: exp - tz }
    }

    pub fn from_int(k: i64) -> Self {
        Dyadic::new(k as i128, 0)
    }

    /// Exact conversion. Returns `None` for non-finite input or magnitudes
    /// that do not fit the representation.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::ZERO);
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (mant, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1i128 << 52), biased - 1075)
        };
        if e >= 0 {
            if e > 70 {
                return None;
            }
            Some(Dyadic::new(sign * (mant << e), 0))
        } else {
            Some(Dyadic::new(sign * mant, (-e) as u32))
        }
    }

    pub fn to_f64(self) -> f64 {
        let mut v = self.num as f64;
        let mut e = self.exp;
        while e > 0 {
            let step = e.min(1000);
            v *= 2f64.powi(-(step as i32));
            e -= step;
        }
        v
    }

    /// True when the value survives a round trip through `f64`.
    pub fn is_f64_exact(self) -> bool {
        Dyadic::from_f64(self.to_f64()) == Some(self)
    }

    pub fn num(self) -> i128 {
        self.num
    }

    pub fn exp(self) -> u32 {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn signum(self) -> i32 {
        self.num.signum() as i32
    }

    pub fn half(self) -> Self {
        Dyadic::new(self.num, self.exp + 1)
    }

    pub fn midpoint(a: Dyadic, b: Dyadic) -> Dyadic {
        (a + b).half()
    }

    pub fn scale_int(self, k: i64) -> Self {
        let num = self
            .num
            .checked_mul(k as i128)
            .expect("dyadic overflow in integer scaling");
        Dyadic::new(num, self.exp)
    }

    fn aligned(self, other: Dyadic) -> (i128, i128, u32) {
        let e = self.exp.max(other.exp);
        (shl(self.num, e - self.exp), shl(other.num, e - other.exp), e)
    }
}

fn shl(num: i128, k: u32) -> i128 {
    if num == 0 {
        return 0;
    }
    assert!(k < 127, "dyadic overflow in alignment");
    num.checked_mul(1i128 << k).expect("dyadic overflow in alignment")
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow in addition"), e)
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
        Dyadic { num: -self.num, exp: self.exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Dyadic) -> Dyadic {
        let num = self
            .num
            .checked_mul(rhs.num)
            .expect("dyadic overflow in multiplication");
        Dyadic::new(num, self.exp + rhs.exp)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(*other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f64_round_trip() {
        for x in [0.0, 1.0, -0.5, 0.1, 3.75, 1e-300, 5e-324, 1e20] {
            let d = Dyadic::from_f64(x).unwrap();
            assert_eq!(d.to_f64(), x);
        }
        assert!(Dyadic::from_f64(f64::NAN).is_none());
        assert!(Dyadic::from_f64(f64::INFINITY).is_none());
    }

    #[test]
    fn normalization() {
        assert_eq!(Dyadic::new(4, 3), Dyadic::new(1, 1));
        assert_eq!(Dyadic::new(0, 9), Dyadic::ZERO);
        assert_eq!(Dyadic::from_f64(0.75).unwrap(), Dyadic::new(3, 2));
    }

    #[test]
    fn midpoint_is_exact() {
        let a = Dyadic::from_f64(0.1).unwrap();
        let b = Dyadic::from_f64(0.3).unwrap();
        let m = Dyadic::midpoint(a, b);
        assert_eq!(m + m, a + b);
        assert!(a < m && m < b);
    }

    proptest! {
        #[test]
        fn ring_laws(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e3f64..1e3) {
            let (x, y, z) = (
                Dyadic::from_f64(a).unwrap(),
                Dyadic::from_f64(b).unwrap(),
                Dyadic::from_f64(c).unwrap(),
            );
            prop_assert_eq!(x + y, y + x);
            prop_assert_eq!((x + y) - y, x);
            prop_assert_eq!(x * z, z * x);
            prop_assert_eq!(x < y, a < b);
            prop_assert_eq!((x + y).to_f64(), a + b);
        }
    }
}
