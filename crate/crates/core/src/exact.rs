//! Exact arithmetic on binary64 inputs.
//!
//! Every finite `f64` is a dyadic rational, so comparisons that must not be
//! decided by rounding noise can be redone exactly. Two tools live here: the
//! [`Scalar`] trait, which lets interval constructions run either in `f64` or
//! in [`BigRational`], and [`DyadicPowers`], an integer evaluator for sign
//! tests of `Σ c_i λ^i` against `r λ^N`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

/// Number type the geometric constructions are generic over.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed {
    fn from_f64(x: f64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn floor_i64(&self) -> i64;

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }
}

impl Scalar for BigRational {
    fn from_f64(x: f64) -> Self {
        to_rational(x)
    }

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn floor_i64(&self) -> i64 {
        self.floor()
            .to_integer()
            .to_i64()
            .expect("floor does not fit in i64")
    }
}

/// Exact rational value of a finite binary64 number.
///
/// # Panics
///
/// Panics on NaN or infinities.
pub fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Splits a positive finite `x` into `num / 2^shift` with `num` odd or
/// `shift == 0`.
pub fn dyadic_parts(x: f64) -> (BigInt, u32) {
    assert!(x.is_finite() && x > 0.0, "dyadic_parts needs a positive finite value");
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    while mant & 1 == 0 && exp < 0 {
        mant >>= 1;
        exp += 1;
    }
    if exp >= 0 {
        (BigInt::from(mant) << exp as usize, 0)
    } else {
        (BigInt::from(mant), (-exp) as u32)
    }
}

/// Cached integer powers of a dyadic `λ = num / 2^shift`.
///
/// Decides `|Σ_{i=1}^{n} c_i λ^i| ≤ r λ^N` exactly by clearing the common
/// denominator `2^{shift·N}` (requires `N ≥ n`).
#[derive(Debug, Clone)]
pub struct DyadicPowers {
    shift: u32,
    pows: Vec<BigInt>,
}

impl DyadicPowers {
    pub fn new(lambda: f64, max_power: usize) -> Self {
        let (num, shift) = dyadic_parts(lambda);
        let mut pows = Vec::with_capacity(max_power + 1);
        pows.push(BigInt::one());
        for i in 1..=max_power {
            let next = &pows[i - 1] * &num;
            pows.push(next);
        }
        Self { shift, pows }
    }

    pub fn max_power(&self) -> usize {
        self.pows.len() - 1
    }

    /// `|Σ c_i λ^i| ≤ r λ^power` where `coeffs[i-1]` multiplies `λ^i`.
    pub fn abs_poly_le(&self, coeffs: &[i8], r: u64, power: usize) -> bool {
        assert!(power >= coeffs.len() && power <= self.max_power());
        let mut lhs = BigInt::zero();
        for (idx, &c) in coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let i = idx + 1;
            let term = &self.pows[i] << (self.shift as usize * (power - i));
            if c > 0 {
                lhs += term;
            } else {
                lhs -= term;
            }
        }
        let rhs = &self.pows[power] * BigInt::from(r);
        lhs.abs() <= rhs
    }
}

/// Reduced fraction `num/den` with `den > 0`.
pub fn reduce(num: i64, den: i64) -> (i64, i64) {
    assert!(den != 0);
    let g = num.gcd(&den);
    let (n, d) = (num / g, den / g);
    if d < 0 {
        (-n, -d)
    } else {
        (n, d)
    }
}

pub fn rational_from_ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn f64_from_ratio(num: i64, den: i64) -> f64 {
    // Both operands are exact below 2^53, and IEEE division rounds correctly.
    assert!(num.unsigned_abs() < 1 << 53 && den.unsigned_abs() < 1 << 53);
    num as f64 / den as f64
}
