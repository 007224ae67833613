use num_rational::BigRational;
use serde::Serialize;

use crate::exact::{to_rational, Scalar};
use crate::{Error, Interval, Lambda, Result, Word};

/// `x ↦ slope·x + offset` with `slope ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Similarity {
    pub slope: f64,
    pub offset: f64,
}

impl Similarity {
    pub fn new(slope: f64, offset: f64) -> Result<Self> {
        if slope == 0.0 || !slope.is_finite() || !offset.is_finite() {
            return Err(Error::Precondition(format!(
                "similarity needs a finite non-zero slope, got {slope}"
            )));
        }
        Ok(Self { slope, offset })
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }
}

/// Result of the cylinder search in a generic number type.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderLocation<S> {
    pub n_shift: i64,
    pub word: Word,
    pub theta: usize,
    /// Clipped preimage `Z`.
    pub preimage: (S, S),
    /// `B = f(g_ω(I_λ) + n·diam I_λ)`.
    pub image: (S, S),
}

/// `θ = ⌊log((1−λ) diam A / (4|r|)) / log λ⌋`.
pub fn theta_for(lambda: f64, diam_a: f64, slope: f64) -> usize {
    let c = (1.0 - lambda) * diam_a / (4.0 * slope.abs());
    (c.ln() / lambda.ln()).floor().max(0.0) as usize
}

fn sorted<S: Scalar>(a: S, b: S) -> (S, S) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn locate_generic<S: Scalar>(
    a_lo: &S,
    a_hi: &S,
    slope: &S,
    offset: &S,
    lambda: &S,
) -> Result<CylinderLocation<S>> {
    let zero = S::zero();
    let one = S::one();
    let d = lambda.clone() / (one - lambda.clone());
    let diam_a = a_hi.clone() - a_lo.clone();
    if !(diam_a > zero) {
        return Err(Error::Precondition("A must have non-empty interior".into()));
    }
    if !(diam_a < slope.abs() * d.clone()) {
        return Err(Error::Precondition(format!(
            "diam(A) = {} is not below |f'| diam(I_lambda) = {}",
            diam_a.to_f64(),
            (slope.abs() * d.clone()).to_f64()
        )));
    }
    let (p_lo, p_hi) = sorted(
        (a_lo.clone() - offset.clone()) / slope.clone(),
        (a_hi.clone() - offset.clone()) / slope.clone(),
    );
    let theta = theta_for(lambda.to_f64(), diam_a.to_f64(), slope.to_f64());
    Ok(cylinder_for(&p_lo, &p_hi, slope, offset, lambda, theta))
}

/// Cylinder search with `θ` supplied by the caller; `A` must satisfy the
/// preconditions checked in [`locate_generic`].
pub(crate) fn locate_with_theta<S: Scalar>(
    a_lo: &S,
    a_hi: &S,
    slope: &S,
    offset: &S,
    lambda: &S,
    theta: usize,
) -> CylinderLocation<S> {
    let (p_lo, p_hi) = sorted(
        (a_lo.clone() - offset.clone()) / slope.clone(),
        (a_hi.clone() - offset.clone()) / slope.clone(),
    );
    cylinder_for(&p_lo, &p_hi, slope, offset, lambda, theta)
}

fn cylinder_for<S: Scalar>(
    p_lo: &S,
    p_hi: &S,
    slope: &S,
    offset: &S,
    lambda: &S,
    theta: usize,
) -> CylinderLocation<S> {
    let zero = S::zero();
    let d = lambda.clone() / (S::one() - lambda.clone());
    let base = (p_lo.clone() / d.clone()).floor_i64();
    let clipped = |n: i64| {
        let shift = S::from_i64(n) * d.clone();
        let lo = S::max_of(&(p_lo.clone() - shift.clone()), &zero);
        let hi = S::min_of(&(p_hi.clone() - shift), &d);
        (lo, hi)
    };
    let (z0, z1) = (clipped(base), clipped(base + 1));
    let len0 = z0.1.clone() - z0.0.clone();
    let len1 = z1.1.clone() - z1.0.clone();
    let (n_shift, z) = if len1 > len0 { (base + 1, z1) } else { (base, z0) };
    let x = (z.0.clone() + z.1.clone()) * S::half();

    // Greedy digits of x: keep z with x = Σ_{i≤k} ω_i λ^i + λ^k z, z ∈ I_λ.
    let mut rest = x;
    let mut word = Word::empty();
    for _ in 0..theta {
        if rest >= *lambda {
            word.push(1);
            rest = rest / lambda.clone() - S::one();
        } else {
            word.push(0);
            rest = rest / lambda.clone();
        }
        rest = S::min_of(&S::max_of(&rest, &S::zero()), &d);
    }

    let mut sum = S::zero();
    for &bit in word.bits().iter().rev() {
        sum = (sum + S::from_i64(i64::from(bit))) * lambda.clone();
    }
    let mut scale = S::one();
    for _ in 0..theta {
        scale = scale * lambda.clone();
    }
    let shift = S::from_i64(n_shift) * d.clone();
    let g_lo = sum.clone() + shift.clone();
    let g_hi = sum + scale * d + shift;
    let image = sorted(
        slope.clone() * g_lo + offset.clone(),
        slope.clone() * g_hi + offset.clone(),
    );
    CylinderLocation {
        n_shift,
        word,
        theta,
        preimage: z,
        image,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderReport {
    pub n_shift: i64,
    pub word: Word,
    pub theta: usize,
    pub image: Interval,
    pub contained: bool,
    /// `diam(B) / diam(A)`.
    pub ratio: f64,
    /// `ratio ≥ λ/4`.
    pub large: bool,
}

/// Integer shift and word with `f(g_ω(I_λ) + n·diam I_λ) ⊆ A` and diameter
/// at least `λ/4 · diam A`, located in binary64.
pub fn locate_cylinder(a: &Interval, f: &Similarity, lambda: &Lambda) -> Result<CylinderReport> {
    let loc = locate_generic(&a.lo, &a.hi, &f.slope, &f.offset, &lambda.value())?;
    let image = Interval::new(loc.image.0, loc.image.1);
    let diam = a.diameter();
    let guard = 1e-12 * diam + 8.0 * f64::EPSILON * (a.lo.abs() + a.hi.abs());
    let ratio = image.diameter() / diam;
    Ok(CylinderReport {
        n_shift: loc.n_shift,
        word: loc.word,
        theta: loc.theta,
        contained: image.lo >= a.lo - guard && image.hi <= a.hi + guard,
        large: ratio >= lambda.value() / 4.0 * (1.0 - 1e-12),
        ratio,
        image,
    })
}

/// Same search in exact rational arithmetic on the binary64 inputs.
pub fn locate_cylinder_exact(
    a_lo: &BigRational,
    a_hi: &BigRational,
    f: &Similarity,
    lambda: &Lambda,
) -> Result<CylinderLocation<BigRational>> {
    locate_generic(
        a_lo,
        a_hi,
        &to_rational(f.slope),
        &to_rational(f.offset),
        &to_rational(lambda.value()),
    )
}

#[cfg(test)]
mod tests {
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::expansion::{g_map, lambda_interval};

    #[test]
    fn identity_map_shrunk_interval() {
        let l = Lambda::new(0.6).unwrap();
        let i = lambda_interval(&l);
        let f = Similarity::new(1.0, 0.0).unwrap();
        for &c in &[0.3, 0.75, 1.2] {
            let half = 0.5 * l.value() * i.diameter() * 0.5;
            let a = Interval::new(c - half, c + half);
            let rep = locate_cylinder(&a, &f, &l).unwrap();
            assert!(rep.contained && rep.large, "{rep:?}");
        }
    }

    #[test]
    fn doubling_map_random_intervals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = Lambda::new(0.55).unwrap();
        let f = Similarity::new(2.0, 0.0).unwrap();
        for _ in 0..200 {
            let lo = rng.random_range(-5.0..5.0);
            let a = Interval::new(lo, lo + rng.random_range(1e-6..2.0));
            let rep = locate_cylinder(&a, &f, &l).unwrap();
            assert!(rep.contained && rep.large, "{a:?} {rep:?}");
            assert_eq!(rep.word.len(), theta_for(0.55, a.diameter(), 2.0));
        }
    }

    #[test]
    fn image_matches_word_map() {
        let l = Lambda::new(0.58).unwrap();
        let f = Similarity::new(-1.5, 0.25).unwrap();
        let a = Interval::new(-0.4, -0.1);
        let rep = locate_cylinder(&a, &f, &l).unwrap();
        let d = lambda_interval(&l).hi;
        let ends = [
            f.apply(g_map(&l, &rep.word, 0.0) + rep.n_shift as f64 * d),
            f.apply(g_map(&l, &rep.word, d) + rep.n_shift as f64 * d),
        ];
        assert!((ends[0].min(ends[1]) - rep.image.lo).abs() < 1e-12);
        assert!((ends[0].max(ends[1]) - rep.image.hi).abs() < 1e-12);
        assert!(rep.contained && rep.large);
    }

    #[test]
    fn exact_search_contains() {
        let l = Lambda::new(0.62).unwrap();
        let f = Similarity::new(3.0, -1.0).unwrap();
        let lo = to_rational(0.123);
        let hi = to_rational(0.9);
        let loc = locate_cylinder_exact(&lo, &hi, &f, &l).unwrap();
        assert!(loc.image.0 >= lo && loc.image.1 <= hi);
        let ratio = (&loc.image.1 - &loc.image.0) / (&hi - &lo);
        assert!(ratio * BigRational::from_integer(4.into()) >= to_rational(0.62));
        assert!(loc.preimage.0 >= BigRational::zero());
        assert!(loc.preimage.1 <= to_rational(0.62) / (BigRational::one() - to_rational(0.62)));
    }

    #[test]
    fn oversized_interval_rejected() {
        let l = Lambda::new(0.6).unwrap();
        let f = Similarity::new(1.0, 0.0).unwrap();
        assert!(locate_cylinder(&Interval::new(0.0, 1.6), &f, &l).is_err());
        assert!(locate_cylinder(&Interval::new(0.3, 0.3), &f, &l).is_err());
        assert!(Similarity::new(0.0, 1.0).is_err());
    }
}
