//! Lambda-sums of binary words and the level sets they generate.
//!
//! A word `ω = (ω_1, …, ω_n)` evaluates to `Σ ω_i λ^i`. All sums are taken in
//! Horner form from the highest index down, so a word and any concatenation
//! built on top of it share their floating-point rounding exactly.

use std::fmt;

use rayon::slice::ParallelSliceMut;
use serde::Serialize;

use crate::{Error, Result};

pub const DEFAULT_MERGE_TOL: f64 = 1e-10;
pub const DEFAULT_LEVEL_CAP: usize = 28;
/// Largest level accepted by the exhaustive witness search.
pub const EXHAUSTIVE_WITNESS_CAP: usize = 24;
/// Residual bound a multinacci tag must satisfy.
pub const MULTINACCI_RESIDUAL: f64 = 1e-12;

/// A parameter `λ ∈ (½, 1)`, optionally tagged as the multinacci number of
/// some order `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda {
    value: f64,
    multinacci_order: Option<u32>,
}

impl Lambda {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.5 && value < 1.0) {
            return Err(Error::InvalidLambda(value));
        }
        Ok(Self {
            value,
            multinacci_order: None,
        })
    }

    /// Tags `value` with multinacci order `m` after checking the defining
    /// equation.
    pub fn with_multinacci(value: f64, m: u32) -> Result<Self> {
        let mut lambda = Self::new(value)?;
        if m < 2 {
            return Err(Error::InvalidOrder { m, lo: 2, hi: u32::MAX });
        }
        let residual = multinacci_residual(value, m);
        if residual.abs() >= MULTINACCI_RESIDUAL {
            return Err(Error::InvalidMultinacciTag {
                value,
                order: m,
                residual,
            });
        }
        lambda.multinacci_order = Some(m);
        Ok(lambda)
    }

    /// The multinacci number of order `m`, bisected to full precision.
    pub fn multinacci(m: u32) -> Result<Self> {
        Self::with_multinacci(multinacci_root(m, 0.0)?, m)
    }

    pub fn golden() -> Self {
        Self::multinacci(2).expect("order 2 is valid")
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn multinacci_order(&self) -> Option<u32> {
        self.multinacci_order
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.multinacci_order {
            Some(m) => write!(f, "{} (multinacci {m})", self.value),
            None => write!(f, "{}", self.value),
        }
    }
}

/// `λ^m + ⋯ + λ − 1`.
pub fn multinacci_residual(x: f64, m: u32) -> f64 {
    let mut acc = 0.0;
    for _ in 0..m {
        acc = (acc + 1.0) * x;
    }
    acc - 1.0
}

/// Root of `λ^m + ⋯ + λ − 1` in `(½, 1)` by bisection.
///
/// Stops once the bracket is narrower than `tol` and the residual meets the
/// tag bound, or once the bracket can no longer shrink in binary64.
pub fn multinacci_root(m: u32, tol: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidOrder { m, lo: 2, hi: u32::MAX });
    }
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if multinacci_residual(mid, m) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let best = if multinacci_residual(lo, m).abs() <= multinacci_residual(hi, m).abs() {
            lo
        } else {
            hi
        };
        if hi - lo <= tol && multinacci_residual(best, m).abs() < MULTINACCI_RESIDUAL {
            return Ok(best);
        }
    }
    if multinacci_residual(lo, m).abs() <= multinacci_residual(hi, m).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

/// A finite word over `{0, 1}`. `bits[i-1]` is `ω_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word {
    bits: Vec<u8>,
}

impl Word {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&d) = bits.iter().find(|&&d| d > 1) {
            return Err(Error::InvalidDigit(d));
        }
        Ok(Self { bits })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Word of length `n` whose bit `i-1` of `index` is `ω_i`.
    pub fn from_index(index: u64, n: usize) -> Self {
        Self {
            bits: (0..n).map(|i| ((index >> i) & 1) as u8).collect(),
        }
    }

    /// Inverse of [`Word::from_index`]; `None` past 64 letters.
    pub fn to_index(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &d)| acc | (u64::from(d) << i)),
        )
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Word { bits }
    }

    pub fn push(&mut self, d: u8) {
        assert!(d <= 1, "digit must be binary");
        self.bits.push(d);
    }
}

impl std::str::FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '_'))
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidDigit(other.to_digit(36).unwrap_or(255) as u8)),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Word { bits })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.bits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn diameter(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// The distinct values of `F_{λ,n}` in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub n: usize,
    pub values: Vec<f64>,
    pub merge_tol: f64,
    /// Always `2^n`.
    pub raw_count: u64,
    /// Number of distinct sums under exact floating equality.
    pub exact_count: usize,
}

impl LevelSet {
    /// Count after merging gaps `≤ merge_tol`.
    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// `I_λ = [0, λ/(1−λ)]`.
pub fn lambda_interval(lambda: &Lambda) -> Interval {
    let l = lambda.value();
    Interval::new(0.0, l / (1.0 - l))
}

pub fn eval_word(lambda: &Lambda, word: &Word) -> f64 {
    g_map(lambda, word, 0.0)
}

/// `g_ω(x) = Σ ω_i λ^i + λ^n x`.
pub fn g_map(lambda: &Lambda, word: &Word, x: f64) -> f64 {
    let l = lambda.value();
    word.bits
        .iter()
        .rev()
        .fold(x, |v, &d| (v + f64::from(d)) * l)
}

/// All `2^n` sums indexed by word, bit `i-1` of the index holding `ω_i`.
pub fn raw_sums(lambda: &Lambda, n: usize, cap: usize) -> Result<Vec<f64>> {
    if n > cap {
        return Err(Error::LevelTooLarge { n, cap });
    }
    let l = lambda.value();
    let mut sums = Vec::with_capacity(1usize << n);
    sums.push(0.0);
    for _ in 0..n {
        let len = sums.len();
        sums.resize(2 * len, 0.0);
        // Descending so every source entry is read before it is overwritten.
        for t in (0..len).rev() {
            let v = sums[t];
            sums[2 * t + 1] = (v + 1.0) * l;
            sums[2 * t] = v * l;
        }
    }
    Ok(sums)
}

pub fn enumerate_level(lambda: &Lambda, n: usize, merge_tol: f64) -> Result<LevelSet> {
    enumerate_level_capped(lambda, n, merge_tol, DEFAULT_LEVEL_CAP)
}

pub fn enumerate_level_capped(
    lambda: &Lambda,
    n: usize,
    merge_tol: f64,
    cap: usize,
) -> Result<LevelSet> {
    let mut sums = raw_sums(lambda, n, cap)?;
    sums.par_sort_unstable_by(f64::total_cmp);
    let mut exact_count = 0;
    let mut values = Vec::new();
    let mut prev: Option<f64> = None;
    for &v in &sums {
        match prev {
            Some(p) => {
                if v != p {
                    exact_count += 1;
                }
                if v - p > merge_tol {
                    values.push(v);
                }
            }
            None => {
                exact_count += 1;
                values.push(v);
            }
        }
        prev = Some(v);
    }
    Ok(LevelSet {
        n,
        values,
        merge_tol,
        raw_count: 1u64 << n,
        exact_count,
    })
}

/// `(n, log₂ #F_{λ,n} / n)` for `n = 1..=n_max`.
pub fn tau_estimate(lambda: &Lambda, n_max: usize, merge_tol: f64) -> Result<Vec<(usize, f64)>> {
    if n_max > DEFAULT_LEVEL_CAP {
        return Err(Error::LevelTooLarge {
            n: n_max,
            cap: DEFAULT_LEVEL_CAP,
        });
    }
    (1..=n_max)
        .map(|n| {
            let level = enumerate_level(lambda, n, merge_tol)?;
            Ok((n, (level.count() as f64).log2() / n as f64))
        })
        .collect()
}

/// `log₂(2^{n+1} − 1)/(n+1)`, the growth bound implied by a witness of
/// length `n`.
pub fn witness_tau_bound(n: usize) -> f64 {
    let k = (n + 1) as i32;
    (2f64.powi(k) - 1.0).log2() / f64::from(k)
}

/// Greedy search for a word with `Σ ω_i λ^i = 1` up to `tol`.
///
/// `ω_i = 1` exactly when adding `λ^i` keeps the partial sum at most `1 + tol`.
pub fn gamma_witness(lambda: &Lambda, n_max: usize, tol: f64) -> Option<Word> {
    let l = lambda.value();
    let mut word = Word::empty();
    let mut partial = 0.0;
    let mut p = 1.0;
    for _ in 0..n_max {
        p *= l;
        if partial + p <= 1.0 + tol {
            partial += p;
            word.push(1);
            if (partial - 1.0).abs() <= tol {
                return Some(word);
            }
        } else {
            word.push(0);
        }
    }
    None
}

/// Shortest word (ties broken by smallest index) whose sum is within `tol`
/// of 1, searching every word up to length `n_max ≤ 24`.
pub fn gamma_witness_exhaustive(lambda: &Lambda, n_max: usize, tol: f64) -> Result<Option<Word>> {
    let sums = raw_sums(lambda, n_max, EXHAUSTIVE_WITNESS_CAP)?;
    // Trailing zeros leave a Horner sum unchanged, so the effective length is
    // the position of the highest set bit.
    let best = sums
        .iter()
        .enumerate()
        .filter(|(_, &v)| (v - 1.0).abs() <= tol)
        .map(|(idx, _)| (64 - (idx as u64).leading_zeros() as usize, idx as u64))
        .min();
    Ok(best.map(|(len, idx)| Word::from_index(idx, len)))
}

/// Whether `S_1 ∘ S_2^m = S_2 ∘ S_1^m` for `S_1(x) = λx`, `S_2(x) = λx + λ`,
/// i.e. whether the words `0 1^m` and `1 0^m` have the same sum.
pub fn collapse_check(lambda: &Lambda, m: usize) -> bool {
    assert!(m >= 2, "collapse order must be at least 2");
    let l = lambda.value();
    let slope_a = l.powi(m as i32 + 1);
    let slope_b = l.powi(m as i32 + 1);
    let mut a = vec![0u8];
    a.extend(std::iter::repeat(1).take(m));
    let mut b = vec![1u8];
    b.extend(std::iter::repeat(0).take(m));
    let ia = eval_word(lambda, &Word { bits: a });
    let ib = eval_word(lambda, &Word { bits: b });
    (slope_a - slope_b).abs() <= 1e-12 && (ia - ib).abs() <= 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(x: f64) -> Lambda {
        Lambda::new(x).unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn lambda_domain() {
        assert!(Lambda::new(0.5).is_err());
        assert!(Lambda::new(1.0).is_err());
        assert!(Lambda::new(f64::NAN).is_err());
        assert!(Lambda::with_multinacci(0.6, 2).is_err());
    }

    #[test]
    fn interval_of_two_thirds() {
        let i = lambda_interval(&lam(2.0 / 3.0));
        assert_eq!(i.lo, 0.0);
        assert!((i.hi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn interval_near_half_tends_to_one() {
        let i = lambda_interval(&lam(0.5 + 1e-9));
        assert!((i.hi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn golden_interval_is_reciprocal() {
        let g = Lambda::golden();
        let hi = lambda_interval(&g).hi;
        assert!((hi - 1.0 / g.value()).abs() < 1e-14);
        assert!((hi - 1.618033988749895).abs() < 1e-12);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_word(&lam(0.6), &Word::empty()), 0.0);
        assert!((eval_word(&lam(0.6), &w("101")) - 0.816).abs() < 1e-15);
        let g = Lambda::golden();
        assert!((eval_word(&g, &w("011")) - eval_word(&g, &w("100"))).abs() < 1e-15);
    }

    #[test]
    fn g_map_examples() {
        let l = lam(0.6);
        assert_eq!(g_map(&l, &Word::empty(), 0.37), 0.37);
        assert!((g_map(&l, &w("1"), 1.0) - 1.2).abs() < 1e-15);
        for &x in &[0.0, 0.3, 1.7] {
            let lhs = g_map(&l, &w("1"), g_map(&l, &w("0"), x));
            assert_eq!(lhs, g_map(&l, &w("10"), x));
        }
    }

    #[test]
    fn level_two_at_point_six() {
        let level = enumerate_level(&lam(0.6), 2, DEFAULT_MERGE_TOL).unwrap();
        let expect = [0.0, 0.36, 0.6, 0.96];
        assert_eq!(level.count(), 4);
        for (v, e) in level.values.iter().zip(expect) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn golden_level_three_has_seven_points() {
        let level = enumerate_level(&Lambda::golden(), 3, 1e-10).unwrap();
        assert_eq!(level.count(), 7);
        assert_eq!(level.raw_count, 8);
    }

    #[test]
    fn golden_level_twenty() {
        let level = enumerate_level(&Lambda::golden(), 20, 1e-10).unwrap();
        // Words of length 20 avoiding 011: Fib(23) - 1.
        assert_eq!(level.count(), 28656);
    }

    #[test]
    fn level_one_has_two_points() {
        for &x in &[0.51, 0.6, 0.99] {
            assert_eq!(enumerate_level(&lam(x), 1, 0.0).unwrap().count(), 2);
        }
    }

    #[test]
    fn level_cap_is_enforced() {
        assert_eq!(
            enumerate_level(&lam(0.6), 29, 0.0).unwrap_err(),
            Error::LevelTooLarge { n: 29, cap: 28 }
        );
    }

    #[test]
    fn raw_sums_agree_with_word_evaluation() {
        let l = lam(0.57);
        let sums = raw_sums(&l, 9, DEFAULT_LEVEL_CAP).unwrap();
        for (idx, &v) in sums.iter().enumerate() {
            assert_eq!(v, eval_word(&l, &Word::from_index(idx as u64, 9)));
        }
    }

    #[test]
    fn generic_lambda_has_full_growth() {
        let tau = tau_estimate(&lam(0.5772156649), 12, 0.0).unwrap();
        assert!(tau.iter().all(|&(_, t)| t == 1.0));
    }

    #[test]
    fn multinacci_roots() {
        let g = multinacci_root(2, 0.0).unwrap();
        assert!((g - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        let t = multinacci_root(3, 0.0).unwrap();
        assert!((t - 0.5436890126920764).abs() < 1e-12);
        assert!((multinacci_root(30, 0.0).unwrap() - 0.5).abs() < 1e-6);
        assert!(multinacci_root(1, 0.0).is_err());
    }

    #[test]
    fn witnesses() {
        assert_eq!(gamma_witness(&Lambda::golden(), 20, 1e-12), Some(w("11")));
        let trib = Lambda::multinacci(3).unwrap();
        assert_eq!(gamma_witness(&trib, 20, 1e-12), Some(w("111")));
        assert_eq!(gamma_witness(&lam(0.51), 20, 1e-12), None);
        assert_eq!(
            gamma_witness_exhaustive(&Lambda::golden(), 10, 1e-12).unwrap(),
            Some(w("11"))
        );
        assert_eq!(gamma_witness_exhaustive(&lam(0.51), 16, 1e-12).unwrap(), None);
    }

    #[test]
    fn witness_bound_caps_growth() {
        let g = Lambda::golden();
        let bound = witness_tau_bound(2);
        for (l, t) in tau_estimate(&g, 18, DEFAULT_MERGE_TOL).unwrap() {
            let blocks = l.div_ceil(3) as f64;
            assert!(t * l as f64 <= blocks * 7f64.log2() + 1e-12);
            if l % 3 == 0 {
                assert!(t <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn collapse() {
        assert!(collapse_check(&Lambda::golden(), 2));
        assert!(!collapse_check(&lam(0.6), 2));
        for m in 2..=8u32 {
            let l = Lambda::multinacci(m).unwrap();
            assert!(collapse_check(&l, m as usize));
            assert!(!collapse_check(&l, m as usize + 1));
            if m > 2 {
                assert!(!collapse_check(&l, m as usize - 1));
            }
        }
    }

    #[test]
    fn word_parsing() {
        assert_eq!(w("0,1,1").bits(), &[0, 1, 1]);
        assert!("012".parse::<Word>().is_err());
        assert_eq!(Word::from_index(0b110, 3), w("011"));
        assert_eq!(w("011").to_index(), Some(0b110));
    }
}
