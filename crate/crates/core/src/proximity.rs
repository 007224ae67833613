//! Pairs of words whose lambda-sums are close.
//!
//! `P̃_n(λ,k,r)` counts ordered pairs `(ω, κ)` of length-`n` words with
//! `|Σ (ω_i − κ_i) λ^i| ≤ r λ^{n+k}`; `P_n(λ,k,r)` keeps only the pairs with
//! `ω_1 ≠ κ_1`. Both counts are exact: sums are compared in floating point
//! where the answer is unambiguous and in integer arithmetic otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::exact::DyadicPowers;
use crate::expansion::{raw_sums, DEFAULT_LEVEL_CAP};
use crate::grid::{lambda_grid, GridPoint};
use crate::{Error, Interval, Lambda, Result, Word};

/// Default level cap for pair counts.
pub const PAIR_CAP: usize = 16;
/// Hard cap for the sorted counting method.
pub const SORTED_PAIR_CAP: usize = 24;

pub const PARAM_LO: f64 = 0.5;
pub const PARAM_HI: f64 = 2.0 / 3.0;

/// `p(λ) = Σ c_i λ^i` with `c_i ∈ {−1, 0, 1}`; `coeffs[0]` is `c_1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignedPoly {
    coeffs: Vec<i8>,
}

impl SignedPoly {
    pub fn new(coeffs: Vec<i8>) -> Result<Self> {
        if let Some(&c) = coeffs.iter().find(|c| !(-1..=1).contains(*c)) {
            return Err(Error::Precondition(format!("coefficient {c} not in {{-1,0,1}}")));
        }
        Ok(Self { coeffs })
    }

    /// Coefficient differences `ω_i − κ_i` of two words of equal length.
    pub fn from_words(omega: &Word, kappa: &Word) -> Result<Self> {
        if omega.len() != kappa.len() {
            return Err(Error::Precondition("words must have equal length".into()));
        }
        Ok(Self {
            coeffs: omega
                .bits()
                .iter()
                .zip(kappa.bits())
                .map(|(&a, &b)| a as i8 - b as i8)
                .collect(),
        })
    }

    pub fn coeffs(&self) -> &[i8] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0).map_or(0, |i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| (acc + f64::from(c)) * x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (idx, &c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * x + (idx + 1) as f64 * f64::from(c);
        }
        acc
    }

    /// Bound on `|p'|` over `[0, hi]`.
    fn lipschitz(&self, hi: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| (idx + 1) as f64 * f64::from(c.abs()) * hi.powi(idx as i32))
            .sum()
    }
}

/// Ordered pairs `(x, y) ∈ a × b` with `|x − y| ≤ r`.
pub fn count_near_pairs(values_a: &[f64], values_b: &[f64], r: f64) -> u64 {
    let mut b = values_b.to_vec();
    b.sort_unstable_by(f64::total_cmp);
    let mut a = values_a.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    // Rounded differences are monotone in each argument, so both window edges
    // only move forward as x increases.
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut total = 0u64;
    for &x in &a {
        while lo < b.len() && x - b[lo] > r {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < b.len() && b[hi] - x <= r {
            hi += 1;
        }
        total += (hi - lo) as u64;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProximityCount {
    pub n: usize,
    pub k: usize,
    pub r: u64,
    pub tilde_count: u64,
    pub restricted_count: u64,
}

/// Sorted level-`n` sums ready for repeated pair counts.
#[derive(Debug, Clone)]
struct LevelPairs {
    n: usize,
    sorted: Vec<f64>,
    words: Vec<u32>,
    first_ones: Vec<u32>,
    sum_scale: f64,
}

impl LevelPairs {
    fn new(lambda: &Lambda, n: usize) -> Result<Self> {
        if n > SORTED_PAIR_CAP {
            return Err(Error::LevelTooLarge {
                n,
                cap: SORTED_PAIR_CAP,
            });
        }
        let sums = raw_sums(lambda, n, DEFAULT_LEVEL_CAP)?;
        let mut order: Vec<u32> = (0..sums.len() as u32).collect();
        order.sort_unstable_by(|&i, &j| sums[i as usize].total_cmp(&sums[j as usize]).then(i.cmp(&j)));
        let sorted: Vec<f64> = order.iter().map(|&i| sums[i as usize]).collect();
        let mut first_ones = Vec::with_capacity(order.len() + 1);
        first_ones.push(0);
        let mut acc = 0;
        for &w in &order {
            acc += w & 1;
            first_ones.push(acc);
        }
        let l = lambda.value();
        Ok(Self {
            n,
            sorted,
            words: order,
            first_ones,
            sum_scale: l / (1.0 - l),
        })
    }

    fn opposite_first(&self, bit: u32, lo: usize, hi: usize) -> u64 {
        let ones = u64::from(self.first_ones[hi] - self.first_ones[lo]);
        if bit == 1 {
            (hi - lo) as u64 - ones
        } else {
            ones
        }
    }

    fn exact_inside(&self, powers: &DyadicPowers, a: u32, b: u32, r: u64, power: usize) -> bool {
        let mut coeffs = [0i8; SORTED_PAIR_CAP];
        for (i, c) in coeffs.iter_mut().enumerate().take(self.n) {
            *c = ((a >> i) & 1) as i8 - ((b >> i) & 1) as i8;
        }
        powers.abs_poly_le(&coeffs[..self.n], r, power)
    }

    fn count(&self, lambda: f64, powers: &DyadicPowers, k: usize, r: u64) -> ProximityCount {
        let power = self.n + k;
        let thr = r as f64 * lambda.powi(power as i32);
        // Forward error of a Horner sum plus the subtraction, with slack.
        let margin = 16.0 * (self.n + power + 4) as f64 * f64::EPSILON * 0.5 * (self.sum_scale + thr);
        let thr_in = thr - margin;
        let thr_out = thr + margin;
        let v = &self.sorted;
        let mut tilde = 0u64;
        let mut restricted = 0u64;
        for (i, &x) in v.iter().enumerate() {
            let out_lo = v.partition_point(|&y| x - y > thr_out);
            let out_hi = v.partition_point(|&y| y - x <= thr_out);
            let (in_lo, in_hi) = if thr_in >= 0.0 {
                (
                    v.partition_point(|&y| x - y > thr_in),
                    v.partition_point(|&y| y - x <= thr_in),
                )
            } else {
                (i, i)
            };
            let wi = self.words[i];
            tilde += (in_hi - in_lo) as u64;
            restricted += self.opposite_first(wi & 1, in_lo, in_hi);
            for j in (out_lo..in_lo).chain(in_hi..out_hi) {
                let wj = self.words[j];
                if self.exact_inside(powers, wi, wj, r, power) {
                    tilde += 1;
                    if (wi ^ wj) & 1 == 1 {
                        restricted += 1;
                    }
                }
            }
        }
        ProximityCount {
            n: self.n,
            k,
            r,
            tilde_count: tilde,
            restricted_count: restricted,
        }
    }
}

/// Pair counts for one `λ` at every level up to `n_max` and offset up to
/// `k_max`.
#[derive(Debug, Clone)]
pub struct ProximityTable {
    lambda: f64,
    k_max: usize,
    levels: Vec<LevelPairs>,
    powers: DyadicPowers,
}

impl ProximityTable {
    pub fn new(lambda: &Lambda, n_max: usize, k_max: usize) -> Result<Self> {
        let levels = (1..=n_max)
            .map(|n| LevelPairs::new(lambda, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda: lambda.value(),
            k_max,
            levels,
            powers: DyadicPowers::new(lambda.value(), n_max + k_max),
        })
    }

    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    /// Counts at level `n ≥ 1`, offset `k ≤ k_max`, radius multiplier `r`.
    pub fn count(&self, n: usize, k: usize, r: u64) -> ProximityCount {
        assert!(n >= 1 && n <= self.n_max(), "level {n} outside table");
        assert!(k <= self.k_max, "offset {k} outside table");
        self.levels[n - 1].count(self.lambda, &self.powers, k, r)
    }
}

pub fn proximity_counts(lambda: &Lambda, n: usize, k: usize, r: u64) -> Result<ProximityCount> {
    proximity_counts_capped(lambda, n, k, r, PAIR_CAP)
}

pub fn proximity_counts_capped(
    lambda: &Lambda,
    n: usize,
    k: usize,
    r: u64,
    cap: usize,
) -> Result<ProximityCount> {
    let cap = cap.min(SORTED_PAIR_CAP);
    if n > cap {
        return Err(Error::LevelTooLarge { n, cap });
    }
    if n == 0 {
        return Ok(ProximityCount {
            n,
            k,
            r,
            tilde_count: 1,
            restricted_count: 0,
        });
    }
    let level = LevelPairs::new(lambda, n)?;
    let powers = DyadicPowers::new(lambda.value(), n + k);
    Ok(level.count(lambda.value(), &powers, k, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InequalityReport {
    pub n: usize,
    pub k: usize,
    pub r: u64,
    pub lhs: u128,
    pub rhs: u128,
    pub holds: bool,
}

fn inequality_from_table(table: &ProximityTable, n: usize, k: usize, r: u64) -> InequalityReport {
    let lhs = u128::from(table.count(n, k, r).tilde_count);
    let mut rhs = 1u128 << n;
    for l in 1..=n {
        rhs += (1u128 << (n - l)) * u128::from(table.count(l, k, r).restricted_count);
    }
    InequalityReport {
        n,
        k,
        r,
        lhs,
        rhs,
        holds: lhs <= rhs,
    }
}

/// `P̃_n ≤ 2^n + Σ_{l=1}^{n} 2^{n−l} P_l`, both sides exact.
pub fn verify_proximity_inequality(
    lambda: &Lambda,
    n: usize,
    k: usize,
    r: u64,
) -> Result<InequalityReport> {
    if n > PAIR_CAP {
        return Err(Error::LevelTooLarge { n, cap: PAIR_CAP });
    }
    if n == 0 {
        return Ok(InequalityReport {
            n,
            k,
            r,
            lhs: 1,
            rhs: 1,
            holds: true,
        });
    }
    let table = ProximityTable::new(lambda, n, k)?;
    Ok(inequality_from_table(&table, n, k, r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInequalityRow {
    pub point: GridPoint,
    pub lambda: f64,
    pub report: InequalityReport,
}

/// The inequality at every grid point, level `1..=n_max`, offset `0..=k_max`
/// and radius in `radii`. Rows come back sorted by `λ`, then `n, k, r`.
pub fn verify_proximity_grid(
    grid_count: usize,
    n_max: usize,
    k_max: usize,
    radii: &[u64],
) -> Result<Vec<GridInequalityRow>> {
    if n_max > PAIR_CAP {
        return Err(Error::LevelTooLarge {
            n: n_max,
            cap: PAIR_CAP,
        });
    }
    let per_point: Vec<Result<Vec<GridInequalityRow>>> = lambda_grid(grid_count)
        .into_par_iter()
        .map(|point| {
            let lambda = point.lambda()?;
            let table = ProximityTable::new(&lambda, n_max, k_max)?;
            let mut rows = Vec::new();
            for n in 1..=n_max {
                for k in 0..=k_max {
                    for &r in radii {
                        rows.push(GridInequalityRow {
                            point,
                            lambda: lambda.value(),
                            report: inequality_from_table(&table, n, k, r),
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per_point {
        out.extend(rows?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationInstance {
    pub values: Vec<f64>,
    pub t: f64,
    pub r: f64,
    pub base_count: u64,
    pub shifted_count: u64,
}

impl TranslationInstance {
    pub fn ratio(&self) -> f64 {
        self.shifted_count as f64 / self.base_count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationReport {
    pub trials: usize,
    pub seed: u64,
    pub max_ratio: f64,
    pub argmax: TranslationInstance,
    /// Whether every ratio stayed at most 4.
    pub within_four: bool,
    /// Whether the maximum stayed strictly below 2. Reported only.
    pub below_two: bool,
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64, f64) {
    let size = rng.random_range(1..=40usize);
    let r = 10f64.powf(rng.random_range(-2.0..1.0));
    let values: Vec<f64> = match rng.random_range(0..4u8) {
        // Uniform spread.
        0 => (0..size).map(|_| rng.random_range(0.0..20.0) * r).collect(),
        // Lattice with spacing just above r, jittered.
        1 => {
            let spacing = r * rng.random_range(1.0..1.5);
            (0..size)
                .map(|i| i as f64 * spacing + rng.random_range(-0.05..0.05) * r)
                .collect()
        }
        // A few tight clusters.
        2 => {
            let centers: Vec<f64> = (0..rng.random_range(1..=5usize))
                .map(|_| rng.random_range(0.0..10.0) * r)
                .collect();
            (0..size)
                .map(|_| centers[rng.random_range(0..centers.len())] + rng.random_range(0.0..0.2) * r)
                .collect()
        }
        // Integer multiples of r.
        _ => (0..size)
            .map(|_| rng.random_range(0..12u32) as f64 * r)
            .collect(),
    };
    let t = match rng.random_range(0..3u8) {
        0 => 0.0,
        1 => rng.random_range(-3.0..3.0) * r,
        _ => (rng.random_range(-6..=6i32) as f64 * 0.5) * r,
    };
    (values, t, r)
}

/// Largest `N_r(φ, φ+t) / N_r(φ, φ)` over seeded random instances.
pub fn translation_ratio_scan(trials: usize, seed: u64) -> Result<TranslationReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<TranslationInstance> = None;
    let mut within_four = true;
    for _ in 0..trials {
        let (values, t, r) = random_instance(&mut rng);
        let shifted: Vec<f64> = values.iter().map(|v| v + t).collect();
        let inst = TranslationInstance {
            base_count: count_near_pairs(&values, &values, r),
            shifted_count: count_near_pairs(&values, &shifted, r),
            values,
            t,
            r,
        };
        within_four &= inst.shifted_count <= 4 * inst.base_count;
        if best.as_ref().is_none_or(|b| inst.ratio() > b.ratio()) {
            best = Some(inst);
        }
    }
    let argmax = best.expect("at least one trial");
    let max_ratio = argmax.ratio();
    Ok(TranslationReport {
        trials,
        seed,
        max_ratio,
        argmax,
        within_four,
        below_two: max_ratio < 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamIntervalSet {
    pub intervals: Vec<Interval>,
}

pub const ROOT_GRID_STEP: f64 = 1e-5;
const ROOT_TOL: f64 = 1e-13;

fn bisect_root(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    while b - a > ROOT_TOL {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Sign-change roots of `f` on `[a, b]`; cells with no sign change are
/// subdivided until the Lipschitz bound rules out a root.
fn isolate_roots(f: &dyn Fn(f64) -> f64, lipschitz: f64, a: f64, b: f64, out: &mut Vec<f64>) {
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        out.push(a);
        return;
    }
    if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
        out.push(bisect_root(f, a, b));
        return;
    }
    if fa.abs() + fb.abs() > lipschitz * (b - a) || b - a <= ROOT_TOL {
        return;
    }
    let mid = 0.5 * (a + b);
    isolate_roots(f, lipschitz, a, mid, out);
    isolate_roots(f, lipschitz, mid, b, out);
}

/// `{λ ∈ (½, ⅔) : |p(λ)| ≤ γ}` as disjoint sorted intervals.
pub fn param_interval(diff: &SignedPoly, gamma: f64) -> ParamIntervalSet {
    param_interval_on(diff, gamma, PARAM_LO, PARAM_HI, ROOT_GRID_STEP)
}

pub fn param_interval_on(diff: &SignedPoly, gamma: f64, lo: f64, hi: f64, step: f64) -> ParamIntervalSet {
    if diff.is_zero() {
        let intervals = if gamma >= 0.0 {
            vec![Interval::new(lo, hi)]
        } else {
            vec![]
        };
        return ParamIntervalSet { intervals };
    }
    let lipschitz = diff.lipschitz(hi);
    let upper = |x: f64| diff.eval(x) - gamma;
    let lower = |x: f64| diff.eval(x) + gamma;
    let cells = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut roots = Vec::new();
    for i in 0..cells {
        let a = lo + (hi - lo) * i as f64 / cells as f64;
        let b = lo + (hi - lo) * (i + 1) as f64 / cells as f64;
        isolate_roots(&upper, lipschitz, a, b, &mut roots);
        isolate_roots(&lower, lipschitz, a, b, &mut roots);
    }
    roots.retain(|&x| x > lo && x < hi);
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= ROOT_TOL);

    let mut breaks = Vec::with_capacity(roots.len() + 2);
    breaks.push(lo);
    breaks.extend(roots);
    breaks.push(hi);
    let mut intervals: Vec<Interval> = Vec::new();
    for w in breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if diff.eval(mid).abs() <= gamma {
            match intervals.last_mut() {
                Some(last) if last.hi == w[0] => last.hi = w[1],
                _ => intervals.push(Interval::new(w[0], w[1])),
            }
        }
    }
    ParamIntervalSet { intervals }
}

/// Decreasing candidate values `2^{−j/4}`, `j = 0..=160`.
pub fn delta_ladder() -> Vec<f64> {
    (0..=160).map(|j| 2f64.powf(-(j as f64) / 4.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaConfig {
    pub max_degree: usize,
    pub grid_step: f64,
    pub epsilon: f64,
    /// Random polynomials drawn when `max_degree` exceeds the exhaustive limit.
    pub samples: usize,
    pub seed: u64,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        Self {
            max_degree: 10,
            grid_step: 1e-4,
            epsilon: 0.01,
            samples: 100_000,
            seed: 0,
        }
    }
}

pub const EXHAUSTIVE_DELTA_DEGREE: usize = 12;
pub const MAX_DELTA_DEGREE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaCertificate {
    pub config: DeltaConfig,
    /// Largest ladder value for which every checked case satisfies the
    /// implication; 0 when none does.
    pub delta: f64,
    pub ladder_index: Option<usize>,
    /// Smallest `max(g, −g')` seen.
    pub worst_margin: f64,
    pub worst_coeffs: Vec<i8>,
    pub worst_lambda: f64,
    pub polynomials_checked: u64,
    pub exhaustive_degree: usize,
    pub label: &'static str,
}

#[derive(Debug, Clone)]
struct Worst {
    margin: f64,
    coeffs: Vec<i8>,
    point: usize,
}

impl Worst {
    fn none() -> Self {
        Self {
            margin: f64::INFINITY,
            coeffs: Vec::new(),
            point: 0,
        }
    }

    fn better_of(self, other: Self) -> Self {
        match self.margin.total_cmp(&other.margin) {
            std::cmp::Ordering::Less => self,
            std::cmp::Ordering::Greater => other,
            std::cmp::Ordering::Equal => {
                if self.coeffs <= other.coeffs {
                    self
                } else {
                    other
                }
            }
        }
    }
}

struct DeltaGrid {
    xs: Vec<f64>,
    pows: Vec<Vec<f64>>,
    dpows: Vec<Vec<f64>>,
}

impl DeltaGrid {
    fn new(step: f64, hi: f64, degree: usize) -> Self {
        let mut xs = Vec::new();
        let mut j = 1usize;
        loop {
            let x = PARAM_LO + j as f64 * step;
            if x >= hi {
                break;
            }
            xs.push(x);
            j += 1;
        }
        let pows = (0..=degree)
            .map(|i| xs.iter().map(|&x| x.powi(i as i32)).collect())
            .collect();
        let dpows = (0..=degree)
            .map(|i| {
                xs.iter()
                    .map(|&x| if i == 0 { 0.0 } else { i as f64 * x.powi(i as i32 - 1) })
                    .collect()
            })
            .collect();
        Self { xs, pows, dpows }
    }

    fn leaf(&self, g: &[f64], gp: &[f64], coeffs: &[i8]) -> Worst {
        let mut worst = Worst::none();
        for (idx, (&v, &d)) in g.iter().zip(gp).enumerate() {
            let m = v.max(-d);
            if m < worst.margin {
                worst = Worst {
                    margin: m,
                    coeffs: coeffs.to_vec(),
                    point: idx,
                };
            }
        }
        worst
    }

    fn dfs(&self, depth: usize, degree: usize, coeffs: &mut Vec<i8>, g: &[f64], gp: &[f64], count: &mut u64) -> Worst {
        if depth == degree {
            *count += 1;
            return self.leaf(g, gp, coeffs);
        }
        let i = depth + 1;
        let mut worst = Worst::none();
        let mut ng = vec![0.0; g.len()];
        let mut ngp = vec![0.0; g.len()];
        for a in [-1i8, 0, 1] {
            let af = f64::from(a);
            for j in 0..g.len() {
                ng[j] = g[j] + af * self.pows[i][j];
                ngp[j] = gp[j] + af * self.dpows[i][j];
            }
            coeffs.push(a);
            worst = worst.better_of(self.dfs(depth + 1, degree, coeffs, &ng, &ngp, count));
            coeffs.pop();
        }
        worst
    }
}

/// Empirical `δ` for the implication `g(λ) < δ ⇒ g'(λ) < −δ`, over
/// `g(λ) = 1 + Σ a_i λ^i` with `a_i ∈ {−1,0,1}` on grid points of
/// `(½, ⅔ − ε)`.
pub fn estimate_delta(max_degree: usize, grid_step: f64) -> Result<f64> {
    Ok(estimate_delta_with(&DeltaConfig {
        max_degree,
        grid_step,
        ..DeltaConfig::default()
    })?
    .delta)
}

pub fn estimate_delta_with(config: &DeltaConfig) -> Result<DeltaCertificate> {
    if config.max_degree > MAX_DELTA_DEGREE {
        return Err(Error::Domain {
            what: "max_degree",
            value: config.max_degree as f64,
            domain: "0..=20",
        });
    }
    if !(config.grid_step > 0.0) || !(config.epsilon >= 0.0 && config.epsilon < PARAM_HI - PARAM_LO) {
        return Err(Error::Precondition("grid step must be positive and epsilon in [0, 1/6)".into()));
    }
    let grid = DeltaGrid::new(config.grid_step, PARAM_HI - config.epsilon, config.max_degree);
    let exhaustive = config.max_degree.min(EXHAUSTIVE_DELTA_DEGREE);
    let ones = vec![1.0; grid.xs.len()];
    let zeros = vec![0.0; grid.xs.len()];

    // Split the exhaustive search over fixed prefixes for parallelism.
    let split = exhaustive.min(4);
    let prefixes: Vec<Vec<i8>> = (0..3usize.pow(split as u32))
        .map(|mut code| {
            (0..split)
                .map(|_| {
                    let a = (code % 3) as i8 - 1;
                    code /= 3;
                    a
                })
                .collect()
        })
        .collect();
    let results: Vec<(Worst, u64)> = prefixes
        .par_iter()
        .map(|prefix| {
            let mut g = ones.clone();
            let mut gp = zeros.clone();
            for (idx, &a) in prefix.iter().enumerate() {
                let i = idx + 1;
                for j in 0..g.len() {
                    g[j] += f64::from(a) * grid.pows[i][j];
                    gp[j] += f64::from(a) * grid.dpows[i][j];
                }
            }
            let mut coeffs = prefix.clone();
            let mut count = 0u64;
            let worst = grid.dfs(split, exhaustive, &mut coeffs, &g, &gp, &mut count);
            (worst, count)
        })
        .collect();
    let mut polynomials = 0u64;
    let mut worst = Worst::none();
    for (w, c) in results {
        worst = worst.better_of(w);
        polynomials += c;
    }

    if config.max_degree > EXHAUSTIVE_DELTA_DEGREE {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let draws: Vec<Vec<i8>> = (0..config.samples)
            .map(|_| {
                (0..config.max_degree)
                    .map(|_| rng.random_range(-1..=1i8))
                    .collect()
            })
            .collect();
        let sampled = draws
            .par_iter()
            .map(|coeffs| {
                let mut w = Worst::none();
                for (idx, &x) in grid.xs.iter().enumerate() {
                    let (mut g, mut gp) = (0.0, 0.0);
                    for &c in coeffs.iter().rev() {
                        gp = gp * x + g;
                        g = g * x + f64::from(c);
                    }
                    // g currently holds Σ c_i x^{i-1}; shift by one power.
                    let value = 1.0 + g * x;
                    let deriv = g + gp * x;
                    let m = value.max(-deriv);
                    if m < w.margin {
                        w = Worst {
                            margin: m,
                            coeffs: coeffs.clone(),
                            point: idx,
                        };
                    }
                }
                w
            })
            .reduce(Worst::none, Worst::better_of);
        worst = worst.better_of(sampled);
        polynomials += config.samples as u64;
    }

    let ladder = delta_ladder();
    let ladder_index = ladder.iter().position(|&d| d < worst.margin);
    Ok(DeltaCertificate {
        config: *config,
        delta: ladder_index.map_or(0.0, |j| ladder[j]),
        ladder_index,
        worst_margin: worst.margin,
        worst_lambda: grid.xs.get(worst.point).copied().unwrap_or(f64::NAN),
        worst_coeffs: worst.coeffs,
        polynomials_checked: polynomials,
        exhaustive_degree: exhaustive,
        label: "empirical certificate",
    })
}

/// Every interval of `param_interval(diff, γ)` has diameter at most `4γ/δ`.
pub fn verify_interval_diameter(diff: &SignedPoly, gamma: f64, delta: f64) -> Result<bool> {
    if !(gamma > 0.0 && gamma < delta / 2.0) {
        return Err(Error::Precondition(format!(
            "gamma {gamma} must lie in (0, delta/2) with delta {delta}"
        )));
    }
    match diff.coeffs().first() {
        Some(&c) if c != 0 => {}
        _ => {
            return Err(Error::Precondition(
                "first coefficient must be +1 or -1".into(),
            ))
        }
    }
    let bound = 4.0 * gamma / delta;
    Ok(param_interval(diff, gamma)
        .intervals
        .iter()
        .all(|i| i.diameter() <= bound))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionalRow {
    pub point: GridPoint,
    pub lambda: f64,
    pub n: usize,
    pub k: usize,
    pub restricted_count: u64,
    pub threshold: f64,
}

/// `4^n λ^{s(n+k)}`.
pub fn exceptional_threshold(lambda: f64, s: f64, n: usize, k: usize) -> f64 {
    4f64.powi(n as i32) * lambda.powf(s * (n + k) as f64)
}

/// Rows `(λ, n, k)` with `P_n(λ,k,r) > 4^n λ^{s(n+k)}` over the grid.
pub fn exceptional_scan(
    s: f64,
    r: u64,
    n_range: std::ops::RangeInclusive<usize>,
    k_max: usize,
    grid: &[GridPoint],
) -> Result<Vec<ExceptionalRow>> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain {
            what: "s",
            value: s,
            domain: "(0, 1)",
        });
    }
    let n_max = *n_range.end();
    if n_max > PAIR_CAP {
        return Err(Error::LevelTooLarge { n: n_max, cap: PAIR_CAP });
    }
    let n_lo = (*n_range.start()).max(1);
    let mut grid = grid.to_vec();
    grid.sort_by(|a, b| a.value().total_cmp(&b.value()));
    let per_point: Vec<Result<Vec<ExceptionalRow>>> = grid
        .into_par_iter()
        .map(|point| {
            let lambda = point.lambda()?;
            let mut rows = Vec::new();
            if n_max < n_lo {
                return Ok(rows);
            }
            let table = ProximityTable::new(&lambda, n_max, k_max)?;
            for n in n_lo..=n_max {
                for k in 0..=k_max {
                    let count = table.count(n, k, r).restricted_count;
                    let threshold = exceptional_threshold(lambda.value(), s, n, k);
                    if count as f64 > threshold {
                        rows.push(ExceptionalRow {
                            point,
                            lambda: lambda.value(),
                            n,
                            k,
                            restricted_count: count,
                            threshold,
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for rows in per_point {
        out.extend(rows?);
    }
    Ok(out)
}

/// `C = 1 + Σ_{l=1}^{n0} 2^{−l} P_l(λ, 0, r)`.
pub fn constant_of_r(lambda: &Lambda, r: u64, n0: usize) -> Result<f64> {
    if n0 > PAIR_CAP {
        return Err(Error::LevelTooLarge { n: n0, cap: PAIR_CAP });
    }
    if n0 == 0 {
        return Ok(1.0);
    }
    let table = ProximityTable::new(lambda, n0, 0)?;
    Ok(constant_from_table(&table, r, n0))
}

fn constant_from_table(table: &ProximityTable, r: u64, n0: usize) -> f64 {
    1.0 + (1..=n0)
        .map(|l| table.count(l, 0, r).restricted_count as f64 / 2f64.powi(l as i32))
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantBoundRow {
    pub n: usize,
    pub k: usize,
    pub tilde_count: u64,
    pub bound: f64,
    /// No level in `n0+1..=n` exceeds the exceptional threshold at this `k`.
    pub applicable: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantBoundReport {
    pub c: f64,
    pub rows: Vec<ConstantBoundRow>,
    /// Every applicable row satisfies the bound.
    pub all_hold: bool,
}

/// Checks `P̃_n(λ,k,r) ≤ C·2^n + 4^n n λ^{s(n+k)}` for `n ≤ n_max`,
/// `k ≤ k_max`, wherever the levels beyond `n0` carry no exceptional witness.
pub fn verify_constant_bound(
    lambda: &Lambda,
    r: u64,
    n0: usize,
    s: f64,
    n_max: usize,
    k_max: usize,
) -> Result<ConstantBoundReport> {
    if n_max > PAIR_CAP || n0 > PAIR_CAP {
        return Err(Error::LevelTooLarge {
            n: n_max.max(n0),
            cap: PAIR_CAP,
        });
    }
    let table = ProximityTable::new(lambda, n_max.max(n0).max(1), k_max)?;
    let c = if n0 == 0 { 1.0 } else { constant_from_table(&table, r, n0) };
    let l = lambda.value();
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let mut clean = true;
        for n in 1..=n_max {
            if n > n0 {
                let p = table.count(n, k, r).restricted_count;
                clean &= p as f64 <= exceptional_threshold(l, s, n, k);
            }
            let tilde = table.count(n, k, r).tilde_count;
            let bound = c * 2f64.powi(n as i32) + exceptional_threshold(l, s, n, k) * n as f64;
            rows.push(ConstantBoundRow {
                n,
                k,
                tilde_count: tilde,
                bound,
                applicable: clean,
                holds: tilde as f64 <= bound,
            });
        }
    }
    let all_hold = rows.iter().all(|row| !row.applicable || row.holds);
    Ok(ConstantBoundReport { c, rows, all_hold })
}

#[cfg(test)]
mod tests {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{Signed, Zero};

    use super::*;
    use crate::exact::to_rational;

    fn lam(x: f64) -> Lambda {
        Lambda::new(x).unwrap()
    }

    /// Quadratic oracle with every sum in exact rational arithmetic.
    fn oracle_counts(lambda: f64, n: usize, k: usize, r: u64) -> (u64, u64) {
        let l = to_rational(lambda);
        let sums: Vec<BigRational> = (0..1u64 << n)
            .map(|idx| {
                let mut acc = BigRational::zero();
                let mut p = BigRational::from_integer(BigInt::from(1));
                for i in 0..n {
                    p = &p * &l;
                    if (idx >> i) & 1 == 1 {
                        acc += &p;
                    }
                }
                acc
            })
            .collect();
        let mut thr = BigRational::from_integer(BigInt::from(r));
        for _ in 0..n + k {
            thr = &thr * &l;
        }
        let (mut tilde, mut restricted) = (0, 0);
        for (a, x) in sums.iter().enumerate() {
            for (b, y) in sums.iter().enumerate() {
                if (x - y).abs() <= thr {
                    tilde += 1;
                    if (a ^ b) & 1 == 1 {
                        restricted += 1;
                    }
                }
            }
        }
        (tilde, restricted)
    }

    #[test]
    fn near_pairs_examples() {
        assert_eq!(count_near_pairs(&[1.0, 2.0], &[1.0, 2.0], 1.0), 4);
        let v = [0.3, 1.7, -2.0, 5.5];
        assert_eq!(count_near_pairs(&v, &v, 0.0), 4);
    }

    #[test]
    fn near_pairs_match_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..10.0)).collect();
            let b: Vec<f64> = (0..150).map(|_| rng.random_range(0.0..10.0)).collect();
            let r = rng.random_range(0.0..0.5);
            let brute = a
                .iter()
                .flat_map(|x| b.iter().map(move |y| (x, y)))
                .filter(|(x, y)| (*x - *y).abs() <= r)
                .count() as u64;
            assert_eq!(count_near_pairs(&a, &b, r), brute);
        }
    }

    #[test]
    fn level_one_counts() {
        for &x in &[0.51, 0.6, 0.65] {
            let c = proximity_counts(&lam(x), 1, 0, 1).unwrap();
            assert_eq!((c.tilde_count, c.restricted_count), (4, 2));
        }
    }

    #[test]
    fn counts_match_rational_oracle() {
        for &(x, n, k, r) in &[
            (0.6, 2, 0, 1),
            (0.55, 6, 2, 2),
            (0.6180339887498949, 7, 0, 1),
            (0.6180339887498949, 6, 1, 1),
            (0.62, 8, 3, 1),
        ] {
            let c = proximity_counts(&lam(x), n, k, r).unwrap();
            assert_eq!((c.tilde_count, c.restricted_count), oracle_counts(x, n, k, r), "{x} {n} {k} {r}");
        }
    }

    #[test]
    fn golden_collisions_are_counted() {
        let c = proximity_counts(&Lambda::golden(), 3, 0, 1).unwrap();
        assert!(c.tilde_count >= 8 + 2);
    }

    #[test]
    fn level_cap() {
        assert!(matches!(
            proximity_counts(&lam(0.6), 17, 0, 1),
            Err(Error::LevelTooLarge { .. })
        ));
        assert!(proximity_counts_capped(&lam(0.6), 17, 0, 1, 24).is_ok());
    }

    #[test]
    fn inequality_at_level_one_is_tight() {
        let rep = verify_proximity_inequality(&lam(0.58), 1, 0, 1).unwrap();
        assert_eq!((rep.lhs, rep.rhs), (4, 4));
        assert!(rep.holds);
    }

    #[test]
    fn inequality_example() {
        assert!(verify_proximity_inequality(&lam(0.55), 8, 3, 2).unwrap().holds);
    }

    #[test]
    fn translation_identity_shift() {
        let v = [0.0, 0.4, 3.0];
        assert_eq!(count_near_pairs(&v, &v, 0.5), count_near_pairs(&v, &v.map(|x| x + 0.0), 0.5));
        let c = [2.0; 5];
        let shifted = c.map(|x| x + 0.3);
        assert_eq!(count_near_pairs(&c, &shifted, 0.5), count_near_pairs(&c, &c, 0.5));
    }

    #[test]
    fn translation_scan_is_seeded() {
        let a = translation_ratio_scan(200, 3).unwrap();
        let b = translation_ratio_scan(200, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.within_four);
        assert!(a.max_ratio >= 1.0);
    }

    #[test]
    fn param_interval_examples() {
        let p = SignedPoly::new(vec![1]).unwrap();
        assert!(param_interval(&p, 0.3).intervals.is_empty());
        let set = param_interval(&p, 0.55);
        assert_eq!(set.intervals.len(), 1);
        assert_eq!(set.intervals[0].lo, 0.5);
        assert!((set.intervals[0].hi - 0.55).abs() < 1e-12);

        let q = SignedPoly::new(vec![1, -1, -1]).unwrap();
        let set = param_interval(&q, 1e-6);
        assert_eq!(set.intervals.len(), 1);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!(set.intervals[0].contains(golden));
        assert!(set.intervals[0].diameter() < 1e-5);
    }

    #[test]
    fn param_interval_zero_poly() {
        let z = SignedPoly::new(vec![0, 0]).unwrap();
        assert_eq!(param_interval(&z, 0.1).intervals, vec![Interval::new(PARAM_LO, PARAM_HI)]);
    }

    #[test]
    fn param_interval_endpoints_solve_the_boundary() {
        let p = SignedPoly::new(vec![1, -1, 0, -1, 1]).unwrap();
        for iv in param_interval(&p, 0.01).intervals {
            for x in [iv.lo, iv.hi] {
                if x > PARAM_LO && x < PARAM_HI {
                    assert!((p.eval(x).abs() - 0.01).abs() < 1e-10);
                }
            }
            assert!(p.eval(iv.midpoint()).abs() <= 0.01);
        }
    }

    #[test]
    fn delta_for_constant_polynomial() {
        // Only g ≡ 1 is checked, so the whole ladder up to 1 is admissible
        // except the top rung (strict comparison).
        let cert = estimate_delta_with(&DeltaConfig {
            max_degree: 0,
            ..DeltaConfig::default()
        })
        .unwrap();
        assert_eq!(cert.worst_margin, 1.0);
        assert_eq!(cert.ladder_index, Some(1));
    }

    #[test]
    fn delta_direct_on_clipped_domain() {
        // g = 1 − λ − λ² on (½, 0.6): g ≥ 0.04 and g' = −1 − 2λ < −2.
        let cert = estimate_delta_with(&DeltaConfig {
            max_degree: 2,
            grid_step: 1e-3,
            epsilon: PARAM_HI - 0.6,
            ..DeltaConfig::default()
        })
        .unwrap();
        assert!(cert.delta > 0.0);
        let xs: Vec<f64> = (1..100).map(|j| 0.5 + j as f64 * 1e-3).collect();
        for x in xs {
            let g = 1.0 - x - x * x;
            let gp = -1.0 - 2.0 * x;
            assert!(g >= cert.delta || gp < -cert.delta);
        }
    }

    #[test]
    fn delta_low_degree_positive() {
        let d = estimate_delta(6, 1e-3).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn diameter_check_preconditions() {
        let p = SignedPoly::new(vec![0, 1]).unwrap();
        assert!(verify_interval_diameter(&p, 1e-4, 0.1).is_err());
        let q = SignedPoly::new(vec![1, -1, -1]).unwrap();
        assert!(verify_interval_diameter(&q, 0.2, 0.1).is_err());
        assert!(verify_interval_diameter(&q, 1e-4, 0.05).unwrap());
    }

    #[test]
    fn exceptional_scan_limits() {
        let grid = lambda_grid(10);
        assert!(exceptional_scan(1e-9, 1, 1..=8, 2, &grid).unwrap().is_empty());
        assert!(exceptional_scan(0.0, 1, 1..=8, 2, &grid).is_err());
    }

    #[test]
    fn constant_of_r_examples() {
        assert_eq!(constant_of_r(&lam(0.55), 2, 0).unwrap(), 1.0);
        assert_eq!(constant_of_r(&lam(0.55), 1, 1).unwrap(), 2.0);
        let rep = verify_constant_bound(&lam(0.55), 2, 6, 0.5, 14, 2).unwrap();
        assert!(rep.all_hold);
        assert!(rep.rows.iter().any(|r| r.applicable));
    }

    #[test]
    fn signed_poly_derivative() {
        let p = SignedPoly::new(vec![1, 0, -1]).unwrap();
        let x = 0.6;
        assert!((p.eval(x) - (x - x * x * x)).abs() < 1e-15);
        assert!((p.derivative(x) - (1.0 - 3.0 * x * x)).abs() < 1e-15);
        assert_eq!(p.degree(), 3);
    }
}
