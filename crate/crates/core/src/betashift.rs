//! The beta-transformation and the multinacci subshifts.

use std::fmt;

use serde::Serialize;

use crate::expansion::multinacci_root;
use crate::{Error, Lambda, Result};

/// Distance to the discontinuity of `x ↦ {βx}` below which a step is flagged.
pub const DISCONTINUITY_TOL: f64 = 1e-12;
pub const SNAP_TOL: f64 = 1e-12;
pub const POWER_ITERATION_CAP: usize = 100_000;
pub const SFT_MAX_ORDER: u32 = 12;
pub const A_BETA_MAX_DEPTH: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Beta {
    value: f64,
}

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 1.0 && value <= 2.0) {
            return Err(Error::InvalidBeta(value));
        }
        Ok(Self { value })
    }

    pub fn golden() -> Self {
        Self::new((1.0 + 5f64.sqrt()) / 2.0).expect("golden ratio is in range")
    }

    /// `1/λ`, valid whenever `λ ≥ ½`.
    pub fn reciprocal(lambda: &Lambda) -> Self {
        Self::new(1.0 / lambda.value()).expect("reciprocal of a valid lambda")
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DigitSeq {
    pub digits: Vec<u8>,
}

impl DigitSeq {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d > 1) {
            return Err(Error::InvalidDigit(d));
        }
        Ok(Self { digits })
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// `Σ d_k β^{-k}`.
    pub fn value(&self, beta: &Beta) -> f64 {
        let q = 1.0 / beta.value();
        self.digits
            .iter()
            .rev()
            .fold(0.0, |acc, &d| (acc + f64::from(d)) * q)
    }
}

impl fmt::Display for DigitSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl Serialize for DigitSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            domain: "[0, 1)",
        });
    }
    Ok(())
}

/// `{βx}` for `x ∈ [0, 1)`.
pub fn beta_map(beta: &Beta, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(step(beta.value(), x).0)
}

fn step(beta: f64, x: f64) -> (f64, u8) {
    let y = beta * x;
    let d = y.floor().min(1.0);
    (y - d, d as u8)
}

/// One step of an orbit together with its error shadow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitStep {
    pub x: f64,
    pub digit: u8,
    /// Bound on the distance to the exact orbit point.
    pub err: f64,
    /// `βx` came within the error shadow of the discontinuity at 1.
    pub unreliable: bool,
}

/// The first `n` points after `x`, each with digit `⌊β f^{k−1}(x)⌋`.
pub fn orbit(beta: &Beta, x: f64, n: usize) -> Result<Vec<OrbitStep>> {
    check_unit(x)?;
    let b = beta.value();
    let mut out = Vec::with_capacity(n);
    let (mut cur, mut err) = (x, 0.0f64);
    for _ in 0..n {
        let y = b * cur;
        let unreliable = (y - 1.0).abs() <= (b * err).max(DISCONTINUITY_TOL);
        let (next, d) = step(b, cur);
        err = b * err + f64::EPSILON;
        out.push(OrbitStep {
            x: next,
            digit: d,
            err,
            unreliable,
        });
        cur = next;
    }
    Ok(out)
}

pub fn greedy_digits(beta: &Beta, x: f64, n: usize) -> Result<DigitSeq> {
    Ok(DigitSeq {
        digits: orbit(beta, x, n)?.iter().map(|s| s.digit).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneExpansion {
    /// Greedy digits of 1, with the first digit clipped to 1.
    pub digits_of_1: DigitSeq,
    /// Limit of the greedy digits of `x` as `x → 1⁻`.
    pub quasi_greedy: DigitSeq,
    /// Position of the last non-zero digit when the orbit of 1 dies.
    pub terminates_at: Option<usize>,
    /// `β = 2`, where the first digit is 2 before clipping.
    pub boundary_convention: bool,
}

/// Greedy digits of 1 (unclipped first digit) and the step at which the
/// orbit snaps to 0.
fn digits_of_one_raw(beta: f64, n: usize, tol: f64) -> (Vec<u8>, Option<usize>) {
    let mut digits = Vec::with_capacity(n);
    let mut x = 1.0f64;
    let mut dead = None;
    for k in 1..=n {
        if dead.is_some() {
            digits.push(0);
            continue;
        }
        let y = beta * x;
        let mut d = y.floor();
        let mut frac = y - d;
        if frac > 1.0 - tol {
            d += 1.0;
            frac = 0.0;
        } else if frac < tol {
            frac = 0.0;
        }
        digits.push(d as u8);
        x = frac;
        if frac == 0.0 {
            dead = Some(k);
        }
    }
    let terminates_at = dead.map(|_| digits.iter().rposition(|&d| d != 0).map_or(0, |p| p + 1));
    (digits, terminates_at)
}

pub fn expansion_of_one(beta: &Beta, n: usize) -> OneExpansion {
    expansion_of_one_tol(beta, n, SNAP_TOL)
}

pub fn expansion_of_one_tol(beta: &Beta, n: usize, tol: f64) -> OneExpansion {
    let (raw, terminates_at) = digits_of_one_raw(beta.value(), n, tol);
    let mut clipped = raw.clone();
    if let Some(first) = clipped.first_mut() {
        *first = (*first).min(1);
    }
    let quasi = match terminates_at {
        Some(p) if p >= 1 => {
            let mut period = raw[..p].to_vec();
            period[p - 1] -= 1;
            (0..n).map(|i| period[i % p]).collect()
        }
        _ => clipped.clone(),
    };
    OneExpansion {
        digits_of_1: DigitSeq { digits: clipped },
        quasi_greedy: DigitSeq { digits: quasi },
        terminates_at,
        boundary_convention: beta.value() == 2.0,
    }
}

/// Every shift of `seq` is lexicographically at most the quasi-greedy
/// expansion of 1 on the common window.
pub fn parry_admissible(seq: &DigitSeq, beta: &Beta) -> bool {
    let quasi = expansion_of_one(beta, seq.len()).quasi_greedy.digits;
    (0..seq.len()).all(|k| {
        let tail = &seq.digits[k..];
        tail <= &quasi[..tail.len()]
    })
}

/// The orbit of 1 reaches 0 within `n_max` steps.
pub fn is_sft(beta: &Beta, n_max: usize, tol: f64) -> bool {
    digits_of_one_raw(beta.value(), n_max, tol).1.is_some()
}

/// The multinacci number of order `m`, tagged.
pub fn multinacci(m: u32, tol: f64) -> Result<Lambda> {
    Lambda::with_multinacci(multinacci_root(m, tol)?, m)
}

/// Subshift on binary windows of length `m` with the single forbidden
/// word `0 1^m`. State `u` encodes a window with its oldest symbol in the
/// most significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sft {
    m: u32,
    adjacency: Vec<Vec<u8>>,
}

impl Sft {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn states(&self) -> usize {
        1 << self.m
    }

    pub fn adjacency(&self) -> &[Vec<u8>] {
        &self.adjacency
    }

    fn mask(&self) -> usize {
        self.states() - 1
    }

    /// Successor of `u` on reading `d`, if allowed.
    pub fn next(&self, u: usize, d: u8) -> Option<usize> {
        let v = ((u << 1) | d as usize) & self.mask();
        (self.adjacency[u][v] == 1).then_some(v)
    }

    pub fn successors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        [0u8, 1].into_iter().filter_map(move |d| self.next(u, d))
    }

    pub fn state_label(&self, u: usize) -> String {
        (0..self.m)
            .rev()
            .map(|i| if (u >> i) & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

pub fn forbidden_word_adjacency(m: u32) -> Result<Sft> {
    if !(2..=SFT_MAX_ORDER).contains(&m) {
        return Err(Error::InvalidOrder {
            m,
            lo: 2,
            hi: SFT_MAX_ORDER,
        });
    }
    let size = 1usize << m;
    let mask = size - 1;
    let forbidden_from = (1usize << (m - 1)) - 1;
    let mut adjacency = vec![vec![0u8; size]; size];
    for (u, row) in adjacency.iter_mut().enumerate() {
        for d in 0..2usize {
            if u == forbidden_from && d == 1 {
                continue;
            }
            row[((u << 1) | d) & mask] = 1;
        }
    }
    Ok(Sft { m, adjacency })
}

/// Strongly connected components in discovery order (Kosaraju).
fn components(sft: &Sft) -> Vec<Vec<usize>> {
    let n = sft.states();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let mut stack = vec![(s, sft.successors(s).collect::<Vec<_>>(), 0usize)];
        while let Some((u, succ, i)) = stack.last_mut() {
            if *i < succ.len() {
                let v = succ[*i];
                *i += 1;
                if !visited[v] {
                    visited[v] = true;
                    stack.push((v, sft.successors(v).collect(), 0));
                }
            } else {
                order.push(*u);
                stack.pop();
            }
        }
    }
    let mut reverse = vec![Vec::new(); n];
    for u in 0..n {
        for v in sft.successors(u) {
            reverse[v].push(u);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &reverse[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perron {
    pub mu: f64,
    /// Right eigenvector, max-normalised, zero off the component.
    pub vector: Vec<f64>,
    /// States of the largest strongly connected component.
    pub component: Vec<usize>,
    pub iterations: usize,
    /// Converged only after shifting to `A + I`.
    pub shifted: bool,
}

fn power_iteration(sft: &Sft, members: &[usize], in_comp: &[bool], shift: f64, tol: f64) -> Option<(f64, Vec<f64>, usize)> {
    let n = sft.states();
    let mut v = vec![0.0; n];
    for &u in members {
        v[u] = 1.0;
    }
    let mut prev = f64::NAN;
    for it in 1..=POWER_ITERATION_CAP {
        let mut w = vec![0.0; n];
        for &u in members {
            let s: f64 = sft.successors(u).filter(|&t| in_comp[t]).map(|t| v[t]).sum();
            w[u] = s + shift * v[u];
        }
        let num: f64 = members.iter().map(|&u| v[u] * w[u]).sum();
        let den: f64 = members.iter().map(|&u| v[u] * v[u]).sum();
        let rq = num / den;
        let norm = members.iter().map(|&u| w[u]).fold(0.0, f64::max);
        if norm == 0.0 {
            return None;
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        v = w;
        if (rq - prev).abs() < tol {
            return Some((rq - shift, v, it));
        }
        prev = rq;
    }
    None
}

/// Dominant eigenvalue on the largest strongly connected component.
pub fn perron_eigenvalue(sft: &Sft, tol: f64) -> Result<Perron> {
    let comps = components(sft);
    let members = comps
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .expect("at least one state");
    let mut in_comp = vec![false; sft.states()];
    for &u in &members {
        in_comp[u] = true;
    }
    let (result, shifted) = match power_iteration(sft, &members, &in_comp, 0.0, tol) {
        Some(r) => (r, false),
        None => (
            power_iteration(sft, &members, &in_comp, 1.0, tol).ok_or(Error::NonConvergence {
                iterations: POWER_ITERATION_CAP,
            })?,
            true,
        ),
    };
    let (mu, vector, iterations) = result;
    Ok(Perron {
        mu,
        vector,
        component: members,
        iterations,
        shifted,
    })
}

/// Admissible words of length `n`.
pub fn count_words(sft: &Sft, n: usize) -> Result<u64> {
    let m = sft.m() as usize;
    if n <= m {
        return Ok(1u64 << n);
    }
    let mut counts = vec![1u64; sft.states()];
    for step in m + 1..=n {
        let mut next = vec![0u64; sft.states()];
        for (u, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for v in sft.successors(u) {
                next[v] = next[v].checked_add(c).ok_or(Error::Overflow { n: step })?;
            }
        }
        counts = next;
    }
    counts
        .iter()
        .try_fold(0u64, |acc, &c| acc.checked_add(c))
        .ok_or(Error::Overflow { n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderStats {
    pub n: usize,
    pub count: u64,
    pub min_len: f64,
    pub max_len: f64,
    /// `min_len · β^n`.
    pub min_ratio: f64,
    /// `max_len · β^n`.
    pub max_ratio: f64,
}

pub const CYLINDER_MAX_DEPTH: usize = 30;

/// Extremal lengths of the projected cylinders `π_β([a_1 … a_n])` over
/// admissible words, with `π_β(a) = Σ a_i β^{−i}`.
pub fn cylinder_stats(sft: &Sft, beta: &Beta, n: usize) -> Result<CylinderStats> {
    let m = sft.m();
    let target = multinacci_root(m, 0.0)?;
    if (beta.value() * target - 1.0).abs() >= 1e-9 {
        return Err(Error::MismatchedBeta {
            beta: beta.value(),
            m,
        });
    }
    if n > CYLINDER_MAX_DEPTH {
        return Err(Error::LevelTooLarge {
            n,
            cap: CYLINDER_MAX_DEPTH,
        });
    }
    let lambda = 1.0 / beta.value();
    let states = sft.states();

    // Largest tail sum reachable from each state; the smallest is 0 (all zeros).
    let mut sup = vec![0.0f64; states];
    for _ in 0..10_000 {
        let mut next = vec![0.0f64; states];
        for (u, slot) in next.iter_mut().enumerate() {
            *slot = [0u8, 1]
                .into_iter()
                .filter_map(|d| sft.next(u, d).map(|v| lambda * (f64::from(d) + sup[v])))
                .fold(0.0, f64::max);
        }
        let change = next
            .iter()
            .zip(&sup)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        sup = next;
        if change < 1e-16 {
            break;
        }
    }

    // Count words by end state. Shorter prefixes are padded on the left with
    // ones, which never take part in a forbidden occurrence.
    let mut counts = vec![0u64; states];
    counts[states - 1] = 1;
    for _ in 0..n {
        let mut next = vec![0u64; states];
        for (u, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for v in sft.successors(u) {
                next[v] = next[v].checked_add(c).ok_or(Error::Overflow { n })?;
            }
        }
        counts = next;
    }
    let scale = lambda.powi(n as i32);
    let reachable = || counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(u, _)| sup[u]);
    let min_tail = reachable().fold(f64::INFINITY, f64::min);
    let max_tail = reachable().fold(0.0, f64::max);
    Ok(CylinderStats {
        n,
        count: counts.iter().sum(),
        min_len: scale * min_tail,
        max_len: scale * max_tail,
        min_ratio: min_tail,
        max_ratio: max_tail,
    })
}

/// Times `n ≤ depth` with `f_β^n(x) ≤ β^{−κn}`.
pub fn a_beta_membership(beta: &Beta, kappa: f64, x: f64, depth: usize) -> Result<Vec<usize>> {
    check_unit(x)?;
    if !(kappa > 0.0) {
        return Err(Error::Domain {
            what: "kappa",
            value: kappa,
            domain: "(0, inf)",
        });
    }
    if depth > A_BETA_MAX_DEPTH {
        return Err(Error::LevelTooLarge {
            n: depth,
            cap: A_BETA_MAX_DEPTH,
        });
    }
    let b = beta.value();
    let mut hits = Vec::new();
    let mut cur = x;
    for n in 1..=depth {
        cur = step(b, cur).0;
        if cur <= b.powf(-kappa * n as f64) {
            hits.push(n);
        }
    }
    Ok(hits)
}
