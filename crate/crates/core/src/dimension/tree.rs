//! Finite-depth nested interval construction inside the intersection of
//! similar copies of the approximation set.
//!
//! Stage `q+1` takes every sampled node `κ` of level `Γ(q)`, finds a cylinder
//! `f_{j(q)}(g_{ω(κ)}(I_λ) + n(κ) diam I_λ)` inside `Δ̂_κ`, and hangs the
//! binary tree of depth `γ_{q+1}` below it:
//!
//! ```text
//! Δ_{κτ} = f_{j(q)}(g_{ω(κ)} g_τ (I_λ) + n(κ) diam I_λ)
//! Δ̂_{κτ} = f_{j(q)}(g_{ω(κ)} g_τ g_0^{m_{q+1}} (I_λ) + n(κ) diam I_λ)   (|τ| = γ_{q+1})
//! ```
//!
//! The full tree has `2^{Γ(q)}` nodes per level, so only `paths` random
//! branches are followed. Interval arithmetic along those branches is exact.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cylinder::{locate_with_theta, Similarity};
use crate::exact::{to_rational, Scalar};
use crate::{Error, Interval, Lambda, Result, Word};

type Q = BigRational;

/// Largest number of sampled nodes, `paths · level`.
pub const NODE_CAP: usize = 1_000_000;
/// Smallest radius used in the pair-correlation rows.
pub const CORRELATION_MIN_RADIUS: f64 = 1e-12;
const FAILURE_LOG_CAP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeConfig {
    /// Number of random branches followed.
    pub paths: usize,
    pub seed: u64,
    /// Stages that would need a deeper level are reported as infeasible.
    pub max_level: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            paths: 256,
            seed: 0,
            max_level: 4096,
        }
    }
}

/// Constants of one stage; `q` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSchedule {
    pub q: usize,
    /// Index into `sims` of the map used to place this stage.
    pub map_index: usize,
    pub theta: usize,
    pub gamma: usize,
    pub gamma_hat: usize,
    pub m: usize,
    pub start_level: usize,
    pub end_level: usize,
    /// `λ^{γ̂+m}/(1−λ) < 2^{−αγ̂} ≤ λ^{γ̂+m−1}/(1−λ)`.
    pub sandwich: bool,
    /// `λ^γ < |f'|` for the map of the next stage.
    pub derivative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub word: Word,
    pub level: usize,
    pub delta: Interval,
    pub delta_hat: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    /// Stage that created the level, 0 for the root.
    pub stage: usize,
    pub delta: f64,
    pub delta_hat: f64,
    pub ln_delta: f64,
    pub ln_delta_hat: f64,
    /// Distinct sampled nodes.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeChecks {
    pub nodes_checked: usize,
    pub nesting: bool,
    pub diameters: bool,
    pub diameter_bounds: bool,
    pub sandwich: bool,
    pub good_approximant: bool,
    pub siblings_disjoint: bool,
    pub derivative: bool,
    pub cylinders: bool,
    /// First few failures, for diagnostics.
    pub failures: Vec<String>,
}

impl TreeChecks {
    pub fn all_hold(&self) -> bool {
        self.nesting
            && self.diameters
            && self.diameter_bounds
            && self.sandwich
            && self.good_approximant
            && self.siblings_disjoint
            && self.derivative
            && self.cylinders
    }
}

/// Ordered pairs of distinct deepest-level nodes at gap distance below
/// `radius = δ_{radius_level}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub level: usize,
    pub radius_level: usize,
    pub radius: f64,
    pub nodes: usize,
    pub close_pairs: u64,
    pub fraction: f64,
    /// `log fraction / log radius`, absent when no pair is close.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedTree {
    pub lambda: f64,
    pub alpha: f64,
    pub s: f64,
    pub requested_depth: usize,
    pub completed_q: usize,
    pub infeasible: Option<String>,
    pub config: TreeConfig,
    pub schedule: Vec<StageSchedule>,
    pub levels: Vec<LevelSummary>,
    pub nodes: Vec<TreeNode>,
    pub checks: TreeChecks,
    pub correlation: Vec<CorrelationRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Check {
    Nesting,
    Diameter,
    Bound,
    Sandwich,
    Approximant,
    Siblings,
    Derivative,
    Cylinder,
}

#[derive(Debug, Default)]
struct Tally {
    failed: BTreeSet<Check>,
    log: Vec<String>,
}

impl Tally {
    fn fail(&mut self, check: Check, detail: String) {
        self.failed.insert(check);
        if self.log.len() < FAILURE_LOG_CAP {
            self.log.push(detail);
        }
    }

    fn absorb(&mut self, other: Vec<(Check, String)>) {
        for (c, d) in other {
            self.fail(c, d);
        }
    }

    fn finish(self, nodes_checked: usize) -> TreeChecks {
        let ok = |c| !self.failed.contains(&c);
        TreeChecks {
            nodes_checked,
            nesting: ok(Check::Nesting),
            diameters: ok(Check::Diameter),
            diameter_bounds: ok(Check::Bound),
            sandwich: ok(Check::Sandwich),
            good_approximant: ok(Check::Approximant),
            siblings_disjoint: ok(Check::Siblings),
            derivative: ok(Check::Derivative),
            cylinders: ok(Check::Cylinder),
            failures: self.log,
        }
    }
}

/// Smallest `m` with `λ^{γ̂+m}/(1−λ) < 2^{−αγ̂}`, and whether the two-sided
/// sandwich holds for it.
pub fn sandwich_m(lambda: f64, alpha: f64, gamma_hat: usize) -> (usize, bool) {
    let ln_l = lambda.ln();
    let ln_c = (1.0 - lambda).ln();
    let g = gamma_hat as f64;
    let target = -alpha * g * std::f64::consts::LN_2;
    let upper = |m: f64| (g + m) * ln_l - ln_c;
    let x = g * (alpha * std::f64::consts::LN_2 / -ln_l - 1.0) + ln_c / ln_l;
    let mut m = (x.floor() + 1.0).max(0.0);
    while upper(m) >= target {
        m += 1.0;
    }
    while m > 0.0 && upper(m - 1.0) < target {
        m -= 1.0;
    }
    let holds = upper(m) < target && target <= upper(m - 1.0);
    (m as usize, holds)
}

fn interval(q: &(Q, Q)) -> Interval {
    Interval::new(q.0.to_f64(), q.1.to_f64())
}

fn contains(outer: &(Q, Q), inner: &(Q, Q)) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

fn sorted(a: Q, b: Q) -> (Q, Q) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
struct Branch {
    word: Word,
    delta: (Q, Q),
    delta_hat: (Q, Q),
}

/// Cylinder data attached to one level-`Γ(q)` node.
#[derive(Debug, Clone)]
struct Anchor {
    s_omega: Q,
    shift: Q,
}

struct Stage<'a> {
    pow: &'a [Q],
    d: &'a Q,
    slope: Q,
    offset: Q,
    slope_abs: Q,
    theta: usize,
    gamma: usize,
    m: usize,
    /// Rational lower bound for `2^{−αγ̂}`.
    eps: Q,
}

impl Stage<'_> {
    /// `f(g_{ω(κ)}([s, s + len]) + n D)`.
    fn image(&self, a: &Anchor, s: &Q, len: &Q) -> (Q, Q) {
        let scale = &self.pow[self.theta];
        let at = |y: Q| &self.slope * (&a.s_omega + scale * y + &a.shift) + &self.offset;
        sorted(at(s.clone()), at(s + len))
    }

    fn grow(&self, branch: &Branch, anchor: &Anchor, digits: &[u8]) -> (Vec<Branch>, Vec<(Check, String)>) {
        let mut out = Vec::with_capacity(self.gamma);
        let mut fails = Vec::new();
        let mut s_tau = Q::zero();
        let mut word = branch.word.clone();
        let mut parent = (branch.delta.clone(), branch.delta_hat.clone());
        for l in 1..=self.gamma {
            let bit = digits[l - 1];
            if bit == 1 {
                s_tau += &self.pow[l];
            }
            word.push(bit);
            let delta = self.image(anchor, &s_tau, &(&self.pow[l] * self.d));
            let delta_hat = if l < self.gamma {
                delta.clone()
            } else {
                self.image(anchor, &s_tau, &(&self.pow[l + self.m] * self.d))
            };

            let want = &self.slope_abs * &self.pow[self.theta + l] * self.d;
            if &delta.1 - &delta.0 != want {
                fails.push((Check::Diameter, format!("diam Delta_{word} differs from the level value")));
            }
            if l == self.gamma {
                let want_hat = &self.slope_abs * &self.pow[self.theta + l + self.m] * self.d;
                if &delta_hat.1 - &delta_hat.0 != want_hat {
                    fails.push((Check::Diameter, format!("diam hat Delta_{word} differs from the level value")));
                }
            }
            if !(contains(&parent.0, &parent.1) && contains(&parent.1, &delta) && contains(&delta, &delta_hat)) {
                fails.push((Check::Nesting, format!("nesting fails at {word}")));
            }

            if l == self.gamma {
                // Witness ω(κ)τ has length θ + γ = γ̂.
                let witness = &anchor.s_omega + &self.pow[self.theta] * &s_tau;
                let pre = sorted(
                    (&delta_hat.0 - &self.offset) / &self.slope - &anchor.shift,
                    (&delta_hat.1 - &self.offset) / &self.slope - &anchor.shift,
                );
                let inside = pre.0 >= Q::zero() && &pre.1 <= self.d;
                let close = (&pre.0 - &witness).abs() < self.eps && (&pre.1 - &witness).abs() < self.eps;
                if !(inside && close) {
                    fails.push((Check::Approximant, format!("hat Delta_{word} leaves the approximation layer")));
                }

                let sibling_s = if bit == 1 {
                    &s_tau - &self.pow[l]
                } else {
                    &s_tau + &self.pow[l]
                };
                let sibling = self.image(anchor, &sibling_s, &(&self.pow[l + self.m] * self.d));
                if !(delta_hat.1 <= sibling.0 || sibling.1 <= delta_hat.0) {
                    fails.push((Check::Siblings, format!("children of {} overlap", branch_prefix(&word))));
                }
            }

            out.push(Branch {
                word: word.clone(),
                delta: delta.clone(),
                delta_hat: delta_hat.clone(),
            });
            parent = (delta, delta_hat);
        }
        (out, fails)
    }
}

fn branch_prefix(word: &Word) -> Word {
    Word::new(word.bits()[..word.len() - 1].to_vec()).unwrap_or_default()
}

fn powers(lambda: &Q, upto: usize) -> Vec<Q> {
    let mut pow = Vec::with_capacity(upto + 1);
    pow.push(Q::from_integer(1.into()));
    for k in 1..=upto {
        let next = &pow[k - 1] * lambda;
        pow.push(next);
    }
    pow
}

/// Builds the first `depth` stages of the nested construction, with map
/// `j(q) = sims[q mod sims.len()]` at stage `q+1`.
///
/// Stages whose schedule would exceed `config.max_level` are not built; the
/// tree up to the last completed stage is returned with `infeasible` set.
pub fn build_intersection_tree(
    lambda: &Lambda,
    alpha: f64,
    s: f64,
    sims: &[Similarity],
    depth: usize,
    config: &TreeConfig,
) -> Result<NestedTree> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(1, inf)",
        });
    }
    if !(s >= 0.0 && s <= 1.0 / alpha) {
        return Err(Error::Domain {
            what: "s",
            value: s,
            domain: "[0, 1/alpha]",
        });
    }
    if sims.is_empty() {
        return Err(Error::Precondition("at least one similarity is required".into()));
    }
    if config.paths == 0 || config.paths > NODE_CAP {
        return Err(Error::Precondition(format!("paths must lie in 1..={NODE_CAP}")));
    }

    let lam_f = lambda.value();
    let ln_l = lam_f.ln();
    let ln_d = (lam_f / (1.0 - lam_f)).ln();
    let lam = to_rational(lam_f);
    let d = &lam / (Q::from_integer(1.into()) - &lam);
    let root = (Q::zero(), d.clone());

    let mut branches = vec![
        Branch {
            word: Word::empty(),
            delta: root.clone(),
            delta_hat: root.clone(),
        };
        config.paths
    ];
    let mut nodes: BTreeMap<Word, TreeNode> = BTreeMap::new();
    nodes.insert(
        Word::empty(),
        TreeNode {
            word: Word::empty(),
            level: 0,
            delta: interval(&root),
            delta_hat: interval(&root),
        },
    );
    let mut levels = vec![LevelSummary {
        level: 0,
        stage: 0,
        delta: ln_d.exp(),
        delta_hat: ln_d.exp(),
        ln_delta: ln_d,
        ln_delta_hat: ln_d,
        nodes: 1,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tally = Tally::default();
    let mut schedule = Vec::new();
    let mut infeasible = None;
    let mut checked = 0usize;

    let (mut ln_delta, mut ln_delta_hat) = (ln_d, ln_d);
    let mut gamma_prev = 0usize;
    let mut level = 0usize;

    for q in 0..depth {
        let j = q % sims.len();
        let f = sims[j];
        let r_abs = f.slope.abs();
        if !(ln_delta_hat < r_abs.ln() + ln_d) {
            infeasible = Some(format!(
                "stage {}: hat Delta is not shorter than |f'| diam(I_lambda)",
                q + 1
            ));
            break;
        }
        let theta_f = (((1.0 - lam_f).ln() + ln_delta_hat - (4.0 * r_abs).ln()) / ln_l).floor().max(0.0);
        let next_abs = sims[(q + 1) % sims.len()].slope.abs();
        let growth = q as f64 * gamma_prev as f64 * theta_f * -ln_delta;
        let gamma_f = (growth.floor() + 1.0).max((next_abs.ln() / ln_l).floor() + 1.0).max(1.0);
        let reach = level as f64 + gamma_f;
        if !gamma_f.is_finite() || reach > config.max_level as f64 || reach * config.paths as f64 > NODE_CAP as f64 {
            infeasible = Some(format!(
                "stage {}: gamma = {gamma_f:.4e} would exceed max level {} or {NODE_CAP} nodes",
                q + 1,
                config.max_level
            ));
            break;
        }
        let theta = theta_f as usize;
        let gamma = gamma_f as usize;
        let gamma_hat = gamma + theta;
        let (m, sandwich) = sandwich_m(lam_f, alpha, gamma_hat);
        let derivative = gamma as f64 * ln_l < next_abs.ln();
        if !sandwich {
            tally.fail(Check::Sandwich, format!("stage {}: m = {m} misses the sandwich", q + 1));
        }
        if !derivative {
            tally.fail(Check::Derivative, format!("stage {}: lambda^gamma >= |f'|", q + 1));
        }

        let pow = powers(&lam, (theta + gamma + m + 1).max(level + gamma + 1));
        let eps_f = 2f64.powf(-alpha * gamma_hat as f64) * (1.0 - 1e-12);
        let stage = Stage {
            pow: &pow,
            d: &d,
            slope: to_rational(f.slope),
            offset: to_rational(f.offset),
            slope_abs: to_rational(r_abs),
            theta,
            gamma,
            m,
            eps: to_rational(eps_f),
        };

        let mut anchors_in: BTreeMap<Word, (Q, Q)> = BTreeMap::new();
        for b in &branches {
            anchors_in.entry(b.word.clone()).or_insert_with(|| b.delta_hat.clone());
        }
        let located: Vec<(Word, Anchor, Option<String>)> = anchors_in
            .into_par_iter()
            .map(|(word, hat)| {
                let loc = locate_with_theta(&hat.0, &hat.1, &stage.slope, &stage.offset, &lam, theta);
                let four = Q::from_integer(4.into());
                let large = (&loc.image.1 - &loc.image.0) * four >= &lam * (&hat.1 - &hat.0);
                let fail = (!(contains(&hat, &loc.image) && large))
                    .then(|| format!("cylinder for node {word} is not a large subinterval"));
                let mut s_omega = Q::zero();
                for (i, &bit) in loc.word.bits().iter().enumerate() {
                    if bit == 1 {
                        s_omega += &pow[i + 1];
                    }
                }
                let shift = Q::from_integer(loc.n_shift.into()) * &d;
                (word, Anchor { s_omega, shift }, fail)
            })
            .collect();
        let mut anchors = BTreeMap::new();
        for (word, anchor, fail) in located {
            if let Some(msg) = fail {
                tally.fail(Check::Cylinder, msg);
            }
            anchors.insert(word, anchor);
        }

        let digits: Vec<Vec<u8>> = (0..branches.len())
            .map(|_| (0..gamma).map(|_| u8::from(rng.random::<bool>())).collect())
            .collect();
        let grown: Vec<(Vec<Branch>, Vec<(Check, String)>)> = branches
            .par_iter()
            .zip(digits.par_iter())
            .map(|(b, dg)| stage.grow(b, &anchors[&b.word], dg))
            .collect();

        let mut next = Vec::with_capacity(branches.len());
        for (chain, fails) in grown {
            tally.absorb(fails);
            checked += chain.len();
            for b in &chain {
                nodes.entry(b.word.clone()).or_insert_with(|| TreeNode {
                    word: b.word.clone(),
                    level: b.word.len(),
                    delta: interval(&b.delta),
                    delta_hat: interval(&b.delta_hat),
                });
            }
            next.push(chain.last().cloned().expect("gamma >= 1"));
        }
        branches = next;

        let ln_r = r_abs.ln();
        for l in 1..=gamma {
            let n = level + l;
            let delta = &stage.slope_abs * &pow[theta + l] * &d;
            let delta_hat = if l < gamma {
                delta.clone()
            } else {
                &stage.slope_abs * &pow[theta + l + m] * &d
            };
            if !(delta_hat <= delta && delta <= &pow[n] * &d) {
                tally.fail(Check::Bound, format!("level {n}: diameters exceed lambda^(n+1)/(1-lambda)"));
            }
            let ln_delta_n = ln_r + (theta + l) as f64 * ln_l + ln_d;
            let ln_hat_n = if l < gamma { ln_delta_n } else { ln_delta_n + m as f64 * ln_l };
            levels.push(LevelSummary {
                level: n,
                stage: q + 1,
                delta: ln_delta_n.exp(),
                delta_hat: ln_hat_n.exp(),
                ln_delta: ln_delta_n,
                ln_delta_hat: ln_hat_n,
                nodes: 0,
            });
            if l == gamma {
                ln_delta = ln_delta_n;
                ln_delta_hat = ln_hat_n;
            }
        }

        schedule.push(StageSchedule {
            q: q + 1,
            map_index: j,
            theta,
            gamma,
            gamma_hat,
            m,
            start_level: level,
            end_level: level + gamma,
            sandwich,
            derivative,
        });
        gamma_prev = gamma;
        level += gamma;
    }

    for node in nodes.values() {
        levels[node.level].nodes += 1;
    }
    let nodes: Vec<TreeNode> = nodes.into_values().collect();
    let correlation = correlation_rows(&nodes, &levels, level);

    Ok(NestedTree {
        lambda: lam_f,
        alpha,
        s,
        requested_depth: depth,
        completed_q: schedule.len(),
        infeasible,
        config: *config,
        schedule,
        levels,
        nodes,
        checks: tally.finish(checked),
        correlation,
    })
}

fn gap(a: &Interval, b: &Interval) -> f64 {
    (b.lo - a.hi).max(a.lo - b.hi).max(0.0)
}

fn correlation_rows(nodes: &[TreeNode], levels: &[LevelSummary], deepest: usize) -> Vec<CorrelationRow> {
    if deepest == 0 {
        return Vec::new();
    }
    let hats: Vec<Interval> = nodes.iter().filter(|n| n.level == deepest).map(|n| n.delta_hat).collect();
    let count = hats.len();
    levels
        .iter()
        .filter(|l| l.delta >= CORRELATION_MIN_RADIUS)
        .map(|l| {
            let radius = l.delta;
            let mut close = 0u64;
            for (i, a) in hats.iter().enumerate() {
                for b in &hats[i + 1..] {
                    if gap(a, b) < radius {
                        close += 2;
                    }
                }
            }
            let pairs = (count * count.saturating_sub(1)) as f64;
            let fraction = if pairs > 0.0 { close as f64 / pairs } else { 0.0 };
            CorrelationRow {
                level: deepest,
                radius_level: l.level,
                radius,
                nodes: count,
                close_pairs: close,
                fraction,
                exponent: (close > 0 && radius < 1.0).then(|| fraction.ln() / radius.ln()),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubling() -> Vec<Similarity> {
        vec![Similarity::new(2.0, 0.0).unwrap()]
    }

    fn small() -> TreeConfig {
        TreeConfig {
            paths: 64,
            seed: 3,
            max_level: 4096,
        }
    }

    #[test]
    fn doubling_map_two_stages() {
        let l = Lambda::new(0.55).unwrap();
        let t = build_intersection_tree(&l, 1.5, 0.5, &doubling(), 2, &small()).unwrap();
        assert_eq!(t.completed_q, 2);
        assert!(t.infeasible.is_none());
        assert!(t.checks.all_hold(), "{:?}", t.checks);
        // Hand evaluation of the schedule for λ = 0.55, α = 1.5, f = 2x:
        // θ₁ = ⌊log(0.55/8)/log 0.55⌋ = 4, γ₁ = 1, m₁ = ⌊0.7392·5 + 1.3356⌋ + 1 = 6,
        // δ₁ = 2·0.55⁶/0.45, θ₂ = ⌊log(0.45·2·0.55¹²/0.45/8)/log 0.55⌋ = 14,
        // γ₂ = ⌊1·1·14·(−log δ₁)⌋ + 1 = 30.
        let s = &t.schedule;
        assert_eq!((s[0].theta, s[0].gamma, s[0].gamma_hat, s[0].m), (4, 1, 5, 6));
        assert_eq!((s[1].theta, s[1].gamma), (14, 30));
        assert_eq!(s[1].end_level, 31);
    }

    #[test]
    fn child_diameters_follow_the_schedule() {
        let l = Lambda::new(0.55).unwrap();
        let t = build_intersection_tree(&l, 1.5, 0.5, &doubling(), 2, &small()).unwrap();
        for st in &t.schedule {
            for lvl in st.start_level + 1..=st.end_level {
                let k = lvl - st.start_level;
                let want = 2.0 * 0.55f64.powi((st.theta + k + 1) as i32) / 0.45;
                let got = t.levels[lvl].delta;
                assert!((got - want).abs() <= 1e-12 * want, "level {lvl}: {got} vs {want}");
            }
        }
        for node in &t.nodes {
            let lv = &t.levels[node.level];
            let slack = 1e-9 * lv.delta + 4.0 * f64::EPSILON * (node.delta.lo.abs() + node.delta.hi.abs());
            assert!((node.delta.diameter() - lv.delta).abs() <= slack);
        }
    }

    #[test]
    fn third_stage_is_out_of_reach() {
        let l = Lambda::new(0.55).unwrap();
        let t = build_intersection_tree(&l, 1.5, 0.5, &doubling(), 3, &small()).unwrap();
        assert_eq!(t.completed_q, 2);
        assert!(t.infeasible.as_deref().unwrap().contains("stage 3"));
        assert!(t.checks.all_hold());
        assert_eq!(t.levels.len(), 32);
    }

    #[test]
    fn reflections_and_round_robin() {
        let l = Lambda::new(0.6).unwrap();
        let sims = [Similarity::new(2.0, 0.0).unwrap(), Similarity::new(-3.0, 0.7).unwrap()];
        let t = build_intersection_tree(&l, 2.0, 0.3, &sims, 2, &small()).unwrap();
        assert!(t.completed_q >= 1);
        assert_eq!(t.schedule[0].map_index, 0);
        if t.completed_q == 2 {
            assert_eq!(t.schedule[1].map_index, 1);
        }
        assert!(t.checks.all_hold(), "{:?}", t.checks);
    }

    #[test]
    fn sandwich_against_direct_search() {
        for &lam in &[0.51, 0.55, 0.618, 0.66] {
            for &alpha in &[1.1, 1.5, 2.0, 3.0] {
                for gh in 1..60 {
                    let (m, ok) = sandwich_m(lam, alpha, gh);
                    assert!(ok);
                    let target = 2f64.powf(-alpha * gh as f64);
                    let direct = (0..10_000)
                        .find(|&k| lam.powi((gh + k) as i32) / (1.0 - lam) < target)
                        .unwrap();
                    assert_eq!(m, direct, "lambda {lam} alpha {alpha} gh {gh}");
                }
            }
        }
    }

    #[test]
    fn printed_m_formula_misses_the_sandwich() {
        // Subtracting log(1−λ)/log λ instead of adding it.
        let (lam, alpha, gh) = (0.55f64, 1.5f64, 5usize);
        let x = gh as f64 * (alpha * std::f64::consts::LN_2 / -lam.ln() - 1.0) - (1.0 - lam).ln() / lam.ln();
        let m = x.floor() + 1.0;
        assert!(lam.powf(gh as f64 + m) / (1.0 - lam) >= 2f64.powf(-alpha * gh as f64));
        assert_eq!(sandwich_m(lam, alpha, gh).0, 6);
    }

    #[test]
    fn correlation_rows_are_consistent() {
        let l = Lambda::new(0.55).unwrap();
        let t = build_intersection_tree(&l, 1.5, 0.5, &doubling(), 2, &small()).unwrap();
        assert!(!t.correlation.is_empty());
        let mut last = u64::MAX;
        for row in &t.correlation {
            assert!(row.close_pairs <= last);
            last = row.close_pairs;
            assert!(row.fraction <= 1.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let l = Lambda::new(0.55).unwrap();
        let c = TreeConfig::default();
        assert!(build_intersection_tree(&l, 1.5, 0.9, &doubling(), 1, &c).is_err());
        assert!(build_intersection_tree(&l, 1.0, 0.5, &doubling(), 1, &c).is_err());
        assert!(build_intersection_tree(&l, 1.5, 0.5, &[], 1, &c).is_err());
        let root = build_intersection_tree(&l, 1.5, 0.5, &doubling(), 0, &c).unwrap();
        assert_eq!(root.nodes.len(), 1);
    }

    #[test]
    fn contracting_first_map_is_infeasible() {
        let l = Lambda::new(0.55).unwrap();
        let sims = [Similarity::new(0.5, 0.0).unwrap()];
        let t = build_intersection_tree(&l, 1.5, 0.5, &sims, 1, &small()).unwrap();
        assert_eq!(t.completed_q, 0);
        assert!(t.infeasible.is_some());
    }
}
