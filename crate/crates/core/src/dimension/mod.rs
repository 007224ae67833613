//! Covers of the approximation layers and dimension brackets.

mod cylinder;
mod rams;
mod tree;

use serde::Serialize;

pub use cylinder::{locate_cylinder, locate_cylinder_exact, CylinderLocation, CylinderReport, Similarity};
pub use rams::{rams_cover, multiplicity, RamsCover};
pub use tree::{build_intersection_tree, CorrelationRow, LevelSummary, NestedTree, StageSchedule, TreeChecks, TreeConfig, TreeNode};

use crate::expansion::{enumerate_level, DEFAULT_MERGE_TOL};
use crate::{Error, Interval, Lambda, Result};

/// Finite family of closed intervals sorted by left endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cover {
    pub intervals: Vec<Interval>,
    /// Characteristic size: the ball radius for layer covers, the largest
    /// piece for multiplicity covers.
    pub scale: f64,
}

impl Cover {
    pub fn new(mut intervals: Vec<Interval>, scale: f64) -> Self {
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        Self { intervals, scale }
    }

    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    pub fn max_diameter(&self) -> f64 {
        self.intervals.iter().map(Interval::diameter).fold(0.0, f64::max)
    }

    pub fn power_sum(&self, rho: f64) -> f64 {
        self.intervals.iter().map(|i| i.diameter().powf(rho)).sum()
    }

    pub fn covers(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|i| i.lo <= x);
        self.intervals[..idx].iter().rev().any(|i| i.hi >= x)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(1, inf)",
        });
    }
    Ok(())
}

/// Balls of radius `2^{−αn}` around the level-`n` sums, merged where they
/// overlap.
pub fn w_cover(lambda: &Lambda, alpha: f64, n: usize, merge_tol: f64) -> Result<Cover> {
    check_alpha(alpha)?;
    let radius = 2f64.powf(-alpha * n as f64);
    let level = enumerate_level(lambda, n, merge_tol)?;
    let mut merged: Vec<Interval> = Vec::with_capacity(level.count());
    for &v in &level.values {
        let ball = Interval::new(v - radius, v + radius);
        match merged.last_mut() {
            Some(last) if ball.lo <= last.hi => last.hi = last.hi.max(ball.hi),
            _ => merged.push(ball),
        }
    }
    Ok(Cover {
        intervals: merged,
        scale: radius,
    })
}

/// `(log₂ #F_{λ,n} / n) / α`.
pub fn upper_bound(lambda: &Lambda, alpha: f64, n: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    let level = enumerate_level(lambda, n, DEFAULT_MERGE_TOL)?;
    Ok((level.count() as f64).log2() / n as f64 / alpha)
}

/// `−log λ / (α log 2)`.
pub fn lower_bound(lambda: &Lambda, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(lower_bound_value(lambda.value(), alpha))
}

fn lower_bound_value(lambda: f64, alpha: f64) -> f64 {
    -lambda.ln() / (alpha * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimEstimate {
    pub n: usize,
    pub cover_count: usize,
    /// Ball radius `2^{−αn}`.
    pub scale: f64,
    pub estimate: f64,
    pub upper: f64,
    pub lower: f64,
}

pub fn dim_estimate(lambda: &Lambda, alpha: f64, n: usize, merge_tol: f64) -> Result<DimEstimate> {
    let cover = w_cover(lambda, alpha, n, merge_tol)?;
    let count = cover.count();
    Ok(DimEstimate {
        n,
        cover_count: count,
        scale: cover.scale,
        estimate: (count as f64).ln() / -cover.scale.ln(),
        upper: upper_bound(lambda, alpha, n)?,
        lower: lower_bound(lambda, alpha)?,
    })
}
