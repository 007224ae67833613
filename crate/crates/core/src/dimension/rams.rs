use serde::Serialize;

use super::Cover;
use crate::{Error, Interval, Result};

/// Number of members of `family` containing `x`.
pub fn multiplicity(family: &[Interval], x: f64) -> usize {
    family.iter().filter(|i| i.contains(x)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamsCover {
    /// Maximal closed intervals of points lying in at least `b` members.
    pub region: Vec<Interval>,
    pub cover: Cover,
    /// `4 · sup d_i`.
    pub max_piece: f64,
    /// `Σ d̃_j^ρ`.
    pub lhs: f64,
    /// `4^ρ / b · Σ d_i^ρ`.
    pub rhs: f64,
    pub sup_holds: bool,
    pub sum_holds: bool,
}

fn multiplicity_region(family: &[Interval], b: usize) -> Vec<Interval> {
    let mut events: Vec<(f64, i32)> = family
        .iter()
        .flat_map(|i| [(i.lo, 1), (i.hi, -1)])
        .collect();
    // Closed intervals: at a shared coordinate, openings come first.
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut region: Vec<Interval> = Vec::new();
    let mut depth = 0i64;
    let mut start = None;
    for (x, e) in events {
        depth += i64::from(e);
        if e > 0 && depth == b as i64 && start.is_none() {
            start = Some(x);
        }
        if e < 0 && depth == b as i64 - 1 {
            if let Some(s) = start.take() {
                match region.last_mut() {
                    Some(last) if last.hi >= s => last.hi = last.hi.max(x),
                    _ => region.push(Interval::new(s, x)),
                }
            }
        }
    }
    region
}

/// Cost of covering a span of length `len` with pieces no longer than `max`.
fn span_cost(len: f64, max: f64, rho: f64) -> f64 {
    if len <= max {
        return len.powf(rho);
    }
    if rho <= 1.0 {
        let k = (len / max).floor();
        k * max.powf(rho) + (len - k * max).powf(rho)
    } else {
        let k = (len / max).ceil();
        k * (len / k).powf(rho)
    }
}

fn split_span(lo: f64, hi: f64, max: f64, rho: f64, out: &mut Vec<Interval>) {
    let len = hi - lo;
    if len <= max {
        out.push(Interval::new(lo, hi));
        return;
    }
    // Shrink the step slightly so rounded piece lengths stay below `max`.
    let step_max = max - 4.0 * f64::EPSILON * (lo.abs() + hi.abs() + max);
    if rho <= 1.0 {
        let mut a = lo;
        while hi - a > step_max {
            let b = a + step_max;
            out.push(Interval::new(a, b));
            a = b;
        }
        out.push(Interval::new(a, hi));
    } else {
        let k = (len / step_max).ceil() as usize;
        for i in 0..k {
            let a = lo + len * i as f64 / k as f64;
            let b = if i + 1 == k { hi } else { lo + len * (i + 1) as f64 / k as f64 };
            out.push(Interval::new(a, b));
        }
    }
}

/// Cover of the points lying in at least `b` members of `family`, with
/// pieces at most `4 sup d_i` long and small `ρ`-power sum.
///
/// Consecutive components of the multiplicity region are grouped by a
/// dynamic program over spans; each span is cut into pieces of length at
/// most `4 sup d_i`.
pub fn rams_cover(family: &[Interval], b: usize, rho: f64) -> Result<RamsCover> {
    if b == 0 {
        return Err(Error::Precondition("b must be at least 1".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::Domain {
            what: "rho",
            value: rho,
            domain: "(0, inf)",
        });
    }
    if family.is_empty() {
        return Err(Error::Precondition("family must be nonempty".into()));
    }
    let sup = family.iter().map(Interval::diameter).fold(0.0, f64::max);
    let max_piece = 4.0 * sup;
    let region = multiplicity_region(family, b);

    let k = region.len();
    let mut best = vec![0.0f64; k + 1];
    let mut choice = vec![0usize; k + 1];
    for j in 1..=k {
        best[j] = f64::INFINITY;
        for i in (1..=j).rev() {
            let cost = best[i - 1] + span_cost(region[j - 1].hi - region[i - 1].lo, max_piece, rho);
            if cost < best[j] {
                best[j] = cost;
                choice[j] = i;
            }
        }
    }
    let mut groups = Vec::new();
    let mut j = k;
    while j > 0 {
        let i = choice[j];
        groups.push((region[i - 1].lo, region[j - 1].hi));
        j = i - 1;
    }
    groups.reverse();
    let mut pieces = Vec::new();
    for (lo, hi) in groups {
        split_span(lo, hi, max_piece, rho, &mut pieces);
    }

    let cover = Cover::new(pieces, max_piece);
    let lhs = cover.power_sum(rho);
    let rhs = 4f64.powf(rho) / b as f64 * family.iter().map(|i| i.diameter().powf(rho)).sum::<f64>();
    Ok(RamsCover {
        sup_holds: cover.max_diameter() <= max_piece,
        sum_holds: lhs <= rhs,
        region,
        cover,
        max_piece,
        lhs,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn b_one_is_the_union() {
        let fam = [iv(0.0, 1.0), iv(0.5, 2.0), iv(3.0, 3.5)];
        let rc = rams_cover(&fam, 1, 0.7).unwrap();
        assert_eq!(rc.region, vec![iv(0.0, 2.0), iv(3.0, 3.5)]);
        assert!(rc.sup_holds && rc.sum_holds);
    }

    #[test]
    fn b_above_family_size_is_empty() {
        let fam = [iv(0.0, 1.0), iv(0.5, 2.0)];
        let rc = rams_cover(&fam, 3, 0.5).unwrap();
        assert!(rc.region.is_empty() && rc.cover.intervals.is_empty());
    }

    #[test]
    fn touching_endpoints_count_twice() {
        let fam = [iv(0.0, 1.0), iv(1.0, 2.0)];
        let rc = rams_cover(&fam, 2, 0.5).unwrap();
        assert_eq!(rc.region, vec![iv(1.0, 1.0)]);
    }

    #[test]
    fn many_small_pieces_inside_one_large() {
        // Covering each doubly covered component separately would give
        // 100 · 0.001^0.3 ≈ 12.6, above the bound ≈ 10.3.
        let mut fam = vec![iv(0.0, 1.0)];
        for i in 0..100 {
            let lo = i as f64 * 0.01;
            fam.push(iv(lo, lo + 0.001));
        }
        let rc = rams_cover(&fam, 2, 0.3).unwrap();
        let separate: f64 = rc.region.iter().map(|r| r.diameter().powf(0.3)).sum();
        assert!(separate > rc.rhs);
        assert!(rc.sum_holds && rc.sup_holds);
    }

    #[test]
    fn long_region_is_split() {
        let fam: Vec<Interval> = (0..40).map(|i| iv(i as f64 * 0.5, i as f64 * 0.5 + 1.0)).collect();
        let rc = rams_cover(&fam, 2, 1.0).unwrap();
        assert!(rc.cover.count() > 1);
        assert!(rc.sup_holds && rc.sum_holds);
    }

    #[test]
    fn random_families_against_point_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let fam: Vec<Interval> = (0..rng.random_range(1..30))
                .map(|_| {
                    let lo = rng.random_range(0.0..10.0);
                    iv(lo, lo + rng.random_range(0.01..2.0))
                })
                .collect();
            for &b in &[2usize, 3] {
                for &rho in &[0.3, 1.0, 1.5] {
                    let rc = rams_cover(&fam, b, rho).unwrap();
                    assert!(rc.sup_holds, "sup");
                    assert!(rc.sum_holds, "sum {} > {}", rc.lhs, rc.rhs);
                    for _ in 0..200 {
                        let x = rng.random_range(-1.0..13.0);
                        let in_region = rc.region.iter().any(|r| r.contains(x));
                        assert_eq!(in_region, multiplicity(&fam, x) >= b);
                        if in_region {
                            assert!(rc.cover.covers(x));
                        }
                    }
                }
            }
        }
    }
}
