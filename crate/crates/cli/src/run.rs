use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use wlambda_core::betashift::{
    a_beta_membership, count_words, cylinder_stats, expansion_of_one, forbidden_word_adjacency,
    is_sft, multinacci, orbit, parry_admissible, perron_eigenvalue, Beta, DigitSeq,
};
use wlambda_core::dimension::{
    build_intersection_tree, dim_estimate, locate_cylinder, lower_bound, multiplicity, rams_cover,
    upper_bound, Similarity, TreeConfig,
};
use wlambda_core::expansion::{
    enumerate_level, enumerate_level_capped, eval_word, gamma_witness as find_witness, gamma_witness_exhaustive,
    lambda_interval, witness_tau_bound,
};
use wlambda_core::grid::lambda_grid;
use wlambda_core::proximity::{
    estimate_delta_with, exceptional_scan, param_interval, translation_ratio_scan,
    verify_interval_diameter, verify_proximity_grid, DeltaConfig, ProximityTable, SignedPoly,
};
use wlambda_core::{Interval, Lambda, Word};

use crate::output::Report;
use crate::{
    BetaCylinderArgs, BoundsArgs, CoverArgs, CylinderArgs, DiameterArgs, DigitsArgs, InequalityArgs,
    LambdaArg, LevelsetArgs, OrbitArgs, ParryArgs, PerronArgs, ProximityArgs, RamsArgs, ScanArgs,
    SftArgs, TauArgs, TranslationArgs, TreeArgs, TreeTable, WitnessArgs,
};

/// Polynomials enumerated by `verify interval-diameter` stay below this degree.
const DIAMETER_DEGREE_CAP: usize = 10;

pub fn parse_similarity(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected slope:offset, got {s:?}"))?;
    let slope: f64 = a.trim().parse().map_err(|e| format!("slope {a:?}: {e}"))?;
    let offset: f64 = b.trim().parse().map_err(|e| format!("offset {b:?}: {e}"))?;
    if slope == 0.0 {
        return Err("slope must be non-zero".into());
    }
    Ok((slope, offset))
}

fn report<A: Serialize>(args: &A, columns: &[&'static str]) -> Report {
    let mut r = Report::new(columns);
    if let Value::Object(map) = json!(args) {
        r.config = map;
    }
    r
}

fn resolve(arg: &LambdaArg) -> Result<Lambda> {
    match (arg.lambda, arg.multinacci) {
        (_, Some(m)) => multinacci(m, 0.0).context("--multinacci"),
        (Some(x), None) => Lambda::new(x).context("--lambda"),
        (None, None) => bail!("one of --lambda or --multinacci is required"),
    }
}

fn with_lambda<A: Serialize>(args: &A, arg: &LambdaArg, columns: &[&'static str]) -> Result<(Report, Lambda)> {
    let l = resolve(arg)?;
    let mut r = report(args, columns);
    r.set("lambda_value", l.value());
    Ok((r, l))
}

pub fn levelset(a: &LevelsetArgs) -> Result<Report> {
    let (mut r, l) = with_lambda(a, &a.lambda, &["index", "value"])?;
    let level = enumerate_level_capped(&l, a.n, a.merge_tol, a.cap)?;
    for (i, v) in level.values.iter().enumerate() {
        r.push(vec![json!(i), json!(v)]);
    }
    r.note(format!(
        "raw {}, exact distinct {}, merged {}",
        level.raw_count,
        level.exact_count,
        level.count()
    ));
    Ok(r)
}

pub fn tau(a: &TauArgs) -> Result<Report> {
    let (mut r, l) = with_lambda(a, &a.lambda, &["n", "count", "exact_count", "tau"])?;
    for n in 1..=a.n_max {
        let level = enumerate_level(&l, n, a.merge_tol)?;
        let tau = (level.count() as f64).log2() / n as f64;
        r.push(vec![json!(n), json!(level.count()), json!(level.exact_count), json!(tau)]);
    }
    Ok(r)
}

fn witness_row(mode: &str, l: &Lambda, w: Option<Word>) -> Vec<Value> {
    match w {
        Some(w) => vec![
            json!(mode),
            json!(true),
            json!(w.to_string()),
            json!(w.len()),
            json!(eval_word(l, &w)),
            json!(witness_tau_bound(w.len())),
        ],
        None => vec![json!(mode), json!(false), Value::Null, Value::Null, Value::Null, Value::Null],
    }
}

pub fn gamma_witness(a: &WitnessArgs) -> Result<Report> {
    let (mut r, l) = with_lambda(a, &a.lambda, &["mode", "found", "word", "length", "sum", "tau_bound"])?;
    r.push(witness_row("greedy", &l, find_witness(&l, a.n_max, a.tol)));
    if a.exhaustive {
        let w = gamma_witness_exhaustive(&l, a.n_max, a.tol)?;
        r.push(witness_row("exhaustive", &l, w));
    }
    Ok(r)
}

pub fn proximity(a: &ProximityArgs) -> Result<Report> {
    let (mut r, l) = with_lambda(a, &a.lambda, &["n", "k", "r", "tilde_count", "restricted_count"])?;
    let table = ProximityTable::new(&l, a.n_max, a.k_max)?;
    for n in 1..=a.n_max {
        for k in 0..=a.k_max {
            let c = table.count(n, k, a.r);
            r.push(vec![json!(n), json!(k), json!(a.r), json!(c.tilde_count), json!(c.restricted_count)]);
        }
    }
    Ok(r)
}

pub fn verify_inequality(a: &InequalityArgs) -> Result<Report> {
    let mut r = report(a, &["fraction", "lambda", "n", "k", "r", "lhs", "rhs", "holds"]);
    r.assert("P~_n <= 2^n + sum_l 2^(n-l) P_l (exact integers)");
    for row in verify_proximity_grid(a.lambda_grid, a.n_max, a.k_max, &a.radii)? {
        let rep = row.report;
        let cells = vec![
            json!(row.point.fraction()),
            json!(row.lambda),
            json!(rep.n),
            json!(rep.k),
            json!(rep.r),
            json!(rep.lhs.to_string()),
            json!(rep.rhs.to_string()),
            json!(rep.holds),
        ];
        if !rep.holds {
            r.fail(json!({"fraction": row.point.fraction(), "lambda": row.lambda, "report": rep}));
        }
        r.push(cells);
    }
    Ok(r)
}

pub fn verify_translation(a: &TranslationArgs) -> Result<Report> {
    let mut r = report(a, &["trials", "seed", "max_ratio", "within_four", "below_two", "size", "t", "r"]);
    r.assert("N_r(phi, phi+t) <= 4 N_r(phi, phi)");
    let rep = translation_ratio_scan(a.trials, a.seed)?;
    r.push(vec![
        json!(rep.trials),
        json!(rep.seed),
        json!(rep.max_ratio),
        json!(rep.within_four),
        json!(rep.below_two),
        json!(rep.argmax.values.len()),
        json!(rep.argmax.t),
        json!(rep.argmax.r),
    ]);
    if !rep.within_four {
        r.fail(json!(rep.argmax));
    }
    r.note(format!("max ratio {} (below 2: {}, reported only)", rep.max_ratio, rep.below_two));
    Ok(r)
}

fn polynomials(max_degree: usize) -> Vec<Vec<i8>> {
    let mut out = Vec::new();
    for d in 1..=max_degree {
        let total = 3usize.pow(d as u32);
        for idx in 0..total {
            let mut c = Vec::with_capacity(d);
            let mut x = idx;
            for _ in 0..d {
                c.push((x % 3) as i8 - 1);
                x /= 3;
            }
            if c[0] != 0 && c[d - 1] != 0 {
                out.push(c);
            }
        }
    }
    out
}

pub fn verify_diameter(a: &DiameterArgs) -> Result<Report> {
    let mut r = report(a, &["coeffs", "components", "max_diameter", "bound", "holds"]);
    let delta = match a.delta {
        Some(d) => d,
        None => {
            let cert = estimate_delta_with(&DeltaConfig::default())?;
            r.set("delta_certificate", &cert);
            cert.delta
        }
    };
    r.set("delta_value", delta);
    if a.coeffs.is_none() && a.max_degree > DIAMETER_DEGREE_CAP {
        bail!("--max-degree {} exceeds {DIAMETER_DEGREE_CAP}", a.max_degree);
    }
    let polys = match &a.coeffs {
        Some(c) => vec![c.clone()],
        None => polynomials(a.max_degree),
    };
    r.assert("every component of {lambda in (1/2, 2/3) : |p(lambda)| <= gamma} has diameter <= 4 gamma / delta");
    let bound = 4.0 * a.gamma / delta;
    for c in polys {
        let p = SignedPoly::new(c.clone())?;
        let holds = verify_interval_diameter(&p, a.gamma, delta)?;
        let set = param_interval(&p, a.gamma);
        let max = set.intervals.iter().map(Interval::diameter).fold(0.0, f64::max);
        let label = c.iter().map(i8::to_string).collect::<Vec<_>>().join(",");
        if !holds {
            r.fail(json!({"coeffs": c, "gamma": a.gamma, "delta": delta, "intervals": set.intervals}));
        }
        r.push(vec![json!(label), json!(set.intervals.len()), json!(max), json!(bound), json!(holds)]);
    }
    Ok(r)
}

fn random_family(rng: &mut ChaCha8Rng) -> Vec<Interval> {
    let size = rng.random_range(1..=25usize);
    let span = rng.random_range(1.0..20.0);
    (0..size)
        .map(|_| {
            let lo = rng.random_range(0.0..span);
            Interval::new(lo, lo + span * 10f64.powf(rng.random_range(-3.0..-0.3)))
        })
        .collect()
}

pub fn verify_rams(a: &RamsArgs) -> Result<Report> {
    let mut r = report(
        a,
        &["family", "size", "b", "rho", "region", "pieces", "lhs", "rhs", "sup_holds", "sum_holds", "coverage"],
    );
    r.assert("sup of piece lengths <= 4 sup d_i");
    r.assert("sum of piece^rho <= 4^rho / b * sum d_i^rho");
    r.assert("cover contains every sampled point of multiplicity >= b, and only those lie in the region");
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for id in 0..a.families {
        let family = random_family(&mut rng);
        let lo = family.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min) - 0.1;
        let hi = family.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max) + 0.1;
        let mut points: Vec<f64> = (0..a.points).map(|_| rng.random_range(lo..hi)).collect();
        points.extend(family.iter().flat_map(|i| [i.lo, i.hi]));
        let mult: Vec<usize> = points.iter().map(|&x| multiplicity(&family, x)).collect();
        for &b in &a.b {
            for &rho in &a.rho {
                let rc = rams_cover(&family, b, rho)?;
                let bad_point = points.iter().zip(&mult).find(|(&x, &m)| {
                    let in_region = rc.region.iter().any(|iv| iv.contains(x));
                    in_region != (m >= b) || (in_region && !rc.cover.covers(x))
                });
                let coverage = bad_point.is_none();
                if !(coverage && rc.sup_holds && rc.sum_holds) {
                    r.fail(json!({
                        "family": family, "b": b, "rho": rho, "lhs": rc.lhs, "rhs": rc.rhs,
                        "sup_holds": rc.sup_holds, "bad_point": bad_point.map(|(x, _)| *x),
                    }));
                }
                r.push(vec![
                    json!(id),
                    json!(family.len()),
                    json!(b),
                    json!(rho),
                    json!(rc.region.len()),
                    json!(rc.cover.count()),
                    json!(rc.lhs + 0.0),
                    json!(rc.rhs),
                    json!(rc.sup_holds),
                    json!(rc.sum_holds),
                    json!(coverage),
                ]);
            }
        }
    }
    Ok(r)
}

pub fn verify_cylinders(a: &CylinderArgs) -> Result<Report> {
    let (mut r, l) = with_lambda(
        a,
        &a.lambda,
        &["lambda", "a_lo", "a_hi", "slope", "offset", "n_shift", "word", "theta", "ratio", "contained", "large"],
    )?;
    r.assert("f(g_w(I) + n diam I) is inside A");
    r.assert("its diameter is at least lambda/4 diam A");
    let lam = l.value();
    let d = lambda_interval(&l).diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for _ in 0..a.trials {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let slope = sign * rng.random_range(0.5..4.0);
        let f = Similarity::new(slope, rng.random_range(-2.0..2.0))?;
        let diam = slope.abs() * d * 10f64.powf(rng.random_range(-6.0..-0.01));
        let lo = rng.random_range(-5.0..5.0);
        let area = Interval::new(lo, lo + diam);
        let rep = locate_cylinder(&area, &f, &l)?;
        if !(rep.contained && rep.large) {
            r.fail(json!({"a": area, "f": f, "lambda": lam, "result": rep}));
        }
        r.push(vec![
            json!(lam),
            json!(area.lo),
            json!(area.hi),
            json!(f.slope),
            json!(f.offset),
            json!(rep.n_shift),
            json!(rep.word.to_string()),
            json!(rep.theta),
            json!(rep.ratio),
            json!(rep.contained),
            json!(rep.large),
        ]);
    }
    Ok(r)
}

pub fn verify_tree(a: &TreeArgs) -> Result<Report> {
    let columns: &[&'static str] = match a.table {
        TreeTable::Levels => &["level", "stage", "delta", "delta_hat", "nodes"],
        TreeTable::Schedule => &[
            "q", "map", "theta", "gamma", "gamma_hat", "m", "start", "end", "sandwich", "derivative",
        ],
        TreeTable::Nodes => &["word", "level", "delta_lo", "delta_hi", "hat_lo", "hat_hi"],
        TreeTable::Correlation => &["level", "radius_level", "radius", "nodes", "close_pairs", "fraction", "exponent"],
    };
    let (mut r, l) = with_lambda(a, &a.lambda, columns)?;
    let sims = a
        .sims
        .iter()
        .map(|&(s, o)| Similarity::new(s, o))
        .collect::<wlambda_core::Result<Vec<_>>>()?;
    let config = TreeConfig {
        paths: a.paths,
        seed: a.seed,
        max_level: a.max_level,
    };
    let tree = build_intersection_tree(&l, a.alpha, a.s, &sims, a.depth, &config)?;
    match a.table {
        TreeTable::Levels => {
            for lv in &tree.levels {
                r.push(vec![json!(lv.level), json!(lv.stage), json!(lv.delta), json!(lv.delta_hat), json!(lv.nodes)]);
            }
        }
        TreeTable::Schedule => {
            for st in &tree.schedule {
                r.push(vec![
                    json!(st.q),
                    json!(st.map_index),
                    json!(st.theta),
                    json!(st.gamma),
                    json!(st.gamma_hat),
                    json!(st.m),
                    json!(st.start_level),
                    json!(st.end_level),
                    json!(st.sandwich),
                    json!(st.derivative),
                ]);
            }
        }
        TreeTable::Nodes => {
            for n in &tree.nodes {
                r.push(vec![
                    json!(n.word.to_string()),
                    json!(n.level),
                    json!(n.delta.lo),
                    json!(n.delta.hi),
                    json!(n.delta_hat.lo),
                    json!(n.delta_hat.hi),
                ]);
            }
        }
        TreeTable::Correlation => {
            for c in &tree.correlation {
                r.push(vec![
                    json!(c.level),
                    json!(c.radius_level),
                    json!(c.radius),
                    json!(c.nodes),
                    json!(c.close_pairs),
                    json!(c.fraction),
                    json!(c.exponent),
                ]);
            }
        }
    }
    let c = &tree.checks;
    for (name, ok) in [
        ("nesting Delta >= hat Delta >= child Delta", c.nesting),
        ("level diameters match the schedule", c.diameters),
        ("hat delta_n <= delta_n <= lambda^(n+1)/(1-lambda)", c.diameter_bounds),
        ("m sandwich", c.sandwich),
        ("hat Delta inside the image of the approximation layer", c.good_approximant),
        ("sibling hat Delta at stage ends are disjoint", c.siblings_disjoint),
        ("lambda^gamma < |f'|", c.derivative),
        ("cylinders inside hat Delta with diameter >= lambda/4", c.cylinders),
    ] {
        r.assert(name);
        if !ok {
            r.fail(json!({"check": name, "failures": c.failures}));
        }
    }
    r.note(format!("completed stages: {} of {}", tree.completed_q, tree.requested_depth));
    if let Some(why) = &tree.infeasible {
        r.note(format!("stopped: {why}"));
    }
    Ok(r)
}

pub fn scan_exceptional(a: &ScanArgs) -> Result<Report> {
    let mut r = report(a, &["fraction", "lambda", "n", "k", "restricted_count", "threshold"]);
    for row in exceptional_scan(a.s, a.r, a.n_min..=a.n_max, a.k_max, &lambda_grid(a.lambda_grid))? {
        r.push(vec![
            json!(row.point.fraction()),
            json!(row.lambda),
            json!(row.n),
            json!(row.k),
            json!(row.restricted_count),
            json!(row.threshold),
        ]);
    }
    Ok(r)
}

pub fn beta_digits(a: &DigitsArgs) -> Result<Report> {
    let mut r = report(a, &["k", "digit", "partial", "error", "bound"]);
    let beta = Beta::new(a.beta)?;
    r.assert("|x - sum_{i<=k} d_i beta^-i| < beta^-k");
    let steps = orbit(&beta, a.x, a.n)?;
    let mut partial = 0.0;
    for (i, s) in steps.iter().enumerate() {
        let k = i + 1;
        partial += f64::from(s.digit) * a.beta.powi(-(k as i32));
        let err = (a.x - partial).abs();
        let bound = a.beta.powi(-(k as i32));
        if err >= bound {
            r.fail(json!({"beta": a.beta, "x": a.x, "k": k, "error": err, "bound": bound}));
        }
        r.push(vec![json!(k), json!(s.digit), json!(partial), json!(err), json!(bound)]);
    }
    Ok(r)
}

pub fn beta_parry(a: &ParryArgs) -> Result<Report> {
    let beta = Beta::new(a.beta)?;
    if let Some(d) = &a.digits {
        let mut r = report(a, &["digits", "admissible"]);
        let seq = DigitSeq::new(d.clone())?;
        r.push(vec![json!(seq.to_string()), json!(parry_admissible(&seq, &beta))]);
        return Ok(r);
    }
    let mut r = report(a, &["k", "digit_of_1", "quasi_greedy"]);
    let one = expansion_of_one(&beta, a.n);
    for (i, (d, q)) in one.digits_of_1.digits.iter().zip(&one.quasi_greedy.digits).enumerate() {
        r.push(vec![json!(i + 1), json!(d), json!(q)]);
    }
    r.note(format!(
        "terminates at {:?}, sft {}, boundary convention {}",
        one.terminates_at,
        is_sft(&beta, a.n, 1e-12),
        one.boundary_convention
    ));
    Ok(r)
}

pub fn beta_sft(a: &SftArgs) -> Result<Report> {
    let mut r = report(a, &["state", "label", "next0", "next1"]);
    let sft = forbidden_word_adjacency(a.m)?;
    for u in 0..sft.states() {
        r.push(vec![json!(u), json!(sft.state_label(u)), json!(sft.next(u, 0)), json!(sft.next(u, 1))]);
    }
    Ok(r)
}

pub fn perron(a: &PerronArgs) -> Result<Report> {
    let mut r = report(a, &["m", "mu", "lambda", "mu_times_lambda", "iterations", "shifted", "vector"]);
    r.assert("mu * multinacci(m) = 1 within 1e-8");
    let sft = forbidden_word_adjacency(a.m)?;
    let p = perron_eigenvalue(&sft, a.tol)?;
    let l = multinacci(a.m, 0.0)?.value();
    let prod = p.mu * l;
    if (prod - 1.0).abs() > 1e-8 {
        r.fail(json!({"m": a.m, "mu": p.mu, "lambda": l}));
    }
    r.push(vec![
        json!(a.m),
        json!(p.mu),
        json!(l),
        json!(prod),
        json!(p.iterations),
        json!(p.shifted),
        json!(json!(p.vector).to_string()),
    ]);
    Ok(r)
}

pub fn beta_cylinders(a: &BetaCylinderArgs) -> Result<Report> {
    let mut r = report(a, &["n", "count", "min_len", "max_len", "min_ratio", "max_ratio"]);
    let sft = forbidden_word_adjacency(a.m)?;
    let beta = Beta::reciprocal(&multinacci(a.m, 0.0)?);
    r.set("beta_value", beta.value());
    for n in 1..=a.n_max {
        let s = cylinder_stats(&sft, &beta, n)?;
        debug_assert_eq!(s.count, count_words(&sft, n)?);
        r.push(vec![
            json!(n),
            json!(s.count),
            json!(s.min_len),
            json!(s.max_len),
            json!(s.min_ratio),
            json!(s.max_ratio),
        ]);
    }
    Ok(r)
}

pub fn beta_orbit(a: &OrbitArgs) -> Result<Report> {
    let mut r = report(a, &["k", "x", "digit", "err", "unreliable", "in_a_beta"]);
    let beta = Beta::new(a.beta)?;
    let hits = match a.kappa {
        Some(k) => Some(a_beta_membership(&beta, k, a.x, a.n)?),
        None => None,
    };
    for (i, s) in orbit(&beta, a.x, a.n)?.iter().enumerate() {
        let k = i + 1;
        let member = hits.as_ref().map(|h| h.contains(&k));
        r.push(vec![json!(k), json!(s.x), json!(s.digit), json!(s.err), json!(s.unreliable), json!(member)]);
    }
    Ok(r)
}

pub fn dimension_cover(a: &CoverArgs) -> Result<Report> {
    let (mut r, l) = with_lambda(a, &a.lambda, &["n", "cover_count", "scale", "estimate", "upper", "lower"])?;
    if a.n_min == 0 {
        bail!("--n-min must be at least 1");
    }
    for n in a.n_min..=a.n_max {
        let e = dim_estimate(&l, a.alpha, n, a.merge_tol)?;
        r.push(vec![
            json!(n),
            json!(e.cover_count),
            json!(e.scale),
            json!(e.estimate),
            json!(e.upper),
            json!(e.lower),
        ]);
    }
    Ok(r)
}

pub fn dimension_bounds(a: &BoundsArgs) -> Result<Report> {
    let (mut r, l) = with_lambda(
        a,
        &a.lambda,
        &["alpha", "lower", "upper", "n", "inverse_alpha", "witness_bound"],
    )?;
    let lower = lower_bound(&l, a.alpha)?;
    let upper = upper_bound(&l, a.alpha, a.n)?;
    let witness = find_witness(&l, 24, 1e-12).map(|w| witness_tau_bound(w.len()) / a.alpha);
    r.assert("lower <= upper <= 1/alpha");
    if !(lower <= upper && upper <= 1.0 / a.alpha) {
        r.fail(json!({"lambda": l.value(), "alpha": a.alpha, "n": a.n, "lower": lower, "upper": upper}));
    }
    r.push(vec![json!(a.alpha), json!(lower), json!(upper), json!(a.n), json!(1.0 / a.alpha), json!(witness)]);
    Ok(r)
}
