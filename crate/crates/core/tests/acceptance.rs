//! The acceptance suite: one pass/fail line per criterion.

use std::io::Write;
use std::time::{Duration, Instant};

use serwalk::analysis::{cauchy_diagnostic, estimate_limit_set, estimate_with, verify_dichotomy, DichotomyVerdict, EstimateParams};
use serwalk::generators::{build_chainable_walk, build_unbounded_components_walk, cantor_abscissae, gen_halflines, gen_two_lines};
use serwalk::metric::{gap_components, hausdorff_distance, PointSample};
use serwalk::seqspace::{check_family_exhaustive, gen_c0_singleton_divergent, gen_c0_two_point, gen_no_rp_series, gen_vector_family, no_rp_block};
use serwalk::rearrange::{certify_rp, rearrange_to_limit_set, RearrangeParams, RpFamily};
use serwalk::series::{alternating_harmonic, full_sum_range_family};
use serwalk::walk::{build_xwalk, walk_to_series};
use serwalk::{Dyadic, NormKind, Point, SparseVec, Vector};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn two_lines_sample(height: f64, pitch: f64) -> Vec<Point> {
    let n = (height / pitch).round() as usize;
    [0.0, 1.0]
        .iter()
        .flat_map(|&x| (0..=n).map(move |i| Point::float(&[x, i as f64 * pitch])))
        .collect()
}

fn c1_staircase() -> Outcome {
    let w = gen_two_lines(3).map_err(|e| e.to_string())?;
    let expect = [[0.5, 0.0], [1.0, 0.0], [0.5, 0.0], [0.0, 0.0]];
    for (i, e) in expect.iter().enumerate() {
        ensure(w.sums[i + 1] == Point::exact(e), format!("s_{} = {:?}", i + 1, w.sums[i + 1].to_f64s()))?;
    }
    ensure(w.is_exact(), "walk not in exact mode")?;
    let top = w
        .phase_range(3)
        .map(|i| w.sums[i].coord(1))
        .map(|c| match c {
            serwalk::Scalar::Exact(d) => d,
            serwalk::Scalar::Float(_) => Dyadic::from_int(-1),
        })
        .max()
        .unwrap();
    ensure(top == Dyadic::from_int(2), format!("phase-3 height {top}"))?;
    Ok("s_1..s_4 exact, phase-3 height 2".into())
}

fn c2_shell_claim() -> Outcome {
    let w = gen_two_lines(6).map_err(|e| e.to_string())?;
    let est = estimate_limit_set(&w, 0.3, 0.1).map_err(|e| e.to_string())?;
    let at_09 = gap_components(&est.points, 0.9, NormKind::Euclidean).len();
    let at_11 = gap_components(&est.points, 1.1, NormKind::Euclidean).len();
    ensure(at_09 == 2 && at_11 == 1, format!("components at 0.9: {at_09}, at 1.1: {at_11}"))?;
    let d = hausdorff_distance(&est.points, &two_lines_sample(4.0, 0.1), NormKind::Euclidean).unwrap();
    Ok(format!("{} points, 2 components at gap 0.9, 1 at gap 1.1, d_H to {{0,1}}x[0,4] = {d:.3}", est.len()))
}

fn c3_two_point() -> Outcome {
    let w = gen_c0_two_point(5).map_err(|e| e.to_string())?;
    let e1 = SparseVec::basis(1);
    let e2 = SparseVec::basis(2);
    let first = [e2.clone(), e2.add(&e1), e1.clone(), e2.add(&e1), e2.clone(), SparseVec::zero()];
    ensure(w.sums[1..7] == first, "first six sums differ")?;
    let est = estimate_limit_set(&w, 0.3, 0.2).map_err(|e| e.to_string())?;
    let target = vec![SparseVec::zero(), e1];
    let d = hausdorff_distance(&est.points, &target, NormKind::Sup).unwrap();
    ensure(est.len() == 2 && d < 0.1, format!("estimate has {} points, d_H = {d}", est.len()))?;
    Ok(format!("estimate = {{theta, e_1}} (d_H {d:.3}), first six sums exact"))
}

fn c4_singleton_divergent() -> Outcome {
    let w = gen_c0_singleton_divergent(6).map_err(|e| e.to_string())?;
    for k in 1..=6usize {
        ensure(w.sums[(1 << (k + 1)) - 2].is_zero(), format!("s_(2^{}-2) != theta", k + 1))?;
        ensure(w.sums[(1 << k) + (1 << (k - 1)) - 2] == SparseVec::basis(k), format!("s for e_{k} wrong"))?;
    }
    let est = estimate_limit_set(&w, 0.5, 0.2).map_err(|e| e.to_string())?;
    ensure(
        est.len() == 1 && est.points[0].norm(NormKind::Sup) < 0.1,
        format!("estimate {:?}", est.points),
    )?;
    // Tail spanning blocks 5 and 6.
    let tail = (w.len() - w.phase_range(5).start) as f64 / w.len() as f64;
    let c = cauchy_diagnostic(&w, tail).map_err(|e| e.to_string())?;
    ensure(c.max_gap >= 1.0, format!("max gap {}", c.max_gap))?;
    Ok(format!("estimate = {{theta}}, Cauchy max gap {}", c.max_gap))
}

fn c5_vector_families() -> Outcome {
    let mut perms = 0;
    for k in 1..=3 {
        let f = gen_vector_family(k).map_err(|e| e.to_string())?;
        let r = check_family_exhaustive(&f).map_err(|e| e.to_string())?;
        ensure(r.passed(), format!("k={k}: {r:?}"))?;
        perms += r.permutations_checked;
    }
    Ok(format!("k=1,2,3 pass over {perms} permutations"))
}

fn c6_no_rp_block() -> Outcome {
    let block = no_rp_block(1).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<f64>> = block.iter().map(|y| y.to_dense(6)).collect();
    let mut balanced = 0;
    let mut checked = 0;
    let mut perm: Vec<usize> = (0..4).collect();
    permute(&mut perm, 0, &mut |p| {
        checked += 1;
        let mut acc = [0.0; 6];
        let mut ok = true;
        for &i in &p[..2] {
            for (a, x) in acc.iter_mut().zip(&rows[i]) {
                *a += x;
            }
            ok &= acc.iter().all(|x| x.abs() < 1.0);
        }
        if ok {
            balanced += 1;
        }
    });
    ensure(checked == 24 && balanced == 0, format!("{balanced} of {checked} orderings balanced"))?;
    let (z, _) = gen_no_rp_series(3).map_err(|e| e.to_string())?;
    let total = z.terms.iter().fold(SparseVec::zero(), |a, t| a.add(t));
    ensure(total.is_zero(), "per-coordinate totals are not zero")?;
    Ok("0 of 24 orderings keep the 2-prefixes below 1; coordinate totals exactly 0".into())
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn c7_round_trip() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let dim = rng.gen_range(1..=3);
        let phases = rng.gen_range(1..=5);
        let schedule: Vec<Vec<Point>> = (0..phases)
            .map(|p| {
                let len = rng.gen_range(if p == 0 { 1 } else { 2 }..=8);
                let mut cur = vec![Dyadic::ZERO; dim];
                let mut chain = vec![Point::from_dyadics(cur.clone())];
                for _ in 1..len {
                    for c in cur.iter_mut() {
                        *c = *c + Dyadic::new(rng.gen_range(-8..=8), -rng.gen_range(0..6));
                    }
                    chain.push(Point::from_dyadics(cur.clone()));
                }
                chain
            })
            .collect();
        let w = build_xwalk(&schedule, NormKind::Euclidean).map_err(|e| e.to_string())?;
        let (series, sigma) = walk_to_series(&w).map_err(|e| e.to_string())?;
        let z = series.reorder(&sigma);
        ensure(z.is_alternating(), format!("case {case}: not alternating"))?;
        let back = serwalk::walk::unreorder(&z, &sigma).map_err(|e| e.to_string())?;
        ensure(back.partial_sums(w.anchor()) == w.sums, format!("case {case}: sums differ"))?;
    }
    Ok("500 schedules alternating and bit-exact".into())
}

/// Unit-circle sample at pitch 0.02, ordered so the last phases sweep the
/// upper and lower half circles alternately.
fn circle_dense() -> Vec<Point> {
    let base = PointSample::circle_with_pitch([0.0, 0.0], 1.0, 0.02).points;
    let n = base.len();
    let half = n / 2;
    let order = [0, 1, half - 3, half + 3, half - 2, half + 2];
    let mut dense: Vec<Point> = order.iter().map(|&i| base[i].clone()).collect();
    dense.extend(base.iter().enumerate().filter(|(i, _)| !order.contains(i)).map(|(_, p)| p.clone()));
    dense
}

fn c8_chainable_circle() -> Outcome {
    let dense = circle_dense();
    let w = build_chainable_walk(&dense, 5, NormKind::Euclidean).map_err(|e| e.to_string())?;
    let est = estimate_with(&w, &EstimateParams::new(1.0, 0.1)).map_err(|e| e.to_string())?;
    let d = hausdorff_distance(&est.points, &dense, NormKind::Euclidean).unwrap();
    ensure(d <= 0.15, format!("d_H = {d:.3}"))?;
    Ok(format!("{} sums, {} estimate points, d_H = {d:.3}", w.len(), est.len()))
}

fn vertical(x: f64, h: f64, pitch: f64) -> Vec<Point> {
    let n = (h / pitch).round() as usize;
    (0..=n).map(|i| Point::float(&[x, i as f64 * pitch])).collect()
}

fn c9_unbounded() -> Outcome {
    let radii = [2.0, 3.0, 4.0];
    let comps = vec![vertical(0.0, 6.0, 0.05), vertical(1.0, 6.0, 0.05)];
    let w = build_unbounded_components_walk(&comps, &radii, 3).map_err(|e| e.to_string())?;
    let est = estimate_limit_set(&w, 0.3, 0.1).map_err(|e| e.to_string())?;
    // Both of the last two phases reach the sphere of the earlier one.
    let reach = radii[1];
    let truncated: Vec<Point> = comps
        .iter()
        .flatten()
        .filter(|p| p.norm(NormKind::Euclidean) <= reach)
        .cloned()
        .collect();
    let d = hausdorff_distance(&est.points, &truncated, NormKind::Euclidean).unwrap();
    ensure(d <= 0.2, format!("d_H = {d:.3}"))?;
    let stray = est
        .points
        .iter()
        .filter(|p| {
            let c = p.to_f64s();
            let off = c[0].abs().min((c[0] - 1.0).abs()) > 0.1;
            off && radii.iter().any(|r| (p.norm(NormKind::Euclidean) - r).abs() < 0.1)
        })
        .count();
    ensure(stray == 0, format!("{stray} estimate points on sphere shells"))?;
    Ok(format!("d_H = {d:.3} to components truncated at radius {reach}, no shell points"))
}

/// Exponent of the planar family used for the circle. Every extension step
/// re-picks tail terms worth about the circle radius, so the family needs a
/// slowly decaying `j^{-1/2}` profile to stay within a few million terms.
const CIRCLE_EXPONENT: f64 = 0.5;
const CIRCLE_RADIUS: f64 = 0.5;

/// The 0.05-pitch circle, enumerated so that stage 4 runs along the upper
/// half and stage 5 along the lower half.
fn rearranger_circle() -> PointSample {
    let base = PointSample::circle_with_pitch([0.0, 0.0], CIRCLE_RADIUS, 0.05).points;
    let n = base.len();
    let order = [3, 2, 1, 0, n / 2 - 1, n - 2];
    let mut pts: Vec<Point> = order.iter().map(|&i| base[i].clone()).collect();
    pts.extend(base.iter().enumerate().filter(|(i, _)| !order.contains(i)).map(|(_, p)| p.clone()));
    PointSample::new(pts, "circle")
}

fn c10_rearranger() -> Outcome {
    let stages = 5;
    let series = full_sum_range_family(2, 4_200_000, CIRCLE_EXPONENT).map_err(|e| e.to_string())?;
    let circle = rearranger_circle();
    let params = RearrangeParams { rp_budget: 100, ..Default::default() };
    let run = rearrange_to_limit_set(&series, &circle, stages, &params).map_err(|e| e.to_string())?;
    // Estimate over the last two stages.
    let start = run.report.stages[stages - 2].first_sum_index;
    let frac = 1.0 - start as f64 / run.walk.len() as f64;
    let est = estimate_with(&run.walk, &EstimateParams::new(frac, 0.05)).map_err(|e| e.to_string())?;
    let d = hausdorff_distance(&est.points, &circle.points, NormKind::Euclidean).unwrap();
    ensure(d <= 0.15, format!("circle d_H = {d:.3}"))?;
    let terms = run.tau.len();
    drop(run);

    let singleton_series = full_sum_range_family(2, 100_000, 1.0).map_err(|e| e.to_string())?;
    let p = Point::float(&[0.4, -0.3]);
    let target = PointSample::new(vec![p.clone()], "a");
    let single = rearrange_to_limit_set(&singleton_series, &target, stages, &params).map_err(|e| e.to_string())?;
    let sums = &single.walk.sums;
    let eps_last = 0.5f64.powi(stages as i32);
    let tail = &sums[sums.len() - sums.len() / 4..];
    let worst = tail.iter().map(|x| x.distance(&p, NormKind::Euclidean)).fold(0.0, f64::max);
    ensure(worst < eps_last, format!("singleton tail deviation {worst}"))?;
    Ok(format!(
        "circle r={CIRCLE_RADIUS}: {terms} terms, invariants hold, d_H = {d:.3}; singleton tail within {worst:.2e} < {eps_last}"
    ))
}

fn c12_rp_certification() -> Outcome {
    let eps = [1.0, 0.5, 0.25];
    let harmonic = alternating_harmonic(20_000);
    let planar = full_sum_range_family(2, 40_000, 1.0).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (name, s) in [("harmonic", &harmonic), ("planar", &planar)] {
        let witnesses = eps
            .iter()
            .enumerate()
            .map(|(i, &e)| certify_rp(s, e, 500, i as u64))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(witnesses.iter().all(|w| w.evidence.instances == 500), format!("{name}: budget not met"))?;
        let fam = RpFamily { witnesses };
        ensure(fam.is_monotone(), format!("{name}: witnesses not monotone"))?;
        let ns: Vec<usize> = fam.witnesses.iter().map(|w| w.n_threshold).collect();
        lines.push(format!("{name} N = {ns:?}"));
    }
    Ok(format!("1500 instances per series balanced; {}", lines.join(", ")))
}

fn c11_dichotomy() -> Outcome {
    let mut lines = Vec::new();
    let verdict = |name: &str, v: DichotomyVerdict, lines: &mut Vec<String>| {
        lines.push(format!("{name}={}", v.as_str()));
        v
    };
    let w = gen_two_lines(6).map_err(|e| e.to_string())?;
    let est = estimate_limit_set(&w, 0.3, 0.1).unwrap();
    let v = verify_dichotomy(&est, 0.5, est.max_norm()).unwrap().verdict;
    ensure(verdict("two-lines", v, &mut lines) != DichotomyVerdict::Violation, "two-lines")?;

    // The escape surrogate compares norms against the window's radius, so the
    // half-lines are kept within [0, 1], well below the truncation height.
    let dyadic = vec![0.0, 1.0, 0.5, 0.25, 0.75, 0.125, 0.375];
    for (name, xs) in [("halflines", dyadic), ("cantor", cantor_abscissae(7))] {
        let w = gen_halflines(&xs, 6).unwrap();
        let est = estimate_limit_set(&w, 0.3, 0.1).unwrap();
        let v = verify_dichotomy(&est, 0.5, est.max_norm()).unwrap().verdict;
        ensure(verdict(name, v, &mut lines) != DichotomyVerdict::Violation, name)?;
    }

    let w = build_chainable_walk(&circle_dense(), 5, NormKind::Euclidean).unwrap();
    let est = estimate_with(&w, &EstimateParams::new(1.0, 0.1)).unwrap();
    let v = verify_dichotomy(&est, 0.3, 2.0).unwrap().verdict;
    ensure(verdict("circle", v, &mut lines) == DichotomyVerdict::CompactConnected, "circle")?;

    let comps = vec![vertical(0.0, 6.0, 0.05), vertical(1.0, 6.0, 0.05)];
    let w = build_unbounded_components_walk(&comps, &[2.0, 3.0, 4.0], 3).unwrap();
    let est = estimate_limit_set(&w, 0.3, 0.1).unwrap();
    let v = verify_dichotomy(&est, 0.5, est.max_norm()).unwrap().verdict;
    ensure(verdict("unbounded", v, &mut lines) != DichotomyVerdict::Violation, "unbounded")?;

    let w = gen_c0_two_point(5).unwrap();
    let est = estimate_limit_set(&w, 0.3, 0.2).unwrap();
    let v = verify_dichotomy(&est, 0.5, est.max_norm()).unwrap().verdict;
    ensure(verdict("c0-two-point", v, &mut lines) == DichotomyVerdict::Violation, "c0-two-point")?;
    Ok(lines.join(", "))
}

#[test]
fn acceptance() {
    let criteria: Vec<(u32, &str, fn() -> Outcome, Duration)> = vec![
        (1, "two-lines staircase", c1_staircase, Duration::from_secs(1)),
        (2, "two-lines shell claim", c2_shell_claim, Duration::from_secs(5)),
        (3, "c0 two-point limit set", c3_two_point, Duration::from_secs(5)),
        (4, "c0 singleton but divergent", c4_singleton_divergent, Duration::from_secs(5)),
        (5, "vector family properties", c5_vector_families, Duration::from_secs(10)),
        (6, "RP failure on block 1", c6_no_rp_block, Duration::from_secs(1)),
        (7, "walk/series round trip", c7_round_trip, Duration::from_secs(10)),
        (8, "chainable target (circle)", c8_chainable_circle, Duration::from_secs(30)),
        (9, "unbounded components", c9_unbounded, Duration::from_secs(30)),
        (10, "rearranger on circle and singleton", c10_rearranger, Duration::from_secs(60)),
        (11, "dichotomy suite", c11_dichotomy, Duration::from_secs(30)),
        (12, "RP certification", c12_rp_certification, Duration::from_secs(60)),
    ];
    let mut failed = Vec::new();
    for (id, name, run, limit) in criteria {
        let t0 = Instant::now();
        let outcome = run();
        let elapsed = t0.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:?}, limit {limit:?}")),
            other => other,
        };
        let line = match &outcome {
            Ok(detail) => format!("criterion {id:>2} PASS  {name}: {detail} ({elapsed:.2?})\n"),
            Err(why) => {
                failed.push(id);
                format!("criterion {id:>2} FAIL  {name}: {why} ({elapsed:.2?})\n")
            }
        };
        // Written past the harness's output capture so the lines show on passing runs too.
        let _ = std::io::stderr().write_all(line.as_bytes());
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
