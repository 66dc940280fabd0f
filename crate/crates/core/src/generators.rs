//! Counterexample walks in R^m and the chain constructions for prescribed
//! limit sets.

use crate::error::{Error, Result};
use crate::metric::gap_chain_indices;
use crate::scalar::Dyadic;
use crate::vector::{NormKind, Point, Vector};
use crate::walk::{build_xwalk, Walk};

pub(crate) fn check_phases(phases: usize) -> Result<()> {
    if phases == 0 {
        return Err(Error::invalid("phases must be ≥ 1"));
    }
    Ok(())
}

fn dy(x: Dyadic, y: Dyadic) -> Point {
    Point::from_dyadics(vec![x, y])
}

/// The staircase walk whose limit set is `{0,1} x [0, inf)`.
///
/// Phase 1 walks `(0,0) -> (1,0)` in steps of 1/2. Phase `k+1` climbs the
/// line `x = 0` to height `k`, crosses to `x = 1` and descends, all in steps
/// of `2^-(k+1)`, then retraces. Exact mode.
pub fn gen_two_lines(phases: usize) -> Result<Walk<Point>> {
    check_phases(phases)?;
    let zero = Dyadic::ZERO;
    let half = Dyadic::pow2(-1);
    let mut schedule = vec![vec![dy(zero, zero), dy(half, zero), dy(Dyadic::ONE, zero)]];
    for k in 1..phases {
        let h = Dyadic::pow2(-(k as i32 + 1));
        let unit = 1usize << (k + 1);
        let mut chain = Vec::with_capacity(1 + (2 * k + 1) * unit);
        let (mut x, mut y) = (zero, zero);
        chain.push(dy(x, y));
        for _ in 0..k * unit {
            y = y + h;
            chain.push(dy(x, y));
        }
        for _ in 0..unit {
            x = x + h;
            chain.push(dy(x, y));
        }
        for _ in 0..k * unit {
            y = y - h;
            chain.push(dy(x, y));
        }
        schedule.push(chain);
    }
    build_xwalk(&schedule, NormKind::Euclidean)
}

/// Appends points from the chain's last point to `to`, with evenly spaced
/// steps no longer than `max_step`; `to` is appended exactly.
fn push_segment(chain: &mut Vec<Point>, to: &[f64], max_step: f64) {
    let from = chain.last().expect("segment needs a start").to_f64s();
    let len = from
        .iter()
        .zip(to)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    if len == 0.0 {
        return;
    }
    let n = (len / max_step).ceil().max(1.0) as usize;
    for j in 1..n {
        let t = j as f64 / n as f64;
        chain.push(Point::from_vec(from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()));
    }
    chain.push(Point::float(to));
}

/// The walk whose limit set is `closure{a_n} x [0, inf)`.
///
/// Phase 1 goes from `(a_1,0)` to `(a_2,0)` along `y = 0` with steps ≤ 1.
/// Phase `k ≥ 2` uses steps ≤ `2^(1-k)`: up to height `k-1`, along that
/// height to each of `a_2..a_{k+1}`, dropping to the axis and climbing back
/// at each, then retracing. Float mode.
pub fn gen_halflines(abscissae: &[f64], phases: usize) -> Result<Walk<Point>> {
    check_phases(phases)?;
    if abscissae.len() < phases + 1 {
        return Err(Error::invalid(format!(
            "need at least {} abscissae for {phases} phases",
            phases + 1
        )));
    }
    if abscissae.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid("abscissae must be finite"));
    }
    for (i, a) in abscissae.iter().enumerate() {
        if abscissae[..i].iter().any(|b| (a - b).abs() <= crate::metric::MEMBERSHIP_TOL) {
            return Err(Error::invalid(format!("duplicate abscissa {a}")));
        }
    }
    let a = abscissae;
    let mut bounds = vec![1.0];
    let mut phase1 = vec![Point::float(&[a[0], 0.0])];
    push_segment(&mut phase1, &[a[1], 0.0], 1.0);
    let mut schedule = vec![phase1];
    for k in 2..=phases {
        let h = 2f64.powi(1 - k as i32);
        let height = (k - 1) as f64;
        let mut chain = vec![Point::float(&[a[0], 0.0])];
        push_segment(&mut chain, &[a[0], height], h);
        for i in 1..=k {
            push_segment(&mut chain, &[a[i], height], h);
            push_segment(&mut chain, &[a[i], 0.0], h);
            if i < k {
                push_segment(&mut chain, &[a[i], height], h);
            }
        }
        schedule.push(chain);
        bounds.push(h);
    }
    let mut w = build_xwalk(&schedule, NormKind::Euclidean)?;
    w.step_bounds = bounds;
    Ok(w)
}

/// Left endpoints of the ternary Cantor construction intervals, level by
/// level: `0, 2/3, 2/9, 8/9, 2/27, ...`; the first `n` of them.
pub fn cantor_abscissae(n: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut level = vec![0.0];
    let mut scale = 1.0;
    while out.len() < n {
        scale /= 3.0;
        let fresh: Vec<f64> = level.iter().map(|l| l + 2.0 * scale).collect();
        out.extend(&fresh);
        level.extend(fresh);
        level.sort_by(f64::total_cmp);
    }
    out.truncate(n);
    out
}

/// X-walk through a dense sample: phase `i` is a `2^(1-i)`-chain inside the
/// sample from `d_1` to `d_{i+1}`, walked out and back.
///
/// The sample order is the dense sequence, recycled when `phases` exceeds
/// its length.
pub fn build_chainable_walk<V: Vector>(dense: &[V], phases: usize, norm: NormKind) -> Result<Walk<V>> {
    check_phases(phases)?;
    if dense.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut schedule = Vec::with_capacity(phases);
    let mut bounds = Vec::with_capacity(phases);
    for i in 1..=phases {
        let gap = 2f64.powi(1 - i as i32);
        let path = gap_chain_indices(dense, gap, 0, i % dense.len(), norm)
            .ok_or(Error::SampleTooSparse { gap, phase: i })?;
        let mut chain: Vec<V> = path.iter().map(|&j| dense[j].clone()).collect();
        if chain.len() == 1 {
            chain.push(chain[0].clone());
        }
        schedule.push(chain);
        bounds.push(gap);
    }
    let mut w = build_xwalk(&schedule, norm)?;
    w.step_bounds = bounds;
    Ok(w)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(a: &[f64]) -> Vec<f64> {
    let n = dot(a, a).sqrt();
    if n < 1e-12 {
        let mut e = vec![0.0; a.len()];
        e[0] = 1.0;
        e
    } else {
        a.iter().map(|x| x / n).collect()
    }
}

/// Appends a path from the chain's last point to `to` through the sphere
/// `S(0, r)`: radially out to the sphere, along a great-circle arc, then
/// radially in to `to`. Every step is at most `gap`.
fn push_sphere_transfer(chain: &mut Vec<Point>, to: &[f64], r: f64, gap: f64) {
    let from = chain.last().unwrap().to_f64s();
    let (u, v) = (unit(&from), unit(to));
    let start: Vec<f64> = u.iter().map(|x| r * x).collect();
    push_segment(chain, &start, gap);

    let c = dot(&u, &v).clamp(-1.0, 1.0);
    let theta = c.acos();
    if theta > 1e-12 {
        let mut w: Vec<f64> = v.iter().zip(&u).map(|(b, a)| b - c * a).collect();
        if dot(&w, &w).sqrt() < 1e-9 {
            // Antipodal endpoints: any direction orthogonal to u will do.
            let j = (0..u.len())
                .min_by(|&i, &k| u[i].abs().total_cmp(&u[k].abs()))
                .unwrap();
            w = vec![0.0; u.len()];
            w[j] = 1.0;
            let p = u[j];
            for (wi, ui) in w.iter_mut().zip(&u) {
                *wi -= p * ui;
            }
        }
        let w = unit(&w);
        let n = (r * theta / gap).ceil().max(1.0) as usize;
        for j in 1..=n {
            let t = theta * j as f64 / n as f64;
            let (ct, st) = (t.cos(), t.sin());
            chain.push(Point::from_vec(
                u.iter().zip(&w).map(|(a, b)| r * (ct * a + st * b)).collect(),
            ));
        }
    }
    push_segment(chain, to, gap);
}

/// Walk whose limit set is a union of unbounded components, joining
/// components through spheres of growing radius.
///
/// The dense sequence takes the points of norm at most `radii[0]` from each
/// component round-robin, in sample order. Phase `k` uses steps of `2^-k`
/// and concatenates chains `d_i -> d_{i+1}` for `i = 1..=k`. A chain between
/// different components runs inside the first component (truncated to the
/// ball of radius `R_k`) to its point nearest the sphere `S(0, R_k)`, across
/// the sphere, and down the second component.
pub fn build_unbounded_components_walk(
    components: &[Vec<Point>],
    radii: &[f64],
    phases: usize,
) -> Result<Walk<Point>> {
    check_phases(phases)?;
    if components.is_empty() || components.iter().any(|c| c.is_empty()) {
        return Err(Error::EmptySample);
    }
    let dim = components[0][0].dim();
    if dim < 2 {
        return Err(Error::DimensionTooSmall);
    }
    for p in components.iter().flatten() {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
    }
    if radii.len() < phases {
        return Err(Error::invalid(format!("need {phases} radii, got {}", radii.len())));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be positive and strictly increasing"));
    }

    let norms: Vec<Vec<f64>> = components
        .iter()
        .map(|c| c.iter().map(|p| p.norm(NormKind::Euclidean)).collect())
        .collect();
    let pools: Vec<Vec<usize>> = norms
        .iter()
        .map(|ns| (0..ns.len()).filter(|&j| ns[j] <= radii[0]).collect())
        .collect();
    for (c, pool) in pools.iter().enumerate() {
        if pool.is_empty() {
            return Err(Error::ComponentTooShort { component: c, radius: radii[0] });
        }
    }
    let m = components.len();
    // d_i as (component, index into that component's sample), i >= 1.
    let d = |i: usize| {
        let c = (i - 1) % m;
        (c, pools[c][((i - 1) / m) % pools[c].len()])
    };

    let mut schedule = Vec::with_capacity(phases);
    let mut bounds = Vec::with_capacity(phases);
    for k in 1..=phases {
        let gap = 2f64.powi(-(k as i32));
        let r = radii[k - 1];
        // Per component: sample indices inside the ball, and the sphere point.
        let truncated: Vec<Vec<usize>> = norms
            .iter()
            .map(|ns| (0..ns.len()).filter(|&j| ns[j] <= r).collect())
            .collect();
        let local = |c: usize| -> Vec<Point> {
            truncated[c].iter().map(|&j| components[c][j].clone()).collect()
        };
        let pos = |c: usize, j: usize| truncated[c].iter().position(|&t| t == j).unwrap();
        let sphere_point = |c: usize| -> Result<usize> {
            let best = truncated[c]
                .iter()
                .copied()
                .max_by(|&a, &b| norms[c][a].total_cmp(&norms[c][b]))
                .unwrap();
            if r - norms[c][best] > gap {
                return Err(Error::ComponentTooShort { component: c, radius: r });
            }
            Ok(best)
        };
        let inner_chain = |c: usize, from: usize, to: usize| -> Result<Vec<Point>> {
            let pts = local(c);
            let path = gap_chain_indices(&pts, gap, pos(c, from), pos(c, to), NormKind::Euclidean)
                .ok_or(Error::SampleTooSparse { gap, phase: k })?;
            Ok(path.into_iter().map(|i| pts[i].clone()).collect())
        };

        let (c0, j0) = d(1);
        let mut chain = vec![components[c0][j0].clone()];
        for i in 1..=k {
            let (cs, js) = d(i);
            let (ct, jt) = d(i + 1);
            let mut leg = if cs == ct {
                inner_chain(cs, js, jt)?
            } else {
                let (a_s, a_t) = (sphere_point(cs)?, sphere_point(ct)?);
                let mut leg = inner_chain(cs, js, a_s)?;
                let up = inner_chain(ct, jt, a_t)?;
                push_sphere_transfer(&mut leg, &components[ct][a_t].to_f64s(), r, gap);
                leg.pop();
                leg.extend(up.into_iter().rev());
                leg
            };
            leg.remove(0);
            chain.extend(leg);
        }
        if chain.len() == 1 {
            chain.push(chain[0].clone());
        }
        schedule.push(chain);
        bounds.push(gap);
    }
    let mut w = build_xwalk(&schedule, NormKind::Euclidean)?;
    w.step_bounds = bounds;
    Ok(w)
}
