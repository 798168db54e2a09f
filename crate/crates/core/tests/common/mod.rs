//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type P = (f64, f64);

pub fn dist(a: P, b: P) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn diameter(pts: &[P], idx: impl IntoIterator<Item = usize> + Clone) -> f64 {
    let mut d: f64 = 0.0;
    for i in idx.clone() {
        for j in idx.clone() {
            d = d.max(dist(pts[i], pts[j]));
        }
    }
    d
}

pub fn random_cloud(seed: u64, max_n: usize, side: f64) -> Vec<P> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=max_n);
    (0..n)
        .map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect()
}

/// Degree-0 deaths by sweeping the disk radius in steps of `step` and
/// tracking the connected components of the union of disks directly.
/// Returns one death per point, sorted.
pub fn pd0_sweep(pts: &[P], m: f64, tau: f64, step: f64) -> Vec<f64> {
    let n = pts.len();
    let mut comp: Vec<usize> = (0..n).collect();
    let mut live = vec![true; n];
    let mut rep: Vec<usize> = (0..n).collect();
    let mut death = vec![f64::NAN; n];
    let lex_gt = |a: usize, b: usize| pts[a].partial_cmp(&pts[b]).unwrap().is_gt();
    let members = |comp: &[usize], c: usize| (0..n).filter(move |&i| comp[i] == c).collect::<Vec<_>>();

    let steps = (tau / step).ceil() as usize;
    for k in 0..=steps {
        let r = (k as f64 * step).min(tau);
        for c in 0..n {
            if live[c] && comp.contains(&c) && diameter(pts, members(&comp, c)) + 2.0 * r > m {
                death[rep[c]] = r;
                live[c] = false;
            }
        }
        loop {
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..n {
                for j in 0..n {
                    let d = dist(pts[i], pts[j]);
                    if comp[i] != comp[j] && d <= 2.0 * r && best.is_none_or(|b| d < b.0) {
                        best = Some((d, i, j));
                    }
                }
            }
            let Some((_, u, v)) = best else { break };
            let (cu, cv) = (comp[u], comp[v]);
            let merged_live = match (live[cu], live[cv]) {
                (true, true) => {
                    let (loser, winner) = if lex_gt(u, v) { (cu, cv) } else { (cv, cu) };
                    death[rep[loser]] = r;
                    rep[cu] = rep[winner];
                    true
                }
                (a, b) => {
                    if a {
                        death[rep[cu]] = r;
                    }
                    if b {
                        death[rep[cv]] = r;
                    }
                    false
                }
            };
            for c in comp.iter_mut() {
                if *c == cv {
                    *c = cu;
                }
            }
            live[cu] = merged_live;
            live[cv] = false;
            if live[cu] && diameter(pts, members(&comp, cu)) + 2.0 * r > m {
                death[rep[cu]] = r;
                live[cu] = false;
            }
        }
    }
    for c in 0..n {
        if live[c] && comp.contains(&c) {
            death[rep[c]] = tau;
        }
    }
    let mut out: Vec<f64> = death.into_iter().map(|d| d.min(tau)).collect();
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Clone, Copy, Debug)]
pub struct Hole {
    pub birth: f64,
    pub death: f64,
    pub size: f64,
}

/// Degree-1 features from a pixel grid of spacing `h` over `[lo, hi]²`.
///
/// A pixel is uncovered at radius `r` when its distance to the nearest point
/// exceeds `r`, so the complement components are superlevel components of
/// that distance. They are tracked with a union-find over pixels added in
/// decreasing order; the grid border is glued to an outside node. When two
/// components meet, the one with the lower peak is a hole born at the
/// current level and filled at its peak. Its size is the diameter of the
/// points whose nearest-point regions it covered.
pub fn pd1_pixels(pts: &[P], h: f64, lo: f64, hi: f64) -> Vec<Hole> {
    let k = ((hi - lo) / h).round() as usize + 1;
    let np = k * k;
    let mut d = vec![0.0; np];
    let mut near = vec![0u32; np];
    for iy in 0..k {
        for ix in 0..k {
            let p = (lo + ix as f64 * h, lo + iy as f64 * h);
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for (s, &q) in pts.iter().enumerate() {
                let dd = dist(p, q);
                if dd < best {
                    best = dd;
                    arg = s;
                }
            }
            d[iy * k + ix] = best;
            near[iy * k + ix] = 1 << arg;
        }
    }
    let mut order: Vec<usize> = (0..np).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));

    let outside = np;
    let mut parent: Vec<usize> = (0..=np).collect();
    let mut peak = d.clone();
    peak.push(f64::INFINITY);
    let mut mask = near.clone();
    mask.push(0);
    let mut active = vec![false; np];
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut holes = Vec::new();
    for &px in &order {
        active[px] = true;
        let level = d[px];
        let (ix, iy) = (px % k, px / k);
        let mut nbrs = Vec::with_capacity(5);
        if ix == 0 || iy == 0 || ix == k - 1 || iy == k - 1 {
            nbrs.push(outside);
        }
        if ix > 0 {
            nbrs.push(px - 1);
        }
        if ix + 1 < k {
            nbrs.push(px + 1);
        }
        if iy > 0 {
            nbrs.push(px - k);
        }
        if iy + 1 < k {
            nbrs.push(px + k);
        }
        for q in nbrs {
            if q != outside && !active[q] {
                continue;
            }
            let (a, b) = (find(&mut parent, px), find(&mut parent, q));
            if a == b {
                continue;
            }
            let (young, old) = if peak[a] < peak[b] { (a, b) } else { (b, a) };
            if peak[young] > level {
                let sites: Vec<usize> = (0..pts.len()).filter(|s| mask[young] >> s & 1 == 1).collect();
                holes.push(Hole {
                    birth: level,
                    death: peak[young],
                    size: diameter(pts, sites),
                });
            }
            parent[young] = old;
            mask[old] |= mask[young];
        }
    }
    holes
}

/// Outcome of comparing two diagrams feature by feature.
#[derive(Debug, Default)]
pub struct Comparison {
    pub unmatched: Vec<String>,
}

/// Every required feature on either side must have a partner on the other
/// side within `tol` in both birth and death.
pub fn match_features(
    a: &[(f64, f64)],
    a_required: &[bool],
    b: &[(f64, f64)],
    b_required: &[bool],
    tol: f64,
) -> Comparison {
    let mut out = Comparison::default();
    let mut one_way = |xs: &[(f64, f64)], req: &[bool], ys: &[(f64, f64)], tag: &str| {
        let mut used = vec![false; ys.len()];
        for (i, x) in xs.iter().enumerate() {
            if !req[i] {
                continue;
            }
            let best = ys
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x.0 - y.0).abs().max((x.1 - y.1).abs())))
                .filter(|&(_, e)| e <= tol)
                .min_by(|p, q| p.1.total_cmp(&q.1));
            match best {
                Some((j, _)) => used[j] = true,
                None => out.unmatched.push(format!("{tag} ({:.4}, {:.4})", x.0, x.1)),
            }
        }
    };
    one_way(a, a_required, b, "left");
    one_way(b, b_required, a, "right");
    out
}

/// Grid of `k × k` pixel centres over a rectangle.
pub fn grid_points(min: P, max: P, k: usize) -> impl Iterator<Item = P> {
    let (dx, dy) = ((max.0 - min.0) / k as f64, (max.1 - min.1) / k as f64);
    (0..k * k).map(move |i| {
        let (ix, iy) = (i % k, i / k);
        (min.0 + (ix as f64 + 0.5) * dx, min.1 + (iy as f64 + 0.5) * dy)
    })
}

/// Strict point-in-convex-polygon test for counter-clockwise polygons.
pub fn inside_convex(poly: &[P], p: P) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) > 0.0
    })
}
