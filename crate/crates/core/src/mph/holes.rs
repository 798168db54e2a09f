//! Degree-1 M-bounded persistence.
//!
//! Hole pairs `(edge, triangle)` come from the boundary matrix reduction. The
//! complement component created by the edge is recovered as the set of
//! triangles reachable from the death triangle through edges that enter
//! after the birth edge; its boundary disks are the vertices of those
//! triangles. A hole is kept when the diameter of that vertex set is at most
//! `M` and its death is at most `τ`.
//!
//! [`dual_pairs`] computes the same pairs independently through a union-find
//! over triangles in reverse filtration order (planar duality).

use std::collections::VecDeque;

use super::filtration::Filtration2D;
use super::reduction::persistence_pairs;
use super::{FeatureKey, HoleSizeAt, MphOptions, PersistenceDiagram, PersistenceRecord};
use crate::{Real, Result};

/// Vertices of the complement component that is born with edge `e` and
/// filled last by triangle `t`. Stops early and returns `None` once the
/// vertex set's diameter exceeds `limit`.
fn birth_region_vertices<T: Real>(f: &Filtration2D<T>, e: usize, t: usize, limit: T) -> Option<(Vec<usize>, T)> {
    let birth_pos = f.edge_pos[e];
    let limit2 = limit * limit;
    let mut seen_tri = vec![false; f.triangles.len()];
    let mut in_set = vec![false; f.len()];
    let mut verts: Vec<usize> = Vec::new();
    let mut d2 = T::zero();
    let mut queue = VecDeque::from([t]);
    seen_tri[t] = true;
    while let Some(cur) = queue.pop_front() {
        let tri = &f.triangles[cur];
        for &v in &tri.vertices {
            if in_set[v] {
                continue;
            }
            for &w in &verts {
                d2 = d2.max(f.points[v].dist2(&f.points[w]));
            }
            if d2 > limit2 {
                return None;
            }
            in_set[v] = true;
            verts.push(v);
        }
        for &edge in &tri.edges {
            if f.edge_pos[edge] <= birth_pos {
                continue;
            }
            for nb in f.edges[edge].triangles {
                match nb {
                    Some(nb) if !seen_tri[nb] => {
                        seen_tri[nb] = true;
                        queue.push_back(nb);
                    }
                    Some(_) => {}
                    // Reaching the outer face means the region is unbounded.
                    None => return None,
                }
            }
        }
    }
    Some((verts, d2.sqrt()))
}

/// Degree-1 M-bounded diagram.
pub fn pd1_mbounded<T: Real>(f: &Filtration2D<T>, opts: &MphOptions<T>) -> Result<PersistenceDiagram<T>> {
    opts.validate()?;
    let pairs = persistence_pairs(f);
    let mut records = Vec::new();
    for &(e, t) in &pairs.edge_triangle {
        let birth = f.edges[e].value;
        let death = f.triangles[t].value;
        if !(birth < death) || death > opts.tau {
            continue;
        }
        let size = match opts.hole_size_at {
            HoleSizeAt::Birth => match birth_region_vertices(f, e, t, opts.m) {
                Some((_, d)) => d,
                None => continue,
            },
            HoleSizeAt::Death => {
                let v = f.triangles[t].vertices;
                let p = |i: usize| f.points[v[i]];
                p(0).dist(&p(1)).max(p(1).dist(&p(2))).max(p(2).dist(&p(0)))
            }
        };
        if size > opts.m {
            continue;
        }
        let (a, b) = f.edge_key(e);
        records.push(PersistenceRecord {
            dim: 1,
            birth,
            death,
            key: FeatureKey::Edge(a, b),
            size,
        });
    }
    records.sort_by(|x, y| x.key.cmp(&y.key));
    Ok(PersistenceDiagram { records })
}

/// Unfiltered hole pairs `(edge, triangle)` from a union-find over the dual
/// graph: triangles (and the outer face) are merged across edges in reverse
/// filtration order; at each merge the component whose latest triangle is
/// earlier dies and is paired with the edge.
pub fn dual_pairs<T: Real>(f: &Filtration2D<T>) -> Vec<(usize, usize)> {
    let nt = f.triangles.len();
    let outer = nt;
    let mut parent: Vec<usize> = (0..=nt).collect();
    // Latest triangle (by filtration position) in each component; outer = ∞.
    let mut top: Vec<usize> = (0..nt).map(|t| f.triangle_pos[t]).chain([usize::MAX]).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut out = Vec::new();
    for &e in f.edge_order.iter().rev() {
        let [a, b] = f.edges[e].triangles.map(|t| t.unwrap_or(outer));
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            continue;
        }
        let (young, old) = if top[ra] < top[rb] { (ra, rb) } else { (rb, ra) };
        out.push((e, f.triangle_order[top[young]]));
        parent[young] = old;
        top[old] = top[old].max(top[young]);
    }
    out.sort_unstable();
    out
}
