//! Degree-0 M-bounded persistence.
//!
//! Every point starts as its own cluster at level 0. Edges are processed in
//! filtration order with a union-find. A cluster dies
//!
//! * when it collides with another live cluster and holds the
//!   lexicographically larger of the two colliding disk centres, or
//! * at the first level where its size exceeds `M`; under
//!   [`ClusterSize::WithRadius`] the size at level `r` is
//!   `diam(points) + 2r`, so the cap level is `(M - diam) / 2`.
//!
//! A live cluster that runs into an already dead (oversized) one dies on
//! contact, since the merged cluster is oversized too. Each point is the
//! representative of exactly one cluster, so there is one record per point.

use super::{ClusterSize, FeatureKey, Filtration2D, MphOptions, PersistenceDiagram, PersistenceRecord};
use crate::{Real, Result};

struct Clusters<T> {
    parent: Vec<usize>,
    live: Vec<bool>,
    rep: Vec<usize>,
    members: Vec<Vec<usize>>,
    diam: Vec<T>,
    death: Vec<T>,
    size: Vec<T>,
}

impl<T: Real> Clusters<T> {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            live: vec![true; n],
            rep: (0..n).collect(),
            members: (0..n).map(|i| vec![i]).collect(),
            diam: vec![T::zero(); n],
            death: vec![T::nan(); n],
            size: vec![T::nan(); n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn kill(&mut self, root: usize, level: T, mode: ClusterSize) {
        let rep = self.rep[root];
        self.death[rep] = level;
        self.size[rep] = match mode {
            ClusterSize::WithRadius => self.diam[root] + T::two() * level,
            ClusterSize::PointsOnly => self.diam[root],
        };
        self.live[root] = false;
        self.members[root] = Vec::new();
    }
}

/// Level at which a live cluster of the given point-set diameter outgrows `M`.
fn cap_level<T: Real>(diam: T, opts: &MphOptions<T>) -> T {
    match opts.cluster_size {
        ClusterSize::WithRadius => (opts.m - diam) * T::half(),
        ClusterSize::PointsOnly => {
            if diam > opts.m {
                T::zero()
            } else {
                T::infinity()
            }
        }
    }
}

/// Degree-0 M-bounded diagram. Deaths are truncated at `τ`.
pub fn pd0_mbounded<T: Real>(f: &Filtration2D<T>, opts: &MphOptions<T>) -> Result<PersistenceDiagram<T>> {
    opts.validate()?;
    let n = f.len();
    let mode = opts.cluster_size;
    let mut c = Clusters::<T>::new(n);

    for &e in &f.edge_order {
        let edge = &f.edges[e];
        let r = edge.value;
        let [u, v] = edge.vertices;
        let (ru, rv) = (c.find(u), c.find(v));
        if ru == rv {
            continue;
        }
        for x in [ru, rv] {
            if c.live[x] {
                let cap = cap_level(c.diam[x], opts);
                if cap < r {
                    c.kill(x, cap, mode);
                }
            }
        }
        match (c.live[ru], c.live[rv]) {
            (true, true) => {
                // The cluster holding the lexicographically larger colliding centre dies.
                let (loser, winner) = if f.lex_cmp(u, v).is_gt() { (ru, rv) } else { (rv, ru) };
                let mut members = std::mem::take(&mut c.members[ru]);
                let other = std::mem::take(&mut c.members[rv]);
                let mut d = c.diam[ru].max(c.diam[rv]);
                for &a in &members {
                    for &b in &other {
                        d = d.max(f.points[a].dist(&f.points[b]));
                    }
                }
                members.extend(other);
                c.kill(loser, r, mode);
                let winner_rep = c.rep[winner];
                c.parent[rv] = ru;
                c.live[ru] = true;
                c.rep[ru] = winner_rep;
                c.members[ru] = members;
                c.diam[ru] = d;
                if cap_level(d, opts) <= r {
                    c.kill(ru, r, mode);
                }
            }
            (lu, lv) => {
                if lu {
                    c.kill(ru, r, mode);
                }
                if lv {
                    c.kill(rv, r, mode);
                }
                c.parent[rv] = ru;
                c.live[ru] = false;
            }
        }
    }

    for x in 0..n {
        if c.parent[x] == x && c.live[x] {
            let cap = cap_level(c.diam[x], opts);
            let level = if cap.is_finite() { cap } else { opts.tau };
            c.kill(x, level, mode);
        }
    }

    let records = (0..n)
        .map(|i| PersistenceRecord {
            dim: 0,
            birth: T::zero(),
            death: c.death[i].min(opts.tau),
            key: FeatureKey::Point(f.labels[i]),
            size: c.size[i],
        })
        .collect();
    Ok(PersistenceDiagram { records })
}
