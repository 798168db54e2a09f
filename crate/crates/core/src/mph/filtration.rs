//! Alpha (Delaunay–Čech) filtration of a planar point set.
//!
//! Values are radii: a vertex enters at 0, a Gabriel edge at half its length,
//! a non-Gabriel edge with its smaller adjacent triangle, a triangle at its
//! circumradius. The union of radius-`r` disks deformation-retracts onto the
//! sub-complex of simplices with value `<= r`.

use std::cmp::Ordering;
use std::collections::HashMap;

use spade::{DelaunayTriangulation, HasPosition, Triangulation};

use crate::geom::{cmp_real, Point2};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub vertices: [usize; 2],
    pub value: T,
    /// Adjacent triangles; `None` marks the outer face.
    pub triangles: [Option<usize>; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangle<T> {
    pub vertices: [usize; 3],
    pub edges: [usize; 3],
    pub value: T,
}

#[derive(Clone, Debug)]
pub struct Filtration2D<T> {
    pub points: Vec<Point2<T>>,
    pub labels: Vec<u64>,
    /// Rank of each vertex in lexicographic `(x, y)` order.
    pub rank: Vec<usize>,
    pub edges: Vec<Edge<T>>,
    pub triangles: Vec<Triangle<T>>,
    /// Edge indices in filtration order.
    pub edge_order: Vec<usize>,
    /// Triangle indices in filtration order.
    pub triangle_order: Vec<usize>,
    /// Position of each edge in `edge_order`.
    pub edge_pos: Vec<usize>,
    /// Position of each triangle in `triangle_order`.
    pub triangle_pos: Vec<usize>,
}

struct Site {
    p: spade::Point2<f64>,
    idx: usize,
}

impl HasPosition for Site {
    type Scalar = f64;

    fn position(&self) -> spade::Point2<f64> {
        self.p
    }
}

fn circumradius<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    let ab = a.dist(&b);
    let bc = b.dist(&c);
    let ca = c.dist(&a);
    let cross = ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs();
    if cross == T::zero() {
        return T::infinity();
    }
    // abc / (4K) with 2K = |cross|
    ab * bc * ca / (T::two() * cross)
}

/// Descending vertex ranks, used to break ties between equal filtration values.
fn rank_key<const N: usize>(rank: &[usize], v: [usize; N]) -> [usize; N] {
    let mut k = v.map(|i| rank[i]);
    k.sort_unstable_by(|a, b| b.cmp(a));
    k
}

/// Builds the alpha filtration of `points`.
///
/// `labels` defaults to `0..n`. Fails on an empty input, non-finite
/// coordinates or duplicate points.
pub fn build_filtration<T: Real>(points: &[Point2<T>], labels: Option<&[u64]>) -> Result<Filtration2D<T>> {
    if points.is_empty() {
        return Err(Error::domain("filtration needs at least one point"));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::domain(format!("non-finite point ({}, {})", p.x, p.y)));
    }
    let labels: Vec<u64> = match labels {
        Some(l) if l.len() != points.len() => {
            return Err(Error::domain("label count does not match point count"));
        }
        Some(l) => l.to_vec(),
        None => (0..points.len() as u64).collect(),
    };
    let n = points.len();
    let mut by_lex: Vec<usize> = (0..n).collect();
    by_lex.sort_by(|&a, &b| points[a].lex_cmp(&points[b]));
    for w in by_lex.windows(2) {
        if points[w[0]] == points[w[1]] {
            let p = points[w[0]];
            return Err(Error::domain(format!("duplicate point ({}, {})", p.x, p.y)));
        }
    }
    let mut rank = vec![0; n];
    for (r, &i) in by_lex.iter().enumerate() {
        rank[i] = r;
    }

    let mut edges: Vec<Edge<T>> = Vec::new();
    let mut triangles: Vec<Triangle<T>> = Vec::new();
    if n >= 2 {
        let sites: Vec<Site> = points
            .iter()
            .enumerate()
            .map(|(idx, p)| Site {
                p: spade::Point2::new(p.x.as_f64(), p.y.as_f64()),
                idx,
            })
            .collect();
        let dt: DelaunayTriangulation<Site> = DelaunayTriangulation::bulk_load(sites)
            .map_err(|e| Error::domain(format!("triangulation failed: {e:?}")))?;

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        for e in dt.undirected_edges() {
            let [a, b] = e.vertices().map(|v| v.data().idx);
            let key = (a.min(b), a.max(b));
            edge_index.insert(key, edges.len());
            edges.push(Edge {
                vertices: [key.0, key.1],
                value: points[a].dist(&points[b]) * T::half(),
                triangles: [None, None],
            });
        }
        for f in dt.inner_faces() {
            let v = f.vertices().map(|h| h.data().idx);
            let t = triangles.len();
            let mut tri_edges = [0; 3];
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let ei = edge_index[&(a.min(b), a.max(b))];
                tri_edges[k] = ei;
                let slot = if edges[ei].triangles[0].is_none() { 0 } else { 1 };
                edges[ei].triangles[slot] = Some(t);
            }
            triangles.push(Triangle {
                vertices: v,
                edges: tri_edges,
                value: circumradius(points[v[0]], points[v[1]], points[v[2]]),
            });
        }
        // Non-Gabriel edges enter with their cheapest adjacent triangle.
        for e in &mut edges {
            let [u, v] = e.vertices;
            let (pu, pv) = (points[u], points[v]);
            let mut attached = false;
            let mut min_tri = T::infinity();
            for t in e.triangles.iter().flatten() {
                let tri = &triangles[*t];
                min_tri = min_tri.min(tri.value);
                let w = tri.vertices.iter().copied().find(|&w| w != u && w != v).expect("triangle has a third vertex");
                let pw = points[w];
                let dot = (pu.x - pw.x) * (pv.x - pw.x) + (pu.y - pw.y) * (pv.y - pw.y);
                if dot < T::zero() {
                    attached = true;
                }
            }
            if attached {
                e.value = min_tri;
            }
        }
    }

    let mut edge_order: Vec<usize> = (0..edges.len()).collect();
    edge_order.sort_by(|&a, &b| {
        cmp_real(edges[a].value, edges[b].value)
            .then_with(|| rank_key(&rank, edges[a].vertices).cmp(&rank_key(&rank, edges[b].vertices)))
    });
    let mut triangle_order: Vec<usize> = (0..triangles.len()).collect();
    triangle_order.sort_by(|&a, &b| {
        cmp_real(triangles[a].value, triangles[b].value)
            .then_with(|| rank_key(&rank, triangles[a].vertices).cmp(&rank_key(&rank, triangles[b].vertices)))
    });
    let mut edge_pos = vec![0; edges.len()];
    for (p, &e) in edge_order.iter().enumerate() {
        edge_pos[e] = p;
    }
    let mut triangle_pos = vec![0; triangles.len()];
    for (p, &t) in triangle_order.iter().enumerate() {
        triangle_pos[t] = p;
    }

    Ok(Filtration2D {
        points: points.to_vec(),
        labels,
        rank,
        edges,
        triangles,
        edge_order,
        triangle_order,
        edge_pos,
        triangle_pos,
    })
}

impl<T: Real> Filtration2D<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Compares two vertices lexicographically by coordinates.
    pub fn lex_cmp(&self, a: usize, b: usize) -> Ordering {
        self.rank[a].cmp(&self.rank[b])
    }

    /// Label pair of an edge, smaller label first.
    pub fn edge_key(&self, e: usize) -> (u64, u64) {
        let [u, v] = self.edges[e].vertices;
        let (a, b) = (self.labels[u], self.labels[v]);
        (a.min(b), a.max(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral_values() {
        let s3 = 3f64.sqrt();
        let pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, s3 / 2.0)];
        let f = build_filtration(&pts, None).unwrap();
        assert_eq!(f.edges.len(), 3);
        assert_eq!(f.triangles.len(), 1);
        for e in &f.edges {
            assert!((e.value - 0.5).abs() < 1e-12);
        }
        assert!((f.triangles[0].value - 1.0 / s3).abs() < 1e-12);
    }

    #[test]
    fn two_points() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(3.0, 4.0)];
        let f = build_filtration(&pts, None).unwrap();
        assert_eq!(f.edges.len(), 1);
        assert_eq!(f.edges[0].value, 2.5);
        assert!(f.triangles.is_empty());
    }

    #[test]
    fn obtuse_edge_attached() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(1.0, 0.1)];
        let f = build_filtration(&pts, None).unwrap();
        let r = f.triangles[0].value;
        let long = f.edges.iter().find(|e| e.vertices == [0, 1]).unwrap();
        assert_eq!(long.value, r);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_filtration::<f64>(&[], None).is_err());
        let dup = [Point2::new(1.0, 1.0), Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)];
        assert!(matches!(build_filtration(&dup, None), Err(Error::Domain(_))));
        assert!(build_filtration(&[Point2::new(f64::NAN, 0.0)], None).is_err());
    }

    #[test]
    fn collinear_points_have_no_triangles() {
        let pts: Vec<_> = (0..5).map(|i| Point2::new(i as f64, 2.0 * i as f64)).collect();
        let f = build_filtration(&pts, None).unwrap();
        assert_eq!(f.edges.len(), 4);
        assert!(f.triangles.is_empty());
    }
}
