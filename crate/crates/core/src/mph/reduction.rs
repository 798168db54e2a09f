//! Z/2 boundary matrix reduction with clearing.
//!
//! Dimensions are reduced from the top down. A column whose simplex already
//! appeared as the pivot of a higher-dimensional column is positive and is
//! skipped ("cleared") without being reduced.

use super::filtration::Filtration2D;
use crate::Real;

/// Persistence pairs of a 2D filtration, expressed as simplex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pairs {
    /// `(vertex, edge)`: the edge kills the component born with the vertex.
    pub vertex_edge: Vec<(usize, usize)>,
    /// `(edge, triangle)`: the edge creates the cycle the triangle fills.
    pub edge_triangle: Vec<(usize, usize)>,
    /// Vertices never killed (one per connected component of the full complex).
    pub essential_vertices: Vec<usize>,
}

/// Symmetric difference of two sorted index lists.
fn xor_into(acc: &mut Vec<usize>, other: &[usize], scratch: &mut Vec<usize>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < acc.len() && j < other.len() {
        match acc[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(acc[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&acc[i..]);
    scratch.extend_from_slice(&other[j..]);
    std::mem::swap(acc, scratch);
}

/// Reduces `columns` (sorted row indices, in column order). Columns flagged
/// in `cleared` are skipped. Returns `pivot_col[row]` for every pivot row.
fn reduce(columns: &mut [Vec<usize>], n_rows: usize, cleared: &[bool]) -> Vec<Option<usize>> {
    let mut pivot_col: Vec<Option<usize>> = vec![None; n_rows];
    let mut scratch = Vec::new();
    for j in 0..columns.len() {
        if cleared[j] {
            columns[j].clear();
            continue;
        }
        while let Some(&low) = columns[j].last() {
            match pivot_col[low] {
                Some(k) => {
                    let (head, tail) = columns.split_at_mut(j);
                    xor_into(&mut tail[0], &head[k], &mut scratch);
                }
                None => {
                    pivot_col[low] = Some(j);
                    break;
                }
            }
        }
    }
    pivot_col
}

/// Computes all persistence pairs of the filtration.
pub fn persistence_pairs<T: Real>(f: &Filtration2D<T>) -> Pairs {
    let n_edges = f.edges.len();
    // Vertex rows are ordered by lexicographic rank (all vertices enter at 0).
    let mut vertex_of_rank = vec![0; f.len()];
    for (v, &r) in f.rank.iter().enumerate() {
        vertex_of_rank[r] = v;
    }

    let mut tri_cols: Vec<Vec<usize>> = f
        .triangle_order
        .iter()
        .map(|&t| {
            let mut c: Vec<usize> = f.triangles[t].edges.iter().map(|&e| f.edge_pos[e]).collect();
            c.sort_unstable();
            c
        })
        .collect();
    let no_clearing = vec![false; tri_cols.len()];
    let tri_pivots = reduce(&mut tri_cols, n_edges, &no_clearing);

    let mut edge_cols: Vec<Vec<usize>> = f
        .edge_order
        .iter()
        .map(|&e| {
            let mut c: Vec<usize> = f.edges[e].vertices.iter().map(|&v| f.rank[v]).collect();
            c.sort_unstable();
            c
        })
        .collect();
    let cleared: Vec<bool> = tri_pivots.iter().map(Option::is_some).collect();
    let edge_pivots = reduce(&mut edge_cols, f.len(), &cleared);

    let mut pairs = Pairs::default();
    for (epos, col) in tri_pivots.iter().enumerate() {
        if let Some(tpos) = col {
            pairs.edge_triangle.push((f.edge_order[epos], f.triangle_order[*tpos]));
        }
    }
    for (vrank, col) in edge_pivots.iter().enumerate() {
        match col {
            Some(epos) => pairs.vertex_edge.push((vertex_of_rank[vrank], f.edge_order[*epos])),
            None => pairs.essential_vertices.push(vertex_of_rank[vrank]),
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;
    use crate::mph::filtration::build_filtration;

    #[test]
    fn square_pairs() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let f = build_filtration(&pts, None).unwrap();
        let p = persistence_pairs(&f);
        assert_eq!(p.vertex_edge.len(), 3);
        assert_eq!(p.essential_vertices.len(), 1);
        assert_eq!(p.edge_triangle.len(), 2);
        let nonzero: Vec<_> = p
            .edge_triangle
            .iter()
            .filter(|(e, t)| f.edges[*e].value < f.triangles[*t].value)
            .collect();
        assert_eq!(nonzero.len(), 1);
        let (e, t) = nonzero[0];
        assert_eq!(f.edges[*e].value, 0.5);
        assert!((f.triangles[*t].value - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn xor_merges_sorted_lists() {
        let mut a = vec![1, 3, 5];
        let mut s = Vec::new();
        xor_into(&mut a, &[3, 4, 5, 9], &mut s);
        assert_eq!(a, vec![1, 4, 9]);
    }
}
