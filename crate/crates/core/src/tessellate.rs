//! Planar sections of a 3D Voronoi tessellation.
//!
//! The section of the Voronoi cell of generator `g = (x, y, z)` with the plane
//! at height `h` is the cell of `(x, y)` in the planar power diagram with
//! weights `-(h - z)²`: a point `p` of the plane belongs to it iff
//! `|p - (x, y)|² + (h - z)²` is minimal. Each cell is built by clipping the
//! slice window with the bisector half-planes of neighbouring generators,
//! visited in rings of a uniform grid until the cell is empty or no remaining
//! generator can reach it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{clip_halfplane, polygon_area_centroid, Point2, Point3, Rect};
use crate::pointproc::{PointSet3D, Window3D};
use crate::rng::rng_from_seed;
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "heights")]
pub enum SliceAnchor {
    /// Slices symmetric about half the window height.
    CenteredInHeight,
    ExplicitHeights(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceLayout {
    pub count: usize,
    pub spacing: f64,
    pub anchor: SliceAnchor,
}

impl Default for SliceLayout {
    fn default() -> Self {
        Self {
            count: 9,
            spacing: 4.0,
            anchor: SliceAnchor::CenteredInHeight,
        }
    }
}

impl SliceLayout {
    pub fn centered(count: usize, spacing: f64) -> Self {
        Self {
            count,
            spacing,
            anchor: SliceAnchor::CenteredInHeight,
        }
    }

    /// Slice heights for a window of the given height (measured from its base).
    pub fn heights(&self, window_height: f64) -> Result<Vec<f64>> {
        let hs = match &self.anchor {
            SliceAnchor::CenteredInHeight => {
                if self.count == 0 {
                    return Err(Error::config("slice count must be >= 1"));
                }
                if self.count > 1 && !(self.spacing > 0.0 && self.spacing.is_finite()) {
                    return Err(Error::config("slice spacing must be > 0"));
                }
                let mid = 0.5 * window_height;
                let off = 0.5 * (self.count as f64 - 1.0);
                (0..self.count)
                    .map(|k| mid + (k as f64 - off) * self.spacing)
                    .collect::<Vec<_>>()
            }
            SliceAnchor::ExplicitHeights(hs) => {
                if hs.is_empty() {
                    return Err(Error::config("explicit slice height list is empty"));
                }
                hs.clone()
            }
        };
        if hs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("slice heights must be strictly increasing"));
        }
        if hs.iter().any(|&h| !(h > 0.0 && h < window_height)) {
            return Err(Error::config(format!(
                "slice heights must lie strictly inside (0, {window_height})"
            )));
        }
        Ok(hs)
    }
}

/// The labelled point cloud observed in one slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCloud<T> {
    pub height: T,
    pub points: Vec<Point2<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub areas: Option<Vec<T>>,
}

impl<T: Real> SliceCloud<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceStack<T> {
    pub window: Rect<T>,
    pub slices: Vec<SliceCloud<T>>,
}

impl<T: Real> SliceStack<T> {
    pub fn is_labeled(&self) -> bool {
        !self.slices.is_empty() && self.slices.iter().all(|s| s.labels.is_some())
    }

    pub fn total_points(&self) -> usize {
        self.slices.iter().map(|s| s.len()).sum()
    }

    pub fn heights(&self) -> Vec<T> {
        self.slices.iter().map(|s| s.height).collect()
    }

    /// Copy with labels removed.
    pub fn without_labels(&self) -> Self {
        let mut out = self.clone();
        for s in &mut out.slices {
            s.labels = None;
        }
        out
    }

    /// Sub-stack made of the given slice indices.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            window: self.window,
            slices: idx.iter().map(|&i| self.slices[i].clone()).collect(),
        }
    }

    /// Checks heights, label distinctness and point containment.
    pub fn validate(&self) -> Result<()> {
        if !self.window.is_valid() {
            return Err(Error::domain("slice window is degenerate"));
        }
        for (k, w) in self.slices.windows(2).enumerate() {
            if !(w[0].height < w[1].height) {
                return Err(Error::domain(format!("slice heights not increasing at slice {}", k + 1)));
            }
        }
        for (k, s) in self.slices.iter().enumerate() {
            if let Some(p) = s.points.iter().find(|p| !self.window.contains(p)) {
                return Err(Error::domain(format!("slice {k}: point ({}, {}) outside window", p.x, p.y)));
            }
            if let Some(l) = &s.labels {
                if l.len() != s.len() {
                    return Err(Error::domain(format!("slice {k}: label count != point count")));
                }
                let mut sorted = l.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::domain(format!("slice {k}: duplicate labels")));
                }
            }
            if let Some(a) = &s.areas {
                if a.len() != s.len() {
                    return Err(Error::domain(format!("slice {k}: area count != point count")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceOptions {
    /// Drop cells whose section touches the window boundary.
    pub minus_sampling: bool,
}

/// Uniform grid over the generators used to enumerate neighbours in rings of
/// increasing Chebyshev distance.
struct NeighborGrid<T> {
    origin: Point3<T>,
    cell: T,
    dims: [i64; 3],
    buckets: Vec<Vec<usize>>,
}

impl<T: Real> NeighborGrid<T> {
    fn new(points: &[Point3<T>]) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        let ext = [hi.x - lo.x, hi.y - lo.y, hi.z - lo.z];
        let maxext = ext[0].max(ext[1]).max(ext[2]);
        let mut vol = T::one();
        let mut used = 0;
        for e in ext {
            if e > maxext * T::of(1e-9) {
                vol = vol * e;
                used += 1;
            }
        }
        // About one generator per cell.
        let mut cell = if used == 0 {
            T::one()
        } else {
            (vol / T::of(points.len() as f64)).powf(T::one() / T::of(used as f64))
        };
        if !(cell > T::zero()) || !cell.is_finite() {
            cell = T::one();
        }
        let max_cells = 64.0;
        for e in ext {
            if (e / cell).as_f64() > max_cells {
                cell = e / T::of(max_cells);
            }
        }
        let dims = ext.map(|e| ((e / cell).floor().to_i64().unwrap_or(0) + 1).max(1));
        let mut buckets = vec![Vec::new(); (dims[0] * dims[1] * dims[2]) as usize];
        let mut grid = Self {
            origin: lo,
            cell,
            dims,
            buckets: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let c = grid.cell_of(p);
            buckets[grid.index(c)].push(i);
        }
        grid.buckets = buckets;
        grid
    }

    fn cell_of(&self, p: &Point3<T>) -> [i64; 3] {
        let f = |v: T, o: T, d: i64| ((v - o) / self.cell).floor().to_i64().unwrap_or(0).clamp(0, d - 1);
        [
            f(p.x, self.origin.x, self.dims[0]),
            f(p.y, self.origin.y, self.dims[1]),
            f(p.z, self.origin.z, self.dims[2]),
        ]
    }

    fn index(&self, c: [i64; 3]) -> usize {
        ((c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]) as usize
    }

    fn max_ring(&self) -> i64 {
        self.dims.iter().copied().max().unwrap_or(1)
    }

    /// Calls `f` for every generator in cells at Chebyshev distance exactly `k`.
    fn for_ring(&self, c: [i64; 3], k: i64, mut f: impl FnMut(usize)) {
        let lo = |a: usize| (c[a] - k).max(0);
        let hi = |a: usize| (c[a] + k).min(self.dims[a] - 1);
        for z in lo(2)..=hi(2) {
            for y in lo(1)..=hi(1) {
                for x in lo(0)..=hi(0) {
                    let cheb = (x - c[0]).abs().max((y - c[1]).abs()).max((z - c[2]).abs());
                    if cheb != k {
                        continue;
                    }
                    for &i in &self.buckets[self.index([x, y, z])] {
                        f(i);
                    }
                }
            }
        }
    }
}

/// Computes the section polygon of generator `i`'s cell at height `h`, in
/// coordinates relative to the generator's projection.
fn section_polygon<T: Real>(
    i: usize,
    h: T,
    gens: &PointSet3D<T>,
    grid: &NeighborGrid<T>,
    rect: &Rect<T>,
    poly: &mut Vec<Point2<T>>,
    scratch: &mut Vec<Point2<T>>,
) {
    let gi = gens.points[i];
    let dzi2 = (h - gi.z) * (h - gi.z);
    poly.clear();
    poly.extend(rect.polygon().into_iter().map(|p| Point2::new(p.x - gi.x, p.y - gi.y)));
    let rho2 = |poly: &[Point2<T>]| {
        poly.iter()
            .map(|q| q.x * q.x + q.y * q.y + dzi2)
            .fold(T::zero(), |a, b| a.max(b))
    };
    let c = grid.cell_of(&gi);
    let max_ring = grid.max_ring();
    let mut k = 0;
    loop {
        let mut emptied = false;
        grid.for_ring(c, k, |j| {
            if emptied || j == i {
                return;
            }
            let gj = gens.points[j];
            let d = Point2::new(gj.x - gi.x, gj.y - gi.y);
            let dzj2 = (h - gj.z) * (h - gj.z);
            let rhs = d.x * d.x + d.y * d.y + dzj2 - dzi2;
            if d.x == T::zero() && d.y == T::zero() {
                // Same vertical line: one of the two dominates the whole plane.
                if rhs < T::zero() || (rhs == T::zero() && gens.labels[j] < gens.labels[i]) {
                    poly.clear();
                    emptied = true;
                }
                return;
            }
            clip_halfplane(poly, Point2::new(d.x * T::two(), d.y * T::two()), rhs, scratch);
            std::mem::swap(poly, scratch);
            if poly.len() < 3 {
                poly.clear();
                emptied = true;
            }
        });
        if emptied || poly.is_empty() {
            poly.clear();
            return;
        }
        // Generators beyond ring k are at 3D distance >= k·cell; they cannot
        // cut the cell once that exceeds twice its farthest vertex distance.
        let reach = T::of(k as f64) * grid.cell;
        if reach * reach >= T::of(4.0) * rho2(poly) || k > max_ring {
            return;
        }
        k += 1;
    }
}

/// Slices the Voronoi tessellation of `generators` at the layout heights.
pub fn slice_voronoi<T: Real>(
    generators: &PointSet3D<T>,
    layout: &SliceLayout,
    window: &Window3D<T>,
    opts: SliceOptions,
) -> Result<SliceStack<T>> {
    window.validate()?;
    let hs: Vec<T> = layout
        .heights(window.height.as_f64())?
        .into_iter()
        .map(|h| window.origin.z + T::of(h))
        .collect();
    slice_voronoi_at(generators, &hs, window.rect2d(), opts)
}

/// Slices the Voronoi tessellation of `generators` at explicit absolute
/// heights, clipping every section to `rect`.
pub fn slice_voronoi_at<T: Real>(
    generators: &PointSet3D<T>,
    heights: &[T],
    rect: Rect<T>,
    opts: SliceOptions,
) -> Result<SliceStack<T>> {
    if generators.is_empty() {
        return Err(Error::domain("cannot tessellate an empty generator set"));
    }
    if !rect.is_valid() {
        return Err(Error::domain("slice window is degenerate"));
    }
    if heights.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("slice heights must be strictly increasing"));
    }
    let grid = NeighborGrid::new(&generators.points);
    let eps = T::of(1e-9) * rect.width().max(rect.height());
    let mut poly = Vec::with_capacity(16);
    let mut scratch = Vec::with_capacity(16);
    let slices = heights
        .iter()
        .map(|&h| {
            let mut points = Vec::new();
            let mut labels = Vec::new();
            let mut areas = Vec::new();
            for i in 0..generators.len() {
                section_polygon(i, h, generators, &grid, &rect, &mut poly, &mut scratch);
                if poly.is_empty() {
                    continue;
                }
                let g = generators.points[i];
                if opts.minus_sampling {
                    let touches = poly.iter().any(|q| {
                        let p = Point2::new(q.x + g.x, q.y + g.y);
                        rect.side_distances(&p).iter().any(|&d| d <= eps)
                    });
                    if touches {
                        continue;
                    }
                }
                if let Some((area, c)) = polygon_area_centroid(&poly) {
                    let c = Point2::new(
                        (c.x + g.x).max(rect.min.x).min(rect.max.x),
                        (c.y + g.y).max(rect.min.y).min(rect.max.y),
                    );
                    points.push(c);
                    labels.push(generators.labels[i]);
                    areas.push(area);
                }
            }
            SliceCloud {
                height: h,
                points,
                labels: Some(labels),
                areas: Some(areas),
            }
        })
        .collect();
    Ok(SliceStack { window: rect, slices })
}

/// The non-empty cells of the section at height `h`, as `(label, polygon)`
/// with polygons counter-clockwise in absolute coordinates.
pub fn section_cells<T: Real>(generators: &PointSet3D<T>, h: T, rect: Rect<T>) -> Result<Vec<(u64, Vec<Point2<T>>)>> {
    if generators.is_empty() {
        return Err(Error::domain("cannot tessellate an empty generator set"));
    }
    if !rect.is_valid() {
        return Err(Error::domain("slice window is degenerate"));
    }
    let grid = NeighborGrid::new(&generators.points);
    let mut poly = Vec::with_capacity(16);
    let mut scratch = Vec::with_capacity(16);
    let mut out = Vec::new();
    for i in 0..generators.len() {
        section_polygon(i, h, generators, &grid, &rect, &mut poly, &mut scratch);
        if poly.is_empty() {
            continue;
        }
        let g = generators.points[i];
        let cell = poly.iter().map(|q| Point2::new(q.x + g.x, q.y + g.y)).collect();
        out.push((generators.labels[i], cell));
    }
    Ok(out)
}

/// Adds independent noise, uniform in the disk of radius `eta0`, to every
/// centroid. Perturbed points are clamped to the window.
pub fn perturb_centroids<T: Real>(stack: &SliceStack<T>, eta0: T, seed: u64) -> Result<SliceStack<T>> {
    if !(eta0 >= T::zero()) || !eta0.is_finite() {
        return Err(Error::config(format!("noise radius must be >= 0, got {eta0}")));
    }
    let mut out = stack.clone();
    if eta0 == T::zero() {
        return Ok(out);
    }
    let mut rng = rng_from_seed(seed);
    let w = stack.window;
    for s in &mut out.slices {
        for p in &mut s.points {
            let u: T = rng.random_range(T::zero()..T::one());
            let theta: T = rng.random_range(T::zero()..T::one()) * T::TAU();
            let r = eta0 * u.sqrt();
            p.x = (p.x + r * theta.cos()).max(w.min.x).min(w.max.x);
            p.y = (p.y + r * theta.sin()).max(w.min.y).min(w.max.y);
        }
    }
    Ok(out)
}

/// The heights and positions at which `label` is observed, in slice order.
pub fn trajectory_of<T: Real>(stack: &SliceStack<T>, label: u64) -> Result<Vec<(T, Point2<T>)>> {
    let mut out = Vec::new();
    for s in &stack.slices {
        let labels = s
            .labels
            .as_ref()
            .ok_or_else(|| Error::domain("trajectory lookup needs a labelled stack"))?;
        if let Some(i) = labels.iter().position(|&l| l == label) {
            out.push((s.height, s.points[i]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointproc::sample_poisson;

    fn window() -> Window3D<f64> {
        Window3D::new(10.0, 10.0)
    }

    #[test]
    fn default_heights_are_centered() {
        let hs = SliceLayout::default().heights(85.0).unwrap();
        assert_eq!(hs.len(), 9);
        assert_eq!(hs[0], 26.5);
        assert_eq!(hs[8], 58.5);
        assert!(SliceLayout::centered(9, 20.0).heights(85.0).is_err());
        assert!(SliceLayout::centered(0, 4.0).heights(85.0).is_err());
        assert_eq!(SliceLayout::centered(1, 0.0).heights(85.0).unwrap(), vec![42.5]);
    }

    #[test]
    fn single_generator_fills_window() {
        let g = PointSet3D::from_points(vec![Point3::new(1.0, 2.0, 5.0)]);
        let st = slice_voronoi(&g, &SliceLayout::centered(3, 2.0), &window(), SliceOptions::default()).unwrap();
        for s in &st.slices {
            assert_eq!(s.len(), 1);
            assert!((s.areas.as_ref().unwrap()[0] - 100.0).abs() < 1e-9);
            assert!(s.points[0].x.abs() < 1e-12 && s.points[0].y.abs() < 1e-12);
        }
        assert_eq!(trajectory_of(&st, 0).unwrap().len(), 3);
        assert!(trajectory_of(&st, 7).unwrap().is_empty());
    }

    #[test]
    fn mirrored_pair() {
        let g = PointSet3D::from_points(vec![Point3::new(-2.0, 1.0, 4.0), Point3::new(2.0, 1.0, 4.0)]);
        let st = slice_voronoi(&g, &SliceLayout::centered(2, 3.0), &window(), SliceOptions::default()).unwrap();
        for s in &st.slices {
            assert_eq!(s.len(), 2);
            assert!((s.points[0].x + s.points[1].x).abs() < 1e-12);
            assert!((s.points[0].y - s.points[1].y).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_generators_rejected() {
        let g = PointSet3D::<f64>::default();
        assert!(matches!(
            slice_voronoi(&g, &SliceLayout::default(), &Window3D::new(170.0, 85.0), SliceOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn coincident_generators_tie_break_by_label() {
        let g = PointSet3D::from_points(vec![Point3::new(0.0, 0.0, 5.0), Point3::new(0.0, 0.0, 5.0)]);
        let st = slice_voronoi_at(&g, &[5.0], Rect::centered_square(10.0), SliceOptions::default()).unwrap();
        assert_eq!(st.slices[0].labels.as_deref(), Some(&[0u64][..]));
    }

    #[test]
    fn areas_tile_window() {
        let w = Window3D::new(60.0, 30.0);
        let g = sample_poisson::<f64>(2e-3, &w, 4).unwrap();
        let st = slice_voronoi(&g, &SliceLayout::centered(5, 3.0), &w, SliceOptions::default()).unwrap();
        for s in &st.slices {
            let total: f64 = s.areas.as_ref().unwrap().iter().sum();
            assert!((total - 3600.0).abs() / 3600.0 < 1e-9, "{total}");
        }
        st.validate().unwrap();
    }

    #[test]
    fn minus_sampling_drops_boundary_cells() {
        let w = Window3D::new(60.0, 30.0);
        let g = sample_poisson::<f64>(2e-3, &w, 4).unwrap();
        let all = slice_voronoi(&g, &SliceLayout::centered(1, 1.0), &w, SliceOptions::default()).unwrap();
        let inner = slice_voronoi(&g, &SliceLayout::centered(1, 1.0), &w, SliceOptions { minus_sampling: true }).unwrap();
        assert!(inner.slices[0].len() < all.slices[0].len());
        let l_all = all.slices[0].labels.as_ref().unwrap();
        assert!(inner.slices[0].labels.as_ref().unwrap().iter().all(|l| l_all.contains(l)));
    }

    #[test]
    fn perturbation_bounds() {
        let w = Window3D::new(60.0, 30.0);
        let g = sample_poisson::<f64>(2e-3, &w, 4).unwrap();
        let st = slice_voronoi(&g, &SliceLayout::centered(3, 3.0), &w, SliceOptions::default()).unwrap();
        assert_eq!(perturb_centroids(&st, 0.0, 1).unwrap(), st);
        let p = perturb_centroids(&st, 0.2, 1).unwrap();
        for (a, b) in st.slices.iter().zip(&p.slices) {
            assert_eq!(a.labels, b.labels);
            for (x, y) in a.points.iter().zip(&b.points) {
                assert!(x.dist(y) <= 0.2 + 1e-12);
            }
        }
        assert!(perturb_centroids(&st, -1.0, 1).is_err());
    }

    #[test]
    fn perturbation_mean_radius() {
        // E|N| = (2/3)η₀ for N uniform in a disk.
        let cloud = SliceCloud {
            height: 1.0,
            points: vec![Point2::new(0.0, 0.0); 100_000],
            labels: None,
            areas: None,
        };
        let st = SliceStack {
            window: Rect::centered_square(10.0),
            slices: vec![cloud],
        };
        let p = perturb_centroids(&st, 0.24, 17).unwrap();
        let mean: f64 = p.slices[0].points.iter().map(|q| q.dist(&Point2::new(0.0, 0.0))).sum::<f64>() / 1e5;
        let sd = 0.24 * (0.5f64 - 4.0 / 9.0).sqrt() / 1e5f64.sqrt();
        assert!((mean - 0.16).abs() < 4.0 * sd, "{mean}");
    }

    #[test]
    fn unlabeled_trajectory_is_error() {
        let g = PointSet3D::from_points(vec![Point3::new(1.0, 2.0, 5.0)]);
        let st = slice_voronoi(&g, &SliceLayout::centered(1, 1.0), &window(), SliceOptions::default()).unwrap();
        assert!(trajectory_of(&st.without_labels(), 0).is_err());
    }
}
