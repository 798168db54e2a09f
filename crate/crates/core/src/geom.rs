//! Small planar/spatial geometry kernel: points, axis-aligned windows and
//! convex polygon clipping.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> T {
        self.dist2(other).sqrt()
    }

    /// Lexicographic order on `(x, y)`. NaN coordinates sort last.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        cmp_real(self.x, other.x).then_with(|| cmp_real(self.y, other.y))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dist2(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn xy(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }
}

/// Total order on scalars that puts NaN last.
#[inline]
pub fn cmp_real<T: Real>(a: T, b: T) -> Ordering {
    match a.partial_cmp(&b) {
        Some(o) => o,
        None => a.is_nan().cmp(&b.is_nan()),
    }
}

/// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub min: Point2<T>,
    pub max: Point2<T>,
}

impl<T: Real> Rect<T> {
    pub fn new(min: Point2<T>, max: Point2<T>) -> Self {
        Self { min, max }
    }

    /// Square of the given side centred at the origin.
    pub fn centered_square(side: T) -> Self {
        let h = side * T::half();
        Self::new(Point2::new(-h, -h), Point2::new(h, h))
    }

    #[inline]
    pub fn width(&self) -> T {
        self.max.x - self.min.x
    }

    #[inline]
    pub fn height(&self) -> T {
        self.max.y - self.min.y
    }

    #[inline]
    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2<T> {
        Point2::new(
            (self.min.x + self.max.x) * T::half(),
            (self.min.y + self.max.y) * T::half(),
        )
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.width() > T::zero() && self.height() > T::zero()
    }

    #[inline]
    pub fn contains(&self, p: &Point2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Counter-clockwise corner list.
    pub fn polygon(&self) -> Vec<Point2<T>> {
        vec![
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    /// Distances from `p` to the four sides, ordered left, bottom, right, top.
    pub fn side_distances(&self, p: &Point2<T>) -> [T; 4] {
        [p.x - self.min.x, p.y - self.min.y, self.max.x - p.x, self.max.y - p.y]
    }
}

/// Clips a convex polygon to the half-plane `n · p <= c`, writing the result
/// into `out`. Vertices exactly on the line are kept.
pub fn clip_halfplane<T: Real>(poly: &[Point2<T>], n: Point2<T>, c: T, out: &mut Vec<Point2<T>>) {
    out.clear();
    let k = poly.len();
    if k == 0 {
        return;
    }
    let side = |p: &Point2<T>| n.x * p.x + n.y * p.y - c;
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        let sa = side(&a);
        let sb = side(&b);
        if sa <= T::zero() {
            out.push(a);
        }
        if (sa < T::zero() && sb > T::zero()) || (sa > T::zero() && sb < T::zero()) {
            let t = sa / (sa - sb);
            out.push(Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
        }
    }
}

/// Signed area (positive for counter-clockwise order).
pub fn polygon_area<T: Real>(poly: &[Point2<T>]) -> T {
    let k = poly.len();
    if k < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        acc = acc + (a.x * b.y - b.x * a.y);
    }
    acc * T::half()
}

/// Area and centroid of a simple polygon. Coordinates are taken relative to
/// the first vertex to limit cancellation. Returns `None` for zero area.
pub fn polygon_area_centroid<T: Real>(poly: &[Point2<T>]) -> Option<(T, Point2<T>)> {
    let k = poly.len();
    if k < 3 {
        return None;
    }
    let o = poly[0];
    let mut a2 = T::zero();
    let mut cx = T::zero();
    let mut cy = T::zero();
    for i in 1..k - 1 {
        let p = Point2::new(poly[i].x - o.x, poly[i].y - o.y);
        let q = Point2::new(poly[i + 1].x - o.x, poly[i + 1].y - o.y);
        let cross = p.x * q.y - q.x * p.y;
        a2 = a2 + cross;
        cx = cx + (p.x + q.x) * cross;
        cy = cy + (p.y + q.y) * cross;
    }
    if a2 <= T::zero() {
        return None;
    }
    let three = T::of(3.0);
    let area = a2 * T::half();
    Some((area, Point2::new(o.x + cx / (three * a2), o.y + cy / (three * a2))))
}

/// Exact diameter of a point set by brute force.
pub fn diameter<T: Real>(pts: &[Point2<T>]) -> T {
    let mut d2 = T::zero();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d2 = d2.max(a.dist2(b));
        }
    }
    d2.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_square_in_half() {
        let r = Rect::<f64>::centered_square(2.0);
        let mut out = Vec::new();
        clip_halfplane(&r.polygon(), Point2::new(1.0, 0.0), 0.0, &mut out);
        let (a, c) = polygon_area_centroid(&out).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        assert!((c.x + 0.5).abs() < 1e-12 && c.y.abs() < 1e-12);
    }

    #[test]
    fn clip_away_everything() {
        let r = Rect::<f64>::centered_square(2.0);
        let mut out = Vec::new();
        clip_halfplane(&r.polygon(), Point2::new(1.0, 0.0), -5.0, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn lex_order() {
        let a = Point2::new(0.0f32, 1.0);
        let b = Point2::new(0.0f32, 2.0);
        let c = Point2::new(-1.0f32, 9.0);
        assert_eq!(a.lex_cmp(&b), Ordering::Less);
        assert_eq!(c.lex_cmp(&a), Ordering::Less);
    }

    #[test]
    fn diameter_of_square() {
        let r = Rect::<f64>::centered_square(1.0);
        assert!((diameter(&r.polygon()) - 2f64.sqrt()).abs() < 1e-15);
    }
}
