//! Samplers for the 3D generator processes: homogeneous Poisson, Matérn
//! hard-core (type I, mutual deletion) and Matérn cluster.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::geom::{Point3, Rect};
use crate::rng::{derive_seed, rng_from_seed, tag, SimRng};
use crate::{Error, Real, Result};

/// Intensity of the Poisson null model (points per unit volume).
pub const NULL_INTENSITY: f64 = 2.18e-4;

/// Box `[origin.x, origin.x + side] × [origin.y, origin.y + side] × [origin.z, origin.z + height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window3D<T> {
    pub side: T,
    pub height: T,
    pub origin: Point3<T>,
}

impl<T: Real> Window3D<T> {
    /// `[-side/2, side/2]² × [0, height]`.
    pub fn new(side: T, height: T) -> Self {
        let h = side * T::half();
        Self {
            side,
            height,
            origin: Point3::new(-h, -h, T::zero()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.side.is_finite()
            && self.height.is_finite()
            && self.origin.x.is_finite()
            && self.origin.y.is_finite()
            && self.origin.z.is_finite();
        if !finite || self.side <= T::zero() || self.height <= T::zero() {
            return Err(Error::config(format!(
                "degenerate window: side {}, height {}",
                self.side, self.height
            )));
        }
        Ok(())
    }

    pub fn volume(&self) -> T {
        self.side * self.side * self.height
    }

    pub fn max(&self) -> Point3<T> {
        Point3::new(
            self.origin.x + self.side,
            self.origin.y + self.side,
            self.origin.z + self.height,
        )
    }

    pub fn contains(&self, p: &Point3<T>) -> bool {
        let m = self.max();
        p.x >= self.origin.x
            && p.x <= m.x
            && p.y >= self.origin.y
            && p.y <= m.y
            && p.z >= self.origin.z
            && p.z <= m.z
    }

    /// The horizontal cross-section window.
    pub fn rect2d(&self) -> Rect<T> {
        let m = self.max();
        Rect::new(self.origin.xy(), m.xy())
    }

    /// The window grown by `r` in every direction.
    pub fn dilate(&self, r: T) -> Self {
        let two = T::two();
        Self {
            side: self.side + two * r,
            height: self.height + two * r,
            origin: Point3::new(self.origin.x - r, self.origin.y - r, self.origin.z - r),
        }
    }

    fn to_f64(self) -> Window3D<f64> {
        Window3D {
            side: self.side.as_f64(),
            height: self.height.as_f64(),
            origin: Point3::new(self.origin.x.as_f64(), self.origin.y.as_f64(), self.origin.z.as_f64()),
        }
    }
}

/// Generator points with labels `0..len`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointSet3D<T> {
    pub points: Vec<Point3<T>>,
    pub labels: Vec<u64>,
}

impl<T: Real> PointSet3D<T> {
    pub fn from_points(points: Vec<Point3<T>>) -> Self {
        let labels = (0..points.len() as u64).collect();
        Self { points, labels }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Poisson,
    MaternHardcore,
    MaternCluster,
}

/// How a cluster process is brought to the target expected point count when
/// `match_expected_count` is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMatching {
    /// Scale `lambda_cl` so the clipped offspring alone reach the target.
    #[default]
    ScaleOffspring,
    /// Keep `lambda_cl` and add a homogeneous Poisson background for the
    /// remaining expected count.
    PoissonBackground,
    /// Keep `lambda_cl` and draw a Poisson number of centres whose mean
    /// reaches the target.
    ScaleCenters,
}

/// Parameters of a generator process.
///
/// `intensity` is the target intensity of the final pattern. For the hard-core
/// process the parent intensity is solved from it; for the cluster process it
/// is only used when `match_expected_count` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub intensity: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub n_cl: u64,
    #[serde(default)]
    pub lambda_cl: f64,
    #[serde(default)]
    pub match_expected_count: bool,
    #[serde(default)]
    pub count_matching: CountMatching,
}

impl ProcessSpec {
    pub fn poisson(intensity: f64) -> Self {
        Self {
            kind: ProcessKind::Poisson,
            intensity,
            r: 0.0,
            n_cl: 0,
            lambda_cl: 0.0,
            match_expected_count: false,
            count_matching: CountMatching::default(),
        }
    }

    pub fn matern_hardcore(intensity: f64, r: f64) -> Self {
        Self {
            kind: ProcessKind::MaternHardcore,
            r,
            ..Self::poisson(intensity)
        }
    }

    pub fn matern_cluster(n_cl: u64, lambda_cl: f64, r: f64) -> Self {
        Self {
            kind: ProcessKind::MaternCluster,
            intensity: NULL_INTENSITY,
            r,
            n_cl,
            lambda_cl,
            match_expected_count: false,
            count_matching: CountMatching::default(),
        }
    }

    /// Named models of the simulation study: `PV`, `HC1`, `HC2`, `CL1`, `CL2`, `CL3`.
    pub fn preset(name: &str) -> Option<Self> {
        Some(match name.to_ascii_uppercase().as_str() {
            "PV" => Self::poisson(NULL_INTENSITY),
            "HC1" => Self::matern_hardcore(NULL_INTENSITY, 5.25),
            "HC2" => Self::matern_hardcore(NULL_INTENSITY, 5.95),
            "CL1" => Self::matern_cluster(10, 10.0, 42.5),
            "CL2" => Self::matern_cluster(5, 20.0, 42.5),
            "CL3" => Self::matern_cluster(4, 25.0, 42.5),
            _ => return None,
        })
    }

    pub const PRESETS: [&'static str; 6] = ["PV", "HC1", "HC2", "CL1", "CL2", "CL3"];

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.intensity) {
            return Err(Error::config(format!("intensity must be finite and >= 0, got {}", self.intensity)));
        }
        match self.kind {
            ProcessKind::Poisson => {}
            ProcessKind::MaternHardcore => {
                if !ok(self.r) {
                    return Err(Error::config(format!("hard-core radius must be >= 0, got {}", self.r)));
                }
            }
            ProcessKind::MaternCluster => {
                if !ok(self.r) || !ok(self.lambda_cl) {
                    return Err(Error::config("cluster radius and lambda_cl must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Offspring mean actually used for the cluster process in window `w`.
    pub fn effective_lambda_cl<T: Real>(&self, w: &Window3D<T>) -> f64 {
        if !self.match_expected_count || self.n_cl == 0 || self.count_matching != CountMatching::ScaleOffspring {
            return self.lambda_cl;
        }
        let w = w.to_f64();
        let retained = ball_retention_fraction(self.r, &w);
        self.intensity * w.volume() / (self.n_cl as f64 * retained)
    }

    /// Draws one realization in `w`.
    pub fn sample<T: Real>(&self, w: &Window3D<T>, seed: u64) -> Result<PointSet3D<T>> {
        self.validate()?;
        match self.kind {
            ProcessKind::Poisson => sample_poisson(self.intensity, w, seed),
            ProcessKind::MaternHardcore => {
                let parent = hardcore_parent_intensity(self.intensity, self.r)?;
                sample_matern_hardcore(parent, self.r, w, seed)
            }
            ProcessKind::MaternCluster => {
                let n_cl = match self.centers_mean(w) {
                    Some(mean) => poisson_count(&mut rng_from_seed(derive_seed(seed, &[tag::CENTERS])), mean)?,
                    None => self.n_cl,
                };
                let clusters = sample_matern_cluster(n_cl, self.effective_lambda_cl(w), self.r, w, seed)?;
                let background = self.background_intensity(w);
                if background == 0.0 {
                    return Ok(clusters);
                }
                let extra = sample_poisson(background, w, derive_seed(seed, &[tag::BACKGROUND]))?;
                Ok(PointSet3D::from_points(clusters.points.into_iter().chain(extra.points).collect()))
            }
        }
    }

    /// Mean number of cluster centres under [`CountMatching::ScaleCenters`].
    pub fn centers_mean<T: Real>(&self, w: &Window3D<T>) -> Option<f64> {
        if self.kind != ProcessKind::MaternCluster
            || !self.match_expected_count
            || self.count_matching != CountMatching::ScaleCenters
            || self.lambda_cl <= 0.0
        {
            return None;
        }
        let w = w.to_f64();
        Some(self.intensity * w.volume() / (self.lambda_cl * ball_retention_fraction(self.r, &w)))
    }

    /// Intensity of the Poisson background added to a cluster process; zero
    /// unless the count is matched with [`CountMatching::PoissonBackground`].
    pub fn background_intensity<T: Real>(&self, w: &Window3D<T>) -> f64 {
        if self.kind != ProcessKind::MaternCluster
            || !self.match_expected_count
            || self.count_matching != CountMatching::PoissonBackground
        {
            return 0.0;
        }
        let w = w.to_f64();
        let clustered = self.n_cl as f64 * self.lambda_cl * ball_retention_fraction(self.r, &w);
        (self.intensity - clustered / w.volume()).max(0.0)
    }
}

fn check_intensity(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::config(format!("intensity must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn poisson_count(rng: &mut SimRng, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::config(format!("poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

fn uniform_in<T: Real>(rng: &mut SimRng, w: &Window3D<T>) -> Point3<T> {
    let m = w.max();
    Point3::new(
        rng.random_range(w.origin.x..m.x),
        rng.random_range(w.origin.y..m.y),
        rng.random_range(w.origin.z..m.z),
    )
}

fn poisson_points<T: Real>(rng: &mut SimRng, lambda: f64, w: &Window3D<T>) -> Result<Vec<Point3<T>>> {
    let n = poisson_count(rng, lambda * w.volume().as_f64())?;
    Ok((0..n).map(|_| uniform_in(rng, w)).collect())
}

/// Homogeneous Poisson process of intensity `lambda` in `w`.
pub fn sample_poisson<T: Real>(lambda: f64, w: &Window3D<T>, seed: u64) -> Result<PointSet3D<T>> {
    check_intensity(lambda)?;
    w.validate()?;
    let mut rng = rng_from_seed(seed);
    Ok(PointSet3D::from_points(poisson_points(&mut rng, lambda, w)?))
}

/// Matérn type I hard-core process: a Poisson parent pattern of intensity
/// `lambda_parent` from which every point with another parent closer than `r`
/// is deleted.
///
/// Parents are simulated in the window dilated by `r`, so points near the
/// boundary are thinned by neighbours outside the window as well.
pub fn sample_matern_hardcore<T: Real>(lambda_parent: f64, r: f64, w: &Window3D<T>, seed: u64) -> Result<PointSet3D<T>> {
    Ok(matern_hardcore_with_parent(lambda_parent, r, w, seed)?.1)
}

/// As [`sample_matern_hardcore`], also returning the parent realization
/// (sampled in the dilated window).
pub fn matern_hardcore_with_parent<T: Real>(
    lambda_parent: f64,
    r: f64,
    w: &Window3D<T>,
    seed: u64,
) -> Result<(PointSet3D<T>, PointSet3D<T>)> {
    check_intensity(lambda_parent)?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::config(format!("hard-core radius must be >= 0, got {r}")));
    }
    w.validate()?;
    let rr = T::of(r);
    let outer = w.dilate(rr);
    let mut rng = rng_from_seed(seed);
    let parent = poisson_points(&mut rng, lambda_parent, &outer)?;

    let keep: Vec<bool> = if r == 0.0 {
        vec![true; parent.len()]
    } else {
        let cell = |p: &Point3<T>| {
            (
                ((p.x - outer.origin.x) / rr).floor().to_i64().unwrap_or(0),
                ((p.y - outer.origin.y) / rr).floor().to_i64().unwrap_or(0),
                ((p.z - outer.origin.z) / rr).floor().to_i64().unwrap_or(0),
            )
        };
        let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in parent.iter().enumerate() {
            grid.entry(cell(p)).or_default().push(i);
        }
        let r2 = rr * rr;
        parent
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (cx, cy, cz) = cell(p);
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                                if bucket.iter().any(|&j| j != i && parent[j].dist2(p) < r2) {
                                    return false;
                                }
                            }
                        }
                    }
                }
                true
            })
            .collect()
    };

    let retained = parent
        .iter()
        .zip(&keep)
        .filter(|(p, &k)| k && w.contains(p))
        .map(|(p, _)| *p)
        .collect();
    Ok((PointSet3D::from_points(parent), PointSet3D::from_points(retained)))
}

/// Intensity of a Matérn I pattern with parent intensity `lambda_parent`.
pub fn hardcore_retained_intensity(lambda_parent: f64, r: f64) -> f64 {
    let v = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    lambda_parent * (-lambda_parent * v).exp()
}

/// Smallest parent intensity whose Matérn I thinning has intensity `target`.
///
/// `λ ↦ λ exp(-λV)` increases on `[0, 1/V]`; the root is bracketed there and
/// found by bisection. Targets above the maximum `1/(eV)` are unattainable.
pub fn hardcore_parent_intensity(target: f64, r: f64) -> Result<f64> {
    check_intensity(target)?;
    if r == 0.0 || target == 0.0 {
        return Ok(target);
    }
    let v = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
    let upper = 1.0 / v;
    if target > hardcore_retained_intensity(upper, r) {
        return Err(Error::config(format!(
            "hard-core intensity {target} unattainable with R = {r} (max {})",
            upper / std::f64::consts::E
        )));
    }
    let (mut lo, mut hi) = (target, upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hardcore_retained_intensity(mid, r) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Matérn cluster process: `n_cl` centres uniform in `w`, each with
/// Poisson(`lambda_cl`) offspring uniform in the ball of radius `r`.
/// Offspring outside `w` are discarded.
pub fn sample_matern_cluster<T: Real>(
    n_cl: u64,
    lambda_cl: f64,
    r: f64,
    w: &Window3D<T>,
    seed: u64,
) -> Result<PointSet3D<T>> {
    Ok(matern_cluster_with_centers(n_cl, lambda_cl, r, w, seed)?.1)
}

/// As [`sample_matern_cluster`], also returning the cluster centres and,
/// for every retained offspring, the index of its centre.
pub fn matern_cluster_with_centers<T: Real>(
    n_cl: u64,
    lambda_cl: f64,
    r: f64,
    w: &Window3D<T>,
    seed: u64,
) -> Result<(Vec<Point3<T>>, PointSet3D<T>, Vec<usize>)> {
    check_intensity(lambda_cl)?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::config(format!("cluster radius must be >= 0, got {r}")));
    }
    w.validate()?;
    let mut rng = rng_from_seed(seed);
    let rr = T::of(r);
    let centers: Vec<Point3<T>> = (0..n_cl).map(|_| uniform_in(&mut rng, w)).collect();
    let mut pts = Vec::new();
    let mut parent = Vec::new();
    for (ci, c) in centers.iter().enumerate() {
        let k = poisson_count(&mut rng, lambda_cl)?;
        for _ in 0..k {
            let off = uniform_in_ball(&mut rng, rr);
            let p = Point3::new(c.x + off.x, c.y + off.y, c.z + off.z);
            if w.contains(&p) {
                pts.push(p);
                parent.push(ci);
            }
        }
    }
    Ok((centers, PointSet3D::from_points(pts), parent))
}

fn uniform_in_ball<T: Real>(rng: &mut SimRng, r: T) -> Point3<T> {
    if r == T::zero() {
        return Point3::default();
    }
    loop {
        let p = Point3::new(
            rng.random_range(-r..r),
            rng.random_range(-r..r),
            rng.random_range(-r..r),
        );
        if p.dist2(&Point3::default()) <= r * r {
            return p;
        }
    }
}

/// Expected fraction of a uniform-in-ball offspring that lands inside `w` when
/// its centre is uniform in `w`: `|B|⁻¹ ∫_B Π_k (1 - |u_k| / L_k)₊ du`,
/// evaluated by midpoint quadrature on one octant.
pub fn ball_retention_fraction(r: f64, w: &Window3D<f64>) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    const N: usize = 96;
    let h = r / N as f64;
    let lens = [w.side, w.side, w.height];
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..N {
        let x = (i as f64 + 0.5) * h;
        let fx = (1.0 - x / lens[0]).max(0.0);
        for j in 0..N {
            let y = (j as f64 + 0.5) * h;
            let fy = (1.0 - y / lens[1]).max(0.0);
            let rem = r * r - x * x - y * y;
            if rem <= 0.0 {
                break;
            }
            for k in 0..N {
                let z = (k as f64 + 0.5) * h;
                if z * z > rem {
                    break;
                }
                den += 1.0;
                num += fx * fy * (1.0 - z / lens[2]).max(0.0);
            }
        }
    }
    num / den
}
