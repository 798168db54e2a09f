//! M-bounded persistence diagrams of planar point clouds.
//!
//! Degree 0 tracks clusters (connected components of the union of disks),
//! degree 1 tracks holes (bounded components of its complement). Features
//! whose spatial size exceeds the bound `M` are cut off; see [`clusters`] and
//! [`holes`] for the exact rules.

pub mod clusters;
pub mod filtration;
pub mod holes;
pub mod reduction;

use serde::{Deserialize, Serialize};

pub use clusters::pd0_mbounded;
pub use filtration::{build_filtration, Filtration2D};
pub use holes::pd1_mbounded;

use crate::geom::Point2;
use crate::{Error, Real, Result};

/// Identity of a feature used to link diagrams across slices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKey {
    /// Label of the point representing a cluster.
    Point(u64),
    /// Unordered label pair (smaller first) of the edge that created a hole.
    Edge(u64, u64),
}

impl FeatureKey {
    pub fn dim(&self) -> u8 {
        match self {
            FeatureKey::Point(_) => 0,
            FeatureKey::Edge(..) => 1,
        }
    }

    pub fn parts(&self) -> (u64, Option<u64>) {
        match *self {
            FeatureKey::Point(a) => (a, None),
            FeatureKey::Edge(a, b) => (a, Some(b)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceRecord<T> {
    pub dim: u8,
    pub birth: T,
    pub death: T,
    pub key: FeatureKey,
    /// Spatial size of the feature (see [`ClusterSize`], [`HoleSizeAt`]).
    pub size: T,
}

impl<T: Real> PersistenceRecord<T> {
    pub fn lifetime(&self) -> T {
        self.death - self.birth
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram<T> {
    pub records: Vec<PersistenceRecord<T>>,
}

impl<T: Real> PersistenceDiagram<T> {
    pub fn dim(&self, q: u8) -> impl Iterator<Item = &PersistenceRecord<T>> + '_ {
        self.records.iter().filter(move |r| r.dim == q)
    }

    pub fn count(&self, q: u8) -> usize {
        self.dim(q).count()
    }

    pub fn total_persistence(&self, q: u8) -> T {
        self.dim(q).fold(T::zero(), |a, r| a + r.lifetime())
    }

    /// Records sorted by `(dim, key)`, for order-independent comparisons.
    pub fn sorted(&self) -> Self {
        let mut records = self.records.clone();
        records.sort_by(|a, b| (a.dim, a.key).cmp(&(b.dim, b.key)));
        Self { records }
    }

    pub fn extend(&mut self, other: Self) {
        self.records.extend(other.records);
    }
}

/// How the size of a cluster is measured against `M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSize {
    /// Diameter of the union of disks: point-set diameter + 2r.
    #[default]
    WithRadius,
    /// Point-set diameter only.
    PointsOnly,
}

/// At which level the size of a hole is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleSizeAt {
    /// The complement component right after the creating edge appears.
    #[default]
    Birth,
    /// The last triangle to be filled.
    Death,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MphOptions<T> {
    /// Size bound `M`.
    pub m: T,
    /// Level bound `τ`; diagrams live in `[0, τ]²`.
    pub tau: T,
    pub cluster_size: ClusterSize,
    pub hole_size_at: HoleSizeAt,
}

impl<T: Real> MphOptions<T> {
    /// Options with `τ = M` and default size conventions.
    pub fn new(m: T) -> Self {
        Self {
            m,
            tau: m,
            cluster_size: ClusterSize::default(),
            hole_size_at: HoleSizeAt::default(),
        }
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > T::zero()) || !self.m.is_finite() {
            return Err(Error::domain(format!("size bound M must be > 0, got {}", self.m)));
        }
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(Error::domain(format!("level bound tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Both diagrams of a point cloud. An empty cloud has an empty diagram.
pub fn diagram<T: Real>(points: &[Point2<T>], labels: Option<&[u64]>, opts: &MphOptions<T>) -> Result<PersistenceDiagram<T>> {
    opts.validate()?;
    if points.is_empty() {
        return Ok(PersistenceDiagram::default());
    }
    let f = build_filtration(points, labels)?;
    let mut d = pd0_mbounded(&f, opts)?;
    d.extend(pd1_mbounded(&f, opts)?);
    Ok(d)
}

/// Slice-averaged persistent Betti number: mean over diagrams of the number of
/// degree-`q` features with `birth <= b` and `death >= d`.
pub fn persistent_betti<T: Real>(diagrams: &[PersistenceDiagram<T>], q: u8, b: T, d: T) -> T {
    if diagrams.is_empty() {
        return T::zero();
    }
    let total: usize = diagrams
        .iter()
        .map(|pd| pd.dim(q).filter(|r| r.birth <= b && r.death >= d).count())
        .sum();
    T::of(total as f64) / T::of(diagrams.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(dim: u8, birth: f64, death: f64) -> PersistenceRecord<f64> {
        PersistenceRecord {
            dim,
            birth,
            death,
            key: if dim == 0 { FeatureKey::Point(0) } else { FeatureKey::Edge(0, 1) },
            size: 0.0,
        }
    }

    #[test]
    fn betti_counts() {
        let a = PersistenceDiagram {
            records: vec![rec(0, 0.0, 1.0), rec(0, 0.0, 2.0), rec(1, 0.5, 0.7)],
        };
        let b = PersistenceDiagram {
            records: vec![rec(0, 0.0, 0.5), rec(1, 0.6, 0.9)],
        };
        let ds = [a, b];
        assert_eq!(persistent_betti(&ds, 0, 2.0, 0.0), 1.5);
        assert_eq!(persistent_betti(&ds, 1, 0.4, 0.0), 0.0);
        assert_eq!(persistent_betti(&ds, 1, 0.65, 0.65), 1.0);
        assert_eq!(persistent_betti(&ds, 1, 0.55, 0.65), 0.5);
    }

    #[test]
    fn invalid_bounds() {
        assert!(MphOptions::new(0.0f64).validate().is_err());
        assert!(MphOptions::new(1.0f64).with_tau(-1.0).validate().is_err());
        let pts = [Point2::new(0.0, 0.0)];
        assert!(diagram(&pts, None, &MphOptions::new(-2.0)).is_err());
    }

    #[test]
    fn empty_cloud_empty_diagram() {
        let d = diagram::<f64>(&[], None, &MphOptions::new(1.0)).unwrap();
        assert!(d.records.is_empty());
    }
}
