//! Topology-based goodness-of-fit tests for 3D microstructure models that are
//! only observed through parallel 2D slices.
//!
//! The pipeline:
//!
//! 1. [`pointproc`] samples Voronoi generators (Poisson, Matérn hard-core,
//!    Matérn cluster) in a 3D box.
//! 2. [`tessellate`] cuts the 3D Voronoi tessellation with horizontal planes and
//!    returns the labelled cell centroids of every slice.
//! 3. [`mph`] computes M-bounded persistence diagrams (clusters and holes) of
//!    each centroid cloud.
//! 4. [`vineyard`] links diagram points across slices into vines, optionally
//!    reconstructing the labels first.
//! 5. [`stats`] evaluates total persistence, vine-averaged persistence and the
//!    integrated pooled Ripley K function.
//! 6. [`gof`] calibrates null means/standard deviations by Monte Carlo and runs
//!    z-tests and power experiments.
//!
//! Geometry and persistence code is generic over the scalar type through
//! [`Real`]; the Monte Carlo layer works in `f64`. The aliases at the crate
//! root fix the scalar to `f64`.

pub mod config;
pub mod error;
pub mod geom;
pub mod gof;
pub mod io;
pub mod mph;
pub mod pipeline;
pub mod pointproc;
pub mod real;
pub mod rng;
pub mod stats;
pub mod tessellate;
pub mod vineyard;

pub use config::StudyConfig;
pub use error::{Error, Result};
pub use real::Real;

/// Version string stamped into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Point2 = geom::Point2<f64>;
pub type Point3 = geom::Point3<f64>;
pub type Rect = geom::Rect<f64>;
pub type Window3D = pointproc::Window3D<f64>;
pub type PointSet3D = pointproc::PointSet3D<f64>;
pub type SliceCloud = tessellate::SliceCloud<f64>;
pub type SliceStack = tessellate::SliceStack<f64>;
pub type Filtration2D = mph::Filtration2D<f64>;
pub type PersistenceDiagram = mph::PersistenceDiagram<f64>;
pub type Vineyard = vineyard::Vineyard<f64>;
pub type Vine = vineyard::Vine<f64>;
