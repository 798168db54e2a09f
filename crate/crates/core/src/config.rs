//! Study configuration and its convention hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mph::{ClusterSize, HoleSizeAt, MphOptions};
use crate::pointproc::{ProcessSpec, Window3D, NULL_INTENSITY};
use crate::stats::{EdgeCorrection, Pooling, RipleyOptions};
use crate::tessellate::{SliceLayout, SliceOptions};
use crate::vineyard::VineLength;
use crate::{Error, Result};

/// Normalization area `|W|` used by the persistence statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum AreaConvention {
    /// Area of the slice window, `side²`.
    #[default]
    SliceArea,
    /// Volume of the 3D window.
    Volume,
    Custom(f64),
}

/// Where vine labels come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Generator labels from the simulation (or the input file).
    #[default]
    GroundTruth,
    /// Labels rebuilt by nearest-neighbour matching of adjacent slices.
    Reconstructed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    /// Reject for large statistics only.
    Upper,
    /// Reject for small statistics only.
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub side: f64,
    pub height: f64,
    pub process: ProcessSpec,
    pub layout: SliceLayout,
    pub eta0: f64,
    pub m: f64,
    pub tau: f64,
    pub cluster_size: ClusterSize,
    pub hole_size_at: HoleSizeAt,
    pub r_rip: f64,
    pub area: AreaConvention,
    pub edge_correction: EdgeCorrection,
    pub pooling: Pooling,
    pub vine_length: VineLength,
    pub label_mode: LabelMode,
    /// Matching threshold; `None` scales the mean nearest-neighbour distance.
    pub reconstruction_threshold: Option<f64>,
    pub minus_sampling: bool,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub replications: usize,
    pub seed: u64,
}

/// Default size bound `M` (and level bound `τ`).
pub const DEFAULT_M: f64 = 20.0;

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            side: 170.0,
            height: 85.0,
            process: ProcessSpec::poisson(NULL_INTENSITY),
            layout: SliceLayout::default(),
            eta0: 0.0,
            m: DEFAULT_M,
            tau: DEFAULT_M,
            cluster_size: ClusterSize::default(),
            hole_size_at: HoleSizeAt::default(),
            r_rip: 7.0,
            area: AreaConvention::default(),
            edge_correction: EdgeCorrection::default(),
            pooling: Pooling::default(),
            vine_length: VineLength::default(),
            label_mode: LabelMode::default(),
            reconstruction_threshold: None,
            minus_sampling: false,
            alpha: 0.05,
            sidedness: Sidedness::default(),
            replications: 1000,
            seed: 1,
        }
    }
}

/// The parameters that change the meaning of a statistic. Calibrations and
/// observations must agree on all of them.
#[derive(Serialize)]
struct Conventions<'a> {
    side: f64,
    height: f64,
    layout: &'a SliceLayout,
    eta0: f64,
    m: f64,
    tau: f64,
    cluster_size: ClusterSize,
    hole_size_at: HoleSizeAt,
    area: f64,
    r_rip: f64,
    edge_correction: EdgeCorrection,
    pooling: Pooling,
    vine_length: VineLength,
    label_mode: LabelMode,
    reconstruction_threshold: Option<f64>,
    minus_sampling: bool,
}

impl StudyConfig {
    pub fn window(&self) -> Window3D<f64> {
        Window3D::new(self.side, self.height)
    }

    /// `|W|` under the configured convention.
    pub fn area_value(&self) -> f64 {
        match self.area {
            AreaConvention::SliceArea => self.side * self.side,
            AreaConvention::Volume => self.side * self.side * self.height,
            AreaConvention::Custom(a) => a,
        }
    }

    pub fn mph_options(&self) -> MphOptions<f64> {
        MphOptions {
            m: self.m,
            tau: self.tau,
            cluster_size: self.cluster_size,
            hole_size_at: self.hole_size_at,
        }
    }

    pub fn ripley_options(&self) -> RipleyOptions {
        RipleyOptions {
            edge_correction: self.edge_correction,
            pooling: self.pooling,
        }
    }

    pub fn slice_options(&self) -> SliceOptions {
        SliceOptions {
            minus_sampling: self.minus_sampling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window().validate()?;
        self.process.validate()?;
        self.layout.heights(self.height)?;
        self.mph_options().validate()?;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return Err(Error::config(format!("eta0 must be >= 0, got {}", self.eta0)));
        }
        if !pos(self.r_rip) || self.r_rip >= 0.5 * self.side {
            return Err(Error::config(format!(
                "r_rip must lie in (0, {}), got {}",
                0.5 * self.side,
                self.r_rip
            )));
        }
        if !pos(self.area_value()) {
            return Err(Error::config(format!("normalization area must be > 0, got {}", self.area_value())));
        }
        if let Some(t) = self.reconstruction_threshold {
            if !pos(t) {
                return Err(Error::config(format!("reconstruction threshold must be > 0, got {t}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the convention-sensitive parameters.
    /// The generator process, seed, alpha and replication count are excluded,
    /// so a null calibration can be reused for any observed data.
    pub fn config_hash(&self) -> String {
        let c = Conventions {
            side: self.side,
            height: self.height,
            layout: &self.layout,
            eta0: self.eta0,
            m: self.m,
            tau: self.tau,
            cluster_size: self.cluster_size,
            hole_size_at: self.hole_size_at,
            area: self.area_value(),
            r_rip: self.r_rip,
            edge_correction: self.edge_correction,
            pooling: self.pooling,
            vine_length: self.vine_length,
            label_mode: self.label_mode,
            reconstruction_threshold: self.reconstruction_threshold,
            minus_sampling: self.minus_sampling,
        };
        let json = serde_json::to_vec(&c).expect("conventions serialize");
        hex::encode(Sha256::digest(&json))
    }

    /// The same study observed through the middle slice only.
    pub fn single_slice(&self) -> Self {
        let mut out = self.clone();
        out.layout = SliceLayout::centered(1, self.layout.spacing);
        out
    }
}
