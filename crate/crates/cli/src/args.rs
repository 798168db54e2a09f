use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use slicevine::config::{AreaConvention, LabelMode, Sidedness};
use slicevine::mph::{ClusterSize, HoleSizeAt};
use slicevine::pointproc::CountMatching;
use slicevine::stats::{EdgeCorrection, Pooling};
use slicevine::vineyard::VineLength;

/// Topological goodness-of-fit tests for 3D tessellations seen through 2D slices.
#[derive(Debug, Parser)]
#[command(name = "slicevine", version)]
pub struct Cli {
    /// Worker threads for parallel replications.
    #[arg(long, global = true, env = "SLICEVINE_THREADS")]
    pub threads: Option<usize>,

    /// Report errors as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,

    #[command(flatten)]
    pub study: StudyArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Parses a snake_case enum value through its serde representation.
fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

fn area(s: &str) -> Result<AreaConvention, String> {
    match s {
        "slice_area" | "slice-area" => Ok(AreaConvention::SliceArea),
        "volume" => Ok(AreaConvention::Volume),
        _ => s
            .parse()
            .map(AreaConvention::Custom)
            .map_err(|_| format!("expected slice_area, volume or a number, got '{s}'")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    Poisson,
    MaternHardcore,
    MaternCluster,
}

/// Study parameters. Values given here override the `--config` file.
#[derive(Debug, Default, Args)]
pub struct StudyArgs {
    /// Study configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Named generator model: PV, HC1, HC2, CL1, CL2, CL3.
    #[arg(long, global = true, conflicts_with = "process")]
    pub model: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub process: Option<ProcessArg>,
    /// Target intensity of the generator process.
    #[arg(long, global = true)]
    pub intensity: Option<f64>,
    /// Number of cluster centres.
    #[arg(long = "n-cl", global = true)]
    pub n_cl: Option<u64>,
    /// Mean number of offspring per cluster.
    #[arg(long = "lambda-cl", global = true)]
    pub lambda_cl: Option<f64>,
    /// Hard-core distance or cluster radius.
    #[arg(long = "R", global = true)]
    pub r: Option<f64>,
    /// Rescale cluster offspring so the expected count matches the intensity.
    #[arg(long, global = true)]
    pub match_expected_count: bool,
    /// How the count is matched: scale_offspring, scale_centers or poisson_background.
    #[arg(long, global = true, value_parser = serde_enum::<CountMatching>)]
    pub count_matching: Option<CountMatching>,

    #[arg(long, global = true)]
    pub side: Option<f64>,
    #[arg(long, global = true)]
    pub height: Option<f64>,
    /// Number of slices.
    #[arg(long, global = true)]
    pub slices: Option<usize>,
    #[arg(long, global = true)]
    pub spacing: Option<f64>,
    /// Centroid noise radius.
    #[arg(long, global = true)]
    pub eta0: Option<f64>,
    /// Feature size bound M.
    #[arg(long = "m", global = true)]
    pub m: Option<f64>,
    /// Level bound tau (defaults to M when only M is given).
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true, value_parser = serde_enum::<ClusterSize>)]
    pub cluster_size: Option<ClusterSize>,
    #[arg(long, global = true, value_parser = serde_enum::<HoleSizeAt>)]
    pub hole_size_at: Option<HoleSizeAt>,
    #[arg(long = "r-rip", global = true)]
    pub r_rip: Option<f64>,
    /// Normalization area: slice_area, volume or a number.
    #[arg(long, global = true, value_parser = area)]
    pub area: Option<AreaConvention>,
    #[arg(long, global = true, value_parser = serde_enum::<EdgeCorrection>)]
    pub edge_correction: Option<EdgeCorrection>,
    #[arg(long, global = true, value_parser = serde_enum::<Pooling>)]
    pub pooling: Option<Pooling>,
    #[arg(long, global = true, value_parser = serde_enum::<VineLength>)]
    pub vine_length: Option<VineLength>,
    #[arg(long, global = true, value_parser = serde_enum::<LabelMode>)]
    pub label_mode: Option<LabelMode>,
    #[arg(long, global = true)]
    pub reconstruction_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub minus_sampling: bool,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, value_parser = serde_enum::<Sidedness>)]
    pub sidedness: Option<Sidedness>,
    /// Number of Monte Carlo replications.
    #[arg(long, short = 'n', global = true)]
    pub replications: Option<usize>,
    /// Root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a generator pattern and write its slice stack as CSV.
    Simulate {
        #[arg(long, short)]
        out: PathBuf,
        /// Also write the 3D generators as CSV.
        #[arg(long)]
        generators: Option<PathBuf>,
    },
    /// Persistence diagrams of every slice of a stack.
    Diagram {
        #[arg(long)]
        stack: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Vineyard of a stack (labels are reconstructed when absent).
    Vineyard {
        #[arg(long)]
        stack: PathBuf,
        /// Vineyard JSON.
        #[arg(long, short)]
        out: PathBuf,
        /// Vine summary CSV, one row per vine.
        #[arg(long)]
        vines_csv: Option<PathBuf>,
    },
    /// Null calibration of all statistics.
    Calibrate {
        #[arg(long, short)]
        out: PathBuf,
        /// Keep the raw samples (needed by `diagnostics`).
        #[arg(long)]
        keep_samples: bool,
    },
    /// z-test of a stack (or a fresh simulation) against a calibration.
    Test {
        #[arg(long)]
        calibration: PathBuf,
        /// Observed stack; when omitted, one realization of the configured process is simulated.
        #[arg(long)]
        stack: Option<PathBuf>,
        /// Report JSON.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Rejection rates of the models against a calibration.
    Power(PowerArgs),
    /// Power of the middle slice alone, with its own calibration.
    SingleSlice(PowerArgs),
    /// Read an external point CSV into a validated stack CSV.
    Ingest(IngestArgs),
    /// Normality diagnostics and plot data.
    Diagnostics {
        /// Calibration written with --keep-samples.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Stack whose K function and vine traces are exported.
        #[arg(long)]
        stack: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Comma-separated model names.
    #[arg(long, value_delimiter = ',', default_values_t = ["PV", "HC1", "HC2", "CL1", "CL2", "CL3"].map(String::from))]
    pub models: Vec<String>,
    /// Existing calibration (power only); otherwise one is computed.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Calibration replications when computing one (defaults to -n).
    #[arg(long)]
    pub n_calibration: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value = "slice_index")]
    pub slice_col: String,
    /// Height column; when the file has none, heights are (k + 1) * spacing.
    #[arg(long, default_value = "height")]
    pub height_col: String,
    #[arg(long, default_value = "x")]
    pub x_col: String,
    #[arg(long, default_value = "y")]
    pub y_col: String,
    #[arg(long, default_value = "label")]
    pub label_col: String,
    #[arg(long, default_value = "area")]
    pub area_col: String,
    /// Slice spacing used when there is no height column.
    #[arg(long = "slice-spacing", default_value_t = 1.0)]
    pub slice_spacing: f64,
    /// Observation window `xmin,ymin,xmax,ymax`.
    #[arg(long)]
    pub window: Option<String>,
}
