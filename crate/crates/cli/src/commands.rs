use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use slicevine::config::StudyConfig;
use slicevine::geom::{Point2, Rect};
use slicevine::gof::{
    calibrate_null, normality_diagnostics, power_experiment, single_slice_experiment, z_test, NullCalibration,
};
use slicevine::io::{
    read_json, read_stack_csv, read_text, write_columns_csv, write_diagrams_csv, write_json, write_stack_csv,
    write_vines_csv, Metadata, StackSchema,
};
use slicevine::mph::diagram;
use slicevine::pipeline::{analyze, simulate_stack, vineyard_of};
use slicevine::pointproc::{CountMatching, ProcessKind, ProcessSpec, NULL_INTENSITY};
use slicevine::rng::{derive_seed, tag};
use slicevine::stats::ripley_pooled;
use slicevine::tessellate::SliceStack;
use slicevine::vineyard::{VineLength, Vineyard};
use slicevine::VERSION;

use crate::args::{Cli, Command, IngestArgs, PowerArgs, ProcessArg, StudyArgs};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(slicevine::Error::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let cfg = build_config(&cli.study)?;
    let matching = (cli.study.match_expected_count, cli.study.count_matching);
    match cli.command {
        Command::Simulate { out, generators } => simulate(&cfg, &out, generators.as_deref()),
        Command::Diagram { stack, out } => cmd_diagram(&cfg, &stack, &out),
        Command::Vineyard { stack, out, vines_csv } => cmd_vineyard(&cfg, &stack, &out, vines_csv.as_deref()),
        Command::Calibrate { out, keep_samples } => calibrate(&cfg, &out, keep_samples),
        Command::Test { calibration, stack, out } => test(&cfg, &calibration, stack.as_deref(), out.as_deref()),
        Command::Power(a) => power(&cfg, &a, matching, false),
        Command::SingleSlice(a) => power(&cfg, &a, matching, true),
        Command::Ingest(a) => ingest(&a),
        Command::Diagnostics {
            calibration,
            stack,
            out_dir,
        } => diagnostics(&cfg, calibration.as_deref(), stack.as_deref(), &out_dir),
    }
}

fn build_process(a: &StudyArgs, base: &ProcessSpec) -> Result<ProcessSpec> {
    let mut p = match (&a.model, a.process) {
        (Some(name), _) => ProcessSpec::preset(name)
            .ok_or_else(|| slicevine::Error::Config(format!("unknown model '{name}'")))?,
        (None, Some(kind)) => {
            let want = match kind {
                ProcessArg::Poisson => ProcessKind::Poisson,
                ProcessArg::MaternHardcore => ProcessKind::MaternHardcore,
                ProcessArg::MaternCluster => ProcessKind::MaternCluster,
            };
            if want == base.kind {
                base.clone()
            } else {
                let mut p = ProcessSpec::poisson(NULL_INTENSITY);
                p.kind = want;
                p
            }
        }
        (None, None) => base.clone(),
    };
    if let Some(v) = a.intensity {
        p.intensity = v;
    }
    if let Some(v) = a.n_cl {
        p.n_cl = v;
    }
    if let Some(v) = a.lambda_cl {
        p.lambda_cl = v;
    }
    if let Some(v) = a.r {
        p.r = v;
    }
    if a.match_expected_count {
        p.match_expected_count = true;
    }
    if let Some(m) = a.count_matching {
        p.count_matching = m;
    }
    Ok(p)
}

/// The config file (or the defaults) with command-line overrides applied.
pub fn build_config(a: &StudyArgs) -> Result<StudyConfig> {
    let mut c: StudyConfig = match &a.config {
        Some(path) => read_json(path).with_context(|| format!("reading config {}", path.display()))?,
        None => StudyConfig::default(),
    };
    c.process = build_process(a, &c.process)?;
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = a.$field {
                c.$field = v;
            })*
        };
    }
    set!(side, height, eta0, cluster_size, hole_size_at, r_rip, area, edge_correction, pooling);
    set!(vine_length, label_mode, alpha, sidedness, replications, seed);
    if let Some(v) = a.slices {
        c.layout.count = v;
    }
    if let Some(v) = a.spacing {
        c.layout.spacing = v;
    }
    if let Some(m) = a.m {
        c.m = m;
        c.tau = a.tau.unwrap_or(m);
    } else if let Some(t) = a.tau {
        c.tau = t;
    }
    if a.reconstruction_threshold.is_some() {
        c.reconstruction_threshold = a.reconstruction_threshold;
    }
    if a.minus_sampling {
        c.minus_sampling = true;
    }
    c.validate()?;
    Ok(c)
}

fn metadata(cfg: &StudyConfig, seed: u64) -> Metadata {
    Metadata::new()
        .with("config_hash", cfg.config_hash())
        .with("seed", seed)
        .with("version", VERSION)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value).with_context(|| format!("writing {}", path.display()))
}

fn load_stack(path: &Path) -> Result<(SliceStack<f64>, Metadata)> {
    let text = read_text(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(read_stack_csv(&text, &path.display().to_string(), &StackSchema::default(), None)?)
}

/// The root seed recorded in a file, falling back to the configured one.
fn recorded_seed(meta: &Metadata, cfg: &StudyConfig) -> u64 {
    meta.get("seed").and_then(|s| s.parse().ok()).unwrap_or(cfg.seed)
}

fn simulate(cfg: &StudyConfig, out: &Path, generators: Option<&Path>) -> Result<()> {
    let (gens, stack) = simulate_stack(cfg, &cfg.process, cfg.seed)?;
    let process = serde_json::to_string(&cfg.process)?;
    let meta = metadata(cfg, cfg.seed).with("process", process);
    let mut w = create(out)?;
    write_stack_csv(&mut w, &stack, &meta)?;
    w.flush()?;
    if let Some(path) = generators {
        let col = |f: &dyn Fn(usize) -> f64| (0..gens.len()).map(f).collect::<Vec<f64>>();
        let label = col(&|i| gens.labels[i] as f64);
        let x = col(&|i| gens.points[i].x);
        let y = col(&|i| gens.points[i].y);
        let z = col(&|i| gens.points[i].z);
        let mut w = create(path)?;
        write_columns_csv(&mut w, &[("label", &label), ("x", &x), ("y", &y), ("z", &z)], &meta)?;
        w.flush()?;
    }
    eprintln!(
        "{} generators, {} slices, {} section points -> {}",
        gens.len(),
        stack.slices.len(),
        stack.total_points(),
        out.display()
    );
    Ok(())
}

fn cmd_diagram(cfg: &StudyConfig, stack_path: &Path, out: &Path) -> Result<()> {
    let (stack, meta) = load_stack(stack_path)?;
    let opts = cfg.mph_options();
    let diagrams = stack
        .slices
        .iter()
        .map(|s| diagram(&s.points, s.labels.as_deref(), &opts))
        .collect::<slicevine::Result<Vec<_>>>()?;
    let mut w = create(out)?;
    write_diagrams_csv(&mut w, &diagrams, &metadata(cfg, recorded_seed(&meta, cfg)))?;
    w.flush()?;
    let n0: usize = diagrams.iter().map(|d| d.count(0)).sum();
    let n1: usize = diagrams.iter().map(|d| d.count(1)).sum();
    eprintln!("{n0} degree-0 and {n1} degree-1 features -> {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct VineyardFile<'a> {
    config_hash: String,
    seed: u64,
    version: &'a str,
    vineyard: &'a Vineyard<f64>,
}

fn cmd_vineyard(cfg: &StudyConfig, stack_path: &Path, out: &Path, vines_csv: Option<&Path>) -> Result<()> {
    let (stack, meta) = load_stack(stack_path)?;
    let seed = recorded_seed(&meta, cfg);
    let (_, _, vineyard) = vineyard_of(cfg, &stack)?;
    save_json(
        out,
        &VineyardFile {
            config_hash: cfg.config_hash(),
            seed,
            version: VERSION,
            vineyard: &vineyard,
        },
    )?;
    if let Some(path) = vines_csv {
        let mut w = create(path)?;
        write_vines_csv(&mut w, &vineyard, cfg.vine_length == VineLength::EdgeCount, &metadata(cfg, seed))?;
        w.flush()?;
    }
    eprintln!(
        "{} vines ({} degree 0, {} degree 1) -> {}",
        vineyard.vines.len(),
        vineyard.dim(0).count(),
        vineyard.dim(1).count(),
        out.display()
    );
    Ok(())
}

fn calibrate(cfg: &StudyConfig, out: &Path, keep: bool) -> Result<()> {
    let cal = calibrate_null(cfg, cfg.replications, cfg.seed, keep)?;
    save_json(out, &cal)?;
    println!("{:<8}{:>14}{:>14}", "Stat", "mean", "sd");
    for e in &cal.entries {
        println!("{:<8}{:>14.6}{:>14.6}", e.name.as_str(), e.mean, e.sd);
    }
    eprintln!("{} replications -> {}", cal.replications, out.display());
    Ok(())
}

fn load_calibration(path: &Path) -> Result<NullCalibration> {
    read_json(path).with_context(|| format!("reading calibration {}", path.display()))
}

fn test(cfg: &StudyConfig, calibration: &Path, stack: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let cal = load_calibration(calibration)?;
    let (stack, seed) = match stack {
        Some(path) => {
            let (s, meta) = load_stack(path)?;
            let seed = meta.get("seed").and_then(|s| s.parse().ok());
            if !s.is_labeled() && cfg.label_mode == slicevine::config::LabelMode::GroundTruth {
                eprintln!("note: the stack has no labels; vines are reconstructed");
            }
            (s, seed)
        }
        None => {
            let seed = derive_seed(cfg.seed, &[tag::TEST]);
            (simulate_stack(cfg, &cfg.process, seed)?.1, Some(seed))
        }
    };
    let stats = analyze(cfg, &stack)?.statistics;
    let mut report = z_test(&stats, &cfg.config_hash(), &cal, cfg.alpha, cfg.sidedness)?;
    report.observed_seed = seed;
    print!("{}", report.to_text());
    if let Some(path) = out {
        save_json(path, &report)?;
    }
    Ok(())
}

fn power(cfg: &StudyConfig, a: &PowerArgs, matching: (bool, Option<CountMatching>), single: bool) -> Result<()> {
    let models = a
        .models
        .iter()
        .map(|name| {
            let mut spec = ProcessSpec::preset(name)
                .ok_or_else(|| slicevine::Error::Config(format!("unknown model '{name}'")))?;
            spec.match_expected_count = matching.0;
            if let Some(m) = matching.1 {
                spec.count_matching = m;
            }
            Ok((name.to_ascii_uppercase(), spec))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_cal = a.n_calibration.unwrap_or(cfg.replications);
    let table = if single {
        if a.calibration.is_some() {
            bail!(slicevine::Error::Config(
                "single-slice computes its own calibration; use --n-calibration".into()
            ));
        }
        single_slice_experiment(cfg, &models, n_cal, cfg.replications, cfg.seed)?.1
    } else {
        let cal = match &a.calibration {
            Some(path) => load_calibration(path)?,
            None => calibrate_null(cfg, n_cal, derive_seed(cfg.seed, &[tag::CALIBRATION]), false)?,
        };
        power_experiment(cfg, &models, &cal, cfg.replications, cfg.seed)?
    };
    print!("{}", table.to_text());
    if let Some(path) = &a.out {
        save_json(path, &table)?;
    }
    Ok(())
}

fn parse_window(s: &str) -> Result<Rect<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| slicevine::Error::Config(format!("invalid window '{s}'")))?;
    if v.len() != 4 {
        bail!(slicevine::Error::Config(format!("window needs 4 numbers, got '{s}'")));
    }
    Ok(Rect::new(Point2::new(v[0], v[1]), Point2::new(v[2], v[3])))
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let schema = StackSchema {
        slice: a.slice_col.clone(),
        height: Some(a.height_col.clone()),
        x: a.x_col.clone(),
        y: a.y_col.clone(),
        label: Some(a.label_col.clone()),
        area: Some(a.area_col.clone()),
        spacing: a.slice_spacing,
    };
    let window = a.window.as_deref().map(parse_window).transpose()?;
    let text = read_text(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let (stack, _) = read_stack_csv(&text, &a.input.display().to_string(), &schema, window)?;
    let meta = Metadata::new()
        .with("source", a.input.display())
        .with("version", VERSION);
    let mut w = create(&a.out)?;
    write_stack_csv(&mut w, &stack, &meta)?;
    w.flush()?;
    eprintln!(
        "{} slices, {} points{} -> {}",
        stack.slices.len(),
        stack.total_points(),
        if stack.is_labeled() { ", labelled" } else { "" },
        a.out.display()
    );
    Ok(())
}

fn diagnostics(cfg: &StudyConfig, calibration: Option<&Path>, stack: Option<&Path>, out_dir: &Path) -> Result<()> {
    if calibration.is_none() && stack.is_none() {
        bail!(slicevine::Error::Config("diagnostics needs --calibration and/or --stack".into()));
    }
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    if let Some(path) = calibration {
        let cal = load_calibration(path)?;
        let meta = Metadata::new()
            .with("config_hash", &cal.config_hash)
            .with("seed", cal.root_seed)
            .with("version", VERSION);
        let entries = normality_diagnostics(&cal)?;
        println!("{:<8}{:>8}{:>12}{:>12}", "Stat", "n", "skewness", "ex.kurt");
        for e in &entries {
            println!("{:<8}{:>8}{:>12.4}{:>12.4}", e.name.as_str(), e.n, e.skewness, e.excess_kurtosis);
            let (theo, sample): (Vec<f64>, Vec<f64>) = e.qq.iter().copied().unzip();
            let mut w = create(&out_dir.join(format!("qq_{}.csv", e.name)))?;
            write_columns_csv(&mut w, &[("normal_quantile", &theo), ("sample_quantile", &sample)], &meta)?;
            w.flush()?;
            if let Some(xs) = cal.samples.as_ref().and_then(|s| s.get(&e.name)) {
                let mut sorted = xs.clone();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len() as f64;
                let ecdf: Vec<f64> = (1..=sorted.len()).map(|i| i as f64 / n).collect();
                let mut w = create(&out_dir.join(format!("ecdf_{}.csv", e.name)))?;
                write_columns_csv(&mut w, &[("value", &sorted), ("ecdf", &ecdf)], &meta)?;
                w.flush()?;
            }
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            config_hash: &'a str,
            seed: u64,
            version: &'a str,
            statistics: Vec<(&'a str, usize, f64, f64)>,
        }
        save_json(
            &out_dir.join("normality.json"),
            &Summary {
                config_hash: &cal.config_hash,
                seed: cal.root_seed,
                version: VERSION,
                statistics: entries
                    .iter()
                    .map(|e| (e.name.as_str(), e.n, e.skewness, e.excess_kurtosis))
                    .collect(),
            },
        )?;
    }
    if let Some(path) = stack {
        let (stack, meta) = load_stack(path)?;
        let meta = metadata(cfg, recorded_seed(&meta, cfg));
        let k = ripley_pooled(&stack, cfg.r_rip, cfg.ripley_options())?;
        let mut w = create(&out_dir.join("kfunction.csv"))?;
        write_columns_csv(&mut w, &[("r", &k.r), ("k", &k.k)], &meta)?;
        w.flush()?;

        let a = analyze(cfg, &stack)?;
        let mut cols: [Vec<f64>; 7] = Default::default();
        for vine in &a.vineyard.vines {
            let (ka, kb) = vine.key.parts();
            for e in &vine.entries {
                let row = [
                    vine.dim as f64,
                    ka as f64,
                    kb.map_or(f64::NAN, |b| b as f64),
                    e.slice as f64,
                    a.stack.slices[e.slice].height,
                    e.birth,
                    e.death,
                ];
                for (c, v) in cols.iter_mut().zip(row) {
                    c.push(v);
                }
            }
        }
        let names = ["dim", "key_a", "key_b", "slice_index", "height", "birth", "death"];
        let columns: Vec<(&str, &[f64])> = names.iter().zip(&cols).map(|(n, c)| (*n, c.as_slice())).collect();
        let mut w = create(&out_dir.join("vine_traces.csv"))?;
        write_columns_csv(&mut w, &columns, &meta)?;
        w.flush()?;
    }
    eprintln!("diagnostics -> {}", out_dir.display());
    Ok(())
}
