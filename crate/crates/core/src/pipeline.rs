//! One pass of the study: generators, slices, diagrams, vines, statistics.

use crate::config::{LabelMode, StudyConfig};
use crate::mph::{diagram, PersistenceDiagram};
use crate::pointproc::{PointSet3D, ProcessSpec};
use crate::rng::{derive_seed, tag};
use crate::stats::{t_m, t_rip, t_tp, StatisticValue};
use crate::tessellate::{perturb_centroids, slice_voronoi, SliceStack};
use crate::vineyard::{build_vines, default_threshold, reconstruct_labels, Provenance, Vineyard};
use crate::{Error, Result};

/// Everything computed from one slice stack.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub stack: SliceStack<f64>,
    pub diagrams: Vec<PersistenceDiagram<f64>>,
    pub vineyard: Vineyard<f64>,
    pub statistics: Vec<StatisticValue>,
}

/// Simulates the slice stack of one realization of `process`.
pub fn simulate_stack(cfg: &StudyConfig, process: &ProcessSpec, seed: u64) -> Result<(PointSet3D<f64>, SliceStack<f64>)> {
    let w = cfg.window();
    let gens = process.sample(&w, derive_seed(seed, &[tag::GENERATORS]))?;
    if gens.is_empty() {
        return Err(Error::domain("the generator process produced no points"));
    }
    let stack = slice_voronoi(&gens, &cfg.layout, &w, cfg.slice_options())?;
    let stack = perturb_centroids(&stack, cfg.eta0, derive_seed(seed, &[tag::PERTURB]))?;
    Ok((gens, stack))
}

/// Labels a stack according to the configured mode. Unlabelled stacks are
/// always reconstructed.
pub fn label_stack(cfg: &StudyConfig, stack: &SliceStack<f64>) -> Result<(SliceStack<f64>, Provenance)> {
    if cfg.label_mode == LabelMode::GroundTruth && stack.is_labeled() {
        return Ok((stack.clone(), Provenance::GroundTruth));
    }
    let bare = stack.without_labels();
    let threshold = cfg.reconstruction_threshold.unwrap_or_else(|| default_threshold(&bare));
    if !(threshold > 0.0) {
        // Fewer than two points per slice: nothing can be matched anyway.
        let labelled = reconstruct_labels(&bare, f64::MIN_POSITIVE)?;
        return Ok((labelled, Provenance::Reconstructed { threshold: 0.0 }));
    }
    Ok((reconstruct_labels(&bare, threshold)?, Provenance::Reconstructed { threshold }))
}

/// Labelled stack, diagrams and vineyard, without the statistics.
pub fn vineyard_of(
    cfg: &StudyConfig,
    stack: &SliceStack<f64>,
) -> Result<(SliceStack<f64>, Vec<PersistenceDiagram<f64>>, Vineyard<f64>)> {
    let (stack, provenance) = label_stack(cfg, stack)?;
    let opts = cfg.mph_options();
    let diagrams = stack
        .slices
        .iter()
        .map(|s| diagram(&s.points, s.labels.as_deref(), &opts))
        .collect::<Result<Vec<_>>>()?;
    let vineyard = build_vines(&stack, &diagrams, provenance)?;
    Ok((stack, diagrams, vineyard))
}

/// Diagrams, vines and statistics of a stack.
pub fn analyze(cfg: &StudyConfig, stack: &SliceStack<f64>) -> Result<Analysis> {
    let (stack, diagrams, vineyard) = vineyard_of(cfg, stack)?;
    let area = cfg.area_value();
    let mut statistics = vec![t_tp(&diagrams, 0, area)?, t_tp(&diagrams, 1, area)?];
    if stack.slices.len() > 1 {
        statistics.push(t_m(&vineyard, 0, area)?);
        statistics.push(t_m(&vineyard, 1, area)?);
    }
    statistics.push(t_rip(&stack, cfg.r_rip, cfg.ripley_options())?);
    Ok(Analysis {
        stack,
        diagrams,
        vineyard,
        statistics,
    })
}

/// Statistics of one simulated realization of `process`.
pub fn replicate(cfg: &StudyConfig, process: &ProcessSpec, seed: u64) -> Result<Vec<StatisticValue>> {
    let (_, stack) = simulate_stack(cfg, process, seed)?;
    Ok(analyze(cfg, &stack)?.statistics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::StatisticName;

    fn small() -> StudyConfig {
        StudyConfig {
            side: 60.0,
            height: 40.0,
            process: ProcessSpec::poisson(2e-3),
            ..StudyConfig::default()
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let cfg = small();
        let a = replicate(&cfg, &cfg.process, 4).unwrap();
        let b = replicate(&cfg, &cfg.process, 4).unwrap();
        assert_eq!(a, b);
        let names: Vec<_> = a.iter().map(|s| s.name).collect();
        assert_eq!(names, StatisticName::ALL);
    }

    #[test]
    fn single_slice_omits_vine_statistics() {
        let cfg = small().single_slice();
        let s = replicate(&cfg, &cfg.process, 4).unwrap();
        assert!(s.iter().all(|v| !v.name.is_longitudinal()));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn reconstructed_mode_relabels() {
        let mut cfg = small();
        cfg.label_mode = LabelMode::Reconstructed;
        let (_, stack) = simulate_stack(&cfg, &cfg.process, 2).unwrap();
        let a = analyze(&cfg, &stack).unwrap();
        assert!(matches!(a.vineyard.provenance, Provenance::Reconstructed { .. }));
        let unlabeled = analyze(&small(), &stack.without_labels()).unwrap();
        assert!(matches!(unlabeled.vineyard.provenance, Provenance::Reconstructed { .. }));
    }
}
