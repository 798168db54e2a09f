//! Vines: persistence features followed across slices.
//!
//! Degree-0 features are keyed by the label of their representative point,
//! degree-1 features by the label pair of their birth edge. Unlabelled
//! stacks can be labelled by matching mutual nearest neighbours in adjacent
//! slices.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::mph::{FeatureKey, PersistenceDiagram};
use crate::tessellate::SliceStack;
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VineEntry<T> {
    pub slice: usize,
    pub birth: T,
    pub death: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vine<T> {
    pub dim: u8,
    pub key: FeatureKey,
    /// Entries sorted by slice index, at most one per slice.
    pub entries: Vec<VineEntry<T>>,
}

impl<T: Real> Vine<T> {
    /// Mean of `death - birth` over the slices where the vine is present.
    pub fn mean_lifetime(&self) -> T {
        let n = T::of(self.entries.len() as f64);
        self.entries.iter().fold(T::zero(), |a, e| a + (e.death - e.birth)) / n
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    #[default]
    GroundTruth,
    Reconstructed { threshold: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vineyard<T> {
    /// Number of slices.
    pub h: usize,
    pub provenance: Provenance,
    /// Sorted by `(dim, key)`.
    pub vines: Vec<Vine<T>>,
}

impl<T: Real> Vineyard<T> {
    pub fn dim(&self, q: u8) -> impl Iterator<Item = &Vine<T>> + '_ {
        self.vines.iter().filter(move |v| v.dim == q)
    }
}

/// How the length of a vine is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VineLength {
    /// Number of slices minus one, so a single-slice vine has length 0.
    #[default]
    EdgeCount,
    /// Number of slices.
    SliceCount,
}

/// Groups the per-slice diagram records of a labelled stack into vines.
pub fn build_vines<T: Real>(
    stack: &SliceStack<T>,
    diagrams: &[PersistenceDiagram<T>],
    provenance: Provenance,
) -> Result<Vineyard<T>> {
    if diagrams.len() != stack.slices.len() {
        return Err(Error::Integrity(format!(
            "{} diagrams for {} slices",
            diagrams.len(),
            stack.slices.len()
        )));
    }
    let mut vines: BTreeMap<(u8, FeatureKey), Vec<VineEntry<T>>> = BTreeMap::new();
    for (k, (slice, pd)) in stack.slices.iter().zip(diagrams).enumerate() {
        let labels = slice
            .labels
            .as_ref()
            .ok_or_else(|| Error::domain(format!("slice {k} has no labels")))?;
        let present: HashSet<u64> = labels.iter().copied().collect();
        for r in &pd.records {
            let (a, b) = r.key.parts();
            if r.dim != r.key.dim() || !present.contains(&a) || b.is_some_and(|b| !present.contains(&b)) {
                return Err(Error::Integrity(format!("slice {k}: key {:?} does not match the slice labels", r.key)));
            }
            let entries = vines.entry((r.dim, r.key)).or_default();
            if entries.last().is_some_and(|e| e.slice == k) {
                return Err(Error::Integrity(format!("slice {k}: duplicate key {:?}", r.key)));
            }
            entries.push(VineEntry {
                slice: k,
                birth: r.birth,
                death: r.death,
            });
        }
    }
    Ok(Vineyard {
        h: stack.slices.len(),
        provenance,
        vines: vines
            .into_iter()
            .map(|((dim, key), entries)| Vine { dim, key, entries })
            .collect(),
    })
}

/// Mean and sample standard deviation of the degree-`q` vine lengths, or
/// `None` when there are no such vines.
pub fn vine_length_stats<T: Real>(v: &Vineyard<T>, q: u8, convention: VineLength) -> Option<(f64, f64)> {
    let offset = match convention {
        VineLength::EdgeCount => 1.0,
        VineLength::SliceCount => 0.0,
    };
    let lens: Vec<f64> = v.dim(q).map(|v| v.entries.len() as f64 - offset).collect();
    if lens.is_empty() {
        return None;
    }
    let n = lens.len() as f64;
    let mean = lens.iter().sum::<f64>() / n;
    let sd = if lens.len() < 2 {
        0.0
    } else {
        (lens.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, sd))
}

/// Mean over slices of the distance from each point to its nearest neighbour
/// in the same slice.
pub fn mean_nn_distance<T: Real>(stack: &SliceStack<T>) -> Option<T> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for s in &stack.slices {
        if s.len() < 2 {
            continue;
        }
        for (i, p) in s.points.iter().enumerate() {
            let d2 = s
                .points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.dist2(q))
                .fold(T::infinity(), T::min);
            sum = sum + d2.sqrt();
            count += 1;
        }
    }
    (count > 0).then(|| sum / T::of(count as f64))
}

/// Default matching threshold as a multiple of the mean within-slice
/// nearest-neighbour distance.
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 0.3;

/// [`DEFAULT_THRESHOLD_FACTOR`] times the mean within-slice nearest-neighbour distance.
pub fn default_threshold<T: Real>(stack: &SliceStack<T>) -> T {
    mean_nn_distance(stack).map_or(T::zero(), |d| d * T::of(DEFAULT_THRESHOLD_FACTOR))
}

fn nearest<T: Real>(p: &crate::geom::Point2<T>, pts: &[crate::geom::Point2<T>]) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (j, q) in pts.iter().enumerate() {
        let d = p.dist2(q);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((j, d));
        }
    }
    best
}

/// Labels an unlabelled stack. Slice 0 gets labels `0..n`; a point in slice
/// `k + 1` inherits the label of a point in slice `k` iff the two are mutual
/// nearest neighbours and at most `threshold` apart. Every other point gets a
/// fresh label.
pub fn reconstruct_labels<T: Real>(stack: &SliceStack<T>, threshold: T) -> Result<SliceStack<T>> {
    if !(threshold > T::zero()) {
        return Err(Error::config(format!("reconstruction threshold must be > 0, got {threshold}")));
    }
    let t2 = threshold * threshold;
    let mut out = stack.clone();
    let mut next = 0u64;
    let mut fresh = || {
        next += 1;
        next - 1
    };
    for k in 0..out.slices.len() {
        let labels: Vec<u64> = if k == 0 {
            (0..out.slices[0].len()).map(|_| fresh()).collect()
        } else {
            let prev = &out.slices[k - 1];
            let prev_labels = prev.labels.as_ref().expect("previous slice labelled");
            let cur = &out.slices[k];
            let back: Vec<Option<(usize, T)>> = prev.points.iter().map(|p| nearest(p, &cur.points)).collect();
            cur.points
                .iter()
                .enumerate()
                .map(|(j, p)| match nearest(p, &prev.points) {
                    Some((i, d2)) if d2 <= t2 && back[i].is_some_and(|(jj, _)| jj == j) => prev_labels[i],
                    _ => fresh(),
                })
                .collect()
        };
        out.slices[k].labels = Some(labels);
    }
    Ok(out)
}

/// Link-level comparison of a reconstructed labelling with the truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionScore {
    /// `1 - recall`.
    pub error: f64,
    pub recall: f64,
    pub precision: f64,
    pub true_links: usize,
    pub estimated_links: usize,
}

fn links<T: Real>(stack: &SliceStack<T>) -> Result<HashSet<(usize, usize, usize)>> {
    let mut out = HashSet::new();
    for k in 1..stack.slices.len() {
        let (a, b) = (&stack.slices[k - 1], &stack.slices[k]);
        let (la, lb) = match (&a.labels, &b.labels) {
            (Some(la), Some(lb)) => (la, lb),
            _ => return Err(Error::domain("link comparison needs labelled stacks")),
        };
        let pos: std::collections::HashMap<u64, usize> = la.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        for (j, l) in lb.iter().enumerate() {
            if let Some(&i) = pos.get(l) {
                out.insert((k - 1, i, j));
            }
        }
    }
    Ok(out)
}

/// Fraction of adjacent-slice links of `truth` missed by `estimate`. Points
/// are identified by their index in each slice, so both stacks must share
/// the same geometry.
pub fn reconstruction_error<T: Real>(truth: &SliceStack<T>, estimate: &SliceStack<T>) -> Result<ReconstructionScore> {
    if truth.slices.len() != estimate.slices.len() {
        return Err(Error::domain(format!(
            "slice counts differ: {} vs {}",
            truth.slices.len(),
            estimate.slices.len()
        )));
    }
    if truth.slices.iter().zip(&estimate.slices).any(|(a, b)| a.len() != b.len()) {
        return Err(Error::domain("stacks differ in per-slice point counts"));
    }
    let t = links(truth)?;
    let e = links(estimate)?;
    let hit = t.intersection(&e).count();
    let recall = if t.is_empty() { 1.0 } else { hit as f64 / t.len() as f64 };
    let precision = if e.is_empty() { 1.0 } else { hit as f64 / e.len() as f64 };
    Ok(ReconstructionScore {
        error: 1.0 - recall,
        recall,
        precision,
        true_links: t.len(),
        estimated_links: e.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point2, Rect};
    use crate::mph::PersistenceRecord;
    use crate::tessellate::SliceCloud;

    fn slice(h: f64, pts: &[(f64, f64)], labels: Option<Vec<u64>>) -> SliceCloud<f64> {
        SliceCloud {
            height: h,
            points: pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            labels,
            areas: None,
        }
    }

    fn stack(slices: Vec<SliceCloud<f64>>) -> SliceStack<f64> {
        SliceStack {
            window: Rect::centered_square(20.0),
            slices,
        }
    }

    fn hole(a: u64, b: u64, birth: f64, death: f64) -> PersistenceRecord<f64> {
        PersistenceRecord {
            dim: 1,
            birth,
            death,
            key: FeatureKey::Edge(a, b),
            size: 1.0,
        }
    }

    #[test]
    fn hole_vine_spans_its_slices() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        let s = stack((0..7).map(|k| slice(k as f64 + 1.0, &pts, Some(vec![0, 1, 2]))).collect());
        let diagrams: Vec<PersistenceDiagram<f64>> = (0..7)
            .map(|k| PersistenceDiagram {
                records: if (3..=5).contains(&k) { vec![hole(0, 1, 0.5, 0.7)] } else { vec![] },
            })
            .collect();
        let v = build_vines(&s, &diagrams, Provenance::GroundTruth).unwrap();
        assert_eq!(v.vines.len(), 1);
        let slices: Vec<usize> = v.vines[0].entries.iter().map(|e| e.slice).collect();
        assert_eq!(slices, vec![3, 4, 5]);
        assert_eq!(vine_length_stats(&v, 1, VineLength::EdgeCount), Some((2.0, 0.0)));
        assert_eq!(vine_length_stats(&v, 1, VineLength::SliceCount), Some((3.0, 0.0)));
        assert_eq!(vine_length_stats(&v, 0, VineLength::EdgeCount), None);
    }

    #[test]
    fn unknown_key_is_integrity_error() {
        let s = stack(vec![slice(1.0, &[(0.0, 0.0), (1.0, 1.0)], Some(vec![4, 5]))]);
        let d = vec![PersistenceDiagram {
            records: vec![hole(4, 9, 0.1, 0.2)],
        }];
        assert!(matches!(build_vines(&s, &d, Provenance::GroundTruth), Err(Error::Integrity(_))));
        assert!(matches!(build_vines(&s, &[], Provenance::GroundTruth), Err(Error::Integrity(_))));
    }

    #[test]
    fn identical_slices_propagate_labels() {
        let pts = [(0.0, 0.0), (3.0, 1.0), (-2.0, 4.0)];
        let s = stack(vec![slice(1.0, &pts, None), slice(2.0, &pts, None)]);
        let r = reconstruct_labels(&s, 0.1).unwrap();
        assert_eq!(r.slices[0].labels, r.slices[1].labels);
    }

    #[test]
    fn tiny_threshold_gives_fresh_labels() {
        let a = [(0.0, 0.0), (3.0, 1.0)];
        let b = [(0.1, 0.0), (3.0, 1.1)];
        let s = stack(vec![slice(1.0, &a, None), slice(2.0, &b, None)]);
        let r = reconstruct_labels(&s, 1e-6).unwrap();
        assert_eq!(r.slices[1].labels, Some(vec![2, 3]));
        assert!(reconstruct_labels(&s, 0.0).is_err());
    }

    #[test]
    fn reconstruction_scores() {
        let a = [(0.0, 0.0), (3.0, 1.0)];
        let b = [(0.1, 0.0), (3.0, 1.1)];
        let truth = stack(vec![slice(1.0, &a, Some(vec![0, 1])), slice(2.0, &b, Some(vec![0, 1]))]);
        let same = reconstruction_error(&truth, &truth).unwrap();
        assert_eq!(same.error, 0.0);
        assert_eq!(same.precision, 1.0);
        let fresh = stack(vec![slice(1.0, &a, Some(vec![0, 1])), slice(2.0, &b, Some(vec![2, 3]))]);
        assert_eq!(reconstruction_error(&truth, &fresh).unwrap().error, 1.0);
        let short = stack(vec![slice(1.0, &a, Some(vec![0, 1]))]);
        assert!(reconstruction_error(&truth, &short).is_err());
    }
}
