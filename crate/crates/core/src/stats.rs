//! Test statistics: total persistence per slice, vine-averaged persistence
//! and the integrated pooled Ripley K function.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::Rect;
use crate::mph::PersistenceDiagram;
use crate::tessellate::SliceStack;
use crate::vineyard::Vineyard;
use crate::{Error, Real, Result};

/// Number of points of the `r` grid on which `K` is evaluated.
pub const K_GRID: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StatisticName {
    #[serde(rename = "T_TP0")]
    TTP0,
    #[serde(rename = "T_TP1")]
    TTP1,
    #[serde(rename = "T_M0")]
    TM0,
    #[serde(rename = "T_M1")]
    TM1,
    #[serde(rename = "T_Rip")]
    TRip,
}

impl StatisticName {
    pub const ALL: [StatisticName; 5] = [Self::TTP0, Self::TTP1, Self::TM0, Self::TM1, Self::TRip];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::TTP0 => "T_TP0",
            Self::TTP1 => "T_TP1",
            Self::TM0 => "T_M0",
            Self::TM1 => "T_M1",
            Self::TRip => "T_Rip",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.as_str().eq_ignore_ascii_case(s))
    }

    /// Statistics that need vines, undefined for a single slice.
    pub fn is_longitudinal(&self) -> bool {
        matches!(self, Self::TM0 | Self::TM1)
    }
}

impl fmt::Display for StatisticName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub name: StatisticName,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_rip: Option<f64>,
}

fn check_area<T: Real>(area: T) -> Result<()> {
    if !(area > T::zero()) || !area.is_finite() {
        return Err(Error::domain(format!("normalization area must be > 0, got {area}")));
    }
    Ok(())
}

fn tp_name(q: u8) -> StatisticName {
    if q == 0 {
        StatisticName::TTP0
    } else {
        StatisticName::TTP1
    }
}

fn m_name(q: u8) -> StatisticName {
    if q == 0 {
        StatisticName::TM0
    } else {
        StatisticName::TM1
    }
}

/// Slice-averaged total persistence `(1/H) Σ_h (1/|W|) Σ_i (D_i − B_i)`.
pub fn t_tp<T: Real>(diagrams: &[PersistenceDiagram<T>], q: u8, area: T) -> Result<StatisticValue> {
    check_area(area)?;
    if diagrams.is_empty() {
        return Err(Error::domain("total persistence needs at least one diagram"));
    }
    let sum = diagrams.iter().fold(T::zero(), |a, d| a + d.total_persistence(q));
    let value = sum / (area * T::of(diagrams.len() as f64));
    Ok(StatisticValue {
        name: tp_name(q),
        value: value.as_f64(),
        q: Some(q),
        area: Some(area.as_f64()),
        r_rip: None,
    })
}

/// Vine-averaged persistence `(1/|W|) Σ_vines mean lifetime`. An empty
/// vineyard gives 0.
pub fn t_m<T: Real>(v: &Vineyard<T>, q: u8, area: T) -> Result<StatisticValue> {
    check_area(area)?;
    let sum = v.dim(q).fold(T::zero(), |a, vine| a + vine.mean_lifetime());
    Ok(StatisticValue {
        name: m_name(q),
        value: (sum / area).as_f64(),
        q: Some(q),
        area: Some(area.as_f64()),
        r_rip: None,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCorrection {
    /// Ripley's isotropic correction.
    #[default]
    Isotropic,
    Translation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Slice weights `n(n − 1)`.
    #[default]
    PairCount,
    Equal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RipleyOptions {
    pub edge_correction: EdgeCorrection,
    pub pooling: Pooling,
}

/// `K` evaluated on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFunction {
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    /// Slices skipped for having fewer than two points.
    pub skipped: Vec<usize>,
}

impl KFunction {
    /// Trapezoidal integral over the whole grid.
    pub fn integral(&self) -> f64 {
        self.r
            .windows(2)
            .zip(self.k.windows(2))
            .map(|(r, k)| 0.5 * (r[1] - r[0]) * (k[0] + k[1]))
            .sum()
    }
}

/// Fraction of the circle of radius `d` around a point inside the rectangle,
/// given the point's distances to the four sides (left, bottom, right, top).
fn circle_fraction_inside(sides: [f64; 4], d: f64) -> f64 {
    // Outward normal directions of left, bottom, right and top.
    const NORMAL: [f64; 4] = [PI, 1.5 * PI, 0.0, 0.5 * PI];
    let tau = 2.0 * PI;
    let mut arcs: Vec<(f64, f64)> = Vec::with_capacity(8);
    for (e, th) in sides.into_iter().zip(NORMAL) {
        if e >= d {
            continue;
        }
        let half = (e.max(0.0) / d).acos();
        let lo = (th - half).rem_euclid(tau);
        let hi = lo + 2.0 * half;
        if hi > tau {
            arcs.push((lo, tau));
            arcs.push((0.0, hi - tau));
        } else {
            arcs.push((lo, hi));
        }
    }
    if arcs.is_empty() {
        return 1.0;
    }
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut outside = 0.0;
    let (mut cur_lo, mut cur_hi) = arcs[0];
    for &(lo, hi) in &arcs[1..] {
        if lo > cur_hi {
            outside += cur_hi - cur_lo;
            cur_lo = lo;
            cur_hi = hi;
        } else {
            cur_hi = cur_hi.max(hi);
        }
    }
    outside += cur_hi - cur_lo;
    (1.0 - outside / tau).max(0.0)
}

/// Per-slice `K` estimate accumulated as weighted pair counts in the bins of
/// the grid; returns `Σ_{i≠j} w_ij 1{d_ij ≤ r_k}` for every grid point.
fn weighted_pair_counts<T: Real>(points: &[crate::geom::Point2<T>], w: &Rect<T>, r: &[f64], ec: EdgeCorrection) -> Vec<f64> {
    let r_max = *r.last().expect("non-empty grid");
    let step = if r.len() > 1 { r[1] - r[0] } else { r_max };
    let mut bins = vec![0.0; r.len()];
    let (ww, wh) = (w.width().as_f64(), w.height().as_f64());
    let sides: Vec<[f64; 4]> = points.iter().map(|p| w.side_distances(p).map(|s| s.as_f64())).collect();
    for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let (dx, dy) = ((p.x - q.x).as_f64(), (p.y - q.y).as_f64());
            let d = (dx * dx + dy * dy).sqrt();
            if d > r_max {
                continue;
            }
            let weight = match ec {
                EdgeCorrection::Isotropic => {
                    if d == 0.0 {
                        1.0
                    } else {
                        1.0 / circle_fraction_inside(sides[i], d)
                    }
                }
                EdgeCorrection::Translation => ww * wh / ((ww - dx.abs()) * (wh - dy.abs())),
            };
            let k = ((d / step).ceil() as usize).min(r.len() - 1);
            // Guard against rounding putting d just above r[k].
            let k = if r[k] < d { (k + 1).min(r.len() - 1) } else { k };
            bins[k] += weight;
        }
    }
    let mut acc = 0.0;
    for b in &mut bins {
        acc += *b;
        *b = acc;
    }
    bins
}

/// Pooled Ripley `K` of the slices of `stack` on a grid of [`K_GRID`] points
/// in `[0, r_max]`.
pub fn ripley_pooled<T: Real>(stack: &SliceStack<T>, r_max: f64, opts: RipleyOptions) -> Result<KFunction> {
    let w = stack.window;
    let half_side = 0.5 * w.width().min(w.height()).as_f64();
    if !(r_max > 0.0 && r_max < half_side) {
        return Err(Error::domain(format!(
            "r_max must lie in (0, {half_side}), got {r_max}"
        )));
    }
    let r: Vec<f64> = (0..K_GRID).map(|k| r_max * k as f64 / (K_GRID - 1) as f64).collect();
    let area = w.area().as_f64();
    let mut pooled = vec![0.0; K_GRID];
    let mut total_weight = 0.0;
    let mut skipped = Vec::new();
    for (s_idx, s) in stack.slices.iter().enumerate() {
        let n = s.len();
        if n < 2 {
            skipped.push(s_idx);
            continue;
        }
        let pairs = (n * (n - 1)) as f64;
        let counts = weighted_pair_counts(&s.points, &w, &r, opts.edge_correction);
        // K_h = |W| / (n(n-1)) * counts; weight n(n-1) or 1.
        let weight = match opts.pooling {
            Pooling::PairCount => pairs,
            Pooling::Equal => 1.0,
        };
        for (p, c) in pooled.iter_mut().zip(counts) {
            *p += weight * area * c / pairs;
        }
        total_weight += weight;
    }
    if total_weight == 0.0 {
        return Err(Error::domain("no slice has two or more points"));
    }
    for p in &mut pooled {
        *p /= total_weight;
    }
    Ok(KFunction { r, k: pooled, skipped })
}

/// `∫_0^{r_Rip} K_pool(r) dr` by the trapezoid rule.
pub fn t_rip<T: Real>(stack: &SliceStack<T>, r_rip: f64, opts: RipleyOptions) -> Result<StatisticValue> {
    let k = ripley_pooled(stack, r_rip, opts)?;
    Ok(StatisticValue {
        name: StatisticName::TRip,
        value: k.integral(),
        q: None,
        area: None,
        r_rip: Some(r_rip),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;
    use crate::mph::{FeatureKey, PersistenceRecord};
    use crate::rng::rng_from_seed;
    use crate::tessellate::SliceCloud;
    use crate::vineyard::{Provenance, Vine, VineEntry};
    use rand::Rng;

    fn rec(q: u8, b: f64, d: f64) -> PersistenceRecord<f64> {
        PersistenceRecord {
            dim: q,
            birth: b,
            death: d,
            key: if q == 0 { FeatureKey::Point(0) } else { FeatureKey::Edge(0, 1) },
            size: 0.0,
        }
    }

    #[test]
    fn tp_arithmetic() {
        let d = [PersistenceDiagram {
            records: vec![rec(1, 0.5, 0.7), rec(0, 0.0, 3.0)],
        }];
        assert!((t_tp(&d, 1, 4.0).unwrap().value - 0.05).abs() < 1e-15);
        let empty = [PersistenceDiagram::<f64>::default(), PersistenceDiagram::default()];
        assert_eq!(t_tp(&empty, 0, 1.0).unwrap().value, 0.0);
        assert!(t_tp::<f64>(&[], 0, 1.0).is_err());
        assert!(t_tp(&d, 0, 0.0).is_err());
    }

    #[test]
    fn tp_scales_with_area() {
        let d = [PersistenceDiagram {
            records: vec![rec(1, 0.25, 0.7), rec(1, 0.1, 0.3)],
        }];
        let a = t_tp(&d, 1, 3.0).unwrap().value;
        let b = t_tp(&d, 1, 6.0).unwrap().value;
        assert_eq!(a, 2.0 * b);
    }

    fn vineyard(vines: Vec<Vec<(usize, f64, f64)>>) -> Vineyard<f64> {
        Vineyard {
            h: 9,
            provenance: Provenance::GroundTruth,
            vines: vines
                .into_iter()
                .enumerate()
                .map(|(i, e)| Vine {
                    dim: 1,
                    key: FeatureKey::Edge(i as u64, i as u64 + 1),
                    entries: e
                        .into_iter()
                        .map(|(slice, birth, death)| VineEntry { slice, birth, death })
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn m_arithmetic() {
        let v = vineyard(vec![vec![(0, 0.0, 0.2), (1, 0.1, 0.5)]]);
        assert!((t_m(&v, 1, 10.0).unwrap().value - 0.03).abs() < 1e-15);
        assert_eq!(t_m(&v, 0, 10.0).unwrap().value, 0.0);
    }

    #[test]
    fn constant_vine_matches_tp() {
        let v = vineyard(vec![(0..9).map(|k| (k, 0.2, 0.9)).collect()]);
        let d: Vec<_> = (0..9)
            .map(|_| PersistenceDiagram {
                records: vec![rec(1, 0.2, 0.9)],
            })
            .collect();
        let a = t_m(&v, 1, 7.0).unwrap().value;
        let b = t_tp(&d, 1, 7.0).unwrap().value;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn circle_fraction_cases() {
        assert_eq!(circle_fraction_inside([5.0; 4], 1.0), 1.0);
        // On an edge: half the circle.
        assert!((circle_fraction_inside([0.0, 5.0, 5.0, 5.0], 1.0) - 0.5).abs() < 1e-12);
        // At a corner: a quarter.
        assert!((circle_fraction_inside([0.0, 0.0, 5.0, 5.0], 1.0) - 0.25).abs() < 1e-12);
        // Near a corner with overlapping arcs the union is counted once.
        let f = circle_fraction_inside([0.1, 0.1, 5.0, 5.0], 1.0);
        assert!(f > 0.25 && f < 0.5);
    }

    fn poisson_slice(rng: &mut crate::rng::SimRng, side: f64, n: usize) -> SliceCloud<f64> {
        let h = side / 2.0;
        SliceCloud {
            height: 1.0,
            points: (0..n)
                .map(|_| Point2::new(rng.random_range(-h..h), rng.random_range(-h..h)))
                .collect(),
            labels: None,
            areas: None,
        }
    }

    #[test]
    fn csr_k_is_pi_r_squared() {
        let mut rng = rng_from_seed(11);
        let side = 40.0;
        let r_eval = 5.0;
        let vals: Vec<f64> = (0..200)
            .map(|_| {
                let s = SliceStack {
                    window: Rect::centered_square(side),
                    slices: vec![poisson_slice(&mut rng, side, 60)],
                };
                let k = ripley_pooled(&s, r_eval, RipleyOptions::default()).unwrap();
                *k.k.last().unwrap()
            })
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let target = PI * r_eval * r_eval;
        assert!((mean - target).abs() < 3.0 * sd / n.sqrt(), "mean {mean} target {target}");
    }

    #[test]
    fn pooled_single_slice_and_monotone() {
        let mut rng = rng_from_seed(3);
        let side = 30.0;
        let one = SliceStack {
            window: Rect::centered_square(side),
            slices: vec![poisson_slice(&mut rng, side, 40)],
        };
        let mut two = one.clone();
        two.slices.push(SliceCloud {
            height: 2.0,
            points: vec![Point2::new(0.0, 0.0)],
            labels: None,
            areas: None,
        });
        for ec in [EdgeCorrection::Isotropic, EdgeCorrection::Translation] {
            let opts = RipleyOptions {
                edge_correction: ec,
                pooling: Pooling::PairCount,
            };
            let a = ripley_pooled(&one, 6.0, opts).unwrap();
            let b = ripley_pooled(&two, 6.0, opts).unwrap();
            assert_eq!(a.k, b.k);
            assert_eq!(b.skipped, vec![1]);
            assert!(a.k.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(ripley_pooled(&one, 20.0, RipleyOptions::default()).is_err());
        let lonely = SliceStack {
            window: one.window,
            slices: vec![two.slices[1].clone()],
        };
        assert!(ripley_pooled(&lonely, 5.0, RipleyOptions::default()).is_err());
    }

    #[test]
    fn csr_t_rip_is_pi_r_cubed_over_three() {
        let mut rng = rng_from_seed(5);
        let side = 40.0;
        let r = 4.0;
        let vals: Vec<f64> = (0..200)
            .map(|_| {
                let s = SliceStack {
                    window: Rect::centered_square(side),
                    slices: (0..3).map(|_| poisson_slice(&mut rng, side, 50)).collect(),
                };
                t_rip(&s, r, RipleyOptions::default()).unwrap().value
            })
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let target = PI * r.powi(3) / 3.0;
        assert!((mean - target).abs() < 4.0 * sd / n.sqrt(), "mean {mean} target {target}");
    }
}
