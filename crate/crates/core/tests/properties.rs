use proptest::prelude::*;

use slicevine::geom::{Point2, Rect};
use slicevine::io::{read_stack_csv, write_stack_csv, Metadata, StackSchema};
use slicevine::mph::{diagram, ClusterSize, MphOptions, PersistenceDiagram};
use slicevine::tessellate::{SliceCloud, SliceStack};
use slicevine::vineyard::reconstruct_labels;

fn cloud() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 1..40).prop_filter("distinct points", |v| {
        v.iter()
            .enumerate()
            .all(|(i, a)| v[..i].iter().all(|b| (a.0 - b.0).hypot(a.1 - b.1) > 1e-6))
    })
}

fn points(v: &[(f64, f64)], dx: f64, dy: f64) -> Vec<Point2<f64>> {
    v.iter().map(|&(x, y)| Point2::new(x + dx, y + dy)).collect()
}

fn close(a: &PersistenceDiagram<f64>, b: &PersistenceDiagram<f64>, tol: f64) -> bool {
    let (a, b) = (a.sorted(), b.sorted());
    a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(r, s)| {
            r.dim == s.dim
                && r.key == s.key
                && (r.birth - s.birth).abs() < tol
                && (r.death - s.death).abs() < tol
                && (r.size - s.size).abs() < tol
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_live_in_the_level_box(v in cloud(), m in 0.5..30.0f64) {
        let d = diagram(&points(&v, 0.0, 0.0), None, &MphOptions::new(m)).unwrap();
        for r in &d.records {
            prop_assert!(r.birth >= 0.0 && r.birth <= r.death && r.death <= m, "{r:?}");
        }
    }

    #[test]
    fn unbounded_clusters_are_one_per_point(v in cloud()) {
        let opts = MphOptions { cluster_size: ClusterSize::PointsOnly, ..MphOptions::new(1e6) };
        let d = diagram(&points(&v, 0.0, 0.0), None, &opts).unwrap();
        prop_assert_eq!(d.count(0), v.len());
        prop_assert_eq!(d.dim(0).filter(|r| r.death == opts.tau).count(), 1);
    }

    #[test]
    fn diagrams_are_translation_invariant(v in cloud(), dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let opts = MphOptions::new(4.0);
        let a = diagram(&points(&v, 0.0, 0.0), None, &opts).unwrap();
        let b = diagram(&points(&v, dx, dy), None, &opts).unwrap();
        prop_assert!(close(&a, &b, 1e-9), "{a:?}\n{b:?}");
    }

    #[test]
    fn single_precision_agrees(v in cloud()) {
        let a = diagram(&points(&v, 0.0, 0.0), None, &MphOptions::new(4.0)).unwrap();
        let p32: Vec<Point2<f32>> = v.iter().map(|&(x, y)| Point2::new(x as f32, y as f32)).collect();
        let b = diagram(&p32, None, &MphOptions::new(4.0f32)).unwrap();
        // Near-ties may order differently in f32, so only totals are compared.
        for q in 0..2 {
            prop_assert!((a.total_persistence(q) - b.total_persistence(q) as f64).abs() < 1e-3 * (1.0 + v.len() as f64));
        }
    }

    #[test]
    fn stack_csv_round_trips(v in cloud(), slices in 1usize..4) {
        let stack = SliceStack {
            window: Rect::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0)),
            slices: (0..slices)
                .map(|k| SliceCloud {
                    height: 0.5 + k as f64 / 3.0,
                    points: points(&v, 0.0, 0.0),
                    labels: Some((0..v.len() as u64).map(|i| 7 * i + 1).collect()),
                    areas: None,
                })
                .collect(),
        };
        let mut buf = Vec::new();
        write_stack_csv(&mut buf, &stack, &Metadata::default()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (back, _) = read_stack_csv(&text, "mem", &StackSchema::default(), None).unwrap();
        prop_assert_eq!(back, stack);
    }

    #[test]
    fn static_points_form_one_vine_each(v in cloud()) {
        let slice = SliceCloud { height: 1.0, points: points(&v, 0.0, 0.0), labels: None, areas: None };
        let stack = SliceStack {
            window: Rect::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0)),
            slices: vec![slice.clone(), SliceCloud { height: 2.0, ..slice }],
        };
        let labelled = reconstruct_labels(&stack, 1e-3).unwrap();
        prop_assert_eq!(&labelled.slices[0].labels, &labelled.slices[1].labels);
    }
}
