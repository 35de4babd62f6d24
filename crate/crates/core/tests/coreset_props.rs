use proptest::prelude::*;
use seeker::coreset::{
    cluster_body_len, decode_cluster, decode_cluster_with, decode_sample, encode_cluster, encode_cluster_with,
    encode_sample, kmeans_coreset, lloyd, sample_body_len, sample_coreset, ClusterLayout, SampleParams,
};
use seeker::dataio::{ChannelRange, SensorWindow};
use seeker::recovery::reconstruct_cluster;

fn d2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Independent check that (centers, assignment) is a Lloyd fixed point.
fn is_fixed_point(points: &[[f64; 2]], centers: &[[f64; 2]], assignment: &[usize]) -> Result<(), String> {
    for (i, &p) in points.iter().enumerate() {
        let best = centers.iter().map(|&c| d2(p, c)).fold(f64::INFINITY, f64::min);
        if d2(p, centers[assignment[i]]) > best + 1e-12 {
            return Err(format!("point {i} is not with its nearest center"));
        }
    }
    for (j, &c) in centers.iter().enumerate() {
        let members: Vec<[f64; 2]> = points.iter().zip(assignment).filter(|(_, &a)| a == j).map(|(&p, _)| p).collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len() as f64;
        let mean = [members.iter().map(|p| p[0]).sum::<f64>() / n, members.iter().map(|p| p[1]).sum::<f64>() / n];
        if d2(mean, c) > 1e-18 {
            return Err(format!("center {j} is not the mean of its members"));
        }
    }
    Ok(())
}

fn window(values: Vec<f64>) -> SensorWindow {
    SensorWindow::from_channels(&[values], vec![ChannelRange::new(-2.0, 2.0).unwrap()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lloyd_converges_to_a_fixed_point(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..=12),
        k in 1usize..=3,
    ) {
        let points: Vec<[f64; 2]> = pts.iter().map(|&(t, v)| [t, v]).collect();
        let k = k.min(points.len());
        let out = lloyd(&points, k, 100).unwrap();
        prop_assert!(out.converged);
        prop_assert_eq!(out.assignment.len(), points.len());
        is_fixed_point(&points, &out.centers, &out.assignment).map_err(TestCaseError::fail)?;
        for w in out.objective_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn cluster_body_size_is_fixed(values in prop::collection::vec(-2.0f64..2.0, 60), k in 1usize..=12) {
        let c = kmeans_coreset(&window(values), k, 4).unwrap();
        let e = encode_cluster(&c).unwrap();
        prop_assert_eq!(e.bytes.len(), cluster_body_len(k, 1, ClusterLayout::Recoverable));
        prop_assert_eq!(encode_cluster_with(&c, ClusterLayout::Plain).unwrap().bytes.len(), (k * 24).div_ceil(8));
    }

    #[test]
    fn cluster_fields_survive_the_wire(values in prop::collection::vec(-2.0f64..2.0, 60), k in 1usize..=12) {
        let w = window(values);
        let c = kmeans_coreset(&w, k, 4).unwrap();
        for layout in [ClusterLayout::Recoverable, ClusterLayout::Plain] {
            let bytes = encode_cluster_with(&c, layout).unwrap().bytes;
            let d = decode_cluster_with(&bytes, k, 1, 60, w.ranges(), layout).unwrap();
            for (a, b) in c.channels[0].iter().zip(&d.channels[0]) {
                prop_assert!((a.center_t - b.center_t).abs() <= 0.5 / 59.0 + 1e-12);
                prop_assert!((a.center_v - b.center_v).abs() <= 0.5 / 1023.0 + 1e-12);
                prop_assert!((a.radius.min(1.0) - b.radius).abs() <= 0.5 / 255.0 + 1e-12);
                if layout == ClusterLayout::Recoverable {
                    prop_assert_eq!(b.count, a.count.min(16));
                }
            }
        }
    }

    #[test]
    fn reconstruction_stays_within_twice_radius_plus_step(
        values in prop::collection::vec(-2.0f64..2.0, 60),
        k in 1usize..=12,
        seed in any::<u64>(),
    ) {
        let w = window(values);
        let c = kmeans_coreset(&w, k, 4).unwrap();
        let d = decode_cluster(&encode_cluster(&c).unwrap().bytes, k, 1, 60, w.ranges()).unwrap();
        let r = reconstruct_cluster(&d, 60, seed).unwrap();
        let orig: Vec<[f64; 2]> = (0..60).map(|t| [t as f64 / 59.0, w.ranges()[0].normalize(w.get(t, 0))]).collect();
        let rec: Vec<[f64; 2]> = r.points[0].iter().map(|p| p.1).collect();
        let directed = |xs: &[[f64; 2]], ys: &[[f64; 2]]| {
            xs.iter().map(|&x| ys.iter().map(|&y| d2(x, y)).fold(f64::INFINITY, f64::min).sqrt()).fold(0.0, f64::max)
        };
        let hausdorff = directed(&orig, &rec).max(directed(&rec, &orig));
        let bound = 2.0 * (d.max_radius() + 1.0 / 59.0);
        prop_assert!(hausdorff <= bound, "{} > {}", hausdorff, bound);
    }

    #[test]
    fn sample_round_trip(values in prop::collection::vec(-2.0f64..2.0, 60), seed in any::<u64>()) {
        let w = window(values);
        let p = SampleParams::default();
        let s = sample_coreset(&w, p, seed).unwrap();
        let e = encode_sample(&s).unwrap();
        prop_assert_eq!(e.bytes.len(), sample_body_len(p.m, 1));
        let d = decode_sample(&e.bytes, p.m, 1, 60, w.ranges()).unwrap();
        let step = 4.0 / 1023.0;
        for (a, b) in s.channels[0].points.iter().zip(&d.channels[0].points) {
            prop_assert_eq!(a.index, b.index);
            prop_assert!((a.value - b.value).abs() <= step / 2.0 + 1e-9);
        }
        let idx: Vec<usize> = d.channels[0].points.iter().map(|p| p.index).collect();
        prop_assert!(idx.windows(2).all(|x| x[1] > x[0]));
    }
}

#[test]
fn reference_sizes() {
    assert_eq!(cluster_body_len(12, 1, ClusterLayout::Recoverable), 42);
    assert_eq!(cluster_body_len(12, 1, ClusterLayout::Plain), 36);
    assert_eq!(cluster_body_len(12, 3, ClusterLayout::Recoverable), 126);
    assert_eq!(sample_body_len(20, 1), 44);
}

#[test]
fn truncated_bodies_are_rejected() {
    let w = window((0..60).map(|i| (i as f64 * 0.2).sin()).collect());
    let c = kmeans_coreset(&w, 12, 4).unwrap();
    let bytes = encode_cluster(&c).unwrap().bytes;
    assert!(decode_cluster(&bytes[..41], 12, 1, 60, w.ranges()).is_err());
    assert!(decode_cluster(&bytes, 12, 2, 60, w.ranges()).is_err());
}
