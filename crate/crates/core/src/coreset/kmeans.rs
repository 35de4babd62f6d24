use super::{Cluster, ClusterCoreset};
use crate::dataio::SensorWindow;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 4;

type Point = [f64; 2];

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LloydOutcome {
    pub centers: Vec<Point>,
    /// Cluster index of each input point.
    pub assignment: Vec<usize>,
    /// Update/assignment rounds performed.
    pub iterations: usize,
    /// True when a fixed point was reached within the round budget.
    pub converged: bool,
    /// Sum of squared distances after each assignment, initial one included.
    pub objective_history: Vec<f64>,
}

fn nearest(points: &[Point], centers: &[Point]) -> Vec<usize> {
    points
        .iter()
        .map(|&p| {
            let mut best = 0;
            let mut best_d = dist2(p, centers[0]);
            for (j, &c) in centers.iter().enumerate().skip(1) {
                let d = dist2(p, c);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

fn objective(points: &[Point], centers: &[Point], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(&p, &a)| dist2(p, centers[a]))
        .sum()
}

/// Moves the point farthest from its own center into each empty cluster.
fn reseed_empty(points: &[Point], centers: &mut [Point], assignment: &mut [usize]) {
    let k = centers.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignment.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = (0..points.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .max_by(|&a, &b| {
                dist2(points[a], centers[assignment[a]])
                    .total_cmp(&dist2(points[b], centers[assignment[b]]))
                    .then(b.cmp(&a))
            })
            .expect("k <= n leaves a cluster with a spare point");
        assignment[donor] = empty;
        centers[empty] = points[donor];
    }
}

fn means(points: &[Point], assignment: &[usize], k: usize) -> Vec<Point> {
    let mut sums = vec![[0.0; 2]; k];
    let mut counts = vec![0usize; k];
    for (&p, &a) in points.iter().zip(assignment) {
        sums[a][0] += p[0];
        sums[a][1] += p[1];
        counts[a] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64])
        .collect()
}

/// Lloyd's algorithm on 2-D points with deterministic maximin seeding.
///
/// The first center is the point whose second coordinate deviates most from
/// the mean of that coordinate; each further center is the point farthest
/// from all chosen centers. Ties go to the lowest index, both here and in
/// nearest-center assignment.
pub fn lloyd(points: &[Point], k: usize, max_iter: usize) -> Result<LloydOutcome> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::config(format!("need 1 <= k <= {n}, got k = {k}")));
    }

    let mean_v = points.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    let first = (0..n)
        .max_by(|&a, &b| {
            (points[a][1] - mean_v)
                .abs()
                .total_cmp(&(points[b][1] - mean_v).abs())
                .then(b.cmp(&a))
        })
        .expect("non-empty");
    let mut centers = vec![points[first]];
    let mut closest: Vec<f64> = points.iter().map(|&p| dist2(p, points[first])).collect();
    while centers.len() < k {
        let next = (0..n)
            .max_by(|&a, &b| closest[a].total_cmp(&closest[b]).then(b.cmp(&a)))
            .expect("non-empty");
        centers.push(points[next]);
        for (d, &p) in closest.iter_mut().zip(points) {
            *d = d.min(dist2(p, points[next]));
        }
    }

    let mut assignment = nearest(points, &centers);
    let mut history = vec![objective(points, &centers, &assignment)];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        reseed_empty(points, &mut centers, &mut assignment);
        centers = means(points, &assignment, k);
        let next = nearest(points, &centers);
        history.push(objective(points, &centers, &next));
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }
    if !converged {
        reseed_empty(points, &mut centers, &mut assignment);
    }

    Ok(LloydOutcome {
        centers,
        assignment,
        iterations,
        converged,
        objective_history: history,
    })
}

/// Clustering coreset of every channel of `window` in the normalized
/// (t / (L - 1), value) plane.
pub fn kmeans_coreset(window: &SensorWindow, k: usize, max_iter: usize) -> Result<ClusterCoreset> {
    let len = window.len();
    if k == 0 || k > len {
        return Err(Error::config(format!("need 1 <= k <= {len}, got k = {k}")));
    }
    let t_scale = if len > 1 { (len - 1) as f64 } else { 1.0 };
    let channels = (0..window.channels())
        .map(|c| {
            let range = window.ranges()[c];
            let points: Vec<Point> = window
                .channel(c)
                .into_iter()
                .enumerate()
                .map(|(t, v)| [t as f64 / t_scale, range.normalize(v)])
                .collect();
            let out = lloyd(&points, k, max_iter)?;
            let mut clusters: Vec<Cluster> = out
                .centers
                .iter()
                .enumerate()
                .map(|(j, &center)| {
                    let members = points.iter().zip(&out.assignment).filter(|(_, &a)| a == j);
                    let (count, r2) = members.fold((0, 0.0f64), |(n, r2), (&p, _)| (n + 1, r2.max(dist2(p, center))));
                    Cluster {
                        center_t: center[0],
                        center_v: center[1],
                        radius: r2.sqrt(),
                        count,
                    }
                })
                .collect();
            clusters.sort_by(|a, b| a.center_t.total_cmp(&b.center_t).then(a.center_v.total_cmp(&b.center_v)));
            Ok(clusters)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterCoreset {
        channels,
        len,
        quant_meta: window.ranges().to_vec(),
    })
}
