//! Rebuild full windows from decoded coresets and measure the damage.
//!
//! cargo run --example recovery

use seeker::coreset::SampleParams;
use seeker::dataio::{gen_synthetic, window_stream, SensorWindow, SyntheticSpec};
use seeker::inference::{cluster_roundtrip, sample_roundtrip};
use seeker::recovery::{reconstruct_cluster, reconstruct_sample};

fn mad(a: &SensorWindow, b: &SensorWindow) -> f64 {
    let span = a.ranges()[0].span();
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.values().len() as f64 / span
}

fn main() -> seeker::Result<()> {
    let stream = gen_synthetic(&SyntheticSpec::new(4, 5, 1, 60, 0.1, 3))?;
    let windows = window_stream(&stream, 60, 30)?;

    println!("window  label  cluster-MAD  sample-MAD  (fraction of channel range)");
    for w in windows.iter().step_by(5) {
        let (_, c) = cluster_roundtrip(w, 12)?;
        let rc = reconstruct_cluster(&c, w.len(), w.window_id)?;
        let (_, s) = sample_roundtrip(w, SampleParams::default(), w.window_id)?;
        let rs = reconstruct_sample(&s, w.len(), w.window_id)?;
        println!(
            "{:>6}  {:>5}  {:>11.3}  {:>10.3}",
            w.window_id,
            w.label.unwrap(),
            mad(w, &rc.window),
            mad(w, &rs)
        );
    }

    // Every original point lies within 2(r + step) of some rebuilt point.
    let w = &windows[0];
    let (_, c) = cluster_roundtrip(w, 12)?;
    let rc = reconstruct_cluster(&c, w.len(), 0)?;
    let r = w.ranges()[0];
    let pts: Vec<[f64; 2]> = rc.points[0].iter().map(|p| p.1).collect();
    let worst = (0..w.len())
        .map(|t| {
            let p = [t as f64 / 59.0, r.normalize(w.get(t, 0))];
            pts.iter().map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    println!("worst nearest distance {worst:.4}, max radius {:.4}", c.max_radius());
    Ok(())
}
