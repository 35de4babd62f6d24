//! Clustering coreset of one window and its bit-packed body.
//!
//! cargo run --example cluster_codec

use seeker::coreset::{
    cluster_body_len, decode_cluster, encode_cluster, encode_cluster_with, kmeans_coreset, ClusterLayout,
    DEFAULT_MAX_ITER,
};
use seeker::dataio::{gen_synthetic, window_stream, SyntheticSpec};

fn main() -> seeker::Result<()> {
    let stream = gen_synthetic(&SyntheticSpec::new(4, 2, 1, 60, 0.1, 1))?;
    let w = &window_stream(&stream, 60, 30)?[0];

    let c = kmeans_coreset(w, 12, DEFAULT_MAX_ITER)?;
    for cl in &c.channels[0] {
        println!(
            "t {:.3}  v {:.3}  r {:.3}  n {}",
            cl.center_t, cl.center_v, cl.radius, cl.count
        );
    }

    let raw = w.len() * w.channels() * 4;
    let with_counts = encode_cluster(&c)?;
    let plain = encode_cluster_with(&c, ClusterLayout::Plain)?;
    println!("raw window:        {raw} bytes");
    println!("clusters + counts: {} bytes", with_counts.bytes.len());
    println!("clusters only:     {} bytes", plain.bytes.len());
    println!("compression:       {:.3}x", raw as f64 / with_counts.bytes.len() as f64);
    assert_eq!(with_counts.bytes.len(), cluster_body_len(12, 1, ClusterLayout::Recoverable));

    let back = decode_cluster(&with_counts.bytes, 12, 1, 60, w.ranges())?;
    let err = c.channels[0]
        .iter()
        .zip(&back.channels[0])
        .map(|(a, b)| (a.center_v - b.center_v).abs())
        .fold(0.0, f64::max);
    println!("max center quantization error: {err:.5} (normalized units)");
    Ok(())
}
