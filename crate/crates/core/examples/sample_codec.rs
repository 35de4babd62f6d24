//! Importance-sampling coreset: 20 spaced points plus mean and variance.
//!
//! cargo run --example sample_codec

use seeker::coreset::{decode_sample, encode_sample, importance_weights, sample_coreset, SampleParams};
use seeker::dataio::{gen_synthetic, window_stream, SyntheticSpec};

fn main() -> seeker::Result<()> {
    let stream = gen_synthetic(&SyntheticSpec::new(4, 2, 1, 60, 0.1, 2))?;
    let w = &window_stream(&stream, 60, 30)?[3];

    let weights = importance_weights(w, 0)?;
    let heaviest = weights.iter().cloned().fold(0.0, f64::max);
    println!("importance weight range: max {heaviest:.3}");

    let params = SampleParams::default();
    let s = sample_coreset(w, params, 9)?;
    let idx: Vec<usize> = s.channels[0].points.iter().map(|p| p.index).collect();
    println!("kept indices: {idx:?}");
    println!("mean {:.4}, variance {:.4}", s.channels[0].mean, s.channels[0].variance);

    let body = encode_sample(&s)?;
    println!("body: {} bytes (raw {} bytes)", body.bytes.len(), w.len() * 4);
    let back = decode_sample(&body.bytes, params.m, 1, w.len(), w.ranges())?;
    println!("decoded mean {:.4}, variance {:.4}", back.channels[0].mean, back.channels[0].variance);
    Ok(())
}
