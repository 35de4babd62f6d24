//! Generate a labeled synthetic stream and cut it into windows.
//!
//! cargo run --example synthetic_windows

use seeker::dataio::{class_signature, gen_synthetic, window_stream, SyntheticSpec};

fn main() -> seeker::Result<()> {
    let spec = SyntheticSpec::new(4, 10, 3, 60, 0.1, 42);
    let stream = gen_synthetic(&spec)?;
    println!("{} samples x {} channels at {} Hz", stream.len(), stream.channels(), stream.sample_rate_hz());

    for class in 0..spec.n_classes {
        let (f, a, h) = class_signature(class, 0);
        println!("class {class}: channel 0 at {f:.2} Hz, amplitude {a:.2}, 2nd harmonic {h:.2}");
    }

    // 60-sample windows every 30 samples: 1.2 s windows, 0.6 s stride.
    let windows = window_stream(&stream, 60, 30)?;
    let mut per_class = vec![0; spec.n_classes];
    for w in &windows {
        per_class[w.label.unwrap()] += 1;
    }
    println!("{} windows, per class {per_class:?}", windows.len());

    let w = &windows[0];
    let ch0 = w.channel(0);
    let mean = ch0.iter().sum::<f64>() / ch0.len() as f64;
    println!("window 0: label {:?}, t0 {}, channel 0 mean {mean:.3}", w.label, w.t0);
    Ok(())
}
