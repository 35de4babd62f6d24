//! Train the classifier, quantize it to 16 and 12 bits, compare accuracy.
//!
//! cargo run --release --example quantized_inference

use seeker::dataio::{gen_synthetic, window_stream, SyntheticSpec};
use seeker::inference::{accuracy, infer, quantize, to_bytes, train, TrainConfig};

fn main() -> seeker::Result<()> {
    let train_set = window_stream(&gen_synthetic(&SyntheticSpec::new(4, 50, 3, 60, 0.1, 13))?, 60, 30)?;
    let test_set = window_stream(&gen_synthetic(&SyntheticSpec::new(4, 50, 3, 60, 0.1, 14))?, 60, 30)?;

    let full = train(&train_set, &TrainConfig::default())?;
    println!("32-bit: {:.4} held-out accuracy, {} bytes on disk", accuracy(&full, &test_set)?, to_bytes(&full).len());
    for bits in [16, 12] {
        let q = quantize(&full, bits)?;
        let agree = test_set
            .iter()
            .filter(|w| infer(&q, w).unwrap().0 == infer(&full, w).unwrap().0)
            .count();
        println!(
            "{bits}-bit: {:.4} held-out accuracy, argmax agrees with 32-bit on {}/{}, {} bytes on disk",
            accuracy(&q, &test_set)?,
            agree,
            test_set.len(),
            to_bytes(&q).len()
        );
    }

    let (class, conf) = infer(&full, &test_set[0])?;
    println!("window 0: predicted {class} ({conf:.3}), label {:?}", test_set[0].label);
    Ok(())
}
