use proptest::prelude::*;
use seeker::dataio::{gen_synthetic, window_stream, SensorWindow, SyntheticSpec};
use seeker::inference::{accuracy, from_bytes, infer, quantize, to_bytes, train, QTensor, TrainConfig};

fn split(seed: u64) -> (Vec<SensorWindow>, Vec<SensorWindow>) {
    let mk = |s| window_stream(&gen_synthetic(&SyntheticSpec::new(4, 30, 1, 60, 0.1, s)).unwrap(), 60, 30).unwrap();
    (mk(seed), mk(seed + 500))
}

#[test]
fn narrower_weights_cost_little_accuracy() {
    for seed in 0..3 {
        let (tr, te) = split(seed);
        let cfg = TrainConfig { epochs: 25, seed, ..Default::default() };
        let full = train(&tr, &cfg).unwrap();
        let q16 = quantize(&full, 16).unwrap();
        let q12 = quantize(&full, 12).unwrap();
        let (a32, a16, a12) = (accuracy(&full, &te).unwrap(), accuracy(&q16, &te).unwrap(), accuracy(&q12, &te).unwrap());
        assert!(a32 > 0.8, "seed {seed}: {a32}");
        assert!(a32 - a16 <= 0.01, "seed {seed}: 16-bit {a16} vs {a32}");
        assert!(a12 <= a16 + 0.005, "seed {seed}: 12-bit {a12} vs 16-bit {a16}");
        let agree = te.iter().filter(|w| infer(&full, w).unwrap().0 == infer(&q16, w).unwrap().0).count();
        assert!(agree as f64 >= 0.98 * te.len() as f64, "seed {seed}: {agree}/{}", te.len());
    }
}

#[test]
fn model_file_round_trip() {
    let (tr, te) = split(9);
    let full = train(&tr, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
    for m in [full.clone(), quantize(&full, 16).unwrap(), quantize(&full, 4).unwrap()] {
        let back = from_bytes(&to_bytes(&m)).unwrap();
        assert_eq!(back.bits, m.bits);
        for w in te.iter().take(20) {
            assert_eq!(infer(&back, w).unwrap(), infer(&m, w).unwrap());
        }
    }
    let mut bad = to_bytes(&full);
    bad[0] = b'X';
    assert!(from_bytes(&bad).is_err());
    assert!(quantize(&quantize(&full, 16).unwrap(), 8).is_err());
}

proptest! {
    #[test]
    fn round_trip_error_is_half_a_step(xs in prop::collection::vec(-50.0f64..50.0, 1..200), bits in 2u32..=16) {
        let q = QTensor::quantize(&xs, bits);
        for (x, y) in xs.iter().zip(q.dequantize()) {
            prop_assert!((x - y).abs() <= q.scale / 2.0 + 1e-12);
        }
    }
}
