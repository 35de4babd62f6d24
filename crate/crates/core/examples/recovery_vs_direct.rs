//! Host accuracy on reconstructed windows versus a model fed the coreset
//! fields directly.
//!
//! cargo run --release --example recovery_vs_direct

use seeker::coreset::SampleParams;
use seeker::dataio::{gen_synthetic, window_stream, SyntheticSpec};
use seeker::inference::{cluster_features, cluster_roundtrip, sample_features, sample_roundtrip, DirectModel, HostModels, TrainConfig};

fn main() -> seeker::Result<()> {
    let draws = 8;
    let params = SampleParams::default();
    let train_set = window_stream(&gen_synthetic(&SyntheticSpec::new(4, 50, 1, 60, 0.1, 100))?, 60, 30)?;
    let test_set = window_stream(&gen_synthetic(&SyntheticSpec::new(4, 100, 1, 60, 0.1, 200))?, 60, 30)?;
    let cfg = TrainConfig::default();

    let host = HostModels::train(&train_set, &cfg, 12, params, draws)?;
    let (mut rec3, mut rec4) = (0, 0);
    for (i, w) in test_set.iter().enumerate() {
        let (_, c) = cluster_roundtrip(w, 12)?;
        let (_, s) = sample_roundtrip(w, params, i as u64)?;
        rec3 += (Some(host.classify_cluster(&c, i as u64)?.0) == w.label) as usize;
        rec4 += (Some(host.classify_sample(&s, i as u64)?.0) == w.label) as usize;
    }

    // The direct models get as many gradient steps as the reconstruction heads.
    let direct_cfg = TrainConfig { epochs: cfg.epochs * draws, ..cfg };
    let feats = |ws: &[seeker::dataio::SensorWindow], seed: u64| -> seeker::Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<usize>)> {
        let (mut a, mut b, mut y) = (vec![], vec![], vec![]);
        for (i, w) in ws.iter().enumerate() {
            a.push(cluster_features(&cluster_roundtrip(w, 12)?.1, 12)?);
            b.push(sample_features(&sample_roundtrip(w, params, seed + i as u64)?.1));
            y.push(w.label.unwrap());
        }
        Ok((a, b, y))
    };
    let (ca, sa, ya) = feats(&train_set, 1_000_000)?;
    let (cb, sb, yb) = feats(&test_set, 0)?;
    let d3 = DirectModel::fit(&ca, &ya, 4, &direct_cfg)?.accuracy(&cb, &yb);
    let d4 = DirectModel::fit(&sa, &ya, 4, &direct_cfg)?.accuracy(&sb, &yb);

    let n = test_set.len() as f64;
    println!("{} test windows", test_set.len());
    println!("             reconstructed  direct");
    println!("clusters     {:>13.4}  {d3:>6.4}", rec3 as f64 / n);
    println!("samples      {:>13.4}  {d4:>6.4}", rec4 as f64 / n);
    Ok(())
}
