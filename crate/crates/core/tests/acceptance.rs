//! One line per acceptance criterion; exits non-zero if any fails.

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seeker::coreset::{
    cluster_body_len, decode_cluster, encode_cluster, encode_cluster_with, kmeans_coreset, lloyd, ClusterLayout,
    SampleParams,
};
use seeker::dataio::{gen_synthetic, window_stream, SensorWindow, SyntheticSpec};
use seeker::energy::{comm_energy, CostTable, MessageKind, Strategy};
use seeker::inference::{
    cluster_features, cluster_roundtrip, sample_features, sample_roundtrip, DirectModel, HostModels, Mlp, QTensor,
    TrainConfig,
};
use seeker::recovery::reconstruct_cluster;
use seeker::sim::{Policy, SimConfig, SimReport, System};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn configs() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn windows(n_classes: usize, wpc: usize, sigma: f64, seed: u64) -> Vec<SensorWindow> {
    window_stream(&gen_synthetic(&SyntheticSpec::new(n_classes, wpc, 1, 60, sigma, seed)).unwrap(), 60, 30).unwrap()
}

fn c1_bytes() -> Check {
    let w = &windows(4, 2, 0.1, 1)[0];
    let c = kmeans_coreset(w, 12, 4).map_err(|e| e.to_string())?;
    let with = encode_cluster(&c).unwrap().bytes.len();
    let without = encode_cluster_with(&c, ClusterLayout::Plain).unwrap().bytes.len();
    let raw = w.len() * w.channels() * 4;
    let ratio = raw as f64 / with as f64;
    ensure(
        with == 42
            && without == 36
            && raw == 240
            && cluster_body_len(12, 1, ClusterLayout::Recoverable) == 42
            && (ratio - 5.714).abs() < 5e-4,
        format!("body {with} B with counts, {without} B without, raw {raw} B, ratio {ratio:.3}"),
    )
}

fn c2_energy() -> Check {
    let mut cfg = SimConfig::load(configs().join("infinite_energy.toml")).map_err(|e| e.to_string())?;
    cfg.codec.memo_threshold = 2.0;
    cfg.codec.aac = false;
    let sys = System::prepare(&cfg).map_err(|e| e.to_string())?;
    let traces = sys.traces().unwrap();
    let table = [
        (Strategy::D0, 8.81),
        (Strategy::D1, 37.5),
        (Strategy::D2, 24.85),
        (Strategy::D3, 17.04),
        (Strategy::D4, 16.84),
    ];
    let mut seen = Vec::new();
    for (s, want) in table {
        let r = sys.run(Policy::Forced(s), &traces).map_err(|e| e.to_string())?;
        let mut worst: f64 = 0.0;
        for d in r.windows.iter().flat_map(|w| &w.nodes) {
            if d.strategy != s {
                return Err(format!("forced {s} produced {}", d.strategy));
            }
            worst = worst.max((d.charged_uj - want).abs());
        }
        let consumed: f64 = r.nodes.iter().map(|n| n.energy.consumed_uj).sum();
        let expected = want * r.metrics.scheduled as f64;
        if worst > 0.01 || (consumed - expected).abs() > 0.01 * r.metrics.scheduled as f64 {
            return Err(format!("{s}: charged off by {worst:.4} uJ"));
        }
        seen.push(format!("{s} {want}"));
    }
    let (c42, c240) = (comm_energy(42, MessageKind::Payload), comm_energy(240, MessageKind::Payload));
    let table_ok = CostTable::default().cost(Strategy::D3).uj() == 17.04;
    ensure(
        (c42 - 15.97).abs() <= 0.01 && (c240 - 70.16).abs() <= 0.01 && table_ok,
        format!("charged {}; comm(42) = {c42:.2}, comm(240) = {c240:.2}", seen.join(", ")),
    )
}

fn c3_kmeans() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=12);
        let k = rng.random_range(1..=3usize).min(n);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let out = lloyd(&pts, k, 100).map_err(|e| e.to_string())?;
        if !out.converged {
            return Err(format!("n={n} k={k} did not converge"));
        }
        let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        for (i, &p) in pts.iter().enumerate() {
            let best = out.centers.iter().map(|&c| d2(p, c)).fold(f64::INFINITY, f64::min);
            if d2(p, out.centers[out.assignment[i]]) > best + 1e-12 {
                return Err(format!("n={n} k={k}: point {i} not nearest"));
            }
        }
        for (j, &c) in out.centers.iter().enumerate() {
            let m: Vec<[f64; 2]> = pts.iter().zip(&out.assignment).filter(|(_, &a)| a == j).map(|(&p, _)| p).collect();
            if m.is_empty() {
                continue;
            }
            let mean = [m.iter().map(|p| p[0]).sum::<f64>() / m.len() as f64, m.iter().map(|p| p[1]).sum::<f64>() / m.len() as f64];
            if d2(mean, c) > 1e-18 {
                return Err(format!("n={n} k={k}: center {j} is not its members' mean"));
            }
        }
        checked += 1;
    }
    ensure(checked >= 100, format!("{checked} instances (n <= 12, k <= 3) are fixed points"))
}

fn c4_bound() -> Check {
    let mut count = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut seed = 0;
    while count < 10_000 {
        let sigma = [0.05, 0.1, 0.3, 1.0][seed as usize % 4];
        for w in windows(6, 20, sigma, 4000 + seed) {
            for k in [3, 12] {
                let c = kmeans_coreset(&w, k, 4).unwrap();
                let d = decode_cluster(&encode_cluster(&c).unwrap().bytes, k, 1, 60, w.ranges()).unwrap();
                let r = reconstruct_cluster(&d, 60, count as u64).unwrap();
                let orig: Vec<[f64; 2]> = (0..60).map(|t| [t as f64 / 59.0, w.ranges()[0].normalize(w.get(t, 0))]).collect();
                let rec: Vec<[f64; 2]> = r.points[0].iter().map(|p| p.1).collect();
                let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                let directed =
                    |xs: &[[f64; 2]], ys: &[[f64; 2]]| xs.iter().map(|&x| ys.iter().map(|&y| dist(x, y)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
                let h = directed(&orig, &rec).max(directed(&rec, &orig));
                // Largest quantization step of the cluster fields: the 6-bit time grid.
                let bound = 2.0 * (d.max_radius() + 1.0 / 59.0);
                if h > bound {
                    return Err(format!("window {count}: Hausdorff {h:.4} > {bound:.4}"));
                }
                worst_ratio = worst_ratio.max(h / bound);
                count += 1;
            }
        }
        seed += 1;
    }
    ensure(true, format!("{count} reconstructions within 2(max r + step), worst at {:.0}% of the bound", 100.0 * worst_ratio))
}

fn c5_recovery() -> Check {
    let draws = 8;
    let params = SampleParams::default();
    let mut wins = 0;
    let mut gains = Vec::new();
    let mut n_test = 0;
    for s in 0..5u64 {
        let train = windows(4, 50, 0.1, 100 + s);
        let test = windows(4, 260, 0.1, 200 + s);
        n_test = test.len();
        let cfg = TrainConfig { seed: s, ..Default::default() };
        let host = HostModels::train(&train, &cfg, 12, params, draws).map_err(|e| e.to_string())?;

        let mut rec = 0usize;
        let (mut xc, mut xs, mut y) = (vec![], vec![], vec![]);
        for (i, w) in test.iter().enumerate() {
            let (_, c) = cluster_roundtrip(w, 12).unwrap();
            let (_, sc) = sample_roundtrip(w, params, i as u64).unwrap();
            rec += (Some(host.classify_cluster(&c, i as u64).unwrap().0) == w.label) as usize;
            rec += (Some(host.classify_sample(&sc, i as u64).unwrap().0) == w.label) as usize;
            xc.push(cluster_features(&c, 12).unwrap());
            xs.push(sample_features(&sc));
            y.push(w.label.unwrap());
        }
        let (mut tc, mut ts, mut ty) = (vec![], vec![], vec![]);
        for (i, w) in train.iter().enumerate() {
            tc.push(cluster_features(&cluster_roundtrip(w, 12).unwrap().1, 12).unwrap());
            ts.push(sample_features(&sample_roundtrip(w, params, 1_000_000 + i as u64).unwrap().1));
            ty.push(w.label.unwrap());
        }
        let dcfg = TrainConfig { epochs: cfg.epochs * draws, ..cfg };
        let direct_c = DirectModel::fit(&tc, &ty, 4, &dcfg).map_err(|e| e.to_string())?.accuracy(&xc, &y);
        let direct_s = DirectModel::fit(&ts, &ty, 4, &dcfg).map_err(|e| e.to_string())?.accuracy(&xs, &y);
        let recovered = rec as f64 / (2 * test.len()) as f64;
        let gain = 100.0 * (recovered - (direct_c + direct_s) / 2.0);
        wins += (gain >= 2.0) as usize;
        gains.push(format!("{gain:+.2}"));
    }
    ensure(
        wins >= 4 && n_test >= 2000,
        format!("recovery gain over direct (pp) per seed: {} ({wins}/5 >= 2pp, {n_test} test windows)", gains.join(" ")),
    )
}

fn bursty() -> System {
    System::prepare(&SimConfig::load(configs().join("bursty.toml")).unwrap()).unwrap()
}

fn c6_err(sys: &System) -> Check {
    let traces = sys.traces().unwrap();
    let seeker = sys.run(Policy::default(), &traces).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = vec![format!("seeker {:.3}", seeker.metrics.completion_fraction)];
    let mut err12_strict = 0.0;
    for n in [1, 3, 6, 12] {
        let r = sys.run(Policy::Err(n), &traces).map_err(|e| e.to_string())?;
        ok &= seeker.metrics.completion_fraction >= r.metrics.completion_fraction;
        parts.push(format!("ERR({n}) {:.3}", r.metrics.completion_fraction));
        if n == 12 {
            err12_strict = r.metrics.strict_accuracy;
        }
    }
    let strict = seeker.metrics.strict_accuracy;
    ok &= strict >= err12_strict;
    ensure(ok, format!("completion {}; strict accuracy {strict:.3} vs ERR(12) {err12_strict:.3}", parts.join(", ")))
}

fn c7_volume(sys: &System) -> Check {
    let r = sys.simulate().map_err(|e| e.to_string())?;
    let m = &r.metrics;
    ensure(
        sys.config.codec.aac && m.data_volume_ratio <= 0.2,
        format!("{} of {} raw bytes sent ({:.4}), D3 {} times", m.transmitted_bytes, m.raw_bytes, m.data_volume_ratio, m.strategy_histogram["D3"]),
    )
}

fn c8_determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("bursty.toml");
    let mut outs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_seeker"))
            .args(["simulate", "--seed", "21", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        outs.push(std::fs::read(&out).unwrap());
    }
    ensure(
        outs[0] == outs[1],
        format!("two runs with seed 21: {} and {} bytes, identical: {}", outs[0].len(), outs[1].len(), outs[0] == outs[1]),
    )
}

fn c9_numerics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for trial in 0..5 {
        let net = Mlp::new(8, 6, 4, trial);
        let xs: Vec<Vec<f64>> = (0..10).map(|_| (0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<usize> = (0..10).map(|i| i % 4).collect();
        let xr: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
        let (_, g) = net.loss_and_grad(&xr, &ys);
        let analytic = [g.w1, g.b1, g.w2, g.b2];
        let h = 1e-6;
        for p in 0..4 {
            for j in 0..analytic[p].len() {
                let mut plus = net.clone();
                plus.params_mut()[p][j] += h;
                let mut minus = net.clone();
                minus.params_mut()[p][j] -= h;
                let numeric = (plus.loss_and_grad(&xr, &ys).0 - minus.loss_and_grad(&xr, &ys).0) / (2.0 * h);
                worst = worst.max((analytic[p][j] - numeric).abs());
            }
        }
    }
    let mut q_ok = true;
    for _ in 0..200 {
        let xs: Vec<f64> = (0..64).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q = QTensor::quantize(&xs, 16);
        q_ok &= xs.iter().zip(q.dequantize()).all(|(a, b)| (a - b).abs() <= q.scale / 2.0 + 1e-15);
    }
    ensure(worst <= 1e-4 && q_ok, format!("max gradient error {worst:.2e}; 16-bit round trip within scale/2: {q_ok}"))
}

fn c10_conservation(sys: &System) -> Check {
    let mut reports: Vec<SimReport> = Vec::new();
    let traces = sys.traces().unwrap();
    for p in ["seeker", "seeker-table-greedy", "err1", "err12", "forced-d3", "forced-d1"] {
        reports.push(sys.run(p.parse().unwrap(), &traces).map_err(|e| e.to_string())?);
    }
    for name in ["square_wave.toml", "forced_d3.toml"] {
        let mut cfg = SimConfig::load(configs().join(name)).unwrap();
        cfg.energy.leakage_uw = 2.0;
        reports.push(System::prepare(&cfg).and_then(|s| s.simulate()).map_err(|e| e.to_string())?);
    }
    let mut nodes = 0;
    for r in &reports {
        for n in &r.nodes {
            let e = &n.energy;
            let ok = e.balanced
                && e.consumed_uj <= e.harvested_uj + e.initial_uj
                && e.min_stored_uj >= 0.0
                && e.max_stored_uj <= e.capacity_uj;
            if !ok {
                return Err(format!("policy {} node {}: {e:?}", r.policy, n.node));
            }
            nodes += 1;
        }
    }
    ensure(true, format!("{nodes} node runs over {} simulations balanced with stored in [0, capacity]", reports.len()))
}

fn main() {
    let sys = bursty();
    let results: Vec<(usize, Check)> = vec![
        (1, c1_bytes()),
        (2, c2_energy()),
        (3, c3_kmeans()),
        (4, c4_bound()),
        (5, c5_recovery()),
        (6, c6_err(&sys)),
        (7, c7_volume(&sys)),
        (8, c8_determinism()),
        (9, c9_numerics()),
        (10, c10_conservation(&sys)),
    ];
    let mut failed = 0;
    for (i, r) in &results {
        match r {
            Ok(msg) => println!("criterion {i}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {i}: FAIL  {msg}");
            }
        }
    }
    println!("{}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
