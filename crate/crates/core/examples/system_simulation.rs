//! Full sensor/host run from a config file, report written as JSON.
//!
//! cargo run --release --example system_simulation [config.toml] [report.json]

use seeker::sim::{run_system, SimConfig};

fn main() -> seeker::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/bursty.toml").to_string());
    let cfg = SimConfig::load(&path)?;
    let report = run_system(&cfg)?;
    let m = &report.metrics;
    println!("policy {} over {} windows x {} sensors", report.policy, m.windows, report.nodes.len());
    println!("strategies: {:?}", m.strategy_histogram);
    println!("completion {:.3}, edge completion {:.3}", m.completion_fraction, m.edge_completion_fraction);
    println!("sent {} of {} raw bytes ({:.4})", m.transmitted_bytes, m.raw_bytes, m.data_volume_ratio);
    println!("accuracy {:.3}, strict {:.3}", m.accuracy, m.strict_accuracy);
    for n in &report.nodes {
        let e = &n.energy;
        println!(
            "node {}: harvested {:.1} uJ, consumed {:.1} uJ, discarded {:.1} uJ, stored in [{:.1}, {:.1}]",
            n.node, e.harvested_uj, e.consumed_uj, e.discarded_uj, e.min_stored_uj, e.max_stored_uj
        );
    }
    if let Some(out) = args.next() {
        report.write_json(&out)?;
        println!("wrote {out}");
    }
    Ok(())
}
