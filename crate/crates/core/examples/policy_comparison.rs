//! Seeker against store-and-execute round robin on identical traces.
//!
//! cargo run --release --example policy_comparison [config.toml]

use seeker::sim::{summarize, SimConfig, System};

fn main() -> seeker::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/bursty.toml"))?,
    };
    let sys = System::prepare(&cfg)?;
    let traces = sys.traces()?;
    let mut rows = Vec::new();
    for name in ["seeker", "seeker-table-greedy", "err1", "err3", "err6", "err12"] {
        let report = sys.run(name.parse()?, &traces)?;
        rows.push((name.to_string(), report));
    }
    print!("{}", summarize(&rows));
    Ok(())
}
