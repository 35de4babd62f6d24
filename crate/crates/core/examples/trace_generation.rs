//! Synthetic harvester traces.
//!
//! cargo run --example trace_generation

use seeker::energy::{gen_trace, TraceProfile};

fn main() -> seeker::Result<()> {
    let profiles = [
        TraceProfile::Constant { power_uw: 50.0 },
        TraceProfile::SquareWave {
            high_uw: 100.0,
            low_uw: 0.0,
            period_s: 2.0,
            duty: 0.5,
        },
        TraceProfile::MarkovBurst {
            on_uw: 150.0,
            off_uw: 0.0,
            mean_on_s: 1.0,
            mean_off_s: 3.0,
        },
    ];
    for p in &profiles {
        let t = gen_trace(p, 60.0, 0.001, 5)?;
        let on = t.power_uw().iter().filter(|&&x| x > 0.0).count();
        println!(
            "{:<60} mean {:>7.2} uW (expected {:>6.2}), powered {:>5.1}% of the time",
            format!("{p:?}"),
            t.mean_power_uw(),
            p.mean_power_uw(),
            100.0 * on as f64 / t.len() as f64
        );
    }
    Ok(())
}
