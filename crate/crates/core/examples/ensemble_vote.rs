//! Host-side confidence-weighted vote across sensors.
//!
//! cargo run --example ensemble_vote

use seeker::inference::ensemble;

fn main() -> seeker::Result<()> {
    let cases: [&[(usize, f64)]; 3] = [&[(0, 0.9), (0, 0.8), (1, 0.99)], &[(1, 0.5)], &[(0, 0.5), (1, 0.5)]];
    for c in cases {
        println!("{c:?} -> class {}", ensemble(c)?);
    }
    println!("no results -> {:?}", ensemble(&[]).map_err(|e| e.to_string()));
    Ok(())
}
