//! Correlate windows against one stored template per class.
//!
//! cargo run --example memoization

use seeker::dataio::{gen_synthetic, window_stream, SyntheticSpec};
use seeker::inference::{correlate, correlation, TemplateBank};

fn main() -> seeker::Result<()> {
    let quiet = window_stream(&gen_synthetic(&SyntheticSpec::new(4, 5, 1, 60, 0.01, 4))?, 60, 30)?;
    let bank = TemplateBank::from_windows(&quiet, 4)?;

    let mut hits = 0;
    for w in &quiet {
        let (class, coef) = correlate(w, &bank)?;
        if coef >= 0.95 {
            hits += 1;
            assert_eq!(Some(class), w.label);
        }
    }
    println!("{hits}/{} windows would be memoized at threshold 0.95", quiet.len());

    let t = &bank.templates()[2];
    let flipped = t.map_values(|_, v| -v);
    println!("template vs itself:  {:.3}", correlation(t, t)?);
    println!("template vs negated: {:.3}", correlation(&flipped, t)?);
    Ok(())
}
