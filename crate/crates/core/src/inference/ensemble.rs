use std::collections::BTreeMap;

use crate::dataio::ClassId;
use crate::error::{Error, Result};

/// Confidence-weighted vote over per-sensor results; ties go to the lowest
/// class id.
pub fn ensemble(results: &[(ClassId, f64)]) -> Result<ClassId> {
    if results.is_empty() {
        return Err(Error::config("ensemble needs at least one result"));
    }
    let mut votes: BTreeMap<ClassId, f64> = BTreeMap::new();
    for &(c, conf) in results {
        *votes.entry(c).or_default() += conf;
    }
    let mut best: Option<(ClassId, f64)> = None;
    for (c, v) in votes {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((c, v));
        }
    }
    Ok(best.expect("non-empty").0)
}
