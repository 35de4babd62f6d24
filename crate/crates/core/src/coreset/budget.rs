use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::ClassId;
use crate::error::{Error, Result};

pub const DEFAULT_K_MAX: usize = 12;

/// Smallest cluster count per class that still preserves host accuracy.
/// Classes without an entry use `k_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterBudgetTable {
    pub k_max: usize,
    pub entries: BTreeMap<ClassId, usize>,
}

impl Default for ClusterBudgetTable {
    fn default() -> Self {
        ClusterBudgetTable::new(DEFAULT_K_MAX)
    }
}

impl ClusterBudgetTable {
    pub fn new(k_max: usize) -> Self {
        ClusterBudgetTable {
            k_max,
            entries: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, class: ClassId, k: usize) -> Result<()> {
        if k == 0 || k > self.k_max {
            return Err(Error::config(format!(
                "cluster budget for class {class} must be in [1, {}], got {k}",
                self.k_max
            )));
        }
        self.entries.insert(class, k);
        Ok(())
    }

    pub fn with(mut self, class: ClassId, k: usize) -> Result<Self> {
        self.set(class, k)?;
        Ok(self)
    }

    pub fn get(&self, class: ClassId) -> usize {
        self.entries.get(&class).copied().unwrap_or(self.k_max)
    }
}

/// Activity-aware cluster count: the predicted class's budget, capped by
/// what the node can afford. Unknown class falls back to `k_max`.
pub fn select_cluster_count(predicted: Option<ClassId>, affordable_k: usize, table: &ClusterBudgetTable) -> usize {
    let wanted = predicted.map_or(table.k_max, |c| table.get(c));
    affordable_k.min(wanted).max(1)
}
