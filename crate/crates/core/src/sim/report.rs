use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::ClassId;
use crate::energy::{EnergyLedger, Strategy};
use crate::error::{Error, Result};

/// Bytes per raw sample on the wire (f32).
pub const RAW_BYTES_PER_SAMPLE: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDecisionRecord {
    pub node: usize,
    pub strategy: Strategy,
    pub k: Option<usize>,
    pub charged_uj: f64,
    pub body_bytes: usize,
    /// Classification for this node's share of the window, local or host-side.
    pub class: Option<ClassId>,
    pub confidence: Option<f64>,
    pub decided_step: usize,
    pub attempted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window_id: u64,
    pub label: Option<ClassId>,
    /// Host ensemble over the nodes that produced a class.
    pub final_class: Option<ClassId>,
    pub nodes: Vec<NodeDecisionRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub capacity_uj: f64,
    pub initial_uj: f64,
    pub harvested_uj: f64,
    pub consumed_uj: f64,
    pub discarded_uj: f64,
    pub leaked_uj: f64,
    pub final_uj: f64,
    pub min_stored_uj: f64,
    pub max_stored_uj: f64,
    /// Sum of per-decision charges; equals `consumed_uj`.
    pub charged_uj: f64,
    pub steps: u64,
    /// Exact (picojoule) ledger identities held for the whole run.
    pub balanced: bool,
}

impl EnergySummary {
    pub fn from_ledger(l: &EnergyLedger, capacity_uj: f64, final_pj: i64, charged_pj: i64) -> Self {
        EnergySummary {
            capacity_uj,
            initial_uj: l.initial.uj(),
            harvested_uj: l.harvested.uj(),
            consumed_uj: l.consumed.uj(),
            discarded_uj: l.discarded.uj(),
            leaked_uj: l.leaked.uj(),
            final_uj: final_pj as f64 / 1e6,
            min_stored_uj: l.min_stored.uj(),
            max_stored_uj: l.max_stored.uj(),
            charged_uj: charged_pj as f64 / 1e6,
            steps: l.steps,
            balanced: l.balances(crate::energy::Energy(final_pj))
                && l.consumed.pj() == charged_pj
                && l.consumed <= l.initial + l.harvested,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub node: usize,
    pub channels: Vec<usize>,
    pub trace_mean_uw: f64,
    pub histogram: BTreeMap<String, usize>,
    pub energy: EnergySummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub windows: usize,
    /// Node-window pairs.
    pub scheduled: usize,
    pub strategy_histogram: BTreeMap<String, usize>,
    /// (D0 + D1 + D2) / scheduled.
    pub edge_completion_fraction: f64,
    /// Node-windows that produced any classification / scheduled.
    pub completion_fraction: f64,
    /// Windows with a final ensembled class / windows.
    pub window_completion_fraction: f64,
    pub transmitted_bytes: usize,
    pub raw_bytes: usize,
    pub data_volume_ratio: f64,
    /// Over windows with a final class.
    pub accuracy: f64,
    /// Over all windows; windows without a final class count as wrong.
    pub strict_accuracy: f64,
    /// Per strategy, share of node-level classifications that were correct.
    pub strategy_accuracy: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: String,
    pub seed: u64,
    pub window_length: usize,
    pub windows: Vec<WindowRecord>,
    pub nodes: Vec<NodeSummary>,
    pub metrics: Metrics,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 { 0.0 } else { a as f64 / b as f64 }
}

pub fn empty_histogram() -> BTreeMap<String, usize> {
    Strategy::ALL.iter().map(|s| (s.name().to_string(), 0)).collect()
}

/// Aggregate metrics from the per-window records.
pub fn metrics(windows: &[WindowRecord], nodes: &[NodeSummary], window_length: usize) -> Metrics {
    let mut hist = empty_histogram();
    let mut per_strategy: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut scheduled, mut edge, mut classified, mut transmitted, mut raw) = (0, 0, 0, 0, 0);
    for w in windows {
        for d in &w.nodes {
            scheduled += 1;
            *hist.entry(d.strategy.name().to_string()).or_default() += 1;
            edge += d.strategy.is_edge() as usize;
            transmitted += d.body_bytes;
            let channels = nodes.iter().find(|n| n.node == d.node).map_or(1, |n| n.channels.len());
            raw += window_length * channels * RAW_BYTES_PER_SAMPLE;
            if let Some(c) = d.class {
                classified += 1;
                let e = per_strategy.entry(d.strategy.name().to_string()).or_default();
                e.0 += (Some(c) == w.label) as usize;
                e.1 += 1;
            }
        }
    }
    let finals = windows.iter().filter(|w| w.final_class.is_some()).count();
    let correct = windows.iter().filter(|w| w.final_class.is_some() && w.final_class == w.label).count();
    Metrics {
        windows: windows.len(),
        scheduled,
        strategy_histogram: hist,
        edge_completion_fraction: ratio(edge, scheduled),
        completion_fraction: ratio(classified, scheduled),
        window_completion_fraction: ratio(finals, windows.len()),
        transmitted_bytes: transmitted,
        raw_bytes: raw,
        data_volume_ratio: ratio(transmitted, raw),
        accuracy: ratio(correct, finals),
        strict_accuracy: ratio(correct, windows.len()),
        strategy_accuracy: per_strategy.into_iter().map(|(k, (c, n))| (k, ratio(c, n))).collect(),
    }
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format(format!("not a simulation report: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SimReport::from_json(&text)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// One row per node and window.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let err = |e: csv::Error| Error::format(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        w.write_record([
            "window_id", "label", "final_class", "node", "strategy", "k", "charged_uj", "body_bytes", "class",
            "confidence", "decided_step", "attempted",
        ])
        .map_err(err)?;
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        for win in &self.windows {
            for d in &win.nodes {
                w.write_record([
                    win.window_id.to_string(),
                    opt(win.label),
                    opt(win.final_class),
                    d.node.to_string(),
                    d.strategy.name().to_string(),
                    opt(d.k),
                    format!("{:.6}", d.charged_uj),
                    d.body_bytes.to_string(),
                    opt(d.class),
                    d.confidence.map_or(String::new(), |c| format!("{c:.4}")),
                    d.decided_step.to_string(),
                    d.attempted.to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub const SUMMARY_COLUMNS: [&str; 14] = [
    "name",
    "policy",
    "completion_fraction",
    "edge_completion_fraction",
    "window_completion_fraction",
    "data_volume_ratio",
    "accuracy",
    "strict_accuracy",
    "D0",
    "D1",
    "D2",
    "D3",
    "D4",
    "DROP",
];

/// Comparison table of several reports as CSV text.
pub fn summarize(reports: &[(String, SimReport)]) -> String {
    let mut out = SUMMARY_COLUMNS.join(",");
    out.push('\n');
    for (name, r) in reports {
        let m = &r.metrics;
        let _ = write!(
            out,
            "{name},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.policy,
            m.completion_fraction,
            m.edge_completion_fraction,
            m.window_completion_fraction,
            m.data_volume_ratio,
            m.accuracy,
            m.strict_accuracy
        );
        for s in Strategy::ALL {
            let _ = write!(out, ",{}", m.strategy_histogram.get(s.name()).copied().unwrap_or(0));
        }
        out.push('\n');
    }
    out
}
