//! Sensor nodes, the host, and the metrics of a run.

mod config;
mod message;
mod node;
mod policy;
mod report;
mod system;

pub use config::{CodecConfig, DatasetConfig, EnergyConfig, ModelConfig, SensorConfig, SimConfig, TraceConfig, WindowConfig};
pub use message::{Message, MessageBody, HEADER_LEN, RESULT_BODY_LEN};
pub use node::{d3_cost, decide, run_node, Decision, DecisionInput, NodeLog, NodeModels, NodeParams, NodeWindowLog};
pub use policy::{FlowOrder, Policy};
pub use report::{
    empty_histogram, metrics, summarize, EnergySummary, Metrics, NodeDecisionRecord, NodeSummary, SimReport, WindowRecord,
    RAW_BYTES_PER_SAMPLE, SUMMARY_COLUMNS,
};
pub use system::{run_system, SensorSetup, System};
