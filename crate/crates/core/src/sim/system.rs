//! Several sensors plus a host, from config to report.

use std::collections::BTreeMap;

use super::config::{DatasetConfig, SimConfig, TraceConfig};
use super::message::{Message, MessageBody};
use super::node::{run_node, NodeLog, NodeModels, NodeParams};
use super::policy::Policy;
use super::report::{empty_histogram, metrics, EnergySummary, NodeDecisionRecord, NodeSummary, SimReport, WindowRecord};
use crate::coreset::{decode_cluster, decode_sample, ClusterBudgetTable};
use crate::dataio::{gen_synthetic, load_dataset, window_stream, ClassId, LabeledStream, SensorWindow, SyntheticSpec};
use crate::energy::{gen_trace, load_trace, Energy, HarvestTrace};
use crate::error::{Error, Result};
use crate::inference::{calibrate_cluster_budget, ensemble, quantize_finetuned, HostModels, TemplateBank, TrainConfig};

/// One sensor's trained models and the windows it will see.
#[derive(Clone, Debug)]
pub struct SensorSetup {
    pub channels: Vec<usize>,
    pub node: NodeModels,
    pub host: HostModels,
    pub test: Vec<SensorWindow>,
    pub initial: Energy,
    pub trace: TraceConfig,
}

/// A configured and trained deployment, ready to simulate under any policy
/// or trace.
#[derive(Clone, Debug)]
pub struct System {
    pub config: SimConfig,
    pub sensors: Vec<SensorSetup>,
    pub n_classes: usize,
    pub sample_rate_hz: f64,
}

fn split_streams(cfg: &SimConfig) -> Result<(LabeledStream, Option<LabeledStream>, f64)> {
    let len = cfg.window.length;
    match &cfg.dataset {
        DatasetConfig::Synthetic {
            n_classes,
            channels,
            noise_sigma,
            train_windows_per_class,
            test_windows_per_class,
            sample_rate_hz,
        } => {
            let spec = |wpc, seed| SyntheticSpec {
                sample_rate_hz: *sample_rate_hz,
                ..SyntheticSpec::new(*n_classes, wpc, *channels, len, *noise_sigma, seed)
            };
            let train = gen_synthetic(&spec(*train_windows_per_class, cfg.seed))?;
            let test = gen_synthetic(&spec(*test_windows_per_class, cfg.seed ^ 0x7e57_5eed))?;
            Ok((train, Some(test), *sample_rate_hz))
        }
        DatasetConfig::File {
            path,
            format,
            channels,
            label_col,
            ..
        } => {
            let chans = channels.clone().unwrap_or_else(|| format.default_channels());
            let stream = load_dataset(path, *format, &chans, label_col.or(format.default_label_col()))?;
            let rate = stream.sample_rate_hz();
            Ok((stream, None, rate))
        }
    }
}

fn windows_for(stream: &LabeledStream, channels: &[usize], cfg: &SimConfig) -> Result<Vec<SensorWindow>> {
    window_stream(&stream.select_channels(channels)?, cfg.window.length, cfg.window.overlap)
}

impl System {
    /// Loads data and trains every sensor's node and host models.
    pub fn prepare(config: &SimConfig) -> Result<System> {
        config.validate()?;
        let (train_stream, test_stream, rate) = split_streams(config)?;
        let n_classes = train_stream.n_classes();
        let sensor_cfgs = if config.sensors.is_empty() {
            let c = train_stream.channels();
            (0..3)
                .map(|i| super::config::SensorConfig {
                    channels: vec![i % c],
                    trace: None,
                    initial_uj: None,
                })
                .collect()
        } else {
            config.sensors.clone()
        };

        let mut sensors = Vec::with_capacity(sensor_cfgs.len());
        for (i, sc) in sensor_cfgs.iter().enumerate() {
            let (train, test) = match &test_stream {
                Some(t) => (windows_for(&train_stream, &sc.channels, config)?, windows_for(t, &sc.channels, config)?),
                None => {
                    let all = windows_for(&train_stream, &sc.channels, config)?;
                    let fraction = match config.dataset {
                        DatasetConfig::File { train_fraction, .. } => train_fraction,
                        _ => unreachable!("only file datasets share one stream"),
                    };
                    let cut = (all.len() as f64 * fraction).round() as usize;
                    let (a, b) = all.split_at(cut.min(all.len()));
                    (a.to_vec(), b.to_vec())
                }
            };
            if train.is_empty() || test.is_empty() {
                return Err(Error::config(format!("sensor {i}: not enough data for training and simulation")));
            }
            let m = &config.model;
            let tc = TrainConfig {
                lr: m.lr,
                epochs: m.epochs,
                hidden: m.hidden,
                batch_size: m.batch_size,
                seed: config.seed.wrapping_add(i as u64),
            };
            let host = HostModels::train(&train, &tc, config.codec.k_max, config.codec.sample_params(), m.host_draws)?;
            let tune = TrainConfig {
                epochs: (m.epochs / 4).max(1),
                ..tc
            };
            let d1 = quantize_finetuned(&host.full, m.d1_bits, &train, &train, &tune, m.finetune_max_drop)?;
            let d2 = quantize_finetuned(&host.full, m.d2_bits, &train, &train, &tune, m.finetune_max_drop)?;
            let bank = TemplateBank::from_windows(&train, n_classes)?;
            let budget = if !config.codec.aac {
                None
            } else if !config.codec.cluster_budget.is_empty() {
                let mut t = ClusterBudgetTable::new(config.codec.k_max);
                for (class, &k) in &config.codec.cluster_budget {
                    let class: ClassId = class.parse().map_err(|_| Error::config(format!("bad class id '{class}'")))?;
                    t.set(class, k)?;
                }
                Some(t)
            } else {
                Some(calibrate_cluster_budget(&host, &train, config.codec.k_max, config.codec.aac_tolerance, tc.seed)?)
            };
            sensors.push(SensorSetup {
                channels: sc.channels.clone(),
                node: NodeModels { d1, d2, bank, budget },
                host,
                test,
                initial: Energy::from_uj(sc.initial_uj.unwrap_or(config.energy.initial_uj)),
                trace: sc.trace.clone().unwrap_or_else(|| config.energy.trace.clone()),
            });
        }
        Ok(System {
            config: config.clone(),
            sensors,
            n_classes,
            sample_rate_hz: rate,
        })
    }

    pub fn node_params(&self, policy: Policy, initial: Energy) -> NodeParams {
        let c = &self.config;
        NodeParams {
            policy,
            costs: c.energy.cost_table.clone(),
            initial,
            capacity: Energy::from_uj(c.energy.capacity_uj),
            leakage_uw: c.energy.leakage_uw,
            predictor_window: c.energy.predictor_window,
            step_s: c.energy.step_ms / 1000.0,
            sample_rate_hz: self.sample_rate_hz,
            stride_samples: c.window.length - c.window.overlap,
            k_max: c.codec.k_max,
            max_iter: c.codec.max_iter,
            sample: c.codec.sample_params(),
            memo_threshold: c.codec.memo_threshold,
        }
    }

    /// Steps needed to simulate every sensor's windows.
    pub fn horizon_steps(&self) -> usize {
        let p = self.node_params(self.config.policy, Energy::ZERO);
        self.sensors.iter().map(|s| p.horizon_steps(&s.test)).max().unwrap_or(0)
    }

    /// Harvest traces from the config, one per sensor.
    pub fn traces(&self) -> Result<Vec<HarvestTrace>> {
        let dt = self.config.energy.step_ms / 1000.0;
        let duration = self.horizon_steps() as f64 * dt;
        self.sensors
            .iter()
            .enumerate()
            .map(|(i, s)| match &s.trace {
                TraceConfig::File { file, source } => load_trace(file, *source),
                TraceConfig::Generated(p) => gen_trace(p, duration, dt, self.config.seed.wrapping_add(1000 * (i as u64 + 1))),
            })
            .collect()
    }

    pub fn simulate(&self) -> Result<SimReport> {
        self.run(self.config.policy, &self.traces()?)
    }

    /// Runs every node under `policy`, then the host: decode, reconstruct,
    /// classify and ensemble.
    pub fn run(&self, policy: Policy, traces: &[HarvestTrace]) -> Result<SimReport> {
        if traces.len() != self.sensors.len() {
            return Err(Error::config(format!("{} traces for {} sensors", traces.len(), self.sensors.len())));
        }
        let dt = self.config.energy.step_ms / 1000.0;
        let mut logs: Vec<NodeLog> = Vec::with_capacity(self.sensors.len());
        for (i, (s, trace)) in self.sensors.iter().zip(traces).enumerate() {
            let params = self.node_params(policy, s.initial);
            let power = trace.resample(dt, params.horizon_steps(&s.test))?;
            logs.push(run_node(i, &s.node, &params, &s.test, &power, self.config.seed)?);
        }

        let mut by_window: BTreeMap<u64, WindowRecord> = BTreeMap::new();
        for (s, log) in self.sensors.iter().zip(&logs) {
            for (w, nl) in s.test.iter().zip(&log.windows) {
                let result = match &nl.message {
                    Some(bytes) => Some(self.host_classify(s, w, bytes)?),
                    None => None,
                };
                let rec = by_window.entry(w.window_id).or_insert_with(|| WindowRecord {
                    window_id: w.window_id,
                    label: w.label,
                    final_class: None,
                    nodes: Vec::new(),
                });
                rec.nodes.push(NodeDecisionRecord {
                    node: log.node,
                    strategy: nl.strategy,
                    k: nl.k,
                    charged_uj: nl.charged.uj(),
                    body_bytes: nl.body_bytes,
                    class: result.map(|r| r.0),
                    confidence: result.map(|r| r.1),
                    decided_step: nl.decided_step,
                    attempted: nl.attempted,
                });
            }
        }
        for rec in by_window.values_mut() {
            let results: Vec<(ClassId, f64)> = rec.nodes.iter().filter_map(|d| Some((d.class?, d.confidence?))).collect();
            if !results.is_empty() {
                rec.final_class = Some(ensemble(&results)?);
            }
        }

        let nodes: Vec<NodeSummary> = self
            .sensors
            .iter()
            .zip(&logs)
            .zip(traces)
            .map(|((s, log), trace)| {
                let mut histogram = empty_histogram();
                for w in &log.windows {
                    *histogram.entry(w.strategy.name().to_string()).or_default() += 1;
                }
                let charged: i64 = log.windows.iter().map(|w| w.charged.pj()).sum();
                NodeSummary {
                    node: log.node,
                    channels: s.channels.clone(),
                    trace_mean_uw: trace.mean_power_uw(),
                    histogram,
                    energy: EnergySummary::from_ledger(&log.ledger, self.config.energy.capacity_uj, log.final_stored.pj(), charged),
                }
            })
            .collect();
        let windows: Vec<WindowRecord> = by_window.into_values().collect();
        let metrics = metrics(&windows, &nodes, self.config.window.length);
        Ok(SimReport {
            policy: policy.to_string(),
            seed: self.config.seed,
            window_length: self.config.window.length,
            windows,
            nodes,
            metrics,
        })
    }

    fn host_classify(&self, s: &SensorSetup, w: &SensorWindow, bytes: &[u8]) -> Result<(ClassId, f64)> {
        let msg = Message::from_bytes(bytes)?;
        let (len, channels) = (w.len(), msg.channels as usize);
        let seed = self.config.seed ^ ((msg.node as u64) << 40) ^ msg.window_id as u64;
        match msg.kind {
            MessageBody::Result => Ok(msg.result_payload().expect("result message")),
            MessageBody::Cluster => {
                let c = decode_cluster(&msg.body, msg.size_param as usize, channels, len, w.ranges())?;
                s.host.classify_cluster(&c, seed)
            }
            MessageBody::Sample => {
                let c = decode_sample(&msg.body, msg.size_param as usize, channels, len, w.ranges())?;
                s.host.classify_sample(&c, seed)
            }
        }
    }
}

/// Trains, simulates under the configured policy and reports.
pub fn run_system(config: &SimConfig) -> Result<SimReport> {
    System::prepare(config)?.simulate()
}
