//! One sensor node: the per-window decision flow and its energy timeline.

use serde::{Deserialize, Serialize};

use super::message::{Message, MessageBody};
use super::policy::{FlowOrder, Policy};
use crate::coreset::{
    cluster_body_len, encode_cluster, encode_sample, kmeans_coreset, sample_coreset, select_cluster_count,
    ClusterBudgetTable, ClusterLayout, SampleParams, DEFAULT_K_MAX,
};
use crate::dataio::{ClassId, SensorWindow};
use crate::energy::{CostTable, Energy, EnergyLedger, NodeEnergyState, Strategy};
use crate::error::{Error, Result};
use crate::inference::{correlate, infer, QuantModel, TemplateBank};

/// Models a node carries.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeModels {
    /// D1 model (16-bit by default).
    pub d1: QuantModel,
    /// D2 model (12-bit by default).
    pub d2: QuantModel,
    pub bank: TemplateBank,
    /// Per-class cluster counts; `None` disables activity-aware clustering.
    pub budget: Option<ClusterBudgetTable>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeParams {
    pub policy: Policy,
    pub costs: CostTable,
    pub initial: Energy,
    pub capacity: Energy,
    pub leakage_uw: f64,
    pub predictor_window: usize,
    pub step_s: f64,
    pub sample_rate_hz: f64,
    /// Samples between consecutive windows; also the decision deadline.
    pub stride_samples: usize,
    pub k_max: usize,
    pub max_iter: usize,
    pub sample: SampleParams,
    pub memo_threshold: f64,
}

impl NodeParams {
    pub fn stride_steps(&self) -> usize {
        ((self.stride_samples as f64 / self.sample_rate_hz / self.step_s).round() as usize).max(1)
    }

    /// Step at which a window becomes available: once its last sample is in.
    fn arrival_step(&self, w: &SensorWindow) -> usize {
        (((w.t0 + w.len()) as f64 / self.sample_rate_hz / self.step_s).round()) as usize
    }

    /// Decision interval of each window, `[start, start + stride_steps)`.
    pub fn schedule(&self, windows: &[SensorWindow]) -> Vec<usize> {
        let stride = self.stride_steps();
        let mut next_free = 0;
        windows
            .iter()
            .map(|w| {
                let start = self.arrival_step(w).max(next_free);
                next_free = start + stride;
                start
            })
            .collect()
    }

    /// Number of simulated steps needed for `windows`.
    pub fn horizon_steps(&self, windows: &[SensorWindow]) -> usize {
        self.schedule(windows).last().map_or(0, |s| s + self.stride_steps())
    }
}

/// Energy of a k-cluster payload for `channels` channels: the table's D3 row
/// at the default k, moved along the per-byte payload slope.
pub fn d3_cost(costs: &CostTable, k: usize, channels: usize) -> Energy {
    costs.d3_cost(
        cluster_body_len(k, channels, ClusterLayout::Recoverable),
        cluster_body_len(DEFAULT_K_MAX, channels, ClusterLayout::Recoverable),
    )
}

/// What the node knows when deciding.
#[derive(Clone, Copy, Debug)]
pub struct DecisionInput<'a> {
    pub policy: Policy,
    pub costs: &'a CostTable,
    pub stored: Energy,
    /// Income expected before the deadline.
    pub predicted: Energy,
    pub at_deadline: bool,
    /// The window correlates with a template above the memo threshold.
    pub memo_match: bool,
    /// Position of the window in the node's sequence.
    pub window_index: usize,
    pub channels: usize,
    pub k_max: usize,
    pub last_class: Option<ClassId>,
    pub budget: Option<&'a ClusterBudgetTable>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    /// Wait for more energy; re-evaluated next step.
    Defer,
    Commit {
        strategy: Strategy,
        k: Option<usize>,
        cost: Energy,
    },
}

impl Decision {
    fn drop() -> Decision {
        Decision::Commit {
            strategy: Strategy::Drop,
            k: None,
            cost: Energy::ZERO,
        }
    }
}

fn commit_or_wait(inp: &DecisionInput, strategy: Strategy, k: Option<usize>, cost: Energy) -> Decision {
    if cost <= inp.stored {
        Decision::Commit { strategy, k, cost }
    } else if inp.at_deadline {
        Decision::drop()
    } else {
        Decision::Defer
    }
}

/// The per-step decision. Under the Seeker policy the order is: memoize
/// (D0) on a template match; otherwise the first of D1, D2, D3, D4 (D4
/// before D3 for [`FlowOrder::TableGreedy`]) whose cost fits `stored +
/// predicted`; commit once `stored` covers it, else defer. At the deadline
/// nothing is predicted and an unaffordable window is dropped.
pub fn decide(inp: &DecisionInput) -> Decision {
    let costs = inp.costs;
    match inp.policy {
        Policy::Seeker(order) => {
            if inp.memo_match {
                return commit_or_wait(inp, Strategy::D0, None, costs.cost(Strategy::D0));
            }
            let budget = if inp.at_deadline { inp.stored } else { inp.stored + inp.predicted };
            let coresets = match order {
                FlowOrder::Cascade => [Strategy::D3, Strategy::D4],
                FlowOrder::TableGreedy => [Strategy::D4, Strategy::D3],
            };
            for s in [Strategy::D1, Strategy::D2, coresets[0], coresets[1]] {
                if s == Strategy::D3 {
                    let affordable = (1..=inp.k_max).rev().find(|&k| d3_cost(costs, k, inp.channels) <= budget);
                    let k = match (affordable, inp.budget) {
                        (Some(a), Some(table)) => select_cluster_count(inp.last_class, a, table),
                        (Some(a), None) if a == inp.k_max => a,
                        _ => continue,
                    };
                    return commit_or_wait(inp, s, Some(k), d3_cost(costs, k, inp.channels));
                }
                let c = costs.cost(s);
                if c <= budget {
                    return commit_or_wait(inp, s, None, c);
                }
            }
            if inp.at_deadline {
                Decision::drop()
            } else {
                Decision::Defer
            }
        }
        Policy::Err(n) => {
            if inp.window_index % (n + 1) != n {
                return Decision::drop();
            }
            let d1 = costs.cost(Strategy::D1);
            if d1 <= inp.stored {
                return Decision::Commit {
                    strategy: Strategy::D1,
                    k: None,
                    cost: d1,
                };
            }
            if inp.at_deadline {
                return commit_or_wait(inp, Strategy::D2, None, costs.cost(Strategy::D2));
            }
            Decision::Defer
        }
        Policy::Forced(Strategy::D3) => commit_or_wait(inp, Strategy::D3, Some(inp.k_max), d3_cost(costs, inp.k_max, inp.channels)),
        Policy::Forced(s) => commit_or_wait(inp, s, None, costs.cost(s)),
    }
}

/// Outcome of one window on one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeWindowLog {
    pub window_id: u64,
    pub strategy: Strategy,
    pub k: Option<usize>,
    pub charged: Energy,
    /// Message body bytes sent (0 for DROP).
    pub body_bytes: usize,
    /// Full message as sent, header included.
    #[serde(skip)]
    pub message: Option<Vec<u8>>,
    /// Class and confidence for D0, D1 and D2.
    pub local: Option<(ClassId, f64)>,
    pub decided_step: usize,
    /// False for windows an ERR node skipped as store cycles.
    pub attempted: bool,
    pub correlation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeLog {
    pub node: usize,
    pub windows: Vec<NodeWindowLog>,
    pub ledger: EnergyLedger,
    pub final_stored: Energy,
}

fn mix(seed: u64, node: usize, window: u64) -> u64 {
    seed ^ (node as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ window.wrapping_mul(0xd1b5_4a32_d192_ed03)
}

fn execute(
    node: usize,
    models: &NodeModels,
    params: &NodeParams,
    w: &SensorWindow,
    strategy: Strategy,
    k: Option<usize>,
    memo: (ClassId, f64),
    seed: u64,
) -> Result<(Option<Vec<u8>>, usize, Option<(ClassId, f64)>)> {
    let node_id = u8::try_from(node).map_err(|_| Error::config("node id does not fit a byte"))?;
    let wid = w.window_id as u32;
    let channels = u8::try_from(w.channels()).map_err(|_| Error::config("too many channels for one message"))?;
    let local = match strategy {
        Strategy::D0 => Some((memo.0, memo.1.clamp(0.0, 1.0))),
        Strategy::D1 => Some(infer(&models.d1, w)?),
        Strategy::D2 => Some(infer(&models.d2, w)?),
        _ => None,
    };
    let msg = match strategy {
        Strategy::D0 | Strategy::D1 | Strategy::D2 => {
            let (c, p) = local.expect("local result");
            Some(Message::result(node_id, wid, c, p)?)
        }
        Strategy::D3 => {
            let k = k.expect("D3 carries k");
            let c = kmeans_coreset(w, k, params.max_iter)?;
            Some(Message {
                kind: MessageBody::Cluster,
                node: node_id,
                size_param: k as u8,
                channels,
                window_id: wid,
                body: encode_cluster(&c)?.bytes,
            })
        }
        Strategy::D4 => {
            let s = sample_coreset(w, params.sample, mix(seed, node, w.window_id))?;
            Some(Message {
                kind: MessageBody::Sample,
                node: node_id,
                size_param: params.sample.m as u8,
                channels,
                window_id: wid,
                body: encode_sample(&s)?.bytes,
            })
        }
        Strategy::Drop => None,
    };
    let body = msg.as_ref().map_or(0, |m| m.body.len());
    Ok((msg.map(|m| m.to_bytes()), body, local))
}

/// Steps one node through its windows against per-step harvested power.
///
/// Each step first banks that step's harvest, then, while a window is
/// pending, asks [`decide`]; committed actions are paid from storage.
pub fn run_node(
    node: usize,
    models: &NodeModels,
    params: &NodeParams,
    windows: &[SensorWindow],
    power_uw: &[f64],
    seed: u64,
) -> Result<NodeLog> {
    let starts = params.schedule(windows);
    let stride = params.stride_steps();
    let horizon = params.horizon_steps(windows);
    if power_uw.len() < horizon {
        return Err(Error::config(format!(
            "trace covers {} steps but node {node} needs {horizon}",
            power_uw.len()
        )));
    }
    let mut state = NodeEnergyState::new(params.initial, params.capacity, params.leakage_uw, params.predictor_window)?;
    let mut logs = Vec::with_capacity(windows.len());
    let mut last_class = None;
    let mut step = 0;

    for (i, (w, &start)) in windows.iter().zip(&starts).enumerate() {
        while step < start {
            harvest(&mut state, power_uw[step], params.step_s)?;
            step += 1;
        }
        let memo = correlate(w, &models.bank)?;
        let deadline = start + stride - 1;
        let mut done = None;
        while step <= deadline {
            harvest(&mut state, power_uw[step], params.step_s)?;
            if done.is_none() {
                let remaining = (deadline - step) as f64 * params.step_s;
                let inp = DecisionInput {
                    policy: params.policy,
                    costs: &params.costs,
                    stored: state.stored(),
                    predicted: state.predict(remaining),
                    at_deadline: step == deadline,
                    memo_match: memo.1 >= params.memo_threshold,
                    window_index: i,
                    channels: w.channels(),
                    k_max: params.k_max,
                    last_class,
                    budget: models.budget.as_ref(),
                };
                if let Decision::Commit { strategy, k, cost } = decide(&inp) {
                    state.spend(cost)?;
                    let (message, body_bytes, local) = execute(node, models, params, w, strategy, k, memo, seed)?;
                    if let Some((c, _)) = local {
                        last_class = Some(c);
                    }
                    let attempted = !matches!(params.policy, Policy::Err(n) if i % (n + 1) != n);
                    done = Some(NodeWindowLog {
                        window_id: w.window_id,
                        strategy,
                        k,
                        charged: cost,
                        body_bytes,
                        message,
                        local,
                        decided_step: step,
                        attempted,
                        correlation: memo.1,
                    });
                }
            }
            step += 1;
        }
        logs.push(done.expect("decide commits by the deadline"));
    }
    let ledger = *state.ledger();
    if !ledger.balances(state.stored()) || ledger.min_stored < Energy::ZERO || ledger.max_stored > params.capacity {
        return Err(Error::Overdraw {
            requested_pj: ledger.consumed.pj(),
            available_pj: (ledger.initial + ledger.harvested).pj(),
        });
    }
    Ok(NodeLog {
        node,
        windows: logs,
        ledger,
        final_stored: state.stored(),
    })
}

fn harvest(state: &mut NodeEnergyState, power_uw: f64, dt: f64) -> Result<()> {
    state.step(Energy::from_power(power_uw, dt), Energy::ZERO, dt)?;
    state.record_power(power_uw);
    Ok(())
}
