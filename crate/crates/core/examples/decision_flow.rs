//! What a node chooses at different charge levels.
//!
//! cargo run --example decision_flow

use seeker::coreset::ClusterBudgetTable;
use seeker::energy::{CostTable, Energy};
use seeker::sim::{decide, Decision, DecisionInput, FlowOrder, Policy};

fn main() -> seeker::Result<()> {
    let costs = CostTable::default();
    let budget = ClusterBudgetTable::default().with(1, 6)?;
    println!("stored  cascade           table-greedy      (at deadline, last class 1)");
    for stored in [5.0, 9.0, 12.0, 16.9, 17.1, 24.9, 37.5] {
        let row: Vec<String> = [FlowOrder::Cascade, FlowOrder::TableGreedy]
            .into_iter()
            .map(|order| {
                let d = decide(&DecisionInput {
                    policy: Policy::Seeker(order),
                    costs: &costs,
                    stored: Energy::from_uj(stored),
                    predicted: Energy::ZERO,
                    at_deadline: true,
                    memo_match: false,
                    window_index: 0,
                    channels: 1,
                    k_max: 12,
                    last_class: Some(1),
                    budget: Some(&budget),
                });
                match d {
                    Decision::Commit { strategy, k, cost } => {
                        format!("{}{} {:.2}", strategy, k.map_or(String::new(), |k| format!("(k={k})")), cost.uj())
                    }
                    Decision::Defer => "defer".into(),
                }
            })
            .collect();
        println!("{stored:>6.1}  {:<16}  {}", row[0], row[1]);
    }
    Ok(())
}
