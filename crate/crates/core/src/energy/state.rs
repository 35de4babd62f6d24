use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Energy;
use crate::error::{Error, Result};

pub const DEFAULT_PREDICTOR_WINDOW: usize = 16;

/// Expected income (µJ) over `horizon_s`: the mean of the last `window`
/// power samples (µW) times the horizon. Empty history predicts nothing.
pub fn predict_power(history: &[f64], window: usize, horizon_s: f64) -> f64 {
    let n = history.len().min(window.max(1));
    if n == 0 || horizon_s <= 0.0 {
        return 0.0;
    }
    let recent = &history[history.len() - n..];
    recent.iter().sum::<f64>() / n as f64 * horizon_s
}

/// Running totals for one node. `initial + harvested - consumed - discarded
/// - leaked == stored` holds exactly after every step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub initial: Energy,
    pub harvested: Energy,
    pub consumed: Energy,
    /// Income that arrived while the capacitor was full.
    pub discarded: Energy,
    pub leaked: Energy,
    pub min_stored: Energy,
    pub max_stored: Energy,
    pub steps: u64,
}

impl EnergyLedger {
    pub fn balances(&self, stored: Energy) -> bool {
        self.initial + self.harvested - self.consumed - self.discarded - self.leaked == stored
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub discarded: Energy,
    pub leaked: Energy,
}

/// Capacitor state of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEnergyState {
    stored: Energy,
    capacity: Energy,
    leakage_uw: f64,
    window: usize,
    history: VecDeque<f64>,
    ledger: EnergyLedger,
}

impl NodeEnergyState {
    pub fn new(initial: Energy, capacity: Energy, leakage_uw: f64, window: usize) -> Result<Self> {
        if capacity <= Energy::ZERO {
            return Err(Error::config("capacity must be positive"));
        }
        if initial < Energy::ZERO || initial > capacity {
            return Err(Error::config(format!(
                "initial charge {} uJ outside [0, {}] uJ",
                initial.uj(),
                capacity.uj()
            )));
        }
        if !(leakage_uw >= 0.0 && leakage_uw.is_finite()) {
            return Err(Error::config("leakage must be finite and non-negative"));
        }
        Ok(NodeEnergyState {
            stored: initial,
            capacity,
            leakage_uw,
            window: window.max(1),
            history: VecDeque::with_capacity(window.max(1)),
            ledger: EnergyLedger {
                initial,
                min_stored: initial,
                max_stored: initial,
                ..Default::default()
            },
        })
    }

    pub fn stored(&self) -> Energy {
        self.stored
    }

    pub fn capacity(&self) -> Energy {
        self.capacity
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn history(&self) -> Vec<f64> {
        self.history.iter().copied().collect()
    }

    /// Advances one time step of `dt_s` seconds: adds `harvested`, removes
    /// `consumed` and leakage, and discards whatever exceeds capacity.
    /// Consuming more than `stored + harvested` is an error and leaves the
    /// state untouched.
    pub fn step(&mut self, harvested: Energy, consumed: Energy, dt_s: f64) -> Result<StepOutcome> {
        if harvested < Energy::ZERO || consumed < Energy::ZERO {
            return Err(Error::config("harvested and consumed energy must be non-negative"));
        }
        let available = self.stored + harvested;
        if consumed > available {
            return Err(Error::Overdraw {
                requested_pj: consumed.pj(),
                available_pj: available.pj(),
            });
        }
        let after = available - consumed;
        let leaked = Energy::from_power(self.leakage_uw, dt_s).min(after);
        let after = after - leaked;
        let discarded = (after - self.capacity).max(Energy::ZERO);
        self.stored = after - discarded;

        let l = &mut self.ledger;
        l.harvested += harvested;
        l.consumed += consumed;
        l.leaked += leaked;
        l.discarded += discarded;
        l.min_stored = l.min_stored.min(self.stored);
        l.max_stored = l.max_stored.max(self.stored);
        l.steps += 1;
        debug_assert!(l.balances(self.stored));
        Ok(StepOutcome { discarded, leaked })
    }

    /// Spends `cost` from storage; the same as a zero-length step.
    pub fn spend(&mut self, cost: Energy) -> Result<()> {
        if cost > self.stored {
            return Err(Error::Overdraw {
                requested_pj: cost.pj(),
                available_pj: self.stored.pj(),
            });
        }
        self.stored -= cost;
        self.ledger.consumed += cost;
        self.ledger.min_stored = self.ledger.min_stored.min(self.stored);
        Ok(())
    }

    /// Records the power seen in the last step for the predictor.
    pub fn record_power(&mut self, power_uw: f64) {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(power_uw);
    }

    pub fn predict(&self, horizon_s: f64) -> Energy {
        let h: Vec<f64> = self.history.iter().copied().collect();
        Energy::from_uj(predict_power(&h, self.window, horizon_s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uj(v: f64) -> Energy {
        Energy::from_uj(v)
    }

    #[test]
    fn step_examples() {
        let mut s = NodeEnergyState::new(uj(10.0), uj(12.0), 0.0, 16).unwrap();
        let out = s.step(uj(5.0), Energy::ZERO, 0.001).unwrap();
        assert_eq!(s.stored(), uj(12.0));
        assert_eq!(out.discarded, uj(3.0));

        let mut s = NodeEnergyState::new(uj(10.0), uj(12.0), 0.0, 16).unwrap();
        s.step(Energy::ZERO, uj(10.0), 0.001).unwrap();
        assert_eq!(s.stored(), Energy::ZERO);

        let mut s = NodeEnergyState::new(Energy::ZERO, uj(12.0), 0.0, 16).unwrap();
        assert!(matches!(s.step(Energy::ZERO, uj(1.0), 0.001), Err(Error::Overdraw { .. })));
        assert_eq!(s.stored(), Energy::ZERO);
        assert!(s.spend(Energy(1)).is_err());
    }

    #[test]
    fn leakage_never_goes_negative() {
        let mut s = NodeEnergyState::new(uj(0.5), uj(12.0), 1000.0, 16).unwrap();
        let out = s.step(Energy::ZERO, Energy::ZERO, 0.001).unwrap();
        assert_eq!(out.leaked, uj(0.5));
        assert_eq!(s.stored(), Energy::ZERO);
        assert!(s.ledger().balances(s.stored()));
    }

    #[test]
    fn predictor_examples() {
        assert!((predict_power(&[5.0; 40], 16, 2.0) - 10.0).abs() < 1e-12);
        assert!((predict_power(&[0.0, 10.0], 2, 1.0) - 5.0).abs() < 1e-12);
        assert_eq!(predict_power(&[], 16, 1.0), 0.0);
        assert_eq!(predict_power(&[100.0, 0.0, 0.0], 2, 1.0), 0.0);
    }

    #[test]
    fn bad_initial_state_is_rejected() {
        assert!(NodeEnergyState::new(uj(13.0), uj(12.0), 0.0, 16).is_err());
        assert!(NodeEnergyState::new(Energy::ZERO, Energy::ZERO, 0.0, 16).is_err());
        assert!(NodeEnergyState::new(Energy::ZERO, uj(1.0), -1.0, 16).is_err());
    }

    proptest! {
        #[test]
        fn alternating_prediction_error_is_bounded(lo in 0.0f64..100.0, amp in 0.0f64..100.0, w in 1usize..20, horizon in 0.0f64..5.0, n in 1usize..50) {
            let hi = lo + amp;
            let hist: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { lo } else { hi }).collect();
            let mean = (lo + hi) / 2.0;
            let err = (predict_power(&hist, w, horizon) - mean * horizon).abs();
            prop_assert!(err <= amp / 2.0 * horizon + 1e-9);
        }

        #[test]
        fn ledger_balances_and_stays_in_bounds(
            init in 0i64..1000,
            ops in proptest::collection::vec((0i64..400, 0i64..600), 1..200),
            leak in 0.0f64..50.0,
        ) {
            let cap = Energy(1000);
            let mut s = NodeEnergyState::new(Energy(init), cap, leak, 4).unwrap();
            for (h, c) in ops {
                let before = s.clone();
                match s.step(Energy(h), Energy(c), 0.001) {
                    Ok(_) => {}
                    Err(_) => {
                        prop_assert!(Energy(c) > before.stored() + Energy(h));
                        prop_assert_eq!(&s, &before);
                    }
                }
                prop_assert!(s.stored() >= Energy::ZERO && s.stored() <= cap);
                prop_assert!(s.ledger().balances(s.stored()));
                let l = s.ledger();
                prop_assert!(l.consumed <= l.harvested + l.initial);
            }
        }
    }
}
