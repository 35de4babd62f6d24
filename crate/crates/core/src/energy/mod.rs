//! Harvested power, capacitor accounting and per-action energy costs.
//!
//! Internally every quantity of energy is an integer number of picojoules
//! ([`Energy`]), so a run's ledger balances exactly. Configuration and
//! reports use microjoules and microwatts.

mod cost;
mod state;
mod trace;

pub use cost::{comm_energy, CostTable, MessageKind, Strategy, StrategyCost, ANCHOR_PAYLOAD_BYTES, RAW_ANCHOR_BYTES};
pub use state::{predict_power, EnergyLedger, NodeEnergyState, StepOutcome, DEFAULT_PREDICTOR_WINDOW};
pub use trace::{gen_trace, load_trace, save_trace, HarvestTrace, TraceProfile, TraceSource};

use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub, SubAssign};

use serde::{Deserialize, Serialize};

pub const PJ_PER_UJ: i64 = 1_000_000;

/// Energy in picojoules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Energy(pub i64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    /// Rounds to the nearest picojoule.
    pub fn from_uj(uj: f64) -> Energy {
        Energy((uj * PJ_PER_UJ as f64).round() as i64)
    }

    /// Energy delivered by `power_uw` over `seconds`.
    pub fn from_power(power_uw: f64, seconds: f64) -> Energy {
        Energy::from_uj(power_uw * seconds)
    }

    pub fn uj(self) -> f64 {
        self.0 as f64 / PJ_PER_UJ as f64
    }

    pub fn pj(self) -> i64 {
        self.0
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, o: Energy) -> Energy {
        Energy(self.0 + o.0)
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, o: Energy) -> Energy {
        Energy(self.0 - o.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, o: Energy) {
        self.0 += o.0;
    }
}

impl SubAssign for Energy {
    fn sub_assign(&mut self, o: Energy) {
        self.0 -= o.0;
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(it: I) -> Energy {
        it.fold(Energy::ZERO, Add::add)
    }
}
