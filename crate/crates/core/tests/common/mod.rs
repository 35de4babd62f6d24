#![allow(dead_code)]

use seeker::energy::{HarvestTrace, TraceProfile};
use seeker::sim::{DatasetConfig, SimConfig, System, TraceConfig};

/// Small, fast deployment: 4 classes, one channel, three sensors.
pub fn small_config(seed: u64) -> SimConfig {
    let mut cfg = SimConfig {
        seed,
        dataset: DatasetConfig::Synthetic {
            n_classes: 4,
            channels: 1,
            noise_sigma: 0.1,
            train_windows_per_class: 15,
            test_windows_per_class: 10,
            sample_rate_hz: 50.0,
        },
        ..SimConfig::default()
    };
    cfg.model.epochs = 15;
    cfg.model.hidden = 24;
    cfg.model.host_draws = 1;
    cfg
}

pub fn with_trace(mut cfg: SimConfig, profile: TraceProfile) -> SimConfig {
    cfg.energy.trace = TraceConfig::Generated(profile);
    cfg
}

pub fn constant(power_uw: f64) -> TraceProfile {
    TraceProfile::Constant { power_uw }
}

pub fn infinite(mut cfg: SimConfig) -> SimConfig {
    cfg.energy.capacity_uj = 1e6;
    cfg.energy.initial_uj = 1e6;
    with_trace(cfg, constant(1e6))
}

pub fn prepare(cfg: &SimConfig) -> System {
    System::prepare(cfg).expect("system prepares")
}

pub fn uniform_traces(sys: &System, profile: &TraceProfile, seed: u64) -> Vec<HarvestTrace> {
    let dt = sys.config.energy.step_ms / 1000.0;
    let duration = sys.horizon_steps() as f64 * dt;
    (0..sys.sensors.len())
        .map(|i| seeker::energy::gen_trace(profile, duration, dt, seed + i as u64).unwrap())
        .collect()
}
