use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSource {
    Rf,
    Piezo,
    Wifi,
    Synthetic,
}

impl FromStr for TraceSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(TraceSource::Rf),
            "piezo" => Ok(TraceSource::Piezo),
            "wifi" => Ok(TraceSource::Wifi),
            "synthetic" => Ok(TraceSource::Synthetic),
            _ => Err(Error::config(format!("unknown trace source '{s}'"))),
        }
    }
}

impl fmt::Display for TraceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceSource::Rf => "rf",
            TraceSource::Piezo => "piezo",
            TraceSource::Wifi => "wifi",
            TraceSource::Synthetic => "synthetic",
        })
    }
}

/// Harvested power samples; each value holds until the next timestamp.
#[derive(Clone, Debug, PartialEq)]
pub struct HarvestTrace {
    times_s: Vec<f64>,
    power_uw: Vec<f64>,
    pub source: TraceSource,
}

impl HarvestTrace {
    pub fn new(times_s: Vec<f64>, power_uw: Vec<f64>, source: TraceSource) -> Result<Self> {
        if times_s.is_empty() || times_s.len() != power_uw.len() {
            return Err(Error::config("trace needs one power value per timestamp and at least one row"));
        }
        if let Some(i) = times_s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::config(format!("trace timestamps not strictly increasing at row {}", i + 2)));
        }
        if let Some(i) = power_uw.iter().position(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::config(format!("trace power must be finite and >= 0 (row {})", i + 1)));
        }
        Ok(HarvestTrace {
            times_s,
            power_uw,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }

    pub fn times_s(&self) -> &[f64] {
        &self.times_s
    }

    pub fn power_uw(&self) -> &[f64] {
        &self.power_uw
    }

    /// Time up to which the trace defines power: the last sample holds for
    /// one more interval.
    pub fn end_s(&self) -> f64 {
        let n = self.times_s.len();
        let last = self.times_s[n - 1];
        if n > 1 {
            last + (last - self.times_s[n - 2])
        } else {
            last
        }
    }

    pub fn mean_power_uw(&self) -> f64 {
        self.power_uw.iter().sum::<f64>() / self.power_uw.len() as f64
    }

    /// Power at each of `steps` steps of `dt_s`, sampled at the step start.
    /// Before the first timestamp the power is zero.
    pub fn resample(&self, dt_s: f64, steps: usize) -> Result<Vec<f64>> {
        let horizon = steps as f64 * dt_s;
        if horizon > self.end_s() + 1e-9 {
            return Err(Error::config(format!(
                "trace ends at {:.3} s but the simulation needs {horizon:.3} s",
                self.end_s()
            )));
        }
        let mut out = Vec::with_capacity(steps);
        let mut j = 0;
        for i in 0..steps {
            let t = i as f64 * dt_s + 1e-9;
            while j + 1 < self.times_s.len() && self.times_s[j + 1] <= t {
                j += 1;
            }
            out.push(if self.times_s[j] <= t { self.power_uw[j] } else { 0.0 });
        }
        Ok(out)
    }
}

/// Reads `t_seconds,microwatts` rows. A header row and `#` comments are
/// skipped.
pub fn load_trace(path: impl AsRef<Path>, source: TraceSource) -> Result<HarvestTrace> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let (mut times, mut power) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let bad = |msg: String| Error::Data {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if rec.len() < 2 {
            return Err(bad("expected t_seconds,microwatts".into()));
        }
        let (t, p) = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match (t, p) {
            (Ok(t), Ok(p)) => {
                if times.last().is_some_and(|&prev| t <= prev) {
                    return Err(bad(format!("timestamp {t} does not increase")));
                }
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(bad(format!("power {p} must be finite and >= 0")));
                }
                times.push(t);
                power.push(p);
            }
            _ if i == 0 => continue,
            _ => return Err(bad(format!("cannot parse '{}'", rec.iter().collect::<Vec<_>>().join(",")))),
        }
    }
    if times.is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            line: 0,
            msg: "trace has no rows".into(),
        });
    }
    HarvestTrace::new(times, power, source)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data {
            path: path.to_path_buf(),
            line,
            msg: format!("{other:?}"),
        },
    }
}

pub fn save_trace(trace: &HarvestTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["t_s", "power_uw"]).map_err(|e| csv_error(path, e))?;
    for (t, p) in trace.times_s.iter().zip(&trace.power_uw) {
        w.write_record([t.to_string(), p.to_string()]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Synthetic harvester profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum TraceProfile {
    Constant { power_uw: f64 },
    SquareWave {
        high_uw: f64,
        low_uw: f64,
        period_s: f64,
        duty: f64,
    },
    /// Two-state source that switches between `on_uw` and `off_uw` with
    /// exponentially distributed dwell times of the given means.
    MarkovBurst {
        on_uw: f64,
        off_uw: f64,
        mean_on_s: f64,
        mean_off_s: f64,
    },
}

impl TraceProfile {
    fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match *self {
            TraceProfile::Constant { power_uw } => nonneg("power_uw", power_uw),
            TraceProfile::SquareWave {
                high_uw,
                low_uw,
                period_s,
                duty,
            } => {
                nonneg("high_uw", high_uw)?;
                nonneg("low_uw", low_uw)?;
                if !(period_s > 0.0 && period_s.is_finite()) || !(0.0..=1.0).contains(&duty) {
                    return Err(Error::config("square wave needs period_s > 0 and duty in [0, 1]"));
                }
                Ok(())
            }
            TraceProfile::MarkovBurst {
                on_uw,
                off_uw,
                mean_on_s,
                mean_off_s,
            } => {
                nonneg("on_uw", on_uw)?;
                nonneg("off_uw", off_uw)?;
                if !(mean_on_s > 0.0 && mean_off_s > 0.0 && mean_on_s.is_finite() && mean_off_s.is_finite()) {
                    return Err(Error::config("markov burst needs positive mean_on_s and mean_off_s"));
                }
                Ok(())
            }
        }
    }

    /// Long-run mean power (µW).
    pub fn mean_power_uw(&self) -> f64 {
        match *self {
            TraceProfile::Constant { power_uw } => power_uw,
            TraceProfile::SquareWave { high_uw, low_uw, duty, .. } => duty * high_uw + (1.0 - duty) * low_uw,
            TraceProfile::MarkovBurst {
                on_uw,
                off_uw,
                mean_on_s,
                mean_off_s,
            } => (on_uw * mean_on_s + off_uw * mean_off_s) / (mean_on_s + mean_off_s),
        }
    }
}

/// One sample every `dt_s` for `duration_s` seconds.
pub fn gen_trace(profile: &TraceProfile, duration_s: f64, dt_s: f64, seed: u64) -> Result<HarvestTrace> {
    profile.validate()?;
    if !(dt_s > 0.0 && duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::config("trace duration and step must be positive"));
    }
    let n = (duration_s / dt_s).round() as usize;
    if n == 0 {
        return Err(Error::config("trace duration is shorter than one step"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt_s).collect();
    let power = match *profile {
        TraceProfile::Constant { power_uw } => vec![power_uw; n],
        TraceProfile::SquareWave {
            high_uw,
            low_uw,
            period_s,
            duty,
        } => {
            // Work in whole steps so the duty cycle is exact.
            let period = ((period_s / dt_s).round() as usize).max(1);
            let high = (duty * period as f64).round() as usize;
            (0..n).map(|i| if i % period < high { high_uw } else { low_uw }).collect()
        }
        TraceProfile::MarkovBurst {
            on_uw,
            off_uw,
            mean_on_s,
            mean_off_s,
        } => {
            let leave_on = (dt_s / mean_on_s).min(1.0);
            let leave_off = (dt_s / mean_off_s).min(1.0);
            let mut on = false;
            (0..n)
                .map(|_| {
                    let p = if on { on_uw } else { off_uw };
                    let u: f64 = rng.random();
                    if u < if on { leave_on } else { leave_off } {
                        on = !on;
                    }
                    p
                })
                .collect()
        }
    };
    HarvestTrace::new(times, power, TraceSource::Synthetic)
}
