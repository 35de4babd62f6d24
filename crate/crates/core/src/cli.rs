//! Command-line front end. Exit codes: 0 ok, 1 usage, 2 data, 3 config.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::coreset::{
    decode_cluster_with, decode_sample, encode_cluster_with, encode_sample, kmeans_coreset, sample_coreset, ClusterLayout,
    CodecWarning, PayloadCodec, PayloadFile, SampleParams, DEFAULT_MAX_ITER,
};
use crate::dataio::{parse_ranges, read_window_csv, write_window_csv};
use crate::energy::{gen_trace, save_trace, TraceProfile};
use crate::error::{Error, Result};
use crate::inference::{accuracy, load_model, quantize, save_model};
use crate::recovery::{reconstruct_cluster, reconstruct_sample};
use crate::sim::{summarize, Policy, SimConfig, SimReport, System};

#[derive(Debug, Parser)]
#[command(name = "seeker", version, about = "Energy-harvesting sensor/host simulator with coreset codecs")]
struct Cli {
    /// Seed for every random choice; overrides a config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train every sensor's models from a config and save them.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; one sub-directory per sensor.
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize a 32-bit model file.
    Quantize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=16))]
        bits: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compress a window CSV into a payload file.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        codec: Codec,
        #[arg(long, default_value_t = 12)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        min_gap: usize,
        /// Cluster bodies without per-cluster counts (not recoverable).
        #[arg(long)]
        no_counts: bool,
        /// Channel ranges as lo:hi[,lo:hi...]; defaults to the file's or the observed range.
        #[arg(long)]
        range: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a window CSV from a payload file.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic harvested-power trace as CSV.
    TraceGen {
        #[arg(long, value_enum)]
        profile: Profile,
        #[arg(long, default_value_t = 50.0)]
        power_uw: f64,
        #[arg(long, default_value_t = 100.0)]
        high_uw: f64,
        #[arg(long, default_value_t = 0.0)]
        low_uw: f64,
        #[arg(long, default_value_t = 1.0)]
        period_s: f64,
        #[arg(long, default_value_t = 0.5)]
        duty: f64,
        #[arg(long, default_value_t = 150.0)]
        on_uw: f64,
        #[arg(long, default_value_t = 0.0)]
        off_uw: f64,
        #[arg(long, default_value_t = 1.0)]
        mean_on_s: f64,
        #[arg(long, default_value_t = 3.0)]
        mean_off_s: f64,
        #[arg(long, default_value_t = 60.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 1.0)]
        step_ms: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulation and write its report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's policy (seeker, seeker-table-greedy, err<n>, forced-<d0..d4>).
        #[arg(long)]
        policy: Option<String>,
        /// Report JSON.
        #[arg(long)]
        out: PathBuf,
        /// Per-window decision log.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tabulate one or more reports as CSV.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Codec {
    Cluster,
    Sample,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    Constant,
    SquareWave,
    MarkovBurst,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 3,
        _ => 2,
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<SimConfig> {
    let mut cfg = match path {
        Some(p) => SimConfig::load(p).map_err(|e| match e {
            Error::Io { path, source } => Error::config(format!("cannot read {}: {source}", path.display())),
            other => other,
        })?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let seed = cli.seed;
    match cli.cmd {
        Command::Train { config, out: dir } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let sys = System::prepare(&cfg)?;
            for (i, s) in sys.sensors.iter().enumerate() {
                let d = dir.join(format!("sensor{i}"));
                std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
                save_model(&s.host.full, d.join("full.skqm"))?;
                save_model(&s.node.d1, d.join("d1.skqm"))?;
                save_model(&s.node.d2, d.join("d2.skqm"))?;
                save_model(&s.host.d3, d.join("d3.skqm"))?;
                save_model(&s.host.d4, d.join("d4.skqm"))?;
                if let Some(b) = &s.node.budget {
                    let json = serde_json::to_string_pretty(b).expect("budget serializes");
                    write_file(&d.join("cluster_budget.json"), json.as_bytes())?;
                }
                writeln!(
                    out,
                    "sensor {i} channels {:?}: full {:.4}, {}-bit {:.4}, {}-bit {:.4} on {} held-out windows",
                    s.channels,
                    accuracy(&s.host.full, &s.test)?,
                    s.node.d1.bits,
                    accuracy(&s.node.d1, &s.test)?,
                    s.node.d2.bits,
                    accuracy(&s.node.d2, &s.test)?,
                    s.test.len()
                )
                .map_err(io_err)?;
            }
        }
        Command::Quantize { model, bits, out: path } => {
            let m = load_model(&model)?;
            let q = quantize(&m, bits)?;
            save_model(&q, &path)?;
            writeln!(out, "quantized to {bits} bits: {}", path.display()).map_err(io_err)?;
        }
        Command::Encode {
            input,
            codec,
            k,
            m,
            min_gap,
            no_counts,
            range,
            out: path,
        } => {
            let ranges = range.as_deref().map(parse_ranges).transpose()?;
            let w = read_window_csv(&input, ranges)?;
            let (codec, size, enc) = match codec {
                Codec::Cluster => {
                    let layout = if no_counts { ClusterLayout::Plain } else { ClusterLayout::Recoverable };
                    let c = kmeans_coreset(&w, k, DEFAULT_MAX_ITER)?;
                    (PayloadCodec::Cluster(layout), k, encode_cluster_with(&c, layout)?)
                }
                Codec::Sample => {
                    let params = SampleParams {
                        m,
                        min_gap,
                        ..Default::default()
                    };
                    let s = sample_coreset(&w, params, seed.unwrap_or(0))?;
                    (PayloadCodec::Sample, m, encode_sample(&s)?)
                }
            };
            for warning in &enc.warnings {
                let CodecWarning::CountClamped { channel, cluster, count } = warning;
                writeln!(err, "warning: channel {channel} cluster {cluster} count {count} clamped to 16").map_err(io_err)?;
            }
            let file = PayloadFile {
                codec,
                size,
                len: w.len(),
                ranges: w.ranges().to_vec(),
                body: enc.bytes,
            };
            write_file(&path, &file.to_bytes()?)?;
            writeln!(out, "body: {} bytes", file.body.len()).map_err(io_err)?;
            writeln!(out, "raw: {} bytes", w.len() * w.channels() * 4).map_err(io_err)?;
        }
        Command::Decode { input, out: path } => {
            let bytes = std::fs::read(&input).map_err(|e| Error::io(&input, e))?;
            let p = PayloadFile::from_bytes(&bytes)?;
            let channels = p.ranges.len();
            let s = seed.unwrap_or(0);
            let w = match p.codec {
                PayloadCodec::Cluster(layout) => {
                    let c = decode_cluster_with(&p.body, p.size, channels, p.len, &p.ranges, layout)?;
                    reconstruct_cluster(&c, p.len, s)?.window
                }
                PayloadCodec::Sample => {
                    let c = decode_sample(&p.body, p.size, channels, p.len, &p.ranges)?;
                    reconstruct_sample(&c, p.len, s)?
                }
            };
            write_window_csv(&w, &path)?;
            writeln!(out, "body: {} bytes", p.body.len()).map_err(io_err)?;
            writeln!(out, "window: {} x {}", w.len(), w.channels()).map_err(io_err)?;
        }
        Command::TraceGen {
            profile,
            power_uw,
            high_uw,
            low_uw,
            period_s,
            duty,
            on_uw,
            off_uw,
            mean_on_s,
            mean_off_s,
            duration_s,
            step_ms,
            out: path,
        } => {
            let p = match profile {
                Profile::Constant => TraceProfile::Constant { power_uw },
                Profile::SquareWave => TraceProfile::SquareWave {
                    high_uw,
                    low_uw,
                    period_s,
                    duty,
                },
                Profile::MarkovBurst => TraceProfile::MarkovBurst {
                    on_uw,
                    off_uw,
                    mean_on_s,
                    mean_off_s,
                },
            };
            let t = gen_trace(&p, duration_s, step_ms / 1000.0, seed.unwrap_or(0))?;
            save_trace(&t, &path)?;
            writeln!(out, "{} samples, mean {:.3} uW: {}", t.len(), t.mean_power_uw(), path.display()).map_err(io_err)?;
        }
        Command::Simulate {
            config,
            policy,
            out: path,
            csv,
        } => {
            let mut cfg = load_config(Some(&config), seed)?;
            if let Some(p) = policy {
                cfg.policy = p.parse::<Policy>()?;
            }
            let report = System::prepare(&cfg)?.simulate()?;
            report.write_json(&path)?;
            if let Some(c) = csv {
                report.write_csv(c)?;
            }
            let m = &report.metrics;
            writeln!(
                out,
                "{}: completion {:.4}, edge {:.4}, volume ratio {:.4}, accuracy {:.4}, strict {:.4}",
                report.policy, m.completion_fraction, m.edge_completion_fraction, m.data_volume_ratio, m.accuracy, m.strict_accuracy
            )
            .map_err(io_err)?;
        }
        Command::Report { reports, out: path } => {
            let loaded = reports
                .iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                    Ok((name, SimReport::load(p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let table = summarize(&loaded);
            match path {
                Some(p) => write_file(&p, table.as_bytes())?,
                None => write!(out, "{table}").map_err(io_err)?,
            }
        }
    }
    Ok(())
}
