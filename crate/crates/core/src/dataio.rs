//! Dataset loading, synthetic stream generation and windowing.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClassId = usize;

/// Static per-channel calibration bounds, used both for clamping on ingest
/// and as the value normalization of every codec.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub min: f64,
    pub max: f64,
}

impl ChannelRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::config(format!(
                "channel range must be finite with min < max, got ({min}, {max})"
            )));
        }
        Ok(ChannelRange { min, max })
    }

    /// Observed bounds of `values`, widened to a unit span when the values are constant.
    pub fn observed(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        if lo < hi {
            Some(ChannelRange { min: lo, max: hi })
        } else {
            Some(ChannelRange {
                min: lo - 0.5,
                max: hi + 0.5,
            })
        }
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    /// Maps a sensor value onto [0, 1].
    pub fn normalize(&self, v: f64) -> f64 {
        ((v - self.min) / self.span()).clamp(0.0, 1.0)
    }

    pub fn denormalize(&self, u: f64) -> f64 {
        self.min + u * self.span()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledStream {
    samples: Vec<Vec<f64>>,
    labels: Vec<ClassId>,
    sample_rate_hz: f64,
    channel_ranges: Vec<ChannelRange>,
}

impl LabeledStream {
    /// Builds a stream, clamping every sample into `channel_ranges`.
    pub fn new(
        mut samples: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
        sample_rate_hz: f64,
        channel_ranges: Vec<ChannelRange>,
    ) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::config(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if channel_ranges.is_empty() {
            return Err(Error::config("stream needs at least one channel"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::config("sample rate must be positive"));
        }
        for r in &channel_ranges {
            ChannelRange::new(r.min, r.max)?;
        }
        for (i, row) in samples.iter_mut().enumerate() {
            if row.len() != channel_ranges.len() {
                return Err(Error::Shape {
                    expected: format!("{} channels", channel_ranges.len()),
                    got: format!("{} at sample {i}", row.len()),
                });
            }
            for (v, r) in row.iter_mut().zip(&channel_ranges) {
                *v = r.clamp(*v);
            }
        }
        Ok(LabeledStream {
            samples,
            labels,
            sample_rate_hz,
            channel_ranges,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channel_ranges.len()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_ranges(&self) -> &[ChannelRange] {
        &self.channel_ranges
    }

    /// Number of classes, i.e. one past the largest label.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Projection of the stream onto a subset of its channels.
    pub fn select_channels(&self, channels: &[usize]) -> Result<LabeledStream> {
        if channels.is_empty() {
            return Err(Error::config("channel selection is empty"));
        }
        if let Some(&bad) = channels.iter().find(|&&c| c >= self.channels()) {
            return Err(Error::config(format!(
                "channel {bad} out of range for a {}-channel stream",
                self.channels()
            )));
        }
        Ok(LabeledStream {
            samples: self
                .samples
                .iter()
                .map(|row| channels.iter().map(|&c| row[c]).collect())
                .collect(),
            labels: self.labels.clone(),
            sample_rate_hz: self.sample_rate_hz,
            channel_ranges: channels.iter().map(|&c| self.channel_ranges[c]).collect(),
        })
    }
}

/// One L×C block of samples; the unit of inference and compression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorWindow {
    /// Row-major: `values[t * channels + c]`.
    values: Vec<f64>,
    len: usize,
    channels: usize,
    pub label: Option<ClassId>,
    pub window_id: u64,
    pub t0: usize,
    ranges: Vec<ChannelRange>,
}

impl SensorWindow {
    /// Builds a window from per-timestep rows, clamping into `ranges`.
    pub fn from_rows(rows: &[Vec<f64>], ranges: Vec<ChannelRange>) -> Result<Self> {
        let channels = ranges.len();
        let mut values = Vec::with_capacity(rows.len() * channels);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != channels {
                return Err(Error::Shape {
                    expected: format!("{channels} channels"),
                    got: format!("{} at row {t}", row.len()),
                });
            }
            values.extend(row.iter().zip(&ranges).map(|(v, r)| r.clamp(*v)));
        }
        Ok(SensorWindow {
            values,
            len: rows.len(),
            channels,
            label: None,
            window_id: 0,
            t0: 0,
            ranges,
        })
    }

    /// Builds a window from per-channel columns of equal length.
    pub fn from_channels(columns: &[Vec<f64>], ranges: Vec<ChannelRange>) -> Result<Self> {
        if columns.len() != ranges.len() || columns.is_empty() {
            return Err(Error::Shape {
                expected: format!("{} channels", ranges.len()),
                got: format!("{}", columns.len()),
            });
        }
        let len = columns[0].len();
        if columns.iter().any(|c| c.len() != len) {
            return Err(Error::Shape {
                expected: format!("columns of length {len}"),
                got: "ragged columns".into(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..len)
            .map(|t| columns.iter().map(|col| col[t]).collect())
            .collect();
        Self::from_rows(&rows, ranges)
    }

    pub fn with_meta(mut self, label: Option<ClassId>, window_id: u64, t0: usize) -> Self {
        self.label = label;
        self.window_id = window_id;
        self.t0 = t0;
        self
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn ranges(&self) -> &[ChannelRange] {
        &self.ranges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.values[t * self.channels + c]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.get(t, c)).collect()
    }

    /// Copy with each value mapped through `f(channel, value)`, re-clamped.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> SensorWindow {
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            let c = i % self.channels;
            *v = self.ranges[c].clamp(f(c, *v));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    Mhealth,
    Pamap2,
    BearingCsv,
}

impl DatasetFormat {
    pub fn default_sample_rate(self) -> f64 {
        match self {
            DatasetFormat::Mhealth => 50.0,
            DatasetFormat::Pamap2 => 100.0,
            DatasetFormat::BearingCsv => 12_000.0,
        }
    }

    /// Chest acceleration x/y/z for MHEALTH; hand IMU acceleration for PAMAP2.
    pub fn default_channels(self) -> Vec<usize> {
        match self {
            DatasetFormat::Mhealth => vec![0, 1, 2],
            DatasetFormat::Pamap2 => vec![4, 5, 6],
            DatasetFormat::BearingCsv => vec![0],
        }
    }

    pub fn default_label_col(self) -> Option<usize> {
        match self {
            DatasetFormat::Mhealth => Some(23),
            DatasetFormat::Pamap2 => Some(1),
            DatasetFormat::BearingCsv => None,
        }
    }
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mhealth" => Ok(DatasetFormat::Mhealth),
            "pamap2" => Ok(DatasetFormat::Pamap2),
            "bearing-csv" => Ok(DatasetFormat::BearingCsv),
            other => Err(Error::config(format!("unknown dataset format `{other}`"))),
        }
    }
}

/// Reads a whitespace- or comma-separated numeric log.
///
/// `label_col = None` means the last column holds the label. Labels are
/// remapped onto contiguous ids in ascending order of their raw values, and
/// `channel_ranges` are the observed per-channel bounds.
pub fn load_dataset(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    channel_spec: &[usize],
    label_col: Option<usize>,
) -> Result<LabeledStream> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if channel_spec.is_empty() {
        return Err(Error::config("dataset.channels is empty"));
    }

    let data_err = |line: usize, msg: String| Error::Data {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let label_idx = label_col.unwrap_or(fields.len().saturating_sub(1));
        let max_needed = channel_spec.iter().copied().max().unwrap_or(0).max(label_idx);
        if max_needed >= fields.len() {
            return Err(Error::config(format!(
                "{}:{lineno}: column {max_needed} requested but row has {} columns",
                path.display(),
                fields.len()
            )));
        }
        let parse = |col: usize| -> Result<f64> {
            let v: f64 = fields[col].parse().map_err(|_| {
                data_err(lineno, format!("column {col}: `{}` is not a number", fields[col]))
            })?;
            if !v.is_finite() {
                return Err(data_err(lineno, format!("column {col}: non-finite value `{}`", fields[col])));
            }
            Ok(v)
        };
        let row = channel_spec.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?;
        let label = parse(label_idx)?;
        if label.fract() != 0.0 {
            return Err(data_err(lineno, format!("label `{label}` is not an integer")));
        }
        rows.push(row);
        raw_labels.push(label as i64);
    }
    if rows.is_empty() {
        return Err(data_err(0, "no data rows".into()));
    }

    let mut distinct = raw_labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let labels = raw_labels
        .iter()
        .map(|l| distinct.binary_search(l).expect("label present"))
        .collect();

    let ranges = (0..channel_spec.len())
        .map(|c| ChannelRange::observed(rows.iter().map(|r| r[c])).expect("finite rows"))
        .collect();

    LabeledStream::new(rows, labels, format.default_sample_rate(), ranges)
}

/// Slices a stream into overlapping windows.
///
/// Windows start every `length - overlap` samples; the trailing partial
/// window is discarded and a stream shorter than `length` yields nothing.
/// A window's label is the majority of its per-timestep labels, ties going
/// to the lowest class id.
pub fn window_stream(stream: &LabeledStream, length: usize, overlap: usize) -> Result<Vec<SensorWindow>> {
    if length == 0 || overlap >= length {
        return Err(Error::config(format!(
            "window needs 0 <= overlap < length, got overlap {overlap}, length {length}"
        )));
    }
    if stream.len() < length {
        return Ok(Vec::new());
    }
    let stride = length - overlap;
    let n_classes = stream.n_classes().max(1);
    let count = (stream.len() - length) / stride + 1;
    (0..count)
        .map(|w| {
            let t0 = w * stride;
            let rows = &stream.samples[t0..t0 + length];
            let mut votes = vec![0usize; n_classes];
            for &l in &stream.labels[t0..t0 + length] {
                votes[l] += 1;
            }
            let label = majority(&votes);
            SensorWindow::from_rows(rows, stream.channel_ranges.clone())
                .map(|win| win.with_meta(Some(label), w as u64, t0))
        })
        .collect()
}

fn majority(votes: &[usize]) -> ClassId {
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    best
}

/// Parameters for [`gen_synthetic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub windows_per_class: usize,
    pub channels: usize,
    pub length: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
}

fn default_rate() -> f64 {
    50.0
}

impl SyntheticSpec {
    pub fn new(
        n_classes: usize,
        windows_per_class: usize,
        channels: usize,
        length: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        SyntheticSpec {
            n_classes,
            windows_per_class,
            channels,
            length,
            noise_sigma,
            seed,
            sample_rate_hz: default_rate(),
        }
    }
}

/// Blocks of one class emitted back to back before the stream switches class.
const RUN_BLOCKS: usize = 5;

/// Frequency (Hz), amplitude and second-harmonic weight of a class on a channel.
pub fn class_signature(class: ClassId, channel: usize) -> (f64, f64, f64) {
    let freq = 0.9 + 0.85 * class as f64 + 0.2 * channel as f64;
    let amp = 1.0 - 0.1 * ((class + channel) % 3) as f64;
    let harmonic = 0.15 * ((class + 2 * channel) % 4) as f64;
    (freq, amp, harmonic)
}

/// Deterministic labeled stream of class-specific sinusoids plus Gaussian noise.
///
/// The stream is cut into runs of at most five window-lengths of one class,
/// shuffled; phase is continuous inside a run and random between runs.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<LabeledStream> {
    if spec.n_classes < 2 {
        return Err(Error::config("synthetic stream needs at least 2 classes"));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::config("noise_sigma must be a finite value >= 0"));
    }
    if spec.channels == 0 || spec.length == 0 || spec.windows_per_class == 0 {
        return Err(Error::config("channels, length and windows_per_class must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::config(e.to_string()))?;

    let mut runs = Vec::new();
    for class in 0..spec.n_classes {
        let mut left = spec.windows_per_class;
        while left > 0 {
            let n = left.min(RUN_BLOCKS);
            runs.push((class, n));
            left -= n;
        }
    }
    runs.shuffle(&mut rng);

    let total = spec.n_classes * spec.windows_per_class * spec.length;
    let mut samples = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (class, blocks) in runs {
        let phases: Vec<f64> = (0..spec.channels).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        for j in 0..blocks * spec.length {
            let t = j as f64 / spec.sample_rate_hz;
            let row = (0..spec.channels)
                .map(|ch| {
                    let (f, a, h) = class_signature(class, ch);
                    let arg = 2.0 * PI * f * t + phases[ch];
                    let clean = a * (arg.sin() + h * (2.0 * arg).sin());
                    if spec.noise_sigma > 0.0 {
                        clean + noise.sample(&mut rng)
                    } else {
                        clean
                    }
                })
                .collect();
            samples.push(row);
            labels.push(class);
        }
    }

    let bound = 1.6 + 4.0 * spec.noise_sigma;
    let ranges = vec![ChannelRange { min: -bound, max: bound }; spec.channels];
    LabeledStream::new(samples, labels, spec.sample_rate_hz, ranges)
}

/// Reads one window from CSV: a row per time step, a column per channel.
///
/// A non-numeric first row is treated as a header. A `# ranges: lo:hi,...`
/// comment fixes the channel ranges; otherwise `ranges` is used, and failing
/// that the observed bounds.
pub fn read_window_csv(path: impl AsRef<Path>, ranges: Option<Vec<ChannelRange>>) -> Result<SensorWindow> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let data_err = |line: usize, msg: String| Error::Data {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut declared = None;
    let mut header_allowed = true;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(spec) = line.strip_prefix("# ranges:") {
            declared = Some(parse_ranges(spec).map_err(|e| data_err(idx + 1, e.to_string()))?);
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let first = std::mem::replace(&mut header_allowed, false);
        match fields.iter().map(|f| f.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>() {
            Ok(row) if row.iter().all(|v| v.is_finite()) => {
                if rows.first().is_some_and(|r| r.len() != row.len()) {
                    return Err(data_err(idx + 1, format!("expected {} columns, got {}", rows[0].len(), row.len())));
                }
                rows.push(row);
            }
            _ if first => continue,
            _ => return Err(data_err(idx + 1, format!("cannot parse `{line}`"))),
        }
    }
    if rows.is_empty() {
        return Err(data_err(0, "window has no rows".into()));
    }
    let channels = rows[0].len();
    let ranges = match ranges.or(declared) {
        Some(r) if r.len() == 1 && channels > 1 => vec![r[0]; channels],
        Some(r) => r,
        None => (0..channels)
            .map(|c| ChannelRange::observed(rows.iter().map(|r| r[c])).expect("finite rows"))
            .collect(),
    };
    if ranges.len() != channels {
        return Err(Error::config(format!("{} ranges given for {channels} channels", ranges.len())));
    }
    SensorWindow::from_rows(&rows, ranges)
}

/// Parses `lo:hi,lo:hi,...`.
pub fn parse_ranges(spec: &str) -> Result<Vec<ChannelRange>> {
    spec.split(',')
        .map(|part| {
            let (lo, hi) = part
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::config(format!("range `{part}` is not lo:hi")))?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::config(format!("range bound `{v}` is not a number")));
            ChannelRange::new(num(lo)?, num(hi)?)
        })
        .collect()
}

/// Writes a window in the layout [`read_window_csv`] accepts, ranges included.
pub fn write_window_csv(w: &SensorWindow, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("# ranges: ");
    out += &w.ranges().iter().map(|r| format!("{}:{}", r.min, r.max)).collect::<Vec<_>>().join(",");
    out.push('\n');
    out += &(0..w.channels()).map(|c| format!("ch{c}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for t in 0..w.len() {
        out += &(0..w.channels()).map(|c| w.get(t, c).to_string()).collect::<Vec<_>>().join(",");
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
