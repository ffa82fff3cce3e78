//! Measurement production for (configuration, segment) pairs.
//!
//! Three interchangeable sources implement [`MeasureBackend`]: an external
//! encoder process adapter ([`adapter::ExternalEncoder`]), a deterministic
//! synthetic model ([`synthetic::SyntheticModel`]), and a fixture loader
//! ([`FixtureBackend`]) for replaying previously recorded measurement files.

pub mod adapter;
pub mod synthetic;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::config_space::GopConfiguration;
use crate::id::ConfigId;

/// A frame range of a source video, with the geometry needed to convert
/// bitrate to bits per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSegment {
    pub video_id: String,
    pub source_id: String,
    pub width: u32,
    pub height: u32,
    pub framerate: f64,
    /// First frame, inclusive.
    pub start_frame: u32,
    /// Last frame, inclusive.
    pub end_frame: u32,
}

impl VideoSegment {
    pub fn new(
        video_id: impl Into<String>,
        source_id: impl Into<String>,
        width: u32,
        height: u32,
        framerate: f64,
        start_frame: u32,
        end_frame: u32,
    ) -> Result<Self, BackendError> {
        let seg = VideoSegment {
            video_id: video_id.into(),
            source_id: source_id.into(),
            width,
            height,
            framerate,
            start_frame,
            end_frame,
        };
        if seg.width == 0 || seg.height == 0 || !(seg.framerate > 0.0) {
            return Err(BackendError::InvalidSegment(format!(
                "{}: dimensions and framerate must be positive",
                seg.video_id
            )));
        }
        if seg.start_frame > seg.end_frame {
            return Err(BackendError::InvalidSegment(format!(
                "{}: start_frame {} > end_frame {}",
                seg.video_id, seg.start_frame, seg.end_frame
            )));
        }
        Ok(seg)
    }

    pub fn frame_count(&self) -> u32 {
        self.end_frame - self.start_frame + 1
    }
}

/// Observed objectives for one (configuration, segment) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub config_id: ConfigId,
    pub video_id: String,
    pub psnr_db: f64,
    pub enc_time_s: f64,
    pub bitrate_kbps: f64,
}

impl Measurement {
    pub fn new(
        config_id: ConfigId,
        video_id: impl Into<String>,
        psnr_db: f64,
        enc_time_s: f64,
        bitrate_kbps: f64,
    ) -> Result<Self, BackendError> {
        let m = Measurement { config_id, video_id: video_id.into(), psnr_db, enc_time_s, bitrate_kbps };
        if !(m.psnr_db > 0.0) || !(m.enc_time_s > 0.0) || !(m.bitrate_kbps > 0.0) {
            return Err(BackendError::InvalidMeasurement(format!(
                "({}, {}): psnr_db, enc_time_s and bitrate_kbps must all be positive",
                m.config_id, m.video_id
            )));
        }
        Ok(m)
    }
}

/// Bitrate normalized by pixel throughput: `kbps * 1000 / (w * h * fps)`.
pub fn bits_per_sample(m: &Measurement, segment: &VideoSegment) -> f64 {
    m.bitrate_kbps * 1000.0
        / (segment.width as f64 * segment.height as f64 * segment.framerate)
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("invalid encoder adapter spec: {0}")]
    InvalidAdapterSpec(String),
    #[error("encoder adapter failed: {message}\ncaptured output:\n{output}")]
    AdapterFailure { message: String, output: String },
    #[error("fixture has no measurement for ({config_id}, {video_id})")]
    FixtureMiss { config_id: ConfigId, video_id: String },
    #[error("measurement file row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A source of measurements. Implementations must be deterministic for the
/// synthetic and fixture backends; the external adapter measures wall-clock
/// time and is inherently noisy.
pub trait MeasureBackend {
    fn measure(
        &self,
        config: &GopConfiguration,
        segment: &VideoSegment,
    ) -> Result<Measurement, BackendError>;
}

/// Replays measurements from a previously recorded file, keyed by
/// (config_id, video_id).
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    rows: HashMap<(ConfigId, String), Measurement>,
}

impl FixtureBackend {
    pub fn from_measurements(rows: impl IntoIterator<Item = Measurement>) -> Self {
        let rows = rows
            .into_iter()
            .map(|m| ((m.config_id.clone(), m.video_id.clone()), m))
            .collect();
        FixtureBackend { rows }
    }

    pub fn from_path(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::from_measurements(load_fixture(path)?))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl MeasureBackend for FixtureBackend {
    fn measure(
        &self,
        config: &GopConfiguration,
        segment: &VideoSegment,
    ) -> Result<Measurement, BackendError> {
        self.rows
            .get(&(config.id.clone(), segment.video_id.clone()))
            .cloned()
            .ok_or_else(|| BackendError::FixtureMiss {
                config_id: config.id.clone(),
                video_id: segment.video_id.clone(),
            })
    }
}

/// Load every row of a measurement file.
pub fn load_fixture(path: &Path) -> Result<Vec<Measurement>, BackendError> {
    let file = std::fs::File::open(path)?;
    read_measurements(file)
}

pub(crate) const MEASUREMENT_HEADER: [&str; 5] =
    ["config_id", "video_id", "psnr_db", "enc_time_s", "bitrate_kbps"];

/// Read a measurement file: header required, extra trailing columns (such as
/// a front file's `pareto` flag) are ignored.
pub fn read_measurements<R: Read>(reader: R) -> Result<Vec<Measurement>, BackendError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| BackendError::Parse { row: 1, msg: e.to_string() })?;
    let header_fields: Vec<&str> = headers.iter().collect();
    if header_fields.len() < MEASUREMENT_HEADER.len()
        || header_fields[..MEASUREMENT_HEADER.len()] != MEASUREMENT_HEADER
    {
        return Err(BackendError::Parse {
            row: 1,
            msg: format!("expected header to start with {}", MEASUREMENT_HEADER.join(",")),
        });
    }
    let width = header_fields.len();
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 2;
        let parse = |msg: String| BackendError::Parse { row, msg };
        let record = record.map_err(|e| parse(e.to_string()))?;
        if record.len() != width {
            return Err(parse(format!("expected {width} fields, found {}", record.len())));
        }
        let number = |idx: usize| -> Result<f64, BackendError> {
            record[idx]
                .parse()
                .map_err(|_| parse(format!("bad {} {:?}", MEASUREMENT_HEADER[idx], &record[idx])))
        };
        let m = Measurement::new(
            ConfigId::new(&record[0]),
            &record[1],
            number(2)?,
            number(3)?,
            number(4)?,
        )
        .map_err(|e| parse(e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

/// Write a measurement file in canonical form: header row, decimal point,
/// shortest float representation.
pub fn write_measurements<W: Write>(
    writer: W,
    measurements: &[Measurement],
) -> Result<(), BackendError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MEASUREMENT_HEADER)?;
    for m in measurements {
        w.write_record([
            m.config_id.as_str(),
            &m.video_id,
            &fmt_num(m.psnr_db),
            &fmt_num(m.enc_time_s),
            &fmt_num(m.bitrate_kbps),
        ])?;
    }
    w.flush()?;
    Ok(())
}

impl From<csv::Error> for BackendError {
    fn from(e: csv::Error) -> Self {
        match e.position() {
            Some(pos) => BackendError::Parse { row: pos.line() as usize, msg: e.to_string() },
            None => BackendError::Parse { row: 0, msg: e.to_string() },
        }
    }
}

/// Canonical numeric text: `Display` for `f64` prints the shortest string
/// that parses back to the same value, so export -> import -> export is
/// byte-stable.
pub(crate) fn fmt_num(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v}").expect("formatting f64 cannot fail");
    s
}

const SEGMENT_HEADER: [&str; 7] =
    ["video_id", "source_id", "width", "height", "framerate", "start_frame", "end_frame"];

/// Read a segments file (one row per video segment).
pub fn read_segments<R: Read>(reader: R) -> Result<Vec<VideoSegment>, BackendError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| BackendError::Parse { row: 1, msg: e.to_string() })?;
    if headers != SEGMENT_HEADER.as_slice() {
        return Err(BackendError::Parse {
            row: 1,
            msg: format!("expected header {}", SEGMENT_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 2;
        let parse = |msg: String| BackendError::Parse { row, msg };
        let record = record.map_err(|e| parse(e.to_string()))?;
        if record.len() != SEGMENT_HEADER.len() {
            return Err(parse(format!("expected {} fields", SEGMENT_HEADER.len())));
        }
        let field = |idx: usize| -> Result<u32, BackendError> {
            record[idx]
                .parse()
                .map_err(|_| parse(format!("bad {} {:?}", SEGMENT_HEADER[idx], &record[idx])))
        };
        let framerate: f64 = record[4]
            .parse()
            .map_err(|_| parse(format!("bad framerate {:?}", &record[4])))?;
        let seg = VideoSegment::new(
            &record[0],
            &record[1],
            field(2)?,
            field(3)?,
            framerate,
            field(5)?,
            field(6)?,
        )
        .map_err(|e| parse(e.to_string()))?;
        out.push(seg);
    }
    Ok(out)
}

/// Write a segments file.
pub fn write_segments<W: Write>(writer: W, segments: &[VideoSegment]) -> Result<(), BackendError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SEGMENT_HEADER)?;
    for s in segments {
        w.write_record([
            s.video_id.as_str(),
            &s.source_id,
            &s.width.to_string(),
            &s.height.to_string(),
            &fmt_num(s.framerate),
            &s.start_frame.to_string(),
            &s.end_frame.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
