//! Dynamic GOP switching: walk a video segment by segment, re-selecting a
//! configuration from the segment's Pareto front at every GOP boundary.
//!
//! Selection happens once per GOP step even though it is constant within a
//! segment when fronts are static; the loop stays faithful to the dynamic
//! encoding procedure and keeps time-varying fronts possible later.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::backend::{fmt_num, Measurement, VideoSegment};
use crate::config_space::GopConfiguration;
use crate::id::ConfigId;
use crate::pareto::ParetoFront;
use crate::solver::{solve_on_front, ModeRequest, SolveError};

/// What to do when a segment's request has no feasible configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfeasiblePolicy {
    /// Fail the whole plan.
    #[default]
    Abort,
    /// Emit the segment as a single null-selection step and continue.
    Skip,
    /// Re-solve with no bounds at all, flagging the steps as relaxed.
    RelaxNone,
}

impl std::fmt::Display for InfeasiblePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InfeasiblePolicy::Abort => "abort",
            InfeasiblePolicy::Skip => "skip",
            InfeasiblePolicy::RelaxNone => "relax-none",
        })
    }
}

impl std::str::FromStr for InfeasiblePolicy {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, PlanError> {
        match s {
            "abort" => Ok(InfeasiblePolicy::Abort),
            "skip" => Ok(InfeasiblePolicy::Skip),
            "relax-none" | "relax_none" => Ok(InfeasiblePolicy::RelaxNone),
            other => Err(PlanError::InvalidSchedule(format!("unknown policy {other:?}"))),
        }
    }
}

/// One scheduled stretch of video and the request active over it.
#[derive(Debug, Clone)]
pub struct ScheduleEntry {
    pub segment: VideoSegment,
    pub request: ModeRequest,
}

/// An ordered, contiguous, non-overlapping sequence of scheduled segments.
#[derive(Debug, Clone)]
pub struct SwitchSchedule {
    entries: Vec<ScheduleEntry>,
    pub on_infeasible: InfeasiblePolicy,
}

impl SwitchSchedule {
    pub fn new(
        entries: Vec<ScheduleEntry>,
        on_infeasible: InfeasiblePolicy,
    ) -> Result<Self, PlanError> {
        for window in entries.windows(2) {
            let prev = &window[0].segment;
            let next = &window[1].segment;
            if next.start_frame != prev.end_frame + 1 {
                return Err(PlanError::InvalidSchedule(format!(
                    "segments must be contiguous and non-overlapping: {} ends at frame {}, {} starts at {}",
                    prev.video_id, prev.end_frame, next.video_id, next.start_frame
                )));
            }
        }
        for entry in &entries {
            entry.request.validate().map_err(|e| PlanError::InvalidSchedule(e.to_string()))?;
        }
        Ok(SwitchSchedule { entries, on_infeasible })
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    /// Selection satisfied the request constraints.
    Selected,
    /// Constraints were infeasible; selection came from the unconstrained
    /// objective under the relax-none policy.
    Relaxed,
    /// Constraints were infeasible and the segment was skipped.
    InfeasibleSkipped,
}

impl std::fmt::Display for StepStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StepStatus::Selected => "selected",
            StepStatus::Relaxed => "relaxed",
            StepStatus::InfeasibleSkipped => "infeasible-skipped",
        })
    }
}

/// One GOP-sized step of the walk. The measurement is the per-segment
/// average record of the selected configuration.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub frame_start: u32,
    pub frame_end: u32,
    pub video_id: String,
    pub config_id: Option<ConfigId>,
    pub measurement: Option<Measurement>,
    pub request: ModeRequest,
    pub status: StepStatus,
}

/// Per-segment aggregates: arithmetic means for PSNR and bitrate, summed
/// encoding time with each step contributing its frame share.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentAggregates {
    pub mean_psnr_db: f64,
    pub total_enc_time_s: f64,
    pub mean_bitrate_kbps: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentTotals {
    pub video_id: String,
    pub frame_start: u32,
    pub frame_end: u32,
    pub steps: usize,
    /// `None` when the segment was skipped as infeasible.
    pub aggregates: Option<SegmentAggregates>,
}

/// The full log of a planned walk.
#[derive(Debug, Clone)]
pub struct SwitchTrace {
    pub steps: Vec<TraceStep>,
    pub totals: Vec<SegmentTotals>,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("no front provided for video {0}")]
    MissingFront(String),
    #[error("selected configuration {0} is not in the configuration catalog")]
    UnknownConfig(ConfigId),
    #[error("segment {video_id} at frame {frame}: {source}")]
    Infeasible { video_id: String, frame: u32, source: SolveError },
    #[error("solver failed: {0}")]
    SolveFailed(SolveError),
    #[error("schedule file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Map of video id to its precomputed front.
pub type FrontMap = BTreeMap<String, ParetoFront>;

fn unbounded(request: &ModeRequest) -> ModeRequest {
    ModeRequest {
        q_min: request.q_min.map(|_| f64::NEG_INFINITY),
        t_max: request.t_max.map(|_| f64::INFINITY),
        r_max: request.r_max.map(|_| f64::INFINITY),
        ..request.clone()
    }
}

/// Walk the schedule, selecting per GOP step from each segment's front and
/// advancing by the selected configuration's GOP size (a tail shorter than
/// one GOP is truncated to the segment boundary).
pub fn plan(
    schedule: &SwitchSchedule,
    fronts: &FrontMap,
    configs: &[GopConfiguration],
) -> Result<SwitchTrace, PlanError> {
    let catalog: BTreeMap<&ConfigId, &GopConfiguration> =
        configs.iter().map(|c| (&c.id, c)).collect();
    let mut steps = Vec::new();
    let mut totals = Vec::new();

    for entry in &schedule.entries {
        let segment = &entry.segment;
        let front = fronts
            .get(&segment.video_id)
            .ok_or_else(|| PlanError::MissingFront(segment.video_id.clone()))?;
        let segment_first_step = steps.len();
        let mut frame = segment.start_frame;
        while frame <= segment.end_frame {
            let (selection, status) = match solve_on_front(&entry.request, front) {
                Ok(sel) => (Some(sel), StepStatus::Selected),
                Err(SolveError::Infeasible(report)) => match schedule.on_infeasible {
                    InfeasiblePolicy::Abort => {
                        return Err(PlanError::Infeasible {
                            video_id: segment.video_id.clone(),
                            frame,
                            source: SolveError::Infeasible(report),
                        })
                    }
                    InfeasiblePolicy::Skip => (None, StepStatus::InfeasibleSkipped),
                    InfeasiblePolicy::RelaxNone => {
                        match solve_on_front(&unbounded(&entry.request), front) {
                            Ok(sel) => (Some(sel), StepStatus::Relaxed),
                            Err(_) => (None, StepStatus::InfeasibleSkipped),
                        }
                    }
                },
                Err(other) => return Err(PlanError::SolveFailed(other)),
            };
            match selection {
                Some(sel) => {
                    let config = catalog
                        .get(&sel.config_id)
                        .ok_or_else(|| PlanError::UnknownConfig(sel.config_id.clone()))?;
                    let end = (frame + config.gop_size() - 1).min(segment.end_frame);
                    let measurement = Measurement {
                        config_id: sel.config_id.clone(),
                        video_id: segment.video_id.clone(),
                        psnr_db: sel.point.psnr_db,
                        enc_time_s: sel.point.enc_time_s,
                        bitrate_kbps: sel.point.bitrate_kbps,
                    };
                    steps.push(TraceStep {
                        frame_start: frame,
                        frame_end: end,
                        video_id: segment.video_id.clone(),
                        config_id: Some(sel.config_id),
                        measurement: Some(measurement),
                        request: entry.request.clone(),
                        status,
                    });
                    frame = end + 1;
                }
                None => {
                    // skipped: one null step covering the rest of the segment
                    steps.push(TraceStep {
                        frame_start: frame,
                        frame_end: segment.end_frame,
                        video_id: segment.video_id.clone(),
                        config_id: None,
                        measurement: None,
                        request: entry.request.clone(),
                        status: StepStatus::InfeasibleSkipped,
                    });
                    break;
                }
            }
        }
        totals.push(segment_totals(segment, &steps[segment_first_step..]));
    }
    Ok(SwitchTrace { steps, totals })
}

fn segment_totals(segment: &VideoSegment, steps: &[TraceStep]) -> SegmentTotals {
    let measured: Vec<&TraceStep> = steps.iter().filter(|s| s.measurement.is_some()).collect();
    let aggregates = if measured.is_empty() {
        None
    } else {
        let frames = segment.frame_count() as f64;
        let n = measured.len() as f64;
        let mut psnr = 0.0;
        let mut time = 0.0;
        let mut bitrate = 0.0;
        for step in &measured {
            let m = step.measurement.as_ref().expect("filtered");
            let span = (step.frame_end - step.frame_start + 1) as f64;
            psnr += m.psnr_db;
            bitrate += m.bitrate_kbps;
            time += m.enc_time_s * span / frames;
        }
        Some(SegmentAggregates {
            mean_psnr_db: psnr / n,
            total_enc_time_s: time,
            mean_bitrate_kbps: bitrate / n,
        })
    };
    SegmentTotals {
        video_id: segment.video_id.clone(),
        frame_start: segment.start_frame,
        frame_end: segment.end_frame,
        steps: steps.len(),
        aggregates,
    }
}

/// Whole-schedule aggregates: unweighted mean of per-segment means, summed
/// per-segment time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleAggregates {
    pub mean_psnr_db: f64,
    pub total_enc_time_s: f64,
    pub mean_bitrate_kbps: f64,
    pub segments: usize,
}

fn schedule_aggregates<'a>(
    per_segment: impl Iterator<Item = &'a SegmentAggregates>,
) -> Option<ScheduleAggregates> {
    let per_segment: Vec<&SegmentAggregates> = per_segment.collect();
    if per_segment.is_empty() {
        return None;
    }
    let n = per_segment.len() as f64;
    Some(ScheduleAggregates {
        mean_psnr_db: per_segment.iter().map(|a| a.mean_psnr_db).sum::<f64>() / n,
        total_enc_time_s: per_segment.iter().map(|a| a.total_enc_time_s).sum(),
        mean_bitrate_kbps: per_segment.iter().map(|a| a.mean_bitrate_kbps).sum::<f64>() / n,
        segments: per_segment.len(),
    })
}

/// One static alternative: a single configuration held across the whole
/// schedule.
#[derive(Debug, Clone)]
pub struct StaticCandidate {
    pub config_id: ConfigId,
    pub aggregates: ScheduleAggregates,
}

/// Dynamic trace aggregates next to the best static alternative per
/// objective. A `None` best means no single front configuration satisfies
/// every segment's request.
#[derive(Debug, Clone)]
pub struct StaticComparison {
    pub dynamic: Option<ScheduleAggregates>,
    pub feasible_static_candidates: usize,
    pub best_static_psnr: Option<StaticCandidate>,
    pub best_static_time: Option<StaticCandidate>,
    pub best_static_bitrate: Option<StaticCandidate>,
}

/// Compare the dynamic walk against every single configuration that is (a)
/// on every scheduled segment's front and (b) feasible for every segment's
/// request.
pub fn compare_static(
    schedule: &SwitchSchedule,
    fronts: &FrontMap,
    configs: &[GopConfiguration],
) -> Result<StaticComparison, PlanError> {
    let trace = plan(schedule, fronts, configs)?;
    let dynamic = schedule_aggregates(trace.totals.iter().filter_map(|t| t.aggregates.as_ref()));

    // candidate ids: on the front of every scheduled segment
    let mut candidate_ids: Option<Vec<ConfigId>> = None;
    for entry in &schedule.entries {
        let front = fronts
            .get(&entry.segment.video_id)
            .ok_or_else(|| PlanError::MissingFront(entry.segment.video_id.clone()))?;
        let ids: Vec<ConfigId> = front.members.iter().map(|m| m.config_id.clone()).collect();
        candidate_ids = Some(match candidate_ids {
            None => ids,
            Some(prev) => prev.into_iter().filter(|id| ids.contains(id)).collect(),
        });
    }

    let mut candidates: Vec<StaticCandidate> = Vec::new();
    'candidate: for id in candidate_ids.unwrap_or_default() {
        let mut per_segment = Vec::new();
        for entry in &schedule.entries {
            let front = &fronts[&entry.segment.video_id];
            let point = front
                .members
                .iter()
                .find(|m| m.config_id == id)
                .expect("candidate is on every front");
            if !point_passes(&entry.request, point) {
                continue 'candidate;
            }
            per_segment.push(SegmentAggregates {
                mean_psnr_db: point.psnr_db,
                total_enc_time_s: point.enc_time_s,
                mean_bitrate_kbps: point.bitrate_kbps,
            });
        }
        let aggregates =
            schedule_aggregates(per_segment.iter()).expect("schedule entries are non-empty");
        candidates.push(StaticCandidate { config_id: id, aggregates });
    }

    let best = |candidates: &[StaticCandidate],
                key: fn(&ScheduleAggregates) -> f64,
                maximize: bool| {
        candidates
            .iter()
            .min_by(|a, b| {
                let (ka, kb) = (key(&a.aggregates), key(&b.aggregates));
                let ord = if maximize { kb.total_cmp(&ka) } else { ka.total_cmp(&kb) };
                ord.then_with(|| a.config_id.cmp(&b.config_id))
            })
            .cloned()
    };
    Ok(StaticComparison {
        dynamic,
        feasible_static_candidates: candidates.len(),
        best_static_psnr: best(&candidates, |a| a.mean_psnr_db, true),
        best_static_time: best(&candidates, |a| a.total_enc_time_s, false),
        best_static_bitrate: best(&candidates, |a| a.mean_bitrate_kbps, false),
    })
}

fn point_passes(request: &ModeRequest, p: &crate::pareto::ObjectivePoint) -> bool {
    request.q_min.is_none_or(|q| p.psnr_db > q)
        && request.t_max.is_none_or(|t| p.enc_time_s < t)
        && request.r_max.is_none_or(|r| p.bitrate_kbps < r)
}

/// Parse a schedule file: one entry per line as
/// `video_id,start_frame,end_frame,mode=...,qmin=...`; `#` starts a comment.
/// Segment geometry (size, framerate, source) is joined in from `segments`
/// by video id.
pub fn read_schedule<R: Read>(
    reader: R,
    segments: &[VideoSegment],
    on_infeasible: InfeasiblePolicy,
) -> Result<SwitchSchedule, PlanError> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let parse = |msg: String| PlanError::Parse { line: line_no, msg };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(4, ',');
        let video_id = fields.next().unwrap_or_default().trim();
        let start: u32 = fields
            .next()
            .ok_or_else(|| parse("missing start_frame".into()))?
            .trim()
            .parse()
            .map_err(|_| parse("bad start_frame".into()))?;
        let end: u32 = fields
            .next()
            .ok_or_else(|| parse("missing end_frame".into()))?
            .trim()
            .parse()
            .map_err(|_| parse("bad end_frame".into()))?;
        let request = ModeRequest::parse_kv(
            fields.next().ok_or_else(|| parse("missing request".into()))?,
        )
        .map_err(|e| parse(e.to_string()))?;
        let base = segments
            .iter()
            .find(|s| s.video_id == video_id)
            .ok_or_else(|| parse(format!("video {video_id:?} not in segment list")))?;
        let segment = VideoSegment::new(
            video_id,
            base.source_id.clone(),
            base.width,
            base.height,
            base.framerate,
            start,
            end,
        )
        .map_err(|e| parse(e.to_string()))?;
        entries.push(ScheduleEntry { segment, request });
    }
    SwitchSchedule::new(entries, on_infeasible)
}

const TRACE_HEADER: [&str; 9] = [
    "frame_start",
    "frame_end",
    "video_id",
    "config_id",
    "psnr_db",
    "enc_time_s",
    "bitrate_kbps",
    "status",
    "request",
];

/// Export a trace as columnar text.
pub fn write_trace<W: Write>(writer: W, trace: &SwitchTrace) -> Result<(), PlanError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)
        .map_err(|e| PlanError::Parse { line: 0, msg: e.to_string() })?;
    for step in &trace.steps {
        let (psnr, time, rate) = match &step.measurement {
            Some(m) => (fmt_num(m.psnr_db), fmt_num(m.enc_time_s), fmt_num(m.bitrate_kbps)),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            step.frame_start.to_string().as_str(),
            &step.frame_end.to_string(),
            &step.video_id,
            step.config_id.as_ref().map(|c| c.as_str()).unwrap_or(""),
            &psnr,
            &time,
            &rate,
            &step.status.to_string(),
            &step.request.to_kv(),
        ])
        .map_err(|e| PlanError::Parse { line: 0, msg: e.to_string() })?;
    }
    w.flush()?;
    Ok(())
}
