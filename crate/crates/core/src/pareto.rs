//! Dominance testing and Pareto-front extraction over the three-objective
//! space: maximize PSNR, minimize encoding time, minimize bitrate.
//!
//! Comparisons are exact on the stored values. Measurements are data, not
//! computed quantities, so no epsilon is applied.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use thiserror::Error;

use crate::backend::{fmt_num, Measurement, MEASUREMENT_HEADER};
use crate::id::ConfigId;

/// One configuration's objectives. All components must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectivePoint {
    pub config_id: ConfigId,
    pub psnr_db: f64,
    pub enc_time_s: f64,
    pub bitrate_kbps: f64,
}

impl From<&Measurement> for ObjectivePoint {
    fn from(m: &Measurement) -> Self {
        ObjectivePoint {
            config_id: m.config_id.clone(),
            psnr_db: m.psnr_db,
            enc_time_s: m.enc_time_s,
            bitrate_kbps: m.bitrate_kbps,
        }
    }
}

/// The non-dominated subset of a point set, ordered by config id.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub members: Vec<ObjectivePoint>,
    /// Number of points the front was computed from.
    pub source_size: usize,
}

#[derive(Debug, Error)]
pub enum ParetoError {
    #[error("duplicate config id {0}")]
    DuplicateId(ConfigId),
    #[error("front file row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for ParetoError {
    fn from(e: csv::Error) -> Self {
        let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
        ParetoError::Parse { row, msg: e.to_string() }
    }
}

/// Weak Pareto dominance: `a` is at least as good on every objective and
/// strictly better on at least one.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    let at_least_as_good =
        a.psnr_db >= b.psnr_db && a.enc_time_s <= b.enc_time_s && a.bitrate_kbps <= b.bitrate_kbps;
    let strictly_better =
        a.psnr_db > b.psnr_db || a.enc_time_s < b.enc_time_s || a.bitrate_kbps < b.bitrate_kbps;
    at_least_as_good && strictly_better
}

fn same_objectives(a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    a.psnr_db == b.psnr_db && a.enc_time_s == b.enc_time_s && a.bitrate_kbps == b.bitrate_kbps
}

/// Indices of points surviving the dominance scan. Groups sharing identical
/// objective vectors keep exactly one representative: the lowest config id.
pub(crate) fn non_dominated_indices(points: &[ObjectivePoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            points.iter().enumerate().all(|(j, other)| {
                if j == i {
                    return true;
                }
                let p = &points[i];
                !dominates(other, p)
                    && !(same_objectives(other, p) && other.config_id < p.config_id)
            })
        })
        .collect()
}

/// Extract the Pareto front with the plain quadratic scan. Config ids must
/// be unique; membership is deterministic and ordered by config id.
pub fn pareto_front(points: &[ObjectivePoint]) -> Result<ParetoFront, ParetoError> {
    let mut seen = BTreeSet::new();
    for p in points {
        if !seen.insert(&p.config_id) {
            return Err(ParetoError::DuplicateId(p.config_id.clone()));
        }
    }
    let mut members: Vec<ObjectivePoint> =
        non_dominated_indices(points).into_iter().map(|i| points[i].clone()).collect();
    members.sort_by(|a, b| a.config_id.cmp(&b.config_id));
    Ok(ParetoFront { members, source_size: points.len() })
}

/// Oracle hook: true iff `candidate` (a subset of `points`) is exactly the
/// brute-force front of `points`. Deliberately written as its own double
/// loop rather than through [`pareto_front`].
pub fn is_front(points: &[ObjectivePoint], candidate: &ParetoFront) -> bool {
    let ids: BTreeSet<&ConfigId> = points.iter().map(|p| &p.config_id).collect();
    if !candidate.members.iter().all(|m| ids.contains(&m.config_id)) {
        return false;
    }
    let mut expected: BTreeSet<&ConfigId> = BTreeSet::new();
    for p in points {
        let mut keep = true;
        for other in points {
            if std::ptr::eq(p, other) {
                continue;
            }
            if dominates(other, p) {
                keep = false;
                break;
            }
            if same_objectives(other, p) && other.config_id < p.config_id {
                keep = false;
                break;
            }
        }
        if keep {
            expected.insert(&p.config_id);
        }
    }
    let got: BTreeSet<&ConfigId> = candidate.members.iter().map(|m| &m.config_id).collect();
    got == expected
}

const FRONT_HEADER: [&str; 6] =
    ["config_id", "video_id", "psnr_db", "enc_time_s", "bitrate_kbps", "pareto"];

/// Write fronts as a measurement-compatible file with a trailing `pareto`
/// flag column. Only members are written; the extra column lets the file
/// document itself while staying loadable through the measurement reader.
pub fn write_fronts<'a, W, I>(writer: W, fronts: I) -> Result<(), ParetoError>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a ParetoFront)>,
{
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FRONT_HEADER)?;
    for (video_id, front) in fronts {
        for m in &front.members {
            w.write_record([
                m.config_id.as_str(),
                video_id,
                &fmt_num(m.psnr_db),
                &fmt_num(m.enc_time_s),
                &fmt_num(m.bitrate_kbps),
                "1",
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a front file back into per-video fronts (members only, so the
/// loaded `source_size` equals the member count).
pub fn read_fronts<R: Read>(
    reader: R,
) -> Result<std::collections::BTreeMap<String, ParetoFront>, ParetoError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| ParetoError::Parse { row: 1, msg: e.to_string() })?;
    if headers != FRONT_HEADER.as_slice() {
        return Err(ParetoError::Parse {
            row: 1,
            msg: format!("expected header {}", FRONT_HEADER.join(",")),
        });
    }
    let mut grouped: std::collections::BTreeMap<String, Vec<ObjectivePoint>> = Default::default();
    for (i, record) in r.records().enumerate() {
        let row = i + 2;
        let parse = |msg: String| ParetoError::Parse { row, msg };
        let record = record.map_err(|e| parse(e.to_string()))?;
        if record.len() != FRONT_HEADER.len() {
            return Err(parse(format!("expected {} fields", FRONT_HEADER.len())));
        }
        if &record[5] != "1" {
            continue;
        }
        let number = |idx: usize| -> Result<f64, ParetoError> {
            record[idx]
                .parse()
                .map_err(|_| parse(format!("bad {} {:?}", MEASUREMENT_HEADER[idx], &record[idx])))
        };
        grouped.entry(record[1].to_string()).or_default().push(ObjectivePoint {
            config_id: ConfigId::new(&record[0]),
            psnr_db: number(2)?,
            enc_time_s: number(3)?,
            bitrate_kbps: number(4)?,
        });
    }
    Ok(grouped
        .into_iter()
        .map(|(video, mut members)| {
            members.sort_by(|a, b| a.config_id.cmp(&b.config_id));
            let size = members.len();
            (video, ParetoFront { members, source_size: size })
        })
        .collect())
}
