//! The four constrained optimization modes over a measurement set or front.
//!
//! Constraint comparisons are strict (`Q > Q_min`, `T < T_max`,
//! `BPS < BPS_max`); callers wanting inclusive bounds can nudge them by one
//! ulp. Solving over a Pareto front loses nothing: any feasible point is
//! weakly dominated by a feasible front point with an objective at least as
//! good, so [`solve`] and [`solve_on_front`] agree on objective value.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::id::ConfigId;
use crate::pareto::{non_dominated_indices, ObjectivePoint, ParetoFront};

/// The optimization mode to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrasticMode {
    /// Minimize bitrate subject to quality and time bounds.
    MinBitrate,
    /// Maximize PSNR subject to bitrate and time bounds.
    MaxQuality,
    /// Minimize encoding time (the energy proxy) subject to quality and
    /// bitrate bounds.
    MinTime,
    /// Maximize a weighted blend of all three normalized objectives subject
    /// to all three bounds.
    Typical,
}

impl fmt::Display for DrasticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DrasticMode::MinBitrate => "min-bitrate",
            DrasticMode::MaxQuality => "max-quality",
            DrasticMode::MinTime => "min-time",
            DrasticMode::Typical => "typical",
        })
    }
}

impl FromStr for DrasticMode {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, SolveError> {
        match s {
            "min-bitrate" => Ok(DrasticMode::MinBitrate),
            "max-quality" => Ok(DrasticMode::MaxQuality),
            "min-time" => Ok(DrasticMode::MinTime),
            "typical" => Ok(DrasticMode::Typical),
            other => Err(SolveError::InvalidRequest(format!("unknown mode {other:?}"))),
        }
    }
}

/// Scalarization weights for typical mode. Must be non-negative and sum
/// to 1 (within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// A mode plus its active constraints. Bounds required by the mode must be
/// present; any additional bound supplied is enforced as well.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRequest {
    pub mode: DrasticMode,
    /// Quality floor in dB, exclusive.
    pub q_min: Option<f64>,
    /// Encoding time ceiling in seconds, exclusive.
    pub t_max: Option<f64>,
    /// Bitrate ceiling in kbps, exclusive.
    pub r_max: Option<f64>,
    pub weights: Option<Weights>,
}

impl ModeRequest {
    pub fn min_bitrate(q_min: f64, t_max: f64) -> Self {
        ModeRequest { mode: DrasticMode::MinBitrate, q_min: Some(q_min), t_max: Some(t_max), r_max: None, weights: None }
    }

    pub fn max_quality(r_max: f64, t_max: f64) -> Self {
        ModeRequest { mode: DrasticMode::MaxQuality, q_min: None, t_max: Some(t_max), r_max: Some(r_max), weights: None }
    }

    pub fn min_time(q_min: f64, r_max: f64) -> Self {
        ModeRequest { mode: DrasticMode::MinTime, q_min: Some(q_min), t_max: None, r_max: Some(r_max), weights: None }
    }

    pub fn typical(q_min: f64, t_max: f64, r_max: f64, weights: Weights) -> Self {
        ModeRequest {
            mode: DrasticMode::Typical,
            q_min: Some(q_min),
            t_max: Some(t_max),
            r_max: Some(r_max),
            weights: Some(weights),
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let need = |bound: Option<f64>, name: &str| {
            if bound.is_none() {
                Err(SolveError::InvalidRequest(format!("{} requires {name}", self.mode)))
            } else {
                Ok(())
            }
        };
        match self.mode {
            DrasticMode::MinBitrate => {
                need(self.q_min, "qmin")?;
                need(self.t_max, "tmax")?;
            }
            DrasticMode::MaxQuality => {
                need(self.r_max, "rmax")?;
                need(self.t_max, "tmax")?;
            }
            DrasticMode::MinTime => {
                need(self.q_min, "qmin")?;
                need(self.r_max, "rmax")?;
            }
            DrasticMode::Typical => {
                need(self.q_min, "qmin")?;
                need(self.t_max, "tmax")?;
                need(self.r_max, "rmax")?;
            }
        }
        match (self.mode, self.weights) {
            (DrasticMode::Typical, Some(w)) => {
                if w.alpha < 0.0 || w.beta < 0.0 || w.gamma < 0.0 {
                    return Err(SolveError::InvalidRequest("weights must be non-negative".into()));
                }
                if (w.alpha + w.beta + w.gamma - 1.0).abs() > 1e-9 {
                    return Err(SolveError::InvalidRequest("weights must sum to 1".into()));
                }
            }
            (DrasticMode::Typical, None) => {
                return Err(SolveError::InvalidRequest("typical requires weights".into()))
            }
            (_, Some(_)) => {
                return Err(SolveError::InvalidRequest(format!(
                    "weights only apply to typical mode, not {}",
                    self.mode
                )))
            }
            (_, None) => {}
        }
        Ok(())
    }

    /// Flat key=value text form, e.g. `mode=min-bitrate qmin=35 tmax=600`.
    pub fn to_kv(&self) -> String {
        let mut parts = vec![format!("mode={}", self.mode)];
        if let Some(q) = self.q_min {
            parts.push(format!("qmin={q}"));
        }
        if let Some(t) = self.t_max {
            parts.push(format!("tmax={t}"));
        }
        if let Some(r) = self.r_max {
            parts.push(format!("rmax={r}"));
        }
        if let Some(w) = self.weights {
            parts.push(format!("alpha={}", w.alpha));
            parts.push(format!("beta={}", w.beta));
            parts.push(format!("gamma={}", w.gamma));
        }
        parts.join(" ")
    }

    /// Parse the key=value form; separators may be whitespace or commas.
    pub fn parse_kv(text: &str) -> Result<Self, SolveError> {
        let mut mode = None;
        let mut q_min = None;
        let mut t_max = None;
        let mut r_max = None;
        let mut alpha = None;
        let mut beta = None;
        let mut gamma = None;
        for token in text.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            let (key, value) = token.split_once('=').ok_or_else(|| {
                SolveError::InvalidRequest(format!("expected key=value, found {token:?}"))
            })?;
            let number = || -> Result<f64, SolveError> {
                value
                    .parse()
                    .map_err(|_| SolveError::InvalidRequest(format!("bad number for {key}: {value:?}")))
            };
            match key {
                "mode" => mode = Some(value.parse::<DrasticMode>()?),
                "qmin" => q_min = Some(number()?),
                "tmax" => t_max = Some(number()?),
                "rmax" => r_max = Some(number()?),
                "alpha" => alpha = Some(number()?),
                "beta" => beta = Some(number()?),
                "gamma" => gamma = Some(number()?),
                other => {
                    return Err(SolveError::InvalidRequest(format!("unknown key {other:?}")))
                }
            }
        }
        let mode = mode.ok_or_else(|| SolveError::InvalidRequest("missing mode=".into()))?;
        let weights = match (alpha, beta, gamma) {
            (None, None, None) => None,
            (Some(alpha), Some(beta), Some(gamma)) => Some(Weights { alpha, beta, gamma }),
            _ => {
                return Err(SolveError::InvalidRequest(
                    "alpha, beta and gamma must be given together".into(),
                ))
            }
        };
        let request = ModeRequest { mode, q_min, t_max, r_max, weights };
        request.validate()?;
        Ok(request)
    }
}

/// The winning configuration and the objective it achieved.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub config_id: ConfigId,
    pub point: ObjectivePoint,
    /// Raw objective: bitrate, PSNR or time for the single-objective modes,
    /// the scalarized score for typical.
    pub objective_value: f64,
    /// How many points satisfied the constraints.
    pub feasible_count: usize,
}

/// Nearest-miss diagnostics: per axis, the gap between the bound and the
/// best point satisfying the other constraints. Relaxing the bound past the
/// gap admits at least one point; `None` means relaxing that axis alone
/// cannot help.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleReport {
    pub q_min_gap: Option<f64>,
    pub t_max_gap: Option<f64>,
    pub r_max_gap: Option<f64>,
}

impl fmt::Display for InfeasibleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no point satisfies the constraints")?;
        let mut gaps = Vec::new();
        if let Some(g) = self.q_min_gap {
            gaps.push(format!("lower qmin by more than {g}"));
        }
        if let Some(g) = self.t_max_gap {
            gaps.push(format!("raise tmax by more than {g}"));
        }
        if let Some(g) = self.r_max_gap {
            gaps.push(format!("raise rmax by more than {g}"));
        }
        if !gaps.is_empty() {
            write!(f, " ({})", gaps.join("; "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("duplicate config id {0}")]
    DuplicateId(ConfigId),
    #[error("infeasible: {0}")]
    Infeasible(InfeasibleReport),
}

fn passes(request: &ModeRequest, p: &ObjectivePoint) -> bool {
    request.q_min.is_none_or(|q| p.psnr_db > q)
        && request.t_max.is_none_or(|t| p.enc_time_s < t)
        && request.r_max.is_none_or(|r| p.bitrate_kbps < r)
}

/// Pick the feasible point optimizing the requested mode.
///
/// Ties break lexicographically: primary objective, then the remaining
/// objectives in the order (PSNR desc, time asc, bitrate asc), then config
/// id, so repeated calls and permuted inputs return the same selection.
pub fn solve(request: &ModeRequest, points: &[ObjectivePoint]) -> Result<Selection, SolveError> {
    request.validate()?;
    let mut seen = BTreeSet::new();
    for p in points {
        if !seen.insert(&p.config_id) {
            return Err(SolveError::DuplicateId(p.config_id.clone()));
        }
    }

    let feasible: Vec<&ObjectivePoint> = points.iter().filter(|p| passes(request, p)).collect();
    if feasible.is_empty() {
        return Err(SolveError::Infeasible(nearest_miss(request, points)));
    }

    let score: Box<dyn Fn(&ObjectivePoint) -> f64> = match request.mode {
        DrasticMode::MinBitrate => Box::new(|p| p.bitrate_kbps),
        DrasticMode::MaxQuality => Box::new(|p| p.psnr_db),
        DrasticMode::MinTime => Box::new(|p| p.enc_time_s),
        DrasticMode::Typical => {
            let w = request.weights.expect("validated");
            typical_score(&feasible, w)
        }
    };
    // minimize for bitrate/time, maximize for quality/typical
    let primary = |p: &ObjectivePoint| match request.mode {
        DrasticMode::MinBitrate | DrasticMode::MinTime => score(p),
        DrasticMode::MaxQuality | DrasticMode::Typical => -score(p),
    };
    let best = feasible
        .iter()
        .min_by(|a, b| {
            primary(a)
                .total_cmp(&primary(b))
                .then_with(|| b.psnr_db.total_cmp(&a.psnr_db))
                .then_with(|| a.enc_time_s.total_cmp(&b.enc_time_s))
                .then_with(|| a.bitrate_kbps.total_cmp(&b.bitrate_kbps))
                .then_with(|| a.config_id.cmp(&b.config_id))
        })
        .expect("feasible set is non-empty");

    Ok(Selection {
        config_id: best.config_id.clone(),
        point: (*best).clone(),
        objective_value: score(best),
        feasible_count: feasible.len(),
    })
}

/// Solve over a precomputed front. When the front was built from the full
/// point set this returns the same objective value as [`solve`] on that set.
pub fn solve_on_front(request: &ModeRequest, front: &ParetoFront) -> Result<Selection, SolveError> {
    solve(request, &front.members)
}

/// Min-max scalarization for typical mode.
///
/// Axis ranges come from the non-dominated subset of the feasible points.
/// That subset is identical whether solving over the full set or over its
/// Pareto front, which keeps the two routes numerically equal; normalizing
/// over all feasible points would not commute with front extraction, because
/// dominated points can stretch the ranges. A zero-range axis contributes a
/// constant 0.5.
fn typical_score(feasible: &[&ObjectivePoint], w: Weights) -> Box<dyn Fn(&ObjectivePoint) -> f64> {
    let owned: Vec<ObjectivePoint> = feasible.iter().map(|p| (*p).clone()).collect();
    let reference = non_dominated_indices(&owned);
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &reference {
        let p = &owned[i];
        for (axis, v) in [p.psnr_db, p.enc_time_s, p.bitrate_kbps].into_iter().enumerate() {
            lo[axis] = lo[axis].min(v);
            hi[axis] = hi[axis].max(v);
        }
    }
    let normalize = move |v: f64, axis: usize| -> f64 {
        if hi[axis] == lo[axis] {
            0.5
        } else {
            (v - lo[axis]) / (hi[axis] - lo[axis])
        }
    };
    Box::new(move |p| {
        w.alpha * normalize(p.psnr_db, 0)
            - w.beta * normalize(p.bitrate_kbps, 2)
            - w.gamma * normalize(p.enc_time_s, 1)
    })
}

fn nearest_miss(request: &ModeRequest, points: &[ObjectivePoint]) -> InfeasibleReport {
    let gap = |drop_axis: fn(&ModeRequest) -> ModeRequest,
               value: fn(&ObjectivePoint) -> f64,
               lower_bound: bool,
               bound: Option<f64>| {
        let bound = bound?;
        let relaxed = drop_axis(request);
        let candidates: Vec<&ObjectivePoint> =
            points.iter().filter(|p| passes(&relaxed, p)).collect();
        if candidates.is_empty() {
            return None;
        }
        let best = candidates
            .iter()
            .map(|p| value(p))
            .fold(if lower_bound { f64::NEG_INFINITY } else { f64::INFINITY }, |acc, v| {
                if lower_bound {
                    acc.max(v)
                } else {
                    acc.min(v)
                }
            });
        Some(if lower_bound { bound - best } else { best - bound })
    };
    InfeasibleReport {
        q_min_gap: gap(
            |r| ModeRequest { q_min: None, ..r.clone() },
            |p| p.psnr_db,
            true,
            request.q_min,
        ),
        t_max_gap: gap(
            |r| ModeRequest { t_max: None, ..r.clone() },
            |p| p.enc_time_s,
            false,
            request.t_max,
        ),
        r_max_gap: gap(
            |r| ModeRequest { r_max: None, ..r.clone() },
            |p| p.bitrate_kbps,
            false,
            request.r_max,
        ),
    }
}
