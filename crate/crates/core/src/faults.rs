//! Intermittent multiplicative actuator faults u_a = ρ(t)·u + ε(t) with
//! piecewise schedules: per-channel effectiveness ρⱼ ∈ (0, 1] (partial loss
//! of effectiveness — total failure is out of scope) plus a bounded additive
//! bias ε.
//!
//! Segments own half-open intervals (t_a, t_b]; t = 0 is owned by the first
//! segment (closure of its domain — the integrator evaluates stages at the
//! initial instant). Switch instants are discontinuities the integrator must
//! align its grid to.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

type ChannelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One schedule segment over (t_start, t_end] with per-channel effectiveness
/// and bias functions.
#[derive(Clone)]
pub struct FaultSegment {
    /// Exclusive lower endpoint (the first segment also owns t = t_start).
    pub t_start: f64,
    /// Inclusive upper endpoint; `f64::INFINITY` on the final segment.
    pub t_end: f64,
    rho: Vec<ChannelFn>,
    eps: Vec<ChannelFn>,
}

impl FaultSegment {
    pub fn new(t_start: f64, t_end: f64, rho: Vec<ChannelFn>, eps: Vec<ChannelFn>) -> Self {
        FaultSegment { t_start, t_end, rho, eps }
    }

    /// Constant effectiveness/bias over the interval.
    pub fn constant(t_start: f64, t_end: f64, rho: &[f64], eps: &[f64]) -> Self {
        let rho = rho.iter().map(|&r| Arc::new(move |_| r) as ChannelFn).collect();
        let eps = eps.iter().map(|&e| Arc::new(move |_| e) as ChannelFn).collect();
        FaultSegment { t_start, t_end, rho, eps }
    }

    fn eval(&self, t: f64) -> (Vector, Vector) {
        let rho = Vector::from_slice(&self.rho.iter().map(|f| f(t)).collect::<Vec<_>>());
        let eps = Vector::from_slice(&self.eps.iter().map(|f| f(t)).collect::<Vec<_>>());
        (rho, eps)
    }
}

/// Ordered fault segments partitioning (0, ∞), plus the declared bias bound
/// ε̄ that [`FaultSchedule::validate_ploe`] checks by sampling.
#[derive(Clone)]
pub struct FaultSchedule {
    pub name: String,
    /// Number of actuation channels.
    pub m: usize,
    segments: Vec<FaultSegment>,
    /// Interior segment boundaries (integrator grid events).
    pub switch_instants: Vec<f64>,
    /// Declared bound on ‖ε(t)‖.
    pub eps_bound: f64,
}

impl std::fmt::Debug for FaultSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FaultSchedule")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("segments", &self.segments.len())
            .field("switch_instants", &self.switch_instants)
            .field("eps_bound", &self.eps_bound)
            .finish()
    }
}

impl FaultSchedule {
    pub fn new(
        name: impl Into<String>,
        m: usize,
        segments: Vec<FaultSegment>,
        eps_bound: f64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("fault schedule needs at least one channel"));
        }
        if segments.is_empty() {
            return Err(Error::domain("fault schedule needs at least one segment"));
        }
        if segments[0].t_start != 0.0 {
            return Err(Error::domain("first fault segment must start at t = 0"));
        }
        if segments.last().unwrap().t_end != f64::INFINITY {
            return Err(Error::domain("last fault segment must extend to infinity"));
        }
        for seg in &segments {
            if !(seg.t_end > seg.t_start) {
                return Err(Error::domain("fault segment interval is empty"));
            }
            if seg.rho.len() != m || seg.eps.len() != m {
                return Err(Error::domain(format!(
                    "fault segment channel count must be {m}"
                )));
            }
        }
        for w in segments.windows(2) {
            if w[0].t_end != w[1].t_start {
                return Err(Error::domain(format!(
                    "fault segments must tile (0, ∞): gap between t = {} and t = {}",
                    w[0].t_end, w[1].t_start
                )));
            }
        }
        if !(eps_bound >= 0.0) {
            return Err(Error::domain("declared bias bound must be nonnegative"));
        }
        let switch_instants = segments[..segments.len() - 1].iter().map(|s| s.t_end).collect();
        Ok(FaultSchedule { name: name.into(), m, segments, switch_instants, eps_bound })
    }

    /// No fault: ρ ≡ 1, ε ≡ 0 on (0, ∞).
    pub fn healthy(m: usize) -> Self {
        FaultSchedule::new(
            "healthy",
            m,
            vec![FaultSegment::constant(0.0, f64::INFINITY, &vec![1.0; m], &vec![0.0; m])],
            0.0,
        )
        .expect("static construction is valid")
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Index of the segment owning t under the (t_a, t_b] convention, with
    /// t = 0 owned by the first segment.
    pub fn segment_owner(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::domain(format!("fault schedule evaluated at t = {t}")));
        }
        if t == 0.0 {
            return Ok(0);
        }
        self.segments
            .iter()
            .position(|seg| t > seg.t_start && t <= seg.t_end)
            .ok_or_else(|| Error::domain(format!("no fault segment owns t = {t}")))
    }

    /// Evaluates a pinned segment's formulas at t. Used by the integrator,
    /// which selects the segment once per step (by step midpoint) and then
    /// evaluates every RK4 stage inside that segment.
    pub fn eval_segment(&self, index: usize, t: f64) -> (Vector, Vector) {
        self.segments[index].eval(t)
    }

    /// (ρ(t), ε(t)) at the segment owning t.
    pub fn eval(&self, t: f64) -> Result<(Vector, Vector)> {
        Ok(self.eval_segment(self.segment_owner(t)?, t))
    }

    /// u_a = ρ(t)u + ε(t); ρ returned as the diagonal effectiveness matrix.
    pub fn apply_fault(&self, u: &Vector, t: f64) -> Result<(Vector, Matrix, Vector)> {
        if u.dim() != self.m {
            return Err(Error::domain(format!(
                "input dimension {} != fault channels {}",
                u.dim(),
                self.m
            )));
        }
        if !u.is_finite() {
            return Err(Error::domain("fault model applied to non-finite input"));
        }
        let (rho, eps) = self.eval(t)?;
        let mut u_a = Vector::zeros(self.m);
        for j in 0..self.m {
            u_a[j] = rho[j] * u[j] + eps[j];
        }
        Ok((u_a, Matrix::diag(rho.as_slice()), eps))
    }

    /// Samples every channel over [sample_step, horizon] plus both one-sided
    /// limits at each switch instant; passes iff every effectiveness sample
    /// lies in (0, 1] and every bias sample respects the declared bound.
    pub fn validate_ploe(&self, horizon: f64, sample_step: f64) -> Result<PloeVerdict> {
        if !(sample_step > 0.0) || !(horizon > 0.0) {
            return Err(Error::domain("validate_ploe needs positive horizon and step"));
        }
        let mut violations = Vec::new();
        let mut check = |index: usize, t: f64, label: &str| {
            let (rho, eps) = self.eval_segment(index, t);
            for j in 0..self.m {
                if !(rho[j] > 0.0 && rho[j] <= 1.0) {
                    violations.push(PloeViolation {
                        t,
                        channel: j,
                        value: rho[j],
                        kind: PloeViolationKind::EffectivenessOutOfRange,
                        context: label.to_string(),
                    });
                }
            }
            if eps.norm() > self.eps_bound + 1e-12 {
                violations.push(PloeViolation {
                    t,
                    channel: 0,
                    value: eps.norm(),
                    kind: PloeViolationKind::BiasBoundExceeded,
                    context: label.to_string(),
                });
            }
        };
        let count = (horizon / sample_step).floor() as usize;
        for i in 0..=count {
            let t = (i as f64 * sample_step).min(horizon);
            if let Ok(idx) = self.segment_owner(t) {
                check(idx, t, "grid");
            }
        }
        for (k, &ts) in self.switch_instants.iter().enumerate() {
            if ts > horizon {
                continue;
            }
            // Left limit: owning segment at the instant; right limit: the
            // successor's formula evaluated at the same instant.
            check(k, ts, "switch left-limit");
            check(k + 1, ts, "switch right-limit");
        }
        Ok(if violations.is_empty() {
            PloeVerdict::Pass
        } else {
            PloeVerdict::Violations(violations)
        })
    }

    /// Builds a schedule from a piecewise-constant table. `rows` are
    /// (t_end, ρ diagonal, ε) with strictly increasing t_end; the last row's
    /// t_end may be finite (a final infinite segment extends it) or infinite.
    pub fn piecewise_constant(
        name: impl Into<String>,
        m: usize,
        rows: &[(f64, Vec<f64>, Vec<f64>)],
        eps_bound: f64,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("piecewise table needs at least one row"));
        }
        let mut segments = Vec::with_capacity(rows.len() + 1);
        let mut t_prev = 0.0;
        for (t_end, rho, eps) in rows {
            if rho.len() != m || eps.len() != m {
                return Err(Error::domain(format!("piecewise row width must be {m}")));
            }
            segments.push(FaultSegment::constant(t_prev, *t_end, rho, eps));
            t_prev = *t_end;
        }
        if t_prev.is_finite() {
            let (_, last_rho, last_eps) = rows.last().unwrap();
            segments.push(FaultSegment::constant(t_prev, f64::INFINITY, last_rho, last_eps));
        }
        FaultSchedule::new(name, m, segments, eps_bound)
    }
}

/// Outcome of [`FaultSchedule::validate_ploe`].
#[derive(Debug, Clone)]
pub enum PloeVerdict {
    Pass,
    Violations(Vec<PloeViolation>),
}

impl PloeVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, PloeVerdict::Pass)
    }
}

#[derive(Debug, Clone)]
pub struct PloeViolation {
    pub t: f64,
    pub channel: usize,
    pub value: f64,
    pub kind: PloeViolationKind,
    pub context: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PloeViolationKind {
    /// ρⱼ(t) outside (0, 1].
    EffectivenessOutOfRange,
    /// ‖ε(t)‖ above the declared bound.
    BiasBoundExceeded,
}

impl std::fmt::Display for PloeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            PloeViolationKind::EffectivenessOutOfRange => write!(
                f,
                "rho[{}]({:.6}) = {:.6} outside (0, 1] ({})",
                self.channel, self.t, self.value, self.context
            ),
            PloeViolationKind::BiasBoundExceeded => write!(
                f,
                "||eps({:.6})|| = {:.6} exceeds declared bound ({})",
                self.t, self.value, self.context
            ),
        }
    }
}

/// Two-channel study schedule: jump-type partial loss at t = 3 s.
pub fn two_channel_study_schedule() -> FaultSchedule {
    let eps: Vec<ChannelFn> = vec![
        Arc::new(|t: f64| 0.02 * (2.0 * t).tanh()),
        Arc::new(|t: f64| 0.02 * (3.0 * t).cos()),
    ];
    FaultSchedule::new(
        "paper_iv_b",
        2,
        vec![
            FaultSegment::new(
                0.0,
                3.0,
                vec![
                    Arc::new(|t: f64| 0.9 + 0.1 * t.sin()),
                    Arc::new(|t: f64| 1.0 - 0.2 * t.tanh()),
                ],
                eps.clone(),
            ),
            FaultSegment::new(
                3.0,
                f64::INFINITY,
                vec![Arc::new(|t: f64| 0.8 + 0.2 * t.sin()), Arc::new(|_| 0.2)],
                eps,
            ),
        ],
        0.02 * std::f64::consts::SQRT_2,
    )
    .expect("static construction is valid")
}

/// Manipulator study schedule: severe two-channel loss after t = 5 s.
pub fn robot_study_schedule() -> FaultSchedule {
    let eps: Vec<ChannelFn> = vec![
        Arc::new(|t: f64| 0.01 * (2.0 * t).tanh()),
        Arc::new(|t: f64| 0.01 * t.cos()),
        Arc::new(|t: f64| 0.01 * (3.0 * t).sin()),
    ];
    FaultSchedule::new(
        "paper_v_b",
        3,
        vec![
            FaultSegment::new(
                0.0,
                5.0,
                vec![
                    Arc::new(|t: f64| 1.0 - 0.2 * t.tanh()),
                    Arc::new(|t: f64| 0.9 + 0.1 * t.sin()),
                    Arc::new(|t: f64| 0.9 + 0.1 * t.cos()),
                ],
                eps.clone(),
            ),
            FaultSegment::new(
                5.0,
                f64::INFINITY,
                vec![
                    Arc::new(|t: f64| 0.8 + 0.05 * t.sin()),
                    Arc::new(|t: f64| 0.2 + 0.05 * t.cos()),
                    Arc::new(|t: f64| 0.2 - 0.05 * t.tanh()),
                ],
                eps,
            ),
        ],
        0.01 * 3.0_f64.sqrt(),
    )
    .expect("static construction is valid")
}

/// Names accepted by [`schedule_by_name`].
pub const FAULT_NAMES: [&str; 3] = ["healthy", "paper_iv_b", "paper_v_b"];

/// Registry of named schedules; `m` must match the schedule's channel count
/// (any m for "healthy").
pub fn schedule_by_name(name: &str, m: usize) -> Result<FaultSchedule> {
    let schedule = match name {
        "healthy" => return Ok(FaultSchedule::healthy(m)),
        "paper_iv_b" => two_channel_study_schedule(),
        "paper_v_b" => robot_study_schedule(),
        other => {
            return Err(Error::config(format!(
                "unknown fault schedule {other:?}; built-ins: {FAULT_NAMES:?}"
            )))
        }
    };
    if schedule.m != m {
        return Err(Error::config(format!(
            "fault schedule {name:?} has {} channels, plant has {m}",
            schedule.m
        )));
    }
    Ok(schedule)
}
