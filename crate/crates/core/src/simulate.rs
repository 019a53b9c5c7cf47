//! Closed-loop assembly and time-stepping: plant + fault schedule +
//! controller + reference integrated monolithically with RK4 on an
//! event-aligned grid.
//!
//! Stepping conventions (these define the numbers everything downstream
//! pins):
//! - the augmented state is the flat stack [x̄ | ζ | θ̂];
//! - fault switch instants are grid events, so no step straddles a
//!   discontinuity; within a step the owning fault segment is selected once
//!   by the step midpoint, and every RK4 stage evaluates that segment's
//!   formulas at the stage time (trace nodes use plain (t_a, t_b]
//!   ownership);
//! - the controller is re-evaluated from scratch at every stage time and
//!   stage state;
//! - θ̂ is clamped at zero after each full step if round-off drove it
//!   negative; clamp events are counted (acceptance runs require zero).

use crate::controller::{
    adaptive_rates, control_action, core_phi, filtered_error, phi_vector, ControllerState,
    ControllerVariant, CoreFunctionSpec, FilterConfig, GateFunction,
};
use crate::error::{Error, Result};
use crate::faults::FaultSchedule;
use crate::numerics::{build_grid, rk4_step, Vector};
use crate::nussbaum::NussbaumFn;
use crate::plant::{canonical_derivative, PlantModel, ReferenceTrajectory};

/// State norm beyond which a run is declared diverged even though every
/// entry is still finite — the trace has stopped meaning anything physical.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Diagnostics-only oracle data: the auxiliary matrix certifying
/// controllability and a declared true parameter bound. The running
/// controller never sees any of it.
#[derive(Clone)]
pub struct OracleSpec {
    pub alpha: crate::analysis::AuxiliaryMatrixSpec,
    /// Safety factor applied on top of the worst lumped-disturbance ratio
    /// observed along the trace when estimating the true bound θ.
    pub theta_margin_factor: f64,
    /// Declared bound ν̄ on ∫₀^∞ ν(t) dt.
    pub nu_bar: f64,
}

/// Everything needed to reproduce one run exactly.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantModel,
    pub schedule: FaultSchedule,
    pub variant: ControllerVariant,
    pub k: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub filter: FilterConfig,
    pub core: CoreFunctionSpec,
    pub hbar: NussbaumFn,
    pub gate: GateFunction,
    pub reference: ReferenceTrajectory,
    pub x0: Vector,
    pub zeta0: f64,
    pub theta0: f64,
    pub horizon: f64,
    pub h: f64,
    pub oracle: Option<OracleSpec>,
}

impl Scenario {
    /// Structural validation: dimensions, gain positivity, Hurwitz filter
    /// (already enforced by construction), schedule sanity over the horizon.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.plant.m, self.plant.n);
        if self.schedule.m != m {
            return Err(Error::config(format!(
                "fault schedule has {} channels, plant has {m}",
                self.schedule.m
            )));
        }
        if self.filter.order() != n {
            return Err(Error::config(format!(
                "filter order {} does not match plant order {n}",
                self.filter.order()
            )));
        }
        if self.reference.m != m || self.reference.order < n {
            return Err(Error::config(
                "reference must match the output dimension and provide derivatives to the plant order",
            ));
        }
        if self.x0.dim() != m * n {
            return Err(Error::config(format!(
                "initial state has dimension {}, plant needs {}",
                self.x0.dim(),
                m * n
            )));
        }
        if !self.x0.is_finite() {
            return Err(Error::config("initial state must be finite"));
        }
        if self.zeta0 < 0.0 || self.theta0 < 0.0 {
            return Err(Error::config("ζ(0) and θ̂(0) must be ≥ 0"));
        }
        if !(self.horizon > 0.0) || !(self.h > 0.0) || self.h > self.horizon {
            return Err(Error::config("need 0 < h ≤ horizon"));
        }
        if !(self.k > 0.0) || !(self.sigma1 > 0.0) || !(self.sigma2 > 0.0) {
            return Err(Error::config("k must be positive (as must σ₁, σ₂)"));
        }
        self.gate.validate()?;
        let verdict = self.schedule.validate_ploe(self.horizon, (self.horizon / 3000.0).max(self.h))?;
        if let crate::faults::PloeVerdict::Violations(v) = verdict {
            return Err(Error::config(format!(
                "fault schedule violates the partial-loss regime: {}",
                v[0]
            )));
        }
        Ok(())
    }

    fn controller_state(&self, zeta: f64, theta_hat: f64) -> ControllerState {
        ControllerState {
            zeta,
            theta_hat,
            k: self.k,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            variant: self.variant,
        }
    }
}

/// Flat layout [x̄ | ζ | θ̂].
pub fn augment_state(x: &Vector, zeta: f64, theta_hat: f64) -> Vector {
    let mut flat = Vector::zeros(x.dim() + 2);
    for i in 0..x.dim() {
        flat[i] = x[i];
    }
    flat[x.dim()] = zeta;
    flat[x.dim() + 1] = theta_hat;
    flat
}

/// Inverse of [`augment_state`]; checks the flat dimension against (m, n).
pub fn split_state(flat: &Vector, m: usize, n: usize) -> Result<(Vector, f64, f64)> {
    if flat.dim() != m * n + 2 {
        return Err(Error::domain(format!(
            "augmented state has dimension {}, expected {}",
            flat.dim(),
            m * n + 2
        )));
    }
    let x = Vector::from_slice(&flat.as_slice()[..m * n]);
    Ok((x, flat[m * n], flat[m * n + 1]))
}

/// All controller-side quantities at one (t, state) evaluation point.
struct LoopEval {
    y_star: Vector,
    e1: Vector,
    s: Vector,
    phi_vec: Vector,
    phi: f64,
    nu: f64,
    hbar: f64,
    eta: Vector,
    u: Vector,
}

fn evaluate_controller(scenario: &Scenario, t: f64, x: &Vector, zeta: f64, theta_hat: f64) -> Result<LoopEval> {
    let (m, n) = (scenario.plant.m, scenario.plant.n);
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        blocks.push(Vector::from_slice(&x.as_slice()[i * m..(i + 1) * m]));
    }
    let mut e_stack = Vec::with_capacity(n);
    for (i, block) in blocks.iter().enumerate() {
        e_stack.push(block.sub(&scenario.reference.derivative(t, i)?));
    }
    let s = filtered_error(&scenario.filter, &e_stack);
    let phi_vec = phi_vector(&scenario.filter, &e_stack);
    let phi = core_phi(&scenario.core, &blocks, &phi_vec, &s)?;
    let nu = scenario.gate.eval(t);
    let state = scenario.controller_state(zeta, theta_hat);
    let hbar = if scenario.variant.uses_nussbaum() { scenario.hbar.eval(zeta)? } else { 1.0 };
    let (u, eta) = control_action(&state, &scenario.hbar, &s, phi, nu)?;
    Ok(LoopEval {
        y_star: scenario.reference.y_star(t),
        e1: e_stack.swap_remove(0),
        s,
        phi_vec,
        phi,
        nu,
        hbar,
        eta,
        u,
    })
}

/// Time derivative of the augmented state with the fault segment pinned.
/// Public so that alternative integrators (cross-check oracles in tests) can
/// drive the identical closed loop.
pub fn closed_loop_derivative(
    scenario: &Scenario,
    segment: usize,
    t: f64,
    flat: &Vector,
) -> Result<Vector> {
    let (m, n) = (scenario.plant.m, scenario.plant.n);
    let (x, zeta, theta_hat) = split_state(flat, m, n)?;
    let eval = evaluate_controller(scenario, t, &x, zeta, theta_hat)?;
    let state = scenario.controller_state(zeta, theta_hat);
    let (zeta_rate, theta_rate) = adaptive_rates(&state, &eval.s, &eval.eta, eval.phi, eval.nu);
    let (rho, eps) = scenario.schedule.eval_segment(segment, t);
    let mut u_a = Vector::zeros(m);
    for j in 0..m {
        u_a[j] = rho[j] * eval.u[j] + eps[j];
    }
    let xdot = canonical_derivative(&scenario.plant, &x, &u_a, t)?;
    let mut out = Vector::zeros(m * n + 2);
    for i in 0..m * n {
        out[i] = xdot[i];
    }
    out[m * n] = zeta_rate;
    out[m * n + 1] = theta_rate;
    Ok(out)
}

/// One node of the recorded trace: every closed-loop observable at a grid
/// time.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub t: f64,
    pub x: Vector,
    pub y_star: Vector,
    pub e: Vector,
    pub s: Vector,
    pub phi_vec: Vector,
    pub phi: f64,
    pub nu: f64,
    pub zeta: f64,
    pub hbar: f64,
    pub theta_hat: f64,
    pub eta: Vector,
    pub u: Vector,
    pub rho_diag: Vector,
    pub eps: Vector,
    pub u_a: Vector,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunVerdict {
    Completed,
    /// State left the physical regime (non-finite derivative or norm guard).
    Diverged(f64),
    /// Nussbaum gain magnitude crossed its cap.
    GainOverflow(f64),
}

impl RunVerdict {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunVerdict::Completed)
    }
}

impl std::fmt::Display for RunVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunVerdict::Completed => write!(f, "Completed"),
            RunVerdict::Diverged(t) => write!(f, "Diverged(t={t:.6})"),
            RunVerdict::GainOverflow(t) => write!(f, "GainOverflow(t={t:.6})"),
        }
    }
}

/// Recorded run: one record per grid node (partial if aborted), the pinned
/// fault-segment id per step, and the verdict.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub scenario_name: String,
    pub m: usize,
    pub n: usize,
    pub records: Vec<TraceRecord>,
    /// Fault segment pinned for step i (records[i] → records[i+1]).
    pub step_segments: Vec<usize>,
    pub verdict: RunVerdict,
    /// Number of post-step θ̂ < 0 round-off clamps (must be 0 in acceptance).
    pub theta_clamp_events: usize,
}

impl SimulationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn error_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.e.norm()).collect()
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace always holds the initial node")
    }

    /// Record at the grid node nearest to t (within half a step).
    pub fn at_time(&self, t: f64) -> Option<&TraceRecord> {
        let mut best: Option<(f64, &TraceRecord)> = None;
        for r in &self.records {
            let d = (r.t - t).abs();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, r));
            }
        }
        best.and_then(|(d, r)| {
            let step = if self.records.len() > 1 {
                self.records[1].t - self.records[0].t
            } else {
                f64::INFINITY
            };
            (d <= 0.5 * step.max(1e-12)).then_some(r)
        })
    }

    /// Node times at which the pinned fault segment changed.
    pub fn segment_change_times(&self) -> Vec<f64> {
        let mut changes = Vec::new();
        for i in 1..self.step_segments.len() {
            if self.step_segments[i] != self.step_segments[i - 1] {
                changes.push(self.records[i].t);
            }
        }
        changes
    }
}

fn record_node(scenario: &Scenario, t: f64, flat: &Vector) -> Result<TraceRecord> {
    let (m, n) = (scenario.plant.m, scenario.plant.n);
    let (x, zeta, theta_hat) = split_state(flat, m, n)?;
    let eval = evaluate_controller(scenario, t, &x, zeta, theta_hat)?;
    let (rho, eps) = scenario.schedule.eval(t)?;
    let mut u_a = Vector::zeros(m);
    for j in 0..m {
        u_a[j] = rho[j] * eval.u[j] + eps[j];
    }
    Ok(TraceRecord {
        t,
        x,
        y_star: eval.y_star,
        e: eval.e1,
        s: eval.s,
        phi_vec: eval.phi_vec,
        phi: eval.phi,
        nu: eval.nu,
        zeta,
        hbar: eval.hbar,
        theta_hat,
        eta: eval.eta,
        u: eval.u,
        rho_diag: rho,
        eps,
        u_a,
    })
}

/// Integrates the closed loop over the scenario horizon. Divergence and gain
/// overflow abort with a partial trace and the matching verdict; hard
/// configuration errors (dimension mismatches, malformed schedules) are
/// returned as `Err` instead.
pub fn run(scenario: &Scenario) -> Result<SimulationTrace> {
    scenario.validate()?;
    let (m, n) = (scenario.plant.m, scenario.plant.n);
    let events: Vec<f64> = scenario
        .schedule
        .switch_instants
        .iter()
        .copied()
        .filter(|&ts| ts > 0.0 && ts < scenario.horizon)
        .collect();
    let grid = build_grid(0.0, scenario.horizon, scenario.h, &events)?;
    let steps = grid.steps();

    let mut flat = augment_state(&scenario.x0, scenario.zeta0, scenario.theta0);
    let mut records = Vec::with_capacity(steps.len() + 1);
    let mut step_segments = Vec::with_capacity(steps.len());
    let mut theta_clamp_events = 0usize;
    let mut verdict = RunVerdict::Completed;

    records.push(record_node(scenario, 0.0, &flat)?);

    for &(t, t_next) in &steps {
        let h = t_next - t;
        let segment = scenario.schedule.segment_owner(t + 0.5 * h)?;
        step_segments.push(segment);
        let stepped = rk4_step(
            &mut |ts, y| closed_loop_derivative(scenario, segment, ts, y),
            t,
            &flat,
            h,
        );
        flat = match stepped {
            Ok(next) => next,
            // The overflow error carries the offending gain argument ζ;
            // the verdict reports when it happened — the start of the
            // step (the time of the last recorded node).
            Err(Error::GainOverflow { .. }) => {
                verdict = RunVerdict::GainOverflow(t);
                break;
            }
            Err(Error::Divergence { t, .. }) => {
                verdict = RunVerdict::Diverged(t);
                break;
            }
            Err(other) => return Err(other),
        };
        if flat[m * n + 1] < 0.0 {
            flat[m * n + 1] = 0.0;
            theta_clamp_events += 1;
        }
        let x_norm = Vector::from_slice(&flat.as_slice()[..m * n]).norm();
        match record_node(scenario, t_next, &flat) {
            Ok(record) => records.push(record),
            Err(Error::GainOverflow { .. }) => {
                verdict = RunVerdict::GainOverflow(t_next);
                break;
            }
            Err(other) => return Err(other),
        }
        if x_norm > DIVERGENCE_NORM {
            verdict = RunVerdict::Diverged(t_next);
            break;
        }
    }

    Ok(SimulationTrace {
        scenario_name: scenario.name.clone(),
        m,
        n,
        records,
        step_segments,
        verdict,
        theta_clamp_events,
    })
}

/// Validation-only forward-Euler integration of the identical closed loop.
///
/// The production integrator is RK4; this first-order route exists so that
/// runs can be cross-checked between two integrators of different order
/// (agreement is then evidence about the model, not the stepper). Only the
/// final node is returned. `h` and `horizon` override the scenario's own.
pub fn run_fixed_euler(scenario: &Scenario, h: f64, horizon: f64) -> Result<TraceRecord> {
    scenario.validate()?;
    let (m, n) = (scenario.plant.m, scenario.plant.n);
    let events: Vec<f64> = scenario
        .schedule
        .switch_instants
        .iter()
        .copied()
        .filter(|&ts| ts > 0.0 && ts < horizon)
        .collect();
    let grid = build_grid(0.0, horizon, h, &events)?;
    let mut flat = augment_state(&scenario.x0, scenario.zeta0, scenario.theta0);
    let mut t_now = 0.0;
    for &(t, t_next) in &grid.steps() {
        let step = t_next - t;
        let segment = scenario.schedule.segment_owner(t + 0.5 * step)?;
        let rate = closed_loop_derivative(scenario, segment, t, &flat)?;
        if !rate.is_finite() {
            return Err(Error::divergence(t, "euler derivative non-finite"));
        }
        flat = flat.axpy(step, &rate);
        if flat[m * n + 1] < 0.0 {
            flat[m * n + 1] = 0.0;
        }
        if Vector::from_slice(&flat.as_slice()[..m * n]).norm() > DIVERGENCE_NORM {
            return Err(Error::divergence(t_next, "euler state norm guard"));
        }
        t_now = t_next;
    }
    record_node(scenario, t_now, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlantModel;
    use crate::presets;
    use crate::numerics::Matrix;
    use std::sync::Arc;

    fn equilibrium_scenario() -> Scenario {
        let plant = PlantModel::new(
            "healthy_double_integrator",
            2,
            2,
            1.0,
            Arc::new(|_: &Vector| Ok(Vector::zeros(2))),
            Arc::new(|_: &Vector, _| Ok(Matrix::identity(2))),
            Arc::new(|_: &Vector, _| Ok(Vector::zeros(2))),
        )
        .unwrap();
        Scenario {
            name: "equilibrium".into(),
            plant,
            schedule: FaultSchedule::healthy(2),
            variant: ControllerVariant::KnownDirectionSimplified,
            k: 10.0,
            sigma1: 1.0,
            sigma2: 0.1,
            filter: FilterConfig::new(&[5.0]).unwrap(),
            core: CoreFunctionSpec::with_unit_scales(|_| 1.0),
            hbar: NussbaumFn::study_default(),
            gate: GateFunction::study_default(),
            reference: ReferenceTrajectory::zero(2, 2),
            x0: Vector::zeros(4),
            zeta0: 0.0,
            theta0: 0.0,
            horizon: 2.0,
            h: 1e-3,
            oracle: None,
        }
    }

    #[test]
    fn equilibrium_stays_exactly_at_zero() {
        let trace = run(&equilibrium_scenario()).unwrap();
        assert!(trace.verdict.is_completed());
        assert_eq!(trace.records.len(), 2001);
        assert_eq!(trace.theta_clamp_events, 0);
        for r in &trace.records {
            assert_eq!(r.e.norm(), 0.0);
            assert_eq!(r.u.norm(), 0.0);
            assert_eq!(r.u_a.norm(), 0.0);
            assert_eq!(r.theta_hat, 0.0);
        }
    }

    #[test]
    fn augmented_layout_round_trips() {
        let x = Vector::from_slice(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let flat = augment_state(&x, 7.0, 8.0);
        assert_eq!(flat.dim(), 8); // robot shape: m·n + 2 = 6 + 2
        let (x2, z, th) = split_state(&flat, 3, 2).unwrap();
        assert_eq!(x2.as_slice(), x.as_slice());
        assert_eq!((z, th), (7.0, 8.0));

        let four = augment_state(&Vector::zeros(4), 0.0, 0.0);
        assert_eq!(four.dim(), 6); // two-channel shape: 4 + 2
        assert!(split_state(&four, 3, 2).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let mut scenario = presets::two_channel_scenario(-1.0);
        scenario.horizon = 1.0;
        let t1 = run(&scenario).unwrap();
        let t2 = run(&scenario).unwrap();
        assert_eq!(t1.records.len(), t2.records.len());
        for (a, b) in t1.records.iter().zip(&t2.records) {
            assert_eq!(a.x.as_slice(), b.x.as_slice());
            assert_eq!(a.zeta, b.zeta);
            assert_eq!(a.theta_hat, b.theta_hat);
            assert_eq!(a.u.as_slice(), b.u.as_slice());
        }
    }

    #[test]
    fn adaptive_quantities_are_nondecreasing() {
        let mut scenario = presets::two_channel_scenario(-1.0);
        scenario.horizon = 4.0; // crosses the fault switch
        let trace = run(&scenario).unwrap();
        assert!(trace.verdict.is_completed());
        assert_eq!(trace.theta_clamp_events, 0);
        for w in trace.records.windows(2) {
            assert!(w[1].zeta >= w[0].zeta);
            assert!(w[1].theta_hat >= w[0].theta_hat);
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn fault_switch_lands_on_grid_node_and_actuation_jumps_there() {
        let mut scenario = presets::two_channel_scenario(-1.0);
        scenario.horizon = 4.0;
        let trace = run(&scenario).unwrap();
        assert_eq!(trace.segment_change_times(), vec![3.0]);
        // The jump is confined to the (3.0 → 3.0+h) pair: the pre-switch
        // node still evaluates the left segment, the next node the right.
        let i3 = trace.records.iter().position(|r| r.t == 3.0).unwrap();
        let du = |i: usize| {
            trace.records[i + 1].u_a.sub(&trace.records[i].u_a).norm()
        };
        let jump = du(i3);
        // The switch pair dominates every other consecutive pair nearby:
        // steps in the post-switch transient are closed-loop reactions, an
        // order of magnitude below the coefficient discontinuity itself.
        for off in 1..=500 {
            assert!(du(i3 - off) < jump / 5.0, "pre-switch step {off} too large");
            assert!(du(i3 + off) < jump / 5.0, "post-switch step {off} too large");
        }
        assert!(du(i3 - 1) < jump / 100.0);
        // ρ at the switch node itself is still the left segment's value.
        let rho3 = &trace.records[i3].rho_diag;
        assert!((rho3[1] - (1.0 - 0.2 * 3.0_f64.tanh())).abs() < 1e-15);
        assert_eq!(trace.records[i3 + 1].rho_diag[1], 0.2);
    }

    #[test]
    fn missigned_simplified_controller_diverges() {
        let mut scenario = presets::two_channel_scenario(-1.0);
        // Known-direction law with the wrong sign assumption destabilizes.
        scenario.variant = ControllerVariant::KnownDirectionSimplified;
        scenario.name = "missigned".into();
        scenario.horizon = 1.0;
        let trace = run(&scenario).unwrap();
        match trace.verdict {
            RunVerdict::Diverged(t) => assert!(t < 0.1, "diverged only at t = {t}"),
            other => panic!("expected divergence, got {other}"),
        }
        assert!(trace.records.len() < 200);
    }

    #[test]
    fn gain_overflow_verdict_when_cap_crossed() {
        let mut scenario = presets::two_channel_scenario(1.0);
        // The positive-direction study needs h = 1e-4; at h = 1e-3 the
        // integrator is outside its stability region once |ℏ| grows, ζ
        // inflates and the gain cap trips.
        scenario.h = 1e-3;
        let trace = run(&scenario).unwrap();
        match trace.verdict {
            RunVerdict::GainOverflow(t) => assert!(t > 0.0 && t < scenario.horizon),
            other => panic!("expected gain overflow, got {other}"),
        }
    }

    #[test]
    fn validation_rejects_structural_mismatches() {
        let mut s = equilibrium_scenario();
        s.x0 = Vector::zeros(5);
        assert!(s.validate().is_err());

        let mut s = equilibrium_scenario();
        s.schedule = FaultSchedule::healthy(3);
        assert!(s.validate().is_err());

        let mut s = equilibrium_scenario();
        s.k = -1.0;
        assert!(run(&s).is_err());

        let mut s = equilibrium_scenario();
        s.theta0 = -0.5;
        assert!(s.validate().is_err());

        let mut s = equilibrium_scenario();
        s.h = 5.0;
        assert!(s.validate().is_err());
    }
}
