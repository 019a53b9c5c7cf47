//! Ready-made scenarios for the two simulation studies, plus the shared
//! core-function specs and certification boxes they use. These are the
//! programmatic counterparts of the checked-in scenario files.

use crate::analysis::{AuxiliaryMatrixSpec, BoxDomain};
use crate::controller::{ControllerVariant, CoreFunctionSpec, FilterConfig, GateFunction};
use crate::error::{Error, Result};
use crate::faults::{robot_study_schedule, two_channel_study_schedule, FaultSchedule};
use crate::numerics::Vector;
use crate::nussbaum::NussbaumFn;
use crate::plant::{robot_to_canonical, two_channel_study, ReferenceTrajectory, RobotModel};
use crate::simulate::{OracleSpec, Scenario};

fn two_channel_phi_f(blocks: &[Vector]) -> f64 {
    let n1 = blocks[0].norm();
    let n2 = blocks[1].norm();
    n1 * n2 + n2 + 1.0
}

/// Dominating functions for the two-channel study: φ*_f = ‖x₁‖‖x₂‖+‖x₂‖+1
/// with unit φ₁, φ₂.
pub fn two_channel_core() -> CoreFunctionSpec {
    CoreFunctionSpec::with_unit_scales(two_channel_phi_f)
}

fn robot_phi_f(blocks: &[Vector]) -> f64 {
    let nq = blocks[0].norm();
    let nqd = blocks[1].norm();
    nqd * nqd + nqd * nq + nqd + nq + 1.0
}

fn robot_phi2(blocks: &[Vector]) -> f64 {
    blocks[1].norm()
}

/// Dominating functions for the manipulator study: the drift is quadratic in
/// q̇, and the auxiliary-matrix rate scales with ‖q̇‖ (φ₂ = ‖q̇‖).
pub fn robot_core() -> CoreFunctionSpec {
    CoreFunctionSpec { phi_f: robot_phi_f, phi1: |_| 1.0, phi2: robot_phi2 }
}

/// Two-channel fault-tolerant study with unknown control direction b = ±1.
///
/// Horizon 30 s. The positive direction drives the Nussbaum gain through
/// fast high-magnitude sweeps and needs h = 1e-4 to stay inside the RK4
/// stability region; the negative direction settles at moderate gain and
/// runs at h = 1e-3.
pub fn two_channel_scenario(b: f64) -> Scenario {
    let name = if b > 0.0 { "paper_iv_b_bpos" } else { "paper_iv_b_bneg" };
    Scenario {
        name: name.into(),
        plant: two_channel_study(b).expect("built-in study plant"),
        schedule: two_channel_study_schedule(),
        variant: ControllerVariant::FaultTolerantNussbaum,
        k: 100.0,
        sigma1: 1.0,
        sigma2: 0.1,
        filter: FilterConfig::new(&[10.0]).expect("built-in filter"),
        core: two_channel_core(),
        hbar: NussbaumFn::study_default(),
        gate: GateFunction::study_default(),
        reference: ReferenceTrajectory::two_channel_study(),
        x0: Vector::from_slice(&[0.2, 0.1, 0.0, 0.0]),
        zeta0: 0.0,
        theta0: 0.0,
        horizon: 30.0,
        h: if b > 0.0 { 1e-4 } else { 1e-3 },
        oracle: Some(OracleSpec {
            alpha: AuxiliaryMatrixSpec::two_channel_study(),
            theta_margin_factor: 1.25,
            nu_bar: 1.0,
        }),
    }
}

/// 3-DOF manipulator study (known direction, simplified law) with a caller
/// supplied robustness gate; horizon 30 s at h = 1e-3.
pub fn robot_scenario(gate: GateFunction) -> Scenario {
    let name = match gate {
        GateFunction::ExpDecay { amp, rate } if amp == 0.5 && rate == 0.5 => "paper_v_b",
        GateFunction::Constant(_) => "paper_v_b_comparison_const_nu",
        GateFunction::ExpDecay { .. } => "paper_v_b_gate_variant",
    };
    Scenario {
        name: name.into(),
        plant: robot_to_canonical(RobotModel::study_default()),
        schedule: robot_study_schedule(),
        variant: ControllerVariant::KnownDirectionSimplified,
        k: 100.0,
        sigma1: 1.0,
        sigma2: 0.1,
        filter: FilterConfig::new(&[20.0]).expect("built-in filter"),
        core: robot_core(),
        hbar: NussbaumFn::study_default(),
        gate,
        reference: ReferenceTrajectory::robot_study(),
        x0: Vector::from_slice(&[0.5, 0.1, 0.12, 0.0, 0.0, 0.0]),
        zeta0: 0.0,
        theta0: 0.0,
        horizon: 30.0,
        h: 1e-3,
        oracle: None,
    }
}

pub fn robot_scenario_default() -> Scenario {
    robot_scenario(GateFunction::study_default())
}

pub fn robot_scenario_const_nu() -> Scenario {
    robot_scenario(GateFunction::Constant(0.5))
}

/// Healthy baseline: two-channel plant with no faults under the fault-free
/// Nussbaum law (positive direction, so the fine step applies).
pub fn healthy_scenario() -> Scenario {
    let mut scenario = two_channel_scenario(1.0);
    scenario.name = "healthy".into();
    scenario.schedule = FaultSchedule::healthy(2);
    scenario.variant = ControllerVariant::FaultFreeNussbaum;
    scenario
}

/// All scenario presets by their shipped names.
pub const SCENARIO_NAMES: [&str; 5] = [
    "paper_iv_b_bpos",
    "paper_iv_b_bneg",
    "paper_v_b",
    "paper_v_b_comparison_const_nu",
    "healthy",
];

pub fn scenario_by_name(name: &str) -> Result<Scenario> {
    match name {
        "paper_iv_b_bpos" => Ok(two_channel_scenario(1.0)),
        "paper_iv_b_bneg" => Ok(two_channel_scenario(-1.0)),
        "paper_v_b" => Ok(robot_scenario_default()),
        "paper_v_b_comparison_const_nu" => Ok(robot_scenario_const_nu()),
        "healthy" => Ok(healthy_scenario()),
        other => Err(Error::config(format!(
            "unknown scenario '{other}'; built-ins: {}",
            SCENARIO_NAMES.join(", ")
        ))),
    }
}

/// Certification box for the relaxed-controllability demo: sweeps x₁₁ over
/// a full period of sin, x₁₁·x₂₁ over the full cosine range, t over [0, 20].
/// `points` controls the two active state axes, `t_points` the time axis.
pub fn relaxed_demo_box(points: usize, t_points: usize) -> BoxDomain {
    BoxDomain {
        x_lo: vec![-std::f64::consts::PI, 0.0, -4.0, 0.0],
        x_hi: vec![std::f64::consts::PI, 0.0, 4.0, 0.0],
        x_points: vec![points, 1, points, 1],
        t_lo: 0.0,
        t_hi: 20.0,
        t_points,
    }
}

/// The dense grid used by the acceptance certification sweep.
pub fn relaxed_demo_box_dense() -> BoxDomain {
    relaxed_demo_box(161, 201)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_structurally() {
        for name in SCENARIO_NAMES {
            let scenario = scenario_by_name(name).unwrap();
            scenario.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(scenario.name, name);
        }
        assert!(scenario_by_name("nope").is_err());
    }

    #[test]
    fn study_steps_follow_direction_stiffness() {
        assert_eq!(two_channel_scenario(1.0).h, 1e-4);
        assert_eq!(two_channel_scenario(-1.0).h, 1e-3);
        assert_eq!(robot_scenario_default().h, 1e-3);
    }

    #[test]
    fn healthy_baseline_has_no_faults() {
        let s = healthy_scenario();
        assert_eq!(s.schedule.segment_count(), 1);
        assert!(s.schedule.switch_instants.is_empty());
        assert!(s.variant.uses_nussbaum());
    }

    #[test]
    fn core_functions_match_hand_values() {
        let blocks = [Vector::from_slice(&[3.0, 4.0]), Vector::from_slice(&[0.0, 2.0])];
        // ‖x₁‖ = 5, ‖x₂‖ = 2
        assert_eq!((two_channel_core().phi_f)(&blocks), 5.0 * 2.0 + 2.0 + 1.0);
        assert_eq!((robot_core().phi_f)(&blocks), 4.0 + 10.0 + 2.0 + 5.0 + 1.0);
        assert_eq!((robot_core().phi2)(&blocks), 2.0);
        assert_eq!((two_channel_core().phi2)(&blocks), 1.0);
    }
}
