//! Simulation laboratory for robust adaptive asymptotic tracking of
//! uncertain MIMO systems in normal form: Nussbaum-gain handling of unknown
//! control direction, relaxed controllability through an auxiliary matrix,
//! and tolerance of intermittent partial-loss-of-effectiveness actuator
//! faults — plus the trajectory diagnostics that certify each run.

pub mod analysis;
pub mod error;
pub mod faults;
pub mod numerics;
pub mod controller;
pub mod nussbaum;
pub mod plant;
pub mod presets;
pub mod simulate;

pub use analysis::{alpha_by_name, assumption2_bound_check, beta_along_trace, certify_controllability, lyapunov_budget, lyapunov_budget_with_theta, peak_error_in_window, quadratic_skew_relative, skew_identity_check, theta_oracle_bound, tracking_metrics, AuxiliaryMatrixSpec, BoundCheckReport, BoxDomain, CertificateSample, CertificateVerdict, CertificationDomain, ControllabilityCertificate, DeclaredBounds, LyapunovDiagnostic, SkewReport, TrackingMetrics, ALPHA_NAMES, CHECKPOINT_TIMES};
pub use controller::{adaptive_rates, check_bounding_inequalities, control_action, core_phi, filtered_error, phi_vector, BoundingReport, ControllerState, ControllerVariant, CoreFunctionSpec, FilterConfig, GateFunction};
pub use error::{Error, Result};
pub use presets::{healthy_scenario, relaxed_demo_box, relaxed_demo_box_dense, robot_core, robot_scenario, robot_scenario_const_nu, robot_scenario_default, scenario_by_name, two_channel_core, two_channel_scenario, SCENARIO_NAMES};
pub use simulate::{augment_state, closed_loop_derivative, run, run_fixed_euler, split_state, OracleSpec, RunVerdict, Scenario, SimulationTrace, TraceRecord, DIVERGENCE_NORM};
pub use faults::{schedule_by_name, robot_study_schedule, two_channel_study_schedule, FaultSchedule, FaultSegment, PloeVerdict, PloeViolation, PloeViolationKind, FAULT_NAMES};
pub use numerics::{build_grid, min_singular_value, rk4_step, sym_eig, sym_eig_extrema, Matrix, StepGrid, Vector};
pub use nussbaum::{probe_bl, BLProbeReport, NussbaumFn, NussbaumKind, ProbeVerdict, DEFAULT_CAP, PROBE_CAP};
pub use plant::{canonical_derivative, plant_by_name, relaxed_controllability_demo, robot_to_canonical, two_channel_disturbance, two_channel_study, PlantModel, ReferenceTrajectory, RobotModel, PLANT_NAMES};
