//! Scenario-file grammar and its resolution into a runnable
//! [`atl_core::Scenario`].
//!
//! A scenario file is TOML with the fixed sections `[plant]`, `[faults]`,
//! `[controller]`, `[reference]`, `[initial]`, `[integrator]`, an optional
//! `[oracle]`, and `[outputs]`. Unknown keys anywhere are rejected. The
//! full grammar is documented in `docs/scenario-format.md`.
//!
//! Resolution precedence for the integration step: `--override
//! integrator.h=…` (overrides rewrite the parsed document before
//! validation) > the file's `integrator.h` > the `ATL_DEFAULT_H`
//! environment variable > 1e-3.

use std::path::Path;

use atl_core::{
    alpha_by_name, plant_by_name, schedule_by_name, BoxDomain, ControllerVariant,
    CoreFunctionSpec, FaultSchedule, FilterConfig, GateFunction, NussbaumFn, NussbaumKind,
    OracleSpec, ReferenceTrajectory, Scenario, Vector,
};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Fallback integration step when neither the file, an override, nor
/// `ATL_DEFAULT_H` provides one.
pub const DEFAULT_H: f64 = 1e-3;

/// Environment variable consulted for the default integration step.
pub const ENV_DEFAULT_H: &str = "ATL_DEFAULT_H";

fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Optional explicit run name; defaults to the file stem. The echo file
    /// always carries it so a re-run is independent of the echo's location.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub plant: PlantSection,
    pub faults: FaultsSection,
    pub controller: ControllerSection,
    pub reference: ReferenceSection,
    pub initial: InitialSection,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    /// Built-in plant name: `numerical_example_iv_b`, `robot_3dof_v_b`, or
    /// `remark_3_exg1`.
    pub model: String,
    /// Control-direction sign b (its magnitude scales g).
    pub direction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultsSection {
    /// Built-in schedule name (`healthy`, `paper_iv_b`, `paper_v_b`) …
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    /// … or an inline piecewise-constant table (exactly one of the two).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentRow>>,
    /// Declared bound ε̄ on ‖ε(t)‖; required with `segments`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_bound: Option<f64>,
}

/// One row of an inline fault table: constants holding until `t_end`
/// (the last row is extended to t = ∞).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRow {
    pub t_end: f64,
    pub rho: Vec<f64>,
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    /// `fault_tolerant_nussbaum`, `fault_free_nussbaum`, or
    /// `known_direction_simplified`.
    pub variant: String,
    pub k: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Filtered-error coefficients λ₁…λ_{n-1}.
    pub lambda: Vec<f64>,
    /// Gain-function spec, e.g. `exp_quad_cos(0.07,0.1)`; defaults to that
    /// study gain when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nussbaum: Option<String>,
    /// Gate spec: `exp_decay(amp,rate)` or `constant(c)`.
    pub gate: String,
    /// Core-function spec: `two_channel` or `robot`.
    pub core: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Built-in reference signal: `two_channel_study`, `robot_study`, `zero`.
    pub signal: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: Vec<f64>,
    #[serde(default)]
    pub zeta0: f64,
    #[serde(default)]
    pub theta0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    /// Step size; see the module docs for the resolution precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Auxiliary-matrix name: `identity`, `two_channel_demo`,
    /// `two_channel_study`, `robot_inertia`.
    pub alpha: String,
    pub theta_margin_factor: f64,
    pub nu_bar: f64,
    /// Optional certification box (all five keys together or none).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_x_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_x_hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_points: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_t: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_t_points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "d_true")]
    pub trace: bool,
    #[serde(default = "d_true")]
    pub metrics: bool,
    #[serde(default)]
    pub certificate: bool,
    #[serde(default)]
    pub probe: bool,
    /// Optional run assertion: fail (exit 2) when the steady band is not
    /// strictly below this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assert_band_below: Option<f64>,
}

/// A scenario file resolved against the registries: the runnable scenario,
/// the fully-materialized echo document, and the optional certification box.
pub struct Resolved {
    pub scenario: Scenario,
    pub echo: ScenarioFile,
    pub box_domain: Option<BoxDomain>,
}

/// Read the `ATL_DEFAULT_H` environment variable, if set.
pub fn env_default_h() -> Result<Option<f64>, Failure> {
    match std::env::var(ENV_DEFAULT_H) {
        Err(_) => Ok(None),
        Ok(raw) => raw.parse::<f64>().map(Some).map_err(|_| {
            Failure::config(format!("{ENV_DEFAULT_H} must be a number, got {raw:?}"))
        }),
    }
}

/// Parse a raw override value as a TOML literal; anything that does not
/// parse (bare words, say) is taken as a string.
fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply `--override section.key=value` entries onto the parsed document.
/// Intermediate tables are created as needed, so an override may also fill
/// a key the file omitted.
pub fn apply_overrides(doc: &mut toml::Value, overrides: &[String]) -> Result<(), Failure> {
    for entry in overrides {
        let (path, raw) = entry.split_once('=').ok_or_else(|| {
            Failure::config(format!("override {entry:?} must have the form SECTION.KEY=VALUE"))
        })?;
        let parts: Vec<&str> = path.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Failure::config(format!("override key {path:?} has an empty segment")));
        }
        let (last, dirs) = parts.split_last().expect("parts checked non-empty");
        let mut node = &mut *doc;
        for (depth, part) in dirs.iter().enumerate() {
            let table = node.as_table_mut().ok_or_else(|| {
                Failure::config(format!(
                    "override {path:?}: {} is not a table",
                    parts[..depth].join(".")
                ))
            })?;
            node = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
        }
        let table = node.as_table_mut().ok_or_else(|| {
            Failure::config(format!(
                "override {path:?}: {} is not a table",
                dirs.join(".")
            ))
        })?;
        table.insert(last.to_string(), parse_override_value(raw));
    }
    Ok(())
}

/// Load a scenario file, apply overrides, and reject unknown keys.
/// Returns the parsed document plus the file stem (the default run name).
pub fn load_scenario_file(
    path: &Path,
    overrides: &[String],
) -> Result<(ScenarioFile, String), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: toml::Value = text
        .parse()
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    apply_overrides(&mut doc, overrides)?;
    let file: ScenarioFile = doc
        .try_into()
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    Ok((file, stem))
}

/// A `name(arg,…)` function spec: lowercase name, decimal arguments.
fn parse_fn_spec(key: &str, raw: &str) -> Result<(String, Vec<f64>), Failure> {
    let raw = raw.trim();
    let (name, args) = match raw.split_once('(') {
        None => (raw, Vec::new()),
        Some((name, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(|| {
                Failure::config(format!("{key}: spec {raw:?} is missing the closing parenthesis"))
            })?;
            let args = inner
                .split(',')
                .map(|a| {
                    a.trim().parse::<f64>().map_err(|_| {
                        Failure::config(format!("{key}: argument {a:?} in {raw:?} is not a number"))
                    })
                })
                .collect::<Result<Vec<f64>, Failure>>()?;
            (name, args)
        }
    };
    Ok((name.trim().to_string(), args))
}

fn arity(key: &str, raw: &str, args: &[f64], want: usize) -> Result<(), Failure> {
    if args.len() == want {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "{key}: {raw:?} takes {want} argument(s), got {}",
            args.len()
        )))
    }
}

/// Gain-function specs accepted by `controller.nussbaum` and the
/// `probe-nussbaum` subcommand.
pub fn parse_nussbaum_spec(key: &str, raw: &str) -> Result<NussbaumKind, Failure> {
    let (name, args) = parse_fn_spec(key, raw)?;
    match name.as_str() {
        "exp_quad_cos" => {
            arity(key, raw, &args, 2)?;
            Ok(NussbaumKind::ExpQuadCos { a: args[0], b: args[1] })
        }
        "exp_quad_sin" => {
            arity(key, raw, &args, 1)?;
            Ok(NussbaumKind::ExpQuadSin { a: args[0] })
        }
        "quad_sin" => {
            arity(key, raw, &args, 0)?;
            Ok(NussbaumKind::QuadSin)
        }
        "exp_sin" => {
            arity(key, raw, &args, 0)?;
            Ok(NussbaumKind::ExpSin)
        }
        "const" => {
            arity(key, raw, &args, 1)?;
            Ok(NussbaumKind::Const(args[0]))
        }
        other => Err(Failure::config(format!(
            "{key}: unknown gain function {other:?}; built-ins: exp_quad_cos(a,b), \
             exp_quad_sin(a), quad_sin, exp_sin, const(c)"
        ))),
    }
}

/// Gate specs accepted by `controller.gate`.
pub fn parse_gate_spec(key: &str, raw: &str) -> Result<GateFunction, Failure> {
    let (name, args) = parse_fn_spec(key, raw)?;
    match name.as_str() {
        "exp_decay" => {
            arity(key, raw, &args, 2)?;
            Ok(GateFunction::ExpDecay { amp: args[0], rate: args[1] })
        }
        "constant" => {
            arity(key, raw, &args, 1)?;
            Ok(GateFunction::Constant(args[0]))
        }
        other => Err(Failure::config(format!(
            "{key}: unknown gate {other:?}; built-ins: exp_decay(amp,rate), constant(c)"
        ))),
    }
}

fn parse_variant(raw: &str) -> Result<ControllerVariant, Failure> {
    match raw {
        "fault_tolerant_nussbaum" => Ok(ControllerVariant::FaultTolerantNussbaum),
        "fault_free_nussbaum" => Ok(ControllerVariant::FaultFreeNussbaum),
        "known_direction_simplified" => Ok(ControllerVariant::KnownDirectionSimplified),
        other => Err(Failure::config(format!(
            "controller.variant: unknown variant {other:?}; built-ins: \
             fault_tolerant_nussbaum, fault_free_nussbaum, known_direction_simplified"
        ))),
    }
}

fn parse_core(raw: &str) -> Result<CoreFunctionSpec, Failure> {
    match raw {
        "two_channel" => Ok(atl_core::two_channel_core()),
        "robot" => Ok(atl_core::robot_core()),
        other => Err(Failure::config(format!(
            "controller.core: unknown core-function spec {other:?}; built-ins: two_channel, robot"
        ))),
    }
}

fn parse_reference(raw: &str, m: usize, n: usize) -> Result<ReferenceTrajectory, Failure> {
    match raw {
        "two_channel_study" => Ok(ReferenceTrajectory::two_channel_study()),
        "robot_study" => Ok(ReferenceTrajectory::robot_study()),
        "zero" => Ok(ReferenceTrajectory::zero(m, n)),
        other => Err(Failure::config(format!(
            "reference.signal: unknown signal {other:?}; built-ins: two_channel_study, \
             robot_study, zero"
        ))),
    }
}

fn resolve_schedule(section: &FaultsSection, name: &str, m: usize) -> Result<FaultSchedule, Failure> {
    match (&section.schedule, &section.segments) {
        (Some(_), Some(_)) | (None, None) => Err(Failure::config(
            "faults: exactly one of `schedule` (built-in name) or `segments` (inline table) \
             must be given"
                .to_string(),
        )),
        (Some(reg), None) => {
            schedule_by_name(reg, m).map_err(|e| Failure::config(format!("faults.schedule: {e}")))
        }
        (None, Some(rows)) => {
            let eps_bound = section.eps_bound.ok_or_else(|| {
                Failure::config("faults.eps_bound is required with inline `segments`".to_string())
            })?;
            let table: Vec<(f64, Vec<f64>, Vec<f64>)> =
                rows.iter().map(|r| (r.t_end, r.rho.clone(), r.eps.clone())).collect();
            FaultSchedule::piecewise_constant(format!("{name}_faults"), m, &table, eps_bound)
                .map_err(|e| Failure::config(format!("faults.segments: {e}")))
        }
    }
}

fn resolve_box(oracle: &OracleSection, state_dim: usize) -> Result<Option<BoxDomain>, Failure> {
    let parts = [
        oracle.box_x_lo.is_some(),
        oracle.box_x_hi.is_some(),
        oracle.box_points.is_some(),
        oracle.box_t.is_some(),
        oracle.box_t_points.is_some(),
    ];
    if parts.iter().all(|p| !p) {
        return Ok(None);
    }
    if !parts.iter().all(|p| *p) {
        return Err(Failure::config(
            "oracle: a certification box needs all of box_x_lo, box_x_hi, box_points, \
             box_t, box_t_points"
                .to_string(),
        ));
    }
    let bx = BoxDomain {
        x_lo: oracle.box_x_lo.clone().unwrap(),
        x_hi: oracle.box_x_hi.clone().unwrap(),
        x_points: oracle.box_points.clone().unwrap(),
        t_lo: oracle.box_t.unwrap()[0],
        t_hi: oracle.box_t.unwrap()[1],
        t_points: oracle.box_t_points.unwrap(),
    };
    bx.validate(state_dim)
        .map_err(|e| Failure::config(format!("oracle box: {e}")))?;
    Ok(Some(bx))
}

/// Resolve a parsed file into a runnable scenario. `fallback_name` is the
/// file stem; `env_h` is the pre-read `ATL_DEFAULT_H` value.
pub fn resolve(
    file: &ScenarioFile,
    fallback_name: &str,
    env_h: Option<f64>,
) -> Result<Resolved, Failure> {
    let name = file.name.clone().unwrap_or_else(|| fallback_name.to_string());

    let plant = plant_by_name(&file.plant.model, file.plant.direction)
        .map_err(|e| Failure::config(format!("plant.model: {e}")))?;
    let (m, n) = (plant.m, plant.n);

    let schedule = resolve_schedule(&file.faults, &name, m)?;

    let c = &file.controller;
    for (key, value) in [("controller.k", c.k), ("controller.sigma1", c.sigma1), ("controller.sigma2", c.sigma2)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Failure::config(format!("{key} must be positive (got {value})")));
        }
    }
    let variant = parse_variant(&c.variant)?;
    let filter = FilterConfig::new(&c.lambda)
        .map_err(|e| Failure::config(format!("controller.lambda: {e}")))?;
    if filter.order() != n {
        return Err(Failure::config(format!(
            "controller.lambda: plant order {n} needs {} coefficient(s), got {}",
            n - 1,
            c.lambda.len()
        )));
    }
    let core = parse_core(&c.core)?;
    let nussbaum_spec =
        c.nussbaum.clone().unwrap_or_else(|| "exp_quad_cos(0.07,0.1)".to_string());
    let hbar = NussbaumFn::new(parse_nussbaum_spec("controller.nussbaum", &nussbaum_spec)?);
    let gate = parse_gate_spec("controller.gate", &c.gate)?;
    gate.validate()
        .map_err(|e| Failure::config(format!("controller.gate: {e}")))?;

    let reference = parse_reference(&file.reference.signal, m, n)?;

    let init = &file.initial;
    if init.x0.len() != m * n {
        return Err(Failure::config(format!(
            "initial.x0 must have m·n = {} entries (got {})",
            m * n,
            init.x0.len()
        )));
    }
    if init.zeta0 < 0.0 || init.theta0 < 0.0 {
        return Err(Failure::config(
            "initial.zeta0 and initial.theta0 must be ≥ 0".to_string(),
        ));
    }

    let integ = &file.integrator;
    let h = integ.h.or(env_h).unwrap_or(DEFAULT_H);
    if !(h > 0.0) || !h.is_finite() {
        return Err(Failure::config(format!("integrator.h must be positive (got {h})")));
    }
    if !(integ.horizon > 0.0) || !integ.horizon.is_finite() {
        return Err(Failure::config(format!(
            "integrator.horizon must be positive (got {})",
            integ.horizon
        )));
    }

    let mut box_domain = None;
    let oracle = match &file.oracle {
        None => None,
        Some(o) => {
            let alpha = alpha_by_name(&o.alpha, m)
                .map_err(|e| Failure::config(format!("oracle.alpha: {e}")))?;
            if !(o.theta_margin_factor >= 1.0) {
                return Err(Failure::config(format!(
                    "oracle.theta_margin_factor must be ≥ 1 (got {})",
                    o.theta_margin_factor
                )));
            }
            if !(o.nu_bar > 0.0) {
                return Err(Failure::config(format!(
                    "oracle.nu_bar must be positive (got {})",
                    o.nu_bar
                )));
            }
            box_domain = resolve_box(o, plant.state_dim())?;
            Some(OracleSpec {
                alpha,
                theta_margin_factor: o.theta_margin_factor,
                nu_bar: o.nu_bar,
            })
        }
    };

    let scenario = Scenario {
        name: name.clone(),
        plant,
        schedule,
        variant,
        k: c.k,
        sigma1: c.sigma1,
        sigma2: c.sigma2,
        filter,
        core,
        hbar,
        gate,
        reference,
        x0: Vector::from_slice(&init.x0),
        zeta0: init.zeta0,
        theta0: init.theta0,
        horizon: integ.horizon,
        h,
        oracle,
    };
    scenario
        .validate()
        .map_err(|e| Failure::config(format!("scenario {name}: {e}")))?;

    // Echo document: the same file with every resolution decision written
    // out, so re-running the echo reproduces this run bit-exactly.
    let mut echo = file.clone();
    echo.name = Some(name);
    echo.integrator.h = Some(h);
    echo.controller.nussbaum = Some(nussbaum_spec);

    Ok(Resolved { scenario, echo, box_domain })
}

/// Serialize the echo document.
pub fn echo_toml(echo: &ScenarioFile) -> Result<String, Failure> {
    toml::to_string_pretty(echo)
        .map_err(|e| Failure::config(format!("cannot serialize scenario echo: {e}")))
}
