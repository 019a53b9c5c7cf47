//! Trajectory diagnostics: controllability certification through the
//! auxiliary matrix, Lyapunov-style energy budgets, bounding-assumption
//! checks and tracking metrics.
//!
//! Everything in this module is analysis-side instrumentation: it may read
//! plant internals (true f, g, d, fault coefficients) that the running
//! controller never sees.

use crate::controller::CoreFunctionSpec;
use crate::error::{Error, Result};
use crate::faults::FaultSchedule;
use crate::numerics::{sym_eig_extrema, Matrix, Vector};
use crate::plant::PlantModel;
use crate::simulate::{Scenario, SimulationTrace};
use std::sync::Arc;

type MatrixField = Arc<dyn Fn(&Vector, f64) -> Matrix + Send + Sync>;

/// Symmetric positive-definite auxiliary matrix α(x̄, t) together with its
/// declared norm bounds (‖α‖ ≤ a₁φ₁, ‖∂α/∂t‖ ≤ a₂φ₂).
///
/// `eval` receives the full stacked state; the built-in specs only read the
/// sub-blocks they depend on. `partial_t` is the explicit time derivative;
/// `rate` is the total derivative along the chain flow (ẋᵢ = xᵢ₊₁), which
/// the energy budget needs.
#[derive(Clone)]
pub struct AuxiliaryMatrixSpec {
    pub name: String,
    pub m: usize,
    eval: MatrixField,
    partial_t: MatrixField,
    rate: MatrixField,
    pub a1: f64,
    pub a2: f64,
    pub phi1: fn(&[Vector]) -> f64,
    pub phi2: fn(&[Vector]) -> f64,
}

impl std::fmt::Debug for AuxiliaryMatrixSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuxiliaryMatrixSpec")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("a1", &self.a1)
            .field("a2", &self.a2)
            .finish_non_exhaustive()
    }
}

fn unit_scale(_: &[Vector]) -> f64 {
    1.0
}

impl AuxiliaryMatrixSpec {
    pub fn new(
        name: impl Into<String>,
        m: usize,
        eval: MatrixField,
        partial_t: MatrixField,
        rate: MatrixField,
        a1: f64,
        a2: f64,
    ) -> Self {
        AuxiliaryMatrixSpec {
            name: name.into(),
            m,
            eval,
            partial_t,
            rate,
            a1,
            a2,
            phi1: unit_scale,
            phi2: unit_scale,
        }
    }

    /// α at (x̄, t), with the structural invariants asserted on every call:
    /// symmetric to 1e-12 and positive definite at the sampled point.
    pub fn eval(&self, x: &Vector, t: f64) -> Result<Matrix> {
        let a = (self.eval)(x, t);
        self.check_shape(&a, "α")?;
        let (lo, _) = sym_eig_extrema(&a, true)?;
        if !(lo > 0.0) {
            return Err(Error::domain(format!(
                "auxiliary matrix '{}' must be positive definite; min eigenvalue {lo:.6e} at t = {t}",
                self.name
            )));
        }
        Ok(a)
    }

    /// ∂α/∂t at (x̄, t) (state held fixed).
    pub fn partial_t(&self, x: &Vector, t: f64) -> Result<Matrix> {
        let a = (self.partial_t)(x, t);
        self.check_shape(&a, "∂α/∂t")?;
        Ok(a)
    }

    /// Total derivative α̇ along the chain flow at (x̄, t).
    pub fn rate(&self, x: &Vector, t: f64) -> Result<Matrix> {
        let a = (self.rate)(x, t);
        self.check_shape(&a, "α̇")?;
        Ok(a)
    }

    fn check_shape(&self, a: &Matrix, label: &str) -> Result<()> {
        if a.rows() != self.m || a.cols() != self.m {
            return Err(Error::domain(format!(
                "{label} of '{}' must be {m}×{m}",
                self.name,
                m = self.m
            )));
        }
        if !a.is_finite() {
            return Err(Error::domain(format!("{label} of '{}' is non-finite", self.name)));
        }
        let skew = a.sub(&a.transpose()).frobenius_norm();
        if skew > 1e-12 {
            return Err(Error::domain(format!(
                "{label} of '{}' must be symmetric; ‖A−Aᵀ‖ = {skew:.3e}",
                self.name
            )));
        }
        Ok(())
    }

    /// Constant identity (the "no auxiliary knowledge" choice).
    pub fn identity(m: usize) -> Self {
        let eye = move |_: &Vector, _: f64| Matrix::identity(m);
        let zero = move |_: &Vector, _: f64| Matrix::zeros(m, m);
        AuxiliaryMatrixSpec::new("identity", m, Arc::new(eye), Arc::new(zero), Arc::new(zero), 1.0, 0.0)
    }

    /// Companion matrix for the relaxed-controllability demo plant: couples
    /// the channels through sin x₁₁ with slowly breathing diagonal weights.
    pub fn two_channel_demo() -> Self {
        Self::two_channel_family("two_channel_demo", 0.9)
    }

    /// Auxiliary matrix used by the two-channel study oracle; same structure
    /// as the demo one with a unit leading diagonal weight.
    pub fn two_channel_study() -> Self {
        Self::two_channel_family("two_channel_study", 1.0)
    }

    fn two_channel_family(name: &str, lead: f64) -> Self {
        let eval = move |x: &Vector, t: f64| {
            let c = 0.1 * x[0].sin();
            Matrix::from_rows(&[&[lead + 0.1 * t.sin(), c], &[c, 0.4 + 0.1 * t.cos()]])
        };
        let partial_t = |_: &Vector, t: f64| {
            Matrix::from_rows(&[&[0.1 * t.cos(), 0.0], &[0.0, -0.1 * t.sin()]])
        };
        let rate = |x: &Vector, t: f64| {
            // chain flow: ẋ₁₁ = x₂₁ (third flat entry for m = 2)
            let cx = 0.1 * x[0].cos() * x[2];
            Matrix::from_rows(&[&[0.1 * t.cos(), cx], &[cx, -0.1 * t.sin()]])
        };
        AuxiliaryMatrixSpec::new(name, 2, Arc::new(eval), Arc::new(partial_t), Arc::new(rate), 1.3, 0.15)
    }

    /// α(q) = M(q): the manipulator inertia matrix certifies its own
    /// canonical form (g = M⁻¹, so αg = I is uniformly positive).
    pub fn robot_inertia(robot: crate::plant::RobotModel) -> Self {
        let eval = move |x: &Vector, _: f64| {
            let q = Vector::from_slice(&x.as_slice()[..3]);
            robot.inertia_matrix(&q)
        };
        let partial_t = |_: &Vector, _: f64| Matrix::zeros(3, 3);
        let rate = move |x: &Vector, _: f64| {
            let q = Vector::from_slice(&x.as_slice()[..3]);
            let qd = Vector::from_slice(&x.as_slice()[3..6]);
            robot.inertia_matrix_rate(&q, &qd)
        };
        AuxiliaryMatrixSpec::new("robot_inertia", 3, Arc::new(eval), Arc::new(partial_t), Arc::new(rate), 15.0, 0.0)
    }
}

/// Registry of built-in auxiliary matrices usable from scenario files.
pub const ALPHA_NAMES: [&str; 4] = ["identity", "two_channel_demo", "two_channel_study", "robot_inertia"];

pub fn alpha_by_name(name: &str, m: usize) -> Result<AuxiliaryMatrixSpec> {
    let spec = match name {
        "identity" => AuxiliaryMatrixSpec::identity(m),
        "two_channel_demo" => AuxiliaryMatrixSpec::two_channel_demo(),
        "two_channel_study" => AuxiliaryMatrixSpec::two_channel_study(),
        "robot_inertia" => AuxiliaryMatrixSpec::robot_inertia(crate::plant::RobotModel::study_default()),
        other => {
            return Err(Error::config(format!(
                "unknown auxiliary matrix '{other}'; built-ins: {}",
                ALPHA_NAMES.join(", ")
            )))
        }
    };
    if spec.m != m {
        return Err(Error::config(format!(
            "auxiliary matrix '{name}' has {} channels, needed {m}",
            spec.m
        )));
    }
    Ok(spec)
}

/// Rectangular state box with per-axis sample counts plus a time range,
/// swept on a dense regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub x_points: Vec<usize>,
    pub t_lo: f64,
    pub t_hi: f64,
    pub t_points: usize,
}

impl BoxDomain {
    pub fn validate(&self, state_dim: usize) -> Result<()> {
        if self.x_lo.len() != state_dim || self.x_hi.len() != state_dim || self.x_points.len() != state_dim {
            return Err(Error::config(format!(
                "box axes must match the state dimension {state_dim}"
            )));
        }
        for i in 0..state_dim {
            if !(self.x_lo[i] <= self.x_hi[i]) || self.x_points[i] == 0 {
                return Err(Error::config(format!("box axis {i} is empty")));
            }
        }
        if !(self.t_lo <= self.t_hi) || self.t_points == 0 {
            return Err(Error::config("box time range is empty"));
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.x_points.iter().product::<usize>() * self.t_points
    }

    fn axis_value(lo: f64, hi: f64, points: usize, index: usize) -> f64 {
        if points == 1 {
            lo
        } else {
            lo + (hi - lo) * index as f64 / (points - 1) as f64
        }
    }

    /// Visit every grid sample as (t, x̄).
    pub fn for_each_sample<F>(&self, mut visit: F) -> Result<()>
    where
        F: FnMut(f64, &Vector) -> Result<()>,
    {
        let dim = self.x_lo.len();
        let mut index = vec![0usize; dim];
        let mut x = Vector::zeros(dim);
        loop {
            for i in 0..dim {
                x[i] = Self::axis_value(self.x_lo[i], self.x_hi[i], self.x_points[i], index[i]);
            }
            for ti in 0..self.t_points {
                let t = Self::axis_value(self.t_lo, self.t_hi, self.t_points, ti);
                visit(t, &x)?;
            }
            // odometer increment over the state axes
            let mut axis = 0;
            loop {
                if axis == dim {
                    return Ok(());
                }
                index[axis] += 1;
                if index[axis] < self.x_points[axis] {
                    break;
                }
                index[axis] = 0;
                axis += 1;
            }
        }
    }
}

/// Sign-uniformity outcome for the symmetrized product αgρ + ρgᵀα.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateVerdict {
    UniformlyPositive,
    UniformlyNegative,
    Violated,
}

impl std::fmt::Display for CertificateVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CertificateVerdict::UniformlyPositive => "UniformlyPositive",
            CertificateVerdict::UniformlyNegative => "UniformlyNegative",
            CertificateVerdict::Violated => "Violated",
        };
        write!(f, "{s}")
    }
}

/// One sampled point carried as a witness.
#[derive(Debug, Clone)]
pub struct CertificateSample {
    pub t: f64,
    pub x: Vector,
    pub min_eig: f64,
    pub max_eig: f64,
}

/// Result of sweeping the definiteness of S = αB + BᵀαᵀB, B = g·ρ, over a
/// domain. `omega` is the uniform definiteness margin (0 when violated).
#[derive(Debug, Clone)]
pub struct ControllabilityCertificate {
    pub subject: String,
    pub verdict: CertificateVerdict,
    pub omega: f64,
    pub samples_checked: usize,
    pub min_eig_range: (f64, f64),
    pub max_eig_range: (f64, f64),
    /// Fraction of samples at which S was indefinite.
    pub indefinite_fraction: f64,
    pub witness: Option<CertificateSample>,
    /// Per-node (t, λ_min, λ_max); populated in trace mode only.
    pub samples: Vec<(f64, f64, f64)>,
    /// Observed range of sᵀSs/(2sᵀs) along the trace (trace mode, s ≠ 0).
    pub beta_range: Option<(f64, f64)>,
}

impl std::fmt::Display for ControllabilityCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "controllability certificate: {}", self.subject)?;
        writeln!(f, "  verdict: {}", self.verdict)?;
        writeln!(f, "  samples checked: {}", self.samples_checked)?;
        writeln!(f, "  uniform margin omega: {:.6e}", self.omega)?;
        writeln!(
            f,
            "  min-eig range: [{:.6e}, {:.6e}]",
            self.min_eig_range.0, self.min_eig_range.1
        )?;
        writeln!(
            f,
            "  max-eig range: [{:.6e}, {:.6e}]",
            self.max_eig_range.0, self.max_eig_range.1
        )?;
        writeln!(f, "  indefinite fraction: {:.4}", self.indefinite_fraction)?;
        if let Some((blo, bhi)) = self.beta_range {
            writeln!(f, "  beta range: [{blo:.6e}, {bhi:.6e}]")?;
        }
        match &self.witness {
            Some(w) => {
                writeln!(
                    f,
                    "  witness: t = {:.6}, eigs = [{:.6e}, {:.6e}]",
                    w.t, w.min_eig, w.max_eig
                )?;
                write!(f, "  witness state: {:?}", w.x.as_slice())
            }
            None => write!(f, "  witness: none"),
        }
    }
}

/// Where a certificate draws its samples from.
pub enum CertificationDomain<'a> {
    /// Dense sweep over a declared state/time box (fault-free: ρ = I unless
    /// a schedule is supplied).
    StateBox(&'a BoxDomain),
    /// The nodes of a recorded run; ρ and the filtered error are taken from
    /// the records themselves.
    Trace(&'a SimulationTrace),
}

struct CertAccumulator {
    count: usize,
    min_lo: f64,
    max_lo: f64,
    min_hi: f64,
    max_hi: f64,
    indefinite: usize,
    witness_min_lo: Option<CertificateSample>,
    witness_indef: Option<CertificateSample>,
    witness_max_hi: Option<CertificateSample>,
    samples: Vec<(f64, f64, f64)>,
    beta_lo: f64,
    beta_hi: f64,
    beta_seen: bool,
}

impl CertAccumulator {
    fn new(keep_samples: bool, capacity: usize) -> Self {
        CertAccumulator {
            count: 0,
            min_lo: f64::INFINITY,
            max_lo: f64::NEG_INFINITY,
            min_hi: f64::INFINITY,
            max_hi: f64::NEG_INFINITY,
            indefinite: 0,
            witness_min_lo: None,
            witness_indef: None,
            witness_max_hi: None,
            samples: if keep_samples { Vec::with_capacity(capacity) } else { Vec::new() },
            beta_lo: f64::INFINITY,
            beta_hi: f64::NEG_INFINITY,
            beta_seen: false,
            // witness_indef tracks the most negative min-eig among
            // indefinite samples; witness_min_lo/max_hi the global extremes.
        }
    }

    fn push(&mut self, t: f64, x: &Vector, s: Option<&Vector>, product: &Matrix, keep: bool) -> Result<()> {
        let sym = product.add(&product.transpose());
        let (lo, hi) = sym_eig_extrema(&sym, true)?;
        self.count += 1;
        if keep {
            self.samples.push((t, lo, hi));
        }
        if lo < self.min_lo {
            self.min_lo = lo;
            self.witness_min_lo = Some(CertificateSample { t, x: x.clone(), min_eig: lo, max_eig: hi });
        }
        self.max_lo = self.max_lo.max(lo);
        self.min_hi = self.min_hi.min(hi);
        if hi > self.max_hi {
            self.max_hi = hi;
            self.witness_max_hi = Some(CertificateSample { t, x: x.clone(), min_eig: lo, max_eig: hi });
        }
        if lo <= 0.0 && hi >= 0.0 {
            self.indefinite += 1;
            let better = match &self.witness_indef {
                Some(w) => lo < w.min_eig,
                None => true,
            };
            if better {
                self.witness_indef = Some(CertificateSample { t, x: x.clone(), min_eig: lo, max_eig: hi });
            }
        }
        if let Some(s) = s {
            let ns2 = s.dot(s);
            if ns2 > 1e-24 {
                let beta = sym.quad_form(s) / (2.0 * ns2);
                // Rayleigh sandwich: β must sit between the halved extremes.
                if beta < 0.5 * lo - 1e-9 * (1.0 + lo.abs()) || beta > 0.5 * hi + 1e-9 * (1.0 + hi.abs()) {
                    return Err(Error::domain(format!(
                        "Rayleigh bound violated at t = {t}: beta = {beta}, eig/2 range [{}, {}]",
                        0.5 * lo,
                        0.5 * hi
                    )));
                }
                self.beta_lo = self.beta_lo.min(beta);
                self.beta_hi = self.beta_hi.max(beta);
                self.beta_seen = true;
            }
        }
        Ok(())
    }

    fn finish(self, subject: String) -> Result<ControllabilityCertificate> {
        if self.count == 0 {
            return Err(Error::domain("certificate domain produced no samples"));
        }
        let (verdict, omega, witness) = if self.min_lo > 0.0 {
            (CertificateVerdict::UniformlyPositive, self.min_lo, None)
        } else if self.max_hi < 0.0 {
            (CertificateVerdict::UniformlyNegative, -self.max_hi, None)
        } else {
            // prefer an indefinite witness; otherwise the sample whose sign
            // contradicts uniformity on the dominant side
            let w = self
                .witness_indef
                .clone()
                .or_else(|| if self.min_lo <= 0.0 { self.witness_min_lo.clone() } else { self.witness_max_hi.clone() });
            (CertificateVerdict::Violated, 0.0, w)
        };
        Ok(ControllabilityCertificate {
            subject,
            verdict,
            omega,
            samples_checked: self.count,
            min_eig_range: (self.min_lo, self.max_lo),
            max_eig_range: (self.min_hi, self.max_hi),
            indefinite_fraction: self.indefinite as f64 / self.count as f64,
            witness,
            samples: self.samples,
            beta_range: if self.beta_seen { Some((self.beta_lo, self.beta_hi)) } else { None },
        })
    }
}

/// Certify the sign-uniformity of S(t, x̄) = α g ρ + (α g ρ)ᵀ over the given
/// domain (ρ = I when no schedule applies). Trace mode also records the
/// Rayleigh samples β = sᵀSs/(2sᵀs) along the run.
pub fn certify_controllability(
    plant: &PlantModel,
    schedule: Option<&FaultSchedule>,
    alpha: &AuxiliaryMatrixSpec,
    domain: CertificationDomain<'_>,
) -> Result<ControllabilityCertificate> {
    if alpha.m != plant.m {
        return Err(Error::config(format!(
            "auxiliary matrix has {} channels, plant has {}",
            alpha.m, plant.m
        )));
    }
    match domain {
        CertificationDomain::StateBox(bx) => {
            bx.validate(plant.state_dim())?;
            let mut acc = CertAccumulator::new(false, 0);
            bx.for_each_sample(|t, x| {
                let a = alpha.eval(x, t)?;
                let mut b = plant.eval_g(x, t)?;
                if let Some(schedule) = schedule {
                    let (rho, _) = schedule.eval(t)?;
                    b = scale_columns(&b, &rho);
                }
                acc.push(t, x, None, &a.matmul(&b), false)
            })?;
            acc.finish(format!(
                "sym(α·g{}) for α '{}' on plant '{}' over state box ({} samples)",
                if schedule.is_some() { "·ρ" } else { "" },
                alpha.name,
                plant.name,
                bx.sample_count()
            ))
        }
        CertificationDomain::Trace(trace) => {
            let mut acc = CertAccumulator::new(true, trace.records.len());
            for r in &trace.records {
                let a = alpha.eval(&r.x, r.t)?;
                let g = plant.eval_g(&r.x, r.t)?;
                let b = scale_columns(&g, &r.rho_diag);
                acc.push(r.t, &r.x, Some(&r.s), &a.matmul(&b), true)?;
            }
            acc.finish(format!(
                "sym(α·g·ρ) for α '{}' along trace '{}' ({} nodes)",
                alpha.name,
                trace.scenario_name,
                trace.records.len()
            ))
        }
    }
}

/// B·diag(rho): per-channel effectiveness scales the columns of g.
fn scale_columns(g: &Matrix, rho: &Vector) -> Matrix {
    let mut out = g.clone();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            out[(i, j)] *= rho[j];
        }
    }
    out
}

/// Rayleigh samples β(tᵢ) = sᵀSs/(2sᵀs) along a trace, with S built from the
/// plant's g, the recorded per-node ρ and the auxiliary matrix. Nodes with
/// ‖s‖ < 1e-12 are skipped. Each sample is asserted to respect the Rayleigh
/// sandwich against the instantaneous eigenvalue extremes.
pub fn beta_along_trace(
    trace: &SimulationTrace,
    alpha: &AuxiliaryMatrixSpec,
    plant: &PlantModel,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let ns = r.s.norm();
        if ns < 1e-12 {
            continue;
        }
        let a = alpha.eval(&r.x, r.t)?;
        let g = plant.eval_g(&r.x, r.t)?;
        let b = scale_columns(&g, &r.rho_diag);
        let sym = a.matmul(&b);
        let sym = sym.add(&sym.transpose());
        let (lo, hi) = sym_eig_extrema(&sym, true)?;
        let beta = sym.quad_form(&r.s) / (2.0 * ns * ns);
        if beta < 0.5 * lo - 1e-9 * (1.0 + lo.abs()) || beta > 0.5 * hi + 1e-9 * (1.0 + hi.abs()) {
            return Err(Error::domain(format!(
                "Rayleigh bound violated at t = {}: beta = {beta} outside [{}, {}]",
                r.t,
                0.5 * lo,
                0.5 * hi
            )));
        }
        out.push((r.t, beta));
    }
    Ok(out)
}

/// Relative size of the skew part of N = αgρ in the quadratic form:
/// |sᵀ(N − Nᵀ)s| / (‖s‖²·‖N‖_F). Algebraically zero; numerically round-off.
pub fn quadratic_skew_relative(product: &Matrix, s: &Vector) -> f64 {
    let skew = product.sub(&product.transpose());
    let ns2 = s.dot(s);
    let scale = ns2 * product.frobenius_norm();
    if scale == 0.0 {
        return 0.0;
    }
    (skew.quad_form(s)).abs() / scale
}

/// Report of sweeping the skew-cancellation identity sᵀ(αgρ − ρgᵀα)s = 0
/// over the nodes of a trace.
#[derive(Debug, Clone, Copy)]
pub struct SkewReport {
    pub samples_checked: usize,
    pub worst_relative: f64,
    pub holds: bool,
}

/// Check the identity along a recorded run with the trace's own s at every
/// node, at 1e-10 relative tolerance.
pub fn skew_identity_check(
    trace: &SimulationTrace,
    alpha: &AuxiliaryMatrixSpec,
    plant: &PlantModel,
) -> Result<SkewReport> {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for r in &trace.records {
        if r.s.norm() < 1e-12 {
            continue;
        }
        let a = alpha.eval(&r.x, r.t)?;
        let g = plant.eval_g(&r.x, r.t)?;
        let product = a.matmul(&scale_columns(&g, &r.rho_diag));
        worst = worst.max(quadratic_skew_relative(&product, &r.s));
        checked += 1;
    }
    Ok(SkewReport { samples_checked: checked, worst_relative: worst, holds: worst <= 1e-10 })
}

/// Energy-budget inequality evaluated on a trace:
///
///   V₂(t) + k∫₀ᵗ‖s‖² ≤ (1/σ₁)∫₀ᵗ(β(τ)ℏ(ζ)+1)ζ̇ dτ + Δ,   Δ = V₂(0) + θν̄
///
/// with V₂ = ½sᵀαs + (θ − θ̂)²/(2σ₂) and β the Rayleigh quotient of the
/// symmetrized αgρ at the trace's own s. All integrals use trapezoid
/// quadrature on the trace grid.
#[derive(Debug, Clone)]
pub struct LyapunovDiagnostic {
    /// Declared (or trace-estimated) true lumped bound θ.
    pub theta: f64,
    pub nu_bar: f64,
    pub delta: f64,
    pub times: Vec<f64>,
    pub v2: Vec<f64>,
    /// Running ∫₀ᵗ‖s‖².
    pub int_s2: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// RHS − LHS per node.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    pub min_margin_t: f64,
    pub beta_range: (f64, f64),
    /// max over nodes of ‖Θ(t)‖/φ(t) — the trace estimate of θ before any
    /// safety factor.
    pub theta_ratio_max: f64,
    pub int_s2_total: f64,
    /// Fraction of ∫‖s‖² accumulated over the final quarter of the horizon.
    pub int_s2_last_quarter_fraction: f64,
}

impl LyapunovDiagnostic {
    /// Budget acceptance test: margin no worse than quadrature round-off.
    pub fn margin_holds(&self) -> bool {
        self.min_margin >= -1e-6 * self.delta.abs()
    }
}

/// Max over trace nodes of ‖Θ‖/φ, where Θ = α(Φ + f + gε + d − y*⁽ⁿ⁾) + ½α̇s
/// is the lumped disturbance that θφ must dominate. Multiplying by a safety
/// factor > 1 yields a valid declared overestimate of θ for the same run.
pub fn theta_oracle_bound(scenario: &Scenario, trace: &SimulationTrace, alpha: &AuxiliaryMatrixSpec) -> Result<f64> {
    let n = scenario.plant.n;
    let mut worst = 0.0f64;
    for r in &trace.records {
        let a = alpha.eval(&r.x, r.t)?;
        let adot = alpha.rate(&r.x, r.t)?;
        let f = scenario.plant.eval_f(&r.x)?;
        let g = scenario.plant.eval_g(&r.x, r.t)?;
        let d = scenario.plant.eval_d(&r.x, r.t)?;
        let ystar_n = scenario.reference.derivative(r.t, n)?;
        let inner = r
            .phi_vec
            .add(&f)
            .add(&g.matvec(&r.eps))
            .add(&d)
            .sub(&ystar_n);
        let theta_vec = a.matvec(&inner).add(&adot.matvec(&r.s).scale(0.5));
        worst = worst.max(theta_vec.norm() / r.phi);
    }
    Ok(worst)
}

/// Evaluate the budget with an explicitly declared θ and ν̄.
pub fn lyapunov_budget_with_theta(
    scenario: &Scenario,
    trace: &SimulationTrace,
    alpha: &AuxiliaryMatrixSpec,
    theta: f64,
    nu_bar: f64,
) -> Result<LyapunovDiagnostic> {
    let n_nodes = trace.records.len();
    if n_nodes == 0 {
        return Err(Error::domain("cannot budget an empty trace"));
    }
    let k = scenario.k;
    let sigma1 = scenario.sigma1;
    let sigma2 = scenario.sigma2;

    let mut times = Vec::with_capacity(n_nodes);
    let mut v2 = Vec::with_capacity(n_nodes);
    let mut ns2 = Vec::with_capacity(n_nodes);
    let mut rhs_integrand = Vec::with_capacity(n_nodes);
    let mut beta_lo = f64::INFINITY;
    let mut beta_hi = f64::NEG_INFINITY;
    let mut ratio_max = 0.0f64;

    for r in &trace.records {
        let a = alpha.eval(&r.x, r.t)?;
        let adot = alpha.rate(&r.x, r.t)?;
        let g = scenario.plant.eval_g(&r.x, r.t)?;
        let f = scenario.plant.eval_f(&r.x)?;
        let d = scenario.plant.eval_d(&r.x, r.t)?;
        let ystar_n = scenario.reference.derivative(r.t, scenario.plant.n)?;
        let s2 = r.s.dot(&r.s);
        let zeta_rate = sigma1 * r.s.dot(&r.eta);

        let product = a.matmul(&scale_columns(&g, &r.rho_diag));
        let sym = product.add(&product.transpose());
        let beta = if s2 > 1e-24 { sym.quad_form(&r.s) / (2.0 * s2) } else { 0.0 };
        beta_lo = beta_lo.min(beta);
        beta_hi = beta_hi.max(beta);

        let inner = r.phi_vec.add(&f).add(&g.matvec(&r.eps)).add(&d).sub(&ystar_n);
        let theta_vec = a.matvec(&inner).add(&adot.matvec(&r.s).scale(0.5));
        ratio_max = ratio_max.max(theta_vec.norm() / r.phi);

        let theta_err = theta - r.theta_hat;
        times.push(r.t);
        v2.push(0.5 * a.quad_form(&r.s) + theta_err * theta_err / (2.0 * sigma2));
        ns2.push(s2);
        rhs_integrand.push((beta * r.hbar + 1.0) * zeta_rate);
    }

    let int_s2 = cumulative_trapezoid(&times, &ns2);
    let int_rhs = cumulative_trapezoid(&times, &rhs_integrand);
    let delta = v2[0] + theta * nu_bar;
    let mut lhs = Vec::with_capacity(n_nodes);
    let mut rhs = Vec::with_capacity(n_nodes);
    let mut margins = Vec::with_capacity(n_nodes);
    let mut min_margin = f64::INFINITY;
    let mut min_margin_t = times[0];
    for i in 0..n_nodes {
        let l = v2[i] + k * int_s2[i];
        let r = int_rhs[i] / sigma1 + delta;
        let margin = r - l;
        if margin < min_margin {
            min_margin = margin;
            min_margin_t = times[i];
        }
        lhs.push(l);
        rhs.push(r);
        margins.push(margin);
    }

    let total = *int_s2.last().unwrap();
    let t_quarter = times[0] + 0.75 * (times[n_nodes - 1] - times[0]);
    let idx_q = times.partition_point(|&t| t < t_quarter - 1e-9);
    let last_quarter = total - int_s2[idx_q.min(n_nodes - 1)];
    let fraction = if total > 0.0 { last_quarter / total } else { 0.0 };

    Ok(LyapunovDiagnostic {
        theta,
        nu_bar,
        delta,
        times,
        v2,
        int_s2,
        lhs,
        rhs,
        margins,
        min_margin,
        min_margin_t,
        beta_range: (beta_lo, beta_hi),
        theta_ratio_max: ratio_max,
        int_s2_total: total,
        int_s2_last_quarter_fraction: fraction,
    })
}

/// Evaluate the budget using the scenario's oracle block: θ is the observed
/// worst ratio times the declared safety factor, ν̄ comes from the oracle.
pub fn lyapunov_budget(scenario: &Scenario, trace: &SimulationTrace) -> Result<LyapunovDiagnostic> {
    let oracle = scenario
        .oracle
        .as_ref()
        .ok_or_else(|| Error::domain("scenario carries no oracle block for budgeting"))?;
    let theta = oracle.theta_margin_factor * theta_oracle_bound(scenario, trace, &oracle.alpha)?;
    lyapunov_budget_with_theta(scenario, trace, &oracle.alpha, theta, oracle.nu_bar)
}

fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..y.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
        out.push(acc);
    }
    out
}

/// Declared constants for the bounding assumptions.
#[derive(Debug, Clone, Copy)]
pub struct DeclaredBounds {
    /// ‖f + d‖ ≤ a_f·φ_f.
    pub a_f: f64,
    /// ‖f + gε + d‖ ≤ a*_f·φ_f (faulty lumped drift).
    pub a_star_f: f64,
    /// ‖α‖ ≤ a₁·φ₁.
    pub a1: f64,
    /// ‖∂α/∂t‖ ≤ a₂·φ₂.
    pub a2: f64,
}

#[derive(Debug, Clone)]
pub struct BoundCheckReport {
    pub samples_checked: usize,
    /// Worst observed ‖f+d‖/(a_f·φ_f).
    pub drift_ratio: f64,
    /// Worst observed ‖f+gε+d‖/(a*_f·φ_f).
    pub faulty_drift_ratio: f64,
    /// Worst observed ‖α‖/(a₁·φ₁).
    pub alpha_ratio: f64,
    /// Worst observed ‖∂α/∂t‖/(a₂·φ₂), with ∂α/∂t by central difference.
    pub alpha_rate_ratio: f64,
    pub holds: bool,
    pub witness: Option<(f64, Vector, &'static str)>,
}

/// Verify the declared bounding inequalities on explicit (t, x̄) samples.
/// ∂α/∂t is measured by central finite difference (step 1e-6) so the check
/// is independent of the spec's own closed-form derivative. ε(t) is taken
/// from the schedule when present, otherwise zero.
pub fn assumption2_bound_check(
    core: &CoreFunctionSpec,
    bounds: &DeclaredBounds,
    plant: &PlantModel,
    alpha: &AuxiliaryMatrixSpec,
    schedule: Option<&FaultSchedule>,
    samples: &[(f64, Vector)],
) -> Result<BoundCheckReport> {
    let (m, n) = (plant.m, plant.n);
    let mut report = BoundCheckReport {
        samples_checked: 0,
        drift_ratio: 0.0,
        faulty_drift_ratio: 0.0,
        alpha_ratio: 0.0,
        alpha_rate_ratio: 0.0,
        holds: true,
        witness: None,
    };
    const SLACK: f64 = 1e-9;
    for (t, x) in samples {
        let t = *t;
        plant.check_state(x)?;
        let blocks: Vec<Vector> = (0..n)
            .map(|i| Vector::from_slice(&x.as_slice()[i * m..(i + 1) * m]))
            .collect();
        let phi_f = (core.phi_f)(&blocks);
        let phi1 = (alpha.phi1)(&blocks);
        let phi2 = (alpha.phi2)(&blocks);
        if phi_f <= 0.0 || phi1 <= 0.0 || phi2 < 0.0 {
            return Err(Error::domain("bounding scale functions must be positive"));
        }

        let f = plant.eval_f(x)?;
        let d = plant.eval_d(x, t)?;
        let g = plant.eval_g(x, t)?;
        let eps = match schedule {
            Some(sch) => sch.eval(t)?.1,
            None => Vector::zeros(m),
        };
        let drift = f.add(&d).norm() / (bounds.a_f * phi_f);
        let faulty = f.add(&g.matvec(&eps)).add(&d).norm() / (bounds.a_star_f * phi_f);

        let a = alpha.eval(x, t)?;
        let (alo, ahi) = sym_eig_extrema(&a, true)?;
        let a_norm = alo.abs().max(ahi.abs());
        let a_ratio = a_norm / (bounds.a1 * phi1);

        let dt = 1e-6;
        let fd = alpha
            .partial_t_by_difference(x, t, dt)?;
        let (rlo, rhi) = sym_eig_extrema(&fd, true)?;
        let rate_norm = rlo.abs().max(rhi.abs());
        let rate_bound = bounds.a2 * phi2;
        let rate_ratio = if rate_bound > 0.0 {
            rate_norm / rate_bound
        } else if rate_norm <= SLACK {
            0.0
        } else {
            f64::INFINITY
        };

        report.samples_checked += 1;
        report.drift_ratio = report.drift_ratio.max(drift);
        report.faulty_drift_ratio = report.faulty_drift_ratio.max(faulty);
        report.alpha_ratio = report.alpha_ratio.max(a_ratio);
        report.alpha_rate_ratio = report.alpha_rate_ratio.max(rate_ratio);
        if report.witness.is_none() {
            let breached = [
                (drift, "drift bound a_f·phi_f"),
                (faulty, "faulty drift bound a*_f·phi_f"),
                (a_ratio, "alpha norm bound a1·phi1"),
                (rate_ratio, "alpha rate bound a2·phi2"),
            ]
            .into_iter()
            .find(|(r, _)| *r > 1.0 + SLACK);
            if let Some((_, label)) = breached {
                report.holds = false;
                report.witness = Some((t, x.clone(), label));
            }
        }
    }
    Ok(report)
}

impl AuxiliaryMatrixSpec {
    /// Central-difference estimate of ∂α/∂t, used to cross-check the
    /// closed-form derivative through an independent route.
    pub fn partial_t_by_difference(&self, x: &Vector, t: f64, dt: f64) -> Result<Matrix> {
        let plus = (self.eval)(x, t + dt);
        let minus = (self.eval)(x, t - dt);
        let fd = plus.sub(&minus).scale(1.0 / (2.0 * dt));
        self.check_shape(&fd, "∂α/∂t (finite difference)")?;
        Ok(fd)
    }
}

/// Scalar summary of a recorded run.
#[derive(Debug, Clone)]
pub struct TrackingMetrics {
    pub horizon: f64,
    /// ‖e‖ at the standard checkpoints (5, 10, 20, 30 s) that fall inside
    /// the horizon, read at the nearest grid node.
    pub error_checkpoints: Vec<(f64, f64)>,
    /// max ‖e(t)‖ over the final 20% of the horizon.
    pub band: f64,
    pub peak_error: f64,
    pub peak_error_t: f64,
    pub sup_s: f64,
    pub sup_u: f64,
    pub zeta_final: f64,
    pub theta_final: f64,
    /// (final − value at 90% of horizon) / final, guarded for zero finals.
    pub zeta_growth_last_tenth: f64,
    pub theta_growth_last_tenth: f64,
    /// Total variation of the commanded u per second over the final 20%.
    pub chatter_index: f64,
    pub clamp_events: usize,
}

/// Standard checkpoint times sampled by [`tracking_metrics`].
pub const CHECKPOINT_TIMES: [f64; 4] = [5.0, 10.0, 20.0, 30.0];

pub fn tracking_metrics(trace: &SimulationTrace) -> TrackingMetrics {
    let records = &trace.records;
    let t_end = records.last().map_or(0.0, |r| r.t);
    let norms: Vec<f64> = records.iter().map(|r| r.e.norm()).collect();

    let mut error_checkpoints = Vec::new();
    for &cp in CHECKPOINT_TIMES.iter().filter(|&&cp| cp <= t_end + 1e-9) {
        if let Some(r) = trace.at_time(cp) {
            error_checkpoints.push((cp, r.e.norm()));
        }
    }

    let window_start = t_end - 0.2 * t_end;
    let w0 = records.partition_point(|r| r.t < window_start - 1e-9);
    let band = norms[w0..].iter().cloned().fold(0.0f64, f64::max);

    let (mut peak, mut peak_t) = (0.0f64, 0.0f64);
    for (r, &ne) in records.iter().zip(&norms) {
        if ne > peak {
            peak = ne;
            peak_t = r.t;
        }
    }

    let tenth_start = t_end - 0.1 * t_end;
    let i90 = records.partition_point(|r| r.t < tenth_start - 1e-9).min(records.len() - 1);
    let zeta_final = records.last().map_or(0.0, |r| r.zeta);
    let theta_final = records.last().map_or(0.0, |r| r.theta_hat);
    let growth = |last: f64, at90: f64| {
        if last.abs() > 1e-300 { (last - at90) / last } else { 0.0 }
    };

    let mut tv = 0.0;
    for w in records[w0..].windows(2) {
        for j in 0..trace.m {
            tv += (w[1].u[j] - w[0].u[j]).abs();
        }
    }
    let window_len = t_end - records.get(w0).map_or(t_end, |r| r.t);
    let chatter_index = if window_len > 0.0 { tv / window_len } else { 0.0 };

    TrackingMetrics {
        horizon: t_end,
        error_checkpoints,
        band,
        peak_error: peak,
        peak_error_t: peak_t,
        sup_s: records.iter().map(|r| r.s.norm()).fold(0.0, f64::max),
        sup_u: records.iter().map(|r| r.u.norm()).fold(0.0, f64::max),
        zeta_final,
        theta_final,
        zeta_growth_last_tenth: growth(zeta_final, records[i90].zeta),
        theta_growth_last_tenth: growth(theta_final, records[i90].theta_hat),
        chatter_index,
        clamp_events: trace.theta_clamp_events,
    }
}

/// Largest ‖e(t)‖ over nodes with t ∈ [t_lo, t_hi), as (peak, at-time).
pub fn peak_error_in_window(trace: &SimulationTrace, t_lo: f64, t_hi: f64) -> (f64, f64) {
    let mut peak = 0.0f64;
    let mut at = t_lo;
    for r in &trace.records {
        if r.t >= t_lo - 1e-9 && r.t < t_hi - 1e-9 {
            let ne = r.e.norm();
            if ne > peak {
                peak = ne;
                at = r.t;
            }
        }
    }
    (peak, at)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerVariant;
    use crate::plant::{relaxed_controllability_demo, two_channel_study};
    use crate::presets;
    use crate::simulate::run;
    use rand::{Rng, SeedableRng};

    fn demo_box(points: usize, t_points: usize) -> BoxDomain {
        BoxDomain {
            x_lo: vec![-std::f64::consts::PI, 0.0, -4.0, 0.0],
            x_hi: vec![std::f64::consts::PI, 0.0, 4.0, 0.0],
            x_points: vec![points, 1, points, 1],
            t_lo: 0.0,
            t_hi: 20.0,
            t_points,
        }
    }

    #[test]
    fn alpha_eval_asserts_symmetry_and_definiteness() {
        let bad_sym = AuxiliaryMatrixSpec::new(
            "asym",
            2,
            Arc::new(|_: &Vector, _| Matrix::from_rows(&[&[1.0, 0.2], &[0.0, 1.0]])),
            Arc::new(|_: &Vector, _| Matrix::zeros(2, 2)),
            Arc::new(|_: &Vector, _| Matrix::zeros(2, 2)),
            1.0,
            0.0,
        );
        let err = bad_sym.eval(&Vector::zeros(4), 0.0).unwrap_err();
        assert!(err.to_string().contains("symmetric"));

        let bad_pd = AuxiliaryMatrixSpec::new(
            "negdef",
            2,
            Arc::new(|_: &Vector, _| Matrix::diag(&[1.0, -0.5])),
            Arc::new(|_: &Vector, _| Matrix::zeros(2, 2)),
            Arc::new(|_: &Vector, _| Matrix::zeros(2, 2)),
            1.0,
            0.0,
        );
        let err = bad_pd.eval(&Vector::zeros(4), 0.0).unwrap_err();
        assert!(err.to_string().contains("positive definite"));

        let good = AuxiliaryMatrixSpec::two_channel_study();
        assert!(good.eval(&Vector::zeros(4), 1.0).is_ok());
    }

    #[test]
    fn identity_triple_certifies_with_margin_two() {
        let plant = crate::plant::PlantModel::new(
            "identity_gain",
            2,
            1,
            1.0,
            std::sync::Arc::new(|_: &Vector| Ok(Vector::zeros(2))),
            std::sync::Arc::new(|_: &Vector, _| Ok(Matrix::identity(2))),
            std::sync::Arc::new(|_: &Vector, _| Ok(Vector::zeros(2))),
        )
        .unwrap();
        let bx = BoxDomain {
            x_lo: vec![-1.0, -1.0],
            x_hi: vec![1.0, 1.0],
            x_points: vec![3, 3],
            t_lo: 0.0,
            t_hi: 1.0,
            t_points: 2,
        };
        let cert = certify_controllability(
            &plant,
            None,
            &AuxiliaryMatrixSpec::identity(2),
            CertificationDomain::StateBox(&bx),
        )
        .unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::UniformlyPositive);
        assert!((cert.omega - 2.0).abs() < 1e-12);
        assert_eq!(cert.samples_checked, 18);
    }

    #[test]
    fn coupled_demo_plant_fails_with_identity_alpha() {
        let plant = relaxed_controllability_demo(1.0).unwrap();
        let cert = certify_controllability(
            &plant,
            None,
            &AuxiliaryMatrixSpec::identity(2),
            CertificationDomain::StateBox(&demo_box(41, 5)),
        )
        .unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::Violated);
        let w = cert.witness.expect("violated certificate must carry a witness");
        // the violation region is exactly cos(x₁₁·x₂₁) > 0.42
        assert!((w.x[0] * w.x[2]).cos() > 0.42, "witness outside the analytic region");
        assert!(w.min_eig < 0.0 && w.max_eig > 0.0);
        // worst indefiniteness at cos = 1: eigs of [[4, 2.8],[2.8, 1.8]]
        assert!((w.min_eig - (2.9 - 9.05f64.sqrt())).abs() < 1e-9);
        assert!(cert.indefinite_fraction > 0.0 && cert.indefinite_fraction < 1.0);
    }

    #[test]
    fn coupled_demo_plant_passes_with_companion_alpha() {
        let plant = relaxed_controllability_demo(1.0).unwrap();
        let cert = certify_controllability(
            &plant,
            None,
            &AuxiliaryMatrixSpec::two_channel_demo(),
            CertificationDomain::StateBox(&demo_box(41, 41)),
        )
        .unwrap();
        assert_eq!(cert.verdict, CertificateVerdict::UniformlyPositive);
        assert!(cert.omega > 0.0);
        assert_eq!(cert.indefinite_fraction, 0.0);
    }

    #[test]
    fn beta_matches_hand_values_on_synthetic_trace() {
        use crate::simulate::{RunVerdict, SimulationTrace, TraceRecord};
        let plant = crate::plant::PlantModel::new(
            "diag_gain",
            2,
            1,
            1.0,
            std::sync::Arc::new(|_: &Vector| Ok(Vector::zeros(2))),
            std::sync::Arc::new(|_: &Vector, _| Ok(Matrix::diag(&[1.0, 2.0]))),
            std::sync::Arc::new(|_: &Vector, _| Ok(Vector::zeros(2))),
        )
        .unwrap();
        let node = |t: f64, s: [f64; 2]| TraceRecord {
            t,
            x: Vector::zeros(2),
            y_star: Vector::zeros(2),
            e: Vector::zeros(2),
            s: Vector::from_slice(&s),
            phi_vec: Vector::zeros(2),
            phi: 1.0,
            nu: 0.0,
            zeta: 0.0,
            hbar: 1.0,
            theta_hat: 0.0,
            eta: Vector::zeros(2),
            u: Vector::zeros(2),
            rho_diag: Vector::from_slice(&[1.0, 1.0]),
            eps: Vector::zeros(2),
            u_a: Vector::zeros(2),
        };
        let trace = SimulationTrace {
            scenario_name: "synthetic".into(),
            m: 2,
            n: 1,
            records: vec![node(0.0, [1.0, 0.0]), node(0.1, [0.0, 1.0]), node(0.2, [0.0, 0.0])],
            step_segments: vec![0, 0],
            verdict: RunVerdict::Completed,
            theta_clamp_events: 0,
        };
        // S = 2·diag(1,2) → β = 1 along e₁ and 2 along e₂; zero-s skipped
        let beta = beta_along_trace(&trace, &AuxiliaryMatrixSpec::identity(2), &plant).unwrap();
        assert_eq!(beta.len(), 2);
        assert!((beta[0].1 - 1.0).abs() < 1e-14);
        assert!((beta[1].1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_skew_identity_is_roundoff_small_on_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut worst = 0.0f64;
        for _ in 0..2000 {
            let dim = rng.gen_range(2..=4);
            let mut a = Matrix::zeros(dim, dim);
            let mut g = Matrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    let v: f64 = rng.gen_range(-3.0..3.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v; // keep α symmetric
                    g[(i, j)] = rng.gen_range(-3.0..3.0);
                }
            }
            let mut s = Vector::zeros(dim);
            for i in 0..dim {
                s[i] = rng.gen_range(-2.0..2.0);
            }
            worst = worst.max(quadratic_skew_relative(&a.matmul(&g), &s));
        }
        assert!(worst <= 1e-10, "worst relative skew contribution {worst}");
    }

    #[test]
    fn skew_identity_holds_along_study_trace() {
        let mut scenario = presets::two_channel_scenario(-1.0);
        scenario.horizon = 2.0;
        let trace = run(&scenario).unwrap();
        let report = skew_identity_check(
            &trace,
            &AuxiliaryMatrixSpec::two_channel_study(),
            &scenario.plant,
        )
        .unwrap();
        assert!(report.holds, "worst {}", report.worst_relative);
        assert!(report.samples_checked > 1000);
    }

    #[test]
    fn equilibrium_budget_margin_is_exactly_theta_nu_bar() {
        let plant = crate::plant::PlantModel::new(
            "double_integrator",
            2,
            2,
            1.0,
            Arc::new(|_: &Vector| Ok(Vector::zeros(2))),
            Arc::new(|_: &Vector, _| Ok(Matrix::identity(2))),
            Arc::new(|_: &Vector, _| Ok(Vector::zeros(2))),
        )
        .unwrap();
        let scenario = Scenario {
            name: "equilibrium_budget".into(),
            plant,
            schedule: crate::faults::FaultSchedule::healthy(2),
            variant: ControllerVariant::KnownDirectionSimplified,
            k: 10.0,
            sigma1: 1.0,
            sigma2: 0.1,
            filter: crate::controller::FilterConfig::new(&[5.0]).unwrap(),
            core: CoreFunctionSpec::with_unit_scales(|_| 1.0),
            hbar: crate::nussbaum::NussbaumFn::study_default(),
            gate: crate::controller::GateFunction::study_default(),
            reference: crate::plant::ReferenceTrajectory::zero(2, 2),
            x0: Vector::zeros(4),
            zeta0: 0.0,
            theta0: 0.0,
            horizon: 1.0,
            h: 1e-3,
            oracle: None,
        };
        let trace = run(&scenario).unwrap();
        let diag = lyapunov_budget_with_theta(
            &scenario,
            &trace,
            &AuxiliaryMatrixSpec::identity(2),
            1.0,
            1.0,
        )
        .unwrap();
        // e ≡ 0: LHS = V₂ = θ²/(2σ₂) constant, RHS = Δ, margin = θν̄ = 1
        for &m in &diag.margins {
            assert!((m - 1.0).abs() < 1e-12, "margin {m}");
        }
        assert!(diag.margin_holds());
        assert_eq!(diag.int_s2_total, 0.0);
    }

    #[test]
    fn budget_requires_oracle_block() {
        let mut scenario = presets::two_channel_scenario(-1.0);
        scenario.horizon = 0.5;
        let trace = run(&scenario).unwrap();
        scenario.oracle = None;
        assert!(lyapunov_budget(&scenario, &trace).is_err());
    }

    #[test]
    fn study_alpha_satisfies_declared_bounds_and_identity_does_not_undeclare() {
        let plant = two_channel_study(1.0).unwrap();
        let schedule = crate::faults::two_channel_study_schedule();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut samples = Vec::new();
        for _ in 0..500 {
            let mut x = Vector::zeros(4);
            for i in 0..4 {
                x[i] = rng.gen_range(-5.0..5.0);
            }
            samples.push((rng.gen_range(0.0..30.0), x));
        }
        let core = presets::two_channel_core();
        let bounds = DeclaredBounds { a_f: 1.0, a_star_f: 2.0, a1: 1.3, a2: 0.15 };
        let report = assumption2_bound_check(
            &core,
            &bounds,
            &plant,
            &AuxiliaryMatrixSpec::two_channel_study(),
            Some(&schedule),
            &samples,
        )
        .unwrap();
        assert!(report.holds, "witness: {:?}", report.witness);
        assert!(report.drift_ratio < 1.0 && report.faulty_drift_ratio < 1.0);
        assert!(report.alpha_ratio < 1.0 && report.alpha_rate_ratio < 1.0);

        // under-declared a₁ must be caught with a witness
        let tight = DeclaredBounds { a1: 0.5, ..bounds };
        let bad = assumption2_bound_check(
            &core,
            &tight,
            &plant,
            &AuxiliaryMatrixSpec::two_channel_study(),
            Some(&schedule),
            &samples,
        )
        .unwrap();
        assert!(!bad.holds);
        assert!(matches!(bad.witness, Some((_, _, label)) if label.contains("a1")));
    }

    #[test]
    fn closed_form_alpha_rate_matches_finite_difference() {
        let spec = AuxiliaryMatrixSpec::two_channel_study();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut x = Vector::zeros(4);
            for i in 0..4 {
                x[i] = rng.gen_range(-3.0..3.0);
            }
            let t: f64 = rng.gen_range(0.0..30.0);
            let closed = spec.partial_t(&x, t).unwrap();
            let fd = spec.partial_t_by_difference(&x, t, 1e-6).unwrap();
            assert!(closed.sub(&fd).frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn equilibrium_metrics_are_exact_zeros() {
        let plant = crate::plant::PlantModel::new(
            "double_integrator",
            2,
            2,
            1.0,
            Arc::new(|_: &Vector| Ok(Vector::zeros(2))),
            Arc::new(|_: &Vector, _| Ok(Matrix::identity(2))),
            Arc::new(|_: &Vector, _| Ok(Vector::zeros(2))),
        )
        .unwrap();
        let scenario = Scenario {
            name: "equilibrium_metrics".into(),
            plant,
            schedule: crate::faults::FaultSchedule::healthy(2),
            variant: ControllerVariant::KnownDirectionSimplified,
            k: 10.0,
            sigma1: 1.0,
            sigma2: 0.1,
            filter: crate::controller::FilterConfig::new(&[5.0]).unwrap(),
            core: CoreFunctionSpec::with_unit_scales(|_| 1.0),
            hbar: crate::nussbaum::NussbaumFn::study_default(),
            gate: crate::controller::GateFunction::study_default(),
            reference: crate::plant::ReferenceTrajectory::zero(2, 2),
            x0: Vector::zeros(4),
            zeta0: 0.0,
            theta0: 0.0,
            horizon: 6.0,
            h: 1e-3,
            oracle: None,
        };
        let trace = run(&scenario).unwrap();
        let metrics = tracking_metrics(&trace);
        assert_eq!(metrics.band, 0.0);
        assert_eq!(metrics.peak_error, 0.0);
        assert_eq!(metrics.chatter_index, 0.0);
        assert_eq!(metrics.sup_u, 0.0);
        assert_eq!(metrics.error_checkpoints, vec![(5.0, 0.0)]);
        assert_eq!(metrics.clamp_events, 0);
    }

    #[test]
    fn alpha_registry_rejects_unknown_and_checks_width() {
        assert!(alpha_by_name("identity", 3).is_ok());
        assert!(alpha_by_name("two_channel_study", 2).is_ok());
        assert!(alpha_by_name("two_channel_study", 3).is_err());
        assert!(alpha_by_name("robot_inertia", 3).is_ok());
        let err = alpha_by_name("mystery", 2).unwrap_err().to_string();
        assert!(err.contains("two_channel_demo"));
    }
}
