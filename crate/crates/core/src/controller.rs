//! The control laws and their shared machinery: filtered tracking error,
//! its computable derivative part Φ, the core bounding function φ(·), the
//! integrable gate ν(t), the Nussbaum-modulated action, and the adaptation
//! rates.
//!
//! The controller deliberately sees only the tracking-error stack, its own
//! state, and time — never the plant's f, g, d, fault pattern, or the
//! auxiliary matrix. Those appear solely in analysis-side diagnostics.

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::nussbaum::NussbaumFn;

/// Coefficients λ₁..λ_{n-1} of the filtered error
/// s = λ₁e₁ + … + λ_{n-1}e_{n-1} + e_n.
///
/// Construction verifies that z^{n-1} + λ_{n-1}z^{n-2} + … + λ₁ is Hurwitz
/// (Routh–Hurwitz tabular test), which is what makes s → 0 force e → 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    lambdas: Vec<f64>,
}

impl FilterConfig {
    pub fn new(lambdas: &[f64]) -> Result<Self> {
        // Polynomial coefficients, leading first: z^{n-1} + λ_{n-1}z^{n-2} + ... + λ₁.
        let mut coeffs = vec![1.0];
        coeffs.extend(lambdas.iter().rev());
        if !routh_hurwitz_stable(&coeffs) {
            return Err(Error::domain(format!(
                "filter coefficients {lambdas:?} do not form a Hurwitz polynomial"
            )));
        }
        Ok(FilterConfig { lambdas: lambdas.to_vec() })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// System order n implied by the coefficient count.
    pub fn order(&self) -> usize {
        self.lambdas.len() + 1
    }
}

/// Routh–Hurwitz test: all roots of the polynomial (leading coefficient
/// first) have strictly negative real part. Degenerate pivots count as
/// unstable — boundary polynomials are rejected.
fn routh_hurwitz_stable(coeffs: &[f64]) -> bool {
    let d = coeffs.len() - 1;
    if coeffs.iter().any(|c| !c.is_finite()) {
        return false;
    }
    if d == 0 {
        return true; // constant polynomial: no roots.
    }
    // All coefficients of a Hurwitz polynomial with positive leading
    // coefficient must be positive; this also rejects zero coefficients.
    if coeffs.iter().any(|&c| c <= 0.0) {
        return false;
    }
    // First two Routh rows interleave the coefficients.
    let width = d / 2 + 1;
    let mut row0 = vec![0.0; width + 1];
    let mut row1 = vec![0.0; width + 1];
    for (i, &c) in coeffs.iter().enumerate() {
        if i % 2 == 0 {
            row0[i / 2] = c;
        } else {
            row1[i / 2] = c;
        }
    }
    if d == 1 {
        return row0[0] > 0.0 && row1[0] > 0.0;
    }
    for _ in 2..=d {
        if row1[0] == 0.0 {
            return false;
        }
        let mut next = vec![0.0; width + 1];
        for j in 0..width {
            next[j] = (row1[0] * row0[j + 1] - row0[0] * row1[j + 1]) / row1[0];
        }
        row0 = std::mem::take(&mut row1);
        row1 = next;
        if row1[0] <= 0.0 {
            return false;
        }
    }
    row0[0] > 0.0 && row1[0] > 0.0
}

/// s = Σᵢ λᵢ eᵢ + e_n over the error stack e₁ = e, e₂ = ė, ...
pub fn filtered_error(cfg: &FilterConfig, e_stack: &[Vector]) -> Vector {
    assert_eq!(e_stack.len(), cfg.order(), "error stack must have n entries");
    let n = e_stack.len();
    let mut s = e_stack[n - 1].clone();
    for (i, lambda) in cfg.lambdas.iter().enumerate() {
        s = s.axpy(*lambda, &e_stack[i]);
    }
    s
}

/// Φ = Σᵢ λᵢ eᵢ₊₁ — the computable part of ṡ (everything except ė_n).
pub fn phi_vector(cfg: &FilterConfig, e_stack: &[Vector]) -> Vector {
    assert_eq!(e_stack.len(), cfg.order(), "error stack must have n entries");
    let m = e_stack[0].dim();
    let mut phi = Vector::zeros(m);
    for (i, lambda) in cfg.lambdas.iter().enumerate() {
        phi = phi.axpy(*lambda, &e_stack[i + 1]);
    }
    phi
}

/// The three nonnegative ingredient functions of the core function, each
/// evaluated on the state blocks [x₁, …, x_n].
///
/// `phi_f` dominates the lumped model unknowns (its faulty-mode variant
/// additionally dominates the fault bias terms); `phi1` scales the
/// (‖Φ‖ + φ_f + 1) group and `phi2` the ½‖s‖ group.
#[derive(Debug, Clone, Copy)]
pub struct CoreFunctionSpec {
    pub phi_f: fn(&[Vector]) -> f64,
    pub phi1: fn(&[Vector]) -> f64,
    pub phi2: fn(&[Vector]) -> f64,
}

impl CoreFunctionSpec {
    /// φ₁ = φ₂ = 1 with a caller-chosen dominating term.
    pub fn with_unit_scales(phi_f: fn(&[Vector]) -> f64) -> Self {
        CoreFunctionSpec { phi_f, phi1: |_| 1.0, phi2: |_| 1.0 }
    }
}

/// φ(·) = φ₁·(‖Φ‖ + φ_f + 1) + ½·φ₂·‖s‖.
///
/// Every ingredient must be nonnegative (the bounding assumptions require
/// it); a negative evaluation is a specification error, not a numeric one.
pub fn core_phi(spec: &CoreFunctionSpec, x_blocks: &[Vector], phi_vec: &Vector, s: &Vector) -> Result<f64> {
    let pf = (spec.phi_f)(x_blocks);
    let p1 = (spec.phi1)(x_blocks);
    let p2 = (spec.phi2)(x_blocks);
    if !(pf >= 0.0) || !(p1 >= 0.0) || !(p2 >= 0.0) {
        return Err(Error::domain(format!(
            "core-function ingredients must be nonnegative: φ_f={pf}, φ₁={p1}, φ₂={p2}"
        )));
    }
    Ok(p1 * (phi_vec.norm() + pf + 1.0) + 0.5 * p2 * s.norm())
}

/// Gate function ν(t) in the adaptive denominator φ‖s‖ + ν(t).
///
/// Integrability of ν is what upgrades bounded tracking to asymptotic
/// tracking, so the constant variant is allowed but flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateFunction {
    /// amp·e^{-rate·t}; integral bound ν̄ = amp/rate.
    ExpDecay { amp: f64, rate: f64 },
    /// Constant gate; bounded but NOT integrable (∫ν diverges).
    Constant(f64),
}

impl GateFunction {
    /// The default used by both studies: 0.5·e^{-0.5t}, ν̄ = 1.
    pub fn study_default() -> Self {
        GateFunction::ExpDecay { amp: 0.5, rate: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GateFunction::ExpDecay { amp, rate } => {
                if amp < 0.0 || !(rate > 0.0) || !amp.is_finite() || !rate.is_finite() {
                    Err(Error::domain("gate needs amp ≥ 0 and rate > 0"))
                } else {
                    Ok(())
                }
            }
            GateFunction::Constant(c) => {
                if c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain("constant gate must be finite and ≥ 0"))
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            GateFunction::ExpDecay { amp, rate } => amp * (-rate * t).exp(),
            GateFunction::Constant(c) => c,
        }
    }

    /// Declared bound ν̄ on ∫₀^∞ ν; `None` for non-integrable gates.
    pub fn integral_bound(&self) -> Option<f64> {
        match *self {
            GateFunction::ExpDecay { amp, rate } => Some(amp / rate),
            GateFunction::Constant(_) => None,
        }
    }

    pub fn is_integrable(&self) -> bool {
        self.integral_bound().is_some()
    }
}

/// Which control law a scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerVariant {
    /// u = ℏ(ζ)η against the healthy plant.
    FaultFreeNussbaum,
    /// u = ℏ(ζ)η with the fault-mode core function (φ*_f).
    FaultTolerantNussbaum,
    /// u = -ks - θ̂φ²s/(φ‖s‖+ν): direction known, no Nussbaum state.
    KnownDirectionSimplified,
}

impl ControllerVariant {
    pub fn uses_nussbaum(&self) -> bool {
        !matches!(self, ControllerVariant::KnownDirectionSimplified)
    }
}

/// Adaptive controller state and gains. ζ and θ̂ are integrated by the
/// engine; both are nondecreasing along any trajectory (their rates are
/// structurally nonnegative given θ̂(0) ≥ 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub zeta: f64,
    pub theta_hat: f64,
    pub k: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub variant: ControllerVariant,
}

impl ControllerState {
    pub fn new(k: f64, sigma1: f64, sigma2: f64, variant: ControllerVariant) -> Result<Self> {
        if !(k > 0.0) || !(sigma1 > 0.0) || !(sigma2 > 0.0) {
            return Err(Error::domain("gains k, σ₁, σ₂ must be positive"));
        }
        Ok(ControllerState { zeta: 0.0, theta_hat: 0.0, k, sigma1, sigma2, variant })
    }

    pub fn with_initial(mut self, zeta0: f64, theta0: f64) -> Result<Self> {
        if zeta0 < 0.0 || theta0 < 0.0 {
            return Err(Error::domain("ζ(0) and θ̂(0) must be ≥ 0"));
        }
        self.zeta = zeta0;
        self.theta_hat = theta0;
        Ok(self)
    }
}

/// η = ks + θ̂φ²s/(φ‖s‖+ν) with an overflow-safe evaluation order
/// (s/denominator first, entrywise ≤ 1/φ, then scaled).
fn eta(state: &ControllerState, s: &Vector, phi: f64, nu_t: f64) -> Vector {
    let den = phi * s.norm() + nu_t;
    // den = 0 only with s = 0 and ν = 0; the adaptive term's limit there is
    // 0, so η degenerates to ks. Subnormal den gets the same treatment —
    // the term's true magnitude is ≤ θ̂φ‖s‖, i.e. negligible.
    if den <= f64::MIN_POSITIVE {
        return s.scale(state.k);
    }
    let adaptive = s.scale(1.0 / den).scale(state.theta_hat * phi * phi);
    s.scale(state.k).add(&adaptive)
}

/// Control action: the Nussbaum variants return u = ℏ(ζ)·η; the simplified
/// variant returns u = -η (η still reported for diagnostics).
pub fn control_action(
    state: &ControllerState,
    hbar: &NussbaumFn,
    s: &Vector,
    phi: f64,
    nu_t: f64,
) -> Result<(Vector, Vector)> {
    let eta_vec = eta(state, s, phi, nu_t);
    let u = if state.variant.uses_nussbaum() {
        let gain = hbar.eval(state.zeta)?;
        eta_vec.scale(gain)
    } else {
        eta_vec.scale(-1.0)
    };
    Ok((u, eta_vec))
}

/// Adaptation rates (ζ̇, θ̂̇). Structurally ζ̇ = σ₁sᵀη ≥ 0 (given θ̂ ≥ 0)
/// and θ̂̇ ≥ 0; the simplified variant carries no Nussbaum state, so ζ̇ = 0.
pub fn adaptive_rates(state: &ControllerState, s: &Vector, eta_vec: &Vector, phi: f64, nu_t: f64) -> (f64, f64) {
    let ns = s.norm();
    let den = phi * ns + nu_t;
    let theta_rate = if den <= f64::MIN_POSITIVE {
        0.0
    } else {
        state.sigma2 * phi * phi * ns * (ns / den)
    };
    let zeta_rate = if state.variant.uses_nussbaum() {
        state.sigma1 * s.dot(eta_vec)
    } else {
        0.0
    };
    (zeta_rate, theta_rate)
}

/// Outcome of probing the two bounding inequalities
///   (ZA) ‖φ‖ ≤ ‖φ‖²/(‖φ‖+ν) + ν
///   (ZB) ‖φ‖ ≤ ‖φ‖²/√(‖φ‖²+ν²) + ν
/// and their sharpness ordering RHS(ZA) ≤ RHS(ZB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingReport {
    pub lhs: f64,
    pub rhs_za: f64,
    pub rhs_zb: f64,
    pub za_holds: bool,
    pub zb_holds: bool,
    pub ordering_holds: bool,
}

/// Verify the bounding inequalities for a vector φ and gate value ν ≥ 0.
/// Comparisons carry a 1-ulp-scale relative slack so exact-equality cases
/// (ν = 0) are not spuriously rejected by rounding.
pub fn check_bounding_inequalities(phi_vec: &Vector, nu: f64) -> BoundingReport {
    let norm = phi_vec.norm();
    let rhs_za = if norm + nu > 0.0 { norm * norm / (norm + nu) + nu } else { nu };
    let rhs_zb = {
        let den = (norm * norm + nu * nu).sqrt();
        if den > 0.0 {
            norm * norm / den + nu
        } else {
            nu
        }
    };
    let leq = |a: f64, b: f64| a <= b * (1.0 + 1e-12) + 1e-300;
    BoundingReport {
        lhs: norm,
        rhs_za,
        rhs_zb,
        za_holds: leq(norm, rhs_za),
        zb_holds: leq(norm, rhs_zb),
        ordering_holds: leq(rhs_za, rhs_zb),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(variant: ControllerVariant, k: f64, th: f64) -> ControllerState {
        let mut s = ControllerState::new(k, 1.0, 0.1, variant).unwrap();
        s.theta_hat = th;
        s
    }

    #[test]
    fn hurwitz_accepts_stable_filters() {
        assert!(FilterConfig::new(&[10.0]).is_ok()); // root -10
        assert!(FilterConfig::new(&[2.0, 3.0]).is_ok()); // z²+3z+2 → {-1, -2}
        assert!(FilterConfig::new(&[]).is_ok()); // n = 1: no filter
        assert!(FilterConfig::new(&[6.0, 11.0, 6.0]).is_ok()); // (z+1)(z+2)(z+3)
    }

    #[test]
    fn hurwitz_rejects_unstable_filters() {
        assert!(FilterConfig::new(&[-1.0]).is_err());
        assert!(FilterConfig::new(&[0.0]).is_err()); // boundary root at 0
        assert!(FilterConfig::new(&[-2.0, 3.0]).is_err());
        // z³+z²+2z+8 has roots with positive real part (all coeffs > 0, so
        // positivity alone is insufficient — the Routh table must catch it).
        assert!(FilterConfig::new(&[8.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn filtered_error_examples() {
        let cfg = FilterConfig::new(&[10.0]).unwrap();
        let s = filtered_error(
            &cfg,
            &[Vector::from_slice(&[0.1, 0.2]), Vector::zeros(2)],
        );
        assert_eq!(s.as_slice(), &[1.0, 2.0]);

        let z = filtered_error(&cfg, &[Vector::zeros(2), Vector::zeros(2)]);
        assert_eq!(z.as_slice(), &[0.0, 0.0]);

        let cfg3 = FilterConfig::new(&[2.0, 3.0]).unwrap();
        let s3 = filtered_error(
            &cfg3,
            &[
                Vector::from_slice(&[1.0]),
                Vector::from_slice(&[1.0]),
                Vector::from_slice(&[1.0]),
            ],
        );
        assert_eq!(s3.as_slice(), &[6.0]);
    }

    #[test]
    fn phi_vector_examples() {
        let cfg = FilterConfig::new(&[10.0]).unwrap();
        let phi = phi_vector(&cfg, &[Vector::zeros(1), Vector::from_slice(&[0.5])]);
        assert_eq!(phi.as_slice(), &[5.0]);

        let cfg3 = FilterConfig::new(&[2.0, 3.0]).unwrap();
        let phi3 = phi_vector(
            &cfg3,
            &[Vector::zeros(1), Vector::from_slice(&[1.0]), Vector::from_slice(&[2.0])],
        );
        assert_eq!(phi3.as_slice(), &[8.0]);
    }

    #[test]
    fn core_phi_reference_values() {
        // Two-channel study: φ*_f = ‖x₁‖‖x₂‖ + ‖x₂‖ + 1, φ₁ = φ₂ = 1.
        let spec = CoreFunctionSpec::with_unit_scales(|x| {
            x[0].norm() * x[1].norm() + x[1].norm() + 1.0
        });
        let zero2 = Vector::zeros(2);
        let phi = core_phi(&spec, &[zero2.clone(), zero2.clone()], &zero2, &zero2).unwrap();
        assert_eq!(phi, 2.0);

        // Robot study: φ₂ = ‖q̇‖ gives φ = ‖Φ‖ + φ*_f + 1 + ½‖q̇‖‖s‖ = 2 at rest.
        let robot = CoreFunctionSpec {
            phi_f: |x| {
                let (q, qd) = (x[0].norm(), x[1].norm());
                qd * qd + qd * q + qd + q + 1.0
            },
            phi1: |_| 1.0,
            phi2: |x| x[1].norm(),
        };
        let zero3 = Vector::zeros(3);
        let phi = core_phi(&robot, &[zero3.clone(), zero3.clone()], &zero3, &zero3).unwrap();
        assert_eq!(phi, 2.0);
    }

    #[test]
    fn core_phi_rejects_negative_ingredient() {
        let bad = CoreFunctionSpec::with_unit_scales(|_| -1.0);
        let z = Vector::zeros(2);
        assert!(core_phi(&bad, &[z.clone(), z.clone()], &z, &z).is_err());
    }

    #[test]
    fn control_action_reference_values() {
        let hbar = NussbaumFn::study_default();
        let zero = Vector::zeros(2);

        // s = 0 with ν > 0: both terms vanish.
        let st = state(ControllerVariant::FaultTolerantNussbaum, 100.0, 1.0);
        let (u, eta_vec) = control_action(&st, &hbar, &zero, 2.0, 1.0).unwrap();
        assert_eq!(u.as_slice(), &[0.0, 0.0]);
        assert_eq!(eta_vec.as_slice(), &[0.0, 0.0]);

        // θ̂ = 0: η is exactly k·s.
        let st = state(ControllerVariant::FaultTolerantNussbaum, 100.0, 0.0);
        let s = Vector::from_slice(&[0.3, -0.4]);
        let (_, eta_vec) = control_action(&st, &hbar, &s, 5.0, 0.1).unwrap();
        assert_eq!(eta_vec.as_slice(), &[30.0, -40.0]);

        // ζ=0 (ℏ=1), k=1, θ̂=1, φ=2, s=[1,0], ν=1: η = [7/3, 0], u = η.
        let st = state(ControllerVariant::FaultTolerantNussbaum, 1.0, 1.0);
        let s = Vector::from_slice(&[1.0, 0.0]);
        let (u, eta_vec) = control_action(&st, &hbar, &s, 2.0, 1.0).unwrap();
        assert!((eta_vec[0] - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(eta_vec[1], 0.0);
        assert_eq!(u.as_slice(), eta_vec.as_slice());

        // Simplified variant: u = -η regardless of ζ.
        let st = state(ControllerVariant::KnownDirectionSimplified, 1.0, 1.0);
        let (u, eta_vec) = control_action(&st, &hbar, &s, 2.0, 1.0).unwrap();
        assert_eq!(u.as_slice(), eta_vec.scale(-1.0).as_slice());
    }

    #[test]
    fn zero_gate_zero_s_degenerates_to_linear_term() {
        let hbar = NussbaumFn::study_default();
        let st = state(ControllerVariant::FaultTolerantNussbaum, 100.0, 3.0);
        let zero = Vector::zeros(2);
        let (u, eta_vec) = control_action(&st, &hbar, &zero, 2.0, 0.0).unwrap();
        assert_eq!(eta_vec.as_slice(), &[0.0, 0.0]);
        assert_eq!(u.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn adaptive_rates_reference_values() {
        let zero = Vector::zeros(2);
        let st = state(ControllerVariant::FaultTolerantNussbaum, 1.0, 0.0);
        let (zr, tr) = adaptive_rates(&st, &zero, &zero, 1.0, 0.5);
        assert_eq!((zr, tr), (0.0, 0.0));

        // σ₁=1, k=1, θ̂=0, s=[1,0]: ζ̇ = sᵀ(ks) = 1.
        let s = Vector::from_slice(&[1.0, 0.0]);
        let eta_vec = s.scale(st.k);
        let (zr, _) = adaptive_rates(&st, &s, &eta_vec, 1.0, 0.5);
        assert!((zr - 1.0).abs() < 1e-15);

        // σ₂=0.1, φ=2, ‖s‖=1, ν=1: θ̂̇ = 0.1·4/3.
        let (_, tr) = adaptive_rates(&st, &s, &eta_vec, 2.0, 1.0);
        assert!((tr - 0.1 * 4.0 / 3.0).abs() < 1e-15);

        // Simplified variant owns no Nussbaum state.
        let st = state(ControllerVariant::KnownDirectionSimplified, 1.0, 0.0);
        let (zr, _) = adaptive_rates(&st, &s, &eta_vec, 2.0, 1.0);
        assert_eq!(zr, 0.0);
    }

    #[test]
    fn gate_functions() {
        let g = GateFunction::study_default();
        assert!((g.eval(0.0) - 0.5).abs() < 1e-15);
        assert!((g.eval(2.0) - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(g.integral_bound(), Some(1.0));
        assert!(g.is_integrable());

        let c = GateFunction::Constant(0.5);
        assert!(!c.is_integrable());
        assert_eq!(c.integral_bound(), None);
        assert!(c.validate().is_ok());
        assert!(GateFunction::Constant(-0.1).validate().is_err());
        assert!(GateFunction::ExpDecay { amp: 0.5, rate: 0.0 }.validate().is_err());
    }

    #[test]
    fn bounding_inequalities_reference_points() {
        // ν = 0: both sides collapse to ‖φ‖ (equality).
        let r = check_bounding_inequalities(&Vector::from_slice(&[3.0, 4.0]), 0.0);
        assert_eq!(r.lhs, 5.0);
        assert_eq!(r.rhs_za, 5.0);
        assert_eq!(r.rhs_zb, 5.0);
        assert!(r.za_holds && r.zb_holds && r.ordering_holds);

        let r = check_bounding_inequalities(&Vector::zeros(3), 1.0);
        assert_eq!(r.rhs_za, 1.0);
        assert_eq!(r.rhs_zb, 1.0);
        assert!(r.za_holds && r.zb_holds && r.ordering_holds);

        let r = check_bounding_inequalities(&Vector::from_slice(&[1.0, 0.0]), 1.0);
        assert!((r.rhs_za - 1.5).abs() < 1e-15);
        assert!((r.rhs_zb - (1.0 / 2.0f64.sqrt() + 1.0)).abs() < 1e-15);
        assert!(r.za_holds && r.zb_holds && r.ordering_holds);
    }

    #[test]
    fn eta_linear_in_s_when_theta_zero() {
        let st = state(ControllerVariant::FaultTolerantNussbaum, 7.0, 0.0);
        let s = Vector::from_slice(&[0.2, -1.3, 0.7]);
        let e1 = eta(&st, &s, 3.0, 0.1);
        let e2 = eta(&st, &s.scale(2.5), 3.0, 0.1);
        for i in 0..3 {
            assert!((e2[i] - 2.5 * e1[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn state_construction_guards() {
        assert!(ControllerState::new(0.0, 1.0, 0.1, ControllerVariant::FaultFreeNussbaum).is_err());
        assert!(ControllerState::new(1.0, -1.0, 0.1, ControllerVariant::FaultFreeNussbaum).is_err());
        let st = ControllerState::new(1.0, 1.0, 0.1, ControllerVariant::FaultFreeNussbaum).unwrap();
        assert!(st.with_initial(-0.1, 0.0).is_err());
        assert!(st.with_initial(0.0, -0.1).is_err());
        let ok = st.with_initial(0.5, 0.2).unwrap();
        assert_eq!((ok.zeta, ok.theta_hat), (0.5, 0.2));
    }
}
