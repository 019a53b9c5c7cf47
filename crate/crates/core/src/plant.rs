//! Canonical-form MIMO plant contract, the built-in study plants, and the
//! 3-link planar manipulator with its normal-form transformation.
//!
//! A plant is a pure triple (f, g, d) over the stacked state
//! x̄ = [x₁; …; x_n] (each block of width m) plus a control-direction sign
//! folded into g. Everything is closed-form and immutable after construction,
//! so models are freely shareable across threads.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

type StateFn = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;
type StateTimeVecFn = Arc<dyn Fn(&Vector, f64) -> Result<Vector> + Send + Sync>;
type StateTimeMatFn = Arc<dyn Fn(&Vector, f64) -> Result<Matrix> + Send + Sync>;

/// Canonical-form plant ẋᵢ = xᵢ₊₁ (i < n), ẋ_n = f(x̄) + b·g(x̄,t)·u_a + d(x̄,t).
#[derive(Clone)]
pub struct PlantModel {
    pub name: String,
    /// Output/actuation dimension (width of each state block).
    pub m: usize,
    /// Plant order (number of stacked blocks).
    pub n: usize,
    /// Control-direction multiplier applied to g; must be +1 or -1.
    pub direction_sign_b: f64,
    f: StateFn,
    g: StateTimeMatFn,
    d: StateTimeVecFn,
}

impl std::fmt::Debug for PlantModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlantModel")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("direction_sign_b", &self.direction_sign_b)
            .finish_non_exhaustive()
    }
}

impl PlantModel {
    pub fn new(
        name: impl Into<String>,
        m: usize,
        n: usize,
        direction_sign_b: f64,
        f: StateFn,
        g: StateTimeMatFn,
        d: StateTimeVecFn,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::domain("plant dimensions must be positive"));
        }
        if direction_sign_b != 1.0 && direction_sign_b != -1.0 {
            return Err(Error::domain(format!(
                "direction_sign_b must be +1 or -1, got {direction_sign_b}"
            )));
        }
        Ok(PlantModel { name: name.into(), m, n, direction_sign_b, f, g, d })
    }

    /// Same plant with the control-direction sign replaced.
    pub fn with_direction(mut self, direction_sign_b: f64) -> Result<Self> {
        if direction_sign_b != 1.0 && direction_sign_b != -1.0 {
            return Err(Error::domain(format!(
                "direction_sign_b must be +1 or -1, got {direction_sign_b}"
            )));
        }
        self.direction_sign_b = direction_sign_b;
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.m * self.n
    }

    pub fn eval_f(&self, x: &Vector) -> Result<Vector> {
        self.check_state(x)?;
        let v = (self.f)(x)?;
        debug_assert_eq!(v.dim(), self.m);
        Ok(v)
    }

    /// Control-effectiveness matrix with the direction sign already applied.
    pub fn eval_g(&self, x: &Vector, t: f64) -> Result<Matrix> {
        self.check_state(x)?;
        let g = (self.g)(x, t)?;
        debug_assert_eq!((g.rows(), g.cols()), (self.m, self.m));
        Ok(if self.direction_sign_b == 1.0 { g } else { g.scale(self.direction_sign_b) })
    }

    pub fn eval_d(&self, x: &Vector, t: f64) -> Result<Vector> {
        self.check_state(x)?;
        let v = (self.d)(x, t)?;
        debug_assert_eq!(v.dim(), self.m);
        Ok(v)
    }

    pub fn check_state(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.state_dim() {
            return Err(Error::domain(format!(
                "state dimension {} does not match plant ({}×{})",
                x.dim(),
                self.m,
                self.n
            )));
        }
        Ok(())
    }
}

/// Stacked derivative of the canonical form: shifts the chain blocks and
/// closes the last block with f + b·g·u_a + d.
pub fn canonical_derivative(plant: &PlantModel, x: &Vector, u_a: &Vector, t: f64) -> Result<Vector> {
    let (m, n) = (plant.m, plant.n);
    if u_a.dim() != m {
        return Err(Error::domain(format!("input dimension {} != m = {}", u_a.dim(), m)));
    }
    let f = plant.eval_f(x)?;
    let g = plant.eval_g(x, t)?;
    let d = plant.eval_d(x, t)?;
    let mut xdot = Vector::zeros(m * n);
    for i in 0..m * (n - 1) {
        xdot[i] = x[i + m];
    }
    let gu = g.matvec(u_a);
    for j in 0..m {
        xdot[m * (n - 1) + j] = f[j] + gu[j] + d[j];
    }
    if !xdot.is_finite() {
        return Err(Error::Divergence { t, what: "plant derivative is non-finite".into() });
    }
    Ok(xdot)
}

/// Desired output y*(t) together with its time derivatives up to the plant
/// order, all closed-form.
#[derive(Clone)]
pub struct ReferenceTrajectory {
    pub m: usize,
    /// Highest derivative order available (= plant order n).
    pub order: usize,
    eval: Arc<dyn Fn(f64, usize) -> Vector + Send + Sync>,
}

impl ReferenceTrajectory {
    pub fn new(
        m: usize,
        order: usize,
        eval: Arc<dyn Fn(f64, usize) -> Vector + Send + Sync>,
    ) -> Self {
        ReferenceTrajectory { m, order, eval }
    }

    /// k-th time derivative of y ^* (k = 0 is y* itself).
    pub fn derivative(&self, t: f64, k: usize) -> Result<Vector> {
        if k > self.order {
            return Err(Error::domain(format!(
                "reference derivative order {k} exceeds plant order {}",
                self.order
            )));
        }
        let v = (self.eval)(t, k);
        debug_assert_eq!(v.dim(), self.m);
        Ok(v)
    }

    pub fn y_star(&self, t: f64) -> Vector {
        (self.eval)(t, 0)
    }

    /// Identically-zero reference.
    pub fn zero(m: usize, order: usize) -> Self {
        ReferenceTrajectory::new(m, order, Arc::new(move |_, _| Vector::zeros(m)))
    }

    /// Two-channel study reference [0.2 + 0.2cos t; 0.25 + 0.25sin t].
    pub fn two_channel_study() -> Self {
        ReferenceTrajectory::new(
            2,
            2,
            Arc::new(|t, k| {
                // d^k cos(t) = cos(t + kπ/2), d^k sin(t) = sin(t + kπ/2)
                let ph = t + k as f64 * std::f64::consts::FRAC_PI_2;
                let base = if k == 0 { [0.2, 0.25] } else { [0.0, 0.0] };
                Vector::from_slice(&[base[0] + 0.2 * ph.cos(), base[1] + 0.25 * ph.sin()])
            }),
        )
    }

    /// Manipulator study reference [0.5+0.5sin t; 0.5-0.5cos t; 0.5-0.5sin t].
    pub fn robot_study() -> Self {
        ReferenceTrajectory::new(
            3,
            2,
            Arc::new(|t, k| {
                let ph = t + k as f64 * std::f64::consts::FRAC_PI_2;
                let (s, c) = (ph.sin(), ph.cos());
                let base = if k == 0 { 0.5 } else { 0.0 };
                Vector::from_slice(&[base + 0.5 * s, base - 0.5 * c, base - 0.5 * s])
            }),
        )
    }
}

/// Two-channel study disturbance d = [0.05·x₁₁x₂₁·sin t; 0.05·x₁₂x₂₂·sin t].
pub fn two_channel_disturbance(x: &Vector, t: f64) -> Vector {
    let st = t.sin();
    Vector::from_slice(&[0.05 * x[0] * x[2] * st, 0.05 * x[1] * x[3] * st])
}

/// 3-link planar revolute manipulator with per-link mass, length, COM offset
/// and rotational inertia; gravity acts in the plane.
///
/// Joint angles q are relative; absolute link angles are θᵢ = q₁+…+qᵢ. The
/// COM of link r sits at Σ_{w≤r} a_{r,w}[cos θ_w; sin θ_w] with lever arms
/// a_{r,w} = l_w for w < r and lc_r for w = r, which yields closed forms for
/// M, its gradient, the Christoffel C (skew-symmetry exact), and G.
#[derive(Debug, Clone, Copy)]
pub struct RobotModel {
    pub masses: [f64; 3],
    pub lengths: [f64; 3],
    pub com_offsets: [f64; 3],
    pub inertias: [f64; 3],
    pub gravity: f64,
}

impl RobotModel {
    /// Parameter set used by the manipulator study: mᵢ = 0.5 kg, lᵢ = 1 m,
    /// lcᵢ = 0.5 m, Iᵢ = {1.5, 1.0, 0.5} kg·m², g₀ = 9.81 m/s².
    pub fn study_default() -> Self {
        RobotModel {
            masses: [0.5; 3],
            lengths: [1.0; 3],
            com_offsets: [0.5; 3],
            inertias: [1.5, 1.0, 0.5],
            gravity: 9.81,
        }
    }

    /// Lever arm a_{r,w} from joint w to the COM chain of link r (w ≤ r).
    fn lever(&self, r: usize, w: usize) -> f64 {
        if w < r {
            self.lengths[w]
        } else {
            self.com_offsets[r]
        }
    }

    fn abs_angles(q: &Vector) -> [f64; 3] {
        [q[0], q[0] + q[1], q[0] + q[1] + q[2]]
    }

    /// Inertia matrix M(q); symmetric positive definite.
    pub fn inertia_matrix(&self, q: &Vector) -> Matrix {
        let th = Self::abs_angles(q);
        let mut m = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for r in i.max(j)..3 {
                    acc += self.inertias[r];
                    for w in i..=r {
                        for v in j..=r {
                            acc += self.masses[r]
                                * self.lever(r, w)
                                * self.lever(r, v)
                                * (th[w] - th[v]).cos();
                        }
                    }
                }
                m[(i, j)] = acc;
            }
        }
        m
    }

    /// Per-joint gradient ∂M/∂q_k, k = 0..3.
    fn inertia_gradient(&self, q: &Vector) -> [Matrix; 3] {
        let th = Self::abs_angles(q);
        let mut grad = [Matrix::zeros(3, 3), Matrix::zeros(3, 3), Matrix::zeros(3, 3)];
        for i in 0..3 {
            for j in 0..3 {
                for r in i.max(j)..3 {
                    for w in i..=r {
                        for v in j..=r {
                            if w == v {
                                continue;
                            }
                            let coeff = -self.masses[r]
                                * self.lever(r, w)
                                * self.lever(r, v)
                                * (th[w] - th[v]).sin();
                            for (k, g) in grad.iter_mut().enumerate() {
                                // ∂(θ_w - θ_v)/∂q_k = [k ≤ w] - [k ≤ v]
                                let dth = (k <= w) as i32 - (k <= v) as i32;
                                if dth != 0 {
                                    g[(i, j)] += coeff * dth as f64;
                                }
                            }
                        }
                    }
                }
            }
        }
        grad
    }

    /// Coriolis/centrifugal matrix via the Christoffel factorization, the
    /// unique choice making Ṁ - 2C skew-symmetric.
    pub fn coriolis_matrix(&self, q: &Vector, qd: &Vector) -> Matrix {
        let grad = self.inertia_gradient(q);
        let mut c = Matrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += 0.5
                        * (grad[k][(i, j)] + grad[j][(i, k)] - grad[i][(j, k)])
                        * qd[k];
                }
                c[(i, j)] = acc;
            }
        }
        c
    }

    /// Ṁ(q, q̇) = Σ_k (∂M/∂q_k) q̇_k.
    pub fn inertia_matrix_rate(&self, q: &Vector, qd: &Vector) -> Matrix {
        let grad = self.inertia_gradient(q);
        let mut rate = Matrix::zeros(3, 3);
        for (k, g) in grad.iter().enumerate() {
            rate = rate.add(&g.scale(qd[k]));
        }
        rate
    }

    /// Gravity torque vector G(q).
    pub fn gravity_vector(&self, q: &Vector) -> Vector {
        let th = Self::abs_angles(q);
        let mut g = Vector::zeros(3);
        for i in 0..3 {
            let mut acc = 0.0;
            for r in i..3 {
                for w in i..=r {
                    acc += self.masses[r] * self.lever(r, w) * th[w].cos();
                }
            }
            g[i] = self.gravity * acc;
        }
        g
    }

    /// Joint-space disturbance torque of the manipulator study:
    /// [0.02·q̇₁·sin t; 0.02·q̇₂·cos t; 0.02·q̇₃·sin t].
    pub fn disturbance_torque(qd: &Vector, t: f64) -> Vector {
        Vector::from_slice(&[
            0.02 * qd[0] * t.sin(),
            0.02 * qd[1] * t.cos(),
            0.02 * qd[2] * t.sin(),
        ])
    }

    /// Forward dynamics q̈ = M⁻¹(u_a - Cq̇ - G - τ); errors if M is singular
    /// to tolerance.
    pub fn acceleration(&self, q: &Vector, qd: &Vector, u_a: &Vector, tau: &Vector) -> Result<Vector> {
        let m = self.inertia_matrix(q);
        let mut rhs = u_a.sub(&self.coriolis_matrix(q, qd).matvec(qd));
        rhs = rhs.sub(&self.gravity_vector(q)).sub(tau);
        m.solve(&rhs)
    }
}

/// Normal-form embedding of the manipulator: x₁ = q, x₂ = q̇, g = M⁻¹,
/// f = M⁻¹(-Cq̇ - G), d = -M⁻¹τ_d.
pub fn robot_to_canonical(robot: RobotModel) -> PlantModel {
    let f_bot = robot;
    let g_bot = robot;
    let d_bot = robot;
    PlantModel::new(
        "robot_3dof_v_b",
        3,
        2,
        1.0,
        Arc::new(move |x: &Vector| {
            let (q, qd) = split_robot_state(x);
            let m = f_bot.inertia_matrix(&q);
            let mut rhs = f_bot.coriolis_matrix(&q, &qd).matvec(&qd).scale(-1.0);
            rhs = rhs.sub(&f_bot.gravity_vector(&q));
            m.solve(&rhs)
        }),
        Arc::new(move |x: &Vector, _t: f64| {
            let (q, _) = split_robot_state(x);
            g_bot.inertia_matrix(&q).inverse()
        }),
        Arc::new(move |x: &Vector, t: f64| {
            let (q, qd) = split_robot_state(x);
            let m = d_bot.inertia_matrix(&q);
            m.solve(&RobotModel::disturbance_torque(&qd, t).scale(-1.0))
        }),
    )
    .expect("static dimensions are valid")
}

fn split_robot_state(x: &Vector) -> (Vector, Vector) {
    (
        Vector::from_slice(&x.as_slice()[0..3]),
        Vector::from_slice(&x.as_slice()[3..6]),
    )
}

/// Two-channel uncertain plant of the numerical study (m = 2, n = 2).
pub fn two_channel_study(direction_sign_b: f64) -> Result<PlantModel> {
    PlantModel::new(
        "numerical_example_iv_b",
        2,
        2,
        direction_sign_b,
        Arc::new(|x: &Vector| {
            Ok(Vector::from_slice(&[
                0.5 * x[2] * x[0].sin(),
                0.6 * x[3] * x[2].tanh(),
            ]))
        }),
        Arc::new(|x: &Vector, t: f64| {
            Ok(Matrix::from_rows(&[
                &[2.0 + 0.1 * t.cos(), 2.0 + 0.1 * (x[0] * x[2]).cos()],
                &[2.0 + 0.1 * (x[1] * x[3]).sin(), 3.0 + 0.1 * t.sin()],
            ]))
        }),
        Arc::new(|x: &Vector, t: f64| Ok(two_channel_disturbance(x, t))),
    )
}

/// Demonstration plant whose symmetrized g loses definiteness where
/// cos(x₁₁x₂₁) > 0.42; f = d = 0 (controllability-certification subject).
pub fn relaxed_controllability_demo(direction_sign_b: f64) -> Result<PlantModel> {
    PlantModel::new(
        "remark_3_exg1",
        2,
        2,
        direction_sign_b,
        Arc::new(|_x: &Vector| Ok(Vector::zeros(2))),
        Arc::new(|x: &Vector, _t: f64| {
            let cp = (x[0] * x[2]).cos();
            Ok(Matrix::from_rows(&[
                &[2.0, 0.6 + 0.1 * cp],
                &[2.0 + 0.1 * cp, 0.9],
            ]))
        }),
        Arc::new(|_x: &Vector, _t: f64| Ok(Vector::zeros(2))),
    )
}

/// Names accepted by [`plant_by_name`].
pub const PLANT_NAMES: [&str; 3] = ["numerical_example_iv_b", "robot_3dof_v_b", "remark_3_exg1"];

/// Registry of the built-in plants. "custom" plants are constructed in code
/// via [`PlantModel::new`]; there is deliberately no dynamic loading.
pub fn plant_by_name(name: &str, direction_sign_b: f64) -> Result<PlantModel> {
    match name {
        "numerical_example_iv_b" => two_channel_study(direction_sign_b),
        "robot_3dof_v_b" => {
            robot_to_canonical(RobotModel::study_default()).with_direction(direction_sign_b)
        }
        "remark_3_exg1" => relaxed_controllability_demo(direction_sign_b),
        "custom" => Err(Error::config(
            "\"custom\" plants are built in code via PlantModel::new, not by name",
        )),
        other => Err(Error::config(format!(
            "unknown plant {other:?}; built-ins: {PLANT_NAMES:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rk4_step, sym_eig, sym_eig_extrema};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ivb_state(x11: f64, x12: f64, x21: f64, x22: f64) -> Vector {
        Vector::from_slice(&[x11, x12, x21, x22])
    }

    #[test]
    fn chain_shift_with_identity_g() {
        let plant = PlantModel::new(
            "double_integrator",
            2,
            2,
            1.0,
            Arc::new(|_: &Vector| Ok(Vector::zeros(2))),
            Arc::new(|_: &Vector, _| Ok(Matrix::identity(2))),
            Arc::new(|_: &Vector, _| Ok(Vector::zeros(2))),
        )
        .unwrap();
        let x = ivb_state(1.0, -2.0, 3.0, 4.0);
        let xdot = canonical_derivative(&plant, &x, &Vector::zeros(2), 0.0).unwrap();
        assert_eq!(xdot.as_slice(), &[3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn two_channel_vanishes_at_origin() {
        let plant = two_channel_study(1.0).unwrap();
        let xdot =
            canonical_derivative(&plant, &Vector::zeros(4), &Vector::zeros(2), 0.0).unwrap();
        assert_eq!(xdot.as_slice(), &[0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_channel_gain_at_origin() {
        let plant = two_channel_study(1.0).unwrap();
        let g = plant.eval_g(&Vector::zeros(4), 0.0).unwrap();
        let expect = Matrix::from_rows(&[&[2.1, 2.1], &[2.0, 3.0]]);
        assert!(g.sub(&expect).frobenius_norm() < 1e-15);
    }

    #[test]
    fn negative_direction_negates_gain_pointwise() {
        let pos = two_channel_study(1.0).unwrap();
        let neg = two_channel_study(-1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = ivb_state(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let t = rng.gen_range(0.0..20.0);
            let gp = pos.eval_g(&x, t).unwrap();
            let gn = neg.eval_g(&x, t).unwrap();
            assert!(gp.add(&gn).frobenius_norm() == 0.0);
        }
    }

    #[test]
    fn direction_sign_must_be_unit() {
        assert!(two_channel_study(0.5).is_err());
        assert!(two_channel_study(0.0).is_err());
    }

    #[test]
    fn disturbance_reference_points() {
        assert_eq!(two_channel_disturbance(&Vector::zeros(4), 1.0).norm(), 0.0);
        let d = two_channel_disturbance(
            &ivb_state(1.0, 0.0, 2.0, 0.0),
            std::f64::consts::FRAC_PI_2,
        );
        assert!((d[0] - 0.1).abs() < 1e-15);
        assert_eq!(d[1], 0.0);
        let tau = RobotModel::disturbance_torque(&Vector::from_slice(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(tau.as_slice(), &[0.0, 0.02, 0.0]);
    }

    #[test]
    fn reference_derivatives_match_finite_differences() {
        for reference in [ReferenceTrajectory::two_channel_study(), ReferenceTrajectory::robot_study()]
        {
            let eps = 1e-6;
            for &t in &[0.0, 0.7, 3.4, 11.0] {
                for k in 0..reference.order {
                    let num = reference
                        .derivative(t + eps, k)
                        .unwrap()
                        .sub(&reference.derivative(t - eps, k).unwrap())
                        .scale(0.5 / eps);
                    let ana = reference.derivative(t, k + 1).unwrap();
                    assert!(num.sub(&ana).norm() < 1e-8, "k={k} t={t}");
                }
            }
            assert!(reference.derivative(0.0, reference.order + 1).is_err());
        }
    }

    #[test]
    fn robot_inertia_at_home_position() {
        let robot = RobotModel::study_default();
        let m = robot.inertia_matrix(&Vector::zeros(3));
        let expect = Matrix::from_rows(&[
            &[7.375, 3.75, 1.125],
            &[3.75, 2.75, 0.875],
            &[1.125, 0.875, 0.625],
        ]);
        assert!(m.sub(&expect).frobenius_norm() < 1e-14);
        let (eigs, _) = sym_eig(&m).unwrap();
        let expect_eigs = [0.28406156, 0.77861038, 9.68732806];
        for (have, want) in eigs.iter().zip(expect_eigs) {
            assert!((have - want).abs() < 1e-7);
        }
    }

    #[test]
    fn robot_inertia_positive_definite_everywhere_sampled() {
        let robot = RobotModel::study_default();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let q = Vector::from_slice(&[
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            ]);
            let m = robot.inertia_matrix(&q);
            assert!(m.sub(&m.transpose()).frobenius_norm() < 1e-14);
            let (lo, _) = sym_eig_extrema(&m, true).unwrap();
            assert!(lo > 0.1, "min eig {lo} at q={:?}", q.as_slice());
        }
    }

    #[test]
    fn skew_symmetry_of_inertia_rate_minus_twice_coriolis() {
        let robot = RobotModel::study_default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = Vector::from_slice(&[
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ]);
            let qd = Vector::from_slice(&[
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ]);
            let x = Vector::from_slice(&[
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            let s = robot
                .inertia_matrix_rate(&q, &qd)
                .sub(&robot.coriolis_matrix(&q, &qd).scale(2.0));
            assert!(s.quad_form(&x).abs() < 1e-8);
        }
    }

    #[test]
    fn canonical_gain_inverts_inertia() {
        let robot = RobotModel::study_default();
        let plant = robot_to_canonical(robot);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let x = Vector::from_slice(&[
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                0.0,
                0.0,
                0.0,
            ]);
            let g = plant.eval_g(&x, 0.0).unwrap();
            let m = robot.inertia_matrix(&Vector::from_slice(&x.as_slice()[0..3].to_vec()));
            let residual = g.matmul(&m).sub(&Matrix::identity(3)).frobenius_norm();
            assert!(residual < 1e-10);
        }
    }

    #[test]
    fn feedback_linearization_cancels_exactly() {
        let robot = RobotModel::study_default();
        let plant = robot_to_canonical(robot);
        let q = Vector::from_slice(&[0.4, -0.9, 1.3]);
        let qd = Vector::from_slice(&[0.7, 0.2, -0.5]);
        let t = 2.0;
        let mut u_a = robot.coriolis_matrix(&q, &qd).matvec(&qd);
        u_a = u_a.add(&robot.gravity_vector(&q));
        u_a = u_a.add(&RobotModel::disturbance_torque(&qd, t));
        let x = Vector::from_slice(&[q[0], q[1], q[2], qd[0], qd[1], qd[2]]);
        let xdot = canonical_derivative(&plant, &x, &u_a, t).unwrap();
        for j in 0..3 {
            assert!((xdot[j] - qd[j]).abs() < 1e-14);
            assert!(xdot[3 + j].abs() < 1e-10, "q̈ = {}", xdot[3 + j]);
        }
    }

    #[test]
    fn canonical_form_matches_direct_forward_dynamics() {
        let robot = RobotModel::study_default();
        let plant = robot_to_canonical(robot);
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..100 {
            let q = Vector::from_slice(&[
                rng.gen_range(-2.5..2.5),
                rng.gen_range(-2.5..2.5),
                rng.gen_range(-2.5..2.5),
            ]);
            let qd = Vector::from_slice(&[
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ]);
            let u_a = Vector::from_slice(&[
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            ]);
            let t = rng.gen_range(0.0..30.0);
            let x = Vector::from_slice(&[q[0], q[1], q[2], qd[0], qd[1], qd[2]]);
            let xdot = canonical_derivative(&plant, &x, &u_a, t).unwrap();
            let qdd = robot
                .acceleration(&q, &qd, &u_a, &RobotModel::disturbance_torque(&qd, t))
                .unwrap();
            for j in 0..3 {
                assert!((xdot[3 + j] - qdd[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kinetic_energy_conserved_without_gravity_or_input() {
        let mut robot = RobotModel::study_default();
        robot.gravity = 0.0;
        let mut x = Vector::from_slice(&[0.5, 0.1, 0.12, 0.3, -0.2, 0.1]);
        let energy = |x: &Vector| {
            let (q, qd) = split_robot_state(x);
            0.5 * robot.inertia_matrix(&q).quad_form(&qd)
        };
        let e0 = energy(&x);
        let h = 1e-4;
        for i in 0..10_000 {
            let t = i as f64 * h;
            x = rk4_step(
                &mut |_, x: &Vector| {
                    let (q, qd) = split_robot_state(x);
                    let qdd =
                        robot.acceleration(&q, &qd, &Vector::zeros(3), &Vector::zeros(3))?;
                    Ok(Vector::from_slice(&[qd[0], qd[1], qd[2], qdd[0], qdd[1], qdd[2]]))
                },
                t,
                &x,
                h,
            )
            .unwrap();
        }
        let drift = (energy(&x) - e0).abs() / e0;
        assert!(drift < 1e-10, "relative energy drift {drift}");
    }

    #[test]
    fn registry_names_and_rejections() {
        for name in PLANT_NAMES {
            assert_eq!(plant_by_name(name, 1.0).unwrap().name, name);
        }
        assert!(plant_by_name("custom", 1.0).is_err());
        let err = plant_by_name("no_such_plant", 1.0).unwrap_err().to_string();
        assert!(err.contains("numerical_example_iv_b"));
        assert!(plant_by_name("numerical_example_iv_b", 2.0).is_err());
    }

    #[test]
    fn state_dimension_checked() {
        let plant = two_channel_study(1.0).unwrap();
        assert!(plant.eval_f(&Vector::zeros(3)).is_err());
        assert!(canonical_derivative(&plant, &Vector::zeros(4), &Vector::zeros(3), 0.0).is_err());
    }
}
