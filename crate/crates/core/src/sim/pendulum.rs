//! The inverted pendulum on a cart: dynamics, lifted-coordinate fixtures,
//! open-loop data generation, and closed-loop rollout.
//!
//! The arm angle obeys `theta'' = sin(theta) - eps theta' - cos(theta) u`
//! with the cart acceleration `u` as input. The phase variable taken modulo
//! 2 pi embeds into R^3 through the lifted state
//! `(x1, x2, x3) = (cos theta, sin theta, theta')`, where the dynamics are
//! polynomial and the candidate Lyapunov function
//! `V = theta'^2 / 2 + 1 - cos theta + alpha (1 - cos^3 theta)` becomes
//! `x3^2 / 2 + 1 - x1 + alpha (1 - x1^3)`.

use super::{integrate, rk4_step, TrajectoryRecord};
use crate::edmd::{Snapshot, SnapshotDataset};
use crate::error::{Error, Result};
use crate::poly::{build_dictionary, Dictionary, Monomial, Polynomial, SemialgebraicSet};
use crate::synth::{ClfCandidate, Controller, PlantModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Physical and design parameters of the pendulum experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    /// Scaled viscous friction coefficient.
    pub epsilon: f64,
    /// Lyapunov shaping weight.
    pub alpha: f64,
    /// Domain-exclusion parameter: the strip `x2^2 > eta_sq` is excluded.
    pub eta_sq: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            alpha: 100.0,
            eta_sq: 0.95,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        if !(self.eta_sq > 0.0 && self.eta_sq < 1.0) {
            return Err(Error::InvalidInput("eta_sq must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Sinusoidal open-loop forcing `u(t) = A sin(t + B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingLaw {
    pub amplitude: f64,
    pub phase: f64,
}

impl ForcingLaw {
    pub fn new(amplitude: f64, phase: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&amplitude) {
            return Err(Error::InvalidInput("amplitude must lie in [-1, 1]".into()));
        }
        if !(-PI..=PI).contains(&phase) {
            return Err(Error::InvalidInput("phase must lie in [-pi, pi]".into()));
        }
        Ok(Self { amplitude, phase })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (t + self.phase).sin()
    }
}

/// Right-hand side in original coordinates `(theta, theta')`.
pub fn pendulum_rhs(epsilon: f64) -> impl Fn(&[f64], &[f64]) -> Vec<f64> {
    move |x: &[f64], u: &[f64]| {
        let (theta, omega) = (x[0], x[1]);
        vec![omega, theta.sin() - epsilon * omega - theta.cos() * u[0]]
    }
}

/// Lift `(theta, theta')` to `(cos theta, sin theta, theta')`.
pub fn lift(state: &[f64]) -> Vec<f64> {
    vec![state[0].cos(), state[0].sin(), state[1]]
}

/// Observable dictionary: exponents of `x1` and `x3` up to 3, `x2` up to 1
/// (32 monomials).
pub fn pendulum_phi() -> Dictionary {
    build_dictionary(3, &[3, 1, 3], None)
}

/// Image dictionary: exponents of `x1` and `x3` up to 4, `x2` up to 1
/// (50 monomials).
pub fn pendulum_psi() -> Dictionary {
    build_dictionary(3, &[4, 1, 4], None)
}

/// Controller dictionary: monomials of total degree at most `degree` with
/// the `x2`-cap, keeping only entries that vanish at the upright equilibrium
/// (every monomial carries an `x2` or `x3` factor), so the synthesized input
/// is exactly zero there.
pub fn pendulum_chi(degree: u32) -> Dictionary {
    build_dictionary(3, &[degree, 1.min(degree), degree], Some(degree))
        .filter(|m| m.exponent(1) + m.exponent(2) >= 1)
}

/// The state space: the cylinder `1 - x1^2 - x2^2 = 0` minus the strip
/// `x2^2 > eta_sq` around the horizontal positions.
pub fn pendulum_domain(eta_sq: f64) -> SemialgebraicSet {
    let m = |e: &[u32]| Monomial::new(e.to_vec());
    let strip = Polynomial::from_terms(3, [(m(&[0, 0, 0]), eta_sq), (m(&[0, 2, 0]), -1.0)]);
    let circle = Polynomial::from_terms(
        3,
        [
            (m(&[0, 0, 0]), 1.0),
            (m(&[2, 0, 0]), -1.0),
            (m(&[0, 2, 0]), -1.0),
        ],
    );
    SemialgebraicSet::new(3, vec![strip], vec![circle]).expect("well-formed pendulum domain")
}

/// Lifted candidate Lyapunov function as a [`ClfCandidate`] over the phi
/// dictionary, with equilibrium `(1, 0, 0)`.
pub fn pendulum_clf(alpha: f64) -> ClfCandidate {
    let phi = pendulum_phi();
    let m = |e: &[u32]| Monomial::new(e.to_vec());
    let mut coeffs = vec![0.0; phi.len()];
    coeffs[phi.position(&m(&[0, 0, 0])).unwrap()] = 1.0 + alpha;
    coeffs[phi.position(&m(&[1, 0, 0])).unwrap()] = -1.0;
    coeffs[phi.position(&m(&[3, 0, 0])).unwrap()] = -alpha;
    coeffs[phi.position(&m(&[0, 0, 2])).unwrap()] = 0.5;
    ClfCandidate::new(phi, coeffs, vec![1.0, 0.0, 0.0]).expect("V(1,0,0) = 0 by construction")
}

/// Lyapunov value in original coordinates.
pub fn pendulum_lyapunov_original(theta: f64, theta_dot: f64, alpha: f64) -> f64 {
    0.5 * theta_dot * theta_dot + 1.0 - theta.cos() + alpha * (1.0 - theta.cos().powi(3))
}

/// Lifted polynomial plant `f = [-x2 x3, x1 x3, x2 - eps x3]`,
/// `g = [0, 0, -x1]`, the model-based oracle for cross-checks.
pub fn pendulum_plant(epsilon: f64) -> PlantModel {
    let m = |e: &[u32]| Monomial::new(e.to_vec());
    let f = vec![
        Polynomial::from_terms(3, [(m(&[0, 1, 1]), -1.0)]),
        Polynomial::from_terms(3, [(m(&[1, 0, 1]), 1.0)]),
        Polynomial::from_terms(3, [(m(&[0, 1, 0]), 1.0), (m(&[0, 0, 1]), -epsilon)]),
    ];
    let g = vec![vec![
        Polynomial::zero(3),
        Polynomial::zero(3),
        Polynomial::from_terms(3, [(m(&[1, 0, 0]), -1.0)]),
    ]];
    PlantModel::new(f, g).expect("well-formed lifted pendulum plant")
}

/// Number of RK4 substeps per sampling interval during data generation.
const SUBSTEPS_PER_TAU: usize = 10;

/// Simulate randomly forced trajectories and collect lifted snapshot
/// triples. Initial conditions are uniform over `[0, 2 pi) x [-2, 2]`, the
/// forcing amplitude and phase are uniform over `[-1, 1]` and `[-pi, pi]`,
/// and the input is held constant over each sampling interval at its
/// left-endpoint value, so each triple is exactly a constant-input flow
/// sample. Per-trajectory RNG streams derive from `(seed, trajectory index)`
/// making the result independent of scheduling.
pub fn generate_pendulum_data(
    params: &PendulumParams,
    n_trajectories: usize,
    t_final: f64,
    tau: f64,
    seed: u64,
) -> Result<SnapshotDataset> {
    params.validate()?;
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("tau must be positive".into()));
    }
    let per_trajectory = (t_final / tau).round() as usize;
    if n_trajectories == 0 || per_trajectory == 0 {
        return Err(Error::EmptyDataset);
    }

    let rhs = pendulum_rhs(params.epsilon);
    let h = tau / SUBSTEPS_PER_TAU as f64;
    let mut snapshots = Vec::with_capacity(n_trajectories * per_trajectory);
    for traj in 0..n_trajectories {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(traj as u64);
        let theta0 = rng.gen_range(0.0..2.0 * PI);
        let omega0 = rng.gen_range(-2.0..2.0);
        let forcing = ForcingLaw::new(rng.gen_range(-1.0..1.0), rng.gen_range(-PI..PI))
            .expect("sampled within bounds");

        let mut state = vec![theta0, omega0];
        for k in 0..per_trajectory {
            let t_k = k as f64 * tau;
            let u_k = forcing.eval(t_k);
            let mut y = state.clone();
            for s in 0..SUBSTEPS_PER_TAU {
                let t = t_k + s as f64 * h;
                y = rk4_step(&rhs, &|_, _| vec![u_k], t, &y, h);
            }
            snapshots.push(Snapshot {
                x: lift(&state),
                u: vec![u_k],
                y: lift(&y),
            });
            state = y;
        }
    }
    SnapshotDataset::new(3, 1, tau, snapshots)
}

/// Closed-loop rollout from `(theta, theta_dot)` under `u = C chi(lift(x))`,
/// evaluated at every integrator stage. Records the Lyapunov value along the
/// trajectory.
pub fn closed_loop_simulate(
    params: &PendulumParams,
    controller: &Controller,
    x0: (f64, f64),
    t_final: f64,
    step: f64,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    let rhs = pendulum_rhs(params.epsilon);
    let feedback = |_t: f64, state: &[f64]| -> Vec<f64> {
        controller
            .evaluate(&lift(state))
            .expect("controller dimension matches the lifted state")
    };
    let mut record = integrate(rhs, &[x0.0, x0.1], feedback, (0.0, t_final), step)?;
    let v = record
        .states
        .iter()
        .map(|s| pendulum_lyapunov_original(s[0], s[1], params.alpha))
        .collect();
    record.v_values = Some(v);
    Ok(record)
}

/// Fraction of trajectory samples whose lifted state lies in the pendulum
/// domain.
pub fn domain_membership_fraction(trajectory: &TrajectoryRecord, params: &PendulumParams) -> f64 {
    if trajectory.is_empty() {
        return 0.0;
    }
    let domain = pendulum_domain(params.eta_sq);
    let inside = trajectory
        .states
        .iter()
        .filter(|s| {
            domain
                .contains(&lift(s))
                .expect("lifted state has dimension 3")
        })
        .count();
    inside as f64 / trajectory.len() as f64
}
