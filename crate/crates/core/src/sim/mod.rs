//! Plant simulation and data generation: a fixed-step Runge-Kutta
//! integrator, the pendulum-on-cart model in original and lifted
//! coordinates, open-loop data collection, and closed-loop validation.

mod pendulum;

pub use pendulum::{
    closed_loop_simulate, domain_membership_fraction, generate_pendulum_data, lift,
    pendulum_chi, pendulum_clf, pendulum_domain, pendulum_lyapunov_original,
    pendulum_phi, pendulum_plant, pendulum_psi, ForcingLaw, PendulumParams,
};

use crate::error::{Error, Result};
use std::path::Path;

/// State norm beyond which an integration is truncated and flagged.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

/// A sampled trajectory: uniformly spaced times, states, the inputs applied
/// at each sample, and optionally a Lyapunov-function value per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub v_values: Option<Vec<f64>>,
    /// True when the integration was truncated by the blow-up guard.
    pub blow_up: bool,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// CSV export. Two-dimensional states are labeled `theta, theta_dot`
    /// (the plot surface for the pendulum figures), otherwise `x_1..x_d`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let d = self.states.first().map_or(0, Vec::len);
        let m = self.inputs.first().map_or(0, Vec::len);
        let mut header: Vec<String> = vec!["t".into()];
        if d == 2 {
            header.push("theta".into());
            header.push("theta_dot".into());
        } else {
            for i in 1..=d {
                header.push(format!("x_{i}"));
            }
        }
        if m == 1 {
            header.push("u".into());
        } else {
            for i in 1..=m {
                header.push(format!("u_{i}"));
            }
        }
        if self.v_values.is_some() {
            header.push("V".into());
        }
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        writer.write_record(&header)?;
        for k in 0..self.len() {
            let mut row: Vec<String> = vec![format!("{}", self.times[k])];
            row.extend(self.states[k].iter().map(|v| format!("{v}")));
            row.extend(self.inputs[k].iter().map(|v| format!("{v}")));
            if let Some(v) = &self.v_values {
                row.push(format!("{}", v[k]));
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// One classical fourth-order Runge-Kutta step. The input law is evaluated
/// at every stage with the stage time and state.
pub fn rk4_step<F, U>(dynamics: &F, input: &U, t: f64, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
    U: Fn(f64, &[f64]) -> Vec<f64>,
{
    let eval = |t: f64, x: &[f64]| {
        let u = input(t, x);
        dynamics(x, &u)
    };
    let k1 = eval(t, x);
    let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = eval(t + 0.5 * h, &x2);
    let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = eval(t + 0.5 * h, &x3);
    let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = eval(t + h, &x4);
    x.iter()
        .enumerate()
        .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Fixed-step RK4 over `t_span`, recording every step. Deterministic; a
/// non-finite or blown-up state truncates the record and sets the flag.
pub fn integrate<F, U>(
    dynamics: F,
    x0: &[f64],
    input: U,
    t_span: (f64, f64),
    step: f64,
) -> Result<TrajectoryRecord>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
    U: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidInput("integration step must be positive".into()));
    }
    let (t0, t1) = t_span;
    if t1 < t0 {
        return Err(Error::InvalidInput("time span must be forward".into()));
    }
    let n_steps = ((t1 - t0) / step).round() as usize;
    if ((t1 - t0) - n_steps as f64 * step).abs() > 1e-9 * step.max(1.0) {
        return Err(Error::InvalidInput(
            "step must divide the time span within rounding".into(),
        ));
    }

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut inputs = Vec::with_capacity(n_steps + 1);
    let mut x = x0.to_vec();
    let mut blow_up = false;
    for k in 0..=n_steps {
        let t = t0 + k as f64 * step;
        if x.iter().any(|v| !v.is_finite()) || norm(&x) > BLOW_UP_THRESHOLD {
            blow_up = true;
            break;
        }
        times.push(t);
        states.push(x.clone());
        inputs.push(input(t, &x));
        if k < n_steps {
            x = rk4_step(&dynamics, &input, t, &x, step);
        }
    }
    Ok(TrajectoryRecord {
        times,
        states,
        inputs,
        v_values: None,
        blow_up,
    })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
