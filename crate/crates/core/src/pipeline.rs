//! File-level pipeline steps shared by the command-line front end and the
//! end-to-end tests: reproducible configuration, dataset generation, model
//! fitting, controller synthesis, closed-loop simulation, and verification.
//!
//! Every step writes its artifacts into an output directory along with an
//! echo of the effective configuration, so a run is fully described by its
//! directory contents.

use crate::edmd::{fit_koopman, KoopmanModel, LieModel, SnapshotDataset};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::sdp::{export_sdpa, SolveOptions};
use crate::sim::{
    closed_loop_simulate, domain_membership_fraction, generate_pendulum_data, lift, pendulum_chi,
    pendulum_clf, pendulum_domain, pendulum_plant, PendulumParams, TrajectoryRecord,
};
use crate::sos::{gram_polynomial, BasisPolicy, DecisionSpace, SosConstraint, SosProgram};
use crate::synth::{
    cross_verify, reverify_stored, synthesize, Controller, LieDecomposition,
    SynthesisObjective, SynthesisOptions,
};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Complete, reproducible description of a pipeline run. Round-trips through
/// JSON losslessly; every field has a documented default matching the
/// pendulum experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunConfig {
    /// Config format version.
    pub version: u32,
    /// Plant selection; only the pendulum on a cart is built in.
    pub plant: String,
    /// Scaled viscous friction coefficient.
    pub epsilon: f64,
    /// Lyapunov shaping weight.
    pub alpha: f64,
    /// Domain-exclusion parameter.
    pub eta_sq: f64,
    /// Number of randomly forced trajectories.
    pub n_trajectories: usize,
    /// Length of each data trajectory.
    pub t_final: f64,
    /// Sampling interval.
    pub tau: f64,
    /// RNG seed for data generation.
    pub seed: u64,
    /// Per-variable exponent caps of the observable dictionary phi.
    pub phi_caps: Vec<u32>,
    /// Per-variable exponent caps of the image dictionary psi.
    pub psi_caps: Vec<u32>,
    /// Total degree of the controller dictionary chi.
    pub chi_degree: u32,
    /// Synthesis objective.
    pub objective: SynthesisObjective,
    /// Decrease margin (0 = plain non-strict program).
    pub margin: f64,
    /// Multiplier degree overrides (defaults derived from the expression).
    pub sigma_degrees: Option<Vec<u32>>,
    pub rho_degrees: Option<Vec<u32>>,
    /// Half-degree override for the main Gram basis.
    pub gram_degree: Option<u32>,
    /// Enter each domain inequality with both orientations.
    pub two_sided_multipliers: bool,
    /// Retry once with raised multiplier degrees on infeasibility.
    pub escalate_degrees: bool,
    /// Closed-loop validation horizon, integrator step, initial condition.
    pub sim_t_final: f64,
    pub sim_step: f64,
    pub sim_theta0: f64,
    pub sim_theta_dot0: f64,
    /// Convergence threshold |theta mod 2pi| + |theta_dot| at the horizon.
    pub convergence_threshold: f64,
    /// Interior-point solver options.
    pub solver: SolveOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: 1,
            plant: "pendulum".into(),
            epsilon: 0.1,
            alpha: 100.0,
            eta_sq: 0.95,
            n_trajectories: 20,
            t_final: 20.0,
            tau: 0.01,
            seed: 1,
            phi_caps: vec![3, 1, 3],
            psi_caps: vec![4, 1, 4],
            chi_degree: 2,
            objective: SynthesisObjective::L1,
            margin: 0.0,
            sigma_degrees: None,
            rho_degrees: None,
            gram_degree: None,
            two_sided_multipliers: true,
            escalate_degrees: false,
            sim_t_final: 20.0,
            sim_step: 1e-4,
            sim_theta0: std::f64::consts::PI - 0.3,
            sim_theta_dot0: 0.0,
            convergence_threshold: 1e-2,
            solver: SolveOptions {
                // The synthesis SDP carries data-noise-scale entries; the
                // certificate checks downstream gate the solution quality,
                // so the duality gap may stop above the solver's generic
                // default without affecting them.
                tol_gap: 3e-6,
                ..SolveOptions::default()
            },
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.plant != "pendulum" {
            return Err(Error::InvalidInput(format!(
                "unknown plant `{}` (only `pendulum` is built in)",
                self.plant
            )));
        }
        self.pendulum_params().validate()?;
        if !(self.tau > 0.0) {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        if self.phi_caps.len() != 3 || self.psi_caps.len() != 3 {
            return Err(Error::InvalidInput(
                "dictionary caps must list three exponents (lifted state)".into(),
            ));
        }
        Ok(())
    }

    pub fn pendulum_params(&self) -> PendulumParams {
        PendulumParams {
            epsilon: self.epsilon,
            alpha: self.alpha,
            eta_sq: self.eta_sq,
        }
    }

    fn synthesis_options(&self) -> SynthesisOptions {
        SynthesisOptions {
            objective: self.objective,
            margin: self.margin,
            equilibrium: Some(vec![1.0, 0.0, 0.0]),
            basis_policy: BasisPolicy {
                caps: Some(vec![u32::MAX, 1, u32::MAX]),
                newton_prune: false,
            },
            sigma_degrees: self.sigma_degrees.clone(),
            rho_degrees: self.rho_degrees.clone(),
            gram_degree: self.gram_degree,
            two_sided_multipliers: self.two_sided_multipliers,
            escalate_degrees: self.escalate_degrees,
            solver: self.solver.clone(),
        }
    }

    /// Echo the effective configuration into an output directory.
    fn echo_into(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        self.save(out_dir.join("config.json"))
    }
}

/// Artifact paths produced by [`run_generate`].
#[derive(Debug, Clone)]
pub struct GenerateOutput {
    pub dataset_csv: PathBuf,
    pub dataset_meta: PathBuf,
    pub samples: usize,
}

/// Simulate randomly forced trajectories and write the snapshot dataset.
pub fn run_generate(config: &RunConfig, out_dir: impl AsRef<Path>) -> Result<GenerateOutput> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    config.echo_into(out_dir)?;
    let data = generate_pendulum_data(
        &config.pendulum_params(),
        config.n_trajectories,
        config.t_final,
        config.tau,
        config.seed,
    )?;
    let dataset_csv = out_dir.join("dataset.csv");
    let dataset_meta = out_dir.join("dataset.json");
    data.write_csv(&dataset_csv, &dataset_meta)?;
    Ok(GenerateOutput {
        dataset_csv,
        dataset_meta,
        samples: data.len(),
    })
}

/// Fit the Koopman model from a dataset on disk and write it as JSON.
pub fn run_fit(
    config: &RunConfig,
    dataset_csv: impl AsRef<Path>,
    dataset_meta: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    config.echo_into(out_dir)?;
    let data = SnapshotDataset::read_csv(dataset_csv, dataset_meta)?;
    let phi = crate::poly::build_dictionary(3, &config.phi_caps, None);
    let psi = crate::poly::build_dictionary(3, &config.psi_caps, None);
    let model = fit_koopman(&data, &phi, &psi)?;
    let path = out_dir.join("model.json");
    model.save_json(&path)?;
    Ok(path)
}

/// Artifacts produced by [`run_synthesize`].
#[derive(Debug, Clone)]
pub struct SynthesizeOutput {
    pub controller_json: PathBuf,
    pub report_txt: PathBuf,
    pub sdpa_file: Option<PathBuf>,
    pub controller: Controller,
}

/// Build the data-driven Lie decomposition of the pendulum CLF from a fitted
/// model.
pub fn pendulum_lie_from_model(config: &RunConfig, model: &KoopmanModel) -> Result<LieDecomposition> {
    let clf = pendulum_clf(config.alpha);
    if model.phi != clf.phi {
        return Err(Error::InvalidInput(
            "model phi dictionary does not match the pendulum CLF dictionary \
             (refit with phi caps [3, 1, 3])"
                .into(),
        ));
    }
    LieDecomposition::from_lie_model(&LieModel::new(model.clone()), &clf.coefficients)
}

/// Synthesize the controller from a fitted model and write it, its
/// certificate report, and optionally the compiled SDP in SDPA form.
pub fn run_synthesize(
    config: &RunConfig,
    model_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
    write_sdpa: bool,
) -> Result<SynthesizeOutput> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    config.echo_into(out_dir)?;
    let model = KoopmanModel::load_json(model_path)?;
    let lie = pendulum_lie_from_model(config, &model)?;
    let domain = pendulum_domain(config.eta_sq);
    let chi = pendulum_chi(config.chi_degree);
    let options = config.synthesis_options();

    let sdpa_file = if write_sdpa {
        let path = out_dir.join("synthesis.dat-s");
        std::fs::write(&path, export_sdpa(&compile_synthesis_program(&lie, config)?))?;
        Some(path)
    } else {
        None
    };

    let controller = synthesize(&lie, &domain, &chi, &options)?;
    let controller_json = out_dir.join("controller.json");
    controller.save_json(&controller_json)?;
    let report_txt = out_dir.join("certificate_report.txt");
    let mut report = String::new();
    report.push_str(&format!("objective: {:?}\n", controller.objective));
    report.push_str(&format!(
        "objective value: {}\n",
        controller.diagnostics.objective_value
    ));
    report.push_str(&format!("controller:\n{}\n", controller.pretty()));
    report.push_str(&controller.diagnostics.report.summary());
    std::fs::write(&report_txt, report)?;
    Ok(SynthesizeOutput {
        controller_json,
        report_txt,
        sdpa_file,
        controller,
    })
}

/// Compile the synthesis program for a model on disk and write it in SDPA
/// sparse form without solving.
pub fn run_export_sdpa(
    config: &RunConfig,
    model_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    config.echo_into(out_dir)?;
    let model = KoopmanModel::load_json(model_path)?;
    let lie = pendulum_lie_from_model(config, &model)?;
    let path = out_dir.join("synthesis.dat-s");
    std::fs::write(&path, export_sdpa(&compile_synthesis_program(&lie, config)?))?;
    Ok(path)
}

/// Compile the synthesis SOS program without solving it (the SDPA export
/// surface).
fn compile_synthesis_program(
    lie: &LieDecomposition,
    config: &RunConfig,
) -> Result<crate::sdp::SdpProblem> {
    let domain = pendulum_domain(config.eta_sq);
    let chi = pendulum_chi(config.chi_degree);
    let options = config.synthesis_options();
    let compiled = crate::synth::compile_synthesis(lie, &domain, &chi, &options)?;
    Ok(compiled.problem)
}

/// Result summary of a closed-loop validation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    /// |theta mod 2pi| + |theta_dot| at the end of the horizon.
    pub final_residual: f64,
    pub converged: bool,
    /// Largest increase of V between consecutive samples with both samples
    /// inside the domain.
    pub max_v_increase_inside: f64,
    /// Fraction of samples whose lifted state lies in the domain.
    pub domain_fraction: f64,
    pub blow_up: bool,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub trajectory_csv: PathBuf,
    pub summary_json: PathBuf,
    pub summary: SimulationSummary,
}

/// Roll out the closed loop from the configured initial condition, write the
/// trajectory CSV and a summary.
pub fn run_simulate(
    config: &RunConfig,
    controller_path: impl AsRef<Path>,
    out_dir: impl AsRef<Path>,
) -> Result<SimulateOutput> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    config.echo_into(out_dir)?;
    let controller = Controller::load_json(controller_path)?;
    let params = config.pendulum_params();
    let trajectory = closed_loop_simulate(
        &params,
        &controller,
        (config.sim_theta0, config.sim_theta_dot0),
        config.sim_t_final,
        config.sim_step,
    )?;
    let summary = summarize_trajectory(config, &trajectory);
    let trajectory_csv = out_dir.join("trajectory.csv");
    trajectory.write_csv(&trajectory_csv)?;
    let summary_json = out_dir.join("summary.json");
    std::fs::write(&summary_json, serde_json::to_string_pretty(&summary)?)?;
    Ok(SimulateOutput {
        trajectory_csv,
        summary_json,
        summary,
    })
}

/// Wrapped angle distance to the upright position plus speed.
pub fn upright_residual(theta: f64, theta_dot: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut wrapped = theta % two_pi;
    if wrapped > std::f64::consts::PI {
        wrapped -= two_pi;
    }
    if wrapped < -std::f64::consts::PI {
        wrapped += two_pi;
    }
    wrapped.abs() + theta_dot.abs()
}

pub fn summarize_trajectory(config: &RunConfig, trajectory: &TrajectoryRecord) -> SimulationSummary {
    let params = config.pendulum_params();
    let domain = pendulum_domain(config.eta_sq);
    let v = trajectory.v_values.as_ref();
    let mut max_v_increase_inside = 0.0f64;
    if let Some(v) = v {
        for k in 0..trajectory.len().saturating_sub(1) {
            let inside_now = domain
                .contains(&lift(&trajectory.states[k]))
                .unwrap_or(false);
            let inside_next = domain
                .contains(&lift(&trajectory.states[k + 1]))
                .unwrap_or(false);
            if inside_now && inside_next {
                max_v_increase_inside = max_v_increase_inside.max(v[k + 1] - v[k]);
            }
        }
    }
    let final_residual = trajectory
        .final_state()
        .map_or(f64::INFINITY, |s| upright_residual(s[0], s[1]));
    SimulationSummary {
        final_residual,
        converged: !trajectory.blow_up && final_residual < config.convergence_threshold,
        max_v_increase_inside,
        domain_fraction: domain_membership_fraction(trajectory, &params),
        blow_up: trajectory.blow_up,
    }
}

/// One verification check with its measured value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{}: {} (value {:.3e}, threshold {:.3e})\n",
                c.name,
                if c.pass { "pass" } else { "FAIL" },
                c.value,
                c.threshold
            ));
        }
        out.push_str(if self.pass { "VERIFY: pass\n" } else { "VERIFY: FAIL\n" });
        out
    }
}

/// Re-check a synthesized controller:
///  1. the stored certificate (Gram eigenvalues, identity residual);
///  2. consistency of the stored certified expression with the expression
///     rebuilt from the given model (or the exact plant) and the
///     controller's own coefficients;
///  3. sampled decrease: at domain samples, the rebuilt closed-loop Lie
///     derivative stays below the certificate's multiplier bound plus
///     `slack`.
///
/// `model`: `Some` re-checks against the data-driven Lie derivative, `None`
/// against the exact pendulum plant (the cross-path oracle). `slack` absorbs
/// the model-vs-plant coefficient disagreement; for same-model checks the
/// default `1e-6` is appropriate.
pub fn run_verify(
    config: &RunConfig,
    controller: &Controller,
    model: Option<&KoopmanModel>,
    slack: f64,
) -> Result<VerifyReport> {
    config.validate()?;
    let mut checks = Vec::new();

    // 1. Stored certificate integrity.
    let stored = reverify_stored(controller)?;
    let min_eig = stored
        .checks
        .iter()
        .map(|c| c.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let max_resid = stored
        .checks
        .iter()
        .map(|c| c.max_residual)
        .fold(0.0f64, f64::max);
    checks.push(VerifyCheck {
        name: "certificate Gram minimum eigenvalue".into(),
        value: min_eig,
        threshold: -crate::sos::PSD_TOLERANCE,
        pass: min_eig >= -crate::sos::PSD_TOLERANCE,
    });
    checks.push(VerifyCheck {
        name: "certificate identity residual".into(),
        value: max_resid,
        threshold: crate::sos::RECONSTRUCTION_TOLERANCE,
        pass: max_resid <= crate::sos::RECONSTRUCTION_TOLERANCE,
    });

    // 2. Expression consistency against the rebuilt closed loop. Exact when
    // rebuilt from the model the controller was synthesized on, so it
    // catches any tampering with the coefficients; rebuilt from the exact
    // plant the difference is dominated by fit-noise products with the
    // controller, which only the sampled check below can judge fairly.
    let lie = match model {
        Some(m) => pendulum_lie_from_model(config, m)?,
        None => LieDecomposition::from_plant(
            &pendulum_plant(config.epsilon),
            &pendulum_clf(config.alpha).v,
        )?,
    };
    let components = controller.component_polynomials()?;
    let mut closed = lie.drift.scale(-1.0);
    for (input, u) in lie.inputs.iter().zip(&components) {
        closed = closed.sub(&input.mul(u)?)?;
    }
    let scale = controller.diagnostics.expression_scale.max(1e-300);
    if model.is_some() {
        let stored_expr = controller
            .diagnostics
            .realized
            .first()
            .map(|r| r.expression.clone())
            .unwrap_or_else(|| Polynomial::zero(3));
        let rebuilt_scaled = closed.scale(1.0 / scale);
        let expr_diff = rebuilt_scaled.sub(&stored_expr)?.max_abs_coefficient();
        let expr_tol = slack.max(1e-9) * rebuilt_scaled.max_abs_coefficient().max(1.0);
        checks.push(VerifyCheck {
            name: "certified expression matches the rebuilt closed loop".into(),
            value: expr_diff,
            threshold: expr_tol,
            pass: expr_diff <= expr_tol,
        });
    }

    // 3. Sampled decrease against the certificate bound.
    let cert = controller
        .diagnostics
        .certificate
        .constraints
        .first()
        .ok_or_else(|| Error::InvalidInput("controller carries no certificate".into()))?;
    let realized_domain = controller
        .diagnostics
        .realized
        .first()
        .map(|r| r.domain.clone())
        .ok_or_else(|| Error::InvalidInput("controller carries no realized constraint".into()))?;
    let sigmas: Vec<Polynomial> = cert
        .sigma
        .iter()
        .map(|s| gram_polynomial(&s.basis, &s.gram))
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0usize;
    while samples < 1000 {
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let omega = rng.gen_range(-4.0..4.0);
        let x = lift(&[theta, omega]);
        if !pendulum_domain(config.eta_sq).contains(&x)? {
            continue;
        }
        samples += 1;
        // scale * sum_j A_j sigma_j bounds the closed-loop Lie derivative.
        let mut bound = 0.0;
        for (a, sigma) in realized_domain.inequalities().iter().zip(&sigmas) {
            bound += a.eval(&x)? * sigma.eval(&x)?;
        }
        let lv = -closed.eval(&x)?;
        worst = worst.max(lv - scale * bound);
    }
    let sample_tol = scale * (max_resid + 1e-6) + slack * closed.max_abs_coefficient().max(1.0);
    checks.push(VerifyCheck {
        name: "sampled Lie decrease within certificate bound".into(),
        value: worst,
        threshold: sample_tol,
        pass: worst <= sample_tol,
    });

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { checks, pass })
}

/// Cross-verify a controller by re-solving the fixed-controller feasibility
/// program against a given Lie decomposition.
pub fn run_cross_verify(
    config: &RunConfig,
    controller: &Controller,
    lie: &LieDecomposition,
) -> Result<bool> {
    let domain = pendulum_domain(config.eta_sq);
    let options = config.synthesis_options();
    Ok(cross_verify(lie, &domain, controller, &options)?.pass)
}

/// A deterministic, seeded batch of random SOS feasibility checks used by
/// the verification suites: polynomials built as sums of two squares must
/// compile and solve feasible with passing certificates.
pub fn random_sos_square(dimension: usize, degree_half: u32, rng: &mut impl Rng) -> Polynomial {
    let dict = crate::poly::build_dictionary(dimension, &vec![degree_half; dimension], Some(degree_half));
    let mut acc = Polynomial::zero(dimension);
    for _ in 0..2 {
        let coeffs: Vec<f64> = (0..dict.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let q = crate::poly::linear_combination(&coeffs, &dict).expect("matching lengths");
        acc = acc.add(&q.mul(&q).expect("same dimension")).expect("same dimension");
    }
    acc
}

/// Feasibility program for "p is SOS on R^d".
pub fn plain_sos_program(p: Polynomial) -> Result<SosProgram> {
    let domain = crate::poly::SemialgebraicSet::whole_space(p.dimension());
    let constraint = SosConstraint::putinar(
        "sos",
        crate::sos::DecisionPolynomial::from_constant(p),
        domain,
        &BasisPolicy::default(),
        None,
        None,
        None,
    )?;
    Ok(SosProgram {
        decisions: DecisionSpace::new(),
        constraints: vec![constraint],
        linear_constraints: vec![],
        objective: vec![],
    })
}
