//! Controller synthesis: wire a Lie derivative (data-driven or exact
//! model-based) and a candidate control Lyapunov function into an SOS
//! program, solve it, and extract the polynomial state-feedback controller.

use crate::edmd::LieModel;
use crate::error::{Error, Result};
use crate::poly::{linear_combination, Dictionary, Monomial, Polynomial, SemialgebraicSet};
use crate::sdp::SolveOptions;
use crate::sos::{
    bound_objective, l1_objective, realize_constraints, solve_sos, verify_certificate,
    BasisPolicy, CertificateReport, DecisionPolynomial, DecisionSpace, RealizedConstraint,
    SosCertificate, SosConstraint, SosProgram,
};
use crate::util::dmatrix_rows;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// A control-affine polynomial plant `dx/dt = f(x) + sum_i g_i(x) u_i`,
/// used as the model-based oracle side of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub f: Vec<Polynomial>,
    pub g: Vec<Vec<Polynomial>>,
}

impl PlantModel {
    pub fn new(f: Vec<Polynomial>, g: Vec<Vec<Polynomial>>) -> Result<Self> {
        let d = f.len();
        if d == 0 {
            return Err(Error::InvalidInput("plant has no state".into()));
        }
        for p in &f {
            if p.dimension() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dimension(),
                });
            }
        }
        for gi in &g {
            if gi.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    got: gi.len(),
                });
            }
            for p in gi {
                if p.dimension() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: p.dimension(),
                    });
                }
            }
        }
        Ok(Self { f, g })
    }

    pub fn dimension(&self) -> usize {
        self.f.len()
    }

    pub fn input_dim(&self) -> usize {
        self.g.len()
    }

    /// Total degree of the right-hand side.
    pub fn degree(&self) -> u32 {
        self.f
            .iter()
            .chain(self.g.iter().flatten())
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }
}

/// Where a Lie decomposition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    DataDriven,
    ModelBased,
}

/// A Lie derivative of the candidate Lyapunov function, split into drift and
/// per-input parts: `L V = drift + sum_i inputs_i u_i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LieDecomposition {
    pub drift: Polynomial,
    pub inputs: Vec<Polynomial>,
    pub provenance: Provenance,
}

impl LieDecomposition {
    pub fn from_lie_model(model: &LieModel, c: &[f64]) -> Result<Self> {
        let (drift, inputs) = model.affine_decomposition(c)?;
        Ok(Self {
            drift,
            inputs,
            provenance: Provenance::DataDriven,
        })
    }

    pub fn from_plant(plant: &PlantModel, v: &Polynomial) -> Result<Self> {
        let (drift, inputs) = exact_lie_derivative(plant, v)?;
        Ok(Self {
            drift,
            inputs,
            provenance: Provenance::ModelBased,
        })
    }
}

/// Exact Lie derivative along the plant: `drift = <grad V, f>`,
/// `inputs_i = <grad V, g_i>`.
pub fn exact_lie_derivative(
    plant: &PlantModel,
    v: &Polynomial,
) -> Result<(Polynomial, Vec<Polynomial>)> {
    let d = plant.dimension();
    if v.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.dimension(),
        });
    }
    let grad = v.gradient();
    let mut drift = Polynomial::zero(d);
    for (dv, fi) in grad.iter().zip(&plant.f) {
        drift = drift.add(&dv.mul(fi)?)?;
    }
    let mut inputs = Vec::with_capacity(plant.g.len());
    for gi in &plant.g {
        let mut acc = Polynomial::zero(d);
        for (dv, gij) in grad.iter().zip(gi) {
            acc = acc.add(&dv.mul(gij)?)?;
        }
        inputs.push(acc);
    }
    Ok((drift, inputs))
}

/// Required degree of the image dictionary: the Lie derivative of a degree-k
/// observable along a degree-n right-hand side has degree `k - 1 + n`.
pub fn degree_check(v: &Polynomial, plant_degree: u32) -> u32 {
    v.degree().saturating_sub(1) + plant_degree
}

/// A candidate control Lyapunov function `V = <c, phi>` with its equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClfCandidate {
    pub phi: Dictionary,
    pub coefficients: Vec<f64>,
    pub v: Polynomial,
    pub equilibrium: Vec<f64>,
}

impl ClfCandidate {
    /// Builds the candidate and checks `V(x*) = 0` to 1e-9.
    pub fn new(phi: Dictionary, coefficients: Vec<f64>, equilibrium: Vec<f64>) -> Result<Self> {
        let v = linear_combination(&coefficients, &phi)?;
        if equilibrium.len() != phi.dimension() {
            return Err(Error::DimensionMismatch {
                expected: phi.dimension(),
                got: equilibrium.len(),
            });
        }
        let at_eq = v.eval(&equilibrium)?;
        if at_eq.abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "candidate Lyapunov function is {at_eq:.3e} at the equilibrium, expected 0"
            )));
        }
        Ok(Self {
            phi,
            coefficients,
            v,
            equilibrium,
        })
    }

    /// Spot-check positivity away from the equilibrium on caller-supplied
    /// domain samples. A necessary condition, not a proof.
    pub fn check_positivity<I>(&self, samples: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        for x in samples {
            let near_eq = x
                .iter()
                .zip(&self.equilibrium)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                < 1e-6;
            if near_eq {
                continue;
            }
            let value = self.v.eval(&x)?;
            if value <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "candidate Lyapunov function is {value:.3e} <= 0 at {x:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Objective used for the synthesis program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisObjective {
    Feasibility,
    L1,
    Bound,
}

/// Options for [`synthesize`].
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    pub objective: SynthesisObjective,
    /// Margin term `-margin * |x - x*|^2` added to the certified expression;
    /// zero keeps the plain non-strict program.
    pub margin: f64,
    /// Equilibrium, required when `margin > 0`.
    pub equilibrium: Option<Vec<f64>>,
    pub basis_policy: BasisPolicy,
    pub sigma_degrees: Option<Vec<u32>>,
    pub rho_degrees: Option<Vec<u32>>,
    pub gram_degree: Option<u32>,
    /// Enter each domain inequality with both orientations (`a_j` and
    /// `-a_j`), each carrying its own SOS multiplier. The pair acts as one
    /// sign-free multiplier of `a_j`, which is what makes the pendulum
    /// program feasible: with a one-sided multiplier the certificate demands
    /// a fixed sign for the closed-loop Lie derivative across the excluded
    /// strip, and no polynomial controller can deliver it.
    pub two_sided_multipliers: bool,
    /// Retry once with multiplier degrees raised by two when the program is
    /// infeasible at the requested degrees.
    pub escalate_degrees: bool,
    pub solver: SolveOptions,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            objective: SynthesisObjective::L1,
            margin: 0.0,
            equilibrium: None,
            basis_policy: BasisPolicy::default(),
            sigma_degrees: None,
            rho_degrees: None,
            gram_degree: None,
            two_sided_multipliers: false,
            escalate_degrees: false,
            solver: SolveOptions::default(),
        }
    }
}

/// Solver and certificate diagnostics attached to a synthesized controller.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthDiagnostics {
    pub objective_value: f64,
    /// Normalization factor applied to the decrease expression; the stored
    /// realized constraints and certificate are in these normalized units.
    pub expression_scale: f64,
    pub solver_iterations: usize,
    pub certificate: SosCertificate,
    pub report: CertificateReport,
    /// Constraints with the decision assignment substituted, kept so the
    /// certificate can be re-verified from the serialized controller alone.
    pub realized: Vec<RealizedConstraint>,
}

/// A polynomial state-feedback controller `u(x) = C chi(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Controller {
    pub chi: Dictionary,
    #[serde(with = "dmatrix_rows")]
    pub c: DMatrix<f64>,
    pub provenance: Provenance,
    pub objective: SynthesisObjective,
    pub diagnostics: SynthDiagnostics,
}

impl Controller {
    /// `u(x) = C chi(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let lifted = self.chi.eval(x)?;
        Ok((0..self.c.nrows())
            .map(|i| (0..self.c.ncols()).map(|k| self.c[(i, k)] * lifted[k]).sum())
            .collect())
    }

    /// Each input channel as a plain polynomial.
    pub fn component_polynomials(&self) -> Result<Vec<Polynomial>> {
        (0..self.c.nrows())
            .map(|i| {
                let row: Vec<f64> = (0..self.c.ncols()).map(|k| self.c[(i, k)]).collect();
                linear_combination(&row, &self.chi)
            })
            .collect()
    }

    /// Human-readable polynomial form, one line per input channel.
    pub fn pretty(&self) -> String {
        match self.component_polynomials() {
            Ok(polys) => polys
                .iter()
                .enumerate()
                .map(|(i, p)| format!("u{}(x) = {p}", i + 1))
                .collect::<Vec<_>>()
                .join("\n"),
            Err(_) => "<invalid controller>".into(),
        }
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let ctrl: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ctrl.c.nrows() == 0 || ctrl.c.ncols() != ctrl.chi.len() {
            return Err(Error::InvalidInput(
                "controller coefficient shape does not match its dictionary".into(),
            ));
        }
        Ok(ctrl)
    }
}

/// Build the decision expression
/// `-drift - sum_i inputs_i [C chi]_i - margin |x - x*|^2`
/// whose SOS certificate on the domain drives the synthesis.
fn decrease_expression(
    lie: &LieDecomposition,
    chi: &Dictionary,
    c_ids: &[Vec<crate::sos::DecisionId>],
    margin: f64,
    equilibrium: Option<&[f64]>,
) -> Result<DecisionPolynomial> {
    let d = lie.drift.dimension();
    let mut expr = DecisionPolynomial::from_constant(lie.drift.scale(-1.0));
    for (i, input) in lie.inputs.iter().enumerate() {
        for (k, mono) in chi.entries().iter().enumerate() {
            let coeff = input.mul_monomial(mono).scale(-1.0);
            expr = expr.add(&DecisionPolynomial::decision_term(c_ids[i][k], coeff))?;
        }
    }
    if margin > 0.0 {
        let x_star = equilibrium.ok_or_else(|| {
            Error::InvalidInput("margin > 0 requires the equilibrium point".into())
        })?;
        if x_star.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x_star.len(),
            });
        }
        let mut dist_sq = Polynomial::zero(d);
        for (j, &xs) in x_star.iter().enumerate() {
            let term = Polynomial::from_terms(
                d,
                [
                    (Monomial::new(square_exponents(d, j)), 1.0),
                    (Monomial::variable(d, j), -2.0 * xs),
                    (Monomial::one(d), xs * xs),
                ],
            );
            dist_sq = dist_sq.add(&term)?;
        }
        expr = expr.add(&DecisionPolynomial::from_constant(dist_sq.scale(-margin)))?;
    }
    Ok(expr)
}

fn square_exponents(d: usize, j: usize) -> Vec<u32> {
    let mut e = vec![0; d];
    e[j] = 2;
    e
}

/// Synthesize a polynomial controller over the dictionary `chi`. Builds the
/// Lie-decrease SOS constraint, attaches the requested objective, compiles,
/// solves, verifies the certificate, and fails loudly when verification does
/// not pass. Infeasibility at the chosen degrees is a distinct error from
/// numerical failure.
pub fn synthesize(
    lie: &LieDecomposition,
    domain: &SemialgebraicSet,
    chi: &Dictionary,
    options: &SynthesisOptions,
) -> Result<Controller> {
    let d = lie.drift.dimension();
    if domain.dimension() != d || chi.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: domain.dimension().min(chi.dimension()),
        });
    }
    for input in &lie.inputs {
        if input.dimension() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: input.dimension(),
            });
        }
    }

    let attempt = |sigma: Option<Vec<u32>>, rho: Option<Vec<u32>>| -> Result<SynthesisRun> {
        run_synthesis(lie, domain, chi, options, sigma, rho)
    };
    let first = attempt(options.sigma_degrees.clone(), options.rho_degrees.clone());
    let run = match first {
        Err(Error::Infeasible(msg)) if options.escalate_degrees => {
            let bump = |v: Option<Vec<u32>>, defaults: &[u32]| -> Vec<u32> {
                match v {
                    Some(v) => v.into_iter().map(|d| d + 2).collect(),
                    None => defaults.iter().map(|d| d + 2).collect(),
                }
            };
            // Recover the defaults the first attempt used so escalation is
            // one uniform step above them.
            let probe = SosConstraint::putinar(
                "probe",
                decrease_expression(
                    lie,
                    chi,
                    &decision_grid_ids(lie.inputs.len(), chi.len()),
                    options.margin,
                    options.equilibrium.as_deref(),
                )?,
                certificate_domain(domain, options.two_sided_multipliers)?,
                &options.basis_policy,
                options.sigma_degrees.clone(),
                options.rho_degrees.clone(),
                options.gram_degree,
            )?;
            attempt(
                Some(bump(options.sigma_degrees.clone(), &probe.sigma_degrees)),
                Some(bump(options.rho_degrees.clone(), &probe.rho_degrees)),
            )
            .map_err(|e| match e {
                Error::Infeasible(m2) => Error::Infeasible(format!(
                    "{msg}; still infeasible after one degree escalation: {m2}"
                )),
                other => other,
            })?
        }
        other => other?,
    };
    Ok(run.into_controller(lie.provenance, options.objective, chi))
}

/// Placeholder decision ids (0..m x 0..r) used only to probe default degrees.
fn decision_grid_ids(m: usize, r: usize) -> Vec<Vec<crate::sos::DecisionId>> {
    let mut space = DecisionSpace::new();
    (0..m)
        .map(|i| {
            (0..r)
                .map(|k| space.declare(format!("C[{},{}]", i + 1, k + 1)))
                .collect()
        })
        .collect()
}

struct SynthesisRun {
    c: DMatrix<f64>,
    diagnostics: SynthDiagnostics,
}

impl SynthesisRun {
    fn into_controller(
        self,
        provenance: Provenance,
        objective: SynthesisObjective,
        chi: &Dictionary,
    ) -> Controller {
        Controller {
            chi: chi.clone(),
            c: self.c,
            provenance,
            objective,
            diagnostics: self.diagnostics,
        }
    }
}

/// Domain description used inside the certificate: optionally each
/// inequality entered with both orientations.
fn certificate_domain(domain: &SemialgebraicSet, two_sided: bool) -> Result<SemialgebraicSet> {
    if !two_sided {
        return Ok(domain.clone());
    }
    let mut inequalities = Vec::with_capacity(2 * domain.inequalities().len());
    for a in domain.inequalities() {
        inequalities.push(a.clone());
        inequalities.push(a.scale(-1.0));
    }
    SemialgebraicSet::new(
        domain.dimension(),
        inequalities,
        domain.equalities().to_vec(),
    )
}

/// The assembled SOS program plus the decision ids of the controller
/// coefficients and the expression normalization factor.
struct SynthesisProgram {
    program: SosProgram,
    c_ids: Vec<Vec<crate::sos::DecisionId>>,
    scale: f64,
}

/// Compile the synthesis program without solving it; the export surface for
/// external conic solvers.
pub fn compile_synthesis(
    lie: &LieDecomposition,
    domain: &SemialgebraicSet,
    chi: &Dictionary,
    options: &SynthesisOptions,
) -> Result<crate::sos::CompiledProgram> {
    let assembled = build_program(
        lie,
        domain,
        chi,
        options,
        options.sigma_degrees.clone(),
        options.rho_degrees.clone(),
    )?;
    crate::sos::compile(&assembled.program)
}

fn build_program(
    lie: &LieDecomposition,
    domain: &SemialgebraicSet,
    chi: &Dictionary,
    options: &SynthesisOptions,
    sigma_degrees: Option<Vec<u32>>,
    rho_degrees: Option<Vec<u32>>,
) -> Result<SynthesisProgram> {
    let m = lie.inputs.len();
    let r = chi.len();
    let cert_domain = certificate_domain(domain, options.two_sided_multipliers)?;

    // The decrease constraint is homogeneous in the scale of V, and the
    // controller coefficients scale with the drift-to-input ratio. Solving
    // for C = scale * C' with the drift normalized to unit coefficient size
    // keeps both the compiled identity and the optimal variables O(1)
    // regardless of the Lyapunov weighting; the feasible controller set is
    // unchanged (exact variable substitution).
    let scale = lie
        .drift
        .max_abs_coefficient()
        .max(
            lie.inputs
                .iter()
                .map(Polynomial::max_abs_coefficient)
                .fold(0.0, f64::max),
        )
        .max(1.0);
    let lie = LieDecomposition {
        drift: lie.drift.scale(1.0 / scale),
        // inputs keep their size: the identity term is
        // (inputs_i / scale) * (scale * C') [C chi]_i = inputs_i [C' chi]_i.
        inputs: lie.inputs.clone(),
        provenance: lie.provenance,
    };
    let lie = &lie;

    let mut space = DecisionSpace::new();
    let c_ids: Vec<Vec<crate::sos::DecisionId>> = (0..m)
        .map(|i| {
            (0..r)
                .map(|k| space.declare(format!("C[{},{}]", i + 1, k + 1)))
                .collect()
        })
        .collect();

    let expression = decrease_expression(
        lie,
        chi,
        &c_ids,
        options.margin / scale,
        options.equilibrium.as_deref(),
    )?;
    let mut constraints = vec![SosConstraint::putinar(
        "lie_decrease",
        expression,
        cert_domain,
        &options.basis_policy,
        sigma_degrees.clone(),
        rho_degrees.clone(),
        options.gram_degree,
    )?];

    let mut linear_constraints = Vec::new();
    let mut objective = Vec::new();
    match options.objective {
        SynthesisObjective::Feasibility => {}
        SynthesisObjective::L1 => {
            let flat: Vec<_> = c_ids.iter().flatten().copied().collect();
            let (obj, lin) = l1_objective(&mut space, &flat);
            objective = obj;
            linear_constraints = lin;
        }
        SynthesisObjective::Bound => {
            let components: Vec<DecisionPolynomial> = (0..m)
                .map(|i| {
                    let mut u = DecisionPolynomial::zero(lie.drift.dimension());
                    for (k, mono) in chi.entries().iter().enumerate() {
                        u = u.add(&DecisionPolynomial::decision_term(
                            c_ids[i][k],
                            Polynomial::from_terms(lie.drift.dimension(), [(mono.clone(), 1.0)]),
                        ))?;
                    }
                    Ok(u)
                })
                .collect::<Result<_>>()?;
            let (obj, bound_constraints, _m_id) = bound_objective(
                &mut space,
                &components,
                domain,
                &options.basis_policy,
                None,
                None,
            )?;
            objective = obj;
            constraints.extend(bound_constraints);
        }
    }

    Ok(SynthesisProgram {
        program: SosProgram {
            decisions: space,
            constraints,
            linear_constraints,
            objective,
        },
        c_ids,
        scale,
    })
}

fn run_synthesis(
    lie: &LieDecomposition,
    domain: &SemialgebraicSet,
    chi: &Dictionary,
    options: &SynthesisOptions,
    sigma_degrees: Option<Vec<u32>>,
    rho_degrees: Option<Vec<u32>>,
) -> Result<SynthesisRun> {
    let m = lie.inputs.len();
    let r = chi.len();
    let SynthesisProgram {
        program,
        c_ids,
        scale,
    } = build_program(lie, domain, chi, options, sigma_degrees, rho_degrees)?;
    let out = solve_sos(&program, &options.solver)?;
    if !out.report.pass {
        return Err(Error::CertificateFailure(format!(
            "certificate verification failed after an optimal solve:\n{}",
            out.report.summary()
        )));
    }

    // Undo the decision-variable scaling: C = scale * C'.
    let mut c = DMatrix::zeros(m, r);
    for (i, row) in c_ids.iter().enumerate() {
        for (k, &id) in row.iter().enumerate() {
            c[(i, k)] = scale * out.certificate.value(id);
        }
    }
    let realized = realize_constraints(&program, &out.certificate)?;
    Ok(SynthesisRun {
        c,
        diagnostics: SynthDiagnostics {
            objective_value: if program.objective.is_empty() {
                0.0
            } else {
                scale * out.solution.objective
            },
            expression_scale: scale,
            solver_iterations: out.solution.iterations.len(),
            certificate: out.certificate,
            report: out.report,
            realized,
        },
    })
}

/// Re-check a fixed controller against a (possibly different) Lie
/// decomposition: substitute `u = C chi` into the decrease expression and
/// solve the resulting feasibility program at default degrees.
pub fn cross_verify(
    lie: &LieDecomposition,
    domain: &SemialgebraicSet,
    controller: &Controller,
    options: &SynthesisOptions,
) -> Result<CertificateReport> {
    let d = lie.drift.dimension();
    let components = controller.component_polynomials()?;
    if components.len() != lie.inputs.len() {
        return Err(Error::LengthMismatch {
            expected: lie.inputs.len(),
            got: components.len(),
        });
    }
    let mut closed = lie.drift.scale(-1.0);
    for (input, u) in lie.inputs.iter().zip(&components) {
        closed = closed.sub(&input.mul(u)?)?;
    }
    if options.margin > 0.0 {
        let x_star = options.equilibrium.as_deref().ok_or_else(|| {
            Error::InvalidInput("margin > 0 requires the equilibrium point".into())
        })?;
        let mut dist_sq = Polynomial::zero(d);
        for (j, &xs) in x_star.iter().enumerate() {
            dist_sq = dist_sq.add(&Polynomial::from_terms(
                d,
                [
                    (Monomial::new(square_exponents(d, j)), 1.0),
                    (Monomial::variable(d, j), -2.0 * xs),
                    (Monomial::one(d), xs * xs),
                ],
            ))?;
        }
        closed = closed.sub(&dist_sq.scale(options.margin))?;
    }
    // Positive rescaling of a fixed polynomial leaves SOS feasibility
    // unchanged and keeps the compiled identity well-conditioned.
    let norm = closed.max_abs_coefficient().max(1.0);
    let closed = closed.scale(1.0 / norm);
    let constraint = SosConstraint::putinar(
        "lie_decrease_fixed_controller",
        DecisionPolynomial::from_constant(closed),
        certificate_domain(domain, options.two_sided_multipliers)?,
        &options.basis_policy,
        options.sigma_degrees.clone(),
        options.rho_degrees.clone(),
        options.gram_degree,
    )?;
    let program = SosProgram {
        decisions: DecisionSpace::new(),
        constraints: vec![constraint],
        linear_constraints: Vec::new(),
        objective: Vec::new(),
    };
    let out = solve_sos(&program, &options.solver)?;
    Ok(out.report)
}

/// Re-verify a controller's stored certificate (Gram eigenvalues and the
/// identity residual) without re-solving.
pub fn reverify_stored(controller: &Controller) -> Result<CertificateReport> {
    verify_certificate(
        &controller.diagnostics.certificate,
        &controller.diagnostics.realized,
    )
}
