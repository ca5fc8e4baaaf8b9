//! Command-line front end: batch synthesis and validation of polynomial
//! controllers from trajectory data.
//!
//! Exit codes: 0 success, 2 infeasible at the chosen degrees, 3 numerical or
//! verification failure, 4 bad input.

use clap::{Args, Parser, Subcommand};
use koopsyn::edmd::KoopmanModel;
use koopsyn::pipeline::{
    run_export_sdpa, run_fit, run_generate, run_simulate, run_synthesize, run_verify, RunConfig,
};
use koopsyn::synth::{Controller, SynthesisObjective};
use koopsyn::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Output directory override honored when --out is not given.
const OUT_DIR_ENV: &str = "KOOPSYN_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "koopsyn",
    about = "Synthesize stabilizing polynomial controllers from trajectory data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Configuration file (JSON); defaults are the pendulum experiment.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (also settable through KOOPSYN_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,

    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Lyapunov shaping weight override.
    #[arg(long)]
    alpha: Option<f64>,

    /// Domain-exclusion parameter override.
    #[arg(long, value_name = "ETA_SQ")]
    eta_sq: Option<f64>,

    /// Sampling interval override.
    #[arg(long)]
    tau: Option<f64>,

    /// Synthesis objective: l1, bound, or feas.
    #[arg(long)]
    objective: Option<String>,

    /// Decrease margin override.
    #[arg(long)]
    margin: Option<f64>,

    /// Controller dictionary degree override.
    #[arg(long, value_name = "DEGREE")]
    chi_degree: Option<u32>,

    /// Multiplier degree override (applied to every inequality multiplier).
    #[arg(long, value_name = "DEGREE")]
    multiplier_degree: Option<u32>,

    /// Main Gram basis half-degree override.
    #[arg(long, value_name = "DEGREE")]
    gram_degree: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate randomly forced trajectories and write the snapshot dataset.
    GenerateData {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit the control-affine Koopman model from a dataset.
    Fit {
        #[command(flatten)]
        common: CommonOpts,
        /// Dataset CSV written by generate-data.
        #[arg(long)]
        dataset: PathBuf,
        /// Sidecar metadata JSON (defaults to the CSV path with .json).
        #[arg(long)]
        dataset_meta: Option<PathBuf>,
    },
    /// Synthesize the controller from a fitted model.
    Synthesize {
        #[command(flatten)]
        common: CommonOpts,
        /// Fitted model JSON.
        #[arg(long)]
        model: PathBuf,
        /// Also write the compiled semidefinite program in SDPA sparse form.
        #[arg(long)]
        export_sdpa: bool,
    },
    /// Roll out the closed loop and summarize convergence.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Controller JSON.
        #[arg(long)]
        controller: PathBuf,
    },
    /// Re-check a controller's certificate and sampled decrease.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Controller JSON.
        #[arg(long)]
        controller: PathBuf,
        /// Fitted model JSON; when omitted the exact pendulum plant is the
        /// reference (cross-path verification).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Relative slack absorbing model-vs-plant coefficient disagreement.
        #[arg(long, default_value_t = 1e-6)]
        slack: f64,
    },
    /// Compile the synthesis program and write it in SDPA sparse form
    /// without solving.
    ExportSdpa {
        #[command(flatten)]
        common: CommonOpts,
        /// Fitted model JSON.
        #[arg(long)]
        model: PathBuf,
    },
}

fn effective_config(common: &CommonOpts) -> Result<RunConfig, Error> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(alpha) = common.alpha {
        config.alpha = alpha;
    }
    if let Some(eta_sq) = common.eta_sq {
        config.eta_sq = eta_sq;
    }
    if let Some(tau) = common.tau {
        config.tau = tau;
    }
    if let Some(objective) = &common.objective {
        config.objective = match objective.as_str() {
            "l1" => SynthesisObjective::L1,
            "bound" => SynthesisObjective::Bound,
            "feas" | "feasibility" => SynthesisObjective::Feasibility,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown objective `{other}` (expected l1, bound, or feas)"
                )))
            }
        };
    }
    if let Some(margin) = common.margin {
        config.margin = margin;
    }
    if let Some(chi_degree) = common.chi_degree {
        config.chi_degree = chi_degree;
    }
    if let Some(degree) = common.multiplier_degree {
        // One degree per inequality multiplier; the strip inequality is
        // entered twice when two-sided multipliers are enabled.
        let n = if config.two_sided_multipliers { 2 } else { 1 };
        config.sigma_degrees = Some(vec![degree; n]);
        config.rho_degrees = Some(vec![degree]);
    }
    if let Some(gram) = common.gram_degree {
        config.gram_degree = Some(gram);
    }
    config.validate()?;
    Ok(config)
}

fn out_dir(common: &CommonOpts) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("koopsyn-run"))
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Infeasible(_) | Error::Unbounded(_) => 2,
        Error::NumericalFailure(_) | Error::CertificateFailure(_) => 3,
        _ => 4,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::GenerateData { common } => {
            let config = effective_config(&common)?;
            let out = out_dir(&common);
            let result = run_generate(&config, &out)?;
            println!(
                "wrote {} snapshots to {}",
                result.samples,
                result.dataset_csv.display()
            );
            Ok(0)
        }
        Command::Fit {
            common,
            dataset,
            dataset_meta,
        } => {
            let config = effective_config(&common)?;
            let out = out_dir(&common);
            let meta = dataset_meta.unwrap_or_else(|| dataset.with_extension("json"));
            let model_path = run_fit(&config, &dataset, &meta, &out)?;
            let model = KoopmanModel::load_json(&model_path)?;
            println!(
                "fitted A ({}x{}) and {} input block(s); residual {:.3e}, rank {}; wrote {}",
                model.a.nrows(),
                model.a.ncols(),
                model.b.len(),
                model.fit_residual,
                model.svd_rank,
                model_path.display()
            );
            Ok(0)
        }
        Command::Synthesize {
            common,
            model,
            export_sdpa,
        } => {
            let config = effective_config(&common)?;
            let out = out_dir(&common);
            let result = run_synthesize(&config, &model, &out, export_sdpa)?;
            println!("controller:\n{}", result.controller.pretty());
            println!(
                "objective value {:.6}; certificate: {}",
                result.controller.diagnostics.objective_value,
                if result.controller.diagnostics.report.pass {
                    "pass"
                } else {
                    "FAIL"
                }
            );
            println!("wrote {}", result.controller_json.display());
            if let Some(p) = result.sdpa_file {
                println!("wrote {}", p.display());
            }
            if !result.controller.diagnostics.report.pass {
                return Err(Error::CertificateFailure(
                    "certificate verification failed".into(),
                ));
            }
            Ok(0)
        }
        Command::Simulate { common, controller } => {
            let config = effective_config(&common)?;
            let out = out_dir(&common);
            let result = run_simulate(&config, &controller, &out)?;
            let s = &result.summary;
            println!(
                "final residual {:.3e} ({}); max V increase inside domain {:.3e}; domain fraction {:.4}",
                s.final_residual,
                if s.converged { "converged" } else { "NOT converged" },
                s.max_v_increase_inside,
                s.domain_fraction
            );
            println!("wrote {}", result.trajectory_csv.display());
            if s.blow_up {
                return Err(Error::NumericalFailure(
                    "closed-loop trajectory blew up".into(),
                ));
            }
            Ok(0)
        }
        Command::Verify {
            common,
            controller,
            model,
            slack,
        } => {
            let config = effective_config(&common)?;
            let controller = Controller::load_json(&controller)?;
            let model = match model {
                Some(path) => Some(KoopmanModel::load_json(path)?),
                None => None,
            };
            let report = run_verify(&config, &controller, model.as_ref(), slack)?;
            print!("{}", report.summary());
            if report.pass {
                Ok(0)
            } else {
                Err(Error::CertificateFailure(
                    "controller verification failed".into(),
                ))
            }
        }
        Command::ExportSdpa { common, model } => {
            let config = effective_config(&common)?;
            let out = out_dir(&common);
            let path = run_export_sdpa(&config, &model, &out)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 4 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
