//! End-to-end verification surface: re-checking synthesized controllers
//! against the fitted model and against the exact plant, and catching
//! tampered coefficients.

use koopsyn::edmd::KoopmanModel;
use koopsyn::pipeline::{
    run_fit, run_generate, run_synthesize, run_verify, RunConfig,
};
use koopsyn::synth::Controller;
use once_cell::sync::Lazy;
use std::path::PathBuf;

struct Artifacts {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    config: RunConfig,
    model_path: PathBuf,
    controller_path: PathBuf,
}

static ARTIFACTS: Lazy<Artifacts> = Lazy::new(|| {
    let config = RunConfig::default();
    let dir = tempfile::tempdir().expect("temp dir");
    let out = dir.path().join("run");
    let generated = run_generate(&config, &out).expect("generate");
    let model_path = run_fit(&config, &generated.dataset_csv, &generated.dataset_meta, &out)
        .expect("fit");
    let synth = run_synthesize(&config, &model_path, &out, true).expect("synthesize");
    assert!(synth.sdpa_file.is_some(), "SDPA export requested");
    Artifacts {
        dir,
        config,
        model_path,
        controller_path: synth.controller_json,
    }
});

#[test]
fn verify_against_own_model_passes() {
    let a = &*ARTIFACTS;
    let controller = Controller::load_json(&a.controller_path).unwrap();
    let model = KoopmanModel::load_json(&a.model_path).unwrap();
    let report = run_verify(&a.config, &controller, Some(&model), 1e-6).unwrap();
    assert!(report.pass, "report:\n{}", report.summary());
}

#[test]
fn verify_against_exact_plant_with_model_slack() {
    // Cross-path check: the fitted Lie coefficients agree with the exact
    // plant to a few percent, so the certificate transfers within that
    // slack.
    let a = &*ARTIFACTS;
    let controller = Controller::load_json(&a.controller_path).unwrap();
    let report = run_verify(&a.config, &controller, None, 0.05).unwrap();
    assert!(report.pass, "report:\n{}", report.summary());
}

#[test]
fn corrupted_controller_fails_verification() {
    let a = &*ARTIFACTS;
    let mut controller = Controller::load_json(&a.controller_path).unwrap();
    // Flip the sign of the largest coefficient.
    let (mut imax, mut kmax, mut best) = (0, 0, 0.0f64);
    for i in 0..controller.c.nrows() {
        for k in 0..controller.c.ncols() {
            if controller.c[(i, k)].abs() > best {
                best = controller.c[(i, k)].abs();
                imax = i;
                kmax = k;
            }
        }
    }
    controller.c[(imax, kmax)] = -controller.c[(imax, kmax)];
    let model = KoopmanModel::load_json(&a.model_path).unwrap();
    let report = run_verify(&a.config, &controller, Some(&model), 1e-6).unwrap();
    assert!(
        !report.pass,
        "tampered controller must fail:\n{}",
        report.summary()
    );
}

#[test]
fn exported_sdp_round_trips_by_value() {
    // The synthesis SDP written next to the controller re-imports to an
    // equivalent problem (identical block structure and row count).
    let a = &*ARTIFACTS;
    let path = a.dir.path().join("run").join("synthesis.dat-s");
    let text = std::fs::read_to_string(path).unwrap();
    let problem = koopsyn::sdp::import_sdpa(&text).unwrap();
    let back = koopsyn::sdp::export_sdpa(&problem);
    let reimported = koopsyn::sdp::import_sdpa(&back).unwrap();
    assert_eq!(problem.psd_blocks, reimported.psd_blocks);
    assert_eq!(problem.equalities.len(), reimported.equalities.len());
    assert_eq!(problem.nonneg_vars, reimported.nonneg_vars);
}
