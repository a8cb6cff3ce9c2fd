//! Acceptance suite: one test per published criterion, each printing a
//! pass/fail line. The property battery runs once (fixed seed) and is shared
//! across criteria; the determinism criterion drives the actual binary.
//!
//! Run with `cargo test -p hpl-cli --test acceptance -- --nocapture`.

use std::process::Command;
use std::sync::OnceLock;

use hpl_cli::verify::{run_all, PropertyResult, VerifyOptions};

const SEED: u64 = 0x5eed_0001;

fn battery() -> &'static [PropertyResult] {
    static RESULTS: OnceLock<Vec<PropertyResult>> = OnceLock::new();
    RESULTS.get_or_init(|| run_all(&VerifyOptions { seed: SEED, break_adjoint: false }))
}

fn property(name: &str) -> &'static PropertyResult {
    battery()
        .iter()
        .find(|r| r.name == name)
        .unwrap_or_else(|| panic!("battery lacks property `{name}`"))
}

fn assert_criterion(number: u32, label: &str, names: &[&str]) {
    let mut pass = true;
    let mut details = Vec::new();
    for name in names {
        let r = property(name);
        pass &= r.pass;
        details.push(format!("{}={:.3e}(≤{:.1e})", r.name, r.worst, r.bound));
    }
    println!(
        "criterion {number:>2} ({label}): {} — {}",
        if pass { "PASS" } else { "FAIL" },
        details.join(", ")
    );
    assert!(pass, "criterion {number} failed: {}", details.join(", "));
}

#[test]
fn criterion_01_operator_identities() {
    assert_criterion(
        1,
        "operator identities",
        &[
            "dbar_squared_zero",
            "partial_squared_zero",
            "laplacian_green_identity",
            "kahler_laplacian_equality",
            "adjointness_dbar",
            "adjointness_partial",
        ],
    );
}

#[test]
fn criterion_02_quasi_isometry() {
    assert_criterion(
        2,
        "quasi-isometry on 500 forms",
        &["quasi_isometry_identity", "t_operator_norm_bound"],
    );
    assert_eq!(property("quasi_isometry_identity").count, 500);
}

#[test]
fn criterion_03_conjugation_formula() {
    assert_criterion(3, "conjugation formula", &["conjugation_formula"]);
    assert_eq!(property("conjugation_formula").count, 50);
}

#[test]
fn criterion_04_extension_solver() {
    assert_criterion(
        4,
        "extension solver certificates",
        &[
            "solver_fixed_point",
            "solver_obstructions",
            "solver_d_closed_minus_truncation",
            "solver_neumann_agreement",
        ],
    );
    assert_eq!(property("solver_fixed_point").count, 50);
}

#[test]
fn criterion_05_coincidence() {
    assert_criterion(
        5,
        "section coincidence",
        &[
            "coincidence_elliptic",
            "elliptic_first_block_is_parameter",
            "coincidence_abelian_diagonal",
        ],
    );
    assert_eq!(property("coincidence_elliptic").count, 20);
    assert_eq!(property("coincidence_abelian_diagonal").count, 20);
}

#[test]
fn criterion_06_block_derivative_relation() {
    assert_criterion(
        6,
        "block derivative relation",
        &["derivative_relation", "derivative_relation_second_order"],
    );
    assert_eq!(property("derivative_relation").count, 10);
}

#[test]
fn criterion_07_orbit_containment() {
    assert_criterion(
        7,
        "orbit containment",
        &["orbit_containment", "synthetic_frame_fails_at_block_zero"],
    );
}

#[test]
fn criterion_08_affine_structure() {
    assert_criterion(
        8,
        "affine Jacobian ranks",
        &["affine_rank_full_family", "affine_rank_degenerate_family"],
    );
    assert_eq!(property("affine_rank_full_family").count, 10);
}

#[test]
fn criterion_09_oracle_equivalence() {
    assert_criterion(
        9,
        "oracle equivalence",
        &["block_lu_criterion_equivalence", "exp_contraction_wedge_oracle"],
    );
    assert_eq!(property("block_lu_criterion_equivalence").count, 1000);
}

#[test]
fn criterion_10_determinism() {
    let dir = std::env::temp_dir().join(format!("hpl-acceptance-{}", std::process::id()));
    let config_path = dir.join("config.json");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(&config_path, r#"{"preset": "elliptic"}"#).unwrap();

    let run = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_hpl"))
            .args([
                "verify",
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                dir.join(out).to_str().unwrap(),
            ])
            .stdout(std::process::Stdio::null())
            .status()
            .expect("binary runs");
        status
    };
    let status_a = run("a");
    let status_b = run("b");
    let report_a = std::fs::read(dir.join("a/report.json")).unwrap();
    let report_b = std::fs::read(dir.join("b/report.json")).unwrap();
    let csv_a = std::fs::read(dir.join("a/verify.csv")).unwrap();
    let csv_b = std::fs::read(dir.join("b/verify.csv")).unwrap();

    let pass = status_a.success() && status_b.success() && report_a == report_b && csv_a == csv_b;
    println!(
        "criterion 10 (determinism): {} — exit codes 0/0: {}, byte-identical report+csv: {}",
        if pass { "PASS" } else { "FAIL" },
        status_a.success() && status_b.success(),
        report_a == report_b && csv_a == csv_b
    );
    std::fs::remove_dir_all(&dir).ok();
    assert!(pass);
}
