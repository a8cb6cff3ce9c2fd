//! Library side of the `hpl` batch front-end: configuration, report
//! writers, the five batch commands and the verification battery.

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

use std::path::Path;

use config::RunContext;
use report::{fmt_f, write_csv, Report, SummaryItem};

/// Runs the verification battery, writes `verify.csv` + `report.json`, and
/// returns overall success.
pub fn cmd_verify(ctx: &RunContext) -> Result<bool, String> {
    let options = verify::VerifyOptions { seed: ctx.seed, break_adjoint: ctx.break_adjoint };
    let results = verify::run_all(&options);

    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.name.to_string(),
                r.count.to_string(),
                fmt_f(r.worst),
                fmt_f(r.bound),
                r.pass.to_string(),
            ]
        })
        .collect();
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| e.to_string())?;
    write_csv(
        &ctx.out_dir.join("verify.csv"),
        &["property", "count", "worst", "bound", "pass"],
        &rows,
    )?;

    let summary: Vec<SummaryItem> = results
        .iter()
        .map(|r| SummaryItem {
            name: r.name.to_string(),
            value: fmt_f(r.worst),
            bound: Some(fmt_f(r.bound)),
            pass: r.pass,
        })
        .collect();
    let pass = Report::pass_of(&summary);
    Report {
        command: "verify".into(),
        fixture: ctx.name.clone(),
        band: ctx.band,
        grid_points: 0,
        pass,
        summary,
        outputs: vec!["verify.csv".into()],
    }
    .finish(&ctx.out_dir)?;
    Ok(pass)
}

/// Caps the rayon thread pool from `HPL_THREADS` (must run before any
/// parallel work; errors are ignored if the pool already exists).
pub fn configure_threads() {
    if let Ok(value) = std::env::var("HPL_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
}

/// Loads the config file if given, otherwise starts from defaults.
pub fn load_config(path: Option<&Path>) -> Result<config::FileConfig, String> {
    match path {
        Some(p) => config::FileConfig::load(p),
        None => Ok(config::FileConfig::default()),
    }
}
