//! The batch subcommands: check, extend, periods, compare, affine.

use rayon::prelude::*;

use hpl_core::hodge::{
    check_first_bilinear_relation, check_second_bilinear_relation, group_membership, HodgeFrame,
    Polarization, RealStructure,
};
use hpl_core::period::{
    affine_jacobian_rank, affine_map, compare_sections, derivative_relation_residual,
    oracle_frame, oracle_period, orbit_check_frame, LU_TOL,
};
use hpl_core::solver::{solve_extension, ExtensionProblem};
use hpl_core::{C64, CMatrix, Error};

use crate::config::RunContext;
use crate::report::{fmt_f, write_csv, Report, SummaryItem};

fn t_header(n: usize) -> Vec<String> {
    let mut out = vec!["point".to_string()];
    for mu in 0..n {
        out.push(format!("t{mu}_re"));
        out.push(format!("t{mu}_im"));
    }
    out
}

fn t_columns(index: usize, t: &[C64]) -> Vec<String> {
    let mut out = vec![index.to_string()];
    for z in t {
        out.push(fmt_f(z.re));
        out.push(fmt_f(z.im));
    }
    out
}

fn error_status(err: &Error) -> String {
    match err {
        Error::ContractionViolation { .. } => "error:contraction-violation".into(),
        Error::NonConvergence { .. } => "error:non-convergence".into(),
        Error::NotInOrbit { block } => format!("error:not-in-orbit:{block}"),
        Error::InvalidProblem(_) => "error:invalid-problem".into(),
        Error::UnsupportedOracle(_) => "error:unsupported-oracle".into(),
        Error::StepOutsideRadius(_) => "error:step-outside-radius".into(),
        _ => "error".into(),
    }
}

/// Hodge–Riemann relation checks on the fixture's base-point frame and
/// polarization.
pub fn cmd_check(ctx: &RunContext) -> Result<bool, String> {
    let basis = ctx.family.basis();
    let hodge_type = basis.hodge_type().clone();
    let weight = hodge_type.weight();
    let q_matrix = basis.polarization_matrix().map_err(|e| e.to_string())? * ctx.polarization_scale;
    let q = Polarization::for_weight(q_matrix, weight, 1e-9).map_err(|e| e.to_string())?;
    let m = hodge_type.dim();
    let frame =
        HodgeFrame::new(CMatrix::identity(m, m), hodge_type).map_err(|e| e.to_string())?;
    let conj = RealStructure::new(basis.real_structure().map_err(|e| e.to_string())?, 1e-9)
        .map_err(|e| e.to_string())?;

    let first = check_first_bilinear_relation(&frame, &q, 1e-9).map_err(|e| e.to_string())?;
    let second =
        check_second_bilinear_relation(&frame, &q, &conj, 1e-9).map_err(|e| e.to_string())?;
    let identity_isometry =
        group_membership(&CMatrix::identity(m, m), &q, 1e-12).map_err(|e| e.to_string())?;

    let rows = vec![
        vec!["first_bilinear_relation".into(), first.to_string()],
        vec!["second_bilinear_relation".into(), second.to_string()],
        vec!["identity_in_isometry_group".into(), identity_isometry.to_string()],
    ];
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| e.to_string())?;
    write_csv(&ctx.out_dir.join("check.csv"), &["relation", "holds"], &rows)?;

    let summary = vec![
        SummaryItem::flag("first_bilinear_relation", first),
        SummaryItem::flag("second_bilinear_relation", second),
        SummaryItem::flag("identity_in_isometry_group", identity_isometry),
    ];
    let pass = Report::pass_of(&summary);
    Report {
        command: "check".into(),
        fixture: ctx.name.clone(),
        band: ctx.band,
        grid_points: 0,
        pass,
        summary,
        outputs: vec!["check.csv".into()],
    }
    .finish(&ctx.out_dir)?;
    Ok(pass)
}

/// Extension solver over the grid, one row per (point, basis seed).
pub fn cmd_extend(ctx: &RunContext) -> Result<bool, String> {
    let basis = ctx.family.basis();
    let weight = basis.hodge_type().weight();
    let n = ctx.family.parameters();

    let per_point: Vec<Vec<Vec<String>>> = ctx
        .grid
        .par_iter()
        .enumerate()
        .map(|(index, t)| {
            let mut rows = Vec::new();
            let phi = match ctx.family.eval(t) {
                Ok(phi) => phi,
                Err(e) => {
                    let mut row = t_columns(index, t);
                    row.extend(["-".into(), "-".into(), error_status(&e)]);
                    row.extend(std::iter::repeat_n(String::new(), 6));
                    return vec![row];
                }
            };
            for alpha in 0..=weight {
                for (r, seed_const) in basis.block(alpha).iter().enumerate() {
                    let mut row = t_columns(index, t);
                    row.push(alpha.to_string());
                    row.push(r.to_string());
                    let seed = match seed_const.to_fourier(basis.geometry(), 0) {
                        Ok(seed) => seed,
                        Err(e) => {
                            row.push(error_status(&e));
                            row.extend(std::iter::repeat_n(String::new(), 6));
                            rows.push(row);
                            continue;
                        }
                    };
                    match ExtensionProblem::new(&seed, &phi, ctx.band, ctx.settings)
                        .and_then(|problem| solve_extension(&problem))
                    {
                        Ok(sol) => {
                            row.push("ok".into());
                            row.push(sol.iterations.to_string());
                            row.push(fmt_f(sol.fixed_point_residual));
                            row.push(fmt_f(sol.obstruction_residual_partial));
                            row.push(fmt_f(sol.obstruction_residual_dbar));
                            row.push(fmt_f(sol.d_closed_residual));
                            row.push(fmt_f(sol.truncation_residual));
                        }
                        Err(e) => {
                            row.push(error_status(&e));
                            row.extend(std::iter::repeat_n(String::new(), 6));
                        }
                    }
                    rows.push(row);
                }
            }
            rows
        })
        .collect();

    let mut header: Vec<String> = t_header(n);
    header.extend(
        [
            "block",
            "element",
            "status",
            "iterations",
            "fixed_point",
            "obstruction_partial",
            "obstruction_dbar",
            "d_closed",
            "truncation",
        ]
        .map(String::from),
    );
    let rows: Vec<Vec<String>> = per_point.into_iter().flatten().collect();
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| e.to_string())?;
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&ctx.out_dir.join("extend.csv"), &header_refs, &rows)?;

    // Residual contract over the ok rows.
    let mut worst_fp = 0.0f64;
    let mut worst_certified = 0.0f64;
    let mut errors = 0usize;
    for row in &rows {
        let status = &row[2 * n + 3];
        if status != "ok" {
            errors += 1;
            continue;
        }
        let fp: f64 = row[2 * n + 5].parse().unwrap_or(f64::NAN);
        let op: f64 = row[2 * n + 6].parse().unwrap_or(f64::NAN);
        let od: f64 = row[2 * n + 7].parse().unwrap_or(f64::NAN);
        let dc: f64 = row[2 * n + 8].parse().unwrap_or(f64::NAN);
        let tr: f64 = row[2 * n + 9].parse().unwrap_or(f64::NAN);
        worst_fp = worst_fp.max(fp);
        let allowance = 10.0 * ctx.settings.tolerance + 2.0 * tr;
        worst_certified = worst_certified.max(op - allowance).max(od - allowance).max(dc - allowance);
    }
    let summary = vec![
        SummaryItem::checked("max_fixed_point_residual", worst_fp, ctx.settings.tolerance),
        SummaryItem::checked("max_residual_over_certificate", worst_certified, 0.0),
        SummaryItem::info("error_rows", errors.to_string()),
    ];
    let pass = Report::pass_of(&summary);
    Report {
        command: "extend".into(),
        fixture: ctx.name.clone(),
        band: ctx.band,
        grid_points: ctx.grid.len(),
        pass,
        summary,
        outputs: vec!["extend.csv".into()],
    }
    .finish(&ctx.out_dir)?;
    Ok(pass)
}

/// Period matrices over the grid: CSV of the strictly-upper blocks, plus the
/// orbit diagnostics of every oracle frame.
pub fn cmd_periods(ctx: &RunContext) -> Result<bool, String> {
    let n = ctx.family.parameters();
    let weight = ctx.family.hodge_type().weight();

    struct PointOut {
        rows: Vec<Vec<String>>,
        failure_inside: bool,
        min_det: f64,
    }

    let outputs: Vec<PointOut> = ctx
        .grid
        .par_iter()
        .enumerate()
        .map(|(index, t)| {
            let inside = ctx.family.inside_radius(t);
            match oracle_frame(&ctx.family, t) {
                Ok(frame) => {
                    let check = orbit_check_frame(&frame, LU_TOL);
                    let mut rows = Vec::new();
                    if check.lu_ok {
                        let pp = oracle_period(&ctx.family, t).expect("factorization verified");
                        for p in 0..=weight {
                            for q in (p + 1)..=weight {
                                let block = pp.block(p, q);
                                for r in 0..block.nrows() {
                                    for c in 0..block.ncols() {
                                        let mut row = t_columns(index, t);
                                        row.push(p.to_string());
                                        row.push(q.to_string());
                                        row.push(r.to_string());
                                        row.push(c.to_string());
                                        row.push(fmt_f(block[(r, c)].re));
                                        row.push(fmt_f(block[(r, c)].im));
                                        rows.push(row);
                                    }
                                }
                            }
                        }
                    }
                    PointOut {
                        rows,
                        failure_inside: inside && !check.lu_ok,
                        min_det: check.min_leading_determinant,
                    }
                }
                Err(_) => PointOut { rows: Vec::new(), failure_inside: inside, min_det: 0.0 },
            }
        })
        .collect();

    let mut header: Vec<String> = t_header(n);
    header.extend(["p", "q", "row", "col", "re", "im"].map(String::from));
    let rows: Vec<Vec<String>> = outputs.iter().flat_map(|o| o.rows.clone()).collect();
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| e.to_string())?;
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&ctx.out_dir.join("periods.csv"), &header_refs, &rows)?;

    let failures = outputs.iter().filter(|o| o.failure_inside).count();
    let min_det = outputs.iter().map(|o| o.min_det).fold(f64::INFINITY, f64::min);
    let summary = vec![
        SummaryItem::flag("no_orbit_failures_inside_radius", failures == 0),
        SummaryItem::info("min_leading_determinant", fmt_f(min_det)),
    ];
    let pass = Report::pass_of(&summary);
    Report {
        command: "periods".into(),
        fixture: ctx.name.clone(),
        band: ctx.band,
        grid_points: ctx.grid.len(),
        pass,
        summary,
        outputs: vec!["periods.csv".into()],
    }
    .finish(&ctx.out_dir)?;
    Ok(pass)
}

/// Section-table coincidence and the block derivative relation over the
/// grid. Emits the tables themselves (`sections.csv`, one row per table row
/// per point) next to the residual summary (`compare.csv`).
pub fn cmd_compare(ctx: &RunContext) -> Result<bool, String> {
    let n = ctx.family.parameters();
    let weight = ctx.family.hodge_type().weight();
    let constant_family = ctx.family.is_constant();

    let results: Vec<(Vec<String>, Vec<Vec<String>>, Option<f64>)> = ctx
        .grid
        .par_iter()
        .enumerate()
        .map(|(index, t)| {
            let mut row = t_columns(index, t);
            let mut table_rows: Vec<Vec<String>> = Vec::new();
            let diff = match compare_sections(&ctx.family, t, ctx.band, ctx.settings) {
                Ok(diff) => {
                    row.push(fmt_f(diff));
                    Some(diff)
                }
                Err(e) => {
                    row.push(error_status(&e));
                    None
                }
            };
            let tables = [
                oracle_period(&ctx.family, t).map(|pp| {
                    hpl_core::period::lie_sections(&pp, ctx.family.hodge_type())
                }),
                hpl_core::period::deformation_sections(&ctx.family, t, ctx.band, ctx.settings),
            ];
            for table in tables.into_iter().flatten() {
                let provenance = match table.provenance() {
                    hpl_core::period::Provenance::Lie => "lie",
                    hpl_core::period::Provenance::Deformation => "deformation",
                };
                let partition = ctx.family.hodge_type().partition();
                for p in 0..partition.groups() {
                    let rows = table.rows(p);
                    for r in 0..rows.nrows() {
                        let mut out = t_columns(index, t);
                        out.push(provenance.into());
                        out.push(p.to_string());
                        out.push(r.to_string());
                        for c in 0..rows.ncols() {
                            out.push(fmt_f(rows[(r, c)].re));
                            out.push(fmt_f(rows[(r, c)].im));
                        }
                        table_rows.push(out);
                    }
                }
            }
            for mu in 0..n {
                if weight < 2 {
                    row.push(String::new());
                    row.push(String::new());
                    continue;
                }
                match (
                    derivative_relation_residual(&ctx.family, t, mu, ctx.fd_step),
                    derivative_relation_residual(&ctx.family, t, mu, ctx.fd_step / 2.0),
                ) {
                    (Ok(a), Ok(b)) => {
                        row.push(fmt_f(a));
                        row.push(fmt_f(b));
                    }
                    _ => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            (row, table_rows, diff)
        })
        .collect();

    let mut header: Vec<String> = t_header(n);
    header.push("section_diff".into());
    for mu in 0..n {
        header.push(format!("derivative_residual_h_mu{mu}"));
        header.push(format!("derivative_residual_h2_mu{mu}"));
    }
    let rows: Vec<Vec<String>> = results.iter().map(|(row, _, _)| row.clone()).collect();
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| e.to_string())?;
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&ctx.out_dir.join("compare.csv"), &header_refs, &rows)?;

    let m = ctx.family.hodge_type().dim();
    let mut sections_header: Vec<String> = t_header(n);
    sections_header.extend(["provenance", "p", "row"].map(String::from));
    for c in 0..m {
        sections_header.push(format!("c{c}_re"));
        sections_header.push(format!("c{c}_im"));
    }
    let section_rows: Vec<Vec<String>> =
        results.iter().flat_map(|(_, t, _)| t.clone()).collect();
    let sections_refs: Vec<&str> = sections_header.iter().map(String::as_str).collect();
    write_csv(&ctx.out_dir.join("sections.csv"), &sections_refs, &section_rows)?;

    let worst = results.iter().filter_map(|(_, _, d)| *d).fold(0.0f64, f64::max);
    let summary = if constant_family {
        vec![SummaryItem::checked("max_section_difference", worst, 1e-6)]
    } else {
        // advisory for non-constant families: the oracle is exact only for
        // constant coefficients
        vec![SummaryItem::info("max_section_difference", fmt_f(worst))]
    };
    let pass = Report::pass_of(&summary);
    Report {
        command: "compare".into(),
        fixture: ctx.name.clone(),
        band: ctx.band,
        grid_points: ctx.grid.len(),
        pass,
        summary,
        outputs: vec!["compare.csv".into(), "sections.csv".into()],
    }
    .finish(&ctx.out_dir)?;
    Ok(pass)
}

/// Affine map values and Jacobian ranks over the grid.
pub fn cmd_affine(ctx: &RunContext) -> Result<bool, String> {
    let n = ctx.family.parameters();

    let results: Vec<(Vec<String>, Option<usize>)> = ctx
        .grid
        .par_iter()
        .enumerate()
        .map(|(index, t)| {
            let mut row = t_columns(index, t);
            match (affine_map(&ctx.family, t), affine_jacobian_rank(&ctx.family, t, ctx.fd_step)) {
                (Ok(psi), Ok(rank)) => {
                    row.push(rank.to_string());
                    for z in &psi {
                        row.push(fmt_f(z.re));
                        row.push(fmt_f(z.im));
                    }
                    (row, Some(rank))
                }
                (Err(e), _) | (_, Err(e)) => {
                    row.push(error_status(&e));
                    (row, None)
                }
            }
        })
        .collect();

    let width = lie_width(ctx);
    let mut header: Vec<String> = t_header(n);
    header.push("jacobian_rank".into());
    for c in 0..width {
        header.push(format!("psi{c}_re"));
        header.push(format!("psi{c}_im"));
    }
    let rows: Vec<Vec<String>> = results.iter().map(|(row, _)| row.clone()).collect();
    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| e.to_string())?;
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&ctx.out_dir.join("affine.csv"), &header_refs, &rows)?;

    let ranks: Vec<usize> = results.iter().filter_map(|(_, r)| *r).collect();
    let min_rank = ranks.iter().copied().min().unwrap_or(0);
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let summary = vec![
        SummaryItem::info("min_jacobian_rank", min_rank.to_string()),
        SummaryItem::info("max_jacobian_rank", max_rank.to_string()),
        SummaryItem::flag("all_points_evaluated", ranks.len() == ctx.grid.len()),
    ];
    let pass = Report::pass_of(&summary);
    Report {
        command: "affine".into(),
        fixture: ctx.name.clone(),
        band: ctx.band,
        grid_points: ctx.grid.len(),
        pass,
        summary,
        outputs: vec!["affine.csv".into()],
    }
    .finish(&ctx.out_dir)?;
    Ok(pass)
}

/// Width of the `Φ^{(0,1)}` block (the affine map's target dimension).
fn lie_width(ctx: &RunContext) -> usize {
    let ht = ctx.family.hodge_type();
    ht.hodge_numbers()[0] * ht.hodge_numbers().get(1).copied().unwrap_or(0)
}

/// The canonical synthetic out-of-orbit frame (a block swap whose leading
/// minor vanishes), shared by the orbit reports and tests.
pub fn synthetic_counterexample() -> hpl_core::hodge::BlockMatrix {
    let partition = hpl_core::hodge::BlockPartition::from_group_sizes(&[1, 1]);
    let swap = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    hpl_core::hodge::BlockMatrix::new(swap, partition).expect("square frame")
}
