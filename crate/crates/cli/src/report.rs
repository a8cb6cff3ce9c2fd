//! Deterministic machine-readable outputs: 17-significant-digit lowercase
//! scientific floats, fixed row order, no timestamps.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use hpl_core::C64;

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_c(z: C64) -> (String, String) {
    (fmt_f(z.re), fmt_f(z.im))
}

/// Writes a CSV file with a header and pre-formatted rows.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), String> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| format!("cannot write {path:?}: {e}"))
}

/// Summary block common to every command.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub fixture: String,
    pub band: u32,
    pub grid_points: usize,
    pub pass: bool,
    pub summary: Vec<SummaryItem>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SummaryItem {
    pub name: String,
    pub value: String,
    pub bound: Option<String>,
    pub pass: bool,
}

impl SummaryItem {
    pub fn checked(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value: fmt_f(value),
            bound: Some(fmt_f(bound)),
            pass: value <= bound,
        }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self { name: name.to_string(), value: String::new(), bound: None, pass }
    }

    pub fn info(name: &str, value: String) -> Self {
        Self { name: name.to_string(), value, bound: None, pass: true }
    }
}

impl Report {
    pub fn pass_of(items: &[SummaryItem]) -> bool {
        items.iter().all(|i| i.pass)
    }

    /// Writes `report.json` into the output directory and echoes the verdict
    /// on stdout.
    pub fn finish(&self, out_dir: &Path) -> Result<PathBuf, String> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| format!("cannot create {out_dir:?}: {e}"))?;
        let path = out_dir.join("report.json");
        let mut file =
            std::fs::File::create(&path).map_err(|e| format!("cannot write {path:?}: {e}"))?;
        let json = serde_json::to_string_pretty(self).map_err(|e| e.to_string())?;
        file.write_all(json.as_bytes()).and_then(|_| file.write_all(b"\n"))
            .map_err(|e| format!("cannot write {path:?}: {e}"))?;
        for item in &self.summary {
            let verdict = if item.pass { "pass" } else { "FAIL" };
            match (&item.bound, item.value.is_empty()) {
                (Some(bound), _) => {
                    println!("{:<40} {:>24} <= {:>12}  {}", item.name, item.value, bound, verdict)
                }
                (None, false) => println!("{:<40} {:>24}  {}", item.name, item.value, verdict),
                (None, true) => println!("{:<40} {}", item.name, verdict),
            }
        }
        println!(
            "{}: {} ({} grid points) -> {}",
            self.command,
            if self.pass { "PASS" } else { "FAIL" },
            self.grid_points,
            out_dir.display()
        );
        Ok(path)
    }
}
