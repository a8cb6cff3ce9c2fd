//! Run configuration: one JSON document, flags override fields.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use hpl_core::period::{presets, BeltramiFamily};
use hpl_core::solver::SolverSettings;
use hpl_core::torus::{read_beltrami, PrimitiveBasis, TorusGeometry};
use hpl_core::{C64, CMatrix};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    /// Named fixture: elliptic | abelian-diagonal | abelian-full |
    /// abelian-degenerate. Takes precedence over `geometry`/`family`.
    pub preset: Option<String>,
    /// Custom geometry (requires `family`).
    pub geometry: Option<GeometryConfig>,
    /// Serialized Beltrami basis fields (`# beltrami …` text format).
    pub family: Option<Vec<String>>,
    /// Fourier band of the solver iterates.
    pub band: u32,
    /// Explicit parameter grid; complex numbers as `[re, im]` pairs.
    pub grid: Option<Vec<Vec<[f64; 2]>>>,
    /// Number of generated grid points when `grid` is absent.
    pub grid_points: usize,
    /// Solver tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Central-difference step for period-map derivatives.
    pub fd_step: f64,
    /// Accept grid points outside the certified admissible radius.
    pub allow_boundary: bool,
    /// Output directory.
    pub out: String,
    /// Scales the fixture polarization in `check` (test hook: a negative
    /// scale breaks positivity).
    pub polarization_scale: [f64; 2],
    /// Seed for generated grids and the verification battery.
    pub seed: u64,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            preset: None,
            geometry: None,
            family: None,
            band: 2,
            grid: None,
            grid_points: 10,
            tolerance: 1e-10,
            max_iterations: 10_000,
            fd_step: 1e-3,
            allow_boundary: false,
            out: "out".into(),
            polarization_scale: [1.0, 0.0],
            seed: 0x5eed_0001,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub dimension: usize,
    /// Weight of the primitive cohomology carrying the period data.
    pub weight: usize,
    /// d×d complex matrices as nested `[re, im]` pairs.
    pub tau: Vec<Vec<[f64; 2]>>,
    pub metric: Vec<Vec<[f64; 2]>>,
}

/// Command-line overrides applied on top of the file config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub grid: Option<String>,
    pub band: Option<u32>,
    pub tolerance: Option<f64>,
    pub allow_boundary: bool,
    pub break_adjoint: bool,
}

/// Fully resolved run context.
pub struct RunContext {
    pub name: String,
    pub family: BeltramiFamily,
    pub band: u32,
    pub settings: SolverSettings,
    pub fd_step: f64,
    pub grid: Vec<Vec<C64>>,
    pub allow_boundary: bool,
    pub out_dir: PathBuf,
    pub polarization_scale: C64,
    pub seed: u64,
    pub break_adjoint: bool,
}

fn complex_matrix(data: &[Vec<[f64; 2]>], d: usize, what: &str) -> Result<CMatrix, String> {
    if data.len() != d || data.iter().any(|row| row.len() != d) {
        return Err(format!("{what} must be a {d}×{d} matrix"));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| C64::new(data[i][j][0], data[i][j][1])))
}

/// Parses one complex scalar: `0.3`, `-0.1i`, `0.2+0.4i`, `1e-2-3e-4i`.
pub fn parse_complex(token: &str) -> Result<C64, String> {
    let s: String = token.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    // pure imaginary or real
    if let Some(body) = s.strip_suffix('i') {
        // try splitting body into re ± im at the last sign that is not an
        // exponent sign and not leading
        let chars: Vec<char> = body.chars().collect();
        for idx in (1..chars.len()).rev() {
            let c = chars[idx];
            if (c == '+' || c == '-') && chars[idx - 1] != 'e' && chars[idx - 1] != 'E' {
                let re: f64 =
                    body[..idx].parse().map_err(|_| format!("bad real part in `{token}`"))?;
                let im_str = &body[idx..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().map_err(|_| format!("bad imaginary part in `{token}`"))?
                };
                return Ok(C64::new(re, im));
            }
        }
        let im: f64 = if body.is_empty() || body == "+" {
            1.0
        } else if body == "-" {
            -1.0
        } else {
            body.parse().map_err(|_| format!("bad imaginary literal `{token}`"))?
        };
        return Ok(C64::new(0.0, im));
    }
    let re: f64 = s.parse().map_err(|_| format!("bad real literal `{token}`"))?;
    Ok(C64::new(re, 0.0))
}

/// Parses a grid flag: points separated by `;`, components by `,`.
pub fn parse_grid(text: &str) -> Result<Vec<Vec<C64>>, String> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|point| point.split(',').map(|c| parse_complex(c.trim())).collect())
        .collect()
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {path:?}: {e}"))
    }

    /// Resolves the config plus overrides into a run context.
    pub fn resolve(&self, overrides: &Overrides) -> Result<RunContext, String> {
        let (name, family) = match (&self.preset, &self.geometry) {
            (Some(preset), _) => {
                let fixture = presets::by_name(preset).map_err(|e| e.to_string())?;
                (fixture.name.to_string(), fixture.family)
            }
            (None, Some(geometry_cfg)) => {
                let d = geometry_cfg.dimension;
                let tau = complex_matrix(&geometry_cfg.tau, d, "tau")?;
                let metric = complex_matrix(&geometry_cfg.metric, d, "metric")?;
                let geometry =
                    Arc::new(TorusGeometry::new(tau, metric).map_err(|e| e.to_string())?);
                let basis = Arc::new(
                    PrimitiveBasis::new(Arc::clone(&geometry), geometry_cfg.weight)
                        .map_err(|e| e.to_string())?,
                );
                let texts = self
                    .family
                    .as_ref()
                    .ok_or("custom geometry requires `family` fields")?;
                let fields = texts
                    .iter()
                    .map(|t| read_beltrami(t, &geometry).map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                let family =
                    BeltramiFamily::new(basis, fields).map_err(|e| e.to_string())?;
                ("custom".to_string(), family)
            }
            (None, None) => {
                return Err(
                    "config selects no fixture: set `preset` or `geometry`+`family`".into()
                )
            }
        };

        let band = overrides.band.unwrap_or(self.band);
        if band < 1 {
            return Err("band must be at least 1".into());
        }
        let tolerance = overrides.tolerance.unwrap_or(self.tolerance);
        let settings = SolverSettings { tolerance, max_iterations: self.max_iterations };
        let allow_boundary = self.allow_boundary || overrides.allow_boundary;

        let grid: Vec<Vec<C64>> = if let Some(text) = &overrides.grid {
            parse_grid(text)?
        } else if let Some(points) = &self.grid {
            points
                .iter()
                .map(|p| p.iter().map(|c| C64::new(c[0], c[1])).collect())
                .collect()
        } else {
            generated_grid(&family, self.grid_points, self.seed)
        };
        for (idx, point) in grid.iter().enumerate() {
            if point.len() != family.parameters() {
                return Err(format!(
                    "grid point {idx} has {} components, family has {}",
                    point.len(),
                    family.parameters()
                ));
            }
            if !allow_boundary && !family.inside_radius(point) {
                return Err(format!(
                    "grid point {idx} lies outside the certified admissible radius \
                     {:.3e}; pass --allow-boundary to evaluate anyway",
                    family.admissible_radius()
                ));
            }
        }

        Ok(RunContext {
            name,
            family,
            band,
            settings,
            fd_step: self.fd_step,
            grid,
            allow_boundary,
            out_dir: PathBuf::from(overrides.out.clone().unwrap_or_else(|| self.out.clone())),
            polarization_scale: C64::new(self.polarization_scale[0], self.polarization_scale[1]),
            seed: self.seed,
            break_adjoint: overrides.break_adjoint,
        })
    }
}

/// Deterministic generated grid: seeded points inside half the certified
/// radius.
fn generated_grid(family: &BeltramiFamily, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = hpl_core::testkit::Rng::new(seed);
    let n = family.parameters();
    let cap = 0.5 * family.admissible_radius() / (n as f64).sqrt();
    (0..count)
        .map(|_| (0..n).map(|_| rng.complex(cap / std::f64::consts::SQRT_2)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0.5").unwrap(), C64::new(0.5, 0.0));
        assert_eq!(parse_complex("-2i").unwrap(), C64::new(0.0, -2.0));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("0.1+0.2i").unwrap(), C64::new(0.1, 0.2));
        assert_eq!(parse_complex("1e-2-3e-4i").unwrap(), C64::new(0.01, -0.0003));
        assert!(parse_complex("banana").is_err());
    }

    #[test]
    fn grid_strings() {
        let grid = parse_grid("0.1,0.2;0.3+0.1i,-0.2").unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[1][0], C64::new(0.3, 0.1));
        assert!(parse_grid("nope").is_err());
    }

    #[test]
    fn preset_resolution_validates_grid() {
        let config = FileConfig { preset: Some("elliptic".into()), ..Default::default() };
        let ctx = config.resolve(&Overrides::default()).unwrap();
        assert_eq!(ctx.family.parameters(), 1);
        assert_eq!(ctx.grid.len(), 10);

        let bad = Overrides { grid: Some("5.0".into()), ..Default::default() };
        assert!(config.resolve(&bad).is_err());
        let ok_boundary =
            Overrides { grid: Some("5.0".into()), allow_boundary: true, ..Default::default() };
        assert!(config.resolve(&ok_boundary).is_ok());
    }

    #[test]
    fn empty_config_is_a_usage_error() {
        let config = FileConfig::default();
        assert!(config.resolve(&Overrides::default()).is_err());
    }
}
