//! JSON run configuration and its validation.

use std::path::Path;
use std::sync::Arc;

use gaborfio_core::{
    window, BuiltinPhase, GaborFrameSpec, Grid, Lattice, MultiplierSymbolTable, Signal, SymbolTable,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Issue};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub d: usize,
}

fn one() -> usize {
    1
}

fn unit_width() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowConfig {
    Gaussian {
        #[serde(default = "unit_width")]
        width: f64,
    },
    Bspline {
        order: usize,
        #[serde(default = "unit_width")]
        width: f64,
    },
    Box {
        half_width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// Entries count grid steps.
    #[default]
    Grid,
    /// Entries are coordinates; each must be a multiple of `1/sqrt(n)`.
    Continuum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// `2d x 2d`, row-major.
    pub generator: Vec<Vec<f64>>,
    #[serde(default)]
    pub units: Units,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolConfig {
    #[default]
    Constant,
    Bandlimited {
        order: usize,
    },
    Weighted {
        s: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Truncation radii; defaults to dyadic radii up to the extraction radius.
    #[serde(default)]
    pub l_list: Option<Vec<f64>>,
    /// Extraction radius; defaults to the full torus.
    #[serde(default)]
    pub nu_radius: Option<f64>,
    /// Claimed decay exponent; defaults to the symbol's claim, else 2.
    #[serde(default)]
    pub s_claim: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub weight_s: f64,
    /// Random probes for norms other than the spectral norm.
    #[serde(default = "probes")]
    pub probes: usize,
    /// Random signals for the Parseval residual.
    #[serde(default = "twenty")]
    pub signals: usize,
    #[serde(default = "quantile")]
    pub quantile: f64,
    #[serde(default = "max_rel_error")]
    pub max_rel_error: f64,
    /// Square separable spacings (grid steps) for the warped-frame sweep.
    #[serde(default = "delta_steps")]
    pub delta_steps: Vec<usize>,
}

fn two() -> f64 {
    2.0
}

fn twenty() -> usize {
    20
}

fn probes() -> usize {
    200
}

fn quantile() -> f64 {
    0.99
}

fn max_rel_error() -> f64 {
    5e-2
}

fn delta_steps() -> Vec<usize> {
    vec![16, 8, 4, 2]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            l_list: None,
            nu_radius: None,
            s_claim: None,
            tolerance: None,
            p: two(),
            weight_s: 0.0,
            probes: probes(),
            signals: twenty(),
            quantile: quantile(),
            max_rel_error: max_rel_error(),
            delta_steps: delta_steps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub window: WindowConfig,
    /// Replace the window by its canonical tight window before use.
    #[serde(default = "yes")]
    pub tighten: bool,
    pub lattice: LatticeConfig,
    #[serde(default = "linear")]
    pub phase: BuiltinPhase,
    #[serde(default)]
    pub symbol: SymbolConfig,
    /// Second symbol for a paired decay scan.
    #[serde(default)]
    pub compare_symbol: Option<SymbolConfig>,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn linear() -> BuiltinPhase {
    BuiltinPhase::Linear
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::config("", format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Every cross-field problem at once.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let (n, d) = (self.grid.n, self.grid.d);
        if n < 4 {
            out.push(Issue::new(
                "grid.n",
                format!("need at least 4 samples, got {n}"),
            ));
        }
        if d == 0 {
            out.push(Issue::new("grid.d", "dimension must be at least 1"));
        }
        match self.window {
            WindowConfig::Gaussian { width } | WindowConfig::Bspline { width, .. }
                if !(width > 0.0) =>
            {
                out.push(Issue::new(
                    "window.width",
                    format!("must be positive, got {width}"),
                ))
            }
            WindowConfig::Bspline { order: 0, .. } => {
                out.push(Issue::new("window.order", "must be at least 1"))
            }
            WindowConfig::Box { half_width } if !(half_width > 0.0) => out.push(Issue::new(
                "window.half_width",
                format!("must be positive, got {half_width}"),
            )),
            _ => {}
        }
        out.extend(self.generator_issues());
        if let Err(m) = self.phase.validate() {
            out.push(Issue::new("phase", m));
        }
        for (field, sym) in [
            ("symbol", Some(self.symbol)),
            ("compare_symbol", self.compare_symbol),
        ] {
            match sym {
                Some(SymbolConfig::Bandlimited { order: 0 }) => {
                    out.push(Issue::new(format!("{field}.order"), "must be at least 1"))
                }
                Some(SymbolConfig::Weighted { s }) if !(s > 0.0) => out.push(Issue::new(
                    format!("{field}.s"),
                    format!("must be positive, got {s}"),
                )),
                _ => {}
            }
        }
        let e = &self.experiment;
        if let Some(ls) = &e.l_list {
            if ls.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                out.push(Issue::new(
                    "experiment.l_list",
                    "radii must be finite and non-negative",
                ));
            }
        }
        if let Some(r) = e.nu_radius {
            if !(r.is_finite() && r >= 0.0) {
                out.push(Issue::new(
                    "experiment.nu_radius",
                    format!("must be finite and non-negative, got {r}"),
                ));
            }
        }
        if !(e.p >= 1.0) {
            out.push(Issue::new(
                "experiment.p",
                format!("must be at least 1, got {}", e.p),
            ));
        }
        if !(e.weight_s >= 0.0) {
            out.push(Issue::new(
                "experiment.weight_s",
                format!("must be non-negative, got {}", e.weight_s),
            ));
        }
        if !(e.quantile > 0.0 && e.quantile <= 1.0) {
            out.push(Issue::new(
                "experiment.quantile",
                format!("must lie in (0, 1], got {}", e.quantile),
            ));
        }
        if e.signals == 0 {
            out.push(Issue::new("experiment.signals", "must be at least 1"));
        }
        if let Some(&bad) = e.delta_steps.iter().find(|&&a| a == 0 || n % a != 0) {
            out.push(Issue::new(
                "experiment.delta_steps",
                format!("spacing {bad} does not divide n = {n}"),
            ));
        }
        out
    }

    fn generator_issues(&self) -> Vec<Issue> {
        let dim = 2 * self.grid.d;
        let rows = &self.lattice.generator;
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return vec![Issue::new(
                "lattice.generator",
                format!("must be {dim} x {dim}"),
            )];
        }
        let h = 1.0 / (self.grid.n.max(1) as f64).sqrt();
        let mut out = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let steps = match self.lattice.units {
                    Units::Grid => v,
                    Units::Continuum => v / h,
                };
                let k = steps.round();
                if !steps.is_finite() || (steps - k).abs() > 1e-9 * (1.0 + k.abs()) {
                    let nearest = match self.lattice.units {
                        Units::Grid => k,
                        Units::Continuum => k * h,
                    };
                    out.push(Issue::new(
                        format!("lattice.generator[{i}][{j}]"),
                        format!("{v} is not commensurate with the grid; nearest admissible entry is {nearest}"),
                    ));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> CliResult<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(issues))
        }
    }

    /// Extra constraints of commands that only exist in one dimension.
    pub fn require_one_dim(&self) -> CliResult<()> {
        if self.grid.d != 1 {
            return Err(CliError::config(
                "grid.d",
                format!("this command supports d = 1 only, got {}", self.grid.d),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::new(self.grid.n, self.grid.d)?)
    }

    pub fn lattice(&self) -> CliResult<Arc<Lattice>> {
        let grid = self.grid()?;
        let dim = 2 * grid.d();
        let h = grid.step();
        let a = DMatrix::from_fn(dim, dim, |r, c| {
            let v = self.lattice.generator[r][c];
            match self.lattice.units {
                Units::Grid => v,
                Units::Continuum => (v / h).round(),
            }
        });
        Ok(Arc::new(Lattice::new(&a, grid)?))
    }

    /// The configured window, unit norm.
    pub fn window(&self) -> CliResult<Signal> {
        let grid = self.grid()?;
        Ok(match self.window {
            WindowConfig::Gaussian { width } => window::gaussian(grid, width)?,
            WindowConfig::Bspline { order, width } => window::bspline(grid, order, width)?,
            WindowConfig::Box { half_width } => window::box_window(grid, half_width)?,
        })
    }

    /// Frame spec, tightened if requested.
    pub fn spec(&self) -> CliResult<GaborFrameSpec> {
        let sp = GaborFrameSpec::new(&self.window()?, self.lattice()?)?;
        Ok(if self.tighten { sp.tightened()? } else { sp })
    }

    pub fn symbol_table(&self, sym: SymbolConfig, seed: u64) -> CliResult<SymbolTable> {
        let grid = self.grid()?;
        Ok(match sym {
            SymbolConfig::Constant => SymbolTable::constant(grid, Complex64::new(1.0, 0.0)),
            SymbolConfig::Bandlimited { order } => SymbolTable::bandlimited(grid, order, seed)?,
            SymbolConfig::Weighted { s } => SymbolTable::weighted(grid, s, seed)?,
        })
    }

    pub fn nu_radius(&self, lattice: &Lattice) -> f64 {
        self.experiment
            .nu_radius
            .unwrap_or_else(|| MultiplierSymbolTable::full_radius(lattice))
    }

    /// Configured radii, or `1, 2, 4, ...` below `radius` followed by `radius`.
    pub fn l_list(&self, radius: f64) -> Vec<f64> {
        if let Some(ls) = &self.experiment.l_list {
            return ls.clone();
        }
        let mut out = vec![0.0];
        let mut l = 1.0;
        while l < radius {
            out.push(l);
            l *= 2.0;
        }
        out.push(radius);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "grid": { "n": 64 },
            "window": { "kind": "gaussian" },
            "lattice": { "generator": [[4, 0], [0, 4]] }
        })
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_json(&base().to_string()).unwrap();
        assert_eq!(cfg.grid.d, 1);
        assert!(cfg.tighten);
        assert_eq!(cfg.phase, BuiltinPhase::Linear);
        assert_eq!(cfg.experiment.p, 2.0);
    }

    #[test]
    fn continuum_units_need_grid_multiples() {
        let mut v = base();
        v["lattice"] =
            serde_json::json!({ "generator": [[0.5, 0], [0, 0.3]], "units": "continuum" });
        let Err(CliError::Config(issues)) = RunConfig::from_json(&v.to_string()) else {
            panic!()
        };
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].field, "lattice.generator[1][1]");
        assert!(issues[0].message.contains("0.25"));
    }

    #[test]
    fn issues_are_collected() {
        let mut v = base();
        v["phase"] = serde_json::json!({ "kind": "perturbed", "eps": 1.5 });
        v["experiment"] = serde_json::json!({ "p": 0.5, "quantile": 0 });
        let Err(CliError::Config(issues)) = RunConfig::from_json(&v.to_string()) else {
            panic!()
        };
        assert_eq!(issues.len(), 3, "{issues:?}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = base();
        v["colour"] = serde_json::json!("blue");
        assert!(matches!(
            RunConfig::from_json(&v.to_string()),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn default_radii_end_at_the_extraction_radius() {
        let cfg = RunConfig::from_json(&base().to_string()).unwrap();
        assert_eq!(cfg.l_list(5.5), vec![0.0, 1.0, 2.0, 4.0, 5.5]);
    }
}
