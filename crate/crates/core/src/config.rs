//! Run configuration files: parsing, default filling and validation.
//!
//! A config is a TOML document with one task, the four symbols, the space
//! exponents and optional `[numerics]` and `[output]` tables. Every default is
//! written back into the parsed config, so `emit` produces a complete file.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criteria::{Branch, CriterionParams, GridSpec, Tolerances};
use crate::error::{Error, Result};
use crate::operators::{DEFAULT_RADII, DEFAULT_TRUNCATION};
use crate::spaces::{default_order_atom, SpaceParams};
use crate::symbols::{AnalyticSymbol, ComplexLiteral, Role, SymbolLiteral, SymbolQuadruple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Norms,
    Schatten,
    Carleson,
    Criteria,
    Lattice,
    Hardy,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Norms => "norms",
            Task::Schatten => "schatten",
            Task::Carleson => "carleson",
            Task::Criteria => "criteria",
            Task::Lattice => "lattice",
            Task::Hardy => "hardy",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Task::Norms, Task::Schatten, Task::Carleson, Task::Criteria, Task::Lattice, Task::Hardy]
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown task '{s}'; expected norms, schatten, carleson, criteria, lattice or hardy")))
    }
}

/// Evaluator run by the `criteria` task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriteriaBranch {
    Carleson,
    BelowDiagonal,
    Schatten,
    AtomTest,
    LinearSum,
}

impl CriteriaBranch {
    /// Parameter branch whose hypotheses apply.
    pub fn hypotheses(&self) -> Branch {
        match self {
            CriteriaBranch::Carleson => Branch::Carleson,
            CriteriaBranch::BelowDiagonal | CriteriaBranch::AtomTest => Branch::BelowDiagonal,
            CriteriaBranch::Schatten | CriteriaBranch::LinearSum => Branch::Schatten,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("unknown format '{s}'; expected json or csv"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    /// Report file; defaults to `<task>-report.<format>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Numerical settings. `Numerics::default()` is the table of shipped defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Exponent of `1 - rho` in the sigma measures.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Test-function order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Bergman radius of averaging disks and lattices.
    pub r: f64,
    /// Matrix truncation size.
    pub truncation: usize,
    pub radii: Vec<f64>,
    pub angles: usize,
    pub sup_radius: f64,
    pub atom_radius: f64,
    /// Euclidean radius tiled by the `lattice` task.
    pub coverage_radius: f64,
    /// Random samples of the lattice covering checks.
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    pub bounded_valence: bool,
    pub grid: GridSpec,
    pub eval_grid: GridSpec,
    pub tol: Tolerances,
}

impl Default for Numerics {
    fn default() -> Self {
        let c = CriterionParams::default();
        Self {
            beta: None,
            order: None,
            r: c.r,
            truncation: DEFAULT_TRUNCATION,
            radii: DEFAULT_RADII.to_vec(),
            angles: c.angles,
            sup_radius: c.sup_radius,
            atom_radius: c.atom_radius,
            coverage_radius: 0.95,
            samples: 10_000,
            trials: c.trials,
            seed: c.seed,
            bounded_valence: c.bounded_valence,
            grid: c.grid,
            eval_grid: c.eval_grid,
            tol: c.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    /// Evaluator of the `criteria` task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<CriteriaBranch>,
    /// Schatten exponent of the `schatten` task and the Schatten branches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schatten_p: Option<f64>,
    /// `(a, b)` of `a C_{u,phi} + b C_{v,psi}` for the linear-sum branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<[ComplexLiteral; 2]>,
    pub u: SymbolLiteral,
    pub v: SymbolLiteral,
    pub phi: SymbolLiteral,
    pub psi: SymbolLiteral,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: Output,
}

/// Command-line values that replace config entries before defaults are filled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub task: Option<Task>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

pub const DEFAULT_SCHATTEN_P: f64 = 2.0;

/// Parses, fills defaults and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(t) = overrides.task {
        if t != cfg.task {
            return Err(Error::Config(format!("task '{}' given on the command line but the config says '{}'", t.as_str(), cfg.task.as_str())));
        }
    }
    if let Some(f) = overrides.format {
        cfg.output.format = f;
    }
    if let Some(o) = &overrides.out {
        cfg.output.path = Some(o.clone());
    }
    if let Some(s) = overrides.seed {
        cfg.numerics.seed = s;
    }
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

/// Writes a config as TOML.
pub fn emit(cfg: &RunConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    /// Hypotheses that apply to this task, if any.
    pub fn hypotheses(&self) -> Option<Branch> {
        match self.task {
            Task::Schatten => Some(Branch::Schatten),
            Task::Carleson => Some(if self.p <= self.q { Branch::Carleson } else { Branch::BelowDiagonal }),
            Task::Criteria => self.branch.map(|b| b.hypotheses()),
            Task::Norms | Task::Lattice | Task::Hardy => None,
        }
    }

    fn uses_schatten_p(&self) -> bool {
        self.task == Task::Schatten
            || (self.task == Task::Criteria && matches!(self.branch, Some(CriteriaBranch::Schatten | CriteriaBranch::LinearSum)))
    }

    fn fill_defaults(&mut self) {
        if self.task == Task::Criteria && self.branch.is_none() {
            self.branch = Some(if self.p <= self.q { CriteriaBranch::Carleson } else { CriteriaBranch::BelowDiagonal });
        }
        if self.uses_schatten_p() && self.schatten_p.is_none() {
            self.schatten_p = Some(DEFAULT_SCHATTEN_P);
        }
        if self.branch == Some(CriteriaBranch::LinearSum) && self.coefficients.is_none() {
            self.coefficients = Some([ComplexLiteral::Real(1.0), ComplexLiteral::Real(1.0)]);
        }
        if let Some(b) = self.hypotheses() {
            let params = self.criterion_params();
            if self.numerics.order.is_none() {
                self.numerics.order = Some(if self.branch == Some(CriteriaBranch::AtomTest) {
                    default_order_atom(self.alpha, self.p)
                } else {
                    params.test_order()
                });
            }
            if self.numerics.beta.is_none() {
                self.numerics.beta = Some(self.criterion_params().default_beta(b));
            }
        }
        if self.output.path.is_none() {
            self.output.path = Some(PathBuf::from(format!("{}-report.{}", self.task.as_str(), self.output.format.extension())));
        }
    }

    fn validate(&self) -> Result<()> {
        SpaceParams::new(self.alpha, self.p, Some(self.q))?;
        self.quadruple()?;
        if let Some(s) = self.schatten_p {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("Schatten exponent must be positive, got {s}")));
            }
        }
        if self.task == Task::Schatten && (self.p != 2.0 || self.q != 2.0) {
            return Err(Error::InvalidParameter(format!("Schatten classes live on A^2_alpha: p = q = 2 is required, got p = {}, q = {}", self.p, self.q)));
        }
        if self.task == Task::Hardy && self.v != SymbolLiteral::Poly(vec![ComplexLiteral::Real(1.0)]) {
            return Err(Error::InvalidParameter("the hardy task compares C_{u,phi} - C_psi and needs v = poly [1]".into()));
        }
        if self.task == Task::Lattice {
            let c = self.numerics.coverage_radius;
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidParameter(format!("coverage radius must lie in (0, 1), got {c}")));
            }
        }
        match self.hypotheses() {
            Some(b) => self.criterion_params().validate(b),
            None => Ok(()),
        }
    }

    pub fn quadruple(&self) -> Result<SymbolQuadruple> {
        SymbolQuadruple::new(
            self.u.to_symbol(Role::Weight)?,
            self.v.to_symbol(Role::Weight)?,
            self.phi.to_symbol(Role::SelfMap)?,
            self.psi.to_symbol(Role::SelfMap)?,
        )
    }

    pub fn symbol(&self, name: &str) -> Result<AnalyticSymbol> {
        match name {
            "u" => self.u.to_symbol(Role::Weight),
            "v" => self.v.to_symbol(Role::Weight),
            "phi" => self.phi.to_symbol(Role::SelfMap),
            "psi" => self.psi.to_symbol(Role::SelfMap),
            _ => Err(Error::Config(format!("unknown symbol '{name}'"))),
        }
    }

    pub fn coefficients(&self) -> (Complex64, Complex64) {
        let [a, b] = self.coefficients.unwrap_or([ComplexLiteral::Real(1.0), ComplexLiteral::Real(1.0)]);
        (a.into(), b.into())
    }

    pub fn criterion_params(&self) -> CriterionParams {
        let n = &self.numerics;
        CriterionParams {
            alpha: self.alpha,
            p: self.p,
            q: self.q,
            beta: n.beta,
            order: n.order,
            r: n.r,
            radii: n.radii.clone(),
            angles: n.angles,
            truncation: n.truncation,
            grid: n.grid,
            eval_grid: n.eval_grid,
            sup_radius: n.sup_radius,
            atom_radius: n.atom_radius,
            trials: n.trials,
            seed: n.seed,
            bounded_valence: n.bounded_valence,
            tol: n.tol,
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.output
            .path
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}-report.{}", self.task.as_str(), self.output.format.extension())))
    }
}
