//! Task dispatch for run configurations.

use std::path::Path;

use serde_json::{json, Value};

use crate::config::{CriteriaBranch, Format, RunConfig, Task};
use crate::criteria::{
    evaluate_atom_test, evaluate_below_diagonal, evaluate_carleson, evaluate_hardy, evaluate_linear_sum, evaluate_measures,
    evaluate_schatten, quadruple_json,
};
use crate::error::{Error, Result};
use crate::geometry::{build_lattice_with, covering_multiplicity, sample_disk_points, LatticeOptions};
use crate::report::{CrossCheck, Report, Side, INDETERMINATE};
use crate::spaces::{bergman_p_norm, hardy_norm, littlewood_paley_check, SpaceParams};
use crate::symbols::Repr;

/// Process exit status of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Every verdict is definite.
    Clean,
    /// Some verdict is indeterminate.
    Indeterminate,
}

impl Status {
    pub fn code(&self) -> i32 {
        match self {
            Status::Clean => 0,
            Status::Indeterminate => 2,
        }
    }
}

/// Exit code of a failed run.
pub const ERROR_EXIT: i32 = 1;

/// Multiplicity factor of the lattice task.
pub const MULTIPLICITY_FACTOR: f64 = 4.0;

/// Taylor coefficients used for Hardy norms of non-polynomial symbols.
const HARDY_COEFFS: usize = 1024;

/// Runs the task of a validated config and returns its report.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let params = cfg.criterion_params();
    let mut report = match cfg.task {
        Task::Norms => norms_report(cfg)?,
        Task::Lattice => lattice_report(cfg)?,
        Task::Schatten => evaluate_schatten(&cfg.quadruple()?, schatten_p(cfg)?, &params)?,
        Task::Carleson => evaluate_measures(&cfg.quadruple()?, &params)?,
        Task::Hardy => evaluate_hardy(&cfg.symbol("u")?, &cfg.symbol("phi")?, &cfg.symbol("psi")?, &params)?,
        Task::Criteria => {
            let q4 = cfg.quadruple()?;
            match cfg.branch.ok_or_else(|| Error::Config("criteria task without a branch".into()))? {
                CriteriaBranch::Carleson => evaluate_carleson(&q4, &params)?,
                CriteriaBranch::BelowDiagonal => evaluate_below_diagonal(&q4, &params)?,
                CriteriaBranch::Schatten => evaluate_schatten(&q4, schatten_p(cfg)?, &params)?,
                CriteriaBranch::AtomTest => evaluate_atom_test(&q4, &params, params.trials)?,
                CriteriaBranch::LinearSum => {
                    let (a, b) = cfg.coefficients();
                    evaluate_linear_sum(a, b, &q4, schatten_p(cfg)?, &params)?
                }
            }
        }
    };
    let mut provenance = match report.provenance.take() {
        Value::Object(m) => m,
        _ => Default::default(),
    };
    provenance.insert("config".into(), serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?);
    report.provenance = Value::Object(provenance);
    Ok(report)
}

fn schatten_p(cfg: &RunConfig) -> Result<f64> {
    cfg.schatten_p.ok_or_else(|| Error::Config("Schatten exponent missing".into()))
}

pub fn status(report: &Report) -> Status {
    if report.any_indeterminate() {
        Status::Indeterminate
    } else {
        Status::Clean
    }
}

/// Serializes a report in the config's output format.
pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

/// Runs a config, writes its report file and returns the report with its status.
pub fn run_report(cfg: &RunConfig) -> Result<(Report, Status)> {
    let report = run(cfg)?;
    write_report(&report, cfg.output.format, &cfg.output_path())?;
    let s = status(&report);
    Ok((report, s))
}

pub fn write_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    let text = render(report, format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Norms of the four symbols in `A^p_alpha` and `H^p`, and their self-map checks.
fn norms_report(cfg: &RunConfig) -> Result<Report> {
    let q4 = cfg.quadruple()?;
    let sp = SpaceParams::new(cfg.alpha, cfg.p, Some(cfg.q))?;
    let grid = cfg.numerics.grid.build(cfg.alpha)?;
    let mut report = Report::new("norms", json!({ "symbols": quadruple_json(&q4), "alpha": cfg.alpha, "p": cfg.p, "q": cfg.q }));
    for name in ["u", "v", "phi", "psi"] {
        let s = cfg.symbol(name)?;
        let b = bergman_p_norm(&s, &sp, &grid)?;
        let flags: &[&str] = if b.tail_warning() { &["tail"] } else { &[] };
        report.quantity(format!("{name}.bergman_norm"), b.value, flags);
        let coeffs = match &s.repr {
            Repr::Poly(c) => c.clone(),
            _ => s.taylor_coeffs(HARDY_COEFFS),
        };
        let tail = if matches!(s.repr, Repr::Poly(_)) { 0.0 } else { s.taylor_tail_bound(HARDY_COEFFS) };
        let flags: &[&str] = if tail > 1e-12 { &["truncation"] } else { &[] };
        report.quantity(format!("{name}.hardy_norm"), hardy_norm(&coeffs, cfg.p)?, flags);
        let lp = littlewood_paley_check(&coeffs);
        report.quantity(format!("{name}.littlewood_paley_ratio"), lp.ratio, &[]);
        if name == "phi" || name == "psi" {
            let check = s.validate_self_map();
            report.quantity(format!("{name}.sup_modulus"), check.sup, &[]);
            report.verdict(format!("{name}.self_map"), if check.passed { "self-map" } else { "not-self-map" }, &[format!("{name}.sup_modulus")]);
        }
    }
    report.quantity("rho_at_origin", q4.rho(num_complex::Complex64::new(0.0, 0.0)), &[]);
    report.provenance = json!({ "grid": cfg.numerics.grid, "version": env!("CARGO_PKG_VERSION") });
    Ok(report)
}

/// Greedy `r`-lattice: size, separation, sampled covering and the covering
/// multiplicity of the enlarged disks for two construction orders.
fn lattice_report(cfg: &RunConfig) -> Result<Report> {
    let n = &cfg.numerics;
    let (r, cov) = (n.r, n.coverage_radius);
    let mut report = Report::new("lattice", json!({ "r": r, "coverage_radius": cov, "samples": n.samples }));
    let ccw = build_lattice_with(r, cov, LatticeOptions::default())?;
    let cw = build_lattice_with(r, cov, LatticeOptions { clockwise: true, ..Default::default() })?;
    report.quantity("size", ccw.len() as f64, &[]);
    report.quantity("size_clockwise", cw.len() as f64, &[]);
    let sep = ccw.min_separation();
    report.quantity("min_separation", sep, &[]);
    let unresolved: &[&str] = if ccw.unresolved_cells > 0 { &["unresolved"] } else { &[] };
    report.quantity("unresolved_cells", ccw.unresolved_cells as f64, unresolved);
    let uncovered = sample_disk_points(cov, n.samples, n.seed).into_iter().filter(|&z| !ccw.covers(z)).count();
    report.quantity("uncovered_samples", uncovered as f64, &[]);
    let m_ccw = covering_multiplicity(&ccw, MULTIPLICITY_FACTOR, n.samples, n.seed)?;
    let m_cw = covering_multiplicity(&cw, MULTIPLICITY_FACTOR, n.samples, n.seed)?;
    report.quantity("multiplicity", m_ccw as f64, &[]);
    report.quantity("multiplicity_clockwise", m_cw as f64, &[]);
    report.verdict("separation", if sep >= r { "separated" } else { "not-separated" }, &["min_separation".into()]);
    report.verdict(
        "covering",
        if uncovered == 0 && ccw.unresolved_cells == 0 { "covered" } else if uncovered == 0 { INDETERMINATE } else { "not-covered" },
        &["uncovered_samples".into(), "unresolved_cells".into()],
    );
    let side = |name: &str, m: usize| Side { name: name.into(), verdict: m.to_string() };
    let check = CrossCheck::equivalence("multiplicity~multiplicity_clockwise", vec![side("multiplicity", m_ccw), side("multiplicity_clockwise", m_cw)]);
    report.verdict("multiplicity", if check.agree { "finite" } else { INDETERMINATE }, &["multiplicity".into(), "multiplicity_clockwise".into()]);
    report.cross_checks.push(check);
    report.provenance = json!({ "seed": n.seed, "factor": MULTIPLICITY_FACTOR, "version": env!("CARGO_PKG_VERSION") });
    Ok(report)
}
