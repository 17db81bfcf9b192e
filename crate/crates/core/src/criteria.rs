//! Evaluators that compare the measure-side conditions, test-function profiles
//! and matrix oracles for one difference or combination of weighted
//! composition operators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::carleson::{averaging_lp_norm, carleson_profile, rkt_integral, CarlesonOptions, Finiteness, PullbackMeasure};
use crate::error::{Error, Result};
use crate::geometry::build_lattice;
use crate::operators::{
    combo_matrix, combo_matrix_between, frobenius_sq, hs_norm_integral_combo, singular_values, testfn_compactness_profile,
    wco_matrix, ComboSpec, DecayFit, ProfileParams, TruncatedOperator, Verdict, DEFAULT_RADII, DEFAULT_TRUNCATION,
};
use crate::quadrature::{build_grid, Measure, QuadGrid};
use crate::report::{CrossCheck, Report, Side, INDETERMINATE};
use crate::spaces::{
    analytic_norm, default_order_atom, default_order_bergman, default_order_hardy, AtomSum, BasisSpace, SpaceParams,
    TestFamily,
};
use crate::symbols::{AnalyticSymbol, Role, SymbolLiteral, SymbolQuadruple};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const FINITE: &str = "finite-looking";
pub const DIVERGENT: &str = "divergent-looking";

/// Node counts of a product grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub radial: usize,
    pub angular: usize,
}

impl GridSpec {
    pub fn build(&self, alpha: f64) -> Result<QuadGrid> {
        build_grid(alpha, self.radial, self.angular)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Boundary values below this fraction of the profile maximum count as vanished.
    pub tol_vanish: f64,
    /// Largest admissible max/min ratio of a bracket.
    pub bracket_bound: f64,
    /// Mask-boundary error, relative to the supremum, above which a measure verdict is withheld.
    pub boundary_error: f64,
    /// Matrix column tail, relative to the top singular value, above which a compact spectrum verdict is withheld.
    pub truncation_tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_vanish: 1e-2, bracket_bound: 50.0, boundary_error: 0.25, truncation_tail: 1e-3 }
    }
}

/// Parameters shared by the evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionParams {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    /// Exponent of `1 - rho` in the sigma measures; `None` picks the smallest default the branch allows.
    pub beta: Option<f64>,
    /// Test-function order; `None` picks the smallest admissible order.
    pub order: Option<usize>,
    /// Bergman radius of the averaging disks.
    pub r: f64,
    pub radii: Vec<f64>,
    pub angles: usize,
    pub truncation: usize,
    pub grid: GridSpec,
    pub eval_grid: GridSpec,
    /// Lattice points used in the supremum search reach this modulus.
    pub sup_radius: f64,
    /// Lattice points used by the atom test reach this modulus.
    pub atom_radius: f64,
    pub trials: usize,
    pub seed: u64,
    /// User assertion that both self-maps have bounded valence.
    pub bounded_valence: bool,
    pub tol: Tolerances,
}

impl Default for CriterionParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            p: 2.0,
            q: 2.0,
            beta: None,
            order: None,
            r: 1.0,
            radii: DEFAULT_RADII.to_vec(),
            angles: 8,
            truncation: DEFAULT_TRUNCATION,
            grid: GridSpec { radial: 64, angular: 128 },
            eval_grid: GridSpec { radial: 24, angular: 32 },
            sup_radius: 0.995,
            atom_radius: 0.9,
            trials: 50,
            seed: 0x5eed,
            bounded_valence: false,
            tol: Tolerances::default(),
        }
    }
}

/// Which family of conditions an evaluator compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// Bounded and compact differences `A^p_alpha -> A^q_alpha`, `p <= q`.
    Carleson,
    /// Differences `A^p_alpha -> A^q_alpha` with `q < p`.
    BelowDiagonal,
    /// Schatten class membership on `A^2_alpha`.
    Schatten,
}

impl CriterionParams {
    pub fn space(&self) -> Result<SpaceParams> {
        SpaceParams::new(self.alpha, self.p, Some(self.q))
    }

    pub fn test_order(&self) -> usize {
        self.order.unwrap_or_else(|| default_order_bergman(self.alpha, self.p))
    }

    /// Default `beta` for a branch.
    pub fn default_beta(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Carleson => self.q * self.test_order() as f64,
            Branch::BelowDiagonal => (self.q / self.p) * (self.alpha + 1.0 + self.p.max(1.0)) + 1.0,
            Branch::Schatten => 2.0 * (self.alpha + 2.0),
        }
    }

    pub fn beta_for(&self, branch: Branch) -> f64 {
        self.beta.unwrap_or_else(|| self.default_beta(branch))
    }

    /// Checks the hypotheses of a branch.
    pub fn validate(&self, branch: Branch) -> Result<()> {
        self.space()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.r > 0.0) || !self.r.is_finite() {
            return bad(format!("averaging radius r must be positive, got {}", self.r));
        }
        if self.radii.is_empty() || self.radii.windows(2).any(|w| w[1] <= w[0]) || self.radii.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return bad("profile radii must be increasing in (0, 1)".into());
        }
        if self.truncation == 0 || self.angles == 0 || self.trials == 0 {
            return bad("truncation, angles and trials must be positive".into());
        }
        if !(self.sup_radius > 0.0 && self.sup_radius < 1.0) || !(self.atom_radius > 0.0 && self.atom_radius < 1.0) {
            return bad("lattice radii must lie in (0, 1)".into());
        }
        let (a, p, q) = (self.alpha, self.p, self.q);
        let beta = self.beta_for(branch);
        match branch {
            Branch::Carleson => {
                if p > q {
                    return bad(format!("this branch requires 0<p<=q<∞, got p = {p}, q = {q}"));
                }
                let need = (q / p) * (a + 2.0);
                if !(beta > need) {
                    return bad(format!("β must exceed (q/p)(α+2) = {need}, got {beta}"));
                }
            }
            Branch::BelowDiagonal => {
                if !(q < p) {
                    return bad(format!("this branch requires 0<q<p<∞, got p = {p}, q = {q}"));
                }
                let need = (q / p) * (a + 1.0 + p.max(1.0));
                if !(beta > need) {
                    return bad(format!("β must exceed (q/p)(α+1+max{{1,p}}) = {need}, got {beta}"));
                }
            }
            Branch::Schatten => {
                let need = 2.0 * (a + 2.0);
                if !(beta >= need) {
                    return bad(format!("β must be at least 2(α+2) = {need}, got {beta}"));
                }
            }
        }
        if let Some(n) = self.order {
            let need = (2.0 + a) / p;
            if !(n as f64 > need) {
                return bad(format!("test-function order N = {n} must exceed (2+α)/p = {need}"));
            }
        }
        Ok(())
    }

    fn carleson_options(&self) -> CarlesonOptions {
        CarlesonOptions {
            radii: self.radii.clone(),
            angles: self.angles,
            lattice_r: self.r,
            sup_radius: self.sup_radius,
            tol_vanish: self.tol.tol_vanish,
        }
    }

    fn provenance(&self, branch: Option<Branch>) -> Value {
        let mut v = json!({
            "grid": self.grid,
            "eval_grid": self.eval_grid,
            "truncation": self.truncation,
            "radii": self.radii,
            "angles": self.angles,
            "r": self.r,
            "tolerances": self.tol,
            "seed": self.seed,
            "test_order": self.test_order(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        if let Some(b) = branch {
            v["beta"] = json!(self.beta_for(b));
        }
        v
    }
}

fn symbol_json(s: &AnalyticSymbol) -> Value {
    match SymbolLiteral::from_symbol(s) {
        Ok(l) => serde_json::to_value(l).unwrap_or(Value::Null),
        Err(_) => {
            let (num, den) = s.as_rational();
            let pair = |c: Complex64| json!([c.re, c.im]);
            json!({
                "rational": {
                    "num": num.iter().map(|&c| pair(c)).collect::<Vec<_>>(),
                    "den": den.iter().map(|&(c, d)| json!([pair(c), pair(d)])).collect::<Vec<_>>(),
                }
            })
        }
    }
}

pub fn quadruple_json(q4: &SymbolQuadruple) -> Value {
    json!({ "u": symbol_json(&q4.u), "v": symbol_json(&q4.v), "phi": symbol_json(&q4.phi), "psi": symbol_json(&q4.psi) })
}

fn params_json(q4: &SymbolQuadruple, params: &CriterionParams, extra: Value) -> Value {
    let mut v = json!({ "symbols": quadruple_json(q4), "alpha": params.alpha, "p": params.p, "q": params.q });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

/// Worst of several verdicts; indeterminate wins over everything but unboundedness.
pub fn combine(vs: &[Verdict]) -> Verdict {
    if vs.contains(&Verdict::UnboundedLooking) {
        Verdict::UnboundedLooking
    } else if vs.contains(&Verdict::Indeterminate) {
        Verdict::Indeterminate
    } else if vs.contains(&Verdict::BoundedNonCompactLooking) {
        Verdict::BoundedNonCompactLooking
    } else {
        Verdict::CompactLooking
    }
}

fn finiteness_str(f: Finiteness) -> &'static str {
    match f {
        Finiteness::FiniteLooking => FINITE,
        Finiteness::DivergentLooking => DIVERGENT,
    }
}

fn combine_finiteness(vs: &[&str]) -> &'static str {
    if vs.contains(&DIVERGENT) {
        DIVERGENT
    } else if vs.contains(&INDETERMINATE) {
        INDETERMINATE
    } else {
        FINITE
    }
}

fn side(name: &str, verdict: &str) -> Side {
    Side { name: name.to_string(), verdict: verdict.to_string() }
}

/// Common definite verdict of an agreeing cross-check, else indeterminate.
fn settle(check: &CrossCheck) -> String {
    if !check.agree {
        return INDETERMINATE.to_string();
    }
    check.sides.iter().map(|s| s.verdict.clone()).find(|v| v != INDETERMINATE).unwrap_or_else(|| INDETERMINATE.to_string())
}

const MEASURE_NAMES: [&str; 4] = ["omega_phi_u", "omega_psi_v", "sigma_phi", "sigma_psi"];

/// True when a symbol pair with a nonzero weight reaches the unit circle.
fn contact_of(pairs: &[(&AnalyticSymbol, &AnalyticSymbol)]) -> bool {
    pairs.iter().any(|(w, m)| !w.is_zero() && m.sup_modulus() > 1.0 - CONTACT_EPS)
}

fn contact(q4: &SymbolQuadruple) -> bool {
    contact_of(&[(&q4.u, &q4.phi), (&q4.v, &q4.psi)])
}

/// Self-maps with `sup |phi| > 1 - CONTACT_EPS` touch the circle.
pub const CONTACT_EPS: f64 = 1e-6;

/// Spectrum quantities of a truncated matrix and its compactness verdict.
/// When a self-map touches the circle, a non-compact part can live entirely in
/// high degrees, so a decaying truncated spectrum does not show compactness.
fn spectrum_section(report: &mut Report, name: &str, t: &TruncatedOperator, tol: &Tolerances, contact: bool) -> Result<(DecayFit, Verdict)> {
    let s = singular_values(t)?;
    let fit = s.decay();
    let mut flags = Vec::new();
    let mut verdict = fit.verdict();
    let tail_rel = if fit.top > 0.0 { t.tail_estimate / fit.top } else { t.tail_estimate };
    if verdict == Verdict::CompactLooking && !fit.is_zero() {
        if tail_rel > tol.truncation_tail {
            flags.push("truncation");
            verdict = Verdict::Indeterminate;
        } else if contact {
            flags.push("boundary-contact");
            verdict = Verdict::Indeterminate;
        }
    }
    report.quantity(format!("{name}.top_singular_value"), fit.top, &flags);
    report.quantity(format!("{name}.mid_ratio"), fit.mid_ratio, &flags);
    report.quantity(format!("{name}.power_exponent"), fit.power_exponent, &[]);
    report.quantity(format!("{name}.tail_estimate"), t.tail_estimate, &flags);
    let from = vec![format!("{name}.top_singular_value"), format!("{name}.mid_ratio"), format!("{name}.tail_estimate")];
    report.verdict(name, verdict.as_str(), &from);
    Ok((fit, verdict))
}

/// Test-function profile quantities and verdict.
fn profile_section(
    report: &mut Report,
    name: &str,
    spec: &ComboSpec,
    pp: &ProfileParams,
    grid: &QuadGrid,
) -> Result<Verdict> {
    let prof = testfn_compactness_profile(spec, pp, grid)?;
    let mut from = Vec::new();
    for i in 0..=pp.i_max {
        let last = prof.rows.iter().rfind(|r| r.i == i).map(|r| r.value).unwrap_or(0.0);
        let flags: &[&str] = if prof.tail_warning { &["tail"] } else { &[] };
        report.quantity(format!("{name}.i{i}.boundary_value"), last, flags);
        report.quantity(format!("{name}.i{i}.trend_exponent"), prof.exponents[i], &[]);
        from.push(format!("{name}.i{i}.boundary_value"));
        from.push(format!("{name}.i{i}.trend_exponent"));
    }
    report.quantity(format!("{name}.max"), prof.max, &[]);
    let verdict = if prof.tail_warning { Verdict::Indeterminate } else { prof.verdict() };
    report.verdict(name, verdict.as_str(), &from);
    Ok(verdict)
}

fn profile_params(params: &CriterionParams, family: TestFamily, source: SpaceParams, target: BasisSpace, target_q: f64, order: usize) -> ProfileParams {
    ProfileParams {
        family,
        source,
        target,
        target_q,
        order,
        i_max: 1,
        radii: params.radii.clone(),
        angles: params.angles,
        tol_vanish: params.tol.tol_vanish,
    }
}

/// Carleson statistics of the four measures at `t = q/p`, one verdict each.
fn carleson_measures(report: &mut Report, q4: &SymbolQuadruple, params: &CriterionParams, grid: &QuadGrid) -> Result<Verdict> {
    let (alpha, p, q) = (params.alpha, params.p, params.q);
    let beta = params.beta_for(Branch::Carleson);
    let measures = PullbackMeasure::quartet(q4, q, beta, alpha)?;
    let opts = params.carleson_options();
    let stats: Vec<Result<_>> = measures.par_iter().map(|m| carleson_profile(m, params.r, q / p, &opts, grid)).collect();
    let mut measure_verdicts = Vec::new();
    for (name, st) in MEASURE_NAMES.iter().zip(stats) {
        let st = st?;
        let flagged = st.relative_boundary_error > params.tol.boundary_error;
        let flags: &[&str] = if flagged { &["mask-boundary"] } else { &[] };
        report.quantity(format!("{name}.sup"), st.sup_value, flags);
        report.quantity(format!("{name}.boundary_value"), st.profile.last().map(|x| x.1).unwrap_or(0.0), flags);
        report.quantity(format!("{name}.trend_exponent"), st.trend_exponent, &[]);
        report.quantity(format!("{name}.boundary_error"), st.relative_boundary_error, flags);
        let v = if flagged {
            Verdict::Indeterminate
        } else {
            match st.trend {
                crate::operators::Trend::Vanishing => Verdict::CompactLooking,
                crate::operators::Trend::Bounded => Verdict::BoundedNonCompactLooking,
                crate::operators::Trend::Growing => Verdict::UnboundedLooking,
            }
        };
        let from = vec![format!("{name}.sup"), format!("{name}.boundary_value"), format!("{name}.trend_exponent")];
        report.verdict(*name, v.as_str(), &from);
        measure_verdicts.push(v);
    }
    let measures_v = combine(&measure_verdicts);
    report.verdict("measures", measures_v.as_str(), &MEASURE_NAMES.map(String::from));
    Ok(measures_v)
}

/// `L^{p/(p-q)}(dA_alpha)` norms of the averaging functions of the four measures.
fn lp_measures(report: &mut Report, q4: &SymbolQuadruple, params: &CriterionParams, grid: &QuadGrid, eval_grid: &QuadGrid) -> Result<Verdict> {
    let (alpha, p, q) = (params.alpha, params.p, params.q);
    let beta = params.beta_for(Branch::BelowDiagonal);
    let s = p / (p - q);
    let measures = PullbackMeasure::quartet(q4, q, beta, alpha)?;
    let norms: Vec<Result<_>> =
        measures.par_iter().map(|m| averaging_lp_norm(m, params.r, s, Measure::AAlpha, eval_grid, grid)).collect();
    let mut verdicts = Vec::new();
    for (name, n) in MEASURE_NAMES.iter().zip(norms) {
        let n = n?;
        let flags: &[&str] = if n.divergent { &["tail"] } else { &[] };
        report.quantity(format!("{name}.lp_norm"), n.value, flags);
        report.quantity(format!("{name}.tail_fraction"), n.tail_fraction, flags);
        let v = if n.divergent { Verdict::UnboundedLooking } else { Verdict::CompactLooking };
        report.verdict(*name, v.as_str(), &[format!("{name}.lp_norm"), format!("{name}.tail_fraction")]);
        verdicts.push(v);
    }
    let measures_v = combine(&verdicts);
    report.verdict("measures", measures_v.as_str(), &MEASURE_NAMES.map(String::from));
    Ok(measures_v)
}

/// Measure-side conditions alone: Carleson statistics when `p <= q`, otherwise
/// the `L^{p/(p-q)}(dA_alpha)` norms.
pub fn evaluate_measures(q4: &SymbolQuadruple, params: &CriterionParams) -> Result<Report> {
    let branch = if params.p <= params.q { Branch::Carleson } else { Branch::BelowDiagonal };
    params.validate(branch)?;
    let beta = params.beta_for(branch);
    let grid = params.grid.build(params.alpha)?;
    let mut report = Report::new("measures", params_json(q4, params, json!({ "beta": beta })));
    let v = match branch {
        Branch::Carleson => carleson_measures(&mut report, q4, params, &grid)?,
        _ => lp_measures(&mut report, q4, params, &grid, &params.eval_grid.build(params.alpha)?)?,
    };
    report.verdict("operator", v.as_str(), &["measures".into()]);
    report.provenance = params.provenance(Some(branch));
    Ok(report)
}

/// Boundedness and compactness of `C_{u,phi} - C_{v,psi}: A^p_alpha -> A^q_alpha`, `p <= q`:
/// Carleson statistics of the four measures against test-function profiles
/// and, on `A^2_alpha`, the singular values.
pub fn evaluate_carleson(q4: &SymbolQuadruple, params: &CriterionParams) -> Result<Report> {
    params.validate(Branch::Carleson)?;
    let (alpha, p, q) = (params.alpha, params.p, params.q);
    let beta = params.beta_for(Branch::Carleson);
    let grid = params.grid.build(alpha)?;
    let mut report = Report::new("carleson", params_json(q4, params, json!({ "beta": beta })));
    let measures_v = carleson_measures(&mut report, q4, params, &grid)?;

    let spec = ComboSpec::difference(q4.clone());
    let sp = params.space()?;
    let pp = profile_params(params, TestFamily::BergmanF, sp, BasisSpace::Bergman { alpha }, q, params.test_order());
    let tf = profile_section(&mut report, "test_functions", &spec, &pp, &grid)?;
    let mut sides = vec![side("measures", measures_v.as_str()), side("test_functions", tf.as_str())];
    if p == 2.0 && q == 2.0 {
        let t = combo_matrix(&spec, alpha, params.truncation)?;
        let (_, sv) = spectrum_section(&mut report, "spectrum", &t, &params.tol, contact(q4))?;
        sides.push(side("spectrum", sv.as_str()));
    }
    let check = CrossCheck::equivalence("measures~test_functions~spectrum", sides);
    let overall = settle(&check);
    report.cross_checks.push(check);
    report.verdict("operator", overall, &["measures".into(), "test_functions".into()]);
    report.provenance = params.provenance(Some(Branch::Carleson));
    Ok(report)
}

/// `C_{u,phi} - C_{v,psi}: A^p_alpha -> A^q_alpha` with `q < p`, where bounded
/// and compact coincide: `L^{p/(p-q)}(dA_alpha)` norms of the averaging
/// functions against test-function profiles.
pub fn evaluate_below_diagonal(q4: &SymbolQuadruple, params: &CriterionParams) -> Result<Report> {
    params.validate(Branch::BelowDiagonal)?;
    let (alpha, p, q) = (params.alpha, params.p, params.q);
    let beta = params.beta_for(Branch::BelowDiagonal);
    let grid = params.grid.build(alpha)?;
    let eval_grid = params.eval_grid.build(alpha)?;
    let s = p / (p - q);
    let mut report = Report::new("below-diagonal", params_json(q4, params, json!({ "beta": beta, "norm_exponent": s })));
    let measures_v = lp_measures(&mut report, q4, params, &grid, &eval_grid)?;
    let spec = ComboSpec::difference(q4.clone());
    let pp = profile_params(params, TestFamily::BergmanF, params.space()?, BasisSpace::Bergman { alpha }, q, params.test_order());
    let tf = profile_section(&mut report, "test_functions", &spec, &pp, &grid)?;
    let check = CrossCheck::equivalence("measures~test_functions", vec![side("measures", measures_v.as_str()), side("test_functions", tf.as_str())]);
    let overall = settle(&check);
    report.cross_checks.push(check);
    report.verdict("operator", overall, &["measures".into(), "test_functions".into()]);
    report.provenance = params.provenance(Some(Branch::BelowDiagonal));
    Ok(report)
}

/// Schatten class `S_p(A^2_alpha)` membership of `C_{u,phi} - C_{v,psi}`:
/// `L^{p/2}(dλ)` norms of the averaging functions, kernel integrals, the
/// matrix spectrum and, for `p = 2`, the Hilbert–Schmidt integral.
pub fn evaluate_schatten(q4: &SymbolQuadruple, schatten_p: f64, params: &CriterionParams) -> Result<Report> {
    evaluate_schatten_combo(&ComboSpec::difference(q4.clone()), schatten_p, params)
}

pub fn evaluate_schatten_combo(spec: &ComboSpec, schatten_p: f64, params: &CriterionParams) -> Result<Report> {
    if !(schatten_p > 0.0) || !schatten_p.is_finite() {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be positive, got {schatten_p}")));
    }
    params.validate(Branch::Schatten)?;
    let q4 = &spec.symbols;
    let alpha = params.alpha;
    let beta = params.beta_for(Branch::Schatten);
    let grid = params.grid.build(alpha)?;
    let eval_grid = params.eval_grid.build(alpha)?;
    let mut report = Report::new(
        "schatten",
        params_json(q4, params, json!({ "beta": beta, "schatten_p": schatten_p, "a": [spec.a.re, spec.a.im], "b": [spec.b.re, spec.b.im] })),
    );
    let scaled = q4_scaled(spec)?;
    let measures = PullbackMeasure::quartet(&scaled, 2.0, beta, alpha)?;
    let s = schatten_p / 2.0;
    let norms: Vec<Result<_>> =
        measures.par_iter().map(|m| averaging_lp_norm(m, params.r, s, Measure::Lambda, &eval_grid, &grid)).collect();
    let mut m_verdicts = Vec::new();
    for (name, n) in MEASURE_NAMES.iter().zip(norms) {
        let n = n?;
        let flags: &[&str] = if n.divergent { &["tail"] } else { &[] };
        report.quantity(format!("{name}.lambda_norm"), n.value, flags);
        report.quantity(format!("{name}.tail_fraction"), n.tail_fraction, flags);
        let v = if n.divergent { DIVERGENT } else { FINITE };
        report.verdict(*name, v, &[format!("{name}.lambda_norm"), format!("{name}.tail_fraction")]);
        m_verdicts.push(v);
    }
    let measures_v = combine_finiteness(&m_verdicts);
    report.verdict("measures", measures_v, &MEASURE_NAMES.map(String::from));

    let mut rkt_verdicts = Vec::new();
    for n in 0..=1usize {
        let r = rkt_integral(spec, schatten_p, n, &eval_grid)?;
        let name = format!("kernel_integral_n{n}");
        let flags: &[&str] = if r.verdict == Finiteness::DivergentLooking { &["tail"] } else { &[] };
        report.quantity(format!("{name}.root"), r.root(), flags);
        report.quantity(format!("{name}.tail_fraction"), r.tail_fraction, flags);
        let v = finiteness_str(r.verdict);
        report.verdict(&name, v, &[format!("{name}.root"), format!("{name}.tail_fraction")]);
        rkt_verdicts.push((name, v));
    }

    let t = combo_matrix(spec, alpha, params.truncation)?;
    let sv = singular_values(&t)?;
    let (fit, spec_verdict) = spectrum_section(&mut report, "spectrum", &t, &params.tol, contact(q4))?;
    let sp_norm = sv.schatten_norm(schatten_p)?;
    report.quantity("spectrum.schatten_norm", sp_norm, &[]);
    let member = match (spec_verdict, fit.in_schatten(schatten_p)) {
        (Verdict::Indeterminate, _) | (_, None) => INDETERMINATE,
        (_, Some(true)) => FINITE,
        (_, Some(false)) => DIVERGENT,
    };
    report.verdict("matrix_membership", member, &["spectrum.power_exponent".into(), "spectrum.mid_ratio".into()]);

    let mut sides = vec![side("matrix_membership", member)];
    if schatten_p == 2.0 {
        let hs = hs_norm_integral_combo(spec, alpha, &grid)?;
        let fro = frobenius_sq(&t);
        let flags: &[&str] = if hs.divergent { &["tail"] } else { &[] };
        report.quantity("hs_integral", hs.value, flags);
        report.quantity("hs_integral.tail_fraction", hs.tail_fraction, flags);
        report.quantity("frobenius_sq", fro, &[]);
        let rel = (hs.value - fro).abs() / fro.max(1e-12);
        report.quantity("hs_relative_difference", rel, &[]);
        let v = if hs.divergent { DIVERGENT } else { FINITE };
        report.verdict("hs_integral", v, &["hs_integral".into(), "hs_integral.tail_fraction".into()]);
        sides.push(side("hs_integral", v));
    }
    if schatten_p >= 2.0 {
        let mut all = vec![side("measures", measures_v)];
        all.extend(rkt_verdicts.iter().map(|(n, v)| side(n, v)));
        all.extend(sides);
        let check = CrossCheck::equivalence("measures~kernel_integrals~matrix", all);
        let overall = settle(&check);
        report.cross_checks.push(check);
        report.verdict("operator", overall, &["measures".into(), "matrix_membership".into()]);
    } else {
        // Below p = 2 the measure condition is only sufficient.
        report.cross_checks.push(CrossCheck::implication(
            "measures=>matrix (sufficient-only)",
            side("measures", measures_v),
            side("matrix_membership", member),
            FINITE,
            FINITE,
        ));
        if sides.len() > 1 {
            report.cross_checks.push(CrossCheck::equivalence("matrix~hs_integral", sides.clone()));
        }
        report.verdict("operator", member, &["matrix_membership".into()]);
    }
    report.provenance = params.provenance(Some(Branch::Schatten));
    Ok(report)
}

/// Quadruple whose measures describe `a C_{u,phi} + b C_{v,psi}` up to the
/// signs that the measures ignore: weights `a u` and `-b v`.
fn q4_scaled(spec: &ComboSpec) -> Result<SymbolQuadruple> {
    let q = &spec.symbols;
    SymbolQuadruple::new(q.u.scale(spec.a), q.v.scale(-spec.b), q.phi.clone(), q.psi.clone())
}

/// Randomized-sign atom test for `q < p`: the largest observed
/// `||D H_c||_{A^q_alpha} / ||c||_{l^p}` over random coefficient vectors.
pub fn evaluate_atom_test(q4: &SymbolQuadruple, params: &CriterionParams, trials: usize) -> Result<Report> {
    params.validate(Branch::BelowDiagonal)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let (alpha, p, q) = (params.alpha, params.p, params.q);
    let sp = params.space()?;
    let grid = params.grid.build(alpha)?;
    let lattice = build_lattice(params.r, params.atom_radius)?;
    let order = params.order.unwrap_or_else(|| default_order_atom(alpha, p));
    let mut report = Report::new(
        "atom-test",
        params_json(q4, params, json!({ "trials": trials, "lattice_points": lattice.len(), "order": order })),
    );
    let spec = ComboSpec::difference(q4.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let coeffs: Vec<Vec<Complex64>> = (0..4 * trials)
        .map(|_| {
            (0..lattice.len())
                .map(|_| {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    Complex64::new(sign * rng.gen_range(0.0..1.0f64), 0.0)
                })
                .collect()
        })
        .collect();
    let zero = spec.is_trivially_zero();
    let mut from = Vec::new();
    let mut stable = true;
    for i in 0..=1usize {
        let ratios: Vec<Result<f64>> = coeffs
            .par_iter()
            .map(|c| {
                if zero {
                    return Ok(0.0);
                }
                let cp: f64 = c.iter().map(|x| x.norm().powf(p)).sum::<f64>().powf(1.0 / p);
                let h = AtomSum::new(&lattice, c, order, i, sp)?;
                let ev = |w: Complex64| h.eval(w);
                let n = analytic_norm(|z| spec.apply(&ev, z), alpha, q, &grid)?;
                Ok(if cp > 0.0 { n.value / cp } else { 0.0 })
            })
            .collect();
        let ratios = ratios.into_iter().collect::<Result<Vec<f64>>>()?;
        let small = ratios[..trials].iter().cloned().fold(0.0, f64::max);
        let large = ratios.iter().cloned().fold(0.0, f64::max);
        report.quantity(format!("i{i}.max_ratio_{trials}"), small, &[]);
        report.quantity(format!("i{i}.max_ratio_{}", 4 * trials), large, &[]);
        from.push(format!("i{i}.max_ratio_{trials}"));
        from.push(format!("i{i}.max_ratio_{}", 4 * trials));
        if large > 2.0 * small && large > 0.0 {
            stable = false;
        }
    }
    let v = if stable { "bounded-looking" } else { INDETERMINATE };
    report.verdict("operator", v, &from);
    report.provenance = params.provenance(None);
    Ok(report)
}

/// Compactness of `C_{u,phi} - C_psi` on `H^2` against compactness of
/// `C_{u',phi}: H^2 -> A^2_1` together with `C_{u phi',phi} - C_{psi',psi}` on `A^2_1`.
pub fn evaluate_hardy(u: &AnalyticSymbol, phi: &AnalyticSymbol, psi: &AnalyticSymbol, params: &CriterionParams) -> Result<Report> {
    let q4 = SymbolQuadruple::new(u.clone(), AnalyticSymbol::one(), phi.clone(), psi.clone())?;
    let mut report = Report::new("hardy", json!({ "symbols": quadruple_json(&q4) }));
    let m = params.truncation;

    // H^2 side.
    let h2 = combo_matrix_between(&ComboSpec::difference(q4.clone()), BasisSpace::Hardy, BasisSpace::Hardy, m)?;
    let (_, h2_spec) = spectrum_section(&mut report, "hardy_spectrum", &h2, &params.tol, contact(&q4))?;
    let grid0 = params.grid.build(0.0)?;
    let h_sp = SpaceParams::new(0.0, 2.0, Some(2.0))?;
    let order = default_order_hardy(2.0);
    let pp = profile_params(params, TestFamily::HardyG, h_sp, BasisSpace::Hardy, 2.0, order);
    let h2_tf = profile_section(&mut report, "hardy_test_functions", &ComboSpec::difference(q4.clone()), &pp, &grid0)?;
    let check_h = CrossCheck::equivalence(
        "hardy_test_functions~hardy_spectrum",
        vec![side("hardy_test_functions", h2_tf.as_str()), side("hardy_spectrum", h2_spec.as_str())],
    );
    let h2_v = settle(&check_h);
    report.cross_checks.push(check_h);
    report.verdict("hardy_side", h2_v.as_str(), &["hardy_test_functions".into(), "hardy_spectrum".into()]);

    // C_{u',phi}: H^2 -> A^2_1 by Hardy test functions and its matrix.
    let du = u.derivative().with_role(Role::Weight);
    let deriv = ComboSpec { a: ONE, b: ZERO, symbols: SymbolQuadruple::new(du.clone(), AnalyticSymbol::zero(), phi.clone(), phi.clone())? };
    let grid1 = params.grid.build(1.0)?;
    let pp = profile_params(params, TestFamily::HardyG, h_sp, BasisSpace::Bergman { alpha: 1.0 }, 2.0, order);
    let tf_v = profile_section(&mut report, "derivative_test_functions", &deriv, &pp, &grid1)?;
    let dm = wco_matrix(&du, phi, BasisSpace::Hardy, BasisSpace::Bergman { alpha: 1.0 }, m)?;
    let (_, dm_v) = spectrum_section(&mut report, "derivative_spectrum", &dm, &params.tol, contact_of(&[(&du, phi)]))?;
    let check_d = CrossCheck::equivalence(
        "derivative_test_functions~derivative_spectrum",
        vec![side("derivative_test_functions", tf_v.as_str()), side("derivative_spectrum", dm_v.as_str())],
    );
    let deriv_v = settle(&check_d);
    report.cross_checks.push(check_d);

    // C_{u phi', phi} - C_{psi', psi} on A^2_1.
    let inner = SymbolQuadruple::new(u.mul(&phi.derivative()), psi.derivative(), phi.clone(), psi.clone())?;
    let inner_params = CriterionParams { alpha: 1.0, p: 2.0, q: 2.0, beta: None, order: None, ..params.clone() };
    let inner_report = evaluate_carleson(&inner, &inner_params)?;
    let inner_v = inner_report.verdict_of("operator").unwrap_or(INDETERMINATE).to_string();
    report.absorb("weighted_bergman", inner_report);

    let to_compact = |v: &str| match v {
        "compact-looking" => "compact-looking",
        INDETERMINATE => INDETERMINATE,
        _ => "non-compact-looking",
    };
    let joint = match (to_compact(&deriv_v), to_compact(&inner_v)) {
        ("compact-looking", "compact-looking") => "compact-looking",
        ("non-compact-looking", _) | (_, "non-compact-looking") => "non-compact-looking",
        _ => INDETERMINATE,
    };
    report.verdict("derivative_side", deriv_v.as_str(), &["derivative_test_functions".into(), "derivative_spectrum".into()]);
    report.verdict("bergman_side", inner_v.as_str(), &["weighted_bergman.operator".into()]);
    report.verdict("joint", joint, &["derivative_side".into(), "bergman_side".into()]);
    let check = CrossCheck::equivalence("hardy~joint", vec![side("hardy_side", to_compact(h2_v.as_str())), side("joint", joint)]);
    let overall = settle(&check);
    report.cross_checks.push(check);
    report.verdict("operator", overall, &["hardy_side".into(), "joint".into()]);
    report.provenance = params.provenance(None);
    Ok(report)
}

/// Schatten membership of `a C_phi + b C_psi` against that of the difference.
pub fn evaluate_linear_sum(a: Complex64, b: Complex64, q4: &SymbolQuadruple, schatten_p: f64, params: &CriterionParams) -> Result<Report> {
    if !(schatten_p > 0.0) {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be positive, got {schatten_p}")));
    }
    SpaceParams::hilbert(params.alpha)?;
    let alpha = params.alpha;
    let m = params.truncation;
    let unweighted = q4.u == AnalyticSymbol::one() && q4.v == AnalyticSymbol::one();
    let mut report = Report::new(
        "linear-sum",
        params_json(
            q4,
            params,
            json!({ "a": [a.re, a.im], "b": [b.re, b.im], "schatten_p": schatten_p, "bounded_valence": params.bounded_valence }),
        ),
    );
    let membership = |report: &mut Report, name: &str, spec: &ComboSpec| -> Result<&'static str> {
        let t = combo_matrix(spec, alpha, m)?;
        let (fit, v) = spectrum_section(report, name, &t, &params.tol, contact(&spec.symbols))?;
        let sv = singular_values(&t)?;
        report.quantity(format!("{name}.schatten_norm"), sv.schatten_norm(schatten_p)?, &[]);
        let member = match (v, fit.in_schatten(schatten_p)) {
            (Verdict::Indeterminate, _) | (_, None) => INDETERMINATE,
            (_, Some(true)) => FINITE,
            (_, Some(false)) => DIVERGENT,
        };
        report.verdict(format!("{name}.membership"), member, &[format!("{name}.power_exponent")]);
        Ok(member)
    };
    let combo = membership(&mut report, "combination", &ComboSpec { a, b, symbols: q4.clone() })?;
    let diff = membership(&mut report, "difference", &ComboSpec::difference(q4.clone()))?;
    let single = |s: &AnalyticSymbol| ComboSpec { a: ONE, b: ZERO, symbols: SymbolQuadruple { u: q4.u.clone(), v: AnalyticSymbol::zero(), phi: s.clone(), psi: s.clone() } };
    let first = membership(&mut report, "first", &single(&q4.phi))?;
    let second = membership(&mut report, "second", &single(&q4.psi))?;
    let cancels = (a + b).norm() <= 1e-12 * (a.norm() + b.norm()).max(1e-300);
    report.quantity("a_plus_b", (a + b).norm(), &[]);
    let hypotheses = unweighted && first == DIVERGENT && second == DIVERGENT;
    if hypotheses {
        let predicted = if cancels { diff } else { DIVERGENT };
        report.cross_checks.push(CrossCheck::equivalence(
            "combination~(a+b=0 and difference)",
            vec![side("combination", combo), side("prediction", predicted)],
        ));
    }
    let flags: Vec<String> = [
        (!unweighted).then(|| "weighted".to_string()),
        (!hypotheses).then(|| "singleton-hypothesis-not-met".to_string()),
        params.bounded_valence.then(|| "bounded-valence-asserted".to_string()),
    ]
    .into_iter()
    .flatten()
    .collect();
    report.verdict("hypotheses", if hypotheses { "met" } else { "not-met" }, &flags);
    report.verdict("operator", combo, &["combination.membership".into()]);
    report.provenance = params.provenance(None);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(u: &[f64], v: &[f64], phi: &[f64], psi: &[f64]) -> SymbolQuadruple {
        SymbolQuadruple::new(
            AnalyticSymbol::poly_real(u, Role::Weight),
            AnalyticSymbol::poly_real(v, Role::Weight),
            AnalyticSymbol::poly_real(phi, Role::SelfMap),
            AnalyticSymbol::poly_real(psi, Role::SelfMap),
        )
        .unwrap()
    }

    fn light() -> CriterionParams {
        CriterionParams {
            grid: GridSpec { radial: 32, angular: 64 },
            eval_grid: GridSpec { radial: 16, angular: 16 },
            truncation: 60,
            sup_radius: 0.95,
            angles: 4,
            ..Default::default()
        }
    }

    #[test]
    fn hypotheses_are_enforced() {
        let p = CriterionParams { p: 2.0, q: 1.0, ..light() };
        let e = p.validate(Branch::Carleson).unwrap_err().to_string();
        assert!(e.contains("0<p<=q<∞"), "{e}");
        let p = CriterionParams { p: 1.0, q: 2.0, ..light() };
        assert!(p.validate(Branch::BelowDiagonal).unwrap_err().to_string().contains("0<q<p<∞"));
        let p = CriterionParams { beta: Some(1.5), ..light() };
        assert!(p.validate(Branch::Carleson).unwrap_err().to_string().contains("(q/p)(α+2)"));
        assert!(p.validate(Branch::Schatten).unwrap_err().to_string().contains("2(α+2)"));
        assert!(light().validate(Branch::Carleson).is_ok());
        assert_eq!(light().beta_for(Branch::Schatten), 4.0);
    }

    #[test]
    fn zero_difference_is_compact_everywhere() {
        let q = quad(&[1.0], &[1.0], &[0.0, 0.5], &[0.0, 0.5]);
        let r = evaluate_carleson(&q, &light()).unwrap();
        assert_eq!(r.verdict_of("operator"), Some("compact-looking"));
        assert!(r.coherent());
        let r = evaluate_schatten(&q, 2.0, &light()).unwrap();
        assert_eq!(r.get("spectrum.schatten_norm"), Some(0.0));
        assert_eq!(r.verdict_of("operator"), Some(FINITE));
    }

    #[test]
    fn dilation_is_compact() {
        let q = quad(&[1.0], &[0.0], &[0.0, 0.5], &[0.0]);
        let r = evaluate_carleson(&q, &light()).unwrap();
        assert_eq!(r.verdict_of("measures"), Some("compact-looking"));
        assert_eq!(r.verdict_of("operator"), Some("compact-looking"), "{}", r.summary());
        let r = evaluate_schatten(&q, 2.0, &light()).unwrap();
        assert!((r.get("frobenius_sq").unwrap() - 4.0 / 3.0).abs() < 1e-10);
        assert!((r.get("hs_integral").unwrap() - 4.0 / 3.0).abs() < 1e-3);
        assert!(r.coherent(), "{}", r.summary());
    }

    #[test]
    fn identity_minus_near_identity_is_not_compact() {
        let q = quad(&[1.0], &[1.0], &[0.0, 1.0], &[0.0, 0.99]);
        let r = evaluate_carleson(&q, &CriterionParams::default()).unwrap();
        assert_eq!(r.verdict_of("operator"), Some("bounded-non-compact-looking"), "{}", r.summary());
        assert!(r.coherent());
    }

    #[test]
    fn embedding_below_the_diagonal_is_compact() {
        let q = quad(&[1.0], &[0.0], &[0.0, 1.0], &[0.0]);
        let p = CriterionParams { p: 4.0, q: 2.0, ..light() };
        let r = evaluate_below_diagonal(&q, &p).unwrap();
        assert_eq!(r.verdict_of("measures"), Some("compact-looking"), "{}", r.summary());
        assert_eq!(r.verdict_of("operator"), Some("compact-looking"), "{}", r.summary());
    }
}
