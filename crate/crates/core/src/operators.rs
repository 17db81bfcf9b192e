//! Truncated matrices of weighted composition operators in monomial bases,
//! their singular values and Schatten norms, and the closed-form
//! Hilbert–Schmidt integral.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{one_minus_sq, DiskPoint};
use crate::quadrature::{integrate, Measure, QuadGrid};
use crate::spaces::{analytic_norm, hardy_norm_analytic, BasisSpace, NormMethod, SpaceParams, TestFamily, TestFunctionSpec};
use crate::symbols::{series_mul, AnalyticSymbol, SymbolQuadruple};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default truncation order.
pub const DEFAULT_TRUNCATION: usize = 200;

/// `P_M T P_M` in the orthonormal monomial bases of source and target.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub matrix: DMatrix<Complex64>,
    pub source: BasisSpace,
    pub target: BasisSpace,
    pub truncation: usize,
    /// Bound on the target norm of the part of any column dropped by the truncation.
    pub tail_estimate: f64,
}

/// `a C_{u,phi} + b C_{v,psi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComboSpec {
    pub a: Complex64,
    pub b: Complex64,
    pub symbols: SymbolQuadruple,
}

impl ComboSpec {
    /// The difference `C_{u,phi} - C_{v,psi}`.
    pub fn difference(symbols: SymbolQuadruple) -> Self {
        Self { a: ONE, b: -ONE, symbols }
    }

    /// `(D f)(z)` given a function `f` analytic on the closed disk.
    pub fn apply<F: Fn(Complex64) -> Complex64>(&self, f: &F, z: Complex64) -> Complex64 {
        let q = &self.symbols;
        let mut out = ZERO;
        if self.a != ZERO {
            out += self.a * q.u.eval(z) * f(q.phi.eval(z));
        }
        if self.b != ZERO {
            out += self.b * q.v.eval(z) * f(q.psi.eval(z));
        }
        out
    }

    /// True when the operator is the zero operator by construction.
    pub fn is_trivially_zero(&self) -> bool {
        let q = &self.symbols;
        let first_zero = self.a == ZERO || q.u.is_zero();
        let second_zero = self.b == ZERO || q.v.is_zero();
        let cancels = self.a + self.b == ZERO && q.u == q.v && q.phi == q.psi;
        (first_zero && second_zero) || cancels
    }

    /// The same operator with every weight scaled by `c`.
    pub fn scaled_weights(&self, c: Complex64) -> Self {
        let mut s = self.clone();
        s.symbols.u = s.symbols.u.scale(c);
        s.symbols.v = s.symbols.v.scale(c);
        s
    }
}

/// Cauchy-type bound on `sum_{m >= len} |[u phi^n]_m|` for every `n < cols`.
fn column_tail_bound(u: &AnalyticSymbol, phi: &AnalyticSymbol, cols: usize, len: usize) -> f64 {
    if let (Some(du), Some(dp)) = (u.degree(), phi.degree()) {
        if du + dp * cols.saturating_sub(1) < len {
            return 0.0;
        }
    }
    let q = u.geometric_ratio().max(phi.geometric_ratio());
    let pole = if q > 0.0 { 1.0 / q } else { f64::INFINITY };
    let samples = 512;
    let mut best = f64::INFINITY;
    for &r in &[1.02, 1.05, 1.1, 1.25, 1.5, 2.0] {
        if r >= 0.5 * (1.0 + pole) {
            continue;
        }
        let (mut su, mut sp) = (0.0f64, 0.0f64);
        for j in 0..samples {
            let z = Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / samples as f64);
            su = su.max(u.eval(z).norm());
            sp = sp.max(phi.eval(z).norm());
        }
        // Sampling slack on the circle maxima.
        su *= 1.05;
        sp *= 1.05;
        let worst_power = sp.max(1.0).powi(cols.saturating_sub(1) as i32);
        let b = su * worst_power * r.powi(-(len as i32)) / (1.0 - 1.0 / r);
        best = best.min(b);
    }
    best
}

/// Matrix of `C_{u,phi}` from `source` to `target`.
///
/// Column `n` holds the Taylor coefficients of `u phi^n`, entry `(m, n)` is
/// `[u phi^n]_m ||z^m||_target / ||z^n||_source`.
pub fn wco_matrix(
    u: &AnalyticSymbol,
    phi: &AnalyticSymbol,
    source: BasisSpace,
    target: BasisSpace,
    truncation: usize,
) -> Result<TruncatedOperator> {
    if truncation == 0 {
        return Err(Error::InvalidParameter("truncation order must be positive".into()));
    }
    let m = truncation;
    // Rows m..2m are computed exactly and feed the tail estimate.
    let ext = 2 * m;
    let uc = u.taylor_coeffs(ext);
    let pc = phi.taylor_coeffs(ext);
    let src: Vec<f64> = (0..m).map(|n| source.monomial_norm_sq(n).sqrt()).collect();
    let tgt: Vec<f64> = (0..ext).map(|k| target.monomial_norm_sq(k).sqrt()).collect();
    let mut matrix = DMatrix::<Complex64>::zeros(m, m);
    let mut col = uc;
    let mut exact_tail = 0.0f64;
    for n in 0..m {
        for row in 0..m {
            matrix[(row, n)] = col[row] * (tgt[row] / src[n]);
        }
        let dropped: f64 = (m..ext).map(|k| col[k].norm_sqr() * tgt[k] * tgt[k]).sum::<f64>().sqrt() / src[n];
        exact_tail = exact_tail.max(dropped);
        if n + 1 < m {
            col = series_mul(&col, &pc, ext);
        }
    }
    let far = column_tail_bound(u, phi, m, ext) / src[m - 1];
    Ok(TruncatedOperator { matrix, source, target, truncation: m, tail_estimate: exact_tail + far })
}

/// [`wco_matrix`] that fails when the tail estimate exceeds `tol`.
pub fn wco_matrix_checked(
    u: &AnalyticSymbol,
    phi: &AnalyticSymbol,
    source: BasisSpace,
    target: BasisSpace,
    truncation: usize,
    tol: f64,
) -> Result<TruncatedOperator> {
    let t = wco_matrix(u, phi, source, target, truncation)?;
    if t.tail_estimate > tol {
        return Err(Error::TruncationTail { tail: t.tail_estimate, tol });
    }
    Ok(t)
}

/// `a W(u, phi) + b W(v, psi)` between the given bases.
pub fn combo_matrix_between(
    spec: &ComboSpec,
    source: BasisSpace,
    target: BasisSpace,
    truncation: usize,
) -> Result<TruncatedOperator> {
    let q = &spec.symbols;
    let (w1, w2) = rayon::join(
        || wco_matrix(&q.u, &q.phi, source, target, truncation),
        || wco_matrix(&q.v, &q.psi, source, target, truncation),
    );
    let (w1, w2) = (w1?, w2?);
    let matrix = w1.matrix.map(|x| x * spec.a) + w2.matrix.map(|x| x * spec.b);
    Ok(TruncatedOperator {
        matrix,
        source,
        target,
        truncation,
        tail_estimate: spec.a.norm() * w1.tail_estimate + spec.b.norm() * w2.tail_estimate,
    })
}

/// `a C_{u,phi} + b C_{v,psi}` on `A^2_alpha`.
pub fn combo_matrix(spec: &ComboSpec, alpha: f64, truncation: usize) -> Result<TruncatedOperator> {
    SpaceParams::hilbert(alpha)?;
    let b = BasisSpace::Bergman { alpha };
    combo_matrix_between(spec, b, b, truncation)
}

/// `C_{u,phi}` from `H^2` to `A^2_1`.
pub fn hardy_to_bergman_matrix(u: &AnalyticSymbol, phi: &AnalyticSymbol, truncation: usize) -> Result<TruncatedOperator> {
    wco_matrix(u, phi, BasisSpace::Hardy, BasisSpace::Bergman { alpha: 1.0 }, truncation)
}

/// Nonincreasing singular values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
}

pub fn singular_values(t: &TruncatedOperator) -> Result<SingularSpectrum> {
    singular_values_of(&t.matrix)
}

pub fn singular_values_of(m: &DMatrix<Complex64>) -> Result<SingularSpectrum> {
    if m.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let svd = m.clone().try_svd(false, false, 1e-15, 10_000).ok_or_else(|| {
        let fro = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        Error::Numerical(format!("SVD did not converge ({}x{} matrix, Frobenius norm {fro:e})", m.nrows(), m.ncols()))
    })?;
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(SingularSpectrum { values })
}

impl SingularSpectrum {
    pub fn operator_norm(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `(sum s_k^p)^{1/p}`, computed relative to the largest value.
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        schatten_norm(self, p)
    }

    /// Least-squares decay fits of the nonzero singular values.
    pub fn decay(&self) -> DecayFit {
        DecayFit::from_values(&self.values)
    }
}

pub fn schatten_norm(s: &SingularSpectrum, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be positive, got {p}")));
    }
    let top = s.operator_norm();
    if top == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = s.values.iter().map(|&x| (x / top).powf(p)).sum();
    Ok(top * sum.powf(1.0 / p))
}

/// Squared Frobenius norm.
pub fn frobenius_sq(t: &TruncatedOperator) -> f64 {
    t.matrix.iter().map(|x| x.norm_sqr()).sum()
}

/// Compactness reading of a truncated spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CompactLooking,
    BoundedNonCompactLooking,
    UnboundedLooking,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::CompactLooking => "compact-looking",
            Verdict::BoundedNonCompactLooking => "bounded-non-compact-looking",
            Verdict::UnboundedLooking => "unbounded-looking",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

/// Singular values below this fraction of the largest are treated as zero.
pub const SPECTRUM_FLOOR: f64 = 1e-13;
/// Absolute size below which an operator is treated as zero.
pub const ZERO_OPERATOR: f64 = 1e-12;

/// Decay classification of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `s_0`.
    pub top: f64,
    /// `s_{n/2} / s_0` with `n` the number of values above the floor.
    pub mid_ratio: f64,
    /// Slope of `ln s_k` against `k` over the upper half of the nonzero values.
    pub exponential_rate: f64,
    /// Slope of `-ln s_k` against `ln k` over the upper half of the nonzero values.
    pub power_exponent: f64,
    /// Number of values above the floor.
    pub nonzero: usize,
    pub len: usize,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

impl DecayFit {
    pub fn from_values(values: &[f64]) -> Self {
        let top = values.first().copied().unwrap_or(0.0);
        let len = values.len();
        if top <= 0.0 {
            return Self { top: 0.0, mid_ratio: 0.0, exponential_rate: f64::INFINITY, power_exponent: f64::INFINITY, nonzero: 0, len };
        }
        let nonzero = values.iter().take_while(|&&x| x > SPECTRUM_FLOOR * top).count();
        let mid_ratio = values.get(nonzero / 2).copied().unwrap_or(0.0) / top;
        let lo = nonzero / 2;
        let idx: Vec<usize> = (lo.max(1)..nonzero).collect();
        let (exponential_rate, power_exponent) = if idx.len() >= 2 {
            let ks: Vec<f64> = idx.iter().map(|&k| k as f64).collect();
            let lks: Vec<f64> = idx.iter().map(|&k| (k as f64).ln()).collect();
            let ls: Vec<f64> = idx.iter().map(|&k| values[k].ln()).collect();
            (-slope(&ks, &ls), -slope(&lks, &ls))
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Self { top, mid_ratio, exponential_rate, power_exponent, nonzero, len }
    }

    pub fn is_zero(&self) -> bool {
        self.top < ZERO_OPERATOR
    }

    /// At most `M/8` values above the floor.
    pub fn finite_rank(&self) -> bool {
        self.nonzero <= self.len / 8
    }

    /// Compactness verdict from the spectrum shape.
    pub fn verdict(&self) -> Verdict {
        if self.is_zero() || self.finite_rank() {
            return Verdict::CompactLooking;
        }
        if self.mid_ratio <= 0.05 {
            Verdict::CompactLooking
        } else if self.mid_ratio >= 0.2 {
            Verdict::BoundedNonCompactLooking
        } else {
            Verdict::Indeterminate
        }
    }

    /// Whether the decay pattern looks `l^p`-summable.
    pub fn in_schatten(&self, p: f64) -> Option<bool> {
        match self.verdict() {
            Verdict::BoundedNonCompactLooking | Verdict::UnboundedLooking => return Some(false),
            Verdict::Indeterminate => return None,
            Verdict::CompactLooking => {}
        }
        if self.is_zero() || self.finite_rank() || self.exponential_rate > 0.02 {
            return Some(true);
        }
        let g = self.power_exponent * p;
        if g > 1.25 {
            Some(true)
        } else if g < 0.8 {
            Some(false)
        } else {
            None
        }
    }
}

/// Value and diagnostics of the Hilbert–Schmidt integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsIntegral {
    pub value: f64,
    pub tail_fraction: f64,
    /// Set when the outer ring carries a dominant share of the integral.
    pub divergent: bool,
}

/// Tail fraction above which a λ-type or HS integral is read as divergent.
pub const DIVERGENCE_TAIL: f64 = 0.05;

/// `||a C_{u,phi} + b C_{v,psi}||^2_{HS}` on `A^2_alpha` as the area integral of
/// `|a u|^2 (1-|phi|^2)^{-(2+α)} + |b v|^2 (1-|psi|^2)^{-(2+α)} + 2 Re(a u conj(b v) (1 - conj(psi) phi)^{-(2+α)})`.
pub fn hs_norm_integral_combo(spec: &ComboSpec, alpha: f64, grid: &QuadGrid) -> Result<HsIntegral> {
    if (grid.alpha - alpha).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!("grid built for alpha = {}, need {alpha}", grid.alpha)));
    }
    if spec.is_trivially_zero() {
        return Ok(HsIntegral { value: 0.0, tail_fraction: 0.0, divergent: false });
    }
    let q = &spec.symbols;
    let g = 2.0 + alpha;
    let f = |z: DiskPoint| {
        let au = spec.a * q.u.eval(z);
        let bv = spec.b * q.v.eval(z);
        let ph = q.phi.eval(z);
        let ps = q.psi.eval(z);
        let mut acc = 0.0;
        if au != ZERO {
            acc += au.norm_sqr() * one_minus_sq(ph).powf(-g);
        }
        if bv != ZERO {
            acc += bv.norm_sqr() * one_minus_sq(ps).powf(-g);
        }
        if au != ZERO && bv != ZERO {
            let cross = au * bv.conj() * (-g * (ONE - ps.conj() * ph).ln()).exp();
            acc += 2.0 * cross.re;
        }
        Complex64::new(acc, 0.0)
    };
    let i = integrate(f, grid, Measure::AAlpha, None)?;
    Ok(HsIntegral { value: i.value.re.max(0.0), tail_fraction: i.tail_fraction, divergent: i.tail_fraction > DIVERGENCE_TAIL })
}

/// `||C_{u,phi} - C_{v,psi}||^2_{HS}` on `A^2_alpha`.
pub fn hs_norm_integral(q: &SymbolQuadruple, alpha: f64, grid: &QuadGrid) -> Result<HsIntegral> {
    hs_norm_integral_combo(&ComboSpec::difference(q.clone()), alpha, grid)
}

/// Test-function norms for one `(radius, i)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub radius: f64,
    pub i: usize,
    /// Largest norm over the sampled angles.
    pub value: f64,
    pub angle: f64,
    pub tail_warning: bool,
}

/// Shape of a profile as the radius tends to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Vanishing,
    Bounded,
    Growing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub rows: Vec<ProfileRow>,
    /// Per-`i` trend.
    pub trends: Vec<Trend>,
    /// Per-`i` fitted exponent `e` in `value ~ (1 - r)^e` over the last three radii.
    pub exponents: Vec<f64>,
    pub max: f64,
    pub tail_warning: bool,
}

impl Profile {
    /// Overall trend: growing beats bounded beats vanishing.
    pub fn trend(&self) -> Trend {
        if self.trends.contains(&Trend::Growing) {
            Trend::Growing
        } else if self.trends.contains(&Trend::Bounded) {
            Trend::Bounded
        } else {
            Trend::Vanishing
        }
    }

    pub fn verdict(&self) -> Verdict {
        match self.trend() {
            Trend::Vanishing => Verdict::CompactLooking,
            Trend::Bounded => Verdict::BoundedNonCompactLooking,
            Trend::Growing => Verdict::UnboundedLooking,
        }
    }

    /// Largest value at the outermost radius.
    pub fn last_value(&self) -> f64 {
        let r = self.rows.iter().map(|r| r.radius).fold(0.0, f64::max);
        self.rows.iter().filter(|x| x.radius == r).map(|x| x.value).fold(0.0, f64::max)
    }
}

/// Parameters of a test-function profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub family: TestFamily,
    /// Exponents and weight of the source space (for the normalization).
    pub source: SpaceParams,
    /// Weight and exponent of the target Bergman norm.
    pub target: BasisSpace,
    pub target_q: f64,
    pub order: usize,
    pub i_max: usize,
    pub radii: Vec<f64>,
    pub angles: usize,
    /// Relative threshold for "vanishing".
    pub tol_vanish: f64,
}

/// Default radii for profiles.
pub const DEFAULT_RADII: [f64; 7] = [0.5, 0.75, 0.9, 0.95, 0.99, 0.995, 0.999];
/// Exponent magnitude separating a flat profile from a decaying or growing one.
pub const TREND_EXPONENT: f64 = 0.25;

pub(crate) fn classify_trend(values: &[f64], radii: &[f64], max: f64, tol_vanish: f64) -> (Trend, f64) {
    let n = values.len();
    if max <= ZERO_OPERATOR {
        return (Trend::Vanishing, f64::INFINITY);
    }
    let k = n.min(3);
    let last = &values[n - k..];
    let lr = &radii[n - k..];
    if last.iter().all(|&v| v <= tol_vanish * max) {
        return (Trend::Vanishing, f64::INFINITY);
    }
    let xs: Vec<f64> = lr.iter().map(|r| (1.0 - r).ln()).collect();
    let ys: Vec<f64> = last.iter().map(|v| v.max(1e-300).ln()).collect();
    let e = slope(&xs, &ys);
    let decreasing = last.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    if e >= TREND_EXPONENT && decreasing {
        (Trend::Vanishing, e)
    } else if e <= -TREND_EXPONENT && !saturating(last, lr) {
        (Trend::Growing, e)
    } else {
        (Trend::Bounded, e)
    }
}

/// Candidate angles: uniform samples plus the directions in which the self-maps
/// come closest to the circle.
/// True when the local growth exponent over the last step has dropped by more
/// than a quarter relative to the step before it.
fn saturating(values: &[f64], radii: &[f64]) -> bool {
    if values.len() < 3 {
        return false;
    }
    let step = |k: usize| (values[k + 1].max(1e-300) / values[k].max(1e-300)).ln() / ((1.0 - radii[k + 1]) / (1.0 - radii[k])).ln();
    let (e1, e2) = (step(0), step(1));
    e2 > 0.75 * e1
}

fn profile_angles(spec: &ComboSpec, count: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..count).map(|k| std::f64::consts::TAU * k as f64 / count as f64).collect();
    for s in [&spec.symbols.phi, &spec.symbols.psi] {
        let (m, z) = s.circle_max(1.0 - 1e-9, 1024);
        if m > 0.9 {
            let w = s.eval(z);
            out.push(w.arg().rem_euclid(std::f64::consts::TAU));
        }
    }
    out
}

/// `max_theta ||(a C_{u,phi} + b C_{v,psi}) f^{[i]}_{r e^{i theta}}||` over the radii.
pub fn testfn_compactness_profile(spec: &ComboSpec, params: &ProfileParams, grid: &QuadGrid) -> Result<Profile> {
    if params.radii.is_empty() || params.radii.windows(2).any(|w| w[1] <= w[0]) || params.radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidParameter("profile radii must be increasing in (0, 1)".into()));
    }
    let angles = profile_angles(spec, params.angles.max(1));
    let mut jobs = Vec::new();
    for i in 0..=params.i_max {
        for &r in &params.radii {
            for &t in &angles {
                jobs.push((i, r, t));
            }
        }
    }
    let zero = spec.is_trivially_zero();
    let results: Vec<Result<(f64, bool)>> = jobs
        .par_iter()
        .map(|&(i, r, t)| {
            if zero {
                return Ok((0.0, false));
            }
            let a = Complex64::from_polar(r, t);
            let f = TestFunctionSpec::new(params.family, a, params.order, i, params.source)?;
            let ev = |w: Complex64| f.eval(w);
            match params.target {
                BasisSpace::Bergman { alpha } => {
                    let n = analytic_norm(|z| spec.apply(&ev, z), alpha, params.target_q, grid)?;
                    Ok((n.value, n.method == NormMethod::Quadrature && n.tail_warning()))
                }
                BasisSpace::Hardy if params.target_q == 2.0 => Ok((hardy_norm_analytic(|z| spec.apply(&ev, z))?, false)),
                BasisSpace::Hardy => Err(Error::InvalidParameter("Hardy-space profiles need q = 2".into())),
            }
        })
        .collect();
    let mut rows = Vec::new();
    let mut idx = 0;
    let mut tail_warning = false;
    for i in 0..=params.i_max {
        for &r in &params.radii {
            let mut best = ProfileRow { radius: r, i, value: f64::NEG_INFINITY, angle: 0.0, tail_warning: false };
            for &t in &angles {
                let (v, w) = results[idx].clone()?;
                idx += 1;
                if v > best.value {
                    best.value = v;
                    best.angle = t;
                }
                best.tail_warning |= w;
            }
            tail_warning |= best.tail_warning;
            rows.push(best);
        }
    }
    let max = rows.iter().map(|r| r.value).fold(0.0, f64::max);
    let mut trends = Vec::new();
    let mut exponents = Vec::new();
    for i in 0..=params.i_max {
        let vals: Vec<f64> = rows.iter().filter(|r| r.i == i).map(|r| r.value).collect();
        let imax = vals.iter().cloned().fold(0.0, f64::max);
        let (t, e) = classify_trend(&vals, &params.radii, imax, params.tol_vanish);
        trends.push(t);
        exponents.push(e);
    }
    Ok(Profile { rows, trends, exponents, max, tail_warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_grid;
    use crate::symbols::Role;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quad(u: &[f64], v: &[f64], phi: &[f64], psi: &[f64]) -> SymbolQuadruple {
        SymbolQuadruple::new(
            AnalyticSymbol::poly_real(u, Role::Weight),
            AnalyticSymbol::poly_real(v, Role::Weight),
            AnalyticSymbol::poly_real(phi, Role::SelfMap),
            AnalyticSymbol::poly_real(psi, Role::SelfMap),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_examples() {
        let b = BasisSpace::Bergman { alpha: 0.0 };
        let t = wco_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::dilation(c(0.5, 0.0)), b, b, 30).unwrap();
        for m in 0..30 {
            for n in 0..30 {
                let want = if m == n { 0.5f64.powi(n as i32) } else { 0.0 };
                assert_abs_diff_eq!(t.matrix[(m, n)].re, want, epsilon = 1e-15);
            }
        }
        assert_eq!(t.tail_estimate, 0.0);
        let id = wco_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::identity(), b, b, 10).unwrap();
        assert_eq!(id.matrix, DMatrix::identity(10, 10));
        let z = wco_matrix(&AnalyticSymbol::zero(), &AnalyticSymbol::identity(), b, b, 10).unwrap();
        assert!(z.matrix.iter().all(|x| *x == ZERO));
    }

    #[test]
    fn combo_examples() {
        let q = quad(&[1.0], &[1.0], &[0.0, 0.5], &[0.0, 0.5]);
        let t = combo_matrix(&ComboSpec::difference(q.clone()), 0.0, 20).unwrap();
        assert!(t.matrix.iter().all(|x| x.norm() == 0.0));
        let sum = combo_matrix(&ComboSpec { a: ONE, b: ONE, symbols: q }, 0.0, 20).unwrap();
        for n in 0..20 {
            assert_abs_diff_eq!(sum.matrix[(n, n)].re, 2.0 * 0.5f64.powi(n as i32), epsilon = 1e-15);
        }
    }

    #[test]
    fn singular_value_examples() {
        let b = BasisSpace::Bergman { alpha: 0.0 };
        let t = wco_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::dilation(c(0.5, 0.0)), b, b, 60).unwrap();
        let s = singular_values(&t).unwrap();
        for (n, v) in s.values.iter().enumerate() {
            assert!((v - 0.5f64.powi(n as i32)).abs() < 1e-14);
        }
        assert_abs_diff_eq!(schatten_norm(&s, 2.0).unwrap().powi(2), 4.0 / 3.0, epsilon = 1e-13);
        let s64 = schatten_norm(&s, 64.0).unwrap();
        assert!((s64 - 1.0).abs() < 0.01);
        let id = wco_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::identity(), b, b, 15).unwrap();
        assert!(singular_values(&id).unwrap().values.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        assert_eq!(schatten_norm(&SingularSpectrum { values: vec![0.0; 4] }, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hardy_to_bergman_examples() {
        let t = hardy_to_bergman_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::identity(), 12).unwrap();
        for n in 0..12 {
            assert_abs_diff_eq!(t.matrix[(n, n)].re, crate::spaces::monomial_norm_sq(n, 1.0).sqrt(), epsilon = 1e-15);
        }
        let r = hardy_to_bergman_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::zero(), 12).unwrap();
        let nonzero_cols: Vec<usize> = (0..12).filter(|&n| r.matrix.column(n).iter().any(|x| x.norm() > 0.0)).collect();
        assert_eq!(nonzero_cols, vec![0]);
    }

    #[test]
    fn lft_tail_decreases() {
        let phi = AnalyticSymbol::lft(c(0.5, 0.0), ZERO, c(-0.3, 0.0), ONE, Role::SelfMap).unwrap();
        let b = BasisSpace::Bergman { alpha: 0.0 };
        let t1 = wco_matrix(&AnalyticSymbol::one(), &phi, b, b, 20).unwrap();
        let t2 = wco_matrix(&AnalyticSymbol::one(), &phi, b, b, 40).unwrap();
        assert!(t1.tail_estimate > t2.tail_estimate);
        assert!(wco_matrix_checked(&AnalyticSymbol::one(), &phi, b, b, 20, 1e-30).is_err());
    }

    #[test]
    fn hs_integral_examples() {
        let g = build_grid(0.0, 48, 64).unwrap();
        let q = quad(&[1.0], &[0.0], &[0.0, 0.5], &[0.0]);
        assert_abs_diff_eq!(hs_norm_integral(&q, 0.0, &g).unwrap().value, 4.0 / 3.0, epsilon = 1e-10);
        let alt = quad(&[1.0], &[1.0], &[0.0, 0.5], &[0.0, -0.5]);
        assert_abs_diff_eq!(hs_norm_integral(&alt, 0.0, &g).unwrap().value, 16.0 / 15.0, epsilon = 1e-10);
        let same = quad(&[1.0, 0.2], &[1.0, 0.2], &[0.1, 0.5], &[0.1, 0.5]);
        assert_abs_diff_eq!(hs_norm_integral(&same, 0.0, &g).unwrap().value, 0.0, epsilon = 1e-12);
        let consts = quad(&[1.0], &[1.0], &[0.0], &[0.0]);
        assert_abs_diff_eq!(hs_norm_integral(&consts, 0.0, &g).unwrap().value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hs_identity_matches_frobenius() {
        for &alpha in &[0.0, 1.5] {
            let g = build_grid(alpha, 64, 128).unwrap();
            let q = quad(&[0.5, 0.3, -0.2], &[1.0, -0.4], &[0.1, 0.3, 0.3], &[-0.2, 0.0, 0.5]);
            let hs = hs_norm_integral(&q, alpha, &g).unwrap().value;
            let fro = frobenius_sq(&combo_matrix(&ComboSpec::difference(q), alpha, 200).unwrap());
            assert!((hs - fro).abs() < 1e-8 * fro, "{hs} vs {fro}");
        }
    }

    #[test]
    fn decay_verdicts() {
        let b = BasisSpace::Bergman { alpha: 0.0 };
        let compact = singular_values(&wco_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::dilation(c(0.5, 0.0)), b, b, 100).unwrap()).unwrap();
        assert_eq!(compact.decay().verdict(), Verdict::CompactLooking);
        assert_eq!(compact.decay().in_schatten(1.0), Some(true));
        let id = singular_values(&wco_matrix(&AnalyticSymbol::one(), &AnalyticSymbol::identity(), b, b, 100).unwrap()).unwrap();
        assert_eq!(id.decay().verdict(), Verdict::BoundedNonCompactLooking);
        assert_eq!(id.decay().in_schatten(2.0), Some(false));
    }

    #[test]
    fn profile_examples() {
        let g = build_grid(0.0, 32, 32).unwrap();
        let sp = SpaceParams::hilbert(0.0).unwrap();
        let params = ProfileParams {
            family: TestFamily::BergmanF,
            source: sp,
            target: BasisSpace::Bergman { alpha: 0.0 },
            target_q: 2.0,
            order: 2,
            i_max: 1,
            radii: DEFAULT_RADII.to_vec(),
            angles: 8,
            tol_vanish: 1e-2,
        };
        let compact = ComboSpec::difference(quad(&[1.0], &[0.0], &[0.0, 0.5], &[0.0]));
        let p = testfn_compactness_profile(&compact, &params, &g).unwrap();
        assert_eq!(p.trend(), Trend::Vanishing, "{p:?}");
        let id = ComboSpec::difference(quad(&[1.0], &[0.0], &[0.0, 1.0], &[0.0]));
        let p = testfn_compactness_profile(&id, &params, &g).unwrap();
        assert_eq!(p.trend(), Trend::Bounded, "{p:?}");
        let zero = ComboSpec::difference(quad(&[1.0], &[1.0], &[0.0, 1.0], &[0.0, 1.0]));
        let p = testfn_compactness_profile(&zero, &params, &g).unwrap();
        assert!(p.rows.iter().all(|r| r.value == 0.0));
    }
}
