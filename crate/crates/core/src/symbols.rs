//! Analytic weights and self-maps of the disk.
//!
//! User-facing symbols are finite Taylor polynomials or linear-fractional maps.
//! Derivatives and products of these are carried as rational functions whose
//! denominators are products of linear factors `c z + d` with `|d| > |c|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_in_disk, pseudo_dist, DiskPoint};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Number of validation circles `|z| = 1 - 2^{-k}`, `k = 1..=VALIDATION_CIRCLES`.
pub const VALIDATION_CIRCLES: u32 = 20;
/// Angular samples per validation circle.
pub const VALIDATION_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Weight,
    SelfMap,
}

/// Stored form of a symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    /// Coefficients `c_0, ..., c_d`.
    Poly(Vec<Complex64>),
    /// `z -> (a z + b) / (c z + d)`.
    Lft { a: Complex64, b: Complex64, c: Complex64, d: Complex64 },
    /// `num(z) / prod_i (c_i z + d_i)`.
    Rational { num: Vec<Complex64>, den: Vec<(Complex64, Complex64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSymbol {
    pub repr: Repr,
    pub role: Role,
}

fn trim(mut c: Vec<Complex64>) -> Vec<Complex64> {
    while c.len() > 1 && c.last() == Some(&ZERO) {
        c.pop();
    }
    if c.is_empty() {
        c.push(ZERO);
    }
    c
}

pub(crate) fn poly_eval(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(ZERO, |acc, &x| acc * z + x)
}

pub(crate) fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return vec![ZERO];
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == ZERO {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Product of two coefficient sequences truncated to `len` terms.
pub(crate) fn series_mul(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == ZERO {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_derivative(c: &[Complex64]) -> Vec<Complex64> {
    if c.len() <= 1 {
        return vec![ZERO];
    }
    c.iter().enumerate().skip(1).map(|(k, &x)| x * k as f64).collect()
}

fn poly_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

fn check_factor(c: Complex64, d: Complex64) -> Result<()> {
    if !(d.norm() > c.norm()) {
        return Err(Error::InvalidParameter(format!(
            "denominator c z + d vanishes on the closed disk (|c| = {}, |d| = {})",
            c.norm(),
            d.norm()
        )));
    }
    Ok(())
}

/// Outcome of self-map validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfMapReport {
    pub passed: bool,
    /// Largest modulus observed on the validation circles.
    pub sup: f64,
    /// Where `sup` was observed.
    pub location: DiskPoint,
    /// First sample (smallest circle) whose modulus exceeds 1, when validation fails.
    pub witness: Option<DiskPoint>,
}

impl AnalyticSymbol {
    pub fn poly(coeffs: Vec<Complex64>, role: Role) -> Self {
        Self { repr: Repr::Poly(trim(coeffs)), role }
    }

    /// Real-coefficient polynomial shorthand.
    pub fn poly_real(coeffs: &[f64], role: Role) -> Self {
        Self::poly(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect(), role)
    }

    pub fn lft(a: Complex64, b: Complex64, c: Complex64, d: Complex64, role: Role) -> Result<Self> {
        check_factor(c, d)?;
        Ok(Self { repr: Repr::Lft { a, b, c, d }, role })
    }

    pub fn rational(num: Vec<Complex64>, den: Vec<(Complex64, Complex64)>, role: Role) -> Result<Self> {
        for &(c, d) in &den {
            check_factor(c, d)?;
        }
        if den.is_empty() {
            return Ok(Self::poly(num, role));
        }
        Ok(Self { repr: Repr::Rational { num: trim(num), den }, role })
    }

    pub fn constant(c: Complex64) -> Self {
        Self::poly(vec![c], Role::Weight)
    }

    pub fn zero() -> Self {
        Self::constant(ZERO)
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// `z -> z` as a self-map.
    pub fn identity() -> Self {
        Self::poly(vec![ZERO, ONE], Role::SelfMap)
    }

    /// `z -> c z` as a self-map.
    pub fn dilation(c: Complex64) -> Self {
        Self::poly(vec![ZERO, c], Role::SelfMap)
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Numerator and denominator factors of the rational form.
    pub fn as_rational(&self) -> (Vec<Complex64>, Vec<(Complex64, Complex64)>) {
        match &self.repr {
            Repr::Poly(c) => (c.clone(), Vec::new()),
            Repr::Lft { a, b, c, d } => (vec![*b, *a], vec![(*c, *d)]),
            Repr::Rational { num, den } => (num.clone(), den.clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Poly(c) => c.iter().all(|&x| x == ZERO),
            Repr::Lft { a, b, .. } => *a == ZERO && *b == ZERO,
            Repr::Rational { num, .. } => num.iter().all(|&x| x == ZERO),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.repr, Repr::Poly(_))
    }

    /// Unchecked evaluation of the symbol itself.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.repr {
            Repr::Poly(c) => poly_eval(c, z),
            Repr::Lft { a, b, c, d } => (a * z + b) / (c * z + d),
            Repr::Rational { num, den } => {
                let d = den.iter().fold(ONE, |acc, &(c, d)| acc * (c * z + d));
                poly_eval(num, z) / d
            }
        }
    }

    /// `s^{(order)}(z)` for `z` in the disk.
    ///
    /// Linear-fractional maps use closed forms up to order 2.
    pub fn eval_order(&self, z: DiskPoint, order: usize) -> Result<Complex64> {
        check_in_disk(z)?;
        match &self.repr {
            Repr::Lft { a, b, c, d } => {
                let det = a * d - b * c;
                let den = c * z + d;
                match order {
                    0 => Ok((a * z + b) / den),
                    1 => Ok(det / (den * den)),
                    2 => Ok(-2.0 * c * det / (den * den * den)),
                    _ => Err(Error::OrderOverflow { order, repr: "linear-fractional map" }),
                }
            }
            _ => {
                let mut s = self.clone();
                for _ in 0..order {
                    s = s.derivative();
                }
                Ok(s.eval(z))
            }
        }
    }

    /// The derivative as a weight symbol.
    pub fn derivative(&self) -> AnalyticSymbol {
        match &self.repr {
            Repr::Poly(c) => Self::poly(poly_derivative(c), Role::Weight),
            Repr::Lft { a, b, c, d } => Self {
                repr: Repr::Rational { num: trim(vec![a * d - b * c]), den: vec![(*c, *d), (*c, *d)] },
                role: Role::Weight,
            },
            Repr::Rational { num, den } => {
                // (N / L)' = (N' L - N L') / L^2
                let l = den.iter().fold(vec![ONE], |acc, &(c, d)| poly_mul(&acc, &[d, c]));
                let lp = poly_derivative(&l);
                let first = poly_mul(&poly_derivative(num), &l);
                let second: Vec<Complex64> = poly_mul(num, &lp).into_iter().map(|x| -x).collect();
                let mut den2 = den.clone();
                den2.extend_from_slice(den);
                Self { repr: Repr::Rational { num: trim(poly_add(&first, &second)), den: den2 }, role: Role::Weight }
            }
        }
    }

    /// Pointwise product as a weight symbol.
    pub fn mul(&self, other: &AnalyticSymbol) -> AnalyticSymbol {
        let (n1, d1) = self.as_rational();
        let (n2, d2) = other.as_rational();
        let num = poly_mul(&n1, &n2);
        let mut den = d1;
        den.extend(d2);
        if den.is_empty() {
            Self::poly(num, Role::Weight)
        } else {
            Self { repr: Repr::Rational { num: trim(num), den }, role: Role::Weight }
        }
    }

    /// Multiplies every value by a constant.
    pub fn scale(&self, k: Complex64) -> AnalyticSymbol {
        match &self.repr {
            Repr::Poly(c) => Self::poly(c.iter().map(|&x| x * k).collect(), self.role),
            Repr::Lft { a, b, c, d } => Self { repr: Repr::Lft { a: a * k, b: b * k, c: *c, d: *d }, role: self.role },
            Repr::Rational { num, den } => {
                Self { repr: Repr::Rational { num: num.iter().map(|&x| x * k).collect(), den: den.clone() }, role: self.role }
            }
        }
    }

    /// Largest `|c/d|` over denominator factors; 0 for polynomials.
    pub fn geometric_ratio(&self) -> f64 {
        let (_, den) = self.as_rational();
        den.iter().map(|(c, d)| c.norm() / d.norm()).fold(0.0, f64::max)
    }

    /// Polynomial degree, `None` for non-polynomial symbols.
    pub fn degree(&self) -> Option<usize> {
        match &self.repr {
            Repr::Poly(c) => Some(c.len() - 1),
            _ => None,
        }
    }

    /// Taylor coefficients `c_0, ..., c_{len-1}` at the origin.
    pub fn taylor_coeffs(&self, len: usize) -> Vec<Complex64> {
        let (num, den) = self.as_rational();
        let mut out: Vec<Complex64> = (0..len).map(|k| num.get(k).copied().unwrap_or(ZERO)).collect();
        for (c, d) in den {
            // 1/(c z + d) = (1/d) sum_k (-c/d)^k z^k
            let q = -c / d;
            let mut g = Vec::with_capacity(len);
            let mut term = ONE / d;
            for _ in 0..len {
                g.push(term);
                term *= q;
            }
            out = series_mul(&out, &g, len);
        }
        out
    }

    /// Bound on `sum_{k >= len} |c_k|`, zero for polynomials of degree below `len`.
    pub fn taylor_tail_bound(&self, len: usize) -> f64 {
        match &self.repr {
            Repr::Poly(c) => c.iter().skip(len).map(|x| x.norm()).sum(),
            _ => {
                // Cauchy estimate on the circle of radius R between 1 and the nearest pole.
                let q = self.geometric_ratio();
                let radius = if q > 0.0 { 0.5 * (1.0 + 1.0 / q) } else { 2.0 };
                let samples = 512;
                let sup = (0..samples)
                    .map(|j| {
                        let z = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / samples as f64);
                        self.eval(z).norm()
                    })
                    .fold(0.0, f64::max);
                // Sampling slack for the circle maximum.
                let sup = 1.05 * sup;
                sup * radius.powi(-(len as i32)) / (1.0 - 1.0 / radius)
            }
        }
    }

    /// Largest modulus over `samples` equally spaced points of the circle `|z| = radius`.
    pub fn circle_max(&self, radius: f64, samples: usize) -> (f64, DiskPoint) {
        let mut best = (f64::NEG_INFINITY, Complex64::new(radius, 0.0));
        for j in 0..samples {
            let z = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / samples as f64);
            let m = self.eval(z).norm();
            if m > best.0 {
                best = (m, z);
            }
        }
        best
    }

    /// Checks `|s| < 1` on circles of radius `1 - 2^{-k}`, `k = 1..=20`.
    pub fn validate_self_map(&self) -> SelfMapReport {
        let mut sup = f64::NEG_INFINITY;
        let mut location = ZERO;
        let mut witness = None;
        let mut first_reaching = None;
        for k in 1..=VALIDATION_CIRCLES {
            let radius = 1.0 - 0.5f64.powi(k as i32);
            for j in 0..VALIDATION_SAMPLES {
                let z = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / VALIDATION_SAMPLES as f64);
                let m = self.eval(z).norm();
                if !m.is_finite() {
                    sup = f64::INFINITY;
                    location = z;
                    witness.get_or_insert(z);
                    continue;
                }
                if m > sup {
                    sup = m;
                    location = z;
                }
                if m > 1.0 && witness.is_none() {
                    witness = Some(z);
                }
                if m >= 1.0 && first_reaching.is_none() {
                    first_reaching = Some(z);
                }
            }
        }
        let passed = sup < 1.0;
        SelfMapReport { passed, sup, location, witness: if passed { None } else { witness.or(first_reaching) } }
    }

    /// Fails with [`Error::NotSelfMap`] when validation does not pass.
    pub fn require_self_map(&self) -> Result<()> {
        let rep = self.validate_self_map();
        if rep.passed {
            Ok(())
        } else {
            let w = rep.witness.unwrap_or(rep.location);
            Err(Error::NotSelfMap { re: w.re, im: w.im, modulus: self.eval(w).norm() })
        }
    }

    /// Supremum of `|s|` over the disk, estimated on the validation circles.
    pub fn sup_modulus(&self) -> f64 {
        self.validate_self_map().sup
    }
}

/// The data `(u, v, phi, psi)` of a difference `C_{u,phi} - C_{v,psi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolQuadruple {
    pub u: AnalyticSymbol,
    pub v: AnalyticSymbol,
    pub phi: AnalyticSymbol,
    pub psi: AnalyticSymbol,
}

impl SymbolQuadruple {
    /// Validates both self-maps and fixes the roles.
    pub fn new(u: AnalyticSymbol, v: AnalyticSymbol, phi: AnalyticSymbol, psi: AnalyticSymbol) -> Result<Self> {
        let q = Self {
            u: u.with_role(Role::Weight),
            v: v.with_role(Role::Weight),
            phi: phi.with_role(Role::SelfMap),
            psi: psi.with_role(Role::SelfMap),
        };
        q.phi.require_self_map()?;
        q.psi.require_self_map()?;
        Ok(q)
    }

    /// `rho(z) = d(phi(z), psi(z))`.
    pub fn rho_at(&self, z: DiskPoint) -> Result<f64> {
        check_in_disk(z)?;
        Ok(self.rho(z))
    }

    /// Unchecked `rho`.
    pub fn rho(&self, z: DiskPoint) -> f64 {
        pseudo_dist(self.phi.eval(z), self.psi.eval(z))
    }

    /// The quadruple with the roles of `(u, phi)` and `(v, psi)` exchanged.
    pub fn swapped(&self) -> Self {
        Self { u: self.v.clone(), v: self.u.clone(), phi: self.psi.clone(), psi: self.phi.clone() }
    }
}

/// Complex number in config files: a bare real or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexLiteral {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexLiteral> for Complex64 {
    fn from(c: ComplexLiteral) -> Self {
        match c {
            ComplexLiteral::Real(x) => Complex64::new(x, 0.0),
            ComplexLiteral::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<Complex64> for ComplexLiteral {
    fn from(c: Complex64) -> Self {
        if c.im == 0.0 {
            ComplexLiteral::Real(c.re)
        } else {
            ComplexLiteral::Pair([c.re, c.im])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LftLiteral {
    pub a: ComplexLiteral,
    pub b: ComplexLiteral,
    pub c: ComplexLiteral,
    pub d: ComplexLiteral,
}

/// Config syntax for a symbol: `{ poly = [c0, c1, ...] }` or `{ lft = { a, b, c, d } }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolLiteral {
    Poly(Vec<ComplexLiteral>),
    Lft(LftLiteral),
}

impl SymbolLiteral {
    pub fn to_symbol(&self, role: Role) -> Result<AnalyticSymbol> {
        match self {
            SymbolLiteral::Poly(c) => {
                if c.is_empty() {
                    return Err(Error::Config("polynomial symbol needs at least one coefficient".into()));
                }
                Ok(AnalyticSymbol::poly(c.iter().map(|&x| x.into()).collect(), role))
            }
            SymbolLiteral::Lft(l) => AnalyticSymbol::lft(l.a.into(), l.b.into(), l.c.into(), l.d.into(), role),
        }
    }

    pub fn from_symbol(s: &AnalyticSymbol) -> Result<Self> {
        match &s.repr {
            Repr::Poly(c) => Ok(SymbolLiteral::Poly(c.iter().map(|&x| x.into()).collect())),
            Repr::Lft { a, b, c, d } => {
                Ok(SymbolLiteral::Lft(LftLiteral { a: (*a).into(), b: (*b).into(), c: (*c).into(), d: (*d).into() }))
            }
            Repr::Rational { .. } => Err(Error::Config("rational symbols have no config syntax".into())),
        }
    }
}
