//! Norms, reproducing kernels and test functions for `A^p_alpha` and `H^p`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_in_disk, one_minus_sq, DiskPoint, Lattice};
use crate::quadrature::{integrate_real, Measure, QuadGrid};
use crate::symbols::{poly_eval, AnalyticSymbol, Repr};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Last-ring mass fraction above which a quadrature norm is flagged.
pub const TAIL_WARNING: f64 = 1e-3;

/// Exponents of a source space `A^p_alpha` and an optional target exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub alpha: f64,
    pub p: f64,
    pub q: Option<f64>,
}

impl SpaceParams {
    pub fn new(alpha: f64, p: f64, q: Option<f64>) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha > -1 is required, got {alpha}")));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p > 0 is required, got {p}")));
        }
        if let Some(q) = q {
            if !(q > 0.0) || !q.is_finite() {
                return Err(Error::InvalidParameter(format!("q > 0 is required, got {q}")));
            }
        }
        Ok(Self { alpha, p, q })
    }

    /// The Hilbert space `A^2_alpha`.
    pub fn hilbert(alpha: f64) -> Result<Self> {
        Self::new(alpha, 2.0, Some(2.0))
    }

    /// Target exponent, defaulting to `p`.
    pub fn target(&self) -> f64 {
        self.q.unwrap_or(self.p)
    }
}

/// Space whose monomials `z^n` give the orthonormal basis `z^n / ||z^n||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSpace {
    Bergman { alpha: f64 },
    Hardy,
}

impl BasisSpace {
    pub fn monomial_norm_sq(&self, n: usize) -> f64 {
        match self {
            BasisSpace::Bergman { alpha } => monomial_norm_sq(n, *alpha),
            BasisSpace::Hardy => 1.0,
        }
    }
}

/// `||z^n||^2_{A^2_alpha} = Γ(n+1) Γ(2+α) / Γ(n+2+α)`.
pub fn monomial_norm_sq(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    (libm::lgamma(n + 1.0) + libm::lgamma(2.0 + alpha) - libm::lgamma(n + 2.0 + alpha)).exp()
}

/// Exact `A^2_alpha` norm of a polynomial from its coefficients.
pub fn bergman_norm_coeffs(coeffs: &[Complex64], alpha: f64) -> f64 {
    coeffs.iter().enumerate().map(|(k, c)| c.norm_sqr() * monomial_norm_sq(k, alpha)).sum::<f64>().sqrt()
}

/// `<f, g>` in `A^2_alpha` by coefficient pairing.
pub fn bergman_inner_coeffs(f: &[Complex64], g: &[Complex64], alpha: f64) -> Complex64 {
    f.iter().zip(g).enumerate().map(|(k, (a, b))| a * b.conj() * monomial_norm_sq(k, alpha)).sum()
}

/// A reproducing kernel `K_z^{[n]}` of `A^2_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub z: DiskPoint,
    pub n: usize,
    pub alpha: f64,
}

/// `(2+α)(3+α)...(n+1+α)`.
fn rising(alpha: f64, n: usize) -> f64 {
    (0..n).map(|k| 2.0 + alpha + k as f64).product()
}

impl KernelSpec {
    pub fn new(z: DiskPoint, n: usize, alpha: f64) -> Result<Self> {
        check_in_disk(z)?;
        SpaceParams::hilbert(alpha)?;
        Ok(Self { z, n, alpha })
    }

    /// `K_z^{[n]}(w) = w^n (2+α)...(n+1+α) (1 - conj(z) w)^{-(2+α+n)}`.
    pub fn eval(&self, w: DiskPoint) -> Complex64 {
        let gamma = 2.0 + self.alpha + self.n as f64;
        let base = ONE - self.z.conj() * w;
        w.powu(self.n as u32) * rising(self.alpha, self.n) * (-gamma * base.ln()).exp()
    }

    /// `||K_z^{[n]}||^2 = (K_z^{[n]})^{(n)}(z)`, expanded by the Leibniz rule into
    /// a sum of positive terms.
    pub fn norm_sq(&self) -> f64 {
        let n = self.n;
        let gamma = 2.0 + self.alpha + n as f64;
        let x = self.z.norm_sqr();
        let omx = one_minus_sq(self.z);
        let mut total = 0.0;
        let mut binom = 1.0;
        let mut n_fact_over_j_fact: f64 = (1..=n).map(|k| k as f64).product();
        let mut poch = 1.0;
        for j in 0..=n {
            if j > 0 {
                binom *= (n - j + 1) as f64 / j as f64;
                n_fact_over_j_fact /= j as f64;
                poch *= gamma + (j - 1) as f64;
            }
            total += binom * n_fact_over_j_fact * poch * x.powi(j as i32) * omx.powf(-gamma - j as f64);
        }
        rising(self.alpha, n) * total
    }

    /// Taylor coefficients `k!/(k-n)! conj(z)^{k-n} / ||z^k||^2`, `k < len`.
    pub fn coeffs(&self, len: usize) -> Vec<Complex64> {
        let zc = self.z.conj();
        (0..len)
            .map(|k| {
                if k < self.n {
                    return ZERO;
                }
                let falling: f64 = ((k - self.n + 1)..=k).map(|x| x as f64).product();
                zc.powu((k - self.n) as u32) * (falling / monomial_norm_sq(k, self.alpha))
            })
            .collect()
    }

    /// The normalized kernel `k_z^{[n]} = K_z^{[n]} / ||K_z^{[n]}||`.
    pub fn normalized_eval(&self, w: DiskPoint) -> Complex64 {
        self.eval(w) / self.norm_sq().sqrt()
    }
}

pub fn kernel_eval(k: &KernelSpec, w: DiskPoint) -> Result<Complex64> {
    check_in_disk(w)?;
    Ok(k.eval(w))
}

pub fn kernel_norm_sq(k: &KernelSpec) -> f64 {
    k.norm_sq()
}

/// How a norm was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Coefficients,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: NormMethod,
    /// Last-ring mass fraction for quadrature norms, 0 otherwise.
    pub tail_fraction: f64,
}

impl NormEstimate {
    pub fn tail_warning(&self) -> bool {
        self.tail_fraction > TAIL_WARNING
    }
}

/// Taylor coefficients of a function analytic on a neighbourhood of the closed
/// disk, read off by FFT of its values on the unit circle.
///
/// The sample count doubles until every coefficient in the top quarter of the
/// spectrum is below `1e-13` times the largest one, or until the top quarter
/// stops shrinking below `1e-9` (the rounding floor of the samples).
pub fn taylor_coeffs_fft<F>(f: F, max_len: usize) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let mut planner = rustfft::FftPlanner::<f64>::new();
    let mut len = 64usize;
    let mut prev_tail = f64::INFINITY;
    loop {
        let mut buf: Vec<Complex64> = (0..len)
            .into_par_iter()
            .map(|j| f(Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / len as f64)))
            .collect();
        if let Some(bad) = buf.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * bad as f64 / len as f64);
            return Err(Error::NonFiniteIntegrand { re: z.re, im: z.im });
        }
        planner.plan_fft_forward(len).process(&mut buf);
        let scale = 1.0 / len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
        let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tail = buf[3 * len / 4..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        // Past the rounding floor of the samples the tail stops shrinking.
        let stalled = tail <= 1e-9 * peak && tail >= 0.25 * prev_tail;
        prev_tail = tail;
        if peak == 0.0 || tail <= 1e-13 * peak || stalled {
            let keep = buf.iter().rposition(|c| c.norm() > 1e-17 * peak).map_or(1, |k| k + 1);
            buf.truncate(keep);
            return Ok(buf);
        }
        if len >= max_len {
            return Err(Error::Numerical(format!(
                "Taylor coefficients did not converge with {len} samples (relative tail {:.3e})",
                tail / peak
            )));
        }
        len *= 2;
    }
}

/// Default cap on the FFT length used for coefficient norms.
pub const MAX_FFT_LEN: usize = 1 << 22;

/// `||g||_{A^q_alpha}` for `g` analytic across the unit circle.
///
/// Even `q` uses coefficients of `g^{q/2}`; other exponents use the grid.
pub fn analytic_norm<F>(g: F, alpha: f64, q: f64, grid: &QuadGrid) -> Result<NormEstimate>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let half = q / 2.0;
    if half.fract() == 0.0 && (1.0..=8.0).contains(&half) {
        let m = half as i32;
        let c = taylor_coeffs_fft(|z| g(z).powi(m), MAX_FFT_LEN)?;
        let sq = bergman_norm_coeffs(&c, alpha);
        return Ok(NormEstimate { value: sq.powf(2.0 / q), method: NormMethod::Coefficients, tail_fraction: 0.0 });
    }
    quadrature_norm(|z| g(z).norm(), alpha, q, grid)
}

/// `||g||_{A^q_alpha}` by grid quadrature of `|g|^q`.
pub fn quadrature_norm<F>(abs_g: F, alpha: f64, q: f64, grid: &QuadGrid) -> Result<NormEstimate>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    if (grid.alpha - alpha).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!("grid built for alpha = {}, need {alpha}", grid.alpha)));
    }
    let i = integrate_real(|z| abs_g(z).powf(q), grid, Measure::AAlpha)?;
    Ok(NormEstimate { value: i.value.re.max(0.0).powf(1.0 / q), method: NormMethod::Quadrature, tail_fraction: i.tail_fraction })
}

/// `||f||_{A^p_alpha}` of a symbol: exact for polynomials at `p = 2`.
pub fn bergman_p_norm(f: &AnalyticSymbol, sp: &SpaceParams, grid: &QuadGrid) -> Result<NormEstimate> {
    if let Repr::Poly(c) = &f.repr {
        if sp.p == 2.0 {
            return Ok(NormEstimate {
                value: bergman_norm_coeffs(c, sp.alpha),
                method: NormMethod::Coefficients,
                tail_fraction: 0.0,
            });
        }
    }
    analytic_norm(|z| f.eval(z), sp.alpha, sp.p, grid)
}

/// `||f||_{H^p}` of a polynomial: coefficient `l^2` norm at `p = 2`, otherwise the
/// `p`-mean on the unit circle (the means increase with the radius).
pub fn hardy_norm(coeffs: &[Complex64], p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("p > 0 is required, got {p}")));
    }
    if p == 2.0 {
        return Ok(coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
    }
    let n = (64 * coeffs.len()).max(4096);
    let mean = (0..n)
        .map(|j| poly_eval(coeffs, Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)).norm().powf(p))
        .sum::<f64>()
        / n as f64;
    Ok(mean.powf(1.0 / p))
}

/// `||g||_{H^2}` for `g` analytic across the unit circle.
pub fn hardy_norm_analytic<F>(g: F) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let c = taylor_coeffs_fft(g, MAX_FFT_LEN)?;
    Ok(c.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
}

/// Coefficient form of the area expression for the Hardy norm:
/// `lhs = sum |c_n|^2`, `rhs = |c_0|^2 + 2 ∫ |f'|^2 (1 - |z|^2) dA = |c_0|^2 + sum_{n>=1} 2n |c_n|^2 / (n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodPaley {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn littlewood_paley_check(coeffs: &[Complex64]) -> LittlewoodPaley {
    let lhs: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let rhs: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| if n == 0 { c.norm_sqr() } else { 2.0 * n as f64 * c.norm_sqr() / (n as f64 + 1.0) })
        .sum();
    let ratio = if rhs > 0.0 { lhs / rhs } else { 1.0 };
    LittlewoodPaley { lhs, rhs, ratio }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    /// `f_{a,N,p}^{[i]}`, normalized in `A^p_alpha`.
    BergmanF,
    /// `g_{a,N,p}^{[i]}`, normalized in `H^p`.
    HardyG,
}

/// Smallest admissible order for the Bergman family: `floor((2+α)/p) + 1`.
pub fn default_order_bergman(alpha: f64, p: f64) -> usize {
    ((2.0 + alpha) / p).floor() as usize + 1
}

/// Smallest admissible order for lattice atoms: `floor(max{1, 1/p} + (1+α)/p) + 1`.
pub fn default_order_atom(alpha: f64, p: f64) -> usize {
    ((1.0f64).max(1.0 / p) + (1.0 + alpha) / p).floor() as usize + 1
}

/// Smallest admissible order for the Hardy family: `floor(1/p) + 1`.
pub fn default_order_hardy(p: f64) -> usize {
    (1.0 / p).floor() as usize + 1
}

/// `F^{[i]}_{a,N}(z) = z^i / (1 - conj(a) z)^{N+i}`, with normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub family: TestFamily,
    pub a: DiskPoint,
    pub order: usize,
    pub i: usize,
    pub space: SpaceParams,
}

impl TestFunctionSpec {
    pub fn new(family: TestFamily, a: DiskPoint, order: usize, i: usize, space: SpaceParams) -> Result<Self> {
        check_in_disk(a)?;
        let n = order as f64;
        match family {
            TestFamily::BergmanF => {
                let need = (2.0 + space.alpha) / space.p;
                if !(n > need) {
                    return Err(Error::InvalidParameter(format!("test-function order N = {order} must exceed (2+alpha)/p = {need}")));
                }
            }
            TestFamily::HardyG => {
                if !(n * space.p > 1.0) {
                    return Err(Error::InvalidParameter(format!("test-function order N = {order} must exceed 1/p = {}", 1.0 / space.p)));
                }
            }
        }
        Ok(Self { family, a, order, i, space })
    }

    pub fn normalizer(&self) -> f64 {
        let e = (self.order + self.i) as f64
            - match self.family {
                TestFamily::BergmanF => (2.0 + self.space.alpha) / self.space.p,
                TestFamily::HardyG => 1.0 / self.space.p,
            };
        one_minus_sq(self.a).powf(e)
    }

    /// Value at `z`; also valid on and slightly beyond the unit circle.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let k = (self.order + self.i) as i32;
        z.powu(self.i as u32) * self.normalizer() / (ONE - self.a.conj() * z).powi(k)
    }
}

pub fn test_function(spec: &TestFunctionSpec, z: DiskPoint) -> Result<Complex64> {
    check_in_disk(z)?;
    Ok(spec.eval(z))
}

/// Lattice atom sum `sum_j c_j (1-|a_j|^2)^{N+i-(2+α)/p} z^i / (1 - conj(a_j) z)^{N+i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSum {
    pub terms: Vec<(DiskPoint, Complex64)>,
    pub order: usize,
    pub i: usize,
    pub space: SpaceParams,
}

impl AtomSum {
    pub fn new(lattice: &Lattice, coeffs: &[Complex64], order: usize, i: usize, space: SpaceParams) -> Result<Self> {
        if lattice.len() != coeffs.len() {
            return Err(Error::LengthMismatch(format!(
                "{} atom coefficients for {} lattice points",
                coeffs.len(),
                lattice.len()
            )));
        }
        let need = (1.0f64).max(1.0 / space.p) + (1.0 + space.alpha) / space.p;
        if !(order as f64 > need) {
            return Err(Error::InvalidParameter(format!("atom order N = {order} must exceed max(1, 1/p) + (1+alpha)/p = {need}")));
        }
        let e = (order + i) as f64 - (2.0 + space.alpha) / space.p;
        let terms = lattice
            .centers
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| **c != ZERO)
            .map(|(&a, &c)| (a, c * one_minus_sq(a).powf(e)))
            .collect();
        Ok(Self { terms, order, i, space })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let k = (self.order + self.i) as i32;
        let s: Complex64 = self.terms.iter().map(|&(a, c)| c / (ONE - a.conj() * z).powi(k)).sum();
        s * z.powu(self.i as u32)
    }
}

pub fn atom_function(
    lattice: &Lattice,
    coeffs: &[Complex64],
    order: usize,
    i: usize,
    sp: &SpaceParams,
    z: DiskPoint,
) -> Result<Complex64> {
    check_in_disk(z)?;
    Ok(AtomSum::new(lattice, coeffs, order, i, *sp)?.eval(z))
}
