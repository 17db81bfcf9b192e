//! Quadrature over the unit disk.
//!
//! The global grid is a product rule: Gauss–Jacobi in `s = |z|^2` with weight
//! `(1 - s)^alpha` (so that `dA_alpha` is integrated exactly for radial
//! polynomials) times the trapezoid rule in the angle. Local rules integrate
//! over pseudo-hyperbolic disks through a Möbius change of variables.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{one_minus_sq, DiskPoint, EuclideanDisk};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Jacobi polynomial `P_n^{(a,b)}(x)` together with `P_{n-1}^{(a,b)}(x)`.
fn jacobi_pair(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p = 0.5 * (a - b + (a + b + 2.0) * x);
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let next = ((a2 + a3 * x) * p - a4 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Gauss–Jacobi rule on `[0, 1]` for the weight `(1 - s)^alpha`.
///
/// Returns `(nodes, one_minus_nodes, weights)`; `1 - s` is carried separately so it
/// keeps full relative accuracy next to `s = 1`.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (a, b) = (alpha, 0.0);
    // Golub–Welsch for initial guesses.
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for (k, d) in diag.iter_mut().enumerate() {
        let kf = k as f64;
        let c = 2.0 * kf + a + b;
        *d = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (c * (c + 2.0)) };
    }
    for (i, o) in off.iter_mut().enumerate() {
        let k = (i + 1) as f64;
        let c = 2.0 * k + a + b;
        *o = (4.0 * k * (k + a) * (k + b) * (k + a + b) / (c * c * (c + 1.0) * (c - 1.0))).sqrt();
    }
    let mut t = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = diag[i];
        if i + 1 < n {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(t);
    let mut guesses: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    guesses.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let nf = n as f64;
    let log_c = libm::lgamma(nf + a + 1.0) + libm::lgamma(nf + b + 1.0)
        - libm::lgamma(nf + a + b + 1.0)
        - libm::lgamma(nf + 1.0)
        + (a + b + 1.0) * std::f64::consts::LN_2;
    let c = 2.0 * nf + a + b;
    let mut s = Vec::with_capacity(n);
    let mut oms = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for x0 in guesses {
        // Newton in the variable y = 1 - x keeps precision next to x = 1.
        let mut y = 1.0 - x0;
        let mut deriv = 1.0;
        for _ in 0..8 {
            let x = 1.0 - y;
            let (p, pm1) = jacobi_pair(n, a, b, x);
            let one_minus_x2 = y * (2.0 - y);
            deriv = (nf * ((a - b) - c * x) * p + 2.0 * (nf + a) * (nf + b) * pm1) / (c * one_minus_x2);
            let dx = p / deriv;
            // x_new = x - dx  <=>  y_new = y + dx
            y += dx;
            if dx.abs() <= 1e-16 * y.max(1e-300) {
                break;
            }
        }
        let x = 1.0 - y;
        let one_minus_x2 = y * (2.0 - y);
        let wj = (log_c).exp() / (one_minus_x2 * deriv * deriv);
        // Map x in [-1,1] to s in [0,1]: s = (1 + x)/2, 1 - s = y/2, ds = dx/2,
        // and (1 - x)^a = 2^a (1 - s)^a.
        s.push(0.5 * (1.0 + x));
        oms.push(0.5 * y);
        w.push(wj * 2f64.powf(-a - 1.0));
    }
    (s, oms, w)
}

/// The measure an integral is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    /// `dA_alpha`, a probability measure.
    AAlpha,
    /// The Möbius invariant measure `dA / (1 - |z|^2)^2`.
    Lambda,
}

/// Radial node of a [`QuadGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialNode {
    pub r: f64,
    /// `1 - r^2`, accurate near the circle.
    pub one_minus_r2: f64,
    /// `dA_alpha` weight of the whole ring.
    pub weight: f64,
}

/// Product grid on the disk for `dA_alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadGrid {
    pub radial_nodes: Vec<RadialNode>,
    pub angular_count: usize,
    pub alpha: f64,
}

/// One node of a grid with its `dA_alpha` weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub z: DiskPoint,
    pub one_minus_r2: f64,
    pub weight: f64,
    pub ring: usize,
    pub slot: usize,
}

pub fn build_grid(alpha: f64, radial_count: usize, angular_count: usize) -> Result<QuadGrid> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must satisfy alpha > -1, got {alpha}")));
    }
    if radial_count < 8 || angular_count < 8 {
        return Err(Error::InvalidParameter(format!(
            "grid counts must be >= 8, got radial {radial_count}, angular {angular_count}"
        )));
    }
    let (s, oms, w) = gauss_jacobi_unit(radial_count, alpha);
    let radial_nodes = s
        .iter()
        .zip(&oms)
        .zip(&w)
        .map(|((&s, &oms), &w)| RadialNode { r: s.sqrt(), one_minus_r2: oms, weight: (alpha + 1.0) * w })
        .collect();
    Ok(QuadGrid { radial_nodes, angular_count, alpha })
}

impl QuadGrid {
    pub fn len(&self) -> usize {
        self.radial_nodes.len() * self.angular_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.radial_nodes.iter().map(|n| n.weight).sum()
    }

    pub fn nodes(&self) -> Vec<Node> {
        let m = self.angular_count;
        let mut out = Vec::with_capacity(self.len());
        for (ring, rn) in self.radial_nodes.iter().enumerate() {
            for slot in 0..m {
                let theta = std::f64::consts::TAU * slot as f64 / m as f64;
                out.push(Node {
                    z: Complex64::from_polar(rn.r, theta),
                    one_minus_r2: rn.one_minus_r2,
                    weight: rn.weight / m as f64,
                    ring,
                    slot,
                });
            }
        }
        out
    }

    /// Weight of a node against `measure`.
    pub fn measure_weight(&self, node: &Node, measure: Measure) -> f64 {
        match measure {
            Measure::AAlpha => node.weight,
            Measure::Lambda => node.weight / ((self.alpha + 1.0) * node.one_minus_r2.powf(2.0 + self.alpha)),
        }
    }
}

/// A pure predicate selecting a sub-region of the disk.
pub trait RegionMask: Sync {
    fn contains(&self, z: DiskPoint) -> bool;
}

impl<F: Fn(DiskPoint) -> bool + Sync> RegionMask for F {
    fn contains(&self, z: DiskPoint) -> bool {
        self(z)
    }
}

/// The value of an integral with its numerical diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: Complex64,
    /// Fraction of the absolute mass carried by the outermost ring.
    pub tail_fraction: f64,
    /// Estimated error from nodes adjacent to the mask boundary.
    pub boundary_error: f64,
}

/// Integrates `f` over the grid against `measure`, restricted to `mask` if given.
pub fn integrate<F>(f: F, grid: &QuadGrid, measure: Measure, mask: Option<&dyn RegionMask>) -> Result<Integral>
where
    F: Fn(DiskPoint) -> Complex64 + Sync,
{
    let nodes = grid.nodes();
    let inside: Vec<bool> = match mask {
        Some(m) => nodes.par_iter().map(|n| m.contains(n.z)).collect(),
        None => vec![true; nodes.len()],
    };
    let values: Vec<Complex64> = nodes
        .par_iter()
        .zip(inside.par_iter())
        .map(|(n, &ins)| if ins { f(n.z) } else { Complex64::new(0.0, 0.0) })
        .collect();
    let m = grid.angular_count;
    let rings = grid.radial_nodes.len();
    let mut total = Complex64::new(0.0, 0.0);
    let mut abs_total = 0.0;
    let mut abs_last = 0.0;
    let mut boundary = 0.0;
    for (idx, node) in nodes.iter().enumerate() {
        if !inside[idx] {
            continue;
        }
        let v = values[idx];
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFiniteIntegrand { re: node.z.re, im: node.z.im });
        }
        let w = grid.measure_weight(node, measure);
        let c = v * w;
        total += c;
        abs_total += c.norm();
        if node.ring + 1 == rings {
            abs_last += c.norm();
        }
        if mask.is_some() {
            let neighbours = [
                (node.ring, (node.slot + 1) % m),
                (node.ring, (node.slot + m - 1) % m),
                (node.ring.wrapping_sub(1), node.slot),
                (node.ring + 1, node.slot),
            ];
            let on_edge = neighbours.iter().any(|&(r, s)| r < rings && !inside[r * m + s]);
            if on_edge {
                boundary += 0.5 * c.norm();
            }
        }
    }
    let tail_fraction = if abs_total > 0.0 { abs_last / abs_total } else { 0.0 };
    Ok(Integral { value: total, tail_fraction, boundary_error: boundary })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, grid: &QuadGrid, measure: Measure) -> Result<Integral>
where
    F: Fn(DiskPoint) -> f64 + Sync,
{
    integrate(|z| Complex64::new(f(z), 0.0), grid, measure, None)
}

/// Polar rule for a small disk, used for local integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRule {
    /// Gauss–Legendre nodes in `u = rho^2 / s^2`, mapped to `[0, 1]`, with weights summing to 1.
    pub radial: Vec<(f64, f64)>,
    pub angular_count: usize,
}

impl LocalRule {
    pub fn new(radial_count: usize, angular_count: usize) -> Self {
        let (x, w) = gauss_legendre(radial_count);
        let radial = x.iter().zip(&w).map(|(&x, &w)| (0.5 * (1.0 + x), 0.5 * w)).collect();
        Self { radial, angular_count }
    }

    /// Points `rho e^{i theta}` with `rho < radius` and their normalized-area weights
    /// (the weights sum to the normalized area `radius^2`).
    pub fn points(&self, radius: f64) -> Vec<(Complex64, f64)> {
        let m = self.angular_count;
        let mut out = Vec::with_capacity(self.radial.len() * m);
        for &(u, w) in &self.radial {
            let rho = radius * u.sqrt();
            for j in 0..m {
                let theta = std::f64::consts::TAU * (j as f64 + 0.5) / m as f64;
                out.push((Complex64::from_polar(rho, theta), w * radius * radius / m as f64));
            }
        }
        out
    }
}

impl Default for LocalRule {
    fn default() -> Self {
        Self::new(16, 32)
    }
}

/// `∫_{E(z,s)} f dA_alpha` via `w = phi_z(zeta)`, `|zeta| < s`.
pub fn integrate_pseudo_disk<F>(f: F, z: DiskPoint, s: f64, alpha: f64, rule: &LocalRule) -> Complex64
where
    F: Fn(DiskPoint) -> Complex64,
{
    let one = Complex64::new(1.0, 0.0);
    let omz = one_minus_sq(z);
    let mut acc = Complex64::new(0.0, 0.0);
    for (zeta, w) in rule.points(s) {
        let den = one - z.conj() * zeta;
        let point = (z - zeta) / den;
        let dn = den.norm_sqr();
        // dA_alpha(w) = (alpha+1) (1-|z|^2)^{2+alpha} (1-|zeta|^2)^alpha / |1 - conj(z) zeta|^{2(2+alpha)} dA(zeta)
        let jac = (alpha + 1.0) * omz.powf(2.0 + alpha) * one_minus_sq(zeta).powf(alpha) / dn.powf(2.0 + alpha);
        acc += f(point) * (jac * w);
    }
    acc
}

/// `∫_{Q ∩ D} f dA_alpha` over a Euclidean disk `Q`, with an optional mask.
pub fn integrate_euclidean_disk<F, M>(f: F, disk: &EuclideanDisk, alpha: f64, rule: &LocalRule, mask: M) -> Complex64
where
    F: Fn(DiskPoint) -> Complex64,
    M: Fn(DiskPoint) -> bool,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for (offset, w) in rule.points(disk.radius) {
        let point = disk.center + offset;
        if point.norm() >= 1.0 || !mask(point) {
            continue;
        }
        acc += f(point) * ((alpha + 1.0) * one_minus_sq(point).powf(alpha) * w);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        for k in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(q, exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn jacobi_moments() {
        for &alpha in &[-0.5, 0.0, 1.0, 2.5] {
            let (s, oms, w) = gauss_jacobi_unit(24, alpha);
            for k in 0..40 {
                let q: f64 = s.iter().zip(&w).map(|(s, w)| w * s.powi(k)).sum();
                // ∫_0^1 s^k (1-s)^alpha ds = B(k+1, alpha+1)
                let exact = (libm::lgamma(k as f64 + 1.0) + libm::lgamma(alpha + 1.0) - libm::lgamma(k as f64 + alpha + 2.0)).exp();
                assert!((q - exact).abs() < 1e-13 * exact.max(1e-3), "alpha {alpha} k {k}: {q} vs {exact}");
            }
            for (s, o) in s.iter().zip(&oms) {
                assert!((1.0 - s - o).abs() < 1e-15);
                assert!(*o > 0.0);
            }
        }
    }

    #[test]
    fn grid_examples() {
        for &alpha in &[-0.5, 0.0, 1.0, 2.5] {
            let g = build_grid(alpha, 16, 16).unwrap();
            assert_abs_diff_eq!(g.total_weight(), 1.0, epsilon = 1e-12);
            let one = integrate_real(|_| 1.0, &g, Measure::AAlpha).unwrap();
            assert_abs_diff_eq!(one.value.re, 1.0, epsilon = 1e-12);
            let m2 = integrate_real(|z| z.norm_sqr(), &g, Measure::AAlpha).unwrap();
            assert_abs_diff_eq!(m2.value.re, 1.0 / (2.0 + alpha), epsilon = 1e-12);
            let lam = integrate_real(|z| one_minus_sq(z).powf(2.0 + alpha), &g, Measure::Lambda).unwrap();
            assert_abs_diff_eq!(lam.value.re, 1.0 / (alpha + 1.0), epsilon = 1e-12);
            assert!(g.radial_nodes.iter().all(|n| n.r < 1.0));
        }
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(build_grid(-1.0, 16, 16).is_err());
        assert!(build_grid(0.0, 4, 16).is_err());
    }

    #[test]
    fn masked_integral_of_pseudo_disk() {
        let g = build_grid(0.0, 96, 256).unwrap();
        let mask = |z: DiskPoint| z.norm() < 0.5;
        let i = integrate(|_| Complex64::new(1.0, 0.0), &g, Measure::AAlpha, Some(&mask)).unwrap();
        assert!((i.value.re - 0.25).abs() < 0.02);
        assert!(i.boundary_error > 0.0);
        assert!((i.value.re - 0.25).abs() <= i.boundary_error);
    }

    #[test]
    fn nan_is_reported() {
        let g = build_grid(0.0, 8, 8).unwrap();
        let r = integrate(|_| Complex64::new(f64::NAN, 0.0), &g, Measure::AAlpha, None);
        assert!(matches!(r, Err(Error::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn local_rules_match_closed_forms() {
        let rule = LocalRule::default();
        for &alpha in &[0.0, 1.0, 2.5] {
            let s: f64 = 0.6;
            let exact = 1.0 - (1.0 - s * s).powf(alpha + 1.0);
            let v = integrate_pseudo_disk(|_| Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), s, alpha, &rule);
            assert_abs_diff_eq!(v.re, exact, epsilon = 1e-12);
            let disk = EuclideanDisk { center: Complex64::new(0.0, 0.0), radius: s };
            let e = integrate_euclidean_disk(|_| Complex64::new(1.0, 0.0), &disk, alpha, &rule, |_| true);
            assert_abs_diff_eq!(e.re, exact, epsilon = 1e-10);
        }
    }
}
