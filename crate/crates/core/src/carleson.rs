//! Pull-back measures, averaging functions, Carleson statistics, Berezin
//! transforms and Toeplitz matrices.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_lattice, check_in_disk, one_minus_sq, pseudo_dist, pseudo_disk_euclidean, DiskPoint, EuclideanDisk};
use crate::operators::{classify_trend, ComboSpec, TruncatedOperator, Trend, DIVERGENCE_TAIL};
use crate::quadrature::{
    gauss_jacobi_unit, gauss_legendre, integrate, integrate_euclidean_disk, integrate_pseudo_disk, LocalRule, Measure, QuadGrid,
};
use crate::spaces::{monomial_norm_sq, taylor_coeffs_fft, BasisSpace, KernelSpec, SpaceParams, MAX_FFT_LEN};
use crate::symbols::{AnalyticSymbol, Repr, SymbolQuadruple};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Radial nodes of the coarse rule for pre-images clipped by the unit circle.
const CLIPPED_NODES: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureLabel {
    OmegaPhiU,
    OmegaPsiV,
    SigmaPhi,
    SigmaPsi,
    Custom,
}

type WeightFn = Arc<dyn Fn(DiskPoint) -> f64 + Send + Sync>;

/// `w dA_alpha ∘ tau^{-1}` for a nonnegative weight `w` and a self-map `tau`.
#[derive(Clone)]
pub struct PullbackMeasure {
    pub label: MeasureLabel,
    pub alpha: f64,
    /// `None` is the identity map.
    pub transport: Option<AnalyticSymbol>,
    weight: WeightFn,
    /// Set when the weight vanishes identically by construction.
    pub known_zero: bool,
}

impl std::fmt::Debug for PullbackMeasure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PullbackMeasure")
            .field("label", &self.label)
            .field("alpha", &self.alpha)
            .field("transport", &self.transport)
            .field("known_zero", &self.known_zero)
            .finish()
    }
}

/// How a transport map is handled when measuring pseudo-hyperbolic disks.
enum TransportKind {
    Identity,
    /// `(a w + b) / (c w + d)` with nonzero determinant.
    Mobius(Complex64, Complex64, Complex64, Complex64),
    General,
}

impl PullbackMeasure {
    pub fn new<F>(label: MeasureLabel, alpha: f64, transport: Option<AnalyticSymbol>, weight: F) -> Result<Self>
    where
        F: Fn(DiskPoint) -> f64 + Send + Sync + 'static,
    {
        SpaceParams::hilbert(alpha)?;
        if let Some(t) = &transport {
            t.require_self_map()?;
        }
        Ok(Self { label, alpha, transport, weight: Arc::new(weight), known_zero: false })
    }

    /// `dA_alpha` itself.
    pub fn area(alpha: f64) -> Result<Self> {
        Self::new(MeasureLabel::Custom, alpha, None, |_| 1.0)
    }

    /// `h dA_alpha` for a nonnegative density `h`.
    pub fn density<F>(alpha: f64, h: F) -> Result<Self>
    where
        F: Fn(DiskPoint) -> f64 + Send + Sync + 'static,
    {
        Self::new(MeasureLabel::Custom, alpha, None, h)
    }

    /// `|rho u|^q dA_alpha ∘ phi^{-1}`.
    pub fn omega_phi(q4: &SymbolQuadruple, q: f64, alpha: f64) -> Result<Self> {
        let s = q4.clone();
        let zero = q4.u.is_zero() || q4.phi == q4.psi;
        let mut m = Self::new(MeasureLabel::OmegaPhiU, alpha, Some(q4.phi.clone()), move |z| {
            (s.rho(z) * s.u.eval(z).norm()).powf(q)
        })?;
        m.known_zero = zero;
        Ok(m)
    }

    /// `|rho v|^q dA_alpha ∘ psi^{-1}`.
    pub fn omega_psi(q4: &SymbolQuadruple, q: f64, alpha: f64) -> Result<Self> {
        let mut m = Self::omega_phi(&q4.swapped(), q, alpha)?;
        m.label = MeasureLabel::OmegaPsiV;
        Ok(m)
    }

    /// `(1 - rho)^beta |u - v|^q dA_alpha ∘ phi^{-1}`.
    pub fn sigma_phi(q4: &SymbolQuadruple, q: f64, beta: f64, alpha: f64) -> Result<Self> {
        let s = q4.clone();
        let zero = q4.u == q4.v;
        let mut m = Self::new(MeasureLabel::SigmaPhi, alpha, Some(q4.phi.clone()), move |z| {
            (1.0 - s.rho(z)).powf(beta) * (s.u.eval(z) - s.v.eval(z)).norm().powf(q)
        })?;
        m.known_zero = zero;
        Ok(m)
    }

    /// `(1 - rho)^beta |u - v|^q dA_alpha ∘ psi^{-1}`.
    pub fn sigma_psi(q4: &SymbolQuadruple, q: f64, beta: f64, alpha: f64) -> Result<Self> {
        let mut m = Self::sigma_phi(&q4.swapped(), q, beta, alpha)?;
        m.label = MeasureLabel::SigmaPsi;
        Ok(m)
    }

    /// The four measures `omega_phi, omega_psi, sigma_phi, sigma_psi`.
    pub fn quartet(q4: &SymbolQuadruple, q: f64, beta: f64, alpha: f64) -> Result<[Self; 4]> {
        Ok([
            Self::omega_phi(q4, q, alpha)?,
            Self::omega_psi(q4, q, alpha)?,
            Self::sigma_phi(q4, q, beta, alpha)?,
            Self::sigma_psi(q4, q, beta, alpha)?,
        ])
    }

    pub fn weight(&self, z: DiskPoint) -> f64 {
        if self.known_zero {
            0.0
        } else {
            (self.weight)(z)
        }
    }

    pub fn transport_point(&self, z: DiskPoint) -> DiskPoint {
        match &self.transport {
            None => z,
            Some(t) => t.eval(z),
        }
    }

    fn kind(&self) -> TransportKind {
        let Some(t) = &self.transport else { return TransportKind::Identity };
        let (a, b, c, d) = match &t.repr {
            Repr::Poly(p) if p.len() == 2 && p[0] == ZERO && p[1] == ONE => return TransportKind::Identity,
            Repr::Poly(p) if p.len() == 2 => (p[1], p[0], ZERO, ONE),
            Repr::Lft { a, b, c, d } => (*a, *b, *c, *d),
            _ => return TransportKind::General,
        };
        let det = a * d - b * c;
        if det.norm() < 1e-12 * (a.norm() + b.norm()) * (c.norm() + d.norm()) {
            return TransportKind::General;
        }
        TransportKind::Mobius(a, b, c, d)
    }
}

/// `∫ g d(w dA_alpha ∘ tau^{-1}) = ∫ g(tau(z)) w(z) dA_alpha(z)`.
pub fn pullback_integral<G>(g: G, mu: &PullbackMeasure, grid: &QuadGrid) -> Result<Complex64>
where
    G: Fn(DiskPoint) -> Complex64 + Sync,
{
    check_grid(mu, grid)?;
    if mu.known_zero {
        return Ok(ZERO);
    }
    let i = integrate(|z| g(mu.transport_point(z)) * mu.weight(z), grid, Measure::AAlpha, None)?;
    Ok(i.value)
}

fn check_grid(mu: &PullbackMeasure, grid: &QuadGrid) -> Result<()> {
    if grid.alpha != mu.alpha {
        return Err(Error::InvalidParameter(format!("grid built for alpha = {}, measure uses {}", grid.alpha, mu.alpha)));
    }
    Ok(())
}

/// Transported nodes `(tau(z_k), w(z_k) W_k)` of a grid, kept in grid order.
pub struct MeasureCloud {
    points: Vec<DiskPoint>,
    weights: Vec<f64>,
    rings: usize,
    slots: usize,
}

impl MeasureCloud {
    pub fn new(mu: &PullbackMeasure, grid: &QuadGrid) -> Result<Self> {
        check_grid(mu, grid)?;
        let nodes = grid.nodes();
        let data: Vec<(DiskPoint, f64)> = nodes
            .par_iter()
            .map(|n| {
                let w = if mu.known_zero { 0.0 } else { mu.weight(n.z) };
                (mu.transport_point(n.z), w * n.weight)
            })
            .collect();
        if let Some(k) = data.iter().position(|(p, w)| !(w.is_finite() && p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::NonFiniteIntegrand { re: nodes[k].z.re, im: nodes[k].z.im });
        }
        let (points, weights) = data.into_iter().unzip();
        Ok(Self { points, weights, rings: grid.radial_nodes.len(), slots: grid.angular_count })
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of `{d(tau(.), z) < s}` and a mask-boundary error estimate.
    pub fn disk_mass(&self, z: DiskPoint, s: f64) -> (f64, f64) {
        let inside: Vec<bool> = self.points.iter().map(|&p| pseudo_dist(p, z) < s).collect();
        let m = self.slots;
        let mut mass = 0.0;
        let mut edge = 0.0;
        for (k, &ins) in inside.iter().enumerate() {
            if !ins || self.weights[k] == 0.0 {
                continue;
            }
            mass += self.weights[k];
            let (ring, slot) = (k / m, k % m);
            let neighbours = [
                (ring, (slot + 1) % m),
                (ring, (slot + m - 1) % m),
                (ring.wrapping_sub(1), slot),
                (ring + 1, slot),
            ];
            if neighbours.iter().any(|&(r, s)| r < self.rings && !inside[r * m + s]) {
                edge += 0.5 * self.weights[k];
            }
        }
        (mass, edge)
    }
}

/// A value of `M_{r,t}` with its mask-boundary error estimate (same scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragingValue {
    pub value: f64,
    pub boundary_error: f64,
}

/// Evaluator of `M_{r,t}(mu)` reusing per-measure precomputation.
pub struct Averager<'a> {
    mu: &'a PullbackMeasure,
    s: f64,
    rule: LocalRule,
    cloud: Option<MeasureCloud>,
}

impl<'a> Averager<'a> {
    pub fn new(mu: &'a PullbackMeasure, r: f64, grid: &QuadGrid) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("averaging radius r must be positive, got {r}")));
        }
        check_grid(mu, grid)?;
        // A Möbius transport whose pole image a/c lies near the disk can have
        // unbounded pre-images of pseudo-hyperbolic disks; those use the cloud.
        let needs_cloud = match mu.kind() {
            TransportKind::General => true,
            TransportKind::Mobius(a, _, c, _) => c != ZERO && (a / c).norm() < 2.0,
            TransportKind::Identity => false,
        };
        let cloud = if needs_cloud && !mu.known_zero { Some(MeasureCloud::new(mu, grid)?) } else { None };
        let s = r.tanh();
        // The trapezoid rule in the angle converges like s^n for the Möbius Jacobian.
        let angular = ((-36.0 / s.ln()).ceil() as usize).clamp(32, 4096).next_multiple_of(8);
        Ok(Self { mu, s, rule: LocalRule::new(16, angular), cloud })
    }

    /// `mu(D(z, r))` and a boundary error estimate.
    pub fn disk_mass(&self, z: DiskPoint) -> Result<(f64, f64)> {
        check_in_disk(z)?;
        if self.mu.known_zero {
            return Ok((0.0, 0.0));
        }
        let alpha = self.mu.alpha;
        match self.mu.kind() {
            TransportKind::Identity => {
                let w = |p: DiskPoint| Complex64::new(self.mu.weight(p), 0.0);
                Ok((integrate_pseudo_disk(w, z, self.s, alpha, &self.rule).re, 0.0))
            }
            TransportKind::Mobius(a, b, c, d) => self.mobius_mass(z, a, b, c, d),
            TransportKind::General => Ok(self.cloud.as_ref().expect("cloud built for general transports").disk_mass(z, self.s)),
        }
    }

    fn mobius_mass(&self, z: DiskPoint, a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<(f64, f64)> {
        let target = pseudo_disk_euclidean(z, self.s)?;
        let Some(pre) = preimage_disk(&target, a, b, c, d) else {
            return match &self.cloud {
                Some(cloud) => Ok(cloud.disk_mass(z, self.s)),
                None => Err(Error::Numerical("pre-image of a pseudo-hyperbolic disk is unbounded".into())),
            };
        };
        let f = |w: DiskPoint| self.mu.weight(w);
        let alpha = self.mu.alpha;
        let clipped = pre.center.norm() + pre.radius >= 1.0;
        if !clipped {
            let g = |w: DiskPoint| Complex64::new(f(w), 0.0);
            return Ok((integrate_euclidean_disk(g, &pre, alpha, &self.rule, |_| true).re, 0.0));
        }
        let coarse = clipped_disk_integral(&f, &pre, alpha, CLIPPED_NODES);
        let fine = clipped_disk_integral(&f, &pre, alpha, 2 * CLIPPED_NODES);
        Ok((fine, (fine - coarse).abs()))
    }

    /// `M_{r,t}(mu)(z) = mu(D(z,r)) / (1 - |z|^2)^{t(2+alpha)}`.
    pub fn eval(&self, z: DiskPoint, t: f64) -> Result<AveragingValue> {
        let (mass, err) = self.disk_mass(z)?;
        let scale = one_minus_sq(z).powf(-t * (2.0 + self.mu.alpha));
        Ok(AveragingValue { value: mass * scale, boundary_error: err * scale })
    }
}

/// `∫_{Q ∩ D} f dA_alpha` in polar coordinates about the origin, integrating
/// each circle `|w| = t` over its arc inside `Q`.
fn clipped_disk_integral<F>(f: &F, disk: &EuclideanDisk, alpha: f64, n: usize) -> f64
where
    F: Fn(DiskPoint) -> f64,
{
    let cn = disk.center.norm();
    let carg = disk.center.arg();
    let big_r = disk.radius;
    let t_lo = (cn - big_r).max(0.0);
    let t_hi = (cn + big_r).min(1.0);
    if t_hi <= t_lo {
        return 0.0;
    }
    let (s_lo, s_hi) = (t_lo * t_lo, t_hi * t_hi);
    // Radial nodes in s = t^2 carrying the weight (1 - s)^alpha.
    let radial: Vec<(f64, f64)> = if t_hi >= 1.0 {
        let (x, _, w) = gauss_jacobi_unit(n, alpha);
        let span = 1.0 - s_lo;
        x.iter().zip(&w).map(|(&x, &w)| (s_lo + span * x, w * span.powf(alpha + 1.0))).collect()
    } else {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (s_hi - s_lo);
        x.iter()
            .zip(&w)
            .map(|(&x, &w)| {
                let s = s_lo + half * (1.0 + x);
                (s, w * half * (1.0 - s).powf(alpha))
            })
            .collect()
    };
    let (ax, aw) = gauss_legendre(2 * n);
    let mut acc = 0.0;
    for (s, ws) in radial {
        let t = s.sqrt();
        let half_width = if cn == 0.0 || t == 0.0 {
            if t < big_r {
                std::f64::consts::PI
            } else {
                0.0
            }
        } else {
            ((t * t + cn * cn - big_r * big_r) / (2.0 * t * cn)).clamp(-1.0, 1.0).acos()
        };
        if half_width == 0.0 {
            continue;
        }
        let mut ring = 0.0;
        for (&x, &w) in ax.iter().zip(&aw) {
            ring += w * f(Complex64::from_polar(t, carg + half_width * x));
        }
        acc += ws * ring * half_width;
    }
    // dA_alpha = (alpha + 1) (1 - s)^alpha ds dtheta / (2 pi)
    acc * (alpha + 1.0) / std::f64::consts::TAU
}

/// Euclidean disk `{w : tau(w) in E}` for `tau(w) = (a w + b)/(c w + d)`,
/// or `None` when that set is not a bounded disk.
fn preimage_disk(e: &EuclideanDisk, a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Option<EuclideanDisk> {
    // tau^{-1}(zeta) = (d zeta - b) / (a - c zeta), with pole at zeta = a / c.
    if c != ZERO {
        let pole = a / c;
        let gap = (pole - e.center).norm() - e.radius;
        if gap <= 1e-9 * e.radius {
            return None;
        }
    }
    let inv = |zeta: Complex64| (d * zeta - b) / (a - c * zeta);
    let pts: Vec<Complex64> = (0..3)
        .map(|k| inv(e.center + Complex64::from_polar(e.radius, std::f64::consts::TAU * k as f64 / 3.0)))
        .collect();
    let (p1, p2, p3) = (pts[0], pts[1], pts[2]);
    // Circumcenter of three points.
    let d12 = p2 - p1;
    let d13 = p3 - p1;
    let den = 2.0 * (d12.re * d13.im - d12.im * d13.re);
    if den.abs() < 1e-300 {
        return None;
    }
    let n12 = d12.norm_sqr();
    let n13 = d13.norm_sqr();
    let ux = (d13.im * n12 - d12.im * n13) / den;
    let uy = (d12.re * n13 - d13.re * n12) / den;
    let center = p1 + Complex64::new(ux, uy);
    let radius = (p1 - center).norm();
    Some(EuclideanDisk { center, radius })
}

/// `M_{r,t}(mu)(z)`.
pub fn averaging_function(mu: &PullbackMeasure, z: DiskPoint, r: f64, t: f64, grid: &QuadGrid) -> Result<AveragingValue> {
    Averager::new(mu, r, grid)?.eval(z, t)
}

/// An `L^s` norm of `M_r(mu)` with its tail diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpNorm {
    pub exponent: f64,
    pub measure: Measure,
    pub value: f64,
    pub tail_fraction: f64,
    pub divergent: bool,
}

/// Statistics of `M_{r,t}(mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonStats {
    pub r: f64,
    pub t: f64,
    pub sup_value: f64,
    pub sup_location: DiskPoint,
    /// `(radius, max over angles of M_{r,t})`.
    pub profile: Vec<(f64, f64)>,
    pub trend: Trend,
    pub trend_exponent: f64,
    /// Largest boundary error relative to the profile maximum.
    pub relative_boundary_error: f64,
    pub lp_norm: Option<LpNorm>,
}

/// Knobs shared by the Carleson statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonOptions {
    pub radii: Vec<f64>,
    pub angles: usize,
    /// Lattice radius for the supremum search.
    pub lattice_r: f64,
    /// Lattice points are taken up to this modulus.
    pub sup_radius: f64,
    pub tol_vanish: f64,
}

impl Default for CarlesonOptions {
    fn default() -> Self {
        Self {
            radii: vec![0.5, 0.75, 0.9, 0.95, 0.99, 0.995, 0.999],
            angles: 32,
            lattice_r: 0.5,
            sup_radius: 0.995,
            tol_vanish: 1e-2,
        }
    }
}

fn profile_points(mu: &PullbackMeasure, radius: f64, angles: usize) -> Vec<DiskPoint> {
    let mut out: Vec<DiskPoint> =
        (0..angles).map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / angles as f64)).collect();
    if let Some(t) = &mu.transport {
        let (m, z) = t.circle_max(1.0 - 1e-9, 1024);
        if m > 0.9 {
            out.push(Complex64::from_polar(radius, t.eval(z).arg()));
        }
    }
    out
}

/// Supremum search and boundary profile of `M_{r,t}(mu)` (the `p <= q` branch).
pub fn carleson_profile(mu: &PullbackMeasure, r: f64, t: f64, opts: &CarlesonOptions, grid: &QuadGrid) -> Result<CarlesonStats> {
    let av = Averager::new(mu, r, grid)?;
    let radii = &opts.radii;
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::InvalidParameter("profile radii must be increasing in (0, 1)".into()));
    }
    let mut profile = Vec::with_capacity(radii.len());
    let mut worst_err: f64 = 0.0;
    let mut best = (0.0f64, ZERO);
    for &rad in radii {
        let pts = profile_points(mu, rad, opts.angles);
        let vals: Vec<Result<AveragingValue>> = pts.par_iter().map(|&z| av.eval(z, t)).collect();
        let mut m = 0.0f64;
        for (z, v) in pts.iter().zip(vals) {
            let v = v?;
            if v.value > m {
                m = v.value;
            }
            if v.value > best.0 {
                best = (v.value, *z);
            }
            worst_err = worst_err.max(v.boundary_error);
        }
        profile.push((rad, m));
    }
    let lattice = build_lattice(opts.lattice_r, opts.sup_radius)?;
    let vals: Vec<Result<AveragingValue>> = lattice.centers.par_iter().map(|&z| av.eval(z, t)).collect();
    for (z, v) in lattice.centers.iter().zip(vals) {
        let v = v?;
        if v.value > best.0 {
            best = (v.value, *z);
        }
        worst_err = worst_err.max(v.boundary_error);
    }
    let values: Vec<f64> = profile.iter().map(|p| p.1).collect();
    let pmax = values.iter().cloned().fold(0.0, f64::max);
    let (trend, trend_exponent) = classify_trend(&values, radii, pmax, opts.tol_vanish);
    let relative_boundary_error = if best.0 > 0.0 { worst_err / best.0 } else { 0.0 };
    Ok(CarlesonStats {
        r,
        t,
        sup_value: best.0,
        sup_location: best.1,
        profile,
        trend,
        trend_exponent,
        relative_boundary_error,
        lp_norm: None,
    })
}

/// `||M_{r,1}(mu)||_{L^s(measure)}` over the nodes of `eval_grid`.
pub fn averaging_lp_norm(
    mu: &PullbackMeasure,
    r: f64,
    s: f64,
    measure: Measure,
    eval_grid: &QuadGrid,
    cloud_grid: &QuadGrid,
) -> Result<LpNorm> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("norm exponent must be positive, got {s}")));
    }
    if eval_grid.alpha != mu.alpha {
        return Err(Error::InvalidParameter("evaluation grid must use the measure's alpha".into()));
    }
    let av = Averager::new(mu, r, cloud_grid)?;
    let i = integrate(
        |z| match av.eval(z, 1.0) {
            Ok(v) => Complex64::new(v.value.max(0.0).powf(s), 0.0),
            Err(_) => Complex64::new(f64::NAN, 0.0),
        },
        eval_grid,
        measure,
        None,
    )?;
    let divergent = measure == Measure::Lambda && i.tail_fraction > DIVERGENCE_TAIL;
    Ok(LpNorm { exponent: s, measure, value: i.value.re.max(0.0).powf(1.0 / s), tail_fraction: i.tail_fraction, divergent })
}

/// Full statistics: profile and supremum for `t = q/p` when `p <= q`; otherwise
/// the `L^{p/(p-q)}(dA_alpha)` norm of `M_{r,1}`.
pub fn carleson_statistics(
    mu: &PullbackMeasure,
    sp: &SpaceParams,
    r: f64,
    opts: &CarlesonOptions,
    grid: &QuadGrid,
    eval_grid: &QuadGrid,
) -> Result<CarlesonStats> {
    let q = sp.target();
    let p = sp.p;
    if p <= q {
        carleson_profile(mu, r, q / p, opts, grid)
    } else {
        let s = p / (p - q);
        let mut stats = carleson_profile(mu, r, 1.0, opts, grid)?;
        stats.lp_norm = Some(averaging_lp_norm(mu, r, s, Measure::AAlpha, eval_grid, grid)?);
        Ok(stats)
    }
}

/// `||D k_z^{[n]}||^2` for `D = a C_{u,phi} + b C_{v,psi}` on `A^2_alpha`.
///
/// For `D^*D` this is the `n`-th Berezin transform. The norm is taken from the
/// Taylor coefficients of `D k_z^{[n]}`.
pub fn berezin_transform(spec: &ComboSpec, z: DiskPoint, n: usize, alpha: f64) -> Result<f64> {
    let k = KernelSpec::new(z, n, alpha)?;
    if spec.is_trivially_zero() {
        return Ok(0.0);
    }
    let norm = k.norm_sq().sqrt();
    let kz = |w: Complex64| k.eval(w) / norm;
    let c = taylor_coeffs_fft(|w| spec.apply(&kz, w), MAX_FFT_LEN)?;
    Ok(c.iter().enumerate().map(|(j, x)| x.norm_sqr() * monomial_norm_sq(j, alpha)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Finiteness {
    FiniteLooking,
    DivergentLooking,
}

/// `∫ ||D k_z^{[n]}||^p dλ(z)` with its tail indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RktIntegral {
    pub p: f64,
    pub n: usize,
    pub value: f64,
    pub tail_fraction: f64,
    pub verdict: Finiteness,
}

impl RktIntegral {
    /// `(∫ ||D k_z||^p dλ)^{1/p}`.
    pub fn root(&self) -> f64 {
        self.value.powf(1.0 / self.p)
    }
}

pub fn rkt_integral(spec: &ComboSpec, p: f64, n: usize, grid: &QuadGrid) -> Result<RktIntegral> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    let alpha = grid.alpha;
    if spec.is_trivially_zero() {
        return Ok(RktIntegral { p, n, value: 0.0, tail_fraction: 0.0, verdict: Finiteness::FiniteLooking });
    }
    let nodes = grid.nodes();
    let vals: Vec<Result<f64>> = nodes.par_iter().map(|nd| berezin_transform(spec, nd.z, n, alpha)).collect();
    let mut total = 0.0;
    let mut abs_last = 0.0;
    let rings = grid.radial_nodes.len();
    for (nd, v) in nodes.iter().zip(vals) {
        let c = v?.max(0.0).powf(p / 2.0) * grid.measure_weight(nd, Measure::Lambda);
        total += c;
        if nd.ring + 1 == rings {
            abs_last += c;
        }
    }
    let tail_fraction = if total > 0.0 { abs_last / total } else { 0.0 };
    let verdict = if tail_fraction > DIVERGENCE_TAIL { Finiteness::DivergentLooking } else { Finiteness::FiniteLooking };
    Ok(RktIntegral { p, n, value: total, tail_fraction, verdict })
}

/// Matrix of `T_mu` in the orthonormal monomial basis of `A^2_alpha`:
/// entries `∫ e_n conj(e_m) dmu`.
pub fn toeplitz_matrix(mu: &PullbackMeasure, truncation: usize, grid: &QuadGrid) -> Result<TruncatedOperator> {
    check_grid(mu, grid)?;
    if truncation == 0 {
        return Err(Error::InvalidParameter("truncation order must be positive".into()));
    }
    let alpha = mu.alpha;
    let t = if mu.transport.is_none() && grid.angular_count >= 2 * truncation {
        toeplitz_by_rings(mu, truncation, grid)?
    } else {
        toeplitz_by_nodes(mu, truncation, grid)?
    };
    let eig = nalgebra::SymmetricEigen::new(t.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let low = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if low < -1e-10 * top.max(1.0) {
        return Err(Error::Numerical(format!("Toeplitz matrix is not positive semidefinite (eigenvalue {low:e})")));
    }
    let b = BasisSpace::Bergman { alpha };
    Ok(TruncatedOperator { matrix: t, source: b, target: b, truncation, tail_estimate: 0.0 })
}

/// `V^* V` with rows `sqrt(W_k) tau_k^n / ||z^n||`.
fn toeplitz_by_nodes(mu: &PullbackMeasure, m: usize, grid: &QuadGrid) -> Result<DMatrix<Complex64>> {
    let norms: Vec<f64> = (0..m).map(|k| monomial_norm_sq(k, mu.alpha).sqrt()).collect();
    let nodes = grid.nodes();
    let rows: Vec<Vec<Complex64>> = nodes
        .par_iter()
        .map(|nd| {
            let w = if mu.known_zero { 0.0 } else { mu.weight(nd.z) * nd.weight };
            let sw = w.max(0.0).sqrt();
            let p = mu.transport_point(nd.z);
            let mut out = Vec::with_capacity(m);
            let mut pw = ONE;
            for nrm in norms.iter() {
                out.push(pw * (sw / nrm));
                pw *= p;
            }
            out
        })
        .collect();
    if rows.iter().flatten().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::Numerical("non-finite Toeplitz integrand".into()));
    }
    let v = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
    Ok(v.adjoint() * &v)
}

/// Density measures: per ring, the angular sum is a Fourier coefficient of the
/// weight, so `T_{mn} = sum_rings W r^{m+n} w_hat(m-n) / (||z^m|| ||z^n||)`.
fn toeplitz_by_rings(mu: &PullbackMeasure, m: usize, grid: &QuadGrid) -> Result<DMatrix<Complex64>> {
    let na = grid.angular_count;
    let norms: Vec<f64> = (0..m).map(|k| monomial_norm_sq(k, mu.alpha).sqrt()).collect();
    let fft = rustfft::FftPlanner::<f64>::new().plan_fft_forward(na);
    let rings: Vec<Result<(f64, f64, Vec<Complex64>)>> = grid
        .radial_nodes
        .par_iter()
        .map(|rn| {
            let mut buf: Vec<Complex64> = (0..na)
                .map(|j| {
                    let z = Complex64::from_polar(rn.r, std::f64::consts::TAU * j as f64 / na as f64);
                    Complex64::new(if mu.known_zero { 0.0 } else { mu.weight(z) }, 0.0)
                })
                .collect();
            if let Some(k) = buf.iter().position(|x| !x.re.is_finite()) {
                let z = Complex64::from_polar(rn.r, std::f64::consts::TAU * k as f64 / na as f64);
                return Err(Error::NonFiniteIntegrand { re: z.re, im: z.im });
            }
            fft.process(&mut buf);
            let scale = 1.0 / na as f64;
            Ok((rn.r, rn.weight, buf.into_iter().map(|x| x * scale).collect()))
        })
        .collect();
    let mut t = DMatrix::<Complex64>::zeros(m, m);
    let mut powers = vec![0.0; 2 * m];
    for ring in rings {
        let (r, w, hat) = ring?;
        let mut pw = w;
        for p in powers.iter_mut() {
            *p = pw;
            pw *= r;
        }
        for col in 0..m {
            for row in 0..m {
                let k = (row as isize - col as isize).rem_euclid(na as isize) as usize;
                t[(row, col)] += hat[k] * powers[row + col];
            }
        }
    }
    for col in 0..m {
        for row in 0..m {
            t[(row, col)] /= norms[row] * norms[col];
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{singular_values, schatten_norm};
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
    fn pullback_examples() {
        let g = build_grid(1.0, 24, 32).unwrap();
        let phi = AnalyticSymbol::poly_real(&[0.1, 0.3, 0.4], Role::SelfMap);
        let mu = PullbackMeasure::new(MeasureLabel::Custom, 1.0, Some(phi), |_| 1.0).unwrap();
        assert_abs_diff_eq!(pullback_integral(|_| ONE, &mu, &g).unwrap().re, 1.0, epsilon = 1e-12);
        let id = PullbackMeasure::area(1.0).unwrap();
        let v = pullback_integral(|z| Complex64::new(z.norm_sqr(), 0.0), &id, &g).unwrap();
        assert_abs_diff_eq!(v.re, 1.0 / 3.0, epsilon = 1e-12);
        let q = quad(&[1.0], &[1.0], &[0.0, 0.5], &[0.0, 0.5]);
        let om = PullbackMeasure::omega_phi(&q, 2.0, 1.0).unwrap();
        assert_eq!(pullback_integral(|_| ONE, &om, &g).unwrap(), ZERO);
    }

    #[test]
    fn averaging_closed_form() {
        for &alpha in &[0.0, 1.0, 2.5] {
            let g = build_grid(alpha, 24, 32).unwrap();
            let mu = PullbackMeasure::area(alpha).unwrap();
            for &r in &[0.5f64, 1.0, 2.0] {
                let th = r.tanh();
                let exact = 1.0 - (1.0 - th * th).powf(alpha + 1.0);
                let v = averaging_function(&mu, ZERO, r, 1.0, &g).unwrap();
                assert_abs_diff_eq!(v.value, exact, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mobius_transport_matches_identity_formula() {
        // phi(z) = z as a linear-fractional map exercises the pre-image path.
        let g = build_grid(0.0, 24, 32).unwrap();
        let lft = AnalyticSymbol::lft(ONE, ZERO, ZERO, ONE, Role::SelfMap).unwrap();
        let mu_l = PullbackMeasure::new(MeasureLabel::Custom, 0.0, Some(lft), |z| 1.0 + z.re * z.re).unwrap();
        let mu_i = PullbackMeasure::density(0.0, |z| 1.0 + z.re * z.re).unwrap();
        for &z in &[c(0.3, 0.2), c(-0.7, 0.1), c(0.0, 0.95)] {
            let a = averaging_function(&mu_l, z, 1.0, 1.0, &g).unwrap().value;
            let b = averaging_function(&mu_i, z, 1.0, 1.0, &g).unwrap().value;
            assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn dilation_transport_matches_cloud() {
        let fine = build_grid(0.0, 128, 512).unwrap();
        let q = quad(&[1.0, 0.5], &[0.0], &[0.0, 0.5], &[0.0]);
        let om = PullbackMeasure::omega_phi(&q, 2.0, 0.0).unwrap();
        let cloud = MeasureCloud::new(&om, &fine).unwrap();
        let av = Averager::new(&om, 1.0, &fine).unwrap();
        for &z in &[c(0.1, 0.1), c(0.4, -0.2)] {
            let (m1, _) = av.disk_mass(z).unwrap();
            let (m2, e2) = cloud.disk_mass(z, 1f64.tanh());
            assert!((m1 - m2).abs() <= e2 + 1e-6, "{m1} vs {m2} +- {e2}");
        }
    }

    #[test]
    fn carleson_examples() {
        let g = build_grid(0.0, 48, 128).unwrap();
        let opts = CarlesonOptions { angles: 8, sup_radius: 0.9, ..Default::default() };
        let area = PullbackMeasure::area(0.0).unwrap();
        let s = carleson_profile(&area, 1.0, 1.0, &opts, &g).unwrap();
        assert_eq!(s.trend, Trend::Bounded);
        assert!(s.profile.iter().all(|p| p.1 <= s.sup_value + 1e-12));
        let q = quad(&[1.0], &[0.0], &[0.0, 0.5], &[0.0]);
        let om = PullbackMeasure::omega_phi(&q, 2.0, 0.0).unwrap();
        let s = carleson_profile(&om, 1.0, 1.0, &opts, &g).unwrap();
        assert_eq!(s.trend, Trend::Vanishing);
        let zero = PullbackMeasure::omega_phi(&quad(&[1.0], &[1.0], &[0.0, 1.0], &[0.0, 1.0]), 2.0, 0.0).unwrap();
        let s = carleson_profile(&zero, 1.0, 1.0, &opts, &g).unwrap();
        assert_eq!(s.sup_value, 0.0);
    }

    #[test]
    fn berezin_examples() {
        let id = ComboSpec { a: ONE, b: ZERO, symbols: quad(&[1.0], &[0.0], &[0.0, 1.0], &[0.0]) };
        for &z in &[ZERO, c(0.5, 0.3), c(-0.95, 0.0)] {
            assert_abs_diff_eq!(berezin_transform(&id, z, 0, 0.0).unwrap(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(berezin_transform(&id, z, 1, 1.0).unwrap(), 1.0, epsilon = 1e-10);
        }
        let dil = ComboSpec { a: ONE, b: ZERO, symbols: quad(&[1.0], &[0.0], &[0.0, 0.5], &[0.0]) };
        assert_abs_diff_eq!(berezin_transform(&dil, ZERO, 0, 0.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn berezin_matches_matrix_quadratic_form() {
        let spec = ComboSpec::difference(quad(&[1.0, 0.3], &[0.5], &[0.1, 0.4], &[0.0, 0.2, -0.3]));
        let t = crate::operators::combo_matrix(&spec, 0.0, 120).unwrap();
        for &z in &[c(0.3, -0.2), c(0.6, 0.1)] {
            let k = KernelSpec::new(z, 0, 0.0).unwrap();
            let norm = k.norm_sq().sqrt();
            let coeffs = k.coeffs(120);
            let x = nalgebra::DVector::from_fn(120, |j, _| coeffs[j] * monomial_norm_sq(j, 0.0).sqrt() / norm);
            let y = &t.matrix * x;
            let form: f64 = y.iter().map(|v| v.norm_sqr()).sum();
            let b = berezin_transform(&spec, z, 0, 0.0).unwrap();
            assert!((form - b).abs() < 1e-10, "{form} vs {b}");
        }
    }

    #[test]
    fn rkt_examples() {
        let g = build_grid(0.0, 24, 32).unwrap();
        let id = ComboSpec { a: ONE, b: ZERO, symbols: quad(&[1.0], &[0.0], &[0.0, 1.0], &[0.0]) };
        assert_eq!(rkt_integral(&id, 2.0, 0, &g).unwrap().verdict, Finiteness::DivergentLooking);
        let dil = ComboSpec { a: ONE, b: ZERO, symbols: quad(&[1.0], &[0.0], &[0.0, 0.5], &[0.0]) };
        let r = rkt_integral(&dil, 2.0, 0, &g).unwrap();
        assert_eq!(r.verdict, Finiteness::FiniteLooking);
        // ∫ ||D k_z||^2 dλ = ||D||_HS^2 / (alpha + 1)
        assert!((r.value - 4.0 / 3.0).abs() < 1e-2, "{}", r.value);
        let zero = ComboSpec::difference(quad(&[1.0], &[1.0], &[0.0, 0.5], &[0.0, 0.5]));
        assert_eq!(rkt_integral(&zero, 2.0, 0, &g).unwrap().value, 0.0);
    }

    #[test]
    fn toeplitz_examples() {
        let g = build_grid(0.0, 48, 96).unwrap();
        let bump = PullbackMeasure::density(0.0, |z: DiskPoint| (1.0 - (z - c(0.3, 0.2)).norm_sqr()).max(0.0).powi(3)).unwrap();
        let by_rings = toeplitz_by_rings(&bump, 20, &build_grid(0.0, 48, 512).unwrap()).unwrap();
        let by_nodes = toeplitz_by_nodes(&bump, 20, &build_grid(0.0, 48, 512).unwrap()).unwrap();
        assert!((by_rings - by_nodes).norm() < 1e-12);
        let t = toeplitz_matrix(&PullbackMeasure::area(0.0).unwrap(), 20, &g).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((t.matrix[(i, j)] - want).norm() < 1e-12);
            }
        }
        let half = toeplitz_matrix(&PullbackMeasure::density(0.0, |_| 0.5).unwrap(), 10, &g).unwrap();
        assert!((half.matrix[(3, 3)].re - 0.5).abs() < 1e-12);
        let dil = PullbackMeasure::new(MeasureLabel::Custom, 0.0, Some(AnalyticSymbol::dilation(c(0.5, 0.0))), |_| 1.0).unwrap();
        let td = toeplitz_matrix(&dil, 20, &g).unwrap();
        for i in 0..20 {
            assert!((td.matrix[(i, i)].re - 0.25f64.powi(i as i32)).abs() < 1e-12);
        }
        let s = singular_values(&td).unwrap();
        assert!((schatten_norm(&s, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-10);
    }
}
