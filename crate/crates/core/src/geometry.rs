//! Hyperbolic geometry of the unit disk.
//!
//! The pseudo-hyperbolic distance is `d(z, w) = |z - w| / |1 - conj(z) w|` and the
//! Bergman metric is `beta = artanh(d)`. Metric disks `D(z, r)` in the Bergman
//! metric coincide with pseudo-hyperbolic disks `E(z, tanh r)`, which are
//! Euclidean disks with shifted centers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the open unit disk, stored as a complex number.
pub type DiskPoint = Complex64;

/// Guard applied to every `1 - |.|` style denominator.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Default cap on the number of lattice centers.
pub const DEFAULT_LATTICE_CAP: usize = 100_000;

pub fn check_in_disk(z: DiskPoint) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > 1.0 - BOUNDARY_EPS {
        return Err(Error::OutsideDisk { re: z.re, im: z.im });
    }
    Ok(())
}

/// `1 - |z|^2` evaluated as `(1 - |z|)(1 + |z|)` for accuracy near the circle.
#[inline]
pub fn one_minus_sq(z: DiskPoint) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

/// The involution `phi_a(w) = (a - w) / (1 - conj(a) w)` exchanging `a` and `0`.
pub fn mobius(a: DiskPoint, w: DiskPoint) -> Result<DiskPoint> {
    check_in_disk(a)?;
    check_in_disk(w)?;
    let den = Complex64::new(1.0, 0.0) - a.conj() * w;
    if den.norm() < BOUNDARY_EPS {
        return Err(Error::BoundaryProximity { context: format!("1 - conj(a) w for a = {a}, w = {w}") });
    }
    Ok((a - w) / den)
}

/// Unchecked Möbius involution for inner loops; callers guarantee `|a|, |w| < 1`.
#[inline]
pub fn mobius_raw(a: DiskPoint, w: DiskPoint) -> DiskPoint {
    (a - w) / (Complex64::new(1.0, 0.0) - a.conj() * w)
}

/// Unchecked pseudo-hyperbolic distance.
#[inline]
pub fn pseudo_dist(z: DiskPoint, w: DiskPoint) -> f64 {
    let num = (z - w).norm();
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm();
    if num == 0.0 {
        return 0.0;
    }
    (num / den).min(1.0 - f64::EPSILON)
}

/// Unchecked Bergman distance.
#[inline]
pub fn beta_dist(z: DiskPoint, w: DiskPoint) -> f64 {
    pseudo_dist(z, w).atanh()
}

pub fn pseudo_distance(z: DiskPoint, w: DiskPoint) -> Result<f64> {
    check_in_disk(z)?;
    check_in_disk(w)?;
    Ok(pseudo_dist(z, w))
}

/// `1 - d(z, w)^2` through the closed-form product, useful for checking the identity
/// `1 - d^2 = (1 - |z|^2)(1 - |w|^2) / |1 - conj(z) w|^2`.
pub fn one_minus_pseudo_sq(z: DiskPoint, w: DiskPoint) -> f64 {
    let den = (Complex64::new(1.0, 0.0) - z.conj() * w).norm_sqr();
    one_minus_sq(z) * one_minus_sq(w) / den
}

pub fn bergman_distance(z: DiskPoint, w: DiskPoint) -> Result<f64> {
    let d = pseudo_distance(z, w)?;
    if d >= 1.0 - 1e-15 {
        return Err(Error::BoundaryProximity { context: format!("Bergman distance overflow, d = {d}") });
    }
    Ok(d.atanh())
}

/// A Euclidean disk inside the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisk {
    pub center: DiskPoint,
    pub radius: f64,
}

impl EuclideanDisk {
    pub fn contains(&self, w: DiskPoint) -> bool {
        (w - self.center).norm() < self.radius
    }
}

/// Euclidean center and radius of the pseudo-hyperbolic disk `E(z, s)`.
pub fn pseudo_disk_euclidean(z: DiskPoint, s: f64) -> Result<EuclideanDisk> {
    check_in_disk(z)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("pseudo-hyperbolic radius must lie in (0,1), got {s}")));
    }
    let den = 1.0 - s * s * z.norm_sqr();
    Ok(EuclideanDisk {
        center: z * ((1.0 - s * s) / den),
        radius: s * one_minus_sq(z) / den,
    })
}

/// Options controlling the greedy lattice construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeOptions {
    /// Traverse the candidate spiral clockwise instead of counter-clockwise.
    pub clockwise: bool,
    /// Maximum number of centers.
    pub cap: usize,
    /// Hyperbolic spacing of the candidate spiral.
    pub candidate_spacing: f64,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        Self { clockwise: false, cap: DEFAULT_LATTICE_CAP, candidate_spacing: 0.1 }
    }
}

/// A finite r-lattice in the Bergman metric, certified up to `coverage_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub centers: Vec<DiskPoint>,
    pub radius_r: f64,
    pub coverage_radius: f64,
    /// Cells left undecided at the resolution floor of the covering certificate.
    pub unresolved_cells: usize,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Whether `z` lies in some `D(a_j, r)`.
    pub fn covers(&self, z: DiskPoint) -> bool {
        let s = self.radius_r.tanh();
        self.centers.iter().any(|&a| pseudo_dist(z, a) < s)
    }

    /// Smallest Bergman distance between two distinct centers.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, &a) in self.centers.iter().enumerate() {
            for &b in &self.centers[i + 1..] {
                best = best.min(beta_dist(a, b));
            }
        }
        best
    }

    /// Number of centers with `beta(z, a_j) < radius`.
    pub fn count_within(&self, z: DiskPoint, radius: f64) -> usize {
        let s = radius.tanh();
        self.centers.iter().filter(|&&a| pseudo_dist(z, a) < s).count()
    }
}

/// Greedy r-lattice: centers are pairwise at Bergman distance `>= r` and the disks
/// `D(a_j, r)` cover `{|z| <= coverage_radius}`.
pub fn build_lattice(r: f64, coverage_radius: f64) -> Result<Lattice> {
    build_lattice_with(r, coverage_radius, LatticeOptions::default())
}

pub fn build_lattice_with(r: f64, coverage_radius: f64, opts: LatticeOptions) -> Result<Lattice> {
    if !(r > 0.0 && r <= 5.0) {
        return Err(Error::InvalidParameter(format!("lattice radius r must lie in (0, 5], got {r}")));
    }
    if !(coverage_radius > 0.0 && coverage_radius <= 1.0 - 1e-6) {
        return Err(Error::InvalidParameter(format!(
            "coverage radius must lie in (0, 1 - 1e-6], got {coverage_radius}"
        )));
    }
    let t_max = coverage_radius.atanh();
    // Rough hyperbolic-area estimate of the packing size, checked before any work.
    let area = std::f64::consts::PI * (coverage_radius * coverage_radius) / one_minus_sq(Complex64::new(coverage_radius, 0.0));
    let half = (r / 2.0).tanh();
    let small_disk = std::f64::consts::PI * half * half / (1.0 - half * half);
    let estimate = (area / small_disk).ceil() as usize;
    if estimate > opts.cap {
        return Err(Error::LatticeTooLarge { cap: opts.cap, r, coverage: coverage_radius });
    }

    let orient = |z: Complex64| if opts.clockwise { z.conj() } else { z };
    let mut centers: Vec<DiskPoint> = Vec::new();
    let far_enough = |centers: &[DiskPoint], c: DiskPoint| centers.iter().all(|&a| beta_dist(c, a) >= r);

    // Greedy pass over the candidate spiral.
    let delta = opts.candidate_spacing.min(r / 4.0);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    // Candidates run a little past the covered region so that its outer edge is
    // not left to the certification pass alone.
    let rings = ((t_max + 0.5 * r) / delta).floor() as usize;
    // Rings sit at half-integer multiples of the spacing so that no ring lies at
    // distance exactly r from the origin; such ties leave an uncovered circle.
    for k in 0..=rings {
        let t = if k == 0 { 0.0 } else { (k as f64 - 0.5) * delta };
        let rho = t.tanh();
        let n = if k == 0 { 1 } else { (std::f64::consts::PI * (2.0 * t).sinh() / delta).ceil().max(1.0) as usize };
        let phase = k as f64 * golden;
        for j in 0..n {
            let theta = phase + std::f64::consts::TAU * j as f64 / n as f64;
            let c = orient(Complex64::from_polar(rho, theta));
            if far_enough(&centers, c) {
                centers.push(c);
                if centers.len() > opts.cap {
                    return Err(Error::LatticeTooLarge { cap: opts.cap, r, coverage: coverage_radius });
                }
            }
        }
    }

    // Covering certificate: polar cells in hyperbolic radius. Each cell is either
    // covered with margin, has an uncovered center (which becomes a new center),
    // or is split.
    let h_floor = 1e-9;
    let mut unresolved = 0usize;
    let band = (r / 4.0).min(0.25);
    let bands = (t_max / band).ceil() as usize;
    let mut stack: Vec<(f64, f64, f64, f64)> = Vec::new();
    for b in (0..bands).rev() {
        let t0 = b as f64 * band;
        let t1 = (t0 + band).min(t_max);
        let per_radian = (2.0 * t1).sinh() / 2.0;
        let n = ((std::f64::consts::TAU * per_radian) / band).ceil().max(4.0) as usize;
        for j in (0..n).rev() {
            let th0 = std::f64::consts::TAU * j as f64 / n as f64;
            let th1 = std::f64::consts::TAU * (j + 1) as f64 / n as f64;
            stack.push((t0, t1, th0, th1));
        }
    }
    let mut budget = 50_000_000usize;
    while let Some((t0, t1, th0, th1)) = stack.pop() {
        if t0 > t_max {
            continue;
        }
        budget = budget.checked_sub(1).ok_or_else(|| {
            Error::Numerical(format!("covering certificate did not terminate (r = {r}, coverage = {coverage_radius})"))
        })?;
        let tc = 0.5 * (t0 + t1);
        let thc = 0.5 * (th0 + th1);
        let zc = orient(Complex64::from_polar(tc.tanh(), thc));
        let h = 0.5 * (t1 - t0) + 0.5 * (th1 - th0) * (2.0 * t1).sinh() / 2.0;
        let m = centers.iter().map(|&a| pseudo_dist(zc, a)).fold(1.0f64, f64::min).atanh();
        if m + h < r {
            continue;
        }
        if m >= r {
            centers.push(zc);
            if centers.len() > opts.cap {
                return Err(Error::LatticeTooLarge { cap: opts.cap, r, coverage: coverage_radius });
            }
            if h < r {
                continue;
            }
        }
        if h < h_floor {
            unresolved += 1;
            continue;
        }
        let tm = tc;
        let thm = thc;
        stack.push((tm, t1, thm, th1));
        stack.push((tm, t1, th0, thm));
        stack.push((t0, tm, thm, th1));
        stack.push((t0, tm, th0, thm));
    }

    Ok(Lattice { centers, radius_r: r, coverage_radius, unresolved_cells: unresolved })
}

/// Area-uniform random points with `|z| <= radius`.
pub fn sample_disk_points(radius: f64, count: usize, seed: u64) -> Vec<DiskPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            Complex64::from_polar(radius * u.sqrt(), theta)
        })
        .collect()
}

/// Maximum, over sampled points of the covered region, of the number of disks
/// `D(a_j, factor * r)` containing the point.
pub fn covering_multiplicity(lat: &Lattice, factor: f64, samples: usize, seed: u64) -> Result<usize> {
    if !(factor > 0.0) {
        return Err(Error::InvalidParameter(format!("multiplicity factor must be positive, got {factor}")));
    }
    let radius = factor * lat.radius_r;
    Ok(sample_disk_points(lat.coverage_radius, samples, seed)
        .into_iter()
        .map(|z| lat.count_within(z, radius))
        .max()
        .unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mobius_examples() {
        let w = c(0.3, -0.2);
        assert_abs_diff_eq!((mobius(c(0.0, 0.0), w).unwrap() + w).norm(), 0.0, epsilon = 1e-15);
        let a = c(0.4, 0.1);
        assert!(mobius(a, a).unwrap().norm() < 1e-15);
        let v = mobius(c(0.5, 0.0), c(0.25, 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, 0.25 / 0.875, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0);
    }

    #[test]
    fn mobius_is_involutive() {
        let a = c(-0.7, 0.5);
        let w = c(0.1, 0.9);
        let back = mobius(a, mobius(a, w).unwrap()).unwrap();
        assert!((back - w).norm() < 1e-12);
    }

    #[test]
    fn rejects_boundary_points() {
        assert!(matches!(mobius(c(1.0, 0.0), c(0.0, 0.0)), Err(Error::OutsideDisk { .. })));
        assert!(pseudo_distance(c(0.0, 2.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn distance_examples() {
        let w = c(0.3, 0.4);
        assert_abs_diff_eq!(pseudo_distance(c(0.0, 0.0), w).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(pseudo_distance(w, w).unwrap(), 0.0);
        assert_abs_diff_eq!(pseudo_distance(c(0.5, 0.0), c(-0.5, 0.0)).unwrap(), 0.8, epsilon = 1e-15);
        assert_eq!(bergman_distance(w, w).unwrap(), 0.0);
        assert_abs_diff_eq!(bergman_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap(), 0.5493061443340549, epsilon = 1e-14);
        assert_abs_diff_eq!(bergman_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap().tanh(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bergman_distance_overflow() {
        let z = c(0.999_999_999, 0.0);
        assert!(matches!(bergman_distance(-z, z), Err(Error::BoundaryProximity { .. })));
    }

    #[test]
    fn pseudo_disk_examples() {
        let d0 = pseudo_disk_euclidean(c(0.0, 0.0), 0.3).unwrap();
        assert_eq!(d0.center, c(0.0, 0.0));
        assert_abs_diff_eq!(d0.radius, 0.3, epsilon = 1e-15);
        let d = pseudo_disk_euclidean(c(0.5, 0.0), 0.5).unwrap();
        assert_abs_diff_eq!(d.center.re, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(d.radius, 0.4, epsilon = 1e-15);
        assert!(pseudo_disk_euclidean(c(0.5, 0.0), 1.0).is_err());
    }

    #[test]
    fn pseudo_disk_boundary_samples() {
        for &(z, s) in &[(c(0.5, 0.3), 0.5), (c(-0.9, 0.05), 0.76), (c(0.0, 0.99), 0.2)] {
            let disk = pseudo_disk_euclidean(z, s).unwrap();
            for k in 0..64 {
                let w = disk.center + Complex64::from_polar(disk.radius, k as f64 * 0.098_174_77);
                assert!((pseudo_dist(z, w) - s).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lattice_small_invariants() {
        let lat = build_lattice(1.0, 0.8).unwrap();
        assert!(lat.min_separation() >= 1.0);
        for z in sample_disk_points(0.8, 2000, 7) {
            assert!(lat.covers(z));
        }
        assert_eq!(covering_multiplicity(&lat, 0.49, 2000, 3).unwrap(), 1);
        assert!(covering_multiplicity(&lat, 1.0, 2000, 3).unwrap() >= 1);
    }

    #[test]
    fn lattice_rejects_bad_parameters() {
        assert!(build_lattice(0.0, 0.5).is_err());
        assert!(build_lattice(1.0, 1.0).is_err());
        let opts = LatticeOptions { cap: 10, ..Default::default() };
        assert!(matches!(build_lattice_with(0.2, 0.99, opts), Err(Error::LatticeTooLarge { .. })));
    }

    #[test]
    fn clockwise_lattice_is_mirror_image() {
        let a = build_lattice(1.0, 0.9).unwrap();
        let b = build_lattice_with(1.0, 0.9, LatticeOptions { clockwise: true, ..Default::default() }).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.centers.iter().zip(&b.centers) {
            assert_eq!(*x, y.conj());
        }
    }
}
