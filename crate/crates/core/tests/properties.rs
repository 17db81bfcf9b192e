use num_complex::Complex64;
use proptest::prelude::*;

use berg_op_lab::carleson::{averaging_function, PullbackMeasure};
use berg_op_lab::geometry::{beta_dist, mobius, one_minus_pseudo_sq, pseudo_dist};
use berg_op_lab::operators::{combo_matrix, frobenius_sq, hs_norm_integral, singular_values, ComboSpec};
use berg_op_lab::quadrature::build_grid;
use berg_op_lab::spaces::littlewood_paley_check;
use berg_op_lab::symbols::{AnalyticSymbol, Role, SymbolQuadruple};

const M: usize = 48;

fn point(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn weight() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(coeff(), 1..=3)
}

/// Polynomial self-map with `sum |c_k| <= bound`.
fn self_map(bound: f64) -> impl Strategy<Value = Vec<Complex64>> {
    (prop::collection::vec(coeff(), 2..=4), 0.1..bound).prop_map(|(c, b)| {
        let l1: f64 = c.iter().map(|x| x.norm()).sum();
        c.iter().map(|x| x * (b / l1.max(1e-12))).collect()
    })
}

fn quadruple(u: &[Complex64], v: &[Complex64], phi: &[Complex64], psi: &[Complex64]) -> SymbolQuadruple {
    SymbolQuadruple::new(
        AnalyticSymbol::poly(u.to_vec(), Role::Weight),
        AnalyticSymbol::poly(v.to_vec(), Role::Weight),
        AnalyticSymbol::poly(phi.to_vec(), Role::SelfMap),
        AnalyticSymbol::poly(psi.to_vec(), Role::SelfMap),
    )
    .unwrap()
}

fn spectrum(q: &SymbolQuadruple, alpha: f64) -> Vec<f64> {
    singular_values(&combo_matrix(&ComboSpec::difference(q.clone()), alpha, M).unwrap()).unwrap().values
}

fn assert_close_spectra(a: &[f64], b: &[f64]) -> Result<(), TestCaseError> {
    let top = a.first().copied().unwrap_or(0.0).max(1e-300);
    for (x, y) in a.iter().zip(b) {
        prop_assert!((x - y).abs() <= 1e-10 * top, "{x} vs {y}");
    }
    Ok(())
}

/// `f(e^{i t} z)` as coefficients.
fn rotate_argument(c: &[Complex64], t: f64) -> Vec<Complex64> {
    c.iter().enumerate().map(|(k, x)| x * Complex64::from_polar(1.0, k as f64 * t)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn strong_triangle_inequality(z in point(0.99), w in point(0.99), x in point(0.99)) {
        let (a, b) = (pseudo_dist(z, x), pseudo_dist(x, w));
        prop_assert!(pseudo_dist(z, w) <= (a + b) / (1.0 + a * b) + 1e-12);
        prop_assert!(beta_dist(z, w) <= beta_dist(z, x) + beta_dist(x, w) + 1e-9);
    }

    #[test]
    fn mobius_is_an_involution_and_isometry(a in point(0.95), z in point(0.99), w in point(0.99)) {
        let back = mobius(a, mobius(a, z).unwrap()).unwrap();
        prop_assert!((back - z).norm() < 1e-10);
        let d = pseudo_dist(z, w);
        let da = pseudo_dist(mobius(a, z).unwrap(), mobius(a, w).unwrap());
        prop_assert!((d - da).abs() <= 1e-12 * d.max(1e-3));
        let exact = 1.0 - d * d;
        prop_assert!((one_minus_pseudo_sq(z, w) - exact).abs() <= 1e-9 * exact.max(1e-6));
    }

    /// For `d(z, w) < s`, `(1 - |z|^2)/(1 - |w|^2)` lies in `[(1-s)/(1+s), (1+s)/(1-s)]`.
    #[test]
    fn pseudo_disk_distortion_bracket(z in point(0.99), t in 0.0..std::f64::consts::TAU, frac in 0.0..1.0f64, s in 0.1..0.9f64) {
        let w = mobius(z, Complex64::from_polar(frac * s, t)).unwrap();
        prop_assert!(pseudo_dist(z, w) <= s + 1e-12);
        let ratio = (1.0 - z.norm_sqr()) / (1.0 - w.norm_sqr());
        let c = (1.0 + s) / (1.0 - s);
        prop_assert!(ratio <= c * (1.0 + 1e-9) && ratio >= (1.0 - 1e-9) / c, "ratio {ratio}, bound {c}");
    }

    #[test]
    fn littlewood_paley_ratio_is_bracketed(c in prop::collection::vec(coeff(), 1..40)) {
        let lp = littlewood_paley_check(&c);
        prop_assert!(lp.ratio >= 0.5 - 1e-12 && lp.ratio <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn weights_scale_singular_values(u in weight(), v in weight(), phi in self_map(0.9), psi in self_map(0.9), k in coeff(), alpha in -0.5..2.0f64) {
        let q = quadruple(&u, &v, &phi, &psi);
        let scaled: Vec<Complex64> = u.iter().map(|x| x * k).collect();
        let scaled_v: Vec<Complex64> = v.iter().map(|x| x * k).collect();
        let s = spectrum(&q, alpha);
        let sk = spectrum(&quadruple(&scaled, &scaled_v, &phi, &psi), alpha);
        let expect: Vec<f64> = s.iter().map(|x| x * k.norm()).collect();
        assert_close_spectra(&sk, &expect)?;
    }

    #[test]
    fn swapping_the_pairs_preserves_the_spectrum(u in weight(), v in weight(), phi in self_map(0.9), psi in self_map(0.9)) {
        let q = quadruple(&u, &v, &phi, &psi);
        assert_close_spectra(&spectrum(&q, 0.0), &spectrum(&q.swapped(), 0.0))?;
        let grid = build_grid(0.0, 48, 96).unwrap();
        let (a, b) = (hs_norm_integral(&q, 0.0, &grid).unwrap().value, hs_norm_integral(&q.swapped(), 0.0, &grid).unwrap().value);
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-12));
    }

    /// Rotating the argument of all symbols, or the values of both self-maps, is a unitary change.
    #[test]
    fn rotations_preserve_the_spectrum(u in weight(), v in weight(), phi in self_map(0.8), psi in self_map(0.8), t in 0.0..std::f64::consts::TAU) {
        let q = quadruple(&u, &v, &phi, &psi);
        let s = spectrum(&q, 0.5);
        let arg = quadruple(&rotate_argument(&u, t), &rotate_argument(&v, t), &rotate_argument(&phi, t), &rotate_argument(&psi, t));
        let rot = Complex64::from_polar(1.0, t);
        let val = quadruple(&u, &v, &phi.iter().map(|x| x * rot).collect::<Vec<_>>(), &psi.iter().map(|x| x * rot).collect::<Vec<_>>());
        assert_close_spectra(&s, &spectrum(&arg, 0.5))?;
        assert_close_spectra(&s, &spectrum(&val, 0.5))?;
    }

    #[test]
    fn schatten_norms_decrease_in_p(u in weight(), v in weight(), phi in self_map(0.9), psi in self_map(0.9)) {
        let q = quadruple(&u, &v, &phi, &psi);
        let s = singular_values(&combo_matrix(&ComboSpec::difference(q), 0.0, M).unwrap()).unwrap();
        let norms: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|&p| s.schatten_norm(p).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert!(s.operator_norm() <= norms[4] * (1.0 + 1e-12));
    }

    /// Singular values of nested truncations interlace, so each grows with `M`.
    #[test]
    fn singular_values_grow_with_truncation(u in weight(), v in weight(), phi in self_map(0.95), psi in self_map(0.95)) {
        let spec = ComboSpec::difference(quadruple(&u, &v, &phi, &psi));
        let small = singular_values(&combo_matrix(&spec, 0.0, 16).unwrap()).unwrap().values;
        let large = singular_values(&combo_matrix(&spec, 0.0, 32).unwrap()).unwrap().values;
        let top = large[0].max(1e-300);
        for (a, b) in small.iter().zip(&large) {
            prop_assert!(*a <= b + 1e-12 * top);
        }
    }

    /// The truncated Frobenius norm never exceeds the Hilbert-Schmidt integral.
    #[test]
    fn truncation_is_bounded_by_the_hs_integral(u in weight(), v in weight(), phi in self_map(0.8), psi in self_map(0.8)) {
        let q = quadruple(&u, &v, &phi, &psi);
        let fro = frobenius_sq(&combo_matrix(&ComboSpec::difference(q.clone()), 0.0, 16).unwrap());
        let grid = build_grid(0.0, 48, 96).unwrap();
        let hs = hs_norm_integral(&q, 0.0, &grid).unwrap().value;
        prop_assert!(fro <= hs * (1.0 + 1e-8) + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// `M_{r,1}` grows with `r`; for `dA_alpha` the ratio between radii 1/2 and 1 stays in a fixed bracket.
    #[test]
    fn averaging_function_is_monotone_in_radius(z in point(0.9), alpha in 0.0..2.0f64, cx in -0.5..0.5f64, cy in -0.5..0.5f64) {
        let grid = build_grid(alpha, 24, 48).unwrap();
        let center = Complex64::new(cx, cy);
        let bump = PullbackMeasure::density(alpha, move |w: Complex64| (1.0 - (w - center).norm_sqr()).max(0.0)).unwrap();
        let area = PullbackMeasure::area(alpha).unwrap();
        for mu in [&bump, &area] {
            let small = averaging_function(mu, z, 0.5, 1.0, &grid).unwrap().value;
            let large = averaging_function(mu, z, 1.0, 1.0, &grid).unwrap().value;
            prop_assert!(small <= large * (1.0 + 1e-6) + 1e-12);
        }
        let small = averaging_function(&area, z, 0.5, 1.0, &grid).unwrap().value;
        let large = averaging_function(&area, z, 1.0, 1.0, &grid).unwrap().value;
        prop_assert!(large / small <= 50.0, "ratio {}", large / small);
    }
}
