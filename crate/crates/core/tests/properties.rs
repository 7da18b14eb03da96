use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use orbitdim::boxdim::{
    estimate_dimension, exact_measure_1d, projective_dimensions, EstimatorConfig,
};
use orbitdim::dynsys::{generate_orbit, MapSystem, Orbit, OrbitSettings};
use orbitdim::eigen::eigenvalues;
use orbitdim::expr::{Expression, Func, Node};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vars() -> Arc<[String]> {
    vec!["x".to_string(), "y".to_string()].into()
}

/// Random expression trees of depth at most 6. Denominators are kept away
/// from zero so finite differences stay meaningful.
fn node_strategy() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (-2.0f64..2.0).prop_map(Node::Const),
        (0usize..2).prop_map(Node::Var),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone(), 1.0f64..2.0).prop_map(|(a, b, c)| {
                let den = Node::Add(Box::new(Node::Const(c)), Box::new(Node::Pow(Box::new(b), 2)));
                Node::Div(Box::new(a), Box::new(den))
            }),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Node::Pow(Box::new(a), k)),
            (inner, 0usize..3).prop_map(|(a, f)| {
                let func = [Func::Exp, Func::Sin, Func::Cos][f];
                Node::Call(func, Box::new(a))
            }),
        ]
    })
}

fn richardson(e: &Expression, p: &[f64], var: usize) -> f64 {
    let central = |h: f64| {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[var] += h;
        b[var] -= h;
        (e.eval(&a) - e.eval(&b)) / (2.0 * h)
    };
    let h = 1e-3;
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn derivative_matches_richardson(
        root in node_strategy(),
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
        var in 0usize..2,
    ) {
        let e = Expression::new(root, vars()).unwrap();
        let p = [x, y];
        let f = e.eval(&p);
        prop_assume!(f.is_finite() && f.abs() < 1e4);
        let d = e.differentiate(var).unwrap().eval(&p);
        prop_assume!(d.is_finite() && d.abs() < 1e4);
        let fd = richardson(&e, &p, var);
        prop_assert!((d - fd).abs() <= 1e-5 * (1.0 + d.abs()), "{e}: symbolic {d}, fd {fd}");
    }

    #[test]
    fn printed_form_reparses(root in node_strategy(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let e = Expression::new(root, vars()).unwrap();
        let text = e.to_string();
        let back = Expression::parse(&text, &["x", "y"]).unwrap();
        let (a, b) = (e.eval(&[x, y]), back.eval(&[x, y]));
        prop_assert!(a == b || (a.is_nan() && b.is_nan()), "{text}: {a} vs {b}");
    }

    #[test]
    fn taylor_is_exact_on_polynomials(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..6),
        center in -1.0f64..1.0,
    ) {
        let e = Expression::polynomial(&coeffs, 0, vec!["x".to_string()].into()).unwrap();
        let t = e.taylor_coefficients(&[center], 5).unwrap().univariate();
        // Re-expand p(center + h) by the binomial theorem.
        let mut want = vec![0.0; 6];
        for (j, &c) in coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for (i, w) in want.iter_mut().enumerate().take(j + 1) {
                *w += c * binom * center.powi((j - i) as i32);
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
        }
        for (got, w) in t.iter().zip(&want) {
            prop_assert!((got - w).abs() <= 1e-12 * (1.0 + w.abs()));
        }
    }

    #[test]
    fn neighborhood_measure_is_monotone(
        mut pts in prop::collection::vec(-1.0f64..1.0, 1..200),
        e1 in 1e-6f64..1.0,
        e2 in 1e-6f64..1.0,
    ) {
        pts.sort_by(f64::total_cmp);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = exact_measure_1d(&pts, lo).unwrap().measure;
        let b = exact_measure_1d(&pts, hi).unwrap().measure;
        prop_assert!(a <= b);
        prop_assert!(b <= 2.0 * hi * pts.len() as f64 + 1e-12);
    }
}

fn k_orbit(text: &str, n: usize) -> Orbit {
    let sys = MapSystem::from_strs("k", &["x"], &[text]).unwrap();
    generate_orbit(&sys, &[0.5], &OrbitSettings::with_max_n(n)).unwrap()
}

#[test]
fn dimension_is_scale_invariant() {
    let cfg = EstimatorConfig::default();
    let orbit = k_orbit("x - x^2", 200_000);
    let base = estimate_dimension(&orbit, &cfg).unwrap().value;
    for c in [1e-3, 0.37, 12.0] {
        let scaled: Vec<f64> = orbit.coordinate(0).iter().map(|v| c * v).collect();
        let o = Orbit::from_scalars(&scaled, 0.0).unwrap();
        let d = estimate_dimension(&o, &cfg).unwrap().value;
        assert!((d - base).abs() < 0.01, "scale {c}: {d} vs {base}");
    }
}

#[test]
fn bilipschitz_lift_preserves_dimension() {
    let cfg = EstimatorConfig::default();
    let orbit = k_orbit("x - x^3", 300_000);
    let d1 = estimate_dimension(&orbit, &cfg).unwrap().value;
    let pts: Vec<Vec<f64>> = orbit
        .points()
        .map(|p| vec![p[0], 0.5 * p[0] + p[0] * p[0] * p[0]])
        .collect();
    let lifted = Orbit::from_points(&pts, vec![0.0, 0.0]).unwrap();
    let d2 = estimate_dimension(&lifted, &cfg).unwrap().value;
    assert!((d1 - d2).abs() < 0.05, "{d1} vs {d2}");
}

#[test]
fn projections_do_not_exceed_the_set() {
    let cfg = EstimatorConfig::default();
    let base = k_orbit("x - x^2", 200_000);
    let pts: Vec<Vec<f64>> = base.points().map(|p| vec![p[0], p[0] * p[0]]).collect();
    let orbit = Orbit::from_points(&pts, vec![0.0, 0.0]).unwrap();
    let full = estimate_dimension(&orbit, &cfg).unwrap().value;
    for axis in projective_dimensions(&orbit, &cfg).unwrap() {
        assert!(axis.value <= full + 0.05, "{} > {full}", axis.value);
    }
}

fn smallest_singular_value(a: &DMatrix<f64>, lambda: Complex64) -> f64 {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
        Complex64::new(a[(i, j)], 0.0) - d
    });
    m.singular_values().min()
}

#[test]
fn eigenvalue_residuals_are_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(1..=16);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let eigs = eigenvalues(&a).unwrap();
        assert_eq!(eigs.len(), n);
        let scale = a.norm();
        for l in &eigs {
            let s = smallest_singular_value(&a, *l);
            assert!(s < 1e-8 * scale, "n = {n}: σ_min {s:e} for {l}");
            if l.im.abs() > 1e-9 {
                assert!(eigs.iter().any(|m| (m - l.conj()).norm() < 1e-9));
            }
        }
        let trace: f64 = eigs.iter().map(|l| l.re).sum();
        assert!((trace - a.trace()).abs() < 1e-9 * (1.0 + scale));
    }
}

#[test]
fn symmetric_matrices_have_real_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let n = rng.gen_range(2..=10);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = &b + b.transpose();
        let mut got: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|l| l.re).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{got:?} vs {want:?}");
        }
    }
}
