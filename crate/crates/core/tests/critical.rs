use approx::assert_abs_diff_eq;
use kg_core::critical::{
    classify_critical, f_eval, find_critical_orbits, grad_f, transverse_basis, Classification, SearchOptions,
};
use kg_core::gallery::{make_flat_lorentzian_torus, make_klein_bottle, make_stationary_sphere};
use kg_core::geodesic::{flow, flow_sampled, hausdorff_distance};
use kg_core::geometry::Point;
use kg_core::ode::OdeOptions;
use kg_core::GeoError;
use nalgebra::DVector;
use proptest::prelude::*;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

/// `f = −(|z|² + α²|w|²)` on the sphere.
fn f_closed_form(p: &Point<f64>, alpha: f64) -> f64 {
    -(p[0] * p[0] + p[1] * p[1] + alpha * alpha * (p[2] * p[2] + p[3] * p[3]))
}

#[test]
fn f_eval_examples() {
    let k = make_klein_bottle::<f64>().unwrap();
    for p in k.geometry.manifold.sample_many(10, 1) {
        assert_eq!(f_eval(&k.geometry, &k.killing.field, &p).unwrap(), -1.0);
    }
    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let f = |x: &[f64]| f_eval(&s.geometry, &s.killing.field, &v(x)).unwrap();
    assert_abs_diff_eq!(f(&[1.0, 0.0, 0.0, 0.0]), -1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(f(&[0.0, 0.0, 1.0, 0.0]), -2.0, epsilon = 1e-14);
    let null = make_flat_lorentzian_torus(1.0, 1.0).unwrap();
    assert_eq!(f_eval(&null.geometry, &null.killing.field, &v(&[0.3, 0.2])).unwrap(), 0.0);
}

#[test]
fn gradient_examples() {
    let k = make_klein_bottle::<f64>().unwrap();
    assert!(grad_f(&k.geometry, &k.killing.field, &v(&[0.4, 0.1])).unwrap().norm() < 1e-12);

    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let c = 0.6f64;
    let on_c1 = v(&[c, (1.0 - c * c).sqrt(), 0.0, 0.0]);
    assert!(grad_f(&s.geometry, &s.killing.field, &on_c1).unwrap().norm() < 1e-8);

    let h = 0.5f64.sqrt();
    let mid = v(&[h, 0.0, h, 0.0]);
    let g = grad_f(&s.geometry, &s.killing.field, &mid).unwrap();
    assert!(g.norm() > 0.1);
    // g(grad f, b) against a central difference of the closed form along the sphere
    for b in s.geometry.manifold.tangent_basis(&mid) {
        let step = 1e-5;
        let plus = (&mid + &b * step).normalize();
        let minus = (&mid - &b * step).normalize();
        let fd = (f_closed_form(&plus, 2f64.sqrt()) - f_closed_form(&minus, 2f64.sqrt())) / (2.0 * step);
        let exact = s.geometry.metric.inner(&mid, &g, &b).unwrap();
        assert_abs_diff_eq!(fd, exact, epsilon = 1e-6);
    }
}

#[test]
fn classification_examples() {
    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let k = &s.killing.field;
    assert_eq!(classify_critical(&s.geometry, k, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap(), Classification::Max);
    assert_eq!(classify_critical(&s.geometry, k, &v(&[0.0, 0.0, 0.0, 1.0])).unwrap(), Classification::Min);
    let h = 0.5f64.sqrt();
    assert!(matches!(
        classify_critical(&s.geometry, k, &v(&[h, 0.0, h, 0.0])),
        Err(GeoError::NotCritical(_))
    ));
    let klein = make_klein_bottle::<f64>().unwrap();
    assert!(matches!(
        classify_critical(&klein.geometry, &klein.killing.field, &v(&[0.2, 0.2])),
        Err(GeoError::NotCritical(_))
    ));
}

#[test]
fn transverse_basis_is_orthogonal_to_the_flow() {
    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let p = v(&[0.5, 0.5, 0.5, 0.5]);
    let kp = s.killing.at(&p);
    let basis = transverse_basis(&s.geometry, &s.killing.field, &p);
    assert_eq!(basis.len(), 2);
    for b in &basis {
        assert!(b.dot(&kp).abs() < 1e-12);
        assert!(b.dot(&p).abs() < 1e-12);
    }
}

#[test]
fn stationary_sphere_has_two_orbits() {
    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let opts = SearchOptions {
        budget: 16,
        ..SearchOptions::default()
    };
    let orbits = find_critical_orbits(&s.geometry, &s.killing, &opts).unwrap();
    assert_eq!(orbits.len(), 2);
    let (min, max) = (&orbits[0], &orbits[1]);
    assert_abs_diff_eq!(min.f_value, -2.0, epsilon = 1e-6);
    assert_abs_diff_eq!(max.f_value, -1.0, epsilon = 1e-6);
    assert_eq!(min.classification, Classification::Min);
    assert_eq!(max.classification, Classification::Max);
    assert_abs_diff_eq!(min.period.unwrap(), std::f64::consts::PI * 2f64.sqrt(), epsilon = 1e-6);
    assert_abs_diff_eq!(max.period.unwrap(), std::f64::consts::TAU, epsilon = 1e-6);
    for o in &orbits {
        assert!(o.geodesic_residual <= 1e-5);
        assert!(o.certificate.is_some());
    }

    let curve = |o: &kg_core::critical::CriticalOrbit<f64>| {
        flow_sampled(&s.geometry, &s.killing.field, &o.representative, o.period.unwrap(), 0.01, OdeOptions::default())
            .unwrap()
            .points
    };
    let d = hausdorff_distance(&s.geometry.manifold, &curve(min), &curve(max));
    assert!(d > 1e-3, "min and max orbits at distance {d}");
}

#[test]
fn search_is_deterministic() {
    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let opts = SearchOptions {
        budget: 8,
        seed: 7,
        ..SearchOptions::default()
    };
    let a = find_critical_orbits(&s.geometry, &s.killing, &opts).unwrap();
    let b = find_critical_orbits(&s.geometry, &s.killing, &opts).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.representative, y.representative);
        assert_eq!(x.f_value, y.f_value);
        assert_eq!(x.period, y.period);
    }
}

#[test]
fn constant_f_is_reported_once() {
    for e in [make_klein_bottle::<f64>().unwrap(), make_flat_lorentzian_torus(0.0, 1.0).unwrap()] {
        let orbits = find_critical_orbits(&e.geometry, &e.killing, &SearchOptions::default()).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].classification, Classification::DegenerateConstant);
        assert_eq!(orbits[0].f_value, -1.0);
    }
}

#[test]
fn single_precision_evaluation() {
    let s = make_stationary_sphere::<f32>(2f32.sqrt()).unwrap();
    let p = DVector::from_row_slice(&[0.0f32, 0.0, 1.0, 0.0]);
    let f = f_eval(&s.geometry, &s.killing.field, &p).unwrap();
    assert!((f + 2.0).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_matches_closed_form(x in prop::array::uniform4(-1.0f64..1.0), alpha in 0.3f64..2.0) {
        prop_assume!(v(&x).norm() > 0.1);
        let s = make_stationary_sphere(alpha).unwrap();
        let p = v(&x).normalize();
        let f = f_eval(&s.geometry, &s.killing.field, &p).unwrap();
        prop_assert!((f - f_closed_form(&p, alpha)).abs() <= 1e-12);
    }

    #[test]
    fn f_is_constant_along_the_flow(x in prop::array::uniform4(-1.0f64..1.0), t in 0.0f64..4.0) {
        prop_assume!(v(&x).norm() > 0.1);
        let s = make_stationary_sphere(2f64.sqrt()).unwrap();
        let p = v(&x).normalize();
        let c = flow(&s.geometry, &s.killing.field, &p, t, OdeOptions::default()).unwrap();
        let f0 = f_eval(&s.geometry, &s.killing.field, &p).unwrap();
        for q in &c.points {
            prop_assert!((f_eval(&s.geometry, &s.killing.field, q).unwrap() - f0).abs() <= 1e-9);
        }
    }
}
