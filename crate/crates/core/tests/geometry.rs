use std::sync::Arc;

use approx::assert_abs_diff_eq;
use kg_core::gallery::{klein_generators, make_klein_bottle, sphere_torus_action};
use kg_core::geometry::{
    bilinear, Constraint, DeckMap, Geometry, ManifoldModel, MetricField, Point, Signature, VectorField,
};
use kg_core::GeoError;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(x)
}

fn minkowski_plane() -> Geometry<f64> {
    let chart = ManifoldModel::flat_quotient("plane", 2, Vec::new(), vec![None, None]).unwrap();
    Geometry::new(Arc::new(chart), MetricField::diagonal("dx2-dt2", &[1.0, -1.0]))
}

fn round_s3() -> Geometry<f64> {
    let m = ManifoldModel::embedded("s3", 4, Constraint::sphere(&[0, 1, 2, 3], 1.0)).unwrap();
    Geometry::new(Arc::new(m), MetricField::diagonal("round", &[1.0; 4]))
}

/// Round `S²` in the chart `(θ, φ)` with `dθ² + sin²θ dφ²`.
fn sphere_chart() -> Geometry<f64> {
    let chart = ManifoldModel::flat_quotient("s2-chart", 2, Vec::new(), vec![None, None]).unwrap();
    let metric = MetricField::new("dth2+sin2 dph2", Signature::new(2, 0), |p: &Point<f64>| {
        Ok(DMatrix::from_diagonal(&v(&[1.0, p[0].sin().powi(2)])))
    });
    Geometry::new(Arc::new(chart), metric)
}

#[test]
fn metric_eval_examples() {
    let g = minkowski_plane();
    let p = v(&[0.2, 0.4]);
    assert_eq!(g.metric_eval(&p, &v(&[0.0, 1.0]), &v(&[0.0, 1.0])).unwrap(), -1.0);
    assert_eq!(g.metric_eval(&p, &v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
    let s = round_s3();
    let e = v(&[0.0, 1.0, 0.0, 0.0]);
    assert_eq!(s.metric_eval(&v(&[1.0, 0.0, 0.0, 0.0]), &e, &e).unwrap(), 1.0);
}

#[test]
fn metric_eval_rejects_off_manifold_points() {
    let s = round_s3();
    let e = v(&[0.0, 1.0, 0.0, 0.0]);
    let err = s.metric_eval(&v(&[1.0, 1.0, 0.0, 0.0]), &e, &e).unwrap_err();
    assert!(matches!(err, GeoError::OffManifold { .. }));
}

#[test]
fn christoffel_flat_is_zero() {
    let g = minkowski_plane();
    assert_eq!(g.christoffel(&v(&[0.3, 0.9])).unwrap().max_abs(), 0.0);
}

#[test]
fn christoffel_sphere_chart_matches_closed_form() {
    let g = sphere_chart();
    let eq = g.christoffel(&v(&[std::f64::consts::FRAC_PI_2, 0.4])).unwrap();
    assert_abs_diff_eq!(eq.get(0, 1, 1), 0.0, epsilon = 1e-8);
    assert_abs_diff_eq!(eq.get(1, 0, 1), 0.0, epsilon = 1e-8);
    let th = 1.0f64;
    let c = g.christoffel(&v(&[th, 0.4])).unwrap();
    assert_abs_diff_eq!(c.get(0, 1, 1), -th.sin() * th.cos(), epsilon = 1e-8);
    assert_abs_diff_eq!(c.get(1, 0, 1), th.cos() / th.sin(), epsilon = 1e-8);
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c.get(k, i, j), c.get(k, j, i));
            }
        }
    }
}

#[test]
fn singular_metric_is_reported() {
    let chart = ManifoldModel::flat_quotient("plane", 2, Vec::new(), vec![None, None]).unwrap();
    let g = Geometry::new(Arc::new(chart), MetricField::diagonal("degenerate", &[1.0, 0.0]));
    assert!(matches!(g.christoffel(&v(&[0.0, 0.0])), Err(GeoError::SingularMetric { .. })));
}

#[test]
fn covariant_derivative_examples() {
    let g = minkowski_plane();
    let c = VectorField::constant("c", v(&[0.3, -1.2]));
    let d = g.covariant_derivative(&c, &v(&[1.0, 2.0]), &v(&[0.1, 0.2])).unwrap();
    assert_eq!(d.norm(), 0.0);

    let s = round_s3();
    let action = sphere_torus_action::<f64>();
    let k = action.field(&[1.0, 1.0]);
    let p = v(&[1.0, 0.0, 0.0, 0.0]);
    let d = s.covariant_derivative(&k, &k.at(&p), &p).unwrap();
    assert_abs_diff_eq!(d.norm(), 0.0, epsilon = 1e-8);
}

#[test]
fn covariant_derivative_is_linear_and_leibniz() {
    let s = round_s3();
    let x = VectorField::new("x", |p: &Point<f64>| v(&[-p[1], p[0], p[3] * p[0], -p[2] * p[0]]));
    let p = v(&[0.5, 0.5, 0.5, 0.5]);
    let a = s.manifold.project_tangent(&p, &v(&[1.0, 0.0, -0.3, 0.2]));
    let b = s.manifold.project_tangent(&p, &v(&[0.0, 1.0, 0.4, -1.0]));
    let da = s.covariant_derivative(&x, &a, &p).unwrap();
    let db = s.covariant_derivative(&x, &b, &p).unwrap();
    let dab = s.covariant_derivative(&x, &(&a * 2.0 + &b * -0.5), &p).unwrap();
    assert!((dab - (&da * 2.0 + &db * -0.5)).norm() < 1e-6);

    // ∇_a (φX) = a(φ) X + φ ∇_a X with φ = x0
    let phi_x = VectorField::new("x0 x", {
        let x = x.clone();
        move |p: &Point<f64>| x.at(p) * p[0]
    });
    let lhs = s.covariant_derivative(&phi_x, &a, &p).unwrap();
    let xp = s.tangential(&p, &x.at(&p)).unwrap();
    let rhs = xp * a[0] + &da * p[0];
    assert!((lhs - rhs).norm() < 1e-6);
}

#[test]
fn reduce_point_klein_examples() {
    let k = make_klein_bottle::<f64>().unwrap();
    let m = &k.geometry.manifold;
    let names = m.generator_names();
    let p = v(&[0.3, 0.0]);
    let a = m.reduce_point(&p, &v(&[1.3, 0.0]), 6).unwrap();
    assert_eq!(a.render(&names), vec!["a"]);
    let b = m.reduce_point(&p, &v(&[0.7, 1.0]), 6).unwrap();
    assert_eq!(b.render(&names), vec!["b"]);
    assert!(m.reduce_point(&p, &p, 6).unwrap().is_empty());
    assert!(m.reduce_point(&p, &v(&[0.45, 0.0]), 6).is_none());
}

#[test]
fn deck_maps_are_isometries_of_the_klein_metric() {
    let k = make_klein_bottle::<f64>().unwrap();
    assert_eq!(k.geometry.manifold.generator_maps().len(), klein_generators::<f64>().len());
    let defect = k
        .geometry
        .deck_isometry_defect(&v(&[0.2, 0.7]), &v(&[1.0, 0.3]), &v(&[-0.4, 2.0]))
        .unwrap();
    assert_eq!(defect, 0.0);
}

#[test]
fn sphere_sampling_lands_on_the_sphere() {
    let s = round_s3();
    for p in s.manifold.sample_many(50, 9) {
        assert!((p.norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!(s.signature_at(&v(&[0.0, 0.0, 1.0, 0.0])).unwrap(), Signature::new(3, 0));
}

#[test]
fn projection_returns_to_the_constraint_set() {
    let s = round_s3();
    let p = s.manifold.project_point(&v(&[1.1, 0.2, -0.1, 0.05])).unwrap();
    assert!(s.manifold.constraint_residual(&p) < 1e-12);
}

#[test]
fn deck_map_inverse_roundtrip() {
    let b = DeckMap::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]), v(&[1.0, 1.0]));
    let inv = b.inverse().unwrap();
    let p = v(&[0.37, -2.1]);
    assert!((inv.apply(&b.apply(&p)) - &p).norm() < 1e-15);
}

proptest! {
    #[test]
    fn metric_is_symmetric(x in -1.0f64..1.0, y in -1.0f64..1.0, a in prop::array::uniform4(-2.0f64..2.0)) {
        let g = sphere_chart();
        let p = v(&[1.0 + 0.5 * x, y]);
        let (vv, ww) = (v(&a[..2]), v(&a[2..]));
        prop_assert_eq!(g.metric_eval(&p, &vv, &ww).unwrap(), g.metric_eval(&p, &ww, &vv).unwrap());
    }

    #[test]
    fn christoffel_is_torsion_free(th in 0.3f64..2.8, ph in -3.0f64..3.0) {
        let c = sphere_chart().christoffel(&v(&[th, ph])).unwrap();
        for k in 0..2 {
            prop_assert_eq!(c.get(k, 0, 1), c.get(k, 1, 0));
        }
    }

    #[test]
    fn bilinear_matches_matrix_product(a in prop::array::uniform9(-3.0f64..3.0), x in prop::array::uniform3(-1.0f64..1.0)) {
        let m = DMatrix::from_row_slice(3, 3, &a);
        let s = &m + m.transpose();
        let xv = v(&x);
        let direct = (xv.transpose() * &s * &xv)[(0, 0)];
        prop_assert!((bilinear(&s, &xv, &xv) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}
