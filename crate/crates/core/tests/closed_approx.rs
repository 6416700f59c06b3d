use kg_core::closed_approx::{
    approximate_closed, certify_uniform_convergence, continued_fraction_convergents, ratio_f64,
};
use kg_core::gallery::{make_klein_bottle, make_stationary_sphere};
use kg_core::killing::TorusDirection;
use kg_core::GeoError;
use num_rational::Ratio;
use proptest::prelude::*;

fn exact(d: &TorusDirection<f64>) -> Vec<(i64, i64)> {
    d.exact
        .as_ref()
        .expect("rational direction")
        .iter()
        .map(|r| (*r.numer(), *r.denom()))
        .collect()
}

#[test]
fn sphere_approximants_substitute_convergents() {
    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let a = approximate_closed(&s.geometry, &s.killing, 3).unwrap();
    assert!(!a.already_closed);
    let dirs: Vec<_> = a
        .fields
        .iter()
        .map(|f| exact(&f.generator.as_ref().unwrap().direction))
        .collect();
    assert_eq!(
        dirs,
        vec![vec![(1, 1), (1, 1)], vec![(1, 1), (3, 2)], vec![(1, 1), (7, 5)]]
    );
    assert!(a.fields.iter().all(|f| f.is_certified()));
}

#[test]
fn rational_direction_is_already_closed() {
    let s = make_stationary_sphere(1.5).unwrap();
    let a = approximate_closed(&s.geometry, &s.killing, 4).unwrap();
    assert!(a.already_closed);
    assert_eq!(a.convergents, vec![Ratio::new(3, 2)]);
    assert_eq!(a.fields.len(), 1);
}

#[test]
fn zero_convergents_give_an_empty_certificate() {
    let s = make_stationary_sphere(2f64.sqrt()).unwrap();
    let a = approximate_closed(&s.geometry, &s.killing, 0).unwrap();
    assert!(a.fields.is_empty());
    let c = certify_uniform_convergence(&s.geometry, &s.killing, &a, 50, 1).unwrap();
    assert!(c.convergents.is_empty() && c.gaps.is_empty() && c.sup_field_gaps.is_empty());
}

#[test]
fn evaluator_only_fields_are_rejected() {
    let k = make_klein_bottle::<f64>().unwrap();
    assert!(matches!(approximate_closed(&k.geometry, &k.killing, 3), Err(GeoError::EvaluatorOnly)));
}

#[test]
fn field_gaps_follow_the_linear_bound() {
    let alpha = 2f64.sqrt();
    let s = make_stationary_sphere(alpha).unwrap();
    let a = approximate_closed(&s.geometry, &s.killing, 5).unwrap();
    let c = certify_uniform_convergence(&s.geometry, &s.killing, &a, 500, 42).unwrap();
    assert!(c.gaps_decreasing && c.best_approximation);
    for ((r, sup), bound) in a.convergents.iter().zip(&c.sup_field_gaps).zip(&c.linearity_bounds) {
        let gap = (alpha - ratio_f64(r)).abs();
        // sup over the sphere of |(0, i gap w)| is gap; sampling can only fall short of it
        assert!(*sup <= gap * (1.0 + 1e-12), "{sup} > {gap}");
        assert!(*sup >= 0.9 * gap);
        assert!((sup - bound).abs() <= 0.1 * bound);
    }
    assert!(c.min_f_signs.iter().all(|s| *s));
    assert!(c.sup_field_gaps.windows(2).all(|w| w[1] < w[0]));
}

proptest! {
    #[test]
    fn convergents_are_best_approximations(alpha in 0.01f64..100.0) {
        let c = continued_fraction_convergents(alpha, 12);
        prop_assert!(!c.is_empty());
        for w in c.windows(2) {
            prop_assert!(w[1].denom() > w[0].denom() || *w[0].denom() == 1);
            let (g0, g1) = ((alpha - ratio_f64(&w[0])).abs(), (alpha - ratio_f64(&w[1])).abs());
            prop_assert!(g1 <= g0);
        }
        // p/q is rounded when evaluated in floating point
        let rounding = 4.0 * f64::EPSILON * alpha;
        for r in &c {
            let q = *r.denom() as f64;
            prop_assert!((alpha - ratio_f64(r)).abs() <= 1.0 / (q * q) + rounding);
        }
    }

    #[test]
    fn convergents_alternate_around_alpha(alpha in 0.01f64..100.0) {
        let c = continued_fraction_convergents(alpha, 10);
        for w in c.windows(2) {
            let (s0, s1) = (alpha - ratio_f64(&w[0]), alpha - ratio_f64(&w[1]));
            prop_assert!(s0 * s1 <= 0.0 || s1.abs() <= 4.0 * f64::EPSILON * alpha);
        }
    }
}
