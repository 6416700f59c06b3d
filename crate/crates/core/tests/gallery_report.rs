use kg_core::critical::SearchOptions;
use kg_core::gallery::{
    by_name, klein_expected_period, klein_orbit_coordinate, make_commuting_family_example, make_mapping_torus,
    Params, ENTRY_NAMES,
};
use kg_core::geodesic::{detect_period, PeriodOptions};
use kg_core::report::{self, AnalysisReport};
use kg_core::GeoError;
use nalgebra::DVector;

fn quick() -> SearchOptions {
    SearchOptions {
        budget: 8,
        ..SearchOptions::default()
    }
}

#[test]
fn every_entry_builds_with_defaults() {
    for name in ENTRY_NAMES {
        let e = by_name::<f64>(name, &Params::default()).unwrap();
        assert_eq!(e.name, name);
        let expected_index = if name == "commuting-t4" { 2 } else { 1 };
        assert_eq!(e.geometry.metric.signature().minus, expected_index, "{name}");
    }
    let listed: Vec<&str> = report::list_entries().iter().map(|(n, _)| *n).collect();
    assert_eq!(listed, ENTRY_NAMES);
}

#[test]
fn construction_errors() {
    let err = by_name::<f64>("sphere", &Params::default()).unwrap_err();
    assert!(matches!(err, GeoError::Argument(_)));
    let zero = Params {
        slope: (0.0, 0.0),
        ..Params::default()
    };
    assert!(matches!(by_name::<f64>("flat-torus", &zero), Err(GeoError::Argument(_))));
    assert!(matches!(
        make_mapping_torus(std::f64::consts::FRAC_PI_2),
        Err(GeoError::PeriodicPointsExist(_))
    ));
    assert!(matches!(make_commuting_family_example::<f64>(3), Err(GeoError::Argument(_))));
}

#[test]
fn exit_codes() {
    assert_eq!(GeoError::Argument(String::new()).exit_code(), 2);
    assert_eq!(GeoError::OffManifold { residual: 1.0 }.exit_code(), 2);
    assert_eq!(GeoError::SearchFailure(String::new()).exit_code(), 3);
    assert_eq!(GeoError::EvaluatorOnly.exit_code(), 4);
}

#[test]
fn klein_orbit_space() {
    assert_eq!(klein_expected_period(0.3f64), 2.0);
    assert_eq!(klein_expected_period(0.0f64), 1.0);
    assert_eq!(klein_expected_period(0.5f64), 1.0);
    assert!((klein_orbit_coordinate(0.8f64) - 0.2).abs() < 1e-15);
    assert!((klein_orbit_coordinate(-0.3f64) - 0.3).abs() < 1e-15);
}

#[test]
fn mapping_torus_equator_never_closes() {
    let e = make_mapping_torus(1.0).unwrap();
    let p = DVector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]);
    let c = detect_period(&e.geometry, &e.killing.field, &p, 50.0, PeriodOptions::default()).unwrap();
    assert!(c.is_none());
}

#[test]
fn commuting_family_with_one_member() {
    let e = make_commuting_family_example::<f64>(1).unwrap();
    assert_eq!(e.geometry.ambient_dim(), 3);
    assert_eq!(e.family.unwrap().len(), 1);
}

#[test]
fn analyze_null_flat_torus() {
    let params = Params {
        slope: (1.0, 1.0),
        ..Params::default()
    };
    let r = report::analyze("flat-torus", &params, &quick()).unwrap();
    assert!(r.degenerate_constant);
    assert_eq!(r.critical_orbits.len(), 1);
    assert_eq!(r.critical_orbits[0].f_value, 0.0);
    assert_eq!(r.parameters.slope, Some([1.0, 1.0]));
}

#[test]
fn analyze_klein_lists_the_fiber_scan() {
    let r = report::analyze("klein-bottle", &Params::default(), &quick()).unwrap();
    assert!(r.degenerate_constant);
    let scan = r.fiber_scan.unwrap();
    assert_eq!(scan.len(), 20);
    for s in &scan {
        let expected = klein_expected_period(s.start[0]);
        assert!((s.period.unwrap() - expected).abs() <= 1e-6);
        assert!((0.0..=0.5).contains(&s.orbit_coordinate.unwrap()));
    }
}

#[test]
fn report_json_roundtrip() {
    let r = report::analyze("stationary-s3", &Params::default(), &quick()).unwrap();
    let text = r.to_json();
    let back = AnalysisReport::from_json(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.critical_orbits.len(), 2);
}

#[test]
fn approximate_flat_torus_closure_periods() {
    let params = Params {
        slope: (1.0, 2f64.sqrt()),
        ..Params::default()
    };
    let r = report::approximate("flat-torus", &params, 3, &quick()).unwrap();
    let periods: Vec<f64> = r
        .approximants
        .unwrap()
        .iter()
        .map(|a| a.critical_orbits[0].period.unwrap())
        .collect();
    for (p, q) in periods.iter().zip([1.0, 2.0, 5.0]) {
        assert!((p - q).abs() <= 1e-6, "{periods:?}");
    }
}

#[test]
fn approximate_requires_generator_coordinates() {
    let err = report::approximate("mapping-torus", &Params::default(), 2, &quick()).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn trace_examples() {
    let p = Params::default();
    let opts = SearchOptions::default();
    let one = report::trace("stationary-s3", &p, &[1.0, 0.0, 0.0, 0.0], 0.0, false, &opts).unwrap();
    assert_eq!(one.lines().count(), 2);
    let closed = report::trace("stationary-s3", &p, &[1.0, 0.0, 0.0, 0.0], std::f64::consts::TAU, false, &opts).unwrap();
    let last: Vec<f64> = closed
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((last[1] - 1.0).abs() < 1e-6 && last[2].abs() < 1e-6);
    let off = report::trace("stationary-s3", &p, &[1.0, 1.0, 0.0, 0.0], 1.0, false, &opts).unwrap_err();
    assert!(matches!(off, GeoError::OffManifold { .. }));
    let wrong = report::trace("klein-bottle", &p, &[0.0], 1.0, false, &opts).unwrap_err();
    assert_eq!(wrong.exit_code(), 2);
}
